#pragma once

// Deterministic limiting dynamics.
//
// Sign dynamics in the biorthogonal eigenbasis of Kbar:
//   dr_i/dt = -2 eta(t) g(R) lambda_i r_i + eta(t)^2 m_i,   R = sum_i r_i
// with g(R) = phi(R)/sqrt(2R), forcing m_i = w_i^T Ksigma K u_i / (pi d),
// and r_i(0) = (1/2) <nu, K u_i> <w_i, nu> for nu = theta0 - thetaStar.
//
// SGD dynamics in the eigenbasis of K:
//   dv_i/dt = -2 eta(t) lambda_i v_i + (eta(t)^2/d) lambda_i (R + v^2/2),
//   R = sum_i lambda_i v_i.
//
// Isotropic reductions and the greedy-optimal flows are scalar versions of
// the same equations. Everything integrates with fixed-order RK4; the step
// within each record interval targets h = min(cap, 1/(2 d rate)) and halves
// when the risk would jump below the 1e-12 floor or go nonfinite.

#include <cmath>
#include <iostream>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "signdyn/covariance.hpp"
#include "signdyn/noise.hpp"
#include "signdyn/schedule.hpp"

namespace signdyn {

struct OdeOptions {
    double stepCap = 1e-3;    // user cap on the RK4 step
    double recordDt = 1.0;    // output grid spacing
    double forcingScale = 1.0;  // 0 disables the eta^2 forcing (integrator studies)
    bool recordModes = false;   // keep per-mode snapshots on the record grid
};

struct OdeSolution {
    std::vector<double> times;
    std::vector<double> risk;
    std::vector<double> eta;              // realized schedule on the grid
    std::vector<Eigen::VectorXd> modes;   // only when recordModes
    std::string label;
};

constexpr double kOdeRiskFloor = 1e-12;

namespace detail {

// phi(R)/sqrt(2R). Gaussian noise uses the exact reduction (2/pi)/sqrt(2R+v^2)
// which has no singularity at R = 0; other models evaluate phi at the floored
// risk.
struct SignDriftCoef {
    const NoiseModel* noise;
    double quadTol = 1e-10;

    double operator()(double R) const {
        const double Rf = std::max(R, kOdeRiskFloor);
        if (noise->kind == NoiseModel::Kind::Gaussian)
            return 2.0 / std::numbers::pi /
                   std::sqrt(2.0 * Rf + noise->a * noise->a);
        if (noise->kind == NoiseModel::Kind::Zero)
            return 2.0 / std::numbers::pi / std::sqrt(2.0 * Rf);
        return phi(*noise, Rf, PhiMode::Auto, quadTol) / std::sqrt(2.0 * Rf);
    }
};

template <class State>
bool stateFinite(const State& s) {
    if constexpr (std::is_same_v<State, double>) return std::isfinite(s);
    else return s.allFinite();
}

// One record interval [t0, t0+dt] with fixed substeps, halving on floor
// crossing. riskOf maps state -> risk.
template <class State, class Rhs, class RiskOf>
void integrateInterval(double t0, double dt, State& y, const Rhs& rhs, const RiskOf& riskOf,
                       double hTarget) {
    int n = std::max(1, int(std::ceil(dt / hTarget - 1e-12)));
    for (int attempt = 0; attempt < 40; ++attempt) {
        State cur = y;
        const double h = dt / n;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            const double t = t0 + h * i;
            const double riskBefore = riskOf(cur);
            State k1 = rhs(t, cur);
            State k2 = rhs(t + 0.5 * h, State(cur + 0.5 * h * k1));
            State k3 = rhs(t + 0.5 * h, State(cur + 0.5 * h * k2));
            State k4 = rhs(t + h, State(cur + h * k3));
            State next = cur + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double riskAfter = riskOf(next);
            if (!stateFinite(next) || riskAfter < 0 ||
                (riskAfter < kOdeRiskFloor && riskBefore > 10.0 * kOdeRiskFloor)) {
                ok = false;
                break;
            }
            cur = next;
        }
        if (ok) { y = cur; return; }
        n *= 2;
    }
    throw std::runtime_error("ode: step halving failed to stabilize the integrator");
}

template <class State, class Rhs, class RiskOf, class RateBound, class EtaOf>
OdeSolution driveIntegration(State y, double T, const OdeOptions& opts, const Rhs& rhs,
                             const RiskOf& riskOf, const RateBound& rateBound,
                             const EtaOf& etaOf, int dForStep, const char* label) {
    if (!(T > 0)) throw ConfigError("ode: horizon T must be positive");
    if (!(opts.stepCap > 0) || !(opts.recordDt > 0))
        throw ConfigError("ode: step cap and record spacing must be positive");
    OdeSolution sol;
    sol.label = label;
    const int nRec = int(std::floor(T / opts.recordDt + 1e-9));
    double t = 0.0;
    auto record = [&](double tm) {
        sol.times.push_back(tm);
        sol.risk.push_back(riskOf(y));
        sol.eta.push_back(etaOf(tm, riskOf(y)));
        if constexpr (!std::is_same_v<State, double>) {
            if (opts.recordModes) sol.modes.push_back(y);
        }
    };
    record(0.0);
    for (int j = 1; j <= nRec; ++j) {
        const double rate = std::max(1.0, rateBound(t, riskOf(y)));
        const double hTarget = std::min(opts.stepCap, 1.0 / (2.0 * dForStep * rate));
        integrateInterval(t, opts.recordDt, y, rhs, riskOf, hTarget);
        t = opts.recordDt * j;
        record(t);
    }
    return sol;
}

}  // namespace detail

/// r_i(0) = (1/2) <nu, K u_i> <w_i, nu>; always nonnegative and summing to
/// R(theta0) exactly.
inline Eigen::VectorXd initSignOde(const CovarianceModel& model, const SpectralData& spectral,
                                   const Eigen::VectorXd& theta0,
                                   const Eigen::VectorXd& thetaStar) {
    if (theta0.size() != model.dim || thetaStar.size() != model.dim)
        throw ConfigError("initSignOde: dimension mismatch");
    const Eigen::VectorXd nu = theta0 - thetaStar;
    const Eigen::VectorXd Knu = model.K * nu;
    return 0.5 * (spectral.U.transpose() * Knu).cwiseProduct(spectral.W.transpose() * nu);
}

/// Forcing m_i = w_i^T Ksigma K u_i / (pi d), evaluated through the
/// manifestly nonnegative form lambda_i w_i^T Ksigma w_i / (pi d). Negative
/// values can only arise from roundoff; they are clipped at zero with a
/// warning.
inline Eigen::VectorXd computeSignForcing(const CovarianceModel& model,
                                          const SpectralData& spectral) {
    const int d = model.dim;
    Eigen::MatrixXd G = model.Ksigma * spectral.W;
    Eigen::VectorXd m(d);
    for (int i = 0; i < d; ++i)
        m(i) = spectral.eigenvalues(i) * spectral.W.col(i).dot(G.col(i)) /
               (std::numbers::pi * d);
    for (int i = 0; i < d; ++i) {
        if (m(i) < 0) {
            if (m(i) < -1e-12 * std::abs(m.cwiseAbs().maxCoeff()))
                std::cerr << "computeSignForcing: clipping negative forcing m[" << i
                          << "] = " << m(i) << "\n";
            m(i) = 0.0;
        }
    }
    return m;
}

inline OdeSolution integrateSignOde(const CovarianceModel& model, const SpectralData& spectral,
                                    const NoiseModel& noise, const Schedule& schedule, double T,
                                    const Eigen::VectorXd& r0, OdeOptions opts = {}) {
    if (r0.size() != model.dim) throw ConfigError("integrateSignOde: r0 dimension mismatch");
    const Eigen::VectorXd m = opts.forcingScale * computeSignForcing(model, spectral);
    const Eigen::VectorXd& lam = spectral.eigenvalues;
    const double lamMax = lam(lam.size() - 1);
    detail::SignDriftCoef g{&noise};

    auto riskOf = [](const Eigen::VectorXd& r) { return r.sum(); };
    auto rhs = [&](double t, const Eigen::VectorXd& r) -> Eigen::VectorXd {
        const double eta = schedule.eval(t);
        const double coef = -2.0 * eta * g(r.sum());
        return coef * lam.cwiseProduct(r) + (eta * eta) * m;
    };
    auto rate = [&](double t, double R) { return 2.0 * schedule.eval(t) * lamMax * g(R); };
    auto etaOf = [&](double t, double) { return schedule.eval(t); };
    return detail::driveIntegration(Eigen::VectorXd(r0), T, opts, rhs, riskOf, rate, etaOf,
                                    model.dim, "ode:sign");
}

/// v_i(0) = (1/2) (q_i^T nu)^2 in the eigenbasis of K.
inline Eigen::VectorXd initSgdOde(const SymmetricSpectrum& spec, const Eigen::VectorXd& theta0,
                                  const Eigen::VectorXd& thetaStar) {
    if (theta0.size() != spec.Q.rows() || thetaStar.size() != spec.Q.rows())
        throw ConfigError("initSgdOde: dimension mismatch");
    Eigen::VectorXd proj = spec.Q.transpose() * (theta0 - thetaStar);
    return 0.5 * proj.cwiseProduct(proj);
}

inline OdeSolution integrateSgdOde(const SymmetricSpectrum& spec, double noiseSecondMoment,
                                   const Schedule& schedule, double T, const Eigen::VectorXd& v0,
                                   OdeOptions opts = {}) {
    const int d = int(spec.eigenvalues.size());
    if (v0.size() != d) throw ConfigError("integrateSgdOde: v0 dimension mismatch");
    if (!std::isfinite(noiseSecondMoment))
        throw std::domain_error("integrateSgdOde: needs a finite noise second moment");
    const Eigen::VectorXd& lam = spec.eigenvalues;
    const double lamMax = lam(d - 1);
    const double halfV2 = 0.5 * noiseSecondMoment;

    auto riskOf = [&](const Eigen::VectorXd& v) { return lam.dot(v); };
    auto rhs = [&](double t, const Eigen::VectorXd& v) -> Eigen::VectorXd {
        const double eta = schedule.eval(t);
        const double R = lam.dot(v);
        return -2.0 * eta * lam.cwiseProduct(v) +
               (eta * eta / d) * opts.forcingScale * (R + halfV2) * lam;
    };
    auto rate = [&](double t, double) {
        const double eta = schedule.eval(t);
        return 2.0 * eta * lamMax + eta * eta * lamMax / d;
    };
    auto etaOf = [&](double t, double) { return schedule.eval(t); };
    return detail::driveIntegration(Eigen::VectorXd(v0), T, opts, rhs, riskOf, rate, etaOf, d,
                                    "ode:sgd");
}

/// Isotropic sign risk: dR/dt = -2 eta(t) g(R) R + eta(t)^2 / 2.
inline OdeSolution integrateIsoSign(double R0, const NoiseModel& noise, const Schedule& schedule,
                                    double T, OdeOptions opts = {}) {
    if (!(R0 >= 0)) throw ConfigError("integrateIsoSign: R0 must be nonnegative");
    detail::SignDriftCoef g{&noise};
    auto riskOf = [](double R) { return R; };
    auto rhs = [&](double t, double R) {
        const double eta = schedule.eval(t);
        return -2.0 * eta * g(R) * R + 0.5 * eta * eta * opts.forcingScale;
    };
    auto rate = [&](double t, double R) { return 2.0 * schedule.eval(t) * g(R); };
    auto etaOf = [&](double t, double) { return schedule.eval(t); };
    return detail::driveIntegration(R0, T, opts, rhs, riskOf, rate, etaOf, 1, "ode:iso-sign");
}

/// Isotropic SGD risk: dR/dt = -2 eta R + (eta^2/2)(2R + v^2). For constant
/// eta < 2 this is linear with stationary level eta v^2 / (2 (2 - eta)).
inline OdeSolution integrateIsoSgd(double R0, double noiseSecondMoment, const Schedule& schedule,
                                   double T, OdeOptions opts = {}) {
    if (!(R0 >= 0)) throw ConfigError("integrateIsoSgd: R0 must be nonnegative");
    if (!std::isfinite(noiseSecondMoment))
        throw std::domain_error("integrateIsoSgd: needs a finite noise second moment");
    auto riskOf = [](double R) { return R; };
    auto rhs = [&](double t, double R) {
        const double eta = schedule.eval(t);
        return -2.0 * eta * R +
               0.5 * eta * eta * opts.forcingScale * (2.0 * R + noiseSecondMoment);
    };
    auto rate = [&](double t, double) {
        const double eta = schedule.eval(t);
        return 2.0 * eta + eta * eta;
    };
    auto etaOf = [&](double t, double) { return schedule.eval(t); };
    return detail::driveIntegration(R0, T, opts, rhs, riskOf, rate, etaOf, 1, "ode:iso-sgd");
}

/// Greedy-optimal sign flow dR/dt = -phi(R)^2 R with realized rate
/// eta*(t) = phi(R) sqrt(2R).
inline OdeSolution greedySign(double R0, const NoiseModel& noise, double T,
                              OdeOptions opts = {}) {
    if (!(R0 > 0)) throw ConfigError("greedySign: R0 must be positive");
    auto riskOf = [](double R) { return R; };
    auto phiAt = [&](double R) { return phi(noise, std::max(R, kOdeRiskFloor)); };
    auto rhs = [&](double, double R) {
        const double p = phiAt(R);
        return -p * p * R;
    };
    auto rate = [&](double, double R) {
        const double p = phiAt(R);
        return p * p;
    };
    auto etaOf = [&](double, double R) {
        return phiAt(R) * std::sqrt(2.0 * std::max(R, kOdeRiskFloor));
    };
    return detail::driveIntegration(R0, T, opts, rhs, riskOf, rate, etaOf, 1, "ode:greedy-sign");
}

/// Greedy-optimal SGD flow dR/dt = -2R^2/(2R + v^2) with eta* = 2R/(2R+v^2).
/// Its implicit solution 2 ln R - v^2/R = 2 ln R0 - v^2/R0 - 2t serves as an
/// exactness oracle in the tests.
inline OdeSolution greedySgd(double R0, double noiseSecondMoment, double T,
                             OdeOptions opts = {}) {
    if (!(R0 > 0)) throw ConfigError("greedySgd: R0 must be positive");
    if (!std::isfinite(noiseSecondMoment))
        throw std::domain_error("greedySgd: needs a finite noise second moment");
    auto riskOf = [](double R) { return R; };
    auto rhs = [&](double, double R) {
        return -2.0 * R * R / (2.0 * R + noiseSecondMoment);
    };
    auto rate = [&](double, double R) { return 2.0 * R / (2.0 * R + noiseSecondMoment); };
    auto etaOf = [&](double, double R) { return 2.0 * R / (2.0 * R + noiseSecondMoment); };
    return detail::driveIntegration(R0, T, opts, rhs, riskOf, rate, etaOf, 1, "ode:greedy-sgd");
}

}  // namespace signdyn
