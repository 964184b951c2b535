#pragma once

// Closed-form predictions and diagnostics layered on top of the ode/simulate
// state: stationary risks for both dynamics, the exponential convergence
// envelope for sign descent, preconditioning condition-number comparisons and
// a decay-rate fitter for measured curves.

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signdyn/covariance.hpp"
#include "signdyn/ode.hpp"

namespace signdyn {

/// Limiting risk of the sign dynamics under Gaussian noise with variance v2,
///   R_inf = (pi eta / 32 d) Tr(D) [ pi eta Tr(D) / 2d
///                                   + sqrt(pi^2 eta^2 Tr(D)^2 / 4d^2 + 16 v2) ].
inline double signLimitRisk(const CovarianceModel& model, double eta, double v2) {
    if (!(eta > 0)) throw ConfigError("signLimitRisk: eta must be positive");
    if (!std::isfinite(v2) || v2 < 0)
        throw std::domain_error("signLimitRisk: needs a finite noise second moment");
    const double d = model.dim;
    const double trd = model.trD();
    const double a = std::numbers::pi * eta * trd / (2.0 * d);
    return (std::numbers::pi * eta / (32.0 * d)) * trd * (a + std::sqrt(a * a + 16.0 * v2));
}

/// Limiting risk of the SGD dynamics, eta v2 Tr(K) / (2 (2d - Tr(K) eta)).
/// Throws once eta reaches the stability edge 2d / Tr(K).
inline double sgdLimitRisk(const CovarianceModel& model, double eta, double v2) {
    if (!(eta > 0)) throw ConfigError("sgdLimitRisk: eta must be positive");
    if (!std::isfinite(v2) || v2 < 0)
        throw std::domain_error("sgdLimitRisk: needs a finite noise second moment");
    const double d = model.dim;
    const double trk = model.trK();
    if (eta >= 2.0 * d / trk) {
        std::ostringstream os;
        os << "sgdLimitRisk: SGD unstable at this rate (eta = " << eta
           << " >= 2 d / Tr(K) = " << 2.0 * d / trk << ")";
        throw std::domain_error(os.str());
    }
    return eta * v2 * trk / (2.0 * (2.0 * d - trk * eta));
}

struct StationaryReport {
    VectorXd modes;              // per-mode limits s_i of the sign dynamics
    double total = 0.0;          // sum of modes
    double yInfty = 0.0;
    double fixedPointRisk = 0.0; // same quantity via the scalar fixed point
};

/// Per-mode stationary values s_i = eta^2 m_i Y_inf / lambda_i of the sign
/// ODE, cross-checked against the scalar self-consistency route
/// R = A sqrt(2R + v2), A = eta pi Sum_i m_i/lambda_i / 4. The two paths share
/// no intermediate quantities, so agreement certifies both the forcing terms
/// and the trace identities they rest on.
inline StationaryReport signStationaryPoints(const CovarianceModel& model,
                                             const SpectralData& spec, double eta,
                                             double v2) {
    if (!(eta > 0)) throw ConfigError("signStationaryPoints: eta must be positive");
    if (!std::isfinite(v2) || v2 < 0)
        throw std::domain_error("signStationaryPoints: needs a finite noise second moment");
    const double d = model.dim;
    const VectorXd m = computeSignForcing(model, spec);
    const double trds = model.trDKsigma();
    const double b = eta * trds / d;
    const double yInfty =
        (std::numbers::pi / (16.0 * eta)) * (b + std::sqrt(b * b + 16.0 * v2));

    StationaryReport rep;
    rep.yInfty = yInfty;
    rep.modes = VectorXd(m.size());
    double sumOverLambda = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        rep.modes(i) = eta * eta * m(i) * yInfty / spec.eigenvalues(i);
        sumOverLambda += m(i) / spec.eigenvalues(i);
    }
    rep.total = rep.modes.sum();

    const double A = eta * std::numbers::pi * sumOverLambda / 4.0;
    rep.fixedPointRisk = A * A + std::sqrt(A * A * (A * A + v2));

    const double scale = std::max({std::abs(rep.total), std::abs(rep.fixedPointRisk), 1e-300});
    if (std::abs(rep.total - rep.fixedPointRisk) > 1e-12 * scale)
        throw std::runtime_error("signStationaryPoints: formulations disagree beyond 1e-12");
    return rep;
}

struct Envelope {
    double rInfty = 0.0;
    double rate = 0.0;       // eta lambda_min(Kbar) / (pi v)
    double amplitude = 0.0;  // 2 (R0 + R_inf)
    double lambdaMin = 0.0;
    bool conditionsMet = false;
    std::string report;

    double bound(double t) const { return amplitude * std::exp(-rate * t); }
};

/// Exponential-envelope certificate for the sign dynamics under Gaussian
/// noise: when eta Tr(Kbar)/(2d) <= min{c, 4v/pi} and R(0) <= c v,
///   |R_t - R_inf| <= 2 (R0 + R_inf) exp(-t eta lambda_min(Kbar) / (pi v)).
inline Envelope convergenceEnvelope(const CovarianceModel& model, double eta, double v2,
                                    double r0, double c = 0.1) {
    if (!(eta > 0)) throw ConfigError("convergenceEnvelope: eta must be positive");
    if (!(c > 0)) throw ConfigError("convergenceEnvelope: c must be positive");
    if (!std::isfinite(v2) || v2 <= 0)
        throw std::domain_error(
            "convergenceEnvelope: requires strictly positive finite noise variance");
    if (!(r0 >= 0) || !std::isfinite(r0))
        throw ConfigError("convergenceEnvelope: R0 must be finite and nonnegative");

    const double v = std::sqrt(v2);
    const double d = model.dim;
    Envelope env;
    env.rInfty = signLimitRisk(model, eta, v2);
    env.lambdaMin = spectralDecompose(model).eigenvalues(0);
    env.rate = eta * env.lambdaMin / (std::numbers::pi * v);
    env.amplitude = 2.0 * (r0 + env.rInfty);

    const double lhs = eta * model.trD() / (2.0 * d);
    const double cap = std::min(c, 4.0 * v / std::numbers::pi);
    std::ostringstream os;
    env.conditionsMet = true;
    if (lhs > cap) {
        env.conditionsMet = false;
        os << "rate condition violated: eta Tr(Kbar)/(2d) = " << lhs << " > " << cap << "; ";
    }
    if (r0 > c * v) {
        env.conditionsMet = false;
        os << "initial condition violated: R0 = " << r0 << " > c v = " << c * v << "; ";
    }
    env.report = env.conditionsMet ? "conditions met" : os.str();
    return env;
}

struct PrecondReport {
    double kappaK = 0.0;        // sigma_max / sigma_min
    double kappaKbar = 0.0;
    double kappaBarK = 0.0;     // Tr / (d lambda_min)
    double kappaBarKbar = 0.0;
};

/// Condition numbers of K against the sign-preconditioned Kbar = D^{-1} K,
/// in both the classical and the averaged sense. Kbar can win on the average
/// measure while losing on the classical one, so both are reported.
inline PrecondReport precondCompare(const CovarianceModel& model) {
    PrecondReport r;
    r.kappaK = conditionNumber(model.K);
    r.kappaKbar = conditionNumber(model.Kbar);
    r.kappaBarK = avgConditionNumber(model.K);
    r.kappaBarKbar = avgConditionNumber(model.Kbar);
    return r;
}

struct DecayFit {
    double rate = 0.0;       // decay exponent rho in R_t - R_inf ~ C exp(-rho t)
    double intercept = 0.0;  // log C
    int points = 0;
};

/// Least-squares fit of log(R_t - rInfty) over t in [tMin, tMax]. Points with
/// R_t <= rInfty are skipped; fewer than five usable points is an error.
inline DecayFit fitDecayRate(const std::vector<double>& times,
                             const std::vector<double>& risk, double rInfty, double tMin,
                             double tMax) {
    if (times.size() != risk.size()) throw ConfigError("fitDecayRate: length mismatch");
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < tMin || t > tMax) continue;
        const double gap = risk[i] - rInfty;
        if (!(gap > 0) || !std::isfinite(gap)) continue;
        ts.push_back(t);
        ys.push_back(std::log(gap));
    }
    if (ts.size() < 5)
        throw ConfigError("fitDecayRate: needs at least 5 points above the limit risk");
    const double n = double(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double denom = n * stt - st * st;
    if (denom <= 0) throw ConfigError("fitDecayRate: degenerate time window");
    const double slope = (n * sty - st * sy) / denom;
    DecayFit fit;
    fit.rate = -slope;
    fit.intercept = (sy - slope * st) / n;
    fit.points = int(ts.size());
    return fit;
}

}  // namespace signdyn
