#pragma once

// One-pass streaming simulators and their homogenized SDE counterparts.
//
// Discrete updates consume exactly one fresh pair (x, eps) per step with
// x = sqrtK z, z ~ N(0, I), y = <x, thetaStar> + eps, and step size
// eta'(k) = eta(k/d)/d:
//   signSGD      theta <- theta - eta' sign((<theta,x> - y) x)
//   SGD          theta <- theta - eta' (<theta,x> - y) x
//   SGD (efflr)  eta' additionally scaled by (2/pi)/sqrt(2 P(theta))
//   Adam-like    theta <- theta - (eta'/sqrt(2 P(theta))) D^{-1} (<theta,x> - y) x
// with P(theta) = R(theta) + E[eps^2]/2 the analytic population risk.
//
// SDEs use Euler-Maruyama with dt = 1/d on the same macroscopic clock:
//   sign-HSGD    dTheta = -eta_t (phi(R)/sqrt(2R)) Kbar nu dt
//                         + eta_t sqrt(2 Ksigma/(pi d)) dB
//   vanilla HSGD dTheta = -eta_t K nu dt + eta_t sqrt(2 K P(Theta)/d) dB
//   H-Adam       dTheta = -(eta_t/sqrt(2P)) Kbar nu dt
//                         + (eta_t/sqrt(d)) D^{-1/2} sqrt(sym Kbar) dB
// (the 1/sqrt(d) keeps the injected noise O(1) per unit time, consistent
// with the other two SDEs).
//
// Gaussian draws are presampled in blocks so the x = sqrtK z products run as
// matrix-matrix multiplies; the draw order is identical to a step-by-step
// loop, so results are byte-reproducible for a given seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signdyn/covariance.hpp"
#include "signdyn/noise.hpp"
#include "signdyn/rng.hpp"
#include "signdyn/schedule.hpp"

namespace signdyn {

struct ThetaSpec {
    enum class Kind { Zero, UnitRandom, Explicit, RiskScaled };
    Kind kind = Kind::Zero;
    VectorXd value;
    double targetRisk = 0.0;  // RiskScaled: desired R(theta0), offset from thetaStar

    static ThetaSpec zero() { return {}; }
    static ThetaSpec unitRandom() { return {Kind::UnitRandom, {}}; }
    static ThetaSpec explicitVector(VectorXd v) { return {Kind::Explicit, std::move(v)}; }
    static ThetaSpec riskScaled(double risk) {
        if (!(risk > 0)) throw ConfigError("theta spec: risk-scaled target must be positive");
        ThetaSpec s;
        s.kind = Kind::RiskScaled;
        s.targetRisk = risk;
        return s;
    }
};

struct RunConfig {
    int d = 0;
    long N = 0;                 // discrete steps; macroscopic horizon T = N/d
    Schedule schedule = Schedule::constant(0.1);
    std::uint64_t seed = 0;
    int recordStride = 0;       // 0 -> d (one record per unit time)
    ThetaSpec thetaStar = ThetaSpec::unitRandom();
    ThetaSpec theta0 = ThetaSpec::zero();
    bool effectiveLr = false;   // runSgd only
};

struct RiskCurve {
    std::string algorithm;
    int runId = 0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> risk;
    VectorXd finalTheta;
    bool aborted = false;
    long abortStep = -1;
    double lastFiniteRisk = std::numeric_limits<double>::quiet_NaN();
    std::size_t rngDraws = 0;   // audited: N*(d+1) for completed discrete runs
    long floorHits = 0;         // SDE risk-floor activations
};

inline double riskOf(const CovarianceModel& model, const VectorXd& theta,
                     const VectorXd& thetaStar) {
    const VectorXd nu = theta - thetaStar;
    return 0.5 * nu.dot(model.K * nu);
}

inline VectorXd resolveTheta(const ThetaSpec& spec, int d, Rng& rng) {
    switch (spec.kind) {
        case ThetaSpec::Kind::Zero: return VectorXd::Zero(d);
        case ThetaSpec::Kind::UnitRandom: {
            VectorXd v(d);
            for (int i = 0; i < d; ++i) v(i) = rng.normal();
            const double n = v.norm();
            return n > 0 ? VectorXd(v / n) : VectorXd::Unit(d, 0);
        }
        case ThetaSpec::Kind::Explicit:
            if (spec.value.size() != d)
                throw ConfigError("theta spec: explicit vector has wrong dimension");
            return spec.value;
        case ThetaSpec::Kind::RiskScaled:
            throw ConfigError("theta spec: risk-scaled requires covariance context");
    }
    return VectorXd::Zero(d);
}

namespace detail {

constexpr std::uint64_t kInstanceTag = 0x717A5;
constexpr std::uint64_t kDataTag = 0xDA7A;
constexpr int kBlock = 256;

struct Instance {
    VectorXd thetaStar, theta0, nu0;
};

inline Instance resolveInstance(const CovarianceModel& model, const RunConfig& cfg) {
    // Instance draws use a stream independent of the data stream so that all
    // algorithms run against identical (x, eps) sequences for a given seed.
    Rng rng(deriveSeed(cfg.seed, {kInstanceTag}));
    Instance inst;
    inst.thetaStar = resolveTheta(cfg.thetaStar, model.dim, rng);
    if (cfg.theta0.kind == ThetaSpec::Kind::RiskScaled) {
        // Random direction from thetaStar, scaled so R(theta0) hits the target.
        VectorXd u(model.dim);
        for (int i = 0; i < model.dim; ++i) u(i) = rng.normal();
        u.normalize();
        const double quad = u.dot(model.K * u);
        inst.theta0 = inst.thetaStar + std::sqrt(2.0 * cfg.theta0.targetRisk / quad) * u;
    } else {
        inst.theta0 = resolveTheta(cfg.theta0, model.dim, rng);
    }
    inst.nu0 = inst.theta0 - inst.thetaStar;
    return inst;
}

inline void validateRun(const CovarianceModel& model, const RunConfig& cfg) {
    if (cfg.d != model.dim) throw ConfigError("run: config dimension != model dimension");
    if (cfg.N <= 0) throw ConfigError("run: N must be positive");
    if (cfg.recordStride < 0) throw ConfigError("run: recordStride must be nonnegative");
    if (cfg.schedule.kind == Schedule::Kind::GreedyIsotropic)
        throw ConfigError("run: greedyIsotropic schedule is only valid for the ode module");
}

// Shared state-update driver. Per block: presample Z (and eps for discrete
// flavors), map through the covariance factor, then advance step by step.
struct BlockSampler {
    const CovarianceModel* model;
    Rng* rng;
    bool withNoise;             // draw one eps per column
    const NoiseModel* noise;
    MatrixXd Z, X;
    std::vector<double> eps;
    std::size_t draws = 0;

    BlockSampler(const CovarianceModel& m, Rng& r, bool wn, const NoiseModel& nm)
        : model(&m), rng(&r), withNoise(wn), noise(&nm) {
        Z.resize(m.dim, kBlock);
        X.resize(m.dim, kBlock);
        eps.assign(kBlock, 0.0);
    }

    // Fills columns [0, n) preserving the per-step draw order (d normals,
    // then the noise draw).
    void fill(int n) {
        const int d = model->dim;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < d; ++i) Z(i, j) = rng->normal();
            draws += d;
            if (withNoise) {
                eps[j] = sampleNoise(*noise, *rng);
                draws += 1;
            }
        }
        if (model->isotropic) {
            X.leftCols(n) = std::sqrt(model->isotropicScale) * Z.leftCols(n);
        } else {
            X.leftCols(n).noalias() = model->sqrtK * Z.leftCols(n);
        }
    }
};

enum class DiscreteFlavor { Sign, Sgd, SgdEffLr, Adam };

inline RiskCurve runDiscrete(const CovarianceModel& model, const NoiseModel& noise,
                             const RunConfig& cfg, DiscreteFlavor flavor,
                             const char* algorithm) {
    validateRun(model, cfg);
    const int d = model.dim;
    const int stride = cfg.recordStride > 0 ? cfg.recordStride : d;
    const bool needP = flavor == DiscreteFlavor::SgdEffLr || flavor == DiscreteFlavor::Adam;
    const double v2 = noise.secondMoment();
    if (needP && !std::isfinite(v2))
        throw std::domain_error(std::string(algorithm) +
                                ": population risk undefined for infinite-variance noise");

    Instance inst = resolveInstance(model, cfg);
    Rng data(deriveSeed(cfg.seed, {kDataTag}));
    BlockSampler blocks(model, data, true, noise);

    RiskCurve out;
    out.algorithm = algorithm;
    out.seed = cfg.seed;

    VectorXd nu = inst.nu0;
    VectorXd Dinv;
    if (flavor == DiscreteFlavor::Adam) Dinv = model.Ddiag.cwiseInverse();

    // Exact K nu and R maintained incrementally for the P-dependent flavors;
    // refreshed at every record point to keep accumulation error harmless.
    VectorXd w;
    MatrixXd KX;
    double Rtrack = 0.0;
    auto refresh = [&]() {
        if (model.isotropic) {
            Rtrack = 0.5 * model.isotropicScale * nu.squaredNorm();
        } else {
            w.noalias() = model.K * nu;
            Rtrack = 0.5 * nu.dot(w);
        }
        return Rtrack;
    };
    if (needP) refresh();

    auto exactRisk = [&]() {
        if (needP) return refresh();
        if (model.isotropic) return 0.5 * model.isotropicScale * nu.squaredNorm();
        return 0.5 * nu.dot(model.K * nu);
    };

    for (long k = 0; k < cfg.N;) {
        const int n = int(std::min<long>(kBlock, cfg.N - k));
        blocks.fill(n);
        if (needP && !model.isotropic) KX.noalias() = model.K * blocks.X.leftCols(n);
        for (int j = 0; j < n; ++j, ++k) {
            if (k % stride == 0) {
                const double R = exactRisk();
                if (!std::isfinite(R)) {
                    out.aborted = true;
                    out.abortStep = k;
                    break;
                }
                out.times.push_back(double(k) / d);
                out.risk.push_back(R);
                out.lastFiniteRisk = R;
            }
            auto x = blocks.X.col(j);
            const double r = x.dot(nu) - blocks.eps[j];
            if (!std::isfinite(r)) {
                out.aborted = true;
                out.abortStep = k;
                break;
            }
            double etap = cfg.schedule.eval(double(k) / d) / d;
            switch (flavor) {
                case DiscreteFlavor::Sign: {
                    if (r != 0.0) {
                        const double step = r > 0 ? etap : -etap;
                        for (int i = 0; i < d; ++i) {
                            const double xi = x(i);
                            if (xi > 0) nu(i) -= step;
                            else if (xi < 0) nu(i) += step;
                        }
                    }
                    break;
                }
                case DiscreteFlavor::Sgd:
                    nu -= (etap * r) * x;
                    break;
                case DiscreteFlavor::SgdEffLr:
                case DiscreteFlavor::Adam: {
                    const double P = std::max(std::max(Rtrack, 0.0) + 0.5 * v2, 1e-14);
                    const double scaleP = 1.0 / std::sqrt(2.0 * P);
                    double alpha;
                    if (flavor == DiscreteFlavor::SgdEffLr) {
                        alpha = etap * (2.0 / std::numbers::pi) * scaleP * r;
                        if (model.isotropic) {
                            const double xw = model.isotropicScale * x.dot(nu);
                            const double xKx = model.isotropicScale * x.squaredNorm();
                            nu -= alpha * x;
                            Rtrack += -alpha * xw + 0.5 * alpha * alpha * xKx;
                        } else {
                            auto Kx = KX.col(j);
                            const double xw = x.dot(w);
                            const double xKx = x.dot(Kx);
                            nu -= alpha * x;
                            w -= alpha * Kx;
                            Rtrack += -alpha * xw + 0.5 * alpha * alpha * xKx;
                        }
                    } else {
                        alpha = etap * scaleP * r;
                        VectorXd step = alpha * Dinv.cwiseProduct(x);
                        if (model.isotropic) {
                            const double sw = model.isotropicScale * step.dot(nu);
                            const double sKs = model.isotropicScale * step.squaredNorm();
                            nu -= step;
                            Rtrack += -sw + 0.5 * sKs;
                        } else {
                            VectorXd Kstep = model.K * step;  // D^{-1} x breaks the GEMM trick
                            const double sw = step.dot(w);
                            const double sKs = step.dot(Kstep);
                            nu -= step;
                            w -= Kstep;
                            Rtrack += -sw + 0.5 * sKs;
                        }
                    }
                    break;
                }
            }
        }
        if (out.aborted) break;
    }
    out.rngDraws = blocks.draws;
    out.finalTheta = inst.thetaStar + nu;
    if (out.risk.empty()) {
        out.times.push_back(0.0);
        out.risk.push_back(riskOf(model, inst.theta0, inst.thetaStar));
    }
    return out;
}

enum class SdeFlavor { Sign, Vanilla, Hadam };

inline RiskCurve runSde(const CovarianceModel& model, const NoiseModel& noise,
                        const RunConfig& cfg, SdeFlavor flavor, bool driftOnly,
                        const char* algorithm) {
    validateRun(model, cfg);
    const int d = model.dim;
    const int stride = cfg.recordStride > 0 ? cfg.recordStride : d;
    const double dt = 1.0 / d;
    const double sqrtDt = std::sqrt(dt);
    const double v2 = noise.secondMoment();
    constexpr double riskFloor = 1e-14;

    if ((flavor == SdeFlavor::Vanilla || flavor == SdeFlavor::Hadam) && !std::isfinite(v2))
        throw std::domain_error(std::string(algorithm) +
                                ": population risk undefined for infinite-variance noise");

    Instance inst = resolveInstance(model, cfg);
    Rng data(deriveSeed(cfg.seed, {kDataTag}));

    // Diffusion factors are state-independent up to a scalar, so Gaussian
    // increments are presampled and mapped blockwise.
    MatrixXd factor;
    double scale = 1.0;
    switch (flavor) {
        case SdeFlavor::Sign:
            factor = model.sqrtKsigma;
            scale = std::sqrt(2.0 / (std::numbers::pi * d));
            break;
        case SdeFlavor::Vanilla:
            factor = model.sqrtK;
            scale = std::sqrt(2.0 / d);  // times sqrt(P) per step
            break;
        case SdeFlavor::Hadam: {
            MatrixXd sym = 0.5 * (model.Kbar + model.Kbar.transpose());
            factor = model.Ddiag.cwiseSqrt().cwiseInverse().asDiagonal() * sqrtPsd(sym);
            scale = 1.0 / std::sqrt(double(d));
            break;
        }
    }

    RiskCurve out;
    out.algorithm = algorithm;
    out.seed = cfg.seed;

    VectorXd nu = inst.nu0;
    VectorXd Dinv = model.Ddiag.cwiseInverse();
    MatrixXd Z(d, kBlock), G(d, kBlock);

    for (long k = 0; k < cfg.N;) {
        const int n = int(std::min<long>(kBlock, cfg.N - k));
        if (!driftOnly) {
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < d; ++i) Z(i, j) = data.normal();
                out.rngDraws += d;
            }
            G.leftCols(n).noalias() = factor * Z.leftCols(n);
        }
        for (int j = 0; j < n; ++j, ++k) {
            VectorXd w = model.isotropic ? VectorXd(model.isotropicScale * nu)
                                         : VectorXd(model.K * nu);
            double R = 0.5 * nu.dot(w);
            if (!std::isfinite(R)) {
                out.aborted = true;
                out.abortStep = k;
                break;
            }
            if (k % stride == 0) {
                out.times.push_back(double(k) / d);
                out.risk.push_back(R);
                out.lastFiniteRisk = R;
            }
            if (R < riskFloor) {
                R = riskFloor;
                ++out.floorHits;
            }
            const double eta = cfg.schedule.eval(double(k) / d);
            double diffusionScale = eta * scale * sqrtDt;
            switch (flavor) {
                case SdeFlavor::Sign: {
                    double g;
                    if (noise.kind == NoiseModel::Kind::Gaussian)
                        g = 2.0 / std::numbers::pi / std::sqrt(2.0 * R + v2);
                    else if (noise.kind == NoiseModel::Kind::Zero)
                        g = 2.0 / std::numbers::pi / std::sqrt(2.0 * R);
                    else
                        g = phi(noise, R) / std::sqrt(2.0 * R);
                    nu -= (eta * g * dt) * Dinv.cwiseProduct(w);
                    break;
                }
                case SdeFlavor::Vanilla: {
                    nu -= (eta * dt) * w;
                    diffusionScale *= std::sqrt(R + 0.5 * v2);
                    break;
                }
                case SdeFlavor::Hadam: {
                    const double P = R + 0.5 * v2;
                    nu -= (eta * dt / std::sqrt(2.0 * P)) * Dinv.cwiseProduct(w);
                    break;
                }
            }
            if (!driftOnly) nu += diffusionScale * G.col(j);
        }
        if (out.aborted) break;
    }
    out.finalTheta = inst.thetaStar + nu;
    if (out.risk.empty()) {
        out.times.push_back(0.0);
        out.risk.push_back(riskOf(model, inst.theta0, inst.thetaStar));
    }
    return out;
}

}  // namespace detail

inline RiskCurve runSignSgd(const CovarianceModel& model, const NoiseModel& noise,
                            const RunConfig& cfg) {
    return detail::runDiscrete(model, noise, cfg, detail::DiscreteFlavor::Sign, "signsgd");
}

/// Vanilla SGD; with cfg.effectiveLr the step is scaled by
/// (2/pi)/sqrt(2 P(theta)) so its drift matches signSGD's under Gaussian
/// noise.
inline RiskCurve runSgd(const CovarianceModel& model, const NoiseModel& noise,
                        const RunConfig& cfg) {
    return cfg.effectiveLr
               ? detail::runDiscrete(model, noise, cfg, detail::DiscreteFlavor::SgdEffLr,
                                     "sgd-efflr")
               : detail::runDiscrete(model, noise, cfg, detail::DiscreteFlavor::Sgd, "sgd");
}

inline RiskCurve runSignHsgd(const CovarianceModel& model, const NoiseModel& noise,
                             const RunConfig& cfg, bool driftOnly = false) {
    return detail::runSde(model, noise, cfg, detail::SdeFlavor::Sign, driftOnly, "sign-hsgd");
}

inline RiskCurve runVanillaHsgd(const CovarianceModel& model, const NoiseModel& noise,
                                const RunConfig& cfg, bool driftOnly = false) {
    return detail::runSde(model, noise, cfg, detail::SdeFlavor::Vanilla, driftOnly,
                          "vanilla-hsgd");
}

enum class HadamVariant { Discrete, Homogenized };

inline RiskCurve runHadam(const CovarianceModel& model, const NoiseModel& noise,
                          const RunConfig& cfg, HadamVariant variant) {
    return variant == HadamVariant::Discrete
               ? detail::runDiscrete(model, noise, cfg, detail::DiscreteFlavor::Adam, "hadam")
               : detail::runSde(model, noise, cfg, detail::SdeFlavor::Hadam, false, "hadam");
}

struct Aggregate {
    std::string algorithm;
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderrMean;  // sigma/sqrt(runs); not part of the CSV schema
    std::map<double, std::vector<double>> quantiles;
    int runs = 0;
};

/// Pointwise mean, standard error and empirical quantiles across runs.
/// All curves must share one time grid; aborted (short) curves are rejected.
inline Aggregate aggregateRuns(const std::vector<RiskCurve>& curves,
                               const std::vector<double>& qs) {
    if (curves.empty()) throw ConfigError("aggregateRuns: no curves");
    const auto& t0 = curves.front().times;
    for (const auto& c : curves)
        if (c.times != t0)
            throw ConfigError("aggregateRuns: mismatched time grids (aborted run included?)");
    for (double q : qs)
        if (q < 0 || q > 1) throw ConfigError("aggregateRuns: quantile outside [0,1]");

    Aggregate a;
    a.algorithm = curves.front().algorithm;
    a.times = t0;
    a.runs = int(curves.size());
    const std::size_t T = t0.size();
    a.mean.resize(T);
    a.stderrMean.resize(T);
    for (double q : qs) a.quantiles[q].resize(T);
    std::vector<double> col(curves.size());
    for (std::size_t i = 0; i < T; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < curves.size(); ++r) {
            col[r] = curves[r].risk[i];
            s += col[r];
        }
        const double mu = s / double(col.size());
        a.mean[i] = mu;
        double var = 0.0;
        for (double x : col) var += (x - mu) * (x - mu);
        var = col.size() > 1 ? var / double(col.size() - 1) : 0.0;
        a.stderrMean[i] = std::sqrt(var / double(col.size()));
        std::sort(col.begin(), col.end());
        for (double q : qs) a.quantiles[q][i] = quantileSorted(col, q);
    }
    return a;
}

}  // namespace signdyn
