// Acceptance gate: thirteen numbered end-to-end checks, one PASS/FAIL line
// each, exit code = number of failures. Tolerances are pinned in the checks
// themselves; details carry the measured numbers so a failure is actionable
// from the log alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "signdyn/signdyn.hpp"

using namespace signdyn;
namespace fs = std::filesystem;

namespace {

int gFailures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::printf("CRITERION %d %s: %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++gFailures;
}

template <typename Fn>
void criterion(int n, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(n, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) { return formatDouble(v); }

fs::path workRoot() {
    static fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "signdyn-acceptance";
        std::error_code ec;
        fs::remove_all(p, ec);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

NoiseModel imdbGmm() {
    return NoiseModel::gmm(
        {{0.5, -0.76, std::sqrt(0.18)}, {0.5, 0.75, std::sqrt(0.17)}});
}

ExperimentConfig loadPreset(const std::string& name,
                            const std::vector<std::string>& overrides = {}) {
    const std::string path = std::string(SIGNDYN_PRESET_DIR) + "/" + name + ".yaml";
    YAML::Node root = YAML::LoadFile(path);
    for (const auto& ov : overrides) applyOverride(root, ov);
    return parseExperimentConfig(root);
}

double supGap(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

double supAbs(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

double tailMean(const std::vector<double>& v, double fraction) {
    const std::size_t k = std::max<std::size_t>(1, std::size_t(v.size() * fraction));
    double s = 0.0;
    for (std::size_t i = v.size() - k; i < v.size(); ++i) s += v[i];
    return s / double(k);
}

// Plateau in the sense of the heavy-tail contrast: the mean curve's last
// decile is flat (CV <= 10%) AND has stayed within a factor 10 of where it
// started. CV alone certifies any slow escape to infinity.
struct PlateauCheck {
    double cv = 0.0;
    double level = 0.0;
    double initial = 0.0;
    bool flat = false;
    bool bounded = false;
    bool plateau() const { return flat && bounded; }
};

PlateauCheck plateauOf(const std::vector<double>& mean) {
    PlateauCheck p;
    const std::size_t k = std::max<std::size_t>(2, mean.size() / 10);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = mean.size() - k; i < mean.size(); ++i) s += mean[i];
    p.level = s / double(k);
    for (std::size_t i = mean.size() - k; i < mean.size(); ++i)
        s2 += (mean[i] - p.level) * (mean[i] - p.level);
    p.cv = std::sqrt(s2 / double(k - 1)) / p.level;
    p.initial = mean.front();
    p.flat = p.cv <= 0.10;
    p.bounded = p.level <= 10.0 * p.initial;
    return p;
}

}  // namespace

int main() {
    // 1: closed-form phi against the quadrature oracle, under 10 seconds.
    criterion(1, [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<NoiseModel> models = {NoiseModel::gaussian(0.5), NoiseModel::gaussian(1.0),
                                          NoiseModel::gaussian(2.0), NoiseModel::uniform(1.0),
                                          NoiseModel::sqrtLevy(1.0), imdbGmm()};
        const auto grid = logspace(1e-3, 1e2, 50);
        double worst = 0.0;
        for (const auto& m : models) {
            for (double R : grid) {
                const double closed = phi(m, R, PhiMode::ClosedForm);
                const double quad = phi(m, R, PhiMode::Quadrature);
                worst = std::max(worst, std::abs(closed - quad) / std::abs(quad));
            }
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report(1, worst <= 1e-8 && secs < 10.0,
               "sup rel gap " + fmt(worst) + " (tol 1e-8) over 6 models x 50 risks in " +
                   fmt(secs) + " s (budget 10 s)");
    });

    // 2: psi is identically one for Gaussian noise.
    criterion(2, [] {
        const auto grid = logspace(1e-3, 1e2, 50);
        double worst = 0.0;
        for (double v : {0.5, 1.0, 2.0}) {
            auto m = NoiseModel::gaussian(v);
            for (double R : grid) worst = std::max(worst, std::abs(psi(m, R) - 1.0));
        }
        report(2, worst <= 1e-10, "sup |psi - 1| = " + fmt(worst) + " (tol 1e-10)");
    });

    // 3: the d-mode system collapses onto the scalar flow when K = I.
    criterion(3, [] {
        const int d = 200;
        auto model = buildCovariance(CovarianceSpec::identity(d));
        auto spectral = spectralDecompose(model);
        auto noise = NoiseModel::gaussian(1.0);
        auto sched = Schedule::constant(0.5);
        Rng rng(deriveSeed(2026, {1}));
        VectorXd thetaStar = resolveTheta(ThetaSpec::unitRandom(), d, rng);
        VectorXd theta0 = VectorXd::Zero(d);
        VectorXd r0 = initSignOde(model, spectral, theta0, thetaStar);
        OdeOptions opts;
        opts.recordDt = 0.25;
        auto sys = integrateSignOde(model, spectral, noise, sched, 50.0, r0, opts);
        auto iso = integrateIsoSign(riskOf(model, theta0, thetaStar), noise, sched, 50.0, opts);
        const double gap = supGap(sys.risk, iso.risk);
        report(3, gap <= 1e-6,
               "sup |system - scalar| = " + fmt(gap) + " over [0,50] (tol 1e-6)");
    });

    // 4: mode initialization reproduces the quadratic risk exactly.
    criterion(4, [] {
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const int d = 40 + 13 * i;
            auto model =
                buildCovariance(CovarianceSpec::randomBasisLogspace(d, 0.05, 2.0, 900 + i));
            auto spectral = spectralDecompose(model);
            Rng rng(deriveSeed(7, {std::uint64_t(i)}));
            VectorXd thetaStar = resolveTheta(ThetaSpec::unitRandom(), d, rng);
            VectorXd theta0 = VectorXd::Zero(d);
            if (i % 2 == 1) theta0 = resolveTheta(ThetaSpec::unitRandom(), d, rng);
            VectorXd r0 = initSignOde(model, spectral, theta0, thetaStar);
            worst = std::max(worst,
                             std::abs(r0.sum() - riskOf(model, theta0, thetaStar)));
        }
        report(4, worst <= 1e-10,
               "sup |sum r_i(0) - R(theta0)| = " + fmt(worst) +
                   " over 20 instances, d up to 287 (tol 1e-10)");
    });

    // 5: stationary modes null the sign ODE and sum to the closed-form limit.
    criterion(5, [] {
        const std::uint64_t covSeed = deriveSeed(102, {0xC0F, 500, 0});
        auto model =
            buildCovariance(CovarianceSpec::randomBasisLogspace(500, 0.01, 0.5, covSeed));
        auto spectral = spectralDecompose(model);
        auto noise = NoiseModel::gaussian(0.8);
        const double v2 = noise.secondMoment();
        const VectorXd m = computeSignForcing(model, spectral);
        double worstResidual = 0.0, worstSum = 0.0;
        for (double eta : {0.3, 0.7, 1.1, 1.5}) {
            auto rep = signStationaryPoints(model, spectral, eta, v2);
            const double g = phi(noise, rep.total) / std::sqrt(2.0 * rep.total);
            for (int i = 0; i < m.size(); ++i) {
                const double rhs = -2.0 * eta * g * spectral.eigenvalues(i) * rep.modes(i) +
                                   eta * eta * m(i);
                worstResidual = std::max(worstResidual, std::abs(rhs) / (eta * eta * m(i)));
            }
            const double lim = signLimitRisk(model, eta, v2);
            worstSum = std::max(worstSum, std::abs(rep.total - lim) / lim);
        }
        report(5, worstResidual <= 1e-8 && worstSum <= 1e-10,
               "sup relative ODE residual " + fmt(worstResidual) +
                   " (tol 1e-8), sup relative limit-risk gap " + fmt(worstSum) +
                   " (tol 1e-10) across eta in {0.3,0.7,1.1,1.5}");
    });

    // 7 + 8: limiting risks at d=500 isotropic, four rates, tail averages.
    // (Run before 6 so the cheap checks stream out first; printed in order.)
    std::string c7detail, c8detail;
    bool c7ok = false, c8ok = false;
    try {
        const int d = 500;
        auto model = buildCovariance(CovarianceSpec::identity(d));
        auto noise = NoiseModel::gaussian(0.8);
        const double v2 = noise.secondMoment();
        double worstSign = 0.0, worstSgd = 0.0;
        for (double eta : {0.3, 0.7, 1.1, 1.5}) {
            double signTail = 0.0, sgdTail = 0.0;
            const int nRuns = 4;
            for (int r = 0; r < nRuns; ++r) {
                RunConfig rc;
                rc.d = d;
                rc.N = 200 * d;
                rc.schedule = Schedule::constant(eta);
                rc.seed = deriveSeed(20260814, {std::uint64_t(10 * eta), std::uint64_t(r)});
                rc.recordStride = 250;
                signTail += tailMean(runSignSgd(model, noise, rc).risk, 0.2);
                sgdTail += tailMean(runSgd(model, noise, rc).risk, 0.2);
            }
            signTail /= nRuns;
            sgdTail /= nRuns;
            worstSign = std::max(worstSign, std::abs(signTail / signLimitRisk(model, eta, v2) -
                                                     1.0));
            worstSgd =
                std::max(worstSgd, std::abs(sgdTail / sgdLimitRisk(model, eta, v2) - 1.0));
        }
        c7ok = worstSign <= 0.05;
        c7detail = "sup relative gap simulated vs signLimitRisk " + fmt(worstSign) +
                   " (tol 0.05), tail 20% of T=200, 4 runs per eta";
        c8ok = worstSgd <= 0.05;
        c8detail = "sup relative gap simulated vs sgdLimitRisk " + fmt(worstSgd) +
                   " (tol 0.05), same protocol, eta Tr(K)/d < 2 throughout";
    } catch (const std::exception& e) {
        c7detail = c8detail = std::string("exception: ") + e.what();
    }

    // 6: concentration with dimension on the shipped preset.
    criterion(6, [] {
        auto cfg = loadPreset("dimension-demo");
        auto res = runExperiment(cfg, workRoot() / "dimension-demo");
        std::vector<double> devs;
        std::string detail;
        for (const auto& cell : res.cells) {
            if (cell.aggregates.empty() || cell.odeSolutions.empty())
                throw std::runtime_error("cell " + cell.dir + " missing curves");
            const auto& mean = cell.aggregates[0].mean;
            const auto& ode = cell.odeSolutions[0].risk;
            const double dev = supGap(mean, ode) / supAbs(ode);
            devs.push_back(dev);
            detail += " d" + std::to_string(cell.dim) + "=" + fmt(dev);
        }
        bool monotone = devs.size() == 4;
        for (std::size_t i = 1; i < devs.size(); ++i) monotone = monotone && devs[i] < devs[i - 1];
        const bool endpoint = devs.back() <= 0.05;
        report(6, monotone && endpoint,
               "sup-time relative deviation of 100-run mean vs sign ODE:" + detail +
                   "; monotone=" + (monotone ? "yes" : "no") + ", d750 tol 0.05");
    });

    report(7, c7ok, c7detail);
    report(8, c8ok, c8detail);

    // 9: convergence envelope on the rate-game alpha=5 cell.
    criterion(9, [] {
        auto cfg = loadPreset("rate-game");
        const int d = cfg.dims.at(0);
        const double expo = cfg.covariance.exponents.back();  // alpha = 5
        const int expIdx = int(cfg.covariance.exponents.size()) - 1;
        auto model = buildCovariance(
            CovarianceSpec::diagonalGrid(d, cfg.covariance.lo, cfg.covariance.hi, expo));
        auto spectral = spectralDecompose(model);
        const double eta = 0.01 * d / model.trD();  // trace-normalized sign rate
        const double v2 = cfg.noise.secondMoment();

        // cell instance exactly as the sweep seeds it
        Rng instRng(deriveSeed(cfg.seed, {0x1057, std::uint64_t(d), std::uint64_t(expIdx)}));
        VectorXd thetaStar = resolveTheta(ThetaSpec::unitRandom(), d, instRng);
        VectorXd u(d);
        for (int i = 0; i < d; ++i) u(i) = instRng.normal();
        u.normalize();
        VectorXd theta0 =
            thetaStar + std::sqrt(2.0 * cfg.theta0.risk / u.dot(model.K * u)) * u;
        const double R0 = riskOf(model, theta0, thetaStar);

        Envelope env = convergenceEnvelope(model, eta, v2, R0, cfg.analysis.envelopeC);
        if (!env.conditionsMet)
            throw std::runtime_error("envelope preconditions not met: " + env.report);

        VectorXd r0 = initSignOde(model, spectral, theta0, thetaStar);
        OdeOptions opts;
        opts.recordDt = double(cfg.recordStride) / d;
        auto sol = integrateSignOde(model, spectral, cfg.noise, Schedule::constant(eta),
                                    cfg.T, r0, opts);
        double worstExcess = -1e300;
        for (std::size_t i = 0; i < sol.times.size(); ++i)
            worstExcess = std::max(
                worstExcess, std::abs(sol.risk[i] - env.rInfty) - env.bound(sol.times[i]));
        DecayFit fit =
            fitDecayRate(sol.times, sol.risk, env.rInfty, 0.2 * cfg.T, 0.8 * cfg.T);
        const bool pointwise = worstExcess <= 0.0;
        const bool rate = fit.rate >= env.rate;
        report(9, pointwise && rate,
               "pointwise |R_t - R_inf| - bound max " + fmt(worstExcess) +
                   " (<= 0 required); fitted decay rate " + fmt(fit.rate) +
                   " vs envelope rate " + fmt(env.rate));
    });

    // 10: preconditioning counterexample condition numbers.
    criterion(10, [] {
        auto rep = precondCompare(buildCovariance(CovarianceSpec::counterexample4x4()));
        const bool ok =
            std::abs(rep.kappaK - 115.88) <= 0.01 && std::abs(rep.kappaKbar - 129.78) <= 0.01;
        report(10, ok,
               "kappa(K) = " + fmt(rep.kappaK) + " (115.88 +- 0.01), kappa(Kbar) = " +
                   fmt(rep.kappaKbar) + " (129.78 +- 0.01)");
    });

    // 11: greedy right-hand-side ratio equals (4/pi^2) psi^2.
    criterion(11, [] {
        double worst = 0.0;
        for (const auto& noise : {NoiseModel::gaussian(1.0), NoiseModel::uniform(1.0)}) {
            const double v2 = noise.secondMoment();
            for (double R : logspace(1e-2, 10.0, 50)) {
                const double p = phi(noise, R);
                const double rhsSign = p * p * R;
                const double rhsSgd = 2.0 * R * R / (2.0 * R + v2);
                const double ps = psi(noise, R);
                const double target = (4.0 / (std::numbers::pi * std::numbers::pi)) * ps * ps;
                worst = std::max(worst, std::abs(rhsSign / rhsSgd - target) / target);
            }
        }
        report(11, worst <= 1e-8,
               "sup relative gap of rhs ratio vs (4/pi^2) psi^2 = " + fmt(worst) +
                   " (tol 1e-8), Gaussian and Uniform on R in [1e-2, 10]");
    });

    // 12: heavy-tailed contrast on the shipped Cauchy preset.
    criterion(12, [] {
        auto cfg = loadPreset("fig1-cauchy");
        auto res = runExperiment(cfg, workRoot() / "fig1-cauchy");
        const CellResult& cell = res.cells.at(0);
        PlateauCheck sign, sgd;
        bool haveSign = false, haveSgd = false;
        for (const auto& agg : cell.aggregates) {
            if (agg.algorithm == "signsgd") {
                sign = plateauOf(agg.mean);
                haveSign = true;
            }
            if (agg.algorithm == "sgd") {
                sgd = plateauOf(agg.mean);
                haveSgd = true;
            }
        }
        if (!haveSign || !haveSgd) throw std::runtime_error("missing aggregate curves");
        const bool ok = sign.plateau() && !sgd.plateau();
        report(12, ok,
               "signsgd mean: last-decile cv " + fmt(sign.cv) + ", level " + fmt(sign.level) +
                   " vs initial " + fmt(sign.initial) + " -> plateau " +
                   (sign.plateau() ? "yes" : "no") + "; sgd mean: cv " + fmt(sgd.cv) +
                   ", level " + fmt(sgd.level) + " -> plateau " +
                   (sgd.plateau() ? "yes" : "no") +
                   " (plateau = cv <= 0.1 and level <= 10x initial)");
    });

    // 13: reruns of every preset are byte-identical on the CSV outputs.
    criterion(13, [] {
        // Downscaled dims/runs/T keep the gate inside its runtime budget; the
        // sweep structure, record grids and writers are exercised unchanged.
        const std::vector<std::string> downscale = {
            "dims=[16,24]", "runs=3", "T=2", "record_stride=8", "workers=1"};
        const std::vector<std::string> downscaleSingle = {
            "dims=[24]", "runs=3", "T=2", "record_stride=8", "workers=1"};
        std::string detail;
        bool allOk = true;
        for (const std::string name : {"dimension-demo", "fig1-cauchy", "fig1-gauss",
                                       "limit-risk", "rate-game"}) {
            auto cfg = loadPreset(
                name, name == "dimension-demo" ? downscale : downscaleSingle);
            const fs::path a = workRoot() / ("det-" + name + "-a");
            const fs::path b = workRoot() / ("det-" + name + "-b");
            runExperiment(cfg, a);
            runExperiment(cfg, b);
            int files = 0;
            bool same = true;
            for (const auto& entry : fs::recursive_directory_iterator(a)) {
                if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
                ++files;
                const fs::path rel = fs::relative(entry.path(), a);
                same = same && fs::exists(b / rel) &&
                       readFileBytes(entry.path()) == readFileBytes(b / rel);
            }
            if (files == 0) same = false;
            allOk = allOk && same;
            if (!detail.empty()) detail += ", ";
            detail += name + (same ? " ok(" + std::to_string(files) + " csv)" : " DIFFERS");
        }
        report(13, allOk, detail);
    });

    std::printf("%d of 13 criteria passed\n", 13 - gFailures);
    return gFailures;
}
