#pragma once

// Experiment driver: expands the config's (dims x exponents x etas) sweep
// into cells, runs every (algorithm, run) task on a worker pool, reduces to
// per-cell CSVs plus analysis reports, and writes a manifest covering the
// whole invocation.
//
// Determinism: covariance, instance vectors and per-run data streams are all
// seeded by position in the sweep, never by scheduling order, and every float
// is formatted via formatDouble, so a rerun with the same seed reproduces the
// CSV outputs byte for byte.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "signdyn/analysis.hpp"
#include "signdyn/config.hpp"
#include "signdyn/csv.hpp"
#include "signdyn/ode.hpp"
#include "signdyn/simulate.hpp"

namespace signdyn {

using ordered_json = nlohmann::ordered_json;

namespace detail {

constexpr std::uint64_t kCovTag = 0xC0F;
constexpr std::uint64_t kCellInstanceTag = 0x1057;
constexpr std::uint64_t kRunTag = 0x5EED;

inline void parallelFor(std::size_t n, int workers,
                        const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        workers = hc > 0 ? int(hc) : 1;
    }
    workers = int(std::min<std::size_t>(std::size_t(workers), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex errMutex;
    std::exception_ptr firstError;
    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errMutex);
                if (!firstError) firstError = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (firstError) std::rethrow_exception(firstError);
}

struct CellPlan {
    int dimIdx = 0, expIdx = 0, etaIdx = 0;
    int dim = 0;
    double exponent = 1.0;
    double etaBase = 0.0;
    std::string dir;  // "." when the sweep is a single cell
    std::shared_ptr<const CovarianceModel> model;
    VectorXd thetaStar, theta0;
    std::map<std::string, Schedule> schedules;
    std::map<std::string, double> resolvedEtas;  // constant schedules only
};

inline Schedule resolveSchedule(const ExperimentConfig& cfg, const CovarianceModel& model,
                                double etaBase, const std::string& tag, double* etaOut) {
    if (cfg.schedule.kind == "piecewise-linear") {
        if (etaOut) *etaOut = std::numeric_limits<double>::quiet_NaN();
        return Schedule::piecewiseLinear(cfg.schedule.points);
    }
    double eta = etaBase;
    if (cfg.schedule.traceNormalized) {
        const double d = model.dim;
        eta = isSignFamily(tag) ? etaBase * d / model.trD() : etaBase * d / model.trK();
    }
    if (etaOut) *etaOut = eta;
    return Schedule::constant(eta);
}

inline std::string cellDirName(const ExperimentConfig& cfg, int dim, double exponent,
                               double etaBase) {
    std::vector<std::string> parts;
    if (cfg.dims.size() > 1) parts.push_back("d" + std::to_string(dim));
    if (cfg.covariance.exponents.size() > 1) parts.push_back("a" + formatDouble(exponent));
    if (cfg.schedule.etas.size() > 1) parts.push_back("eta" + formatDouble(etaBase));
    if (parts.empty()) return ".";
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "_";
        out += parts[i];
    }
    return out;
}

inline ordered_json configToJson(const ExperimentConfig& cfg) {
    ordered_json j;
    j["algorithms"] = cfg.algorithms;
    j["dims"] = cfg.dims;
    j["T"] = cfg.T;
    j["runs"] = cfg.runs;
    j["seed"] = cfg.seed;
    j["record_stride"] = cfg.recordStride;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.outputDir;
    ordered_json cov;
    cov["kind"] = cfg.covariance.kind;
    cov["alpha"] = cfg.covariance.alpha;
    cov["lo"] = cfg.covariance.lo;
    cov["hi"] = cfg.covariance.hi;
    cov["exponents"] = cfg.covariance.exponents;
    cov["path"] = cfg.covariance.path;
    j["covariance"] = cov;
    j["noise"] = cfg.noise.describe();
    j["theta_star"] = cfg.thetaStar.kind;
    ordered_json th0;
    th0["kind"] = cfg.theta0.kind;
    th0["risk"] = cfg.theta0.risk;
    j["theta0"] = th0;
    ordered_json sch;
    sch["kind"] = cfg.schedule.kind;
    sch["etas"] = cfg.schedule.etas;
    sch["trace_normalized"] = cfg.schedule.traceNormalized;
    if (!cfg.schedule.points.empty()) {
        ordered_json pts = ordered_json::array();
        for (auto& [t, e] : cfg.schedule.points) pts.push_back({t, e});
        sch["points"] = pts;
    }
    j["schedule"] = sch;
    ordered_json an;
    an["limit_risk"] = cfg.analysis.limitRisk;
    an["stationary"] = cfg.analysis.stationary;
    an["precond"] = cfg.analysis.precond;
    an["envelope"] = cfg.analysis.envelope;
    an["psi_curve"] = cfg.analysis.psiCurve;
    an["phi_curve"] = cfg.analysis.phiCurve;
    an["envelope_c"] = cfg.analysis.envelopeC;
    j["analysis"] = an;
    return j;
}

inline ordered_json psiDiagnosticsToJson(const PsiDiagnostics& d) {
    ordered_json j;
    j["grid"] = d.grid;
    j["psi"] = d.psiValues;
    j["sup"] = d.sup;
    j["inf"] = d.inf;
    j["small_r_value"] = d.smallRValue;
    j["limit_formula_value"] = d.limitFormulaValue;
    j["exceeds_log_concave_bound"] = d.exceedsLogConcaveBound;
    j["risk_floor_suppression"] = d.riskFloorSuppression;
    return j;
}

}  // namespace detail

struct CellResult {
    std::string dir;
    int dim = 0;
    double exponent = 1.0;
    double etaBase = 0.0;
    std::map<std::string, double> resolvedEtas;
    std::vector<RiskCurve> curves;          // stochastic algorithms, config order
    std::vector<OdeSolution> odeSolutions;  // ode:* tagged
    std::vector<Aggregate> aggregates;
    ordered_json analysis;
};

struct ExperimentResult {
    std::filesystem::path outDir;
    std::vector<CellResult> cells;
    ordered_json manifest;
};

inline RiskCurve dispatchStochastic(const std::string& tag, const CovarianceModel& model,
                                    const NoiseModel& noise, const RunConfig& rc) {
    if (tag == "signsgd") return runSignSgd(model, noise, rc);
    if (tag == "sgd") return runSgd(model, noise, rc);
    if (tag == "sgd-efflr") {
        RunConfig c = rc;
        c.effectiveLr = true;
        return runSgd(model, noise, c);
    }
    if (tag == "sign-hsgd") return runSignHsgd(model, noise, rc);
    if (tag == "vanilla-hsgd") return runVanillaHsgd(model, noise, rc);
    if (tag == "hadam") return runHadam(model, noise, rc, HadamVariant::Homogenized);
    throw ConfigError("unknown stochastic algorithm '" + tag + "'");
}

/// Runs the full experiment described by cfg, writing outputs under outDir.
/// configOrigin, when nonempty, is the raw config file content and enters the
/// input hash recorded in the manifest.
inline ExperimentResult runExperiment(const ExperimentConfig& cfg,
                                      const std::filesystem::path& outDir,
                                      const std::string& configOrigin = {}) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::string> stochasticTags, odeTags;
    for (const auto& tag : cfg.algorithms)
        (isOdeAlgorithm(tag) || isGreedyAlgorithm(tag) ? odeTags : stochasticTags)
            .push_back(tag);

    // Covariance + instance per (dim, exponent); shared across the eta sweep.
    struct Shared {
        std::shared_ptr<const CovarianceModel> model;
        VectorXd thetaStar, theta0;
    };
    std::map<std::pair<int, int>, Shared> shared;
    std::vector<detail::CellPlan> cells;
    std::string inputBlob;  // extra bytes folded into the inputs hash
    for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
        for (std::size_t ei = 0; ei < cfg.covariance.exponents.size(); ++ei) {
            const int dim = cfg.dims[di];
            const double expo = cfg.covariance.exponents[ei];
            const std::uint64_t covSeed =
                deriveSeed(cfg.seed, {detail::kCovTag, std::uint64_t(dim), std::uint64_t(ei)});
            CovarianceSpec spec = covarianceSpecFor(cfg.covariance, dim, expo, covSeed);
            auto model = std::make_shared<CovarianceModel>(buildCovariance(spec));
            if (model->dim != dim)
                throw ConfigError("config: dims entry " + std::to_string(dim) +
                                  " does not match covariance dimension " +
                                  std::to_string(model->dim));
            Rng instRng(deriveSeed(cfg.seed, {detail::kCellInstanceTag, std::uint64_t(dim),
                                              std::uint64_t(ei)}));
            Shared sh;
            sh.model = model;
            sh.thetaStar = resolveTheta(toThetaSpec(cfg.thetaStar), dim, instRng);
            if (cfg.theta0.kind == "risk-scaled") {
                VectorXd u(dim);
                for (int i = 0; i < dim; ++i) u(i) = instRng.normal();
                u.normalize();
                const double quad = u.dot(model->K * u);
                sh.theta0 =
                    sh.thetaStar + std::sqrt(2.0 * cfg.theta0.risk / quad) * u;
            } else {
                sh.theta0 = resolveTheta(toThetaSpec(cfg.theta0), dim, instRng);
            }
            shared[{int(di), int(ei)}] = std::move(sh);

            for (std::size_t gi = 0; gi < cfg.schedule.etas.size(); ++gi) {
                detail::CellPlan cell;
                cell.dimIdx = int(di);
                cell.expIdx = int(ei);
                cell.etaIdx = int(gi);
                cell.dim = dim;
                cell.exponent = expo;
                cell.etaBase = cfg.schedule.etas[gi];
                cell.dir = detail::cellDirName(cfg, dim, expo, cell.etaBase);
                const Shared& s = shared[{int(di), int(ei)}];
                cell.model = s.model;
                cell.thetaStar = s.thetaStar;
                cell.theta0 = s.theta0;
                for (const auto& tag : cfg.algorithms) {
                    double etaRes = 0.0;
                    cell.schedules.emplace(
                        tag, detail::resolveSchedule(cfg, *s.model, cell.etaBase, tag, &etaRes));
                    cell.resolvedEtas[tag] = etaRes;
                }
                cells.push_back(std::move(cell));
            }
        }
    }
    if (cfg.covariance.kind == "explicit-csv" && !cfg.covariance.path.empty())
        inputBlob += readFileBytes(cfg.covariance.path);

    // All stochastic work as one flat task list over (cell, algorithm, run).
    struct Task {
        std::size_t cell;
        std::size_t alg;
        int run;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<std::vector<RiskCurve>>> slots(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        slots[c].resize(stochasticTags.size());
        for (std::size_t a = 0; a < stochasticTags.size(); ++a) {
            slots[c][a].resize(cfg.runs);
            for (int r = 0; r < cfg.runs; ++r) tasks.push_back({c, a, r});
        }
    }
    detail::parallelFor(tasks.size(), cfg.workers, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        const detail::CellPlan& cell = cells[task.cell];
        const std::string& tag = stochasticTags[task.alg];
        RunConfig rc;
        rc.d = cell.dim;
        rc.N = std::lround(cfg.T * cell.dim);
        rc.schedule = cell.schedules.at(tag);
        // Data stream depends on the sweep position and run only, never on
        // the algorithm: paired algorithms see the same (x, eps) sequence.
        rc.seed = deriveSeed(cfg.seed, {detail::kRunTag, std::uint64_t(cell.dim),
                                        std::uint64_t(cell.expIdx),
                                        std::uint64_t(cell.etaIdx), std::uint64_t(task.run)});
        rc.recordStride = cfg.recordStride;
        rc.thetaStar = ThetaSpec::explicitVector(cell.thetaStar);
        rc.theta0 = ThetaSpec::explicitVector(cell.theta0);
        RiskCurve curve = dispatchStochastic(tag, *cell.model, cfg.noise, rc);
        curve.runId = task.run;
        slots[task.cell][task.alg][task.run] = std::move(curve);
    });

    ExperimentResult result;
    result.outDir = outDir;
    std::error_code ec;
    fs::create_directories(outDir, ec);

    ordered_json manifestCells = ordered_json::array();
    const double v2 = cfg.noise.secondMoment();

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const detail::CellPlan& cell = cells[c];
        CellResult cr;
        cr.dir = cell.dir;
        cr.dim = cell.dim;
        cr.exponent = cell.exponent;
        cr.etaBase = cell.etaBase;
        cr.resolvedEtas = cell.resolvedEtas;

        for (std::size_t a = 0; a < stochasticTags.size(); ++a)
            for (int r = 0; r < cfg.runs; ++r)
                cr.curves.push_back(std::move(slots[c][a][r]));

        // Deterministic spectral work shared by ODE solvers and analyses.
        const int stride = cfg.recordStride > 0 ? cfg.recordStride : cell.dim;
        OdeOptions odeOpts;
        odeOpts.recordDt = double(stride) / cell.dim;
        std::shared_ptr<SpectralData> spectral;
        auto needSpectral = [&]() {
            if (!spectral)
                spectral = std::make_shared<SpectralData>(spectralDecompose(*cell.model));
            return spectral;
        };
        const double R0 = riskOf(*cell.model, cell.theta0, cell.thetaStar);

        std::vector<OdeSolution> greedy;
        for (const auto& tag : odeTags) {
            const Schedule& sch = cell.schedules.at(tag);
            if (tag == "ode-sign") {
                auto sp = needSpectral();
                VectorXd r0 = initSignOde(*cell.model, *sp, cell.theta0, cell.thetaStar);
                cr.odeSolutions.push_back(
                    integrateSignOde(*cell.model, *sp, cfg.noise, sch, cfg.T, r0, odeOpts));
            } else if (tag == "ode-sgd") {
                SymmetricSpectrum ks = symmetricSpectrum(cell.model->K);
                VectorXd v0 = initSgdOde(ks, cell.theta0, cell.thetaStar);
                cr.odeSolutions.push_back(integrateSgdOde(ks, v2, sch, cfg.T, v0, odeOpts));
            } else if (tag == "ode-iso-sign") {
                cr.odeSolutions.push_back(integrateIsoSign(R0, cfg.noise, sch, cfg.T, odeOpts));
            } else if (tag == "ode-iso-sgd") {
                cr.odeSolutions.push_back(integrateIsoSgd(R0, v2, sch, cfg.T, odeOpts));
            } else if (tag == "greedy-sign") {
                OdeSolution sol = greedySign(R0, cfg.noise, cfg.T, odeOpts);
                greedy.push_back(sol);
                cr.odeSolutions.push_back(std::move(sol));
            } else if (tag == "greedy-sgd") {
                OdeSolution sol = greedySgd(R0, v2, cfg.T, odeOpts);
                greedy.push_back(sol);
                cr.odeSolutions.push_back(std::move(sol));
            }
        }

        // Aggregates over complete runs only; aborted runs stay in
        // riskcurves.csv but are excluded from the bands.
        ordered_json aborts = ordered_json::array();
        ordered_json drawTotals;
        for (std::size_t a = 0; a < stochasticTags.size(); ++a) {
            std::vector<RiskCurve> complete;
            std::uint64_t draws = 0;
            for (int r = 0; r < cfg.runs; ++r) {
                const RiskCurve& cv = cr.curves[a * cfg.runs + r];
                draws += cv.rngDraws;
                if (cv.aborted) {
                    ordered_json ab;
                    ab["algorithm"] = cv.algorithm;
                    ab["run"] = cv.runId;
                    ab["step"] = cv.abortStep;
                    ab["last_risk"] = cv.lastFiniteRisk;
                    aborts.push_back(ab);
                } else {
                    complete.push_back(cv);
                }
            }
            drawTotals[stochasticTags[a]] = draws;
            if (!complete.empty()) cr.aggregates.push_back(aggregateRuns(complete, {0.1, 0.9}));
        }

        // Analysis reports; formula-domain failures are recorded, not fatal.
        ordered_json an;
        auto guard = [&](const char* key, const std::function<ordered_json()>& fn) {
            try {
                an[key] = fn();
            } catch (const std::exception& e) {
                an[key] = ordered_json{{"error", e.what()}};
            }
        };
        const bool constantSchedule = cfg.schedule.kind == "constant";
        auto etaFor = [&](const char* family) {
            const std::string tag = family;
            auto it = cell.resolvedEtas.find(tag);
            if (it != cell.resolvedEtas.end() && std::isfinite(it->second)) return it->second;
            double eta = 0.0;
            detail::resolveSchedule(cfg, *cell.model, cell.etaBase, tag, &eta);
            return eta;
        };
        if (cfg.analysis.limitRisk) {
            guard("limit_risk", [&]() {
                if (!constantSchedule)
                    throw ConfigError("limit risk is defined for constant schedules");
                ordered_json j;
                j["v2"] = v2;
                const double etaSign = etaFor("signsgd");
                j["sign"] = {{"eta", etaSign},
                             {"value", signLimitRisk(*cell.model, etaSign, v2)}};
                const double etaSgd = etaFor("sgd");
                try {
                    j["sgd"] = {{"eta", etaSgd},
                                {"value", sgdLimitRisk(*cell.model, etaSgd, v2)}};
                } catch (const std::exception& e) {
                    j["sgd"] = {{"eta", etaSgd}, {"error", e.what()}};
                }
                return j;
            });
        }
        if (cfg.analysis.stationary) {
            guard("stationary", [&]() {
                if (!constantSchedule)
                    throw ConfigError("stationary analysis is defined for constant schedules");
                const double eta = etaFor("signsgd");
                StationaryReport rep =
                    signStationaryPoints(*cell.model, *needSpectral(), eta, v2);
                ordered_json j;
                j["eta"] = eta;
                j["y_infty"] = rep.yInfty;
                j["total"] = rep.total;
                j["fixed_point"] = rep.fixedPointRisk;
                j["modes"] = std::vector<double>(rep.modes.data(),
                                                 rep.modes.data() + rep.modes.size());
                return j;
            });
        }
        if (cfg.analysis.precond) {
            guard("precond", [&]() {
                PrecondReport rep = precondCompare(*cell.model);
                ordered_json j;
                j["kappa_K"] = rep.kappaK;
                j["kappa_Kbar"] = rep.kappaKbar;
                j["kappa_bar_K"] = rep.kappaBarK;
                j["kappa_bar_Kbar"] = rep.kappaBarKbar;
                return j;
            });
        }
        if (cfg.analysis.envelope) {
            guard("envelope", [&]() {
                if (!constantSchedule)
                    throw ConfigError("envelope analysis is defined for constant schedules");
                const double eta = etaFor("signsgd");
                Envelope env =
                    convergenceEnvelope(*cell.model, eta, v2, R0, cfg.analysis.envelopeC);
                ordered_json j;
                j["eta"] = eta;
                j["r0"] = R0;
                j["r_infty"] = env.rInfty;
                j["rate"] = env.rate;
                j["amplitude"] = env.amplitude;
                j["lambda_min_kbar"] = env.lambdaMin;
                j["conditions_met"] = env.conditionsMet;
                j["report"] = env.report;
                for (const auto& sol : cr.odeSolutions) {
                    if (sol.label != "ode:sign") continue;
                    try {
                        DecayFit fit = fitDecayRate(sol.times, sol.risk, env.rInfty,
                                                    0.2 * cfg.T, 0.8 * cfg.T);
                        j["fit"] = {{"rate", fit.rate}, {"points", fit.points}};
                    } catch (const std::exception& e) {
                        j["fit"] = {{"error", e.what()}};
                    }
                    break;
                }
                return j;
            });
        }
        if (cfg.analysis.psiCurve) {
            guard("psi_diagnostics",
                  [&]() { return detail::psiDiagnosticsToJson(psiDiagnostics(cfg.noise)); });
        }
        cr.analysis = an;

        // Emit the cell.
        const fs::path cellDir = cell.dir == "." ? outDir : outDir / cell.dir;
        std::vector<RiskCurve> allRows = cr.curves;
        for (const auto& sol : cr.odeSolutions) allRows.push_back(toRiskCurve(sol));
        if (!allRows.empty()) {
            writeRiskCurvesCsv(cellDir / "riskcurves.csv", allRows);
            if (!cr.aggregates.empty())
                writeAggregateCsv(cellDir / "aggregate.csv", cr.aggregates);
        }
        if (!greedy.empty()) writeGreedyEtaCsv(cellDir / "greedy_eta.csv", greedy);
        if (cfg.analysis.envelope && an.contains("envelope") &&
            !an["envelope"].contains("error")) {
            std::vector<double> ts, bounds;
            const double rate = an["envelope"]["rate"].get<double>();
            const double amp = an["envelope"]["amplitude"].get<double>();
            const double dtRec = double(stride) / cell.dim;
            for (int j = 0; j * dtRec <= cfg.T + 1e-12; ++j) {
                ts.push_back(j * dtRec);
                bounds.push_back(amp * std::exp(-rate * ts.back()));
            }
            writeEnvelopeCsv(cellDir / "envelope.csv", ts, bounds);
        }
        if (cfg.analysis.phiCurve) {
            auto grid = logspace(cfg.analysis.curveRMin, cfg.analysis.curveRMax,
                                 cfg.analysis.curvePoints);
            std::vector<double> phis(grid.size()),
                psis(grid.size(), std::numeric_limits<double>::quiet_NaN());
            const bool psiOk = std::isfinite(v2);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                phis[i] = phi(cfg.noise, grid[i]);
                if (psiOk) psis[i] = psi(cfg.noise, grid[i]);
            }
            writeCurvesCsv(cellDir / "curves.csv", grid, phis, psis);
        }
        if (!an.empty()) {
            std::ofstream af = openOutputFile(cellDir / "analysis.json");
            af << an.dump(2) << '\n';
            if (!af) throw IoError("write failed: " + (cellDir / "analysis.json").string());
        }

        ordered_json mc;
        mc["dir"] = cell.dir;
        mc["dim"] = cell.dim;
        mc["exponent"] = cell.exponent;
        mc["eta_base"] = cell.etaBase;
        ordered_json etas;
        for (const auto& [tag, eta] : cell.resolvedEtas)
            if (std::isfinite(eta)) etas[tag] = eta;
        mc["resolved_etas"] = etas;
        mc["record_stride"] = stride;
        mc["steps"] = std::lround(cfg.T * cell.dim);
        mc["rng_draws"] = drawTotals;
        mc["aborts"] = aborts;
        manifestCells.push_back(mc);
        result.cells.push_back(std::move(cr));
    }

    // Manifest: full reproduction info plus wall time. The CSVs are the
    // byte-stable artifacts; the manifest records timing so it is not.
    ordered_json manifest;
    ordered_json tool;
    tool["name"] = "signdyn";
    tool["version"] = "0.1.0";
    tool["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
    tool["compiler"] = __VERSION__;
    manifest["tool"] = tool;
    manifest["seed"] = cfg.seed;
    manifest["config"] = detail::configToJson(cfg);
    manifest["inputs_hash"] =
        gitBlobSha1(detail::configToJson(cfg).dump() + configOrigin + inputBlob);
    manifest["cells"] = manifestCells;
    const auto t1 = std::chrono::steady_clock::now();
    manifest["wall_time_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    {
        std::ofstream mf = openOutputFile(outDir / "manifest.json");
        mf << manifest.dump(2) << '\n';
        if (!mf) throw IoError("write failed: " + (outDir / "manifest.json").string());
    }
    result.manifest = std::move(manifest);
    return result;
}

}  // namespace signdyn
