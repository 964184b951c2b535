// Command-line front end.
//
//   signdyn run <config.yaml> [--out DIR] [--seed N] [--override k=v ...]
//   signdyn preset <name>     [--out DIR] [--seed N] [--override k=v ...]
//   signdyn ingest <data.csv> <targets.csv> [--ridge L] [--gmm-k K] [--seed N] [--out DIR]
//   signdyn analyze <cov-spec> [--limit-risk] [--precond] [--envelope] ...
//   signdyn curves --noise SPEC [--rmin --rmax --points] [--out FILE]
//
// Exit codes: 0 success (including partial results with aborted runs),
// 2 configuration error, 3 I/O error. SIGNDYN_OUTPUT_ROOT sets the default
// output root; presets are searched in $SIGNDYN_PRESETS, then presets/ next
// to the executable, then ./presets.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signdyn/signdyn.hpp"

namespace fs = std::filesystem;
using namespace signdyn;

namespace {

fs::path gExecutableDir;

fs::path outputRoot() {
    if (const char* env = std::getenv("SIGNDYN_OUTPUT_ROOT")) return fs::path(env);
    return fs::path("out");
}

std::vector<fs::path> presetSearchPath() {
    std::vector<fs::path> dirs;
    if (const char* env = std::getenv("SIGNDYN_PRESETS")) dirs.emplace_back(env);
    if (!gExecutableDir.empty()) dirs.push_back(gExecutableDir / "presets");
    dirs.emplace_back("presets");
    return dirs;
}

fs::path findPreset(const std::string& name) {
    for (const auto& dir : presetSearchPath()) {
        fs::path candidate = dir / (name + ".yaml");
        if (fs::exists(candidate)) return candidate;
    }
    std::string msg = "unknown preset '" + name + "'; searched:";
    for (const auto& dir : presetSearchPath()) msg += " " + dir.string();
    throw ConfigError(msg);
}

struct RunArgs {
    std::string target;  // config path or preset name
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

int doRun(const RunArgs& args, bool preset) {
    const fs::path configPath = preset ? findPreset(args.target) : fs::path(args.target);
    if (!fs::exists(configPath)) throw IoError("config file not found: " + configPath.string());
    const std::string raw = readFileBytes(configPath);
    YAML::Node root;
    try {
        root = YAML::Load(raw);
    } catch (const YAML::Exception& e) {
        throw ConfigError("config parse error in " + configPath.string() + ": " + e.what());
    }
    for (const auto& ov : args.overrides) applyOverride(root, ov);
    if (args.seed) applyOverride(root, "seed=" + std::to_string(*args.seed));
    ExperimentConfig cfg = parseExperimentConfig(root);

    fs::path outDir;
    if (!args.out.empty())
        outDir = args.out;
    else if (!cfg.outputDir.empty())
        outDir = cfg.outputDir;
    else
        outDir = outputRoot() / configPath.stem().string();

    ExperimentResult result = runExperiment(cfg, outDir, raw);
    std::size_t aborted = 0;
    for (const auto& cell : result.cells)
        for (const auto& curve : cell.curves) aborted += curve.aborted ? 1 : 0;
    std::cout << "wrote " << outDir.string() << " (" << result.cells.size() << " cell"
              << (result.cells.size() == 1 ? "" : "s");
    if (aborted) std::cout << ", " << aborted << " aborted run" << (aborted == 1 ? "" : "s");
    std::cout << ")\n";
    return 0;
}

// "identity:500", "scaled-isotropic:500:2.0", "diagonal-grid:500:0.5:1.0:5",
// "random-basis-logspace:500:0.01:0.5[:seed]", "counterexample4x4", or a CSV
// path for an explicit matrix.
CovarianceSpec parseCovSpec(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    auto num = [&](std::size_t i) {
        try {
            std::size_t pos = 0;
            double v = std::stod(parts.at(i), &pos);
            if (pos != parts.at(i).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("cov spec '" + s + "': bad parameter " + std::to_string(i));
        }
    };
    auto dim = [&]() {
        const double v = num(1);
        if (v != std::floor(v) || v < 1) throw ConfigError("cov spec '" + s + "': bad dim");
        return int(v);
    };
    const std::string& kind = parts[0];
    if (kind == "identity") return CovarianceSpec::identity(dim());
    if (kind == "scaled-isotropic") return CovarianceSpec::scaledIsotropic(dim(), num(2));
    if (kind == "diagonal-grid")
        return CovarianceSpec::diagonalGrid(dim(), num(2), num(3), num(4));
    if (kind == "random-basis-logspace")
        return CovarianceSpec::randomBasisLogspace(
            dim(), num(2), num(3),
            parts.size() > 4 ? std::uint64_t(num(4)) : std::uint64_t(20260814));
    if (kind == "counterexample4x4") return CovarianceSpec::counterexample4x4();
    if (fs::exists(s)) return CovarianceSpec::explicitMatrix(loadMatrixCsv(s));
    throw ConfigError("cov spec '" + s + "': unknown kind and no such file");
}

}  // namespace

int main(int argc, char** argv) {
    std::error_code ec;
    gExecutableDir = fs::weakly_canonical(fs::path(argv[0]), ec).parent_path();

    CLI::App app{"signdyn: sign descent dynamics laboratory"};
    app.require_subcommand(1);

    RunArgs runArgs;
    auto* runCmd = app.add_subcommand("run", "run an experiment config");
    runCmd->add_option("config", runArgs.target, "YAML experiment config")->required();
    runCmd->add_option("--out", runArgs.out, "output directory");
    std::uint64_t seedValue = 0;
    auto* runSeed = runCmd->add_option("--seed", seedValue, "override the config seed");
    runCmd->add_option("--override", runArgs.overrides,
                       "dotted-key config override, e.g. schedule.eta=0.5");

    RunArgs presetArgs;
    auto* presetCmd = app.add_subcommand("preset", "run a shipped preset by name");
    presetCmd->add_option("name", presetArgs.target, "preset name")->required();
    presetCmd->add_option("--out", presetArgs.out, "output directory");
    std::uint64_t presetSeedValue = 0;
    auto* presetSeed = presetCmd->add_option("--seed", presetSeedValue, "override the seed");
    presetCmd->add_option("--override", presetArgs.overrides, "dotted-key config override");

    std::string dataPath, targetsPath;
    IngestOptions ingestOpts;
    std::string ingestOut;
    auto* ingestCmd = app.add_subcommand("ingest", "estimate covariance/noise from a dataset");
    ingestCmd->add_option("data", dataPath, "feature matrix CSV (row per sample)")->required();
    ingestCmd->add_option("targets", targetsPath, "targets CSV (single column)")->required();
    ingestCmd->add_option("--ridge", ingestOpts.ridgeLambda, "ridge regularization");
    ingestCmd->add_option("--gmm-k", ingestOpts.gmmComponents, "mixture components");
    ingestCmd->add_option("--seed", ingestOpts.seed, "gmm fit seed");
    ingestCmd->add_option("--out", ingestOut, "output directory");

    std::string covSpecStr;
    bool wantLimit = false, wantPrecond = false, wantEnvelope = false, wantStationary = false;
    double anEta = 0.3, anV2 = 1.0, anR0 = 0.5, anC = 0.1;
    std::string analyzeOut;
    auto* anCmd = app.add_subcommand("analyze", "closed-form reports for a covariance spec");
    anCmd->add_option("cov-spec", covSpecStr, "e.g. identity:500 or counterexample4x4")
        ->required();
    anCmd->add_flag("--limit-risk", wantLimit, "sign + sgd limiting risks");
    anCmd->add_flag("--precond", wantPrecond, "condition number comparison");
    anCmd->add_flag("--envelope", wantEnvelope, "convergence envelope certificate");
    anCmd->add_flag("--stationary", wantStationary, "per-mode stationary points");
    anCmd->add_option("--eta", anEta, "learning rate for rate-dependent reports");
    anCmd->add_option("--v2", anV2, "noise second moment");
    anCmd->add_option("--r0", anR0, "initial risk for the envelope");
    anCmd->add_option("--c", anC, "envelope constant c");
    anCmd->add_option("--out", analyzeOut, "write JSON here instead of stdout");

    std::string curveNoise = "gaussian:1";
    double rMin = 1e-3, rMax = 1e2;
    int curvePoints = 50;
    std::string curvesOut;
    auto* curvesCmd = app.add_subcommand("curves", "tabulate phi/psi over a risk grid");
    curvesCmd->add_option("--noise", curveNoise, "noise spec, e.g. gaussian:1 or cauchy:2:1");
    curvesCmd->add_option("--rmin", rMin, "grid start");
    curvesCmd->add_option("--rmax", rMax, "grid end");
    curvesCmd->add_option("--points", curvePoints, "grid size");
    curvesCmd->add_option("--out", curvesOut, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (runCmd->parsed()) {
            if (*runSeed) runArgs.seed = seedValue;
            return doRun(runArgs, false);
        }
        if (presetCmd->parsed()) {
            if (*presetSeed) presetArgs.seed = presetSeedValue;
            return doRun(presetArgs, true);
        }
        if (ingestCmd->parsed()) {
            MatrixXd X = loadMatrixCsv(dataPath);
            auto targets = readColumnCsv(targetsPath);
            VectorXd y = Eigen::Map<const VectorXd>(targets.data(), targets.size());
            IngestResult res = ingestDataset(X, y, ingestOpts);
            fs::path outDir = ingestOut.empty() ? outputRoot() / "ingest" : fs::path(ingestOut);
            writeMatrixCsv(outDir / "covariance.csv", res.covariance);
            writeVectorCsv(outDir / "theta_star.csv", res.thetaStar);
            writeVectorCsv(outDir / "residuals.csv", res.residuals);
            ordered_json fit;
            ordered_json weights = ordered_json::array(), means = ordered_json::array(),
                         stds = ordered_json::array();
            for (const auto& comp : res.noise.components) {
                weights.push_back(comp.weight);
                means.push_back(comp.mean);
                stds.push_back(comp.std);
            }
            fit["weights"] = weights;
            fit["means"] = means;
            fit["stds"] = stds;
            fit["logLikelihood"] = res.fit.logLikelihood;
            fit["converged"] = res.fit.converged;
            fit["iterations"] = res.fit.iterations;
            fit["residual_std"] = res.residualStd;
            std::ofstream jf = openOutputFile(outDir / "noise_fit.json");
            jf << fit.dump(2) << '\n';
            if (!jf) throw IoError("write failed: " + (outDir / "noise_fit.json").string());
            std::cout << "wrote " << outDir.string() << " (n=" << X.rows() << ", d=" << X.cols()
                      << ", residual std " << formatDouble(res.residualStd) << ")\n";
            return 0;
        }
        if (anCmd->parsed()) {
            CovarianceModel model = buildCovariance(parseCovSpec(covSpecStr));
            ordered_json j;
            j["dim"] = model.dim;
            j["tr_K"] = model.trK();
            j["tr_D"] = model.trD();
            if (wantLimit) {
                ordered_json lr;
                lr["eta"] = anEta;
                lr["v2"] = anV2;
                lr["sign"] = signLimitRisk(model, anEta, anV2);
                try {
                    lr["sgd"] = sgdLimitRisk(model, anEta, anV2);
                } catch (const std::exception& e) {
                    lr["sgd_error"] = e.what();
                }
                j["limit_risk"] = lr;
            }
            if (wantStationary) {
                SpectralData spectral = spectralDecompose(model);
                StationaryReport rep = signStationaryPoints(model, spectral, anEta, anV2);
                ordered_json st;
                st["eta"] = anEta;
                st["y_infty"] = rep.yInfty;
                st["total"] = rep.total;
                st["fixed_point"] = rep.fixedPointRisk;
                st["modes"] =
                    std::vector<double>(rep.modes.data(), rep.modes.data() + rep.modes.size());
                j["stationary"] = st;
            }
            if (wantPrecond) {
                PrecondReport rep = precondCompare(model);
                j["precond"] = {{"kappa_K", rep.kappaK},
                                {"kappa_Kbar", rep.kappaKbar},
                                {"kappa_bar_K", rep.kappaBarK},
                                {"kappa_bar_Kbar", rep.kappaBarKbar}};
            }
            if (wantEnvelope) {
                Envelope env = convergenceEnvelope(model, anEta, anV2, anR0, anC);
                j["envelope"] = {{"eta", anEta},
                                 {"r0", anR0},
                                 {"r_infty", env.rInfty},
                                 {"rate", env.rate},
                                 {"amplitude", env.amplitude},
                                 {"lambda_min_kbar", env.lambdaMin},
                                 {"conditions_met", env.conditionsMet},
                                 {"report", env.report}};
            }
            if (analyzeOut.empty()) {
                std::cout << j.dump(2) << '\n';
            } else {
                std::ofstream jf = openOutputFile(analyzeOut);
                jf << j.dump(2) << '\n';
                if (!jf) throw IoError("write failed: " + analyzeOut);
                std::cout << "wrote " << analyzeOut << '\n';
            }
            return 0;
        }
        if (curvesCmd->parsed()) {
            NoiseModel noise = parseNoiseString(curveNoise);
            if (!(rMin > 0) || rMax <= rMin || curvePoints < 2)
                throw ConfigError("curves: need 0 < rmin < rmax and points >= 2");
            auto grid = logspace(rMin, rMax, curvePoints);
            std::vector<double> phis(grid.size()),
                psis(grid.size(), std::numeric_limits<double>::quiet_NaN());
            const bool psiOk = std::isfinite(noise.secondMoment());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                phis[i] = phi(noise, grid[i]);
                if (psiOk) psis[i] = psi(noise, grid[i]);
            }
            if (curvesOut.empty()) {
                std::cout << "risk,phi,psi\n";
                for (std::size_t i = 0; i < grid.size(); ++i)
                    std::cout << formatDouble(grid[i]) << ',' << formatDouble(phis[i]) << ','
                              << formatDouble(psis[i]) << '\n';
            } else {
                writeCurvesCsv(curvesOut, grid, phis, psis);
                std::cout << "wrote " << curvesOut << '\n';
            }
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
