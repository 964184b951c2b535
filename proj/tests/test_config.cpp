#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <yaml-cpp/yaml.h>

#include "helpers.hpp"
#include "signdyn/signdyn.hpp"

using namespace signdyn;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& yaml) {
    return parseExperimentConfig(YAML::Load(yaml));
}

}  // namespace

TEST_CASE("a full experiment config parses field by field") {
    auto cfg = parse(R"(
algorithms: [signsgd, sgd, ode-sign]
dims: [50, 100]
T: 12.5
runs: 7
seed: 4242
record_stride: 25
workers: 3
output_dir: /tmp/somewhere
covariance:
  kind: diagonal-grid
  lo: 0.5
  hi: 2.0
  exponents: [1, 2]
noise:
  kind: gmm
  weights: [0.5, 0.5]
  means: [-0.76, 0.75]
  stds: [0.42, 0.41]
theta_star:
  kind: unit-random
theta0:
  kind: risk-scaled
  risk: 0.001
schedule:
  kind: constant
  etas: [0.1, 0.3]
  trace_normalized: true
analysis:
  limit_risk: true
  envelope: true
  envelope_c: 0.2
  curve_rmin: 0.01
  curve_rmax: 10
  curve_points: 20
)");
    REQUIRE(cfg.algorithms == std::vector<std::string>{"signsgd", "sgd", "ode-sign"});
    REQUIRE(cfg.dims == std::vector<int>{50, 100});
    REQUIRE(cfg.T == 12.5);
    REQUIRE(cfg.runs == 7);
    REQUIRE(cfg.seed == 4242);
    REQUIRE(cfg.recordStride == 25);
    REQUIRE(cfg.workers == 3);
    REQUIRE(cfg.outputDir == "/tmp/somewhere");
    REQUIRE(cfg.covariance.kind == "diagonal-grid");
    REQUIRE(cfg.covariance.lo == 0.5);
    REQUIRE(cfg.covariance.hi == 2.0);
    REQUIRE(cfg.covariance.exponents == std::vector<double>{1.0, 2.0});
    REQUIRE(cfg.noise.describe() == "gmm(k=2)");
    REQUIRE(cfg.thetaStar.kind == "unit-random");
    REQUIRE(cfg.theta0.kind == "risk-scaled");
    REQUIRE(cfg.theta0.risk == 0.001);
    REQUIRE(cfg.schedule.kind == "constant");
    REQUIRE(cfg.schedule.etas == std::vector<double>{0.1, 0.3});
    REQUIRE(cfg.schedule.traceNormalized);
    REQUIRE(cfg.analysis.limitRisk);
    REQUIRE(cfg.analysis.envelope);
    REQUIRE_FALSE(cfg.analysis.stationary);
    REQUIRE(cfg.analysis.envelopeC == 0.2);
    REQUIRE(cfg.analysis.curveRMin == 0.01);
    REQUIRE(cfg.analysis.curveRMax == 10.0);
    REQUIRE(cfg.analysis.curvePoints == 20);
}

TEST_CASE("omitted sections fall back to defaults") {
    auto cfg = parse("algorithms: [signsgd]");
    REQUIRE(cfg.dims == std::vector<int>{100});
    REQUIRE(cfg.T == 10.0);
    REQUIRE(cfg.runs == 1);
    REQUIRE(cfg.seed == 1);
    REQUIRE(cfg.recordStride == 0);
    REQUIRE(cfg.covariance.kind == "identity");
    REQUIRE(cfg.noise.describe() == "zero");
    REQUIRE(cfg.thetaStar.kind == "unit-random");
    REQUIRE(cfg.theta0.kind == "zero");
    REQUIRE(cfg.schedule.kind == "constant");
    REQUIRE(cfg.schedule.etas == std::vector<double>{0.1});
    REQUIRE_FALSE(cfg.schedule.traceNormalized);
    REQUIRE_FALSE(cfg.analysis.limitRisk);
}

TEST_CASE("a piecewise-linear schedule parses into points") {
    auto cfg = parse(R"(
algorithms: [signsgd]
schedule:
  kind: piecewise-linear
  points: [[0, 0.5], [3, 0.1], [10, 0.1]]
)");
    REQUIRE(cfg.schedule.kind == "piecewise-linear");
    REQUIRE(cfg.schedule.points.size() == 3);
    REQUIRE(cfg.schedule.points[1] == std::pair<double, double>{3.0, 0.1});
    // a single non-swept eta cell stands in for the sweep axis
    REQUIRE(cfg.schedule.etas == std::vector<double>{0.0});
}

TEST_CASE("config rejection catalogue") {
    REQUIRE_THROWS_WITH(parse("algorithms: [signsgd]\nbogus: 1"),
                        ContainsSubstring("unknown key 'bogus'"));
    REQUIRE_THROWS_WITH(parse("algorithms: [adamw]"),
                        ContainsSubstring("unknown algorithm 'adamw'"));
    REQUIRE_THROWS_WITH(parse("algorithms: [adamw]"), ContainsSubstring("signsgd"));
    REQUIRE_THROWS_WITH(parse("dims: []"), ContainsSubstring("dims must be nonempty"));
    REQUIRE_THROWS_AS(parse("dims: [0]"), ConfigError);
    REQUIRE_THROWS_AS(parse("T: -1"), ConfigError);
    REQUIRE_THROWS_AS(parse("T: zebra"), ConfigError);
    REQUIRE_THROWS_AS(parse("runs: 0"), ConfigError);
    REQUIRE_THROWS_AS(parse("record_stride: -1"), ConfigError);
    REQUIRE_THROWS_AS(parse("covariance: {kind: diagonal-grid, exponent: 1, exponents: [1, 2]}"),
                      ConfigError);
    REQUIRE_THROWS_AS(parse("covariance: {kind: diagonal-grid, exponents: []}"), ConfigError);
    REQUIRE_THROWS_AS(parse("covariance: {spread: 2}"), ConfigError);
    REQUIRE_THROWS_WITH(parse("noise: {kind: levy}"), ContainsSubstring("unknown kind 'levy'"));
    REQUIRE_THROWS_WITH(parse("noise: {kind: gaussian}"), ContainsSubstring("missing key 'std'"));
    REQUIRE_THROWS_WITH(
        parse("noise: {kind: gmm, weights: [1], means: [0, 1], stds: [1, 1]}"),
        ContainsSubstring("lengths differ"));
    REQUIRE_THROWS_AS(parse("theta0: {kind: warm}"), ConfigError);
    REQUIRE_THROWS_AS(parse("theta0: {kind: risk-scaled, risk: -2}"), ConfigError);
    REQUIRE_THROWS_AS(parse("schedule: {kind: constant, eta: 0.1, etas: [0.2]}"), ConfigError);
    REQUIRE_THROWS_AS(parse("schedule: {kind: constant, etas: []}"), ConfigError);
    REQUIRE_THROWS_AS(parse("schedule: {kind: constant, eta: -0.5}"), ConfigError);
    REQUIRE_THROWS_AS(parse("schedule: {kind: cosine}"), ConfigError);
    REQUIRE_THROWS_WITH(
        parse("schedule: {kind: piecewise-linear, points: [[0, 1]], eta: 0.1}"),
        ContainsSubstring("points, not eta"));
    REQUIRE_THROWS_WITH(
        parse("schedule: {kind: piecewise-linear, points: [[0, 1]], trace_normalized: true}"),
        ContainsSubstring("trace_normalized"));
    REQUIRE_THROWS_WITH(parse("schedule: {kind: piecewise-linear, points: [[0, 1, 2]]}"),
                        ContainsSubstring("each point is [t, eta]"));
    REQUIRE_THROWS_AS(parse("analysis: {curve_rmin: 0}"), ConfigError);
    REQUIRE_THROWS_AS(parse("analysis: {curve_rmin: 5, curve_rmax: 1}"), ConfigError);
    REQUIRE_THROWS_AS(parse("analysis: {curve_points: 1}"), ConfigError);
    REQUIRE_THROWS_WITH(
        parse("dims: [4, 8]\ncovariance: {kind: counterexample4x4}"),
        ContainsSubstring("single dims entry"));
    REQUIRE_THROWS_WITH(parse("covariance: {kind: identity, exponents: [1, 2]}"),
                        ContainsSubstring("exponent sweeps"));
}

TEST_CASE("isotropic-reduction algorithms insist on identity covariance") {
    REQUIRE_THROWS_WITH(
        parse("algorithms: [greedy-sign]\ncovariance: {kind: diagonal-grid, lo: 1, hi: 2}"),
        ContainsSubstring("K = I reduction"));
    REQUIRE_THROWS_AS(
        parse("algorithms: [ode-iso-sgd]\ncovariance: {kind: scaled-isotropic, alpha: 2}"),
        ConfigError);
    // alpha = 1 is the identity, so the gate admits it
    REQUIRE_NOTHROW(
        parse("algorithms: [ode-iso-sgd]\ncovariance: {kind: scaled-isotropic, alpha: 1.0}"));
    REQUIRE_NOTHROW(parse("algorithms: [greedy-sgd, greedy-sign]"));
}

TEST_CASE("noise string specs parse like their YAML counterparts") {
    REQUIRE(parseNoiseString("zero").describe() == "zero");
    REQUIRE(parseNoiseString("gaussian:1").describe() == NoiseModel::gaussian(1.0).describe());
    REQUIRE(parseNoiseString("cauchy:2:1").describe() ==
            NoiseModel::cauchy(2.0, 1.0).describe());
    REQUIRE(parseNoiseString("student-t:3").describe() ==
            NoiseModel::studentT(3.0, 1.0).describe());
    REQUIRE(parseNoiseString("student-t:3:0.5").describe() ==
            NoiseModel::studentT(3.0, 0.5).describe());
    auto gmm = parseNoiseString("gmm:0.5,-0.76,0.42;0.5,0.75,0.41");
    REQUIRE(gmm.components.size() == 2);
    REQUIRE(gmm.components[0].mean == -0.76);
    REQUIRE(gmm.components[1].std == 0.41);

    REQUIRE_THROWS_WITH(parseNoiseString("gaussian"), ContainsSubstring("missing parameter"));
    REQUIRE_THROWS_WITH(parseNoiseString("gaussian:abc"), ContainsSubstring("bad number"));
    REQUIRE_THROWS_WITH(parseNoiseString("gmm:1,2"), ContainsSubstring("w,mean,std"));
    REQUIRE_THROWS_WITH(parseNoiseString("pink:1"), ContainsSubstring("unknown kind"));
}

TEST_CASE("dotted overrides edit and extend the config tree") {
    YAML::Node root = YAML::Load("algorithms: [signsgd]\nschedule:\n  eta: 0.1\n");
    applyOverride(root, "schedule.eta=0.5");
    applyOverride(root, "dims=[50,100]");
    applyOverride(root, "analysis.limit_risk=true");  // section did not exist
    applyOverride(root, "noise.kind=gaussian");
    applyOverride(root, "noise.std=2.0");
    auto cfg = parseExperimentConfig(root);
    REQUIRE(cfg.schedule.etas == std::vector<double>{0.5});
    REQUIRE(cfg.dims == std::vector<int>{50, 100});
    REQUIRE(cfg.analysis.limitRisk);
    REQUIRE(cfg.noise.describe() == NoiseModel::gaussian(2.0).describe());

    REQUIRE_THROWS_WITH(applyOverride(root, "justakey"), ContainsSubstring("key=value"));
    REQUIRE_THROWS_WITH(applyOverride(root, "=5"), ContainsSubstring("key=value"));
    REQUIRE_THROWS_WITH(applyOverride(root, "a..b=1"), ContainsSubstring("empty key segment"));
}

TEST_CASE("covariance specs materialize per sweep cell") {
    CovarianceConfig cc;
    cc.kind = "identity";
    REQUIRE(buildCovariance(covarianceSpecFor(cc, 7, 1.0, 1)).dim == 7);

    cc.kind = "scaled-isotropic";
    cc.alpha = 2.25;
    auto iso = buildCovariance(covarianceSpecFor(cc, 4, 1.0, 1));
    REQUIRE(iso.isotropic);
    REQUIRE(iso.isotropicScale == 2.25);

    cc.kind = "diagonal-grid";
    cc.lo = 0.5;
    cc.hi = 2.0;
    auto grid = buildCovariance(covarianceSpecFor(cc, 5, 2.0, 1));
    REQUIRE(grid.K(0, 0) == 0.25);
    REQUIRE(grid.K(4, 4) == 4.0);

    cc.kind = "random-basis-logspace";
    cc.lo = 0.01;
    cc.hi = 0.5;
    auto rb1 = buildCovariance(covarianceSpecFor(cc, 16, 1.0, 99));
    auto rb2 = buildCovariance(covarianceSpecFor(cc, 16, 1.0, 99));
    REQUIRE((rb1.K - rb2.K).norm() == 0.0);

    cc.kind = "counterexample4x4";
    REQUIRE(buildCovariance(covarianceSpecFor(cc, 4, 1.0, 1)).dim == 4);

    cc.kind = "laplacian";
    REQUIRE_THROWS_WITH(buildCovariance(covarianceSpecFor(cc, 4, 1.0, 1)),
                        ContainsSubstring("unknown kind"));
}

TEST_CASE("config file loading distinguishes io and parse failures") {
    auto dir = testutil::scratchDir("config-load");
    REQUIRE_THROWS_AS(loadExperimentConfig((dir / "missing.yaml").string()), IoError);
    {
        std::ofstream f(dir / "broken.yaml");
        f << "algorithms: [unterminated\n";
    }
    REQUIRE_THROWS_WITH(loadExperimentConfig((dir / "broken.yaml").string()),
                        ContainsSubstring("config parse error"));
}

TEST_CASE("shipped presets load and describe the documented sweeps") {
    const std::string base = SIGNDYN_PRESET_DIR;
    auto dd = loadExperimentConfig(base + "/dimension-demo.yaml");
    REQUIRE(dd.algorithms == std::vector<std::string>{"signsgd", "ode-sign"});
    REQUIRE(dd.dims == std::vector<int>{50, 100, 250, 750});
    REQUIRE(dd.runs == 100);
    REQUIRE(dd.T == 150.0);
    REQUIRE(dd.covariance.kind == "random-basis-logspace");

    auto fc = loadExperimentConfig(base + "/fig1-cauchy.yaml");
    REQUIRE(fc.noise.describe() == NoiseModel::cauchy(2.0, 1.0).describe());
    REQUIRE(fc.schedule.etas == std::vector<double>{0.5});
    REQUIRE_FALSE(fc.schedule.traceNormalized);

    auto fg = loadExperimentConfig(base + "/fig1-gauss.yaml");
    REQUIRE(fg.algorithms == std::vector<std::string>{"signsgd", "sign-hsgd", "ode-sign"});
    REQUIRE(fg.recordStride == 50);

    auto lr = loadExperimentConfig(base + "/limit-risk.yaml");
    REQUIRE(lr.schedule.etas == std::vector<double>{0.3, 0.7, 1.1, 1.5});
    REQUIRE(lr.analysis.limitRisk);
    REQUIRE(lr.analysis.stationary);
    REQUIRE(lr.noise.describe() == NoiseModel::gaussian(0.8).describe());

    auto rg = loadExperimentConfig(base + "/rate-game.yaml");
    REQUIRE(rg.covariance.exponents == std::vector<double>{1, 2, 3, 4, 5});
    REQUIRE(rg.schedule.traceNormalized);
    REQUIRE(rg.theta0.kind == "risk-scaled");
    REQUIRE(rg.theta0.risk == 5.0e-4);
    REQUIRE(rg.analysis.envelope);
}

TEST_CASE("runExperiment writes a reproducible cell") {
    auto cfg = parse(R"(
algorithms: [signsgd, sgd, ode-iso-sign]
dims: [8]
T: 3
runs: 2
seed: 7
record_stride: 4
workers: 1
noise: {kind: gaussian, std: 0.5}
schedule: {kind: constant, eta: 0.4}
analysis: {limit_risk: true, precond: true}
)");
    auto dirA = testutil::scratchDir("exp-a");
    auto dirB = testutil::scratchDir("exp-b");
    auto resA = runExperiment(cfg, dirA);
    auto resB = runExperiment(cfg, dirB);

    REQUIRE(resA.cells.size() == 1);
    REQUIRE(resA.cells[0].dir == ".");
    REQUIRE(resA.cells[0].curves.size() == 4);       // 2 algorithms x 2 runs
    REQUIRE(resA.cells[0].odeSolutions.size() == 1);
    REQUIRE(resA.cells[0].aggregates.size() == 2);
    REQUIRE(fs::exists(dirA / "riskcurves.csv"));
    REQUIRE(fs::exists(dirA / "aggregate.csv"));
    REQUIRE(fs::exists(dirA / "analysis.json"));
    REQUIRE(fs::exists(dirA / "manifest.json"));

    // header + 2 algs x 2 runs x ceil(24/4) rows + 7 ode rows
    const std::string csv = readFileBytes(dirA / "riskcurves.csv");
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 32);
    REQUIRE(csv.rfind("algorithm,run_id,time,risk\n", 0) == 0);
    REQUIRE_THAT(csv, ContainsSubstring("ode:iso-sign"));

    for (const char* name : {"riskcurves.csv", "aggregate.csv", "analysis.json"})
        REQUIRE(readFileBytes(dirA / name) == readFileBytes(dirB / name));

    REQUIRE(resA.manifest["cells"][0]["steps"] == 24);
    REQUIRE(resA.manifest["cells"][0]["aborts"].empty());
    REQUIRE(resA.manifest["config"]["seed"] == 7);
    const std::string h1 = resA.manifest["inputs_hash"].get<std::string>();
    REQUIRE(h1.size() == 40);
    REQUIRE(h1 == resB.manifest["inputs_hash"].get<std::string>());
    REQUIRE(resA.cells[0].analysis.contains("limit_risk"));
    REQUIRE(resA.cells[0].analysis.contains("precond"));
}

TEST_CASE("sweeps expand into one directory per cell") {
    auto cfg = parse(R"(
algorithms: [signsgd]
dims: [4, 6]
T: 2
runs: 1
seed: 11
workers: 1
noise: {kind: gaussian, std: 1.0}
schedule: {kind: constant, etas: [0.1, 0.2]}
)");
    auto dir = testutil::scratchDir("exp-sweep");
    auto res = runExperiment(cfg, dir);
    REQUIRE(res.cells.size() == 4);
    for (const char* cell : {"d4_eta0.1", "d4_eta0.2", "d6_eta0.1", "d6_eta0.2"})
        REQUIRE(fs::exists(dir / cell / "riskcurves.csv"));
    REQUIRE(res.cells[0].dir == "d4_eta0.1");
    REQUIRE(res.cells[3].dir == "d6_eta0.2");
}

TEST_CASE("trace normalization resolves family-specific rates") {
    auto cfg = parse(R"(
algorithms: [signsgd, sgd]
dims: [4]
T: 1
runs: 1
seed: 3
workers: 1
covariance: {kind: scaled-isotropic, alpha: 2.25}
noise: {kind: gaussian, std: 1.0}
schedule: {kind: constant, eta: 0.3, trace_normalized: true}
)");
    auto dir = testutil::scratchDir("exp-tracenorm");
    auto res = runExperiment(cfg, dir);
    // Tr(K) = 9 and Tr(D) = 6 at d = 4, so eta d / Tr splits by family
    REQUIRE(res.cells[0].resolvedEtas.at("sgd") == Catch::Approx(0.3 * 4.0 / 9.0).epsilon(1e-13));
    REQUIRE(res.cells[0].resolvedEtas.at("signsgd") == Catch::Approx(0.2).epsilon(1e-13));
    REQUIRE(res.manifest["cells"][0]["resolved_etas"]["signsgd"].get<double>() ==
            Catch::Approx(0.2));
}

TEST_CASE("aborted runs land in the manifest instead of the aggregates") {
    auto cfg = parse(R"(
algorithms: [sgd]
dims: [8]
T: 20
runs: 1
seed: 13
workers: 1
noise: {kind: gaussian, std: 1.0}
schedule: {kind: constant, eta: 1000}
)");
    auto dir = testutil::scratchDir("exp-abort");
    auto res = runExperiment(cfg, dir);
    REQUIRE(res.cells[0].curves[0].aborted);
    REQUIRE(res.cells[0].aggregates.empty());
    REQUIRE_FALSE(fs::exists(dir / "aggregate.csv"));
    REQUIRE(fs::exists(dir / "riskcurves.csv"));
    const auto& aborts = res.manifest["cells"][0]["aborts"];
    REQUIRE(aborts.size() == 1);
    REQUIRE(aborts[0]["algorithm"] == "sgd");
    REQUIRE(aborts[0]["step"].get<long>() >= 0);
}

TEST_CASE("ingest recovers the planted regression") {
    Rng rng(2024);
    const int n = 2000, d = 5;
    Eigen::VectorXd lam(d);
    lam << 0.5, 0.8, 1.0, 1.5, 2.0;
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = std::sqrt(lam[j]) * rng.normal();
    Eigen::VectorXd thetaTrue(d);
    thetaTrue << 1.0, -2.0, 0.5, 0.0, 3.0;
    Eigen::VectorXd y = X * thetaTrue;
    for (int i = 0; i < n; ++i) y[i] += 0.3 * rng.normal();

    auto res = ingestDataset(X, y, {});
    REQUIRE((res.thetaStar - thetaTrue).cwiseAbs().maxCoeff() < 0.05);
    REQUIRE(res.residualStd == Catch::Approx(0.3).epsilon(0.02));
    REQUIRE(res.covariance.trace() == Catch::Approx(lam.sum()).epsilon(0.1));
    REQUIRE(res.residuals.size() == n);
    // the floored empirical covariance must clear the SPD gate downstream
    REQUIRE_NOTHROW(buildCovariance(CovarianceSpec::explicitMatrix(res.covariance)));

    // single-component fit takes the closed-form path
    auto r1 = ingestDataset(X, y, {0.0, 1, 0});
    REQUIRE(r1.fit.iterations == 0);
    REQUIRE(r1.fit.converged);
    REQUIRE(r1.noise.components.size() == 1);
    REQUIRE(r1.noise.components[0].weight == 1.0);
    REQUIRE(r1.noise.components[0].std ==
            Catch::Approx(r1.residualStd * std::sqrt(double(n - 1) / n)).epsilon(1e-12));
}

TEST_CASE("ingest separates bimodal residuals with a two-component fit") {
    Rng rng(2024), mix(77);
    const int n = 2000, d = 5;
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd thetaTrue = Eigen::VectorXd::LinSpaced(d, -1.0, 1.0);
    Eigen::VectorXd y = X * thetaTrue;
    for (int i = 0; i < n; ++i)
        y[i] += (mix.uniform() < 0.5 ? -1.0 : 1.0) + 0.2 * mix.normal();

    auto res = ingestDataset(X, y, {0.0, 2, 3});
    REQUIRE(res.fit.converged);
    REQUIRE(res.noise.components.size() == 2);
    REQUIRE(res.noise.components[0].mean == Catch::Approx(-1.0).margin(0.05));
    REQUIRE(res.noise.components[1].mean == Catch::Approx(1.0).margin(0.05));
    REQUIRE(res.noise.components[0].weight == Catch::Approx(0.5).margin(0.05));
    REQUIRE(res.noise.components[0].std == Catch::Approx(0.2).margin(0.05));
    REQUIRE(res.noise.components[1].std == Catch::Approx(0.2).margin(0.05));
}

TEST_CASE("ingest guards its inputs") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Random(10);
    REQUIRE_THROWS_AS(ingestDataset(X, Eigen::VectorXd::Random(9), {}), ConfigError);
    REQUIRE_THROWS_AS(ingestDataset(Eigen::MatrixXd::Random(1, 2), Eigen::VectorXd::Random(1), {}),
                      ConfigError);
    REQUIRE_THROWS_AS(ingestDataset(X, y, {-1.0, 2, 0}), ConfigError);
    REQUIRE_THROWS_AS(ingestDataset(X, y, {0.0, 0, 0}), ConfigError);

    // a non-finite solve must not leak into the outputs
    Eigen::MatrixXd Xbad = X;
    Xbad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_WITH(ingestDataset(Xbad, y, {}), ContainsSubstring("ridgeLambda"));
}

TEST_CASE("duplicate features resolve symmetrically under ridge") {
    Rng rng(5);
    const int n = 300;
    Eigen::MatrixXd X(n, 3);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = X(i, 0);
        X(i, 2) = rng.normal();
    }
    Eigen::VectorXd y = X.col(0) + X.col(2);
    auto res = ingestDataset(X, y, {1e-3, 1, 0});
    // ridge splits the shared coefficient evenly across the twin columns
    REQUIRE(res.thetaStar[0] == Catch::Approx(0.5).margin(1e-3));
    REQUIRE(res.thetaStar[1] == Catch::Approx(0.5).margin(1e-3));
    REQUIRE(res.thetaStar[2] == Catch::Approx(1.0).margin(1e-3));
    REQUIRE(res.residualStd < 1e-4);
}
