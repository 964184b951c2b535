#pragma once

// Experiment configuration: a YAML file with nested sections, overridable
// from the command line with dotted keys (--override schedule.eta=0.5).
// Unknown keys and unknown algorithm tags are rejected outright; silent
// typos in a config that drives hours of simulation are worse than errors.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "signdyn/covariance.hpp"
#include "signdyn/noise.hpp"
#include "signdyn/schedule.hpp"
#include "signdyn/simulate.hpp"

namespace signdyn {

inline const std::vector<std::string>& knownAlgorithms() {
    static const std::vector<std::string> tags = {
        "signsgd",  "sgd",     "sgd-efflr",    "sign-hsgd",   "vanilla-hsgd", "hadam",
        "ode-sign", "ode-sgd", "ode-iso-sign", "ode-iso-sgd", "greedy-sign",  "greedy-sgd"};
    return tags;
}

inline bool isOdeAlgorithm(const std::string& tag) { return tag.rfind("ode-", 0) == 0; }
inline bool isGreedyAlgorithm(const std::string& tag) { return tag.rfind("greedy-", 0) == 0; }
inline bool needsIsotropic(const std::string& tag) {
    return tag == "ode-iso-sign" || tag == "ode-iso-sgd" || isGreedyAlgorithm(tag);
}

/// sign-family algorithms see the preconditioned curvature Kbar, so the
/// trace-normalized rate divides by Tr(Kbar) = Tr(D) instead of Tr(K).
inline bool isSignFamily(const std::string& tag) {
    return tag == "signsgd" || tag == "sign-hsgd" || tag == "hadam" || tag == "ode-sign" ||
           tag == "ode-iso-sign" || tag == "greedy-sign";
}

struct CovarianceConfig {
    std::string kind = "identity";
    double alpha = 1.0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> exponents = {1.0};
    std::string path;  // explicit-csv
};

struct ThetaConfig {
    std::string kind = "zero";  // zero | unit-random | risk-scaled
    double risk = 0.0;
};

struct ScheduleConfig {
    std::string kind = "constant";  // constant | piecewise-linear
    std::vector<double> etas = {0.1};
    std::vector<std::pair<double, double>> points;
    bool traceNormalized = false;
};

struct AnalysisToggles {
    bool limitRisk = false;
    bool stationary = false;
    bool precond = false;
    bool envelope = false;
    bool psiCurve = false;
    bool phiCurve = false;
    double envelopeC = 0.1;
    double curveRMin = 1e-3;
    double curveRMax = 1e2;
    int curvePoints = 50;
};

struct ExperimentConfig {
    std::vector<std::string> algorithms;
    std::vector<int> dims = {100};
    double T = 10.0;
    int runs = 1;
    std::uint64_t seed = 1;
    int recordStride = 0;  // 0 -> d
    int workers = 0;       // 0 -> hardware concurrency
    std::string outputDir;
    CovarianceConfig covariance;
    NoiseModel noise = NoiseModel::zero();
    ThetaConfig thetaStar{"unit-random", 0.0};
    ThetaConfig theta0{"zero", 0.0};
    ScheduleConfig schedule;
    AnalysisToggles analysis;
};

namespace detail {

inline void checkKeys(const YAML::Node& node, const std::string& section,
                      const std::set<std::string>& allowed) {
    if (!node.IsDefined() || node.IsNull()) return;
    if (!node.IsMap()) throw ConfigError("config: '" + section + "' must be a map");
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + key + "' in " + section);
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const T& fallback) {
    if (!node.IsDefined() || !node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

template <typename T>
T require(const YAML::Node& node, const std::string& key) {
    if (!node.IsDefined() || !node[key]) throw ConfigError("config: missing key '" + key + "'");
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

}  // namespace detail

inline NoiseModel parseNoiseNode(const YAML::Node& node) {
    using detail::get;
    if (!node.IsDefined() || node.IsNull()) return NoiseModel::zero();
    detail::checkKeys(node, "noise",
                      {"kind", "std", "scale", "half_width", "lambda", "location", "df",
                       "weights", "means", "stds"});
    const std::string kind = get<std::string>(node, "kind", "zero");
    if (kind == "zero") return NoiseModel::zero();
    if (kind == "gaussian") return NoiseModel::gaussian(detail::require<double>(node, "std"));
    if (kind == "rademacher")
        return NoiseModel::rademacher(detail::require<double>(node, "scale"));
    if (kind == "uniform")
        return NoiseModel::uniform(detail::require<double>(node, "half_width"));
    if (kind == "sqrt-levy") return NoiseModel::sqrtLevy(detail::require<double>(node, "lambda"));
    if (kind == "cauchy")
        return NoiseModel::cauchy(get<double>(node, "location", 0.0),
                                  detail::require<double>(node, "scale"));
    if (kind == "student-t")
        return NoiseModel::studentT(detail::require<double>(node, "df"),
                                    get<double>(node, "scale", 1.0));
    if (kind == "gmm") {
        auto w = detail::require<std::vector<double>>(node, "weights");
        auto mu = detail::require<std::vector<double>>(node, "means");
        auto s = detail::require<std::vector<double>>(node, "stds");
        if (w.size() != mu.size() || w.size() != s.size())
            throw ConfigError("noise: gmm weights/means/stds lengths differ");
        std::vector<GmmComponent> comps;
        for (std::size_t i = 0; i < w.size(); ++i) comps.push_back({w[i], mu[i], s[i]});
        return NoiseModel::gmm(std::move(comps));
    }
    throw ConfigError("noise: unknown kind '" + kind + "'");
}

/// Compact one-string noise spec for CLI flags, e.g. "gaussian:1",
/// "cauchy:2:1", "gmm:0.5,-0.76,0.42;0.5,0.75,0.41".
inline NoiseModel parseNoiseString(const std::string& s) {
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
    const std::string kind = parts[0];
    auto num = [&](std::size_t i) {
        if (i >= parts.size())
            throw ConfigError("noise spec '" + s + "': missing parameter");
        try {
            std::size_t pos = 0;
            double v = std::stod(parts[i], &pos);
            if (pos != parts[i].size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("noise spec '" + s + "': bad number '" + parts[i] + "'");
        }
    };
    if (kind == "zero") return NoiseModel::zero();
    if (kind == "gaussian") return NoiseModel::gaussian(num(1));
    if (kind == "rademacher") return NoiseModel::rademacher(num(1));
    if (kind == "uniform") return NoiseModel::uniform(num(1));
    if (kind == "sqrt-levy") return NoiseModel::sqrtLevy(num(1));
    if (kind == "cauchy") return NoiseModel::cauchy(num(1), num(2));
    if (kind == "student-t") return NoiseModel::studentT(num(1), parts.size() > 2 ? num(2) : 1.0);
    if (kind == "gmm") {
        if (parts.size() != 2) throw ConfigError("noise spec '" + s + "': gmm wants w,m,s;...");
        std::vector<GmmComponent> comps;
        std::string comp;
        std::istringstream body(parts[1]);
        while (std::getline(body, comp, ';')) {
            std::istringstream cs(comp);
            std::string tok;
            std::vector<double> vals;
            while (std::getline(cs, tok, ',')) {
                try {
                    vals.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ConfigError("noise spec '" + s + "': bad gmm number '" + tok + "'");
                }
            }
            if (vals.size() != 3)
                throw ConfigError("noise spec '" + s + "': each gmm component is w,mean,std");
            comps.push_back({vals[0], vals[1], vals[2]});
        }
        return NoiseModel::gmm(std::move(comps));
    }
    throw ConfigError("noise spec '" + s + "': unknown kind '" + kind + "'");
}

inline ThetaSpec toThetaSpec(const ThetaConfig& tc) {
    if (tc.kind == "zero") return ThetaSpec::zero();
    if (tc.kind == "unit-random") return ThetaSpec::unitRandom();
    if (tc.kind == "risk-scaled") return ThetaSpec::riskScaled(tc.risk);
    throw ConfigError("theta: unknown kind '" + tc.kind + "'");
}

/// Materializes the covariance spec for one sweep cell.
inline CovarianceSpec covarianceSpecFor(const CovarianceConfig& cc, int dim, double exponent,
                                        std::uint64_t seed) {
    if (cc.kind == "identity") return CovarianceSpec::identity(dim);
    if (cc.kind == "scaled-isotropic") return CovarianceSpec::scaledIsotropic(dim, cc.alpha);
    if (cc.kind == "diagonal-grid")
        return CovarianceSpec::diagonalGrid(dim, cc.lo, cc.hi, exponent);
    if (cc.kind == "random-basis-logspace")
        return CovarianceSpec::randomBasisLogspace(dim, cc.lo, cc.hi, seed);
    if (cc.kind == "explicit-csv") return CovarianceSpec::explicitMatrix(loadMatrixCsv(cc.path));
    if (cc.kind == "counterexample4x4") return CovarianceSpec::counterexample4x4();
    throw ConfigError("covariance: unknown kind '" + cc.kind + "'");
}

inline ExperimentConfig parseExperimentConfig(const YAML::Node& root) {
    using detail::get;
    detail::checkKeys(root, "top level",
                      {"algorithms", "dims", "T", "runs", "seed", "record_stride", "workers",
                       "output_dir", "covariance", "noise", "theta_star", "theta0", "schedule",
                       "analysis"});
    ExperimentConfig cfg;
    cfg.algorithms = get<std::vector<std::string>>(root, "algorithms", {});
    for (const auto& tag : cfg.algorithms) {
        const auto& known = knownAlgorithms();
        if (std::find(known.begin(), known.end(), tag) == known.end()) {
            std::string msg = "config: unknown algorithm '" + tag + "'; known:";
            for (const auto& k : known) msg += " " + k;
            throw ConfigError(msg);
        }
    }
    cfg.dims = get<std::vector<int>>(root, "dims", cfg.dims);
    if (cfg.dims.empty()) throw ConfigError("config: dims must be nonempty");
    for (int d : cfg.dims)
        if (d < 1) throw ConfigError("config: dims entries must be positive");
    cfg.T = get<double>(root, "T", cfg.T);
    if (!(cfg.T > 0)) throw ConfigError("config: T must be positive");
    cfg.runs = get<int>(root, "runs", cfg.runs);
    if (cfg.runs < 1) throw ConfigError("config: runs must be >= 1");
    cfg.seed = get<std::uint64_t>(root, "seed", cfg.seed);
    cfg.recordStride = get<int>(root, "record_stride", 0);
    if (cfg.recordStride < 0) throw ConfigError("config: record_stride must be >= 0");
    cfg.workers = get<int>(root, "workers", 0);
    cfg.outputDir = get<std::string>(root, "output_dir", "");

    const YAML::Node cov = root["covariance"];
    detail::checkKeys(cov, "covariance",
                      {"kind", "alpha", "lo", "hi", "exponent", "exponents", "path"});
    if (cov.IsDefined() && !cov.IsNull()) {
        cfg.covariance.kind = get<std::string>(cov, "kind", "identity");
        cfg.covariance.alpha = get<double>(cov, "alpha", 1.0);
        cfg.covariance.lo = get<double>(cov, "lo", 0.0);
        cfg.covariance.hi = get<double>(cov, "hi", 0.0);
        cfg.covariance.path = get<std::string>(cov, "path", "");
        if (cov["exponent"] && cov["exponents"])
            throw ConfigError("covariance: give exponent or exponents, not both");
        if (cov["exponents"])
            cfg.covariance.exponents = detail::require<std::vector<double>>(cov, "exponents");
        else if (cov["exponent"])
            cfg.covariance.exponents = {detail::require<double>(cov, "exponent")};
        if (cfg.covariance.exponents.empty())
            throw ConfigError("covariance: exponents must be nonempty");
    }

    cfg.noise = parseNoiseNode(root["noise"]);

    auto parseTheta = [&](const char* key, const ThetaConfig& fallback) {
        const YAML::Node n = root[key];
        detail::checkKeys(n, key, {"kind", "risk"});
        if (!n.IsDefined() || n.IsNull()) return fallback;
        ThetaConfig tc;
        tc.kind = get<std::string>(n, "kind", fallback.kind);
        tc.risk = get<double>(n, "risk", 0.0);
        toThetaSpec(tc);  // validate eagerly
        return tc;
    };
    cfg.thetaStar = parseTheta("theta_star", cfg.thetaStar);
    cfg.theta0 = parseTheta("theta0", cfg.theta0);

    const YAML::Node sched = root["schedule"];
    detail::checkKeys(sched, "schedule", {"kind", "eta", "etas", "points", "trace_normalized"});
    if (sched.IsDefined() && !sched.IsNull()) {
        cfg.schedule.kind = get<std::string>(sched, "kind", "constant");
        cfg.schedule.traceNormalized = get<bool>(sched, "trace_normalized", false);
        if (sched["eta"] && sched["etas"])
            throw ConfigError("schedule: give eta or etas, not both");
        if (cfg.schedule.kind == "constant") {
            if (sched["etas"])
                cfg.schedule.etas = detail::require<std::vector<double>>(sched, "etas");
            else if (sched["eta"])
                cfg.schedule.etas = {detail::require<double>(sched, "eta")};
            if (cfg.schedule.etas.empty()) throw ConfigError("schedule: etas must be nonempty");
            for (double e : cfg.schedule.etas)
                if (!(e > 0)) throw ConfigError("schedule: eta must be positive");
        } else if (cfg.schedule.kind == "piecewise-linear") {
            if (sched["eta"] || sched["etas"])
                throw ConfigError("schedule: piecewise-linear takes points, not eta");
            if (cfg.schedule.traceNormalized)
                throw ConfigError("schedule: trace_normalized applies to constant schedules");
            auto raw = detail::require<std::vector<std::vector<double>>>(sched, "points");
            cfg.schedule.points.clear();
            for (const auto& p : raw) {
                if (p.size() != 2) throw ConfigError("schedule: each point is [t, eta]");
                cfg.schedule.points.emplace_back(p[0], p[1]);
            }
            Schedule::piecewiseLinear(cfg.schedule.points);  // validate eagerly
            cfg.schedule.etas = {0.0};                       // single non-swept cell
        } else {
            throw ConfigError("schedule: unknown kind '" + cfg.schedule.kind + "'");
        }
    }

    const YAML::Node an = root["analysis"];
    detail::checkKeys(an, "analysis",
                      {"limit_risk", "stationary", "precond", "envelope", "psi_curve",
                       "phi_curve", "envelope_c", "curve_rmin", "curve_rmax", "curve_points"});
    if (an.IsDefined() && !an.IsNull()) {
        cfg.analysis.limitRisk = get<bool>(an, "limit_risk", false);
        cfg.analysis.stationary = get<bool>(an, "stationary", false);
        cfg.analysis.precond = get<bool>(an, "precond", false);
        cfg.analysis.envelope = get<bool>(an, "envelope", false);
        cfg.analysis.psiCurve = get<bool>(an, "psi_curve", false);
        cfg.analysis.phiCurve = get<bool>(an, "phi_curve", false);
        cfg.analysis.envelopeC = get<double>(an, "envelope_c", 0.1);
        cfg.analysis.curveRMin = get<double>(an, "curve_rmin", 1e-3);
        cfg.analysis.curveRMax = get<double>(an, "curve_rmax", 1e2);
        cfg.analysis.curvePoints = get<int>(an, "curve_points", 50);
        if (!(cfg.analysis.curveRMin > 0) || cfg.analysis.curveRMax <= cfg.analysis.curveRMin)
            throw ConfigError("analysis: need 0 < curve_rmin < curve_rmax");
        if (cfg.analysis.curvePoints < 2) throw ConfigError("analysis: curve_points >= 2");
    }

    // Cross-field checks that need the whole picture.
    const bool fixedDim =
        cfg.covariance.kind == "explicit-csv" || cfg.covariance.kind == "counterexample4x4";
    if (fixedDim && cfg.dims.size() != 1)
        throw ConfigError("config: explicit covariance admits a single dims entry");
    if (cfg.covariance.kind != "diagonal-grid" && cfg.covariance.exponents.size() > 1)
        throw ConfigError("config: exponent sweeps need covariance kind diagonal-grid");
    const bool unitIso = cfg.covariance.kind == "identity" ||
                         (cfg.covariance.kind == "scaled-isotropic" && cfg.covariance.alpha == 1.0);
    for (const auto& tag : cfg.algorithms)
        if (needsIsotropic(tag) && !unitIso)
            throw ConfigError("config: algorithm '" + tag +
                              "' applies the K = I reduction; use identity covariance");
    return cfg;
}

inline ExperimentConfig loadExperimentConfig(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parseExperimentConfig(root);
}

/// Dotted-path override, value parsed as YAML ("schedule.eta=0.5",
/// "dims=[50,100]"). Keys containing dots are not addressable this way.
inline void applyOverride(YAML::Node root, const std::string& keyEqValue) {
    const auto eq = keyEqValue.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + keyEqValue + "': expected key=value");
    const std::string keyPath = keyEqValue.substr(0, eq);
    const std::string value = keyEqValue.substr(eq + 1);
    std::vector<std::string> segs;
    std::string cur;
    for (char c : keyPath) {
        if (c == '.') {
            segs.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    segs.push_back(cur);
    for (const auto& s : segs)
        if (s.empty()) throw ConfigError("override '" + keyEqValue + "': empty key segment");
    YAML::Node node = root;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        YAML::Node child = node[segs[i]];
        if (!child.IsDefined() || child.IsNull()) {
            node[segs[i]] = YAML::Node(YAML::NodeType::Map);
            child = node[segs[i]];
        }
        node.reset(child);
    }
    try {
        node[segs.back()] = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError("override '" + keyEqValue + "': bad value: " + e.what());
    }
}

}  // namespace signdyn
