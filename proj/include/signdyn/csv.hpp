#pragma once

// CSV emission and small readers. All floats go through formatDouble so a
// rerun with the same seed reproduces files byte for byte.
//
// Schemas:
//   riskcurves.csv  algorithm,run_id,time,risk
//   aggregate.csv   algorithm,time,mean,qlo,qhi     (quantiles 0.1 / 0.9)
//   greedy_eta.csv  algorithm,time,eta_star
//   envelope.csv    time,bound
//   curves.csv      risk,phi,psi

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "signdyn/common.hpp"
#include "signdyn/ode.hpp"
#include "signdyn/simulate.hpp"

namespace signdyn {

inline std::ofstream openOutputFile(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

/// ODE/greedy solutions ride in the RiskCurve schema under their ode:* tag.
inline RiskCurve toRiskCurve(const OdeSolution& sol) {
    RiskCurve c;
    c.algorithm = sol.label;
    c.runId = 0;
    c.times = sol.times;
    c.risk = sol.risk;
    return c;
}

inline void writeRiskCurvesCsv(const std::filesystem::path& path,
                               const std::vector<RiskCurve>& curves) {
    std::ofstream out = openOutputFile(path);
    out << "algorithm,run_id,time,risk\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.times.size(); ++i)
            out << c.algorithm << ',' << c.runId << ',' << formatDouble(c.times[i]) << ','
                << formatDouble(c.risk[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeAggregateCsv(const std::filesystem::path& path,
                              const std::vector<Aggregate>& aggregates, double qlo = 0.1,
                              double qhi = 0.9) {
    std::ofstream out = openOutputFile(path);
    out << "algorithm,time,mean,qlo,qhi\n";
    for (const auto& a : aggregates) {
        const auto& lo = a.quantiles.at(qlo);
        const auto& hi = a.quantiles.at(qhi);
        for (std::size_t i = 0; i < a.times.size(); ++i)
            out << a.algorithm << ',' << formatDouble(a.times[i]) << ','
                << formatDouble(a.mean[i]) << ',' << formatDouble(lo[i]) << ','
                << formatDouble(hi[i]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeGreedyEtaCsv(const std::filesystem::path& path,
                              const std::vector<OdeSolution>& greedy) {
    std::ofstream out = openOutputFile(path);
    out << "algorithm,time,eta_star\n";
    for (const auto& g : greedy)
        for (std::size_t i = 0; i < g.times.size(); ++i)
            out << g.label << ',' << formatDouble(g.times[i]) << ','
                << formatDouble(g.eta[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeEnvelopeCsv(const std::filesystem::path& path,
                             const std::vector<double>& times,
                             const std::vector<double>& bounds) {
    if (times.size() != bounds.size()) throw ConfigError("envelope csv: length mismatch");
    std::ofstream out = openOutputFile(path);
    out << "time,bound\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        out << formatDouble(times[i]) << ',' << formatDouble(bounds[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeCurvesCsv(const std::filesystem::path& path, const std::vector<double>& grid,
                           const std::vector<double>& phis, const std::vector<double>& psis) {
    if (grid.size() != phis.size() || grid.size() != psis.size())
        throw ConfigError("curves csv: length mismatch");
    std::ofstream out = openOutputFile(path);
    out << "risk,phi,psi\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out << formatDouble(grid[i]) << ',' << formatDouble(phis[i]) << ','
            << formatDouble(psis[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeVectorCsv(const std::filesystem::path& path, const VectorXd& v) {
    std::ofstream out = openOutputFile(path);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << formatDouble(v(i)) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline void writeMatrixCsv(const std::filesystem::path& path, const MatrixXd& m) {
    std::ofstream out = openOutputFile(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << formatDouble(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// Single-column numeric CSV (no header), e.g. regression targets.
inline std::vector<double> readColumnCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(line, &pos);
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ": bad number at line " +
                              std::to_string(lineNo));
        }
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\r')) ++pos;
        if (pos != line.size())
            throw ConfigError(path.string() + ": expected a single column at line " +
                              std::to_string(lineNo));
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(path.string() + ": no rows");
    return out;
}

inline std::string readFileBytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace signdyn
