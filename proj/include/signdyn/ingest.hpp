#pragma once

// Dataset ingestion: estimate thetaStar by ridge regression, form the
// empirical covariance (symmetrized, eigenvalue-floored so downstream SPD
// checks pass), and fit the residual noise with a Gaussian mixture.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signdyn/covariance.hpp"
#include "signdyn/noise.hpp"

namespace signdyn {

struct IngestOptions {
    double ridgeLambda = 0.0;
    int gmmComponents = 2;
    std::uint64_t seed = 0;
};

struct IngestResult {
    MatrixXd covariance;   // X^T X / n after symmetrize + floor
    VectorXd thetaStar;
    VectorXd residuals;    // y - X thetaStar
    NoiseModel noise;
    GmmFit fit;
    double residualStd = 0.0;
};

inline IngestResult ingestDataset(const MatrixXd& X, const VectorXd& y,
                                  const IngestOptions& opts = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n != y.size()) throw ConfigError("ingest: rows(data) != rows(targets)");
    if (n < 2 || d < 1) throw ConfigError("ingest: need at least 2 samples and 1 feature");
    if (opts.ridgeLambda < 0) throw ConfigError("ingest: ridgeLambda must be >= 0");
    if (opts.gmmComponents < 1) throw ConfigError("ingest: gmm components must be >= 1");

    MatrixXd gram = X.transpose() * X;
    gram = 0.5 * (gram + gram.transpose().eval());
    const VectorXd rhs = X.transpose() * y;

    MatrixXd system = gram;
    system.diagonal().array() += opts.ridgeLambda;
    Eigen::LDLT<MatrixXd> ldlt(system);
    VectorXd theta = ldlt.solve(rhs);
    // LDLT rarely reports failure on semidefinite input; verify the solve.
    const double scale = std::max(rhs.norm(), 1.0);
    if (ldlt.info() != Eigen::Success || !theta.allFinite() ||
        (system * theta - rhs).norm() > 1e-8 * scale) {
        if (opts.ridgeLambda == 0.0)
            throw ConfigError(
                "ingest: normal equations are singular; set ridgeLambda > 0 to regularize");
        throw ConfigError("ingest: ridge system did not solve; increase ridgeLambda");
    }

    IngestResult out;
    out.thetaStar = theta;
    out.residuals = y - X * theta;
    const double mean = out.residuals.mean();
    out.residualStd =
        std::sqrt((out.residuals.array() - mean).square().sum() / double(n - 1));

    // Empirical second-moment matrix, floored so it is strictly positive
    // definite for buildCovariance.
    MatrixXd C = gram / double(n);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw std::runtime_error("ingest: eigensolver failed");
    const double floor = 1e-10 * C.trace() / double(d);
    VectorXd ev = es.eigenvalues().cwiseMax(floor);
    out.covariance = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());

    std::vector<double> res(out.residuals.data(), out.residuals.data() + n);
    if (opts.gmmComponents == 1) {
        // Single Gaussian: closed-form ML fit, reported in the same shape.
        const double var = (out.residuals.array() - mean).square().sum() / double(n);
        const double sd = std::sqrt(std::max(var, 1e-300));
        out.fit.model = NoiseModel::gmm({{1.0, mean, sd}});
        double ll = 0.0;
        for (double r : res) {
            const double z = (r - mean) / sd;
            ll += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
        }
        out.fit.logLikelihood = ll;
        out.fit.iterations = 0;
        out.fit.restarts = 0;
        out.fit.converged = true;
    } else {
        out.fit = fitGmm(res, opts.gmmComponents, opts.seed);
    }
    out.noise = out.fit.model;
    return out;
}

}  // namespace signdyn
