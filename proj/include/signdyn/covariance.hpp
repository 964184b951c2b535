#pragma once

// Covariance structures for the streaming regression model.
//
// From a positive definite data covariance K we precompute every derived
// matrix the dynamics need:
//   D       = sqrt(diag(K))                 (stored as a vector)
//   Kbar    = D^{-1} K                      (nonsymmetric, real positive spectrum)
//   Ksigma  = [ arcsin(K_ij / sqrt(K_ii K_jj)) ]_ij, diagonal pinned to pi/2
//   sqrtK   = symmetric PSD square root of K
//   sqrtKsigma = symmetric PSD square root of Ksigma
//
// Kbar is similar to the symmetric M = D^{-1/2} K D^{-1/2}; all spectral
// work routes through M so eigenvalues stay real and the left/right
// eigenvector pair (w_i, u_i) is exactly biorthogonal by construction.

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signdyn/common.hpp"
#include "signdyn/rng.hpp"

namespace signdyn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct CovarianceSpec {
    enum class Kind {
        Identity,
        ScaledIsotropic,      // alpha * I
        DiagonalGrid,         // diag(uniform grid [lo,hi] raised to exponent)
        RandomBasisLogspace,  // Q diag(logspace(lo,hi)) Q^T, Q Haar
        ExplicitMatrix,
        Counterexample4x4,
    };

    Kind kind = Kind::Identity;
    int dim = 0;
    double alpha = 1.0;     // ScaledIsotropic
    double lo = 0.0;        // DiagonalGrid / RandomBasisLogspace
    double hi = 0.0;
    double exponent = 1.0;  // DiagonalGrid
    std::uint64_t seed = 0; // RandomBasisLogspace
    MatrixXd matrix;        // ExplicitMatrix

    static CovarianceSpec identity(int d) {
        CovarianceSpec s; s.kind = Kind::Identity; s.dim = d; return s;
    }
    static CovarianceSpec scaledIsotropic(int d, double alpha) {
        CovarianceSpec s; s.kind = Kind::ScaledIsotropic; s.dim = d; s.alpha = alpha; return s;
    }
    static CovarianceSpec diagonalGrid(int d, double lo, double hi, double exponent) {
        CovarianceSpec s; s.kind = Kind::DiagonalGrid; s.dim = d;
        s.lo = lo; s.hi = hi; s.exponent = exponent; return s;
    }
    static CovarianceSpec randomBasisLogspace(int d, double lo, double hi, std::uint64_t seed) {
        CovarianceSpec s; s.kind = Kind::RandomBasisLogspace; s.dim = d;
        s.lo = lo; s.hi = hi; s.seed = seed; return s;
    }
    static CovarianceSpec explicitMatrix(MatrixXd K) {
        CovarianceSpec s; s.kind = Kind::ExplicitMatrix; s.dim = int(K.rows());
        s.matrix = std::move(K); return s;
    }
    static CovarianceSpec counterexample4x4() {
        CovarianceSpec s; s.kind = Kind::Counterexample4x4; s.dim = 4; return s;
    }
};

struct CovarianceModel {
    int dim = 0;
    MatrixXd K;
    VectorXd Ddiag;       // D_ii = sqrt(K_ii)
    MatrixXd Kbar;        // D^{-1} K
    MatrixXd Ksigma;
    MatrixXd sqrtK;
    MatrixXd sqrtKsigma;
    // True when K is a multiple of the identity; simulators then sample
    // x = sqrt(alpha) z without a matrix product.
    bool isotropic = false;
    double isotropicScale = 1.0;

    double trK() const { return K.trace(); }
    double trD() const { return Ddiag.sum(); }          // equals Tr(Kbar)
    double trDKsigma() const {                          // = (pi/2) Tr(D) exactly
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += Ddiag(i) * Ksigma(i, i);
        return s;
    }
};

// Biorthogonal eigensystem of Kbar. Column i of U (resp. W) is the right
// (resp. left) eigenvector for eigenvalue(i); eigenvalues ascending and
// W^T U = I exactly up to the orthogonality of the underlying symmetric
// eigenbasis.
struct SpectralData {
    VectorXd eigenvalues;
    MatrixXd U;  // right eigenvectors, u_i = D^{-1/2} q_i
    MatrixXd W;  // left eigenvectors,  w_i = D^{1/2} q_i
    MatrixXd Q;  // orthonormal eigenbasis of D^{-1/2} K D^{-1/2}
};

// Plain symmetric eigensystem (used for K itself in the SGD dynamics).
struct SymmetricSpectrum {
    VectorXd eigenvalues;
    MatrixXd Q;
};

inline SymmetricSpectrum symmetricSpectrum(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("symmetricSpectrum: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// PSD square root via eigendecomposition. Eigenvalues in
/// [-clipTol*|lambda|_max, 0) are clipped to zero; anything below that is an
/// error because the input is not plausibly PSD.
inline MatrixXd sqrtPsd(const MatrixXd& M, double clipTol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw std::runtime_error("sqrtPsd: eigensolver failed");
    VectorXd ev = es.eigenvalues();
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    VectorXd root(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -clipTol * scale)
            throw std::runtime_error("sqrtPsd: eigenvalue " + std::to_string(ev(i)) +
                                     " below -clipTol*scale; input not PSD");
        root(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    MatrixXd S = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (S + S.transpose());
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
/// of R's diagonal fixed so the distribution is exactly uniform.
inline MatrixXd haarOrthogonal(int d, Rng& rng) {
    MatrixXd G(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) G(i, j) = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(G);
    MatrixXd Q = qr.householderQ();
    MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    return Q;
}

inline MatrixXd loadMatrixCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix CSV: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("matrix CSV: bad numeric cell '" + cell + "' in " + path);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("matrix CSV: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("matrix CSV: empty file " + path);
    MatrixXd M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) M(i, j) = rows[i][j];
    return M;
}

namespace detail {

inline MatrixXd counterexampleMatrix() {
    MatrixXd K(4, 4);
    K << 0.17, -0.49, -0.19, -0.36,
        -0.49,  2.34,  0.71,  1.79,
        -0.19,  0.71,  0.32,  0.53,
        -0.36,  1.79,  0.53,  1.44;
    return K;
}

inline MatrixXd assembleK(const CovarianceSpec& spec) {
    using Kind = CovarianceSpec::Kind;
    switch (spec.kind) {
        case Kind::Identity:
            if (spec.dim <= 0) throw ConfigError("covariance: dim must be positive");
            return MatrixXd::Identity(spec.dim, spec.dim);
        case Kind::ScaledIsotropic:
            if (spec.dim <= 0) throw ConfigError("covariance: dim must be positive");
            if (spec.alpha <= 0) throw ConfigError("covariance: alpha must be positive");
            return spec.alpha * MatrixXd::Identity(spec.dim, spec.dim);
        case Kind::DiagonalGrid: {
            if (spec.dim <= 0) throw ConfigError("covariance: dim must be positive");
            if (spec.lo <= 0 || spec.hi <= 0)
                throw ConfigError("covariance: grid endpoints must be positive");
            auto grid = linspace(spec.lo, spec.hi, spec.dim);
            MatrixXd K = MatrixXd::Zero(spec.dim, spec.dim);
            for (int i = 0; i < spec.dim; ++i) K(i, i) = std::pow(grid[i], spec.exponent);
            return K;
        }
        case Kind::RandomBasisLogspace: {
            if (spec.dim <= 0) throw ConfigError("covariance: dim must be positive");
            if (spec.lo <= 0 || spec.hi <= 0)
                throw ConfigError("covariance: logspace endpoints must be positive");
            Rng rng(deriveSeed(spec.seed, {0xC0Fu}));
            MatrixXd Q = haarOrthogonal(spec.dim, rng);
            auto ev = logspace(spec.lo, spec.hi, spec.dim);
            MatrixXd K = Q * Eigen::Map<VectorXd>(ev.data(), spec.dim).asDiagonal() * Q.transpose();
            return 0.5 * (K + K.transpose());
        }
        case Kind::ExplicitMatrix:
            if (spec.matrix.rows() == 0 || spec.matrix.rows() != spec.matrix.cols())
                throw ConfigError("covariance: explicit matrix must be square and nonempty");
            return spec.matrix;
        case Kind::Counterexample4x4:
            return counterexampleMatrix();
    }
    throw ConfigError("covariance: unknown kind");
}

}  // namespace detail

/// Validates K (symmetric within 1e-12 relative, positive definite) and
/// precomputes D, Kbar, Ksigma and both PSD square roots.
inline CovarianceModel buildCovariance(const CovarianceSpec& spec) {
    MatrixXd K = detail::assembleK(spec);
    const int d = int(K.rows());

    const double kScale = K.cwiseAbs().maxCoeff();
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(kScale, 1.0))
        throw ConfigError("covariance: matrix not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
    K = 0.5 * (K + K.transpose());

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
    if (es.info() != Eigen::Success) throw std::runtime_error("covariance: eigensolver failed");
    const double lmin = es.eigenvalues()(0);
    if (lmin <= 0)
        throw ConfigError("covariance: matrix not positive definite (min eigenvalue " +
                          std::to_string(lmin) + ")");

    CovarianceModel m;
    m.dim = d;
    m.K = K;
    m.Ddiag = K.diagonal().cwiseSqrt();
    m.Kbar = m.Ddiag.cwiseInverse().asDiagonal() * K;

    m.Ksigma.resize(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) {
            double c = K(i, j) / (m.Ddiag(i) * m.Ddiag(j));
            c = std::clamp(c, -1.0, 1.0);
            m.Ksigma(i, j) = m.Ksigma(j, i) = std::asin(c);
        }
        m.Ksigma(i, i) = std::numbers::pi / 2;  // arcsin(1), pinned exactly
    }

    m.sqrtK = es.eigenvectors() *
              es.eigenvalues().cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
    m.sqrtK = 0.5 * (m.sqrtK + m.sqrtK.transpose());
    m.sqrtKsigma = sqrtPsd(m.Ksigma, 1e-10);

    using Kind = CovarianceSpec::Kind;
    if (spec.kind == Kind::Identity || spec.kind == Kind::ScaledIsotropic) {
        m.isotropic = true;
        m.isotropicScale = (spec.kind == Kind::Identity) ? 1.0 : spec.alpha;
    }
    return m;
}

/// Eigensystem of Kbar through the symmetric similarity
/// M = D^{-1/2} K D^{-1/2}: u_i = D^{-1/2} q_i, w_i = D^{1/2} q_i.
inline SpectralData spectralDecompose(const CovarianceModel& model) {
    const int d = model.dim;
    VectorXd dHalf = model.Ddiag.cwiseSqrt();
    MatrixXd M = dHalf.cwiseInverse().asDiagonal() * model.K * dHalf.cwiseInverse().asDiagonal();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectralDecompose: eigensolver failed");
    SpectralData s;
    s.eigenvalues = es.eigenvalues();
    s.Q = es.eigenvectors();
    s.U = dHalf.cwiseInverse().asDiagonal() * s.Q;
    s.W = dHalf.asDiagonal() * s.Q;
    (void)d;
    return s;
}

/// Average condition number Tr(M) / (d * lambda_min). The spectrum must be
/// real and positive; for Kbar pass its eigenvalues from spectralDecompose.
inline double avgConditionNumber(const VectorXd& eigenvalues) {
    const double lmin = eigenvalues.minCoeff();
    if (lmin <= 0)
        throw std::invalid_argument("avgConditionNumber: spectrum must be positive (min " +
                                    std::to_string(lmin) + ")");
    return eigenvalues.sum() / (double(eigenvalues.size()) * lmin);
}

inline double avgConditionNumber(const MatrixXd& M) {
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym <= 1e-12 * std::max(M.cwiseAbs().maxCoeff(), 1.0))
        return avgConditionNumber(symmetricSpectrum(0.5 * (M + M.transpose())).eigenvalues);
    Eigen::EigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("avgConditionNumber: eigensolver failed");
    VectorXd re = es.eigenvalues().real();
    const double imagMax = es.eigenvalues().imag().cwiseAbs().maxCoeff();
    if (imagMax > 1e-8 * std::max(re.cwiseAbs().maxCoeff(), 1.0))
        throw std::invalid_argument("avgConditionNumber: spectrum not real");
    return avgConditionNumber(re);
}

/// Classical condition number sigma_max / sigma_min.
inline double conditionNumber(const MatrixXd& M) {
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0) throw std::invalid_argument("conditionNumber: singular matrix");
    return sv(0) / smin;
}

/// Largest off-diagonal modulus of the resolvent (Kbar - zI)^{-1} sampled on
/// the circle |z| = 2 * spectralRadius(Kbar). Numerically singular shifts are
/// skipped with a warning on stderr.
inline double resolventOffdiagDiagnostic(const CovarianceModel& model, int nGridPoints = 16) {
    if (nGridPoints < 1) throw ConfigError("resolventOffdiagDiagnostic: need >= 1 grid point");
    const int d = model.dim;
    SpectralData s = spectralDecompose(model);
    const double radius = 2.0 * s.eigenvalues(d - 1);
    Eigen::MatrixXcd Kc = model.Kbar.cast<std::complex<double>>();
    double worst = 0.0;
    for (int k = 0; k < nGridPoints; ++k) {
        const double th = 2.0 * std::numbers::pi * double(k) / double(nGridPoints);
        const std::complex<double> z = radius * std::complex<double>(std::cos(th), std::sin(th));
        Eigen::MatrixXcd A = Kc - z * Eigen::MatrixXcd::Identity(d, d);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        Eigen::MatrixXcd R = lu.solve(Eigen::MatrixXcd::Identity(d, d));
        if (!R.allFinite()) {
            std::cerr << "resolventOffdiagDiagnostic: skipping numerically singular shift z="
                      << z << "\n";
            continue;
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) worst = std::max(worst, std::abs(R(i, j)));
    }
    return worst;
}

}  // namespace signdyn
