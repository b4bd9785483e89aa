#include "recodmd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "recodmd/error.hpp"

namespace recodmd {

Matrix SvdResult::reconstruct() const {
    return u * s.asDiagonal() * vt;
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
    if (!m.allFinite()) {
        throw Error(ErrorKind::InvalidInput, std::string(what) + " contains NaN or Inf");
    }
}

SvdResult svd(const Matrix& m) {
    if (m.rows() < 1 || m.cols() < 1) {
        throw Error(ErrorKind::InvalidShape, "svd of an empty matrix");
    }
    require_finite(m, "svd input");

    Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure,
                    "Jacobi SVD did not converge after " +
                        std::to_string(2 * std::max<Index>(m.rows(), m.cols())) + " sweeps");
    }

    SvdResult out;
    out.u = solver.matrixU();
    out.s = solver.singularValues();
    out.vt = solver.matrixV().transpose();
    out.rank = out.s.size();

    // Fix the sign ambiguity: largest-magnitude entry of each left vector is positive.
    for (Index j = 0; j < out.rank; ++j) {
        Index imax = 0;
        out.u.col(j).cwiseAbs().maxCoeff(&imax);
        if (out.u(imax, j) < 0.0) {
            out.u.col(j) *= -1.0;
            out.vt.row(j) *= -1.0;
        }
    }
    return out;
}

Index effective_rank(const Vector& s, double rel_tol) {
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    const double cutoff = rel_tol * s(0);
    Index k = 0;
    while (k < s.size() && s(k) > cutoff) ++k;
    return k;
}

SvdResult truncate_svd(const SvdResult& full, Index rank) {
    if (rank < 1 || rank > full.rank) {
        throw Error(ErrorKind::InvalidRank, "requested rank " + std::to_string(rank) +
                                                " outside [1, " + std::to_string(full.rank) + "]");
    }
    const Index keep = std::min(rank, effective_rank(full.s));
    SvdResult out;
    out.u = full.u.leftCols(keep);
    out.s = full.s.head(keep);
    out.vt = full.vt.topRows(keep);
    out.rank = keep;
    return out;
}

Matrix pinv(const Matrix& m, double rel_tol) {
    require_finite(m, "pinv input");
    if (rel_tol < 0.0) {
        throw Error(ErrorKind::InvalidInput, "pinv tolerance must be non-negative");
    }
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());

    const SvdResult f = svd(m);
    const Index k = effective_rank(f.s, rel_tol);
    if (k == 0) return Matrix::Zero(m.cols(), m.rows());
    const Vector inv_s = f.s.head(k).cwiseInverse();
    return f.vt.topRows(k).transpose() * inv_s.asDiagonal() * f.u.leftCols(k).transpose();
}

namespace {

bool eig_order(const Complex& a, const Complex& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

}  // namespace

EigenDecomposition eig(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::InvalidShape, "eig requires a square matrix, got " +
                                                 std::to_string(m.rows()) + "x" +
                                                 std::to_string(m.cols()));
    }
    require_finite(m, "eig input");
    const Index n = m.rows();
    if (n == 0) return {};

    Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure,
                    "real Schur iteration did not converge within " +
                        std::to_string(solver.getMaxIterations() * n) + " iterations");
    }
    const CVector values = solver.eigenvalues();
    const CMatrix vectors = solver.eigenvectors();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return eig_order(values(a), values(b)); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        out.values(j) = values(src);
        CVector w = vectors.col(src);
        const double norm = w.norm();
        if (norm > 0.0) w /= norm;
        // Phase: make the largest component real and positive.
        Index imax = 0;
        w.cwiseAbs().maxCoeff(&imax);
        if (std::abs(w(imax)) > 0.0) w *= std::conj(w(imax)) / std::abs(w(imax));
        out.vectors.col(j) = w;
    }
    return out;
}

Complex ipow(Complex z, long k) {
    Complex result(1.0, 0.0);
    Complex base = z;
    while (k > 0) {
        if (k & 1) result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

}  // namespace recodmd
