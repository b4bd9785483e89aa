#pragma once

// Dense real linear algebra used by the DMD family: thin SVD with
// truncation, Moore-Penrose pseudoinverse and general eigendecomposition.
// Factorizations are delegated to Eigen; this layer fixes the conventions
// (rank thresholds, ordering, error reporting) the rest of the code relies on.

#include <complex>

#include <Eigen/Dense>

namespace recodmd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Relative threshold below which a singular value counts as zero.
inline constexpr double kRankTolerance = 1e-12;

struct SvdResult {
    Matrix u;   // rows x rank, orthonormal columns
    Vector s;   // descending, non-negative
    Matrix vt;  // rank x cols, orthonormal rows
    Index rank = 0;

    Matrix reconstruct() const;
};

struct EigenDecomposition {
    CVector values;
    CMatrix vectors;  // unit-norm columns, aligned with values
};

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

/// Thin SVD of the whole matrix; rank = min(rows, cols).
SvdResult svd(const Matrix& m);

/// Number of singular values strictly above rel_tol * s[0].
Index effective_rank(const Vector& s, double rel_tol = kRankTolerance);

/// Leading `rank` factors. Values at or below kRankTolerance * s[0] are
/// dropped even when requested, so the returned rank can be smaller; it is
/// zero for an all-zero input.
SvdResult truncate_svd(const SvdResult& full, Index rank);

Matrix pinv(const Matrix& m, double rel_tol = kRankTolerance);

/// Eigenpairs of a general real square matrix. Sorted by |lambda|
/// descending, then real part descending, then imaginary part descending.
EigenDecomposition eig(const Matrix& m);

/// Integer power that treats 0^0 as 1.
Complex ipow(Complex z, long k);

}  // namespace recodmd
