#pragma once

// Dynamic mode decomposition with control. The fit follows the classical
// two-SVD construction: the stacked input space [X; U] is truncated to rank p
// and the output space X' to rank r, giving reduced operators on the output
// basis U_hat:
//
//   A_tilde = U_hat^T X' V~ S~^-1 U1~^T U_hat      (r x r)
//   B_tilde = U_hat^T X' V~ S~^-1 U2~^T            (r x l)
//   Phi     = X' V~ S~^-1 U1~^T U_hat W            (dynamic modes)
//
// where U1~ / U2~ are the state / control row blocks of the input-space
// left singular vectors and A_tilde W = W Lambda.

#include <optional>

#include "recodmd/dmd.hpp"

namespace recodmd {

struct DmdcModel {
    Matrix a_tilde;      // r x r
    Matrix b_tilde;      // r x l
    Matrix basis_u_hat;  // n x r
    CVector eigenvalues;
    CMatrix modes_phi;  // n x r
    Index p_rank = 0;
    Index r_rank = 0;
    Index control_dim = 0;
    Index state_dim = 0;

    /// Full-space operators U_hat A_tilde U_hat^T and U_hat B_tilde.
    Matrix full_a() const;
    Matrix full_b() const;
};

/// p defaults to the effective rank of [X; U]; r to min(p, effective rank of X').
DmdcModel fit_dmdc(const SnapshotSet& snapshots, std::optional<Index> p = std::nullopt,
                   std::optional<Index> r = std::nullopt);

/// U_hat (A_tilde U_hat^T state + B_tilde control).
Vector step_dmdc(const DmdcModel& model, const Vector& state, const Vector& control);

/// Iterates step_dmdc over the columns of `controls` (l x h), feeding the
/// projected state back each time. Column j is the forecast j+1 steps ahead.
Matrix forecast_dmdc(const DmdcModel& model, const Vector& initial_state, const Matrix& controls);

}  // namespace recodmd
