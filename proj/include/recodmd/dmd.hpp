#pragma once

#include <optional>

#include "recodmd/linalg.hpp"

namespace recodmd {

/// Paired snapshot matrices: x_prime column k is the successor of x column k,
/// and control column k is the input applied at the time of x column k.
struct SnapshotSet {
    Matrix x;
    Matrix x_prime;
    std::optional<Matrix> control;

    Index state_dim() const { return x.rows(); }
    Index columns() const { return x.cols(); }

    /// Splits a trajectory (n x M) into X = columns 0..M-2 and X' = 1..M-1.
    /// `controls` may have M or M-1 columns; only the first M-1 are used.
    static SnapshotSet from_trajectory(const Matrix& states,
                                       const std::optional<Matrix>& controls = std::nullopt);

    /// Checks the shape invariants; throws InvalidShape.
    void validate() const;
};

struct DmdModel {
    Matrix a_operator;  // n x n, X' * pinv_r(X)
    Matrix a_tilde;     // rank x rank, projection onto the leading POD basis
    Matrix basis;       // n x rank, leading left singular vectors of X
    CVector eigenvalues;
    CMatrix modes;       // n x rank
    CVector amplitudes;  // least-squares fit of modes to x(1)
    Vector initial_state;
    double amplitude_residual = 0.0;  // ||modes * amplitudes - x(1)||
    Index state_dim = 0;
    Index rank_used = 0;
};

struct DmdPrediction {
    Vector state;
    double imaginary_residual = 0.0;  // ||Im(sum)||, discarded from `state`
};

/// Exact DMD. `rank` defaults to the effective numerical rank of X.
/// Control rows in `snapshots` are ignored.
DmdModel fit_dmd(const SnapshotSet& snapshots, std::optional<Index> rank = std::nullopt);

/// Evaluates sum_j b_j phi_j lambda_j^(k-1), so k = 1 is the initial state.
DmdPrediction predict_dmd(const DmdModel& model, long k);

/// Same expansion, with amplitudes refitted to start from `initial_state`.
DmdPrediction predict_dmd_from(const DmdModel& model, const Vector& initial_state, long k);

/// Columns k = 1..horizon of predict_dmd.
Matrix reconstruct_dmd(const DmdModel& model, long horizon);

}  // namespace recodmd
