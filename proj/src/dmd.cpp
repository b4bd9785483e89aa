#include "recodmd/dmd.hpp"

#include <cmath>
#include <string>

#include "recodmd/error.hpp"

namespace recodmd {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

SnapshotSet SnapshotSet::from_trajectory(const Matrix& states,
                                         const std::optional<Matrix>& controls) {
    if (states.cols() < 2) {
        throw Error(ErrorKind::InsufficientData, "a trajectory needs at least 2 snapshots, got " +
                                                     std::to_string(states.cols()));
    }
    const Index m = states.cols() - 1;
    SnapshotSet out;
    out.x = states.leftCols(m);
    out.x_prime = states.rightCols(m);
    if (controls) {
        if (controls->cols() != m && controls->cols() != m + 1) {
            throw Error(ErrorKind::InvalidShape, "control matrix " + shape(*controls) +
                                                     " does not match trajectory " + shape(states));
        }
        out.control = controls->leftCols(m);
    }
    return out;
}

void SnapshotSet::validate() const {
    if (x.rows() != x_prime.rows() || x.cols() != x_prime.cols()) {
        throw Error(ErrorKind::InvalidShape,
                    "X is " + shape(x) + " but X' is " + shape(x_prime));
    }
    if (control && control->cols() != x.cols()) {
        throw Error(ErrorKind::InvalidShape,
                    "control is " + shape(*control) + " but X is " + shape(x));
    }
}

DmdModel fit_dmd(const SnapshotSet& snapshots, std::optional<Index> rank) {
    snapshots.validate();
    const Matrix& x = snapshots.x;
    const Matrix& xp = snapshots.x_prime;
    if (x.cols() < 2) {
        throw Error(ErrorKind::InsufficientData, "DMD needs at least 2 snapshot columns, got " +
                                                     std::to_string(x.cols()));
    }
    require_finite(x, "X");
    require_finite(xp, "X'");

    const Index max_rank = std::min(x.rows(), x.cols());
    if (rank && (*rank < 1 || *rank > max_rank)) {
        throw Error(ErrorKind::InvalidRank, "DMD rank " + std::to_string(*rank) +
                                                " outside [1, " + std::to_string(max_rank) + "]");
    }

    const SvdResult full = svd(x);
    const SvdResult red = truncate_svd(full, rank.value_or(full.rank));
    if (red.rank == 0) {
        throw Error(ErrorKind::NumericalFailure, "snapshot matrix X is numerically zero");
    }

    const Matrix v_sinv = red.vt.transpose() * red.s.cwiseInverse().asDiagonal();
    const Matrix xp_v_sinv = xp * v_sinv;  // n x r

    DmdModel model;
    model.state_dim = x.rows();
    model.rank_used = red.rank;
    model.basis = red.u;
    model.a_tilde = red.u.transpose() * xp_v_sinv;
    model.a_operator = xp_v_sinv * red.u.transpose();

    const EigenDecomposition ed = eig(model.a_tilde);
    model.eigenvalues = ed.values;

    // Exact DMD modes X' V S^-1 w / lambda; projected modes U w for lambda ~ 0,
    // where the exact mode degenerates.
    const double lam_max = ed.values.size() ? std::abs(ed.values(0)) : 0.0;
    const CMatrix exact = xp_v_sinv.cast<Complex>() * ed.vectors;
    const CMatrix projected = red.u.cast<Complex>() * ed.vectors;
    model.modes.resize(x.rows(), red.rank);
    for (Index j = 0; j < red.rank; ++j) {
        const Complex lam = ed.values(j);
        if (std::abs(lam) > kRankTolerance * std::max(lam_max, 1.0)) {
            model.modes.col(j) = exact.col(j) / lam;
        } else {
            model.modes.col(j) = projected.col(j);
        }
    }

    model.initial_state = x.col(0);
    const CMatrix modes_pinv = model.modes.completeOrthogonalDecomposition().pseudoInverse();
    model.amplitudes = modes_pinv * model.initial_state.cast<Complex>();
    model.amplitude_residual =
        (model.modes * model.amplitudes - model.initial_state.cast<Complex>()).norm();
    return model;
}

namespace {

DmdPrediction expand(const DmdModel& model, const CVector& amplitudes, long k) {
    if (k < 1) {
        throw Error(ErrorKind::InvalidInput, "prediction index k must be >= 1, got " +
                                                 std::to_string(k));
    }
    if (model.rank_used == 0) {
        throw Error(ErrorKind::InvalidInput, "DMD model is not fitted");
    }
    CVector weights(model.rank_used);
    for (Index j = 0; j < model.rank_used; ++j) {
        weights(j) = amplitudes(j) * ipow(model.eigenvalues(j), k - 1);
    }
    const CVector sum = model.modes * weights;
    return {sum.real(), sum.imag().norm()};
}

}  // namespace

DmdPrediction predict_dmd(const DmdModel& model, long k) {
    return expand(model, model.amplitudes, k);
}

DmdPrediction predict_dmd_from(const DmdModel& model, const Vector& initial_state, long k) {
    if (initial_state.size() != model.state_dim) {
        throw Error(ErrorKind::InvalidShape, "initial state has length " +
                                                 std::to_string(initial_state.size()) +
                                                 ", model state_dim is " +
                                                 std::to_string(model.state_dim));
    }
    const CMatrix modes_pinv = model.modes.completeOrthogonalDecomposition().pseudoInverse();
    const CVector b = modes_pinv * initial_state.cast<Complex>();
    return expand(model, b, k);
}

Matrix reconstruct_dmd(const DmdModel& model, long horizon) {
    if (horizon < 1) {
        throw Error(ErrorKind::InvalidInput, "horizon must be >= 1");
    }
    Matrix out(model.state_dim, horizon);
    for (long k = 1; k <= horizon; ++k) out.col(k - 1) = predict_dmd(model, k).state;
    return out;
}

}  // namespace recodmd
