#include "recodmd/dmdc.hpp"

#include <string>

#include "recodmd/error.hpp"

namespace recodmd {

Matrix DmdcModel::full_a() const {
    return basis_u_hat * a_tilde * basis_u_hat.transpose();
}

Matrix DmdcModel::full_b() const {
    return basis_u_hat * b_tilde;
}

DmdcModel fit_dmdc(const SnapshotSet& snapshots, std::optional<Index> p, std::optional<Index> r) {
    if (!snapshots.control) {
        throw Error(ErrorKind::MissingControl, "DMDc requires a control matrix");
    }
    snapshots.validate();
    const Matrix& x = snapshots.x;
    const Matrix& xp = snapshots.x_prime;
    const Matrix& u = *snapshots.control;
    if (x.cols() < 2) {
        throw Error(ErrorKind::InsufficientData, "DMDc needs at least 2 snapshot columns, got " +
                                                     std::to_string(x.cols()));
    }
    require_finite(x, "X");
    require_finite(xp, "X'");
    require_finite(u, "control");

    const Index n = x.rows();
    const Index l = u.rows();
    const Index m = x.cols();

    const Index p_max = std::min(n + l, m);
    const Index r_max = std::min(n, m);
    if (p && (*p < 1 || *p > p_max)) {
        throw Error(ErrorKind::InvalidRank,
                    "p = " + std::to_string(*p) + " outside [1, " + std::to_string(p_max) + "]");
    }
    if (r && (*r < 1 || *r > r_max)) {
        throw Error(ErrorKind::InvalidRank,
                    "r = " + std::to_string(*r) + " outside [1, " + std::to_string(r_max) + "]");
    }

    // Omega = [X; Upsilon], state rows first.
    Matrix omega(n + l, m);
    omega.topRows(n) = x;
    omega.bottomRows(l) = u;

    const SvdResult omega_full = svd(omega);
    const Index omega_rank = effective_rank(omega_full.s);
    if (omega_rank == 0) {
        throw Error(ErrorKind::NumericalFailure, "stacked snapshot matrix [X; U] is numerically zero");
    }
    const Index p_used = p.value_or(omega_rank);
    if (p_used > omega_rank) {
        throw Error(ErrorKind::NumericalFailure,
                    "p = " + std::to_string(p_used) + " keeps singular values below the zero "
                    "threshold; effective rank of [X; U] is " + std::to_string(omega_rank) +
                    ", use a smaller p");
    }
    const SvdResult in = truncate_svd(omega_full, p_used);

    const SvdResult out_full = svd(xp);
    const Index xp_rank = effective_rank(out_full.s);
    if (xp_rank == 0) {
        throw Error(ErrorKind::NumericalFailure, "shifted snapshot matrix X' is numerically zero");
    }
    Index r_req = r.value_or(std::min(p_used, xp_rank));
    if (r_req > p_used) {
        throw Error(ErrorKind::InvalidRank, "r = " + std::to_string(r_req) +
                                                " exceeds p = " + std::to_string(p_used));
    }
    const SvdResult out = truncate_svd(out_full, r_req);

    const Matrix u1 = in.u.topRows(n);
    const Matrix u2 = in.u.bottomRows(l);
    const Matrix& u_hat = out.u;
    const Matrix g = xp * in.vt.transpose() * in.s.cwiseInverse().asDiagonal();  // X' V~ S~^-1

    DmdcModel model;
    model.state_dim = n;
    model.control_dim = l;
    model.p_rank = in.rank;
    model.r_rank = out.rank;
    model.basis_u_hat = u_hat;

    const Matrix g_u1_uhat = g * u1.transpose() * u_hat;  // n x r
    model.a_tilde = u_hat.transpose() * g_u1_uhat;
    model.b_tilde = u_hat.transpose() * g * u2.transpose();

    const EigenDecomposition ed = eig(model.a_tilde);
    model.eigenvalues = ed.values;
    model.modes_phi = g_u1_uhat.cast<Complex>() * ed.vectors;
    return model;
}

Vector step_dmdc(const DmdcModel& model, const Vector& state, const Vector& control) {
    if (state.size() != model.state_dim) {
        throw Error(ErrorKind::InvalidShape, "state has length " + std::to_string(state.size()) +
                                                 ", model expects " +
                                                 std::to_string(model.state_dim));
    }
    if (control.size() != model.control_dim) {
        throw Error(ErrorKind::InvalidShape,
                    "control has length " + std::to_string(control.size()) + ", model expects " +
                        std::to_string(model.control_dim));
    }
    const Vector z = model.basis_u_hat.transpose() * state;
    return model.basis_u_hat * (model.a_tilde * z + model.b_tilde * control);
}

Matrix forecast_dmdc(const DmdcModel& model, const Vector& initial_state, const Matrix& controls) {
    if (controls.cols() < 1) {
        throw Error(ErrorKind::InvalidInput, "forecast needs at least one control column");
    }
    if (controls.rows() != model.control_dim) {
        throw Error(ErrorKind::InvalidShape,
                    "controls have " + std::to_string(controls.rows()) + " rows, model expects " +
                        std::to_string(model.control_dim));
    }
    Matrix out(model.state_dim, controls.cols());
    Vector state = initial_state;
    for (Index j = 0; j < controls.cols(); ++j) {
        state = step_dmdc(model, state, controls.col(j));
        out.col(j) = state;
    }
    return out;
}

}  // namespace recodmd
