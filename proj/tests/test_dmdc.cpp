#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "recodmd/dmdc.hpp"
#include "recodmd/error.hpp"

using namespace recodmd;

namespace {

struct ControlledRun {
    Matrix a;
    Matrix b;
    SnapshotSet snapshots;
};

ControlledRun controlled_run(int n, int l, int m, std::mt19937_64& rng) {
    ControlledRun run;
    run.a = oracle::with_eigenvalues(oracle::stable_spectrum(n, 0.9, rng), rng);
    run.b = oracle::random_matrix(n, l, rng);
    const Matrix u = oracle::random_matrix(l, m, rng);
    Matrix states(n, m + 1);
    states.col(0) = oracle::random_matrix(n, 1, rng);
    for (int k = 0; k < m; ++k) states.col(k + 1) = run.a * states.col(k) + run.b * u.col(k);
    run.snapshots = SnapshotSet{states.leftCols(m), states.rightCols(m), u};
    return run;
}

template <typename F>
ErrorKind error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidInput;
}

}  // namespace

TEST(Dmdc, IdentifiesSystemExactly) {
    std::mt19937_64 rng(31);
    const ControlledRun run = controlled_run(3, 1, 60, rng);
    const DmdcModel model = fit_dmdc(run.snapshots);
    EXPECT_EQ(model.p_rank, 4);
    EXPECT_EQ(model.r_rank, 3);
    EXPECT_LT((model.full_a() - run.a).norm() / run.a.norm(), 1e-6);
    EXPECT_LT((model.full_b() - run.b).norm() / run.b.norm(), 1e-6);

    Matrix omega(4, 60);
    omega << run.snapshots.x, *run.snapshots.control;
    const Matrix ab = oracle::joint_least_squares(run.snapshots.x_prime, omega);
    EXPECT_LT((model.full_a() - ab.leftCols(3)).norm(), 1e-8);
    EXPECT_LT((model.full_b() - ab.rightCols(1)).norm(), 1e-8);
}

TEST(Dmdc, ZeroControlMatchesReducedDmd) {
    std::mt19937_64 rng(32);
    ControlledRun run = controlled_run(4, 2, 30, rng);
    const Matrix& x = run.snapshots.x;
    const Matrix xp = run.a * x;
    SnapshotSet s{x, xp, Matrix::Zero(2, 30)};
    const DmdcModel c = fit_dmdc(s, 4, 4);
    const DmdModel d = fit_dmd(SnapshotSet{x, xp, std::nullopt}, 4);
    std::vector<Complex> cv(c.eigenvalues.data(), c.eigenvalues.data() + c.eigenvalues.size());
    std::vector<Complex> dv(d.eigenvalues.data(), d.eigenvalues.data() + d.eigenvalues.size());
    EXPECT_LT(oracle::multiset_distance(cv, dv), 1e-9);
    EXPECT_LT(c.b_tilde.norm(), 1e-12);
}

TEST(Dmdc, ForecastIteratesStep) {
    std::mt19937_64 rng(33);
    const ControlledRun run = controlled_run(3, 2, 40, rng);
    const DmdcModel model = fit_dmdc(run.snapshots);
    const Vector x0 = oracle::random_matrix(3, 1, rng);
    const Matrix u = oracle::random_matrix(2, 5, rng);
    const Matrix fc = forecast_dmdc(model, x0, u);
    ASSERT_EQ(fc.cols(), 5);
    Vector x = x0;
    for (int k = 0; k < 5; ++k) {
        x = run.a * x + run.b * u.col(k);
        EXPECT_LT((fc.col(k) - x).norm(), 1e-8 * (1.0 + x.norm()));
    }
    EXPECT_LT((step_dmdc(model, x0, u.col(0)) - fc.col(0)).norm(), 1e-14);
}

TEST(Dmdc, ModesSatisfyEigenRelation) {
    std::mt19937_64 rng(34);
    const ControlledRun run = controlled_run(3, 1, 30, rng);
    const DmdcModel model = fit_dmdc(run.snapshots);
    const CMatrix a = model.full_a().cast<Complex>();
    // Phi is proportional to U_hat W, so A Phi = Phi Lambda on the output basis.
    const CMatrix proj = model.basis_u_hat.cast<Complex>() * model.basis_u_hat.transpose().cast<Complex>();
    for (Index j = 0; j < model.modes_phi.cols(); ++j) {
        const CVector phi = proj * model.modes_phi.col(j);
        EXPECT_LT((a * phi - model.eigenvalues(j) * phi).norm(), 1e-8 * (1.0 + phi.norm()));
    }
}

TEST(Dmdc, RankValidation) {
    std::mt19937_64 rng(35);
    const ControlledRun run = controlled_run(3, 1, 20, rng);
    EXPECT_EQ(error_kind([&] { fit_dmdc(run.snapshots, 5); }), ErrorKind::InvalidRank);
    EXPECT_EQ(error_kind([&] { fit_dmdc(run.snapshots, 0); }), ErrorKind::InvalidRank);
    EXPECT_EQ(error_kind([&] { fit_dmdc(run.snapshots, 2, 3); }), ErrorKind::InvalidRank);
    EXPECT_EQ(error_kind([&] { fit_dmdc(run.snapshots, 4, 4); }), ErrorKind::InvalidRank);

    // Duplicate the state as a control row: [X; U] has rank 3 < p = 4.
    SnapshotSet dup{run.snapshots.x, run.snapshots.x_prime, Matrix(run.snapshots.x.topRows(1))};
    EXPECT_EQ(error_kind([&] { fit_dmdc(dup, 4); }), ErrorKind::NumericalFailure);
    EXPECT_EQ(fit_dmdc(dup).p_rank, 3);
}

TEST(Dmdc, MissingControlIsRejected) {
    SnapshotSet s{Matrix::Random(2, 5), Matrix::Random(2, 5), std::nullopt};
    EXPECT_EQ(error_kind([&] { fit_dmdc(s); }), ErrorKind::MissingControl);
}

TEST(Dmdc, TruncatedModelHasRequestedShapes) {
    std::mt19937_64 rng(36);
    const ControlledRun run = controlled_run(6, 2, 40, rng);
    const DmdcModel model = fit_dmdc(run.snapshots, 5, 3);
    EXPECT_EQ(model.a_tilde.rows(), 3);
    EXPECT_EQ(model.b_tilde.cols(), 2);
    EXPECT_EQ(model.basis_u_hat.rows(), 6);
    EXPECT_LE(model.r_rank, model.p_rank);
}
