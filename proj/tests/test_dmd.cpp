#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "recodmd/dmd.hpp"
#include "recodmd/error.hpp"

using namespace recodmd;

namespace {

Matrix trajectory(const Matrix& a, const Vector& x0, int m) {
    Matrix states(a.rows(), m);
    states.col(0) = x0;
    for (int k = 1; k < m; ++k) states.col(k) = a * states.col(k - 1);
    return states;
}

std::vector<Complex> to_std(const CVector& v) {
    return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST(SnapshotSet, FromTrajectoryShiftsColumns) {
    Matrix states(2, 4);
    states << 1, 2, 3, 4,
              5, 6, 7, 8;
    Matrix controls(1, 4);
    controls << 9, 10, 11, 12;
    const SnapshotSet s = SnapshotSet::from_trajectory(states, controls);
    EXPECT_EQ(s.columns(), 3);
    EXPECT_EQ(s.x(0, 0), 1);
    EXPECT_EQ(s.x_prime(0, 0), 2);
    EXPECT_EQ(s.x_prime(1, 2), 8);
    ASSERT_TRUE(s.control.has_value());
    EXPECT_EQ(s.control->cols(), 3);
    EXPECT_EQ((*s.control)(0, 2), 11);
}

TEST(SnapshotSet, ShapeMismatchIsRejected) {
    SnapshotSet s{Matrix::Ones(3, 4), Matrix::Ones(3, 5), std::nullopt};
    try {
        s.validate();
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidShape);
    }
}

TEST(Dmd, RecoversEigenvaluesOfStableSystem) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto spectrum = oracle::stable_spectrum(4, 0.95, rng);
        const Matrix a = oracle::with_eigenvalues(spectrum, rng);
        const Matrix states = trajectory(a, oracle::random_matrix(4, 1, rng), 50);
        const DmdModel model = fit_dmd(SnapshotSet::from_trajectory(states));
        EXPECT_EQ(model.rank_used, 4);
        EXPECT_LT(oracle::multiset_distance(to_std(model.eigenvalues), spectrum), 1e-7);
        EXPECT_LT((model.a_operator - a).norm(), 1e-7 * a.norm());
    }
}

TEST(Dmd, PredictionReproducesTrajectory) {
    std::mt19937_64 rng(22);
    const Matrix a = oracle::with_eigenvalues(oracle::stable_spectrum(3, 0.9, rng), rng);
    const Matrix states = trajectory(a, oracle::random_matrix(3, 1, rng), 20);
    const DmdModel model = fit_dmd(SnapshotSet::from_trajectory(states));
    EXPECT_LT((predict_dmd(model, 1).state - states.col(0)).norm(), 1e-10);
    const Matrix rec = reconstruct_dmd(model, 20);
    EXPECT_LT((rec - states).norm(), 1e-8 * states.norm());
    EXPECT_LT(predict_dmd(model, 15).imaginary_residual, 1e-10);
}

TEST(Dmd, PredictFromNewInitialState) {
    std::mt19937_64 rng(23);
    const Matrix a = oracle::with_eigenvalues(oracle::stable_spectrum(3, 0.9, rng), rng);
    const Matrix states = trajectory(a, oracle::random_matrix(3, 1, rng), 20);
    const DmdModel model = fit_dmd(SnapshotSet::from_trajectory(states));
    const Vector x0 = oracle::random_matrix(3, 1, rng);
    const Vector expected = a * a * a * x0;
    EXPECT_LT((predict_dmd_from(model, x0, 4).state - expected).norm(), 1e-8);
}

TEST(Dmd, TruncatedRankIsRespected) {
    std::mt19937_64 rng(24);
    const Matrix a = oracle::with_eigenvalues(oracle::stable_spectrum(5, 0.9, rng), rng);
    const Matrix states = trajectory(a, oracle::random_matrix(5, 1, rng), 30);
    const DmdModel model = fit_dmd(SnapshotSet::from_trajectory(states), 2);
    EXPECT_EQ(model.rank_used, 2);
    EXPECT_EQ(model.modes.cols(), 2);
    EXPECT_EQ(model.basis.cols(), 2);
    EXPECT_LE(model.rank_used, std::min(model.state_dim, Index{29}));
}

TEST(Dmd, InvalidRankIsRejected) {
    SnapshotSet s{Matrix::Random(3, 5), Matrix::Random(3, 5), std::nullopt};
    for (Index bad : {Index{0}, Index{-1}, Index{4}}) {
        try {
            fit_dmd(s, bad);
            FAIL() << "expected an error for rank " << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidRank);
        }
    }
}

TEST(Dmd, SingleSnapshotPairIsInsufficient) {
    Matrix x(2, 1), xp(2, 1);
    x << 1, 0;
    xp << 0.5, 0;
    try {
        fit_dmd(SnapshotSet{x, xp, std::nullopt});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Dmd, NonFiniteSnapshotsAreRejected) {
    Matrix x = Matrix::Ones(2, 3);
    x(1, 1) = std::numeric_limits<double>::infinity();
    try {
        fit_dmd(SnapshotSet{x, Matrix::Ones(2, 3), std::nullopt});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
}
