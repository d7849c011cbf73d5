#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "scralign/ridge.hpp"
#include "scralign/rng.hpp"

using namespace scralign;

TEST_CASE("golden section on a known parabola") {
    const GoldenSectionResult r =
        golden_section_minimize([](double x) { return (x - 3.0) * (x - 3.0); }, 0.0, 10.0, 1e-4);
    CHECK(r.x == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("golden section handles minima at the bracket edge") {
    const GoldenSectionResult r =
        golden_section_minimize([](double x) { return x; }, 0.0, 1.0, 1e-5);
    CHECK(r.x == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
}

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
    Eigen::MatrixXd m(r, c);
    Rng rng(seed);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

} // namespace

TEST_CASE("ridge solution matches direct normal equations (primal shape)") {
    const Eigen::MatrixXd X = random_matrix(40, 12, 1);
    const Eigen::MatrixXd Y = random_matrix(40, 3, 2);
    RidgeDesign design(X, Y);
    for (double lambda : {1e-3, 0.1, 5.0}) {
        const Eigen::MatrixXd W = design.solve(lambda);
        const Eigen::MatrixXd direct =
            (X.transpose() * X + lambda * Eigen::MatrixXd::Identity(12, 12))
                .ldlt()
                .solve(X.transpose() * Y);
        CHECK((W - direct).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ridge solution matches direct normal equations (dual shape)") {
    const Eigen::MatrixXd X = random_matrix(15, 60, 3);
    const Eigen::MatrixXd Y = random_matrix(15, 4, 4);
    RidgeDesign design(X, Y);
    for (double lambda : {1e-2, 1.0}) {
        const Eigen::MatrixXd W = design.solve(lambda);
        const Eigen::MatrixXd direct =
            (X.transpose() * X + lambda * Eigen::MatrixXd::Identity(60, 60))
                .ldlt()
                .solve(X.transpose() * Y);
        CHECK((W - direct).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ridge solution satisfies its normal equations") {
    const Eigen::MatrixXd X = random_matrix(30, 20, 5);
    const Eigen::MatrixXd Y = random_matrix(30, 6, 6);
    RidgeDesign design(X, Y);
    const double lambda = 0.37;
    const Eigen::MatrixXd W = design.solve(lambda);
    const Eigen::MatrixXd lhs =
        (X.transpose() * X + lambda * Eigen::MatrixXd::Identity(20, 20)) * W;
    const Eigen::MatrixXd rhs = X.transpose() * Y;
    CHECK((lhs - rhs).norm() <= 1e-6 * rhs.norm());
}

TEST_CASE("design scale is the mean squared row norm") {
    const Eigen::MatrixXd X = random_matrix(25, 10, 7);
    RidgeDesign design(X, random_matrix(25, 2, 8));
    CHECK(design.scale() == doctest::Approx(X.squaredNorm() / 25.0));
}

TEST_CASE("singular system without ridge raises") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(8, 4);
    X.col(0).setOnes(); // rank 1
    RidgeDesign design(X, random_matrix(8, 2, 9));
    CHECK_THROWS(design.solve(0.0));
    CHECK_NOTHROW(design.solve(1e-3));
}
