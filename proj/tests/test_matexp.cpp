#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gcb/matexp.hpp"

using namespace gcb;

namespace {

// Plain Taylor series as the independent route; fine for small norms.
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 60; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("exp of zero and diagonal matrices") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
    CHECK((matrix_exponential(zero) - Eigen::MatrixXd::Identity(3, 3)).norm() <
          1e-14);

    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = -1.0;
    diag(1, 1) = -3.0;
    const auto e = matrix_exponential(diag);
    CHECK(e(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(e(1, 1) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
    CHECK(std::abs(e(0, 1)) < 1e-15);
}

TEST_CASE("pade route agrees with the series route") {
    Eigen::MatrixXd a(3, 3);
    a << 0.3, -1.2, 0.7, 0.4, 0.1, -0.5, -0.9, 0.2, 0.6;
    const auto e1 = matrix_exponential(a);
    const auto e2 = expm_series(a);
    CHECK((e1 - e2).norm() < 1e-12 * e2.norm());

    // Larger norm exercises the squaring steps.
    const auto e3 = matrix_exponential(Eigen::MatrixXd(8.0 * a));
    const auto e4 = expm_series(Eigen::MatrixXd(8.0 * a));
    CHECK((e3 - e4).norm() < 1e-9 * e4.norm());
}

TEST_CASE("rotation exponential is orthogonal") {
    Eigen::MatrixXd a(2, 2);
    a << 0.0, -1.3, 1.3, 0.0;
    const auto e = matrix_exponential(a);
    CHECK((e.transpose() * e - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(operator_norm(e) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("operator norm agrees with the SVD route") {
    Eigen::MatrixXd a(3, 2);
    a << 1.0, 2.0, -0.5, 0.25, 3.0, -1.0;
    const double svd_norm =
        Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
    CHECK(operator_norm(a) == doctest::Approx(svd_norm).epsilon(1e-9));

    Eigen::MatrixXd nonnormal(2, 2);
    nonnormal << 1.0, 5.0, 0.0, 1.0;
    const double svd2 =
        Eigen::JacobiSVD<Eigen::MatrixXd>(nonnormal).singularValues()(0);
    CHECK(operator_norm(nonnormal) == doctest::Approx(svd2).epsilon(1e-9));

    CHECK(operator_norm(Eigen::MatrixXd::Zero(4, 4)) == 0.0);
}
