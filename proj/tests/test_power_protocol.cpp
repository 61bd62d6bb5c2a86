#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/power_protocol.hpp"

using namespace trde;

namespace {

// Correlated 6-D Gaussian rows x = mu + L z.
SampleMatrix gaussian_rows(std::size_t n, const Eigen::MatrixXd& l, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    SampleMatrix x(static_cast<Eigen::Index>(n), l.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::VectorXd e(l.rows());
        for (Eigen::Index d = 0; d < e.size(); ++d) e(d) = z(rng);
        x.row(i) = (l * e).transpose();
        x.row(i).array() += 3.0;
    }
    return x;
}

Eigen::MatrixXd lower_factor() {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i) {
        l(i, i) = 0.5 + 0.3 * i;
        for (int j = 0; j < i; ++j) l(i, j) = 0.2 * (i - j);
    }
    return l;
}

}  // namespace

TEST_CASE("gaussian baseline recovers the entropy of Gaussian data") {
    const auto l = lower_factor();
    const auto raw = gaussian_rows(40000, l, 3);
    const auto data = standardize(raw, {}, 5, "gauss");
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const double entropy = 0.5 * (6.0 * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet);
    CHECK(power::gaussian_nll(data) == doctest::Approx(entropy).epsilon(0.01));
}

TEST_CASE("subsampling keeps the requested fraction of rows") {
    const auto raw = gaussian_rows(1000, lower_factor(), 1);
    const auto a = power::subsample(raw, 0.1, 7);
    CHECK(a.rows() == 100);
    CHECK(a == power::subsample(raw, 0.1, 7));
    CHECK(a != power::subsample(raw, 0.1, 8));
}

TEST_CASE("the full protocol runs end to end on a small synthetic table") {
    const auto raw = gaussian_rows(20000, lower_factor(), 2);
    power::Settings s;
    s.k_basis = 6;
    s.rank = 2;
    s.train.max_epochs = 2;
    s.train.learning_rate = 0.01;
    s.train.batch_size = 256;
    const auto out = power::run(raw, s);
    CHECK(out.rows == 2000);
    CHECK(std::isfinite(out.gaussian_nll));
    CHECK(std::isfinite(out.trde_nll));
    CHECK(std::isfinite(out.term_nll));
    CHECK(out.trde_report.epochs.size() == 2);
    CHECK(out.term_report.epochs.back().sigma.size() == 2);
}
