#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "support/oracles.hpp"
#include "trde/model.hpp"
#include "trde/splines.hpp"

using namespace trde;

namespace {

TrdeModel random_model(std::mt19937_64& rng, int dims, int k, int rank,
                       std::vector<int> perm = {}) {
    if (perm.empty()) {
        perm.resize(dims);
        std::iota(perm.begin(), perm.end(), 0);
    }
    return TrdeModel(oracle::random_cores(rng, std::vector<int>(dims, k),
                                          std::vector<int>(dims, rank)),
                     perm);
}

SampleMatrix random_points(std::mt19937_64& rng, int n, int dims) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SampleMatrix x(n, dims);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dims; ++d) {
            x(i, d) = u(rng);
        }
    }
    return x;
}

std::vector<double> row(const SampleMatrix& m, int i) {
    return {m.row(i).data(), m.row(i).data() + m.cols()};
}

// Central differences of the batch log-likelihood, one parameter at a time.
CoreGradients finite_difference(TrdeModel model, const SampleMatrix& batch, double step,
                                bool partition_only) {
    CoreGradients out = model.zero_gradients();
    auto objective = [&](const TrdeModel& m) {
        return partition_only ? -std::log(m.partition_function()) : m.log_likelihood(batch);
    };
    for (int d = 0; d < model.dims(); ++d) {
        for (Eigen::Index p = 0; p < out[d].size(); ++p) {
            const double saved = model.cores()[d].data()[p];
            model.mutable_core(d).data()[p] = saved + step;
            const double up = objective(model);
            model.mutable_core(d).data()[p] = saved - step;
            const double down = objective(model);
            model.mutable_core(d).data()[p] = saved;
            out[d](p) = (up - down) / (2.0 * step);
        }
    }
    return out;
}

double worst_relative(const CoreGradients& a, const CoreGradients& b, double floor) {
    double worst = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        for (Eigen::Index p = 0; p < a[d].size(); ++p) {
            if (std::abs(a[d](p)) < floor) {
                continue;
            }
            worst = std::max(worst, oracle::relative_error(a[d](p), b[d](p)));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("phi_factor") {
    SUBCASE("identity slices give the identity") {
        Core c(3, 7, 3);
        for (int k = 0; k < 7; ++k) {
            c.slice(k).setIdentity();
        }
        TrdeModel m(TrCores({c, c}), {0, 1});
        for (double x : {0.0, 0.123, 0.5, 1.0}) {
            CHECK((m.phi_factor(0, x) - RowMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
    SUBCASE("matches the full sum over every basis") {
        std::mt19937_64 rng(1);
        const auto m = random_model(rng, 2, 9, 3);
        for (double x : {0.0, 0.2, 0.77, 1.0}) {
            const auto f = oracle::basis_all(9, x);
            RowMatrix ref = RowMatrix::Zero(3, 3);
            for (int k = 0; k < 9; ++k) {
                ref += f[k] * m.cores()[1].slice(k);
            }
            CHECK((m.phi_factor(1, x) - ref).cwiseAbs().maxCoeff() <= 1e-13);
        }
    }
    SUBCASE("continuous across knots") {
        std::mt19937_64 rng(2);
        const auto m = random_model(rng, 2, 8, 2);
        for (int j = 1; j < 6; ++j) {
            const double knot = j / 6.0;
            const RowMatrix below = m.phi_factor(0, std::nextafter(knot, 0.0));
            const RowMatrix above = m.phi_factor(0, std::nextafter(knot, 1.0));
            CHECK((below - above).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
    SUBCASE("domain errors") {
        std::mt19937_64 rng(3);
        const auto m = random_model(rng, 2, 6, 2);
        CHECK_THROWS_AS(m.phi_factor(0, 1.5), std::domain_error);
        const std::vector<double> x{0.5, -0.1};
        CHECK_THROWS_AS(m.unnormalized_density(x), std::domain_error);
    }
}

TEST_CASE("unnormalized density") {
    std::mt19937_64 rng(4);
    SUBCASE("zero cores give zero") {
        TrdeModel m(TrCores({Core(2, 6, 2), Core(2, 6, 2)}), {0, 1});
        const std::vector<double> x{0.3, 0.4};
        CHECK(m.unnormalized_density(x) == 0.0);
    }
    SUBCASE("dense oracle, D = 2 and D = 3 with a permutation") {
        const auto m2 = random_model(rng, 2, 6, 3, {1, 0});
        const auto m3 = random_model(rng, 3, 5, 2, {2, 0, 1});
        for (int trial = 0; trial < 20; ++trial) {
            const auto x2 = row(random_points(rng, 1, 2), 0);
            const auto x3 = row(random_points(rng, 1, 3), 0);
            const double t2 = oracle::amplitude(m2, x2);
            const double t3 = oracle::amplitude(m3, x3);
            CHECK(oracle::relative_error(m2.unnormalized_density(x2), t2 * t2) <= 1e-12);
            CHECK(oracle::relative_error(m3.unnormalized_density(x3), t3 * t3) <= 1e-12);
        }
    }
    SUBCASE("joint cyclic rotation of cores and permutation") {
        const auto m = random_model(rng, 4, 6, 2, {3, 1, 0, 2});
        const TrdeModel rotated(rotate(m.cores(), 1), {1, 0, 2, 3});
        for (int trial = 0; trial < 10; ++trial) {
            const auto x = row(random_points(rng, 1, 4), 0);
            CHECK(oracle::relative_error(m.unnormalized_density(x), rotated.unnormalized_density(x)) <=
                  1e-12);
        }
    }
    SUBCASE("uniform model is one everywhere") {
        const auto u = TrdeModel::uniform(3, 7);
        const std::vector<double> x{0.0, 0.4, 1.0};
        CHECK(u.unnormalized_density(x) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(u.partition_function() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("partition function") {
    std::mt19937_64 rng(5);
    SUBCASE("quadrature oracle, D = 2, K = 6") {
        for (int trial = 0; trial < 5; ++trial) {
            const auto m = random_model(rng, 2, 6, 3);
            CHECK(oracle::relative_error(m.partition_function(), oracle::partition_quadrature(m)) <=
                  1e-10);
        }
    }
    SUBCASE("scaling by c multiplies Z by c^(2D)") {
        auto m = random_model(rng, 3, 6, 2);
        const double z = m.partition_function();
        m.scale(1.7);
        CHECK(oracle::relative_error(m.partition_function(), z * std::pow(1.7, 6)) <= 1e-12);
    }
    SUBCASE("Kronecker-squared route agrees") {
        for (int trial = 0; trial < 5; ++trial) {
            const auto m = random_model(rng, 3, 6, 2, {1, 2, 0});
            CHECK(oracle::relative_error(m.partition_function(), m.partition_function_kron()) <=
                  1e-10);
        }
    }
    SUBCASE("random initialization lands on Z = 1") {
        const auto m = TrdeModel::random(3, 10, 3, {0, 1, 2}, 42);
        CHECK(m.partition_function() == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& core : m.cores().cores()) {
            CHECK(core.mode() == 10);
        }
    }
}

TEST_CASE("log-likelihood") {
    std::mt19937_64 rng(6);
    SUBCASE("uniform model scores zero") {
        const auto u = TrdeModel::uniform(2, 6);
        CHECK(std::abs(u.log_likelihood(random_points(rng, 50, 2))) <= 1e-12);
    }
    SUBCASE("grid oracle on a 200 x 200 Gauss grid") {
        const auto m = random_model(rng, 2, 6, 2);
        // 40 knot-aligned panels of 5 nodes: 200 nodes per axis
        const auto rule = oracle::composite(0.0, 1.0, 40);
        REQUIRE(rule.size() == 200);
        double z = 0.0;
        for (const auto& [x, wx] : rule) {
            for (const auto& [y, wy] : rule) {
                const std::vector<double> p{x, y};
                z += wx * wy * m.unnormalized_density(p);
            }
        }
        const auto batch = random_points(rng, 20, 2);
        for (int i = 0; i < 20; ++i) {
            const double ref = std::log(m.unnormalized_density(row(batch, i)) / z);
            CHECK(std::abs(m.log_likelihood(batch.middleRows(i, 1)) - ref) <= 1e-6);
        }
    }
    SUBCASE("duplicating the batch doubles the value") {
        const auto m = random_model(rng, 3, 5, 2);
        const auto batch = random_points(rng, 30, 3);
        SampleMatrix twice(60, 3);
        twice << batch, batch;
        CHECK(m.log_likelihood(twice) == doctest::Approx(2.0 * m.log_likelihood(batch)).epsilon(1e-13));
    }
    SUBCASE("non-finite input and empty batch are rejected") {
        const auto m = random_model(rng, 2, 5, 2);
        auto batch = random_points(rng, 3, 2);
        batch(1, 1) = std::nan("");
        CHECK_THROWS_AS(m.log_likelihood(batch), std::invalid_argument);
        CHECK_THROWS_AS(m.log_likelihood(SampleMatrix(0, 2)), std::invalid_argument);
    }
    SUBCASE("thread count does not change the value") {
        const auto m = random_model(rng, 3, 6, 2);
        const auto batch = random_points(rng, 1000, 3);
        CHECK(m.log_likelihood(batch, 1) == m.log_likelihood(batch, 3));
    }
}

TEST_CASE("gradients against central differences") {
    std::mt19937_64 rng(7);
    SUBCASE("full log-likelihood, D = 3, K = 8, R = 3") {
        const auto m = random_model(rng, 3, 8, 3, {2, 0, 1});
        const auto batch = random_points(rng, 16, 3);
        const auto analytic = grad_log_likelihood(m, batch);
        CHECK(analytic.log_likelihood == doctest::Approx(m.log_likelihood(batch)).epsilon(1e-12));
        const auto numeric = finite_difference(m, batch, 1e-5, false);
        CHECK(worst_relative(analytic.gradient, numeric, 1e-8) <= 1e-5);
    }
    SUBCASE("negative log partition alone") {
        const auto m = random_model(rng, 3, 6, 2);
        CoreGradients analytic = m.zero_gradients();
        const double z = accumulate_partition_gradient(m, 1.0, analytic);
        for (auto& g : analytic) {
            g *= -1.0 / z;
        }
        const auto numeric = finite_difference(m, SampleMatrix(1, 3), 1e-5, true);
        CHECK(worst_relative(analytic, numeric, 1e-8) <= 1e-5);
    }
    SUBCASE("D = 1 stationary point of a fitted curve") {
        // Rank-1, one dimension: T(x) = g . f(x) and the objective
        // F(g) = sum log T^2 - N log(g'Mg) has closed-form gradient and Hessian,
        // so damped Newton reaches the optimum to machine precision.
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int n = 400;
        const int k = 8;
        SampleMatrix batch(n, 1);
        for (int i = 0; i < n; ++i) {
            batch(i, 0) = std::sqrt(u(rng));  // density 2x
        }
        BasisGrid grid(k);
        std::vector<Eigen::VectorXd> f;
        for (int i = 0; i < n; ++i) {
            f.push_back(grid.eval_all(batch(i, 0)));
        }
        const Eigen::MatrixXd mass = grid.mass_matrix();
        auto objective = [&](const Eigen::VectorXd& g) {
            double s = 0.0;
            for (const auto& fi : f) {
                s += std::log(std::pow(fi.dot(g), 2));
            }
            return s - n * std::log(g.dot(mass * g));
        };
        Eigen::VectorXd g = Eigen::VectorXd::Ones(k);
        double lambda = 1e-3;
        for (int it = 0; it < 200; ++it) {
            const double z = g.dot(mass * g);
            const Eigen::VectorXd mg = mass * g;
            Eigen::VectorXd grad = -2.0 * n * mg / z;
            Eigen::MatrixXd hess = -2.0 * n * mass / z + 4.0 * n * mg * mg.transpose() / (z * z);
            for (const auto& fi : f) {
                const double t = fi.dot(g);
                grad += 2.0 * fi / t;
                hess -= 2.0 * fi * fi.transpose() / (t * t);
            }
            const Eigen::MatrixXd damped = -hess + lambda * Eigen::MatrixXd::Identity(k, k);
            const Eigen::VectorXd next = g + damped.ldlt().solve(grad);
            if (objective(next) >= objective(g)) {
                g = next / std::sqrt(next.dot(mass * next));
                lambda = std::max(lambda * 0.3, 1e-12);
            } else {
                lambda *= 10.0;
            }
        }
        Core c(1, k, 1, std::vector<double>(g.data(), g.data() + k));
        const TrdeModel m(TrCores({c}), {0});
        CHECK(m.partition_function() == doctest::Approx(1.0).epsilon(1e-12));
        const auto result = grad_log_likelihood(m, batch);
        CHECK(result.gradient[0].norm() / n <= 1e-6);
        // an unconverged point is not stationary
        Core off(1, k, 1, std::vector<double>(k, 1.0));
        CHECK(grad_log_likelihood(TrdeModel(TrCores({off}), {0}), batch).gradient[0].norm() / n >
              1e-3);
    }
}

TEST_CASE("marginal, cumulative and conditional queries") {
    std::mt19937_64 rng(8);
    const auto m = random_model(rng, 3, 6, 2, {1, 2, 0});
    const double z = m.partition_function();

    SUBCASE("everything marginalized is Z") {
        CHECK(oracle::relative_error(m.marginal_density({{}, {0, 1, 2}, {}}), z) <= 1e-12);
    }
    SUBCASE("all upper limits at one is Z") {
        CHECK(oracle::relative_error(m.marginal_density({{}, {}, {{0, 1.0}, {1, 1.0}, {2, 1.0}}}),
                                     z) <= 1e-12);
    }
    SUBCASE("one marginalized dimension against 1-D quadrature") {
        for (int trial = 0; trial < 10; ++trial) {
            const double a = std::uniform_real_distribution<double>(0, 1)(rng);
            const double b = std::uniform_real_distribution<double>(0, 1)(rng);
            const double ref = oracle::integrate_on_knots(
                [&](double s) {
                    const std::vector<double> x{a, b, s};
                    return m.unnormalized_density(x);
                },
                0.0, 1.0, 6, 2);
            CHECK(oracle::relative_error(m.marginal_density({{{0, a}, {1, b}}, {2}, {}}), ref) <=
                  1e-8);
        }
    }
    SUBCASE("cumulative limit against quadrature") {
        const double ref = oracle::integrate_on_knots(
            [&](double s) {
                return oracle::integrate_on_knots(
                    [&](double t) {
                        const std::vector<double> x{0.6, s, t};
                        return m.unnormalized_density(x);
                    },
                    0.0, 1.0, 6, 2);
            },
            0.0, 0.37, 6, 2);
        CHECK(oracle::relative_error(m.marginal_density({{{0, 0.6}}, {2}, {{1, 0.37}}}), ref) <=
              1e-8);
    }
    SUBCASE("conditional density integrates to one") {
        const double total = oracle::integrate_on_knots(
            [&](double s) { return m.conditional_density({{1, s}}, {{0, 0.25}}); }, 0.0, 1.0, 6, 2);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("inconsistent queries") {
        CHECK_THROWS_AS(m.marginal_density({{{0, 0.5}}, {0, 1, 2}, {}}), std::invalid_argument);
        CHECK_THROWS_AS(m.marginal_density({{{0, 0.5}}, {1}, {}}), std::invalid_argument);
        CHECK_THROWS_AS(m.marginal_density({{}, {0, 1, 5}, {}}), std::invalid_argument);
        CHECK_THROWS_AS(m.marginal_density({{{0, 1.5}}, {1, 2}, {}}), std::domain_error);
    }
}

TEST_CASE("version changes on every mutation") {
    auto m = TrdeModel::uniform(2, 5);
    const auto v0 = m.version();
    m.scale(2.0);
    const auto v1 = m.version();
    CHECK(v1 != v0);
    m.mutable_core(0);
    CHECK(m.version() != v1);
    CHECK_THROWS_AS(TrdeModel(m.cores(), {0, 0}), std::invalid_argument);
}
