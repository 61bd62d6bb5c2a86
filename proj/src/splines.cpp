#include "trde/splines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace trde {

namespace {

// Gauss-Legendre rules on [0,1].
constexpr std::array<double, 2> kGauss2Nodes{0.21132486540518711775, 0.78867513459481288225};
constexpr std::array<double, 2> kGauss2Weights{0.5, 0.5};
constexpr std::array<double, 3> kGauss3Nodes{0.11270166537925831148, 0.5,
                                              0.88729833462074168852};
constexpr std::array<double, 3> kGauss3Weights{5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};

double horner(const std::array<double, 3>& c, double t) { return c[0] + t * (c[1] + t * c[2]); }

}  // namespace

double cox_de_boor(const std::vector<double>& knots, int i, int degree, double x) {
    if (degree == 0) {
        return (knots[i] <= x && x < knots[i + 1]) ? 1.0 : 0.0;
    }
    double value = 0.0;
    const double left_span = knots[i + degree] - knots[i];
    if (left_span > 0.0) {
        value += (x - knots[i]) / left_span * cox_de_boor(knots, i, degree - 1, x);
    }
    const double right_span = knots[i + degree + 1] - knots[i + 1];
    if (right_span > 0.0) {
        value += (knots[i + degree + 1] - x) / right_span * cox_de_boor(knots, i + 1, degree - 1, x);
    }
    return value;
}

BasisGrid::BasisGrid(int k_basis) : k_basis_(k_basis) {
    if (k_basis < 4) {
        throw std::invalid_argument("BasisGrid: need at least 4 basis functions, got " +
                                    std::to_string(k_basis));
    }
    const int intervals = k_basis - 2;
    step_ = 1.0 / intervals;
    knots_.resize(k_basis + 3);
    for (int i = 0; i < k_basis + 3; ++i) {
        knots_[i] = static_cast<double>(i - 2) / intervals;
    }

    // Fit each active piece by its values at three interior local points.
    const std::array<double, 3> probe{0.25, 0.5, 0.75};
    Eigen::Matrix3d vandermonde;
    for (int r = 0; r < 3; ++r) {
        vandermonde(r, 0) = 1.0;
        vandermonde(r, 1) = probe[r];
        vandermonde(r, 2) = probe[r] * probe[r];
    }
    const auto lu = vandermonde.partialPivLu();

    coeffs_.resize(intervals);
    interval_integral_.resize(intervals);
    interval_pair_integral_.resize(intervals);
    for (int j = 0; j < intervals; ++j) {
        const double left = knots_[j + 2];
        for (int a = 0; a < 3; ++a) {
            Eigen::Vector3d samples;
            for (int r = 0; r < 3; ++r) {
                samples(r) = cox_de_boor(knots_, j + a, 2, left + probe[r] * step_);
            }
            const Eigen::Vector3d c = lu.solve(samples);
            coeffs_[j][a] = {c(0), c(1), c(2)};
        }
        interval_integral_[j].fill(0.0);
        for (int g = 0; g < 2; ++g) {
            const auto v = local_values(j, kGauss2Nodes[g]);
            for (int a = 0; a < 3; ++a) {
                interval_integral_[j][a] += kGauss2Weights[g] * v[a] * step_;
            }
        }
        interval_pair_integral_[j] = local_pair_integral(j, 1.0);
    }

    mass_ = pair_integral_to(1.0);
}

void BasisGrid::check_domain(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("BasisGrid: point " + std::to_string(x) + " outside [0,1]");
    }
}

IntervalPosition BasisGrid::locate(double x) const {
    check_domain(x);
    const int intervals = k_basis_ - 2;
    const double scaled = x * intervals;
    int j = static_cast<int>(std::floor(scaled));
    if (j >= intervals) {
        j = intervals - 1;
    }
    double t = scaled - j;
    if (t < 0.0) {
        t = 0.0;
    } else if (t > 1.0) {
        t = 1.0;
    }
    return {j, t};
}

std::array<double, 3> BasisGrid::local_values(int interval, double t) const {
    const auto& c = coeffs_[interval];
    return {horner(c[0], t), horner(c[1], t), horner(c[2], t)};
}

ActiveBasis BasisGrid::eval_active(double x) const {
    const auto pos = locate(x);
    return {pos.interval, local_values(pos.interval, pos.t)};
}

Eigen::VectorXd BasisGrid::eval_all(double x) const {
    const auto active = eval_active(x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k_basis_);
    for (int a = 0; a < 3; ++a) {
        out(active.first + a) = active.values[a];
    }
    return out;
}

Eigen::VectorXd BasisGrid::integral_to(double x) const {
    const auto pos = locate(x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k_basis_);
    for (int j = 0; j < pos.interval; ++j) {
        for (int a = 0; a < 3; ++a) {
            out(j + a) += interval_integral_[j][a];
        }
    }
    for (int g = 0; g < 2; ++g) {
        const auto v = local_values(pos.interval, pos.t * kGauss2Nodes[g]);
        for (int a = 0; a < 3; ++a) {
            out(pos.interval + a) += pos.t * step_ * kGauss2Weights[g] * v[a];
        }
    }
    return out;
}

std::array<double, 9> BasisGrid::local_pair_integral(int interval, double t) const {
    std::array<double, 9> out{};
    for (int g = 0; g < 3; ++g) {
        const auto v = local_values(interval, t * kGauss3Nodes[g]);
        const double w = t * step_ * kGauss3Weights[g];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                out[a * 3 + b] += w * (v[a] * v[b]);
            }
        }
    }
    return out;
}

Eigen::MatrixXd BasisGrid::pair_integral_to(double x) const {
    const auto pos = locate(x);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k_basis_, k_basis_);
    auto add_block = [&out](int j, const std::array<double, 9>& block) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                out(j + a, j + b) += block[a * 3 + b];
            }
        }
    };
    for (int j = 0; j < pos.interval; ++j) {
        add_block(j, interval_pair_integral_[j]);
    }
    add_block(pos.interval, local_pair_integral(pos.interval, pos.t));
    return out;
}

}  // namespace trde
