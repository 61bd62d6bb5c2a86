#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace trde {

/// Index of the first nonzero basis function at a point, and the values of
/// the three basis functions starting there.
struct ActiveBasis {
    int first = 0;
    std::array<double, 3> values{};
};

/// Position of a point inside the interval grid: interval index and the
/// local coordinate t in [0,1].
struct IntervalPosition {
    int interval = 0;
    double t = 0.0;
};

/**
 * Uniform quadratic B-spline system on [0,1].
 *
 * K basis functions live on the uniform knot vector t_i = (i - 2) h,
 * i = 0..K+2, with h = 1/(K-2). The unit interval is covered by the K-2
 * interior knot intervals, each of which sees exactly the three basis
 * functions j, j+1, j+2, so the basis is a partition of unity on [0,1].
 *
 * Basis pieces are derived once with the Cox-de Boor recursion and stored as
 * per-interval quadratic coefficients in the local coordinate. All integrals
 * are evaluated by Gauss-Legendre rules that are exact for the integrand
 * degree (2 points for single bases, 3 points for products).
 */
class BasisGrid {
public:
    explicit BasisGrid(int k_basis);

    int size() const { return k_basis_; }
    int interval_count() const { return k_basis_ - 2; }
    double knot_step() const { return step_; }
    const std::vector<double>& knots() const { return knots_; }

    IntervalPosition locate(double x) const;

    ActiveBasis eval_active(double x) const;
    Eigen::VectorXd eval_all(double x) const;

    /// Values of the three active pieces of interval `interval` at local coordinate t.
    std::array<double, 3> local_values(int interval, double t) const;

    /// Component k is the integral of f_k over [0, x].
    Eigen::VectorXd integral_to(double x) const;

    /// Gram matrix of the basis over [0,1]; banded with |k - l| <= 2.
    const Eigen::MatrixXd& mass_matrix() const { return mass_; }

    /// Entry (k,l) is the integral of f_k f_l over [0, x].
    Eigen::MatrixXd pair_integral_to(double x) const;

    /// Row-major 3x3 matrix of integrals of products of the active pieces of
    /// `interval` over the local range [0, t] (in x units).
    std::array<double, 9> local_pair_integral(int interval, double t) const;
    const std::array<double, 9>& interval_pair_integral(int interval) const {
        return interval_pair_integral_[interval];
    }

private:
    void check_domain(double x) const;

    int k_basis_;
    double step_;
    std::vector<double> knots_;
    // coeffs_[interval][piece] = (c0, c1, c2) with piece(t) = c0 + c1 t + c2 t^2
    std::vector<std::array<std::array<double, 3>, 3>> coeffs_;
    // Full-interval integrals, same layout as the accessors above.
    std::vector<std::array<double, 3>> interval_integral_;
    std::vector<std::array<double, 9>> interval_pair_integral_;
    Eigen::MatrixXd mass_;
};

/// Cox-de Boor recursion for B-spline i of degree p on an arbitrary knot vector.
/// Uses half-open support [t_i, t_{i+p+1}).
double cox_de_boor(const std::vector<double>& knots, int i, int degree, double x);

}  // namespace trde
