#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trde/model.hpp"

namespace trde {

/// Raised when a conditional distribution has no mass.
class DegenerateConditional : public std::runtime_error {
public:
    explicit DegenerateConditional(int axis)
        : std::runtime_error("degenerate conditional distribution at model axis " +
                             std::to_string(axis)),
          axis_(axis) {}
    int axis() const { return axis_; }

private:
    int axis_;
};

/// Banded symmetric K x K matrix with half-bandwidth 2; band(k, 2 + o) = W(k, k + o).
using BandWeights = Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor>;

/**
 * Precomputed state for exact sampling from a TrdeModel.
 *
 * Everything here lives on the Kronecker-squared ring (ranks R^2):
 * marginal[d] is core d marginalized with its mass matrix, and
 * right[d] = marginal[d+1] ... marginal[D-1] integrates out every axis
 * after d (right[D-1] is the identity).
 */
struct SamplePlan {
    std::vector<Eigen::MatrixXd> marginal;
    std::vector<Eigen::MatrixXd> right;
    /// Conditional weights of axis 0, which do not depend on any sample.
    BandWeights first_weights;
    std::uint64_t model_version = 0;
};

SamplePlan build_plan(const TrdeModel& model);

/// Conditional weights W for axis d given the running left product
/// L = Q_0(x_0) ... Q_{d-1}(x_{d-1}); density of x_d is sum W(k,l) f_k f_l.
BandWeights conditional_weights(const TrdeModel& model, const SamplePlan& plan, int axis,
                                const RowMatrix& left);

/// Solves CDF(x) = u on [0,1] for the banded quadratic-form density.
double invert_conditional_cdf(const BasisGrid& grid, const BandWeights& weights, double u,
                              int axis);

/// Conditional CDF at x for the banded quadratic-form density, normalized.
double conditional_cdf(const BasisGrid& grid, const BandWeights& weights, double x);

/// Maps u in [0,1)^D to a sample; u[d] drives model axis d and the result is
/// in data-dimension order.
std::vector<double> sample_one(const TrdeModel& model, const SamplePlan& plan,
                               std::span<const double> u);

/// n samples using the counter-based stream keyed by (seed, row, axis).
SampleMatrix sample_batch(const TrdeModel& model, const SamplePlan& plan, std::size_t n,
                          std::uint64_t seed, int threads = 1);

}  // namespace trde
