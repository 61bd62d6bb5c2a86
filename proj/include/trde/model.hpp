#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "trde/splines.hpp"
#include "trde/tensor_ring.hpp"

namespace trde {

/// Added to T(x)^2 before taking the log so exact zeros stay finite.
inline constexpr double kLogFloor = 1e-30;

/// N x D sample matrix, one sample per row.
using SampleMatrix = RowMatrix;

/// One gradient array per core, laid out like Core::data().
using CoreGradients = std::vector<Eigen::VectorXd>;

/// Shared, immutable basis grid for a given basis count.
std::shared_ptr<const BasisGrid> shared_grid(int k_basis);

/**
 * Query over data dimensions. Every dimension must appear in exactly one of
 * the three groups: evaluated at a point, integrated over [0,1], or
 * integrated over [0, upper].
 */
struct DensityQuery {
    std::map<int, double> fixed;
    std::vector<int> marginalized;
    std::map<int, double> upper_limits;
};

/**
 * Squared tensor-ring B-spline density component.
 *
 * q(x) = T(x)^2 with T(x) = Trace(Q_1(x_{p(1)}) ... Q_D(x_{p(D)})), where
 * Q_d(x) = sum_k f_k(x) G_d(:,k,:) and p is the permutation mapping model
 * axis -> data dimension. Inputs live in the unit cube.
 */
class TrdeModel {
public:
    TrdeModel(TrCores coeff, std::vector<int> permutation);

    /// Equal-rank model with entries drawn from U[0.9, 1.1], rescaled to Z = 1.
    static TrdeModel random(int dims, int k_basis, int rank, std::vector<int> permutation,
                            std::uint64_t seed);
    /// Rank-1 model with all-ones cores: T(x) == 1 on the unit cube.
    static TrdeModel uniform(int dims, int k_basis);

    int dims() const { return static_cast<int>(coeff_.order()); }
    const TrCores& cores() const { return coeff_; }
    const std::vector<int>& permutation() const { return permutation_; }
    const BasisGrid& grid(int axis) const { return *grids_[axis]; }
    const Eigen::MatrixXd& mass(int axis) const { return grids_[axis]->mass_matrix(); }
    std::uint64_t version() const { return version_; }
    std::size_t parameter_count() const { return coeff_.parameter_count(); }

    /// Mutable access; every call invalidates derived state such as sample plans.
    Core& mutable_core(int axis);
    void set_cores(TrCores coeff);
    void scale(double factor);
    /// Multiplies every core by (target / Z)^(1/(2D)); returns the factor used.
    double rescale_partition(double target = 1.0);

    RowMatrix phi_factor(int axis, double x) const;
    double amplitude(std::span<const double> x) const;
    double unnormalized_density(std::span<const double> x) const;

    /// Exact Z by contracting each core with its mass matrix and chaining the
    /// pairs through the inner-product recurrence.
    double partition_function() const;
    /// Same quantity via the materialized Kronecker-squared ring marginalized
    /// with the flattened mass matrices. Small models only.
    double partition_function_kron() const;

    double log_likelihood(const SampleMatrix& batch, int threads = 1) const;

    /// Unnormalized marginal / cumulative value; see DensityQuery.
    double marginal_density(const DensityQuery& query) const;
    /// p(target | given) with all other dimensions integrated out.
    double conditional_density(const std::map<int, double>& target,
                               const std::map<int, double>& given) const;

    /// Zero arrays shaped like the cores.
    CoreGradients zero_gradients() const;

private:
    void touch();

    TrCores coeff_;
    std::vector<int> permutation_;
    std::vector<std::shared_ptr<const BasisGrid>> grids_;
    std::uint64_t version_ = 0;
};

/// Adds weight * d(T(x)^2)/d(cores) into `grad`; returns T(x).
double accumulate_amplitude_gradient(const TrdeModel& model, std::span<const double> x,
                                     double weight, CoreGradients& grad);

/// Adds weight * dZ/d(cores) into `grad`; returns Z.
double accumulate_partition_gradient(const TrdeModel& model, double weight, CoreGradients& grad);

struct LikelihoodGradient {
    double log_likelihood = 0.0;
    CoreGradients gradient;
    std::size_t floored = 0;
};

/// Log-likelihood of the batch and its gradient with respect to every core.
LikelihoodGradient grad_log_likelihood(const TrdeModel& model, const SampleMatrix& batch,
                                       int threads = 1);

}  // namespace trde
