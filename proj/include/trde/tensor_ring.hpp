#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace trde {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SliceMap = Eigen::Map<RowMatrix>;
using ConstSliceMap = Eigen::Map<const RowMatrix>;

/**
 * Order-3 core G of shape (left_rank, mode, right_rank).
 *
 * Storage is mode-major: lateral slice G(:, k, :) is a contiguous row-major
 * left_rank x right_rank block, so slice(k) maps straight onto a matrix.
 */
class Core {
public:
    Core() = default;
    Core(int left_rank, int mode, int right_rank);
    Core(int left_rank, int mode, int right_rank, std::vector<double> data);

    int left_rank() const { return left_; }
    int mode() const { return mode_; }
    int right_rank() const { return right_; }
    std::size_t slice_size() const { return static_cast<std::size_t>(left_) * right_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int i, int k, int j) { return data_[k * slice_size() + i * right_ + j]; }
    double operator()(int i, int k, int j) const { return data_[k * slice_size() + i * right_ + j]; }

    SliceMap slice(int k) { return {data_.data() + k * slice_size(), left_, right_}; }
    ConstSliceMap slice(int k) const { return {data_.data() + k * slice_size(), left_, right_}; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// (left_rank * right_rank) x mode matrix whose column k is vec(G(:,k,:)).
    Eigen::Map<const Eigen::MatrixXd> slice_columns() const {
        return {data_.data(), static_cast<Eigen::Index>(slice_size()), mode_};
    }

private:
    int left_ = 0;
    int mode_ = 0;
    int right_ = 0;
    std::vector<double> data_;
};

/// A tensor in tensor-ring format: cores G_1..G_D with R_D == R_0.
class TrCores {
public:
    TrCores() = default;
    explicit TrCores(std::vector<Core> cores);

    std::size_t order() const { return cores_.size(); }
    const Core& operator[](std::size_t d) const { return cores_[d]; }
    Core& operator[](std::size_t d) { return cores_[d]; }
    const std::vector<Core>& cores() const { return cores_; }

    /// (R_0, ..., R_D) with R_D == R_0.
    std::vector<int> ranks() const;
    std::vector<int> mode_sizes() const;
    std::size_t parameter_count() const;

private:
    std::vector<Core> cores_;
};

/// Trace(G_1(:,i_1,:) ... G_D(:,i_D,:)).
double element(const TrCores& cores, std::span<const int> index);

/// sum_k A(:,k,:) kron B(:,k,:); one transfer step of the inner-product chain.
Eigen::MatrixXd slice_transfer(const Core& a, const Core& b);

/// <T_a, T_b> of the represented tensors, contracted core by core.
double inner_product(const TrCores& a, const TrCores& b);

/// Replaces core d, for every d in `weights`, by sum_k w_k G_d(:,k,:); those
/// dimensions end up with mode size 1.
TrCores marginalize(const TrCores& cores, const std::map<int, Eigen::VectorXd>& weights);

/// Plain summation over the lateral slices of the listed dimensions.
TrCores marginalize_sum(const TrCores& cores, const std::vector<int>& dims);

/// Kronecker-squared ring: ranks R_d^2, paired index k * I_d + l, slice
/// G(:,k,:) kron G(:,l,:). Element at ((k_d, l_d))_d equals
/// element(k) * element(l).
TrCores kron_square(const TrCores& cores);

/**
 * sum_{k,l} W(k,l) G(:,k,:) kron G(:,l,:) without forming the squared core.
 *
 * This is the transfer matrix of one kron_square core marginalized with
 * weights W. Only entries with |k - l| <= bandwidth are read; a negative
 * bandwidth reads the whole matrix.
 */
Eigen::MatrixXd pair_transfer(const Core& core, const Eigen::MatrixXd& weights,
                              int bandwidth = -1);

/// Trace of the ordered product of transfer matrices.
double ring_trace(const std::vector<Eigen::MatrixXd>& transfers);

/// Rotates the core list left by `shift` positions.
TrCores rotate(const TrCores& cores, int shift);

/// Dense tensor in row-major (last index fastest) order.
struct DenseTensor {
    std::vector<int> shape;
    std::vector<double> values;

    double at(std::span<const int> index) const;
    std::size_t offset(std::span<const int> index) const;
};

inline constexpr std::size_t kDenseLimit = 1'000'000;

/// Materializes the full tensor; only for products of mode sizes <= kDenseLimit.
DenseTensor to_dense(const TrCores& cores);

}  // namespace trde
