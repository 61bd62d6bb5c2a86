#include "trde/tensor_ring.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace trde {

namespace {

// Maps X[(i,j),(x,y)] (row index i*cols_a + j, column index x*cols_b + y)
// to the Kronecker layout E[(i,x),(j,y)].
Eigen::MatrixXd kron_layout(const Eigen::MatrixXd& paired, int rows_a, int cols_a, int rows_b,
                            int cols_b) {
    Eigen::MatrixXd out(rows_a * rows_b, cols_a * cols_b);
    for (int i = 0; i < rows_a; ++i) {
        for (int j = 0; j < cols_a; ++j) {
            const int row = i * cols_a + j;
            for (int x = 0; x < rows_b; ++x) {
                for (int y = 0; y < cols_b; ++y) {
                    out(i * rows_b + x, j * cols_b + y) = paired(row, x * cols_b + y);
                }
            }
        }
    }
    return out;
}

void check_mode(const TrCores& cores, std::size_t d, int k) {
    if (k < 0 || k >= cores[d].mode()) {
        throw std::out_of_range("index " + std::to_string(k) + " out of range for dimension " +
                                std::to_string(d) + " of size " +
                                std::to_string(cores[d].mode()));
    }
}

}  // namespace

Core::Core(int left_rank, int mode, int right_rank)
    : Core(left_rank, mode, right_rank,
           std::vector<double>(static_cast<std::size_t>(left_rank) * mode * right_rank, 0.0)) {}

Core::Core(int left_rank, int mode, int right_rank, std::vector<double> data)
    : left_(left_rank), mode_(mode), right_(right_rank), data_(std::move(data)) {
    if (left_rank < 1 || mode < 1 || right_rank < 1) {
        throw std::invalid_argument("Core: ranks and mode size must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(left_rank) * mode * right_rank) {
        throw std::invalid_argument("Core: data size does not match shape");
    }
}

TrCores::TrCores(std::vector<Core> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) {
        throw std::invalid_argument("TrCores: need at least one core");
    }
    for (std::size_t d = 0; d < cores_.size(); ++d) {
        const auto& next = cores_[(d + 1) % cores_.size()];
        if (cores_[d].right_rank() != next.left_rank()) {
            throw std::invalid_argument("TrCores: rank mismatch between core " + std::to_string(d) +
                                        " and its successor");
        }
    }
}

std::vector<int> TrCores::ranks() const {
    std::vector<int> out;
    out.reserve(cores_.size() + 1);
    out.push_back(cores_.front().left_rank());
    for (const auto& core : cores_) {
        out.push_back(core.right_rank());
    }
    return out;
}

std::vector<int> TrCores::mode_sizes() const {
    std::vector<int> out;
    out.reserve(cores_.size());
    for (const auto& core : cores_) {
        out.push_back(core.mode());
    }
    return out;
}

std::size_t TrCores::parameter_count() const {
    std::size_t total = 0;
    for (const auto& core : cores_) {
        total += core.size();
    }
    return total;
}

double element(const TrCores& cores, std::span<const int> index) {
    if (index.size() != cores.order()) {
        throw std::invalid_argument("element: index length does not match tensor order");
    }
    check_mode(cores, 0, index[0]);
    RowMatrix product = cores[0].slice(index[0]);
    for (std::size_t d = 1; d < cores.order(); ++d) {
        check_mode(cores, d, index[d]);
        product = product * cores[d].slice(index[d]);
    }
    return product.trace();
}

Eigen::MatrixXd slice_transfer(const Core& a, const Core& b) {
    if (a.mode() != b.mode()) {
        throw std::invalid_argument("slice_transfer: mode sizes differ");
    }
    const Eigen::MatrixXd paired = a.slice_columns() * b.slice_columns().transpose();
    return kron_layout(paired, a.left_rank(), a.right_rank(), b.left_rank(), b.right_rank());
}

double inner_product(const TrCores& a, const TrCores& b) {
    if (a.order() != b.order()) {
        throw std::invalid_argument("inner_product: tensor orders differ");
    }
    for (std::size_t d = 0; d < a.order(); ++d) {
        if (a[d].mode() != b[d].mode()) {
            throw std::invalid_argument("inner_product: mode size mismatch at dimension " +
                                        std::to_string(d));
        }
    }
    Eigen::MatrixXd running = slice_transfer(a[0], b[0]);
    for (std::size_t d = 1; d < a.order(); ++d) {
        running = running * slice_transfer(a[d], b[d]);
    }
    return running.trace();
}

TrCores marginalize(const TrCores& cores, const std::map<int, Eigen::VectorXd>& weights) {
    std::vector<Core> out = cores.cores();
    for (const auto& [d, w] : weights) {
        if (d < 0 || static_cast<std::size_t>(d) >= cores.order()) {
            throw std::out_of_range("marginalize: dimension " + std::to_string(d) +
                                    " out of range");
        }
        const Core& core = cores[d];
        if (w.size() != core.mode()) {
            throw std::invalid_argument("marginalize: weight vector for dimension " +
                                        std::to_string(d) + " has length " +
                                        std::to_string(w.size()) + ", expected " +
                                        std::to_string(core.mode()));
        }
        const Eigen::VectorXd summed = core.slice_columns() * w;
        out[d] = Core(core.left_rank(), 1, core.right_rank(),
                      std::vector<double>(summed.data(), summed.data() + summed.size()));
    }
    return TrCores(std::move(out));
}

TrCores marginalize_sum(const TrCores& cores, const std::vector<int>& dims) {
    std::map<int, Eigen::VectorXd> weights;
    for (int d : dims) {
        if (d < 0 || static_cast<std::size_t>(d) >= cores.order()) {
            throw std::out_of_range("marginalize_sum: dimension " + std::to_string(d) +
                                    " out of range");
        }
        weights[d] = Eigen::VectorXd::Ones(cores[d].mode());
    }
    return marginalize(cores, weights);
}

TrCores kron_square(const TrCores& cores) {
    std::vector<Core> out;
    out.reserve(cores.order());
    for (const auto& core : cores.cores()) {
        const int left = core.left_rank();
        const int right = core.right_rank();
        const int mode = core.mode();
        Core squared(left * left, mode * mode, right * right);
        for (int k = 0; k < mode; ++k) {
            const auto gk = core.slice(k);
            for (int l = 0; l < mode; ++l) {
                const auto gl = core.slice(l);
                auto target = squared.slice(k * mode + l);
                for (int i = 0; i < left; ++i) {
                    for (int j = 0; j < right; ++j) {
                        target.block(i * left, j * right, left, right) = gk(i, j) * gl;
                    }
                }
            }
        }
        out.push_back(std::move(squared));
    }
    return TrCores(std::move(out));
}

Eigen::MatrixXd pair_transfer(const Core& core, const Eigen::MatrixXd& weights, int bandwidth) {
    const int mode = core.mode();
    if (weights.rows() != mode || weights.cols() != mode) {
        throw std::invalid_argument("pair_transfer: weight matrix must be mode x mode");
    }
    const auto columns = core.slice_columns();
    Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(columns.rows(), mode);
    const int band = bandwidth < 0 ? mode : bandwidth;
    for (int k = 0; k < mode; ++k) {
        const int lo = std::max(0, k - band);
        const int hi = std::min(mode - 1, k + band);
        for (int l = lo; l <= hi; ++l) {
            const double w = weights(k, l);
            if (w != 0.0) {
                mixed.col(k).noalias() += w * columns.col(l);
            }
        }
    }
    const Eigen::MatrixXd paired = columns * mixed.transpose();
    return kron_layout(paired, core.left_rank(), core.right_rank(), core.left_rank(),
                       core.right_rank());
}

double ring_trace(const std::vector<Eigen::MatrixXd>& transfers) {
    if (transfers.empty()) {
        throw std::invalid_argument("ring_trace: empty product");
    }
    Eigen::MatrixXd running = transfers.front();
    for (std::size_t d = 1; d < transfers.size(); ++d) {
        running = running * transfers[d];
    }
    return running.trace();
}

TrCores rotate(const TrCores& cores, int shift) {
    const int order = static_cast<int>(cores.order());
    const int s = ((shift % order) + order) % order;
    std::vector<Core> out;
    out.reserve(order);
    for (int d = 0; d < order; ++d) {
        out.push_back(cores[(d + s) % order]);
    }
    return TrCores(std::move(out));
}

std::size_t DenseTensor::offset(std::span<const int> index) const {
    if (index.size() != shape.size()) {
        throw std::invalid_argument("DenseTensor: index length mismatch");
    }
    std::size_t pos = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (index[d] < 0 || index[d] >= shape[d]) {
            throw std::out_of_range("DenseTensor: index out of range");
        }
        pos = pos * shape[d] + index[d];
    }
    return pos;
}

double DenseTensor::at(std::span<const int> index) const { return values[offset(index)]; }

DenseTensor to_dense(const TrCores& cores) {
    DenseTensor out;
    out.shape = cores.mode_sizes();
    std::size_t total = 1;
    for (int n : out.shape) {
        total *= static_cast<std::size_t>(n);
        if (total > kDenseLimit) {
            throw std::length_error("to_dense: tensor exceeds " + std::to_string(kDenseLimit) +
                                    " entries");
        }
    }
    out.values.resize(total);
    std::vector<int> index(out.shape.size(), 0);
    for (std::size_t pos = 0; pos < total; ++pos) {
        out.values[pos] = element(cores, index);
        for (int d = static_cast<int>(index.size()) - 1; d >= 0; --d) {
            if (++index[d] < out.shape[d]) {
                break;
            }
            index[d] = 0;
        }
    }
    return out;
}

}  // namespace trde
