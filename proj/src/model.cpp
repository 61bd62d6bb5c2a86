#include "trde/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "trde/parallel.hpp"

namespace trde {

namespace {

std::atomic<std::uint64_t> g_next_version{1};

void validate_permutation(const std::vector<int>& perm, int dims) {
    if (static_cast<int>(perm.size()) != dims) {
        throw std::invalid_argument("permutation length " + std::to_string(perm.size()) +
                                    " does not match dimension " + std::to_string(dims));
    }
    std::vector<bool> seen(dims, false);
    for (int p : perm) {
        if (p < 0 || p >= dims || seen[p]) {
            throw std::invalid_argument("permutation is not a bijection on 0.." +
                                        std::to_string(dims - 1));
        }
        seen[p] = true;
    }
}

void check_unit(double x, int dim) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("coordinate " + std::to_string(x) + " of dimension " +
                                std::to_string(dim) + " outside [0,1]");
    }
}

Eigen::MatrixXd kron(const RowMatrix& a, const RowMatrix& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Q_d(x) accumulated into `out` from the three active slices.
void fill_factor(const Core& core, const ActiveBasis& active, RowMatrix& out) {
    out.setZero(core.left_rank(), core.right_rank());
    for (int a = 0; a < 3; ++a) {
        out.noalias() += active.values[a] * core.slice(active.first + a);
    }
}

}  // namespace

std::shared_ptr<const BasisGrid> shared_grid(int k_basis) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const BasisGrid>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[k_basis];
    if (!slot) {
        slot = std::make_shared<const BasisGrid>(k_basis);
    }
    return slot;
}

TrdeModel::TrdeModel(TrCores coeff, std::vector<int> permutation)
    : coeff_(std::move(coeff)), permutation_(std::move(permutation)) {
    validate_permutation(permutation_, dims());
    grids_.reserve(coeff_.order());
    for (const auto& core : coeff_.cores()) {
        grids_.push_back(shared_grid(core.mode()));
    }
    touch();
}

TrdeModel TrdeModel::random(int dims, int k_basis, int rank, std::vector<int> permutation,
                            std::uint64_t seed) {
    if (dims < 1 || rank < 1) {
        throw std::invalid_argument("TrdeModel::random: dims and rank must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> entry(0.9, 1.1);
    std::vector<Core> cores;
    for (int d = 0; d < dims; ++d) {
        Core core(rank, k_basis, rank);
        for (double& v : core.data()) {
            v = entry(rng);
        }
        cores.push_back(std::move(core));
    }
    TrdeModel model(TrCores(std::move(cores)), std::move(permutation));
    model.rescale_partition(1.0);
    return model;
}

TrdeModel TrdeModel::uniform(int dims, int k_basis) {
    std::vector<Core> cores;
    for (int d = 0; d < dims; ++d) {
        cores.emplace_back(1, k_basis, 1, std::vector<double>(k_basis, 1.0));
    }
    std::vector<int> identity(dims);
    for (int d = 0; d < dims; ++d) {
        identity[d] = d;
    }
    return TrdeModel(TrCores(std::move(cores)), std::move(identity));
}

void TrdeModel::touch() { version_ = g_next_version.fetch_add(1); }

Core& TrdeModel::mutable_core(int axis) {
    touch();
    return coeff_[axis];
}

void TrdeModel::set_cores(TrCores coeff) {
    if (coeff.mode_sizes() != coeff_.mode_sizes()) {
        throw std::invalid_argument("set_cores: mode sizes differ from the model's grids");
    }
    coeff_ = std::move(coeff);
    touch();
}

void TrdeModel::scale(double factor) {
    for (std::size_t d = 0; d < coeff_.order(); ++d) {
        for (double& v : coeff_[d].data()) {
            v *= factor;
        }
    }
    touch();
}

double TrdeModel::rescale_partition(double target) {
    const double z = partition_function();
    if (!(z > 0.0) || !std::isfinite(z)) {
        throw std::runtime_error("rescale_partition: partition function is " + std::to_string(z));
    }
    const double factor = std::pow(target / z, 1.0 / (2.0 * dims()));
    scale(factor);
    return factor;
}

RowMatrix TrdeModel::phi_factor(int axis, double x) const {
    RowMatrix out;
    fill_factor(coeff_[axis], grids_[axis]->eval_active(x), out);
    return out;
}

double TrdeModel::amplitude(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dims()) {
        throw std::invalid_argument("amplitude: point has wrong dimension");
    }
    RowMatrix product;
    RowMatrix factor;
    for (int d = 0; d < dims(); ++d) {
        const double xd = x[permutation_[d]];
        check_unit(xd, permutation_[d]);
        fill_factor(coeff_[d], grids_[d]->eval_active(xd), factor);
        if (d == 0) {
            product = factor;
        } else {
            product = product * factor;
        }
    }
    return product.trace();
}

double TrdeModel::unnormalized_density(std::span<const double> x) const {
    const double t = amplitude(x);
    return t * t;
}

double TrdeModel::partition_function() const {
    // Each core is contracted with its mass matrix along the mode index, then
    // paired with the original core: sum_n G(:,n,:) kron (sum_m M(n,m) G(:,m,:)).
    Eigen::MatrixXd running;
    for (int d = 0; d < dims(); ++d) {
        Eigen::MatrixXd transfer = pair_transfer(coeff_[d], mass(d), 2);
        running = d == 0 ? std::move(transfer) : Eigen::MatrixXd(running * transfer);
    }
    return running.trace();
}

double TrdeModel::partition_function_kron() const {
    const TrCores squared = kron_square(coeff_);
    std::map<int, Eigen::VectorXd> weights;
    for (int d = 0; d < dims(); ++d) {
        const Eigen::MatrixXd& m = mass(d);
        // Paired index k * K + l.
        Eigen::VectorXd flat(m.size());
        for (Eigen::Index k = 0; k < m.rows(); ++k) {
            for (Eigen::Index l = 0; l < m.cols(); ++l) {
                flat(k * m.cols() + l) = m(k, l);
            }
        }
        weights[d] = std::move(flat);
    }
    const TrCores scalar_ring = marginalize(squared, weights);
    std::vector<int> origin(dims(), 0);
    return element(scalar_ring, origin);
}

double TrdeModel::log_likelihood(const SampleMatrix& batch, int threads) const {
    if (batch.rows() == 0) {
        throw std::invalid_argument("log_likelihood: empty batch");
    }
    if (batch.cols() != dims()) {
        throw std::invalid_argument("log_likelihood: batch has wrong dimension");
    }
    if (!batch.allFinite()) {
        throw std::invalid_argument("log_likelihood: non-finite input");
    }
    std::vector<double> partial(chunk_count(batch.rows()), 0.0);
    parallel_chunks(batch.rows(), threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double t = amplitude({batch.row(i).data(), static_cast<std::size_t>(dims())});
            sum += std::log(t * t + kLogFloor);
        }
        partial[c] = sum;
    });
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total - static_cast<double>(batch.rows()) * std::log(partition_function());
}

double TrdeModel::marginal_density(const DensityQuery& query) const {
    enum class Kind { unset, fixed, marginalized, upper };
    std::vector<Kind> kind(dims(), Kind::unset);
    auto claim = [&](int dim, Kind k) {
        if (dim < 0 || dim >= dims()) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " out of range");
        }
        if (kind[dim] != Kind::unset) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " appears more than once");
        }
        kind[dim] = k;
    };
    for (const auto& [dim, value] : query.fixed) {
        claim(dim, Kind::fixed);
        check_unit(value, dim);
    }
    for (int dim : query.marginalized) {
        claim(dim, Kind::marginalized);
    }
    for (const auto& [dim, value] : query.upper_limits) {
        claim(dim, Kind::upper);
        check_unit(value, dim);
    }
    for (int dim = 0; dim < dims(); ++dim) {
        if (kind[dim] == Kind::unset) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " is neither fixed nor integrated");
        }
    }

    std::vector<Eigen::MatrixXd> transfers;
    transfers.reserve(dims());
    for (int d = 0; d < dims(); ++d) {
        const int dim = permutation_[d];
        switch (kind[dim]) {
            case Kind::fixed: {
                const RowMatrix q = phi_factor(d, query.fixed.at(dim));
                transfers.push_back(kron(q, q));
                break;
            }
            case Kind::marginalized:
                transfers.push_back(pair_transfer(coeff_[d], mass(d), 2));
                break;
            case Kind::upper:
                transfers.push_back(pair_transfer(
                    coeff_[d], grids_[d]->pair_integral_to(query.upper_limits.at(dim)), 2));
                break;
            case Kind::unset:
                break;
        }
    }
    return ring_trace(transfers);
}

double TrdeModel::conditional_density(const std::map<int, double>& target,
                                      const std::map<int, double>& given) const {
    DensityQuery joint;
    DensityQuery evidence;
    for (const auto& [dim, value] : given) {
        joint.fixed[dim] = value;
        evidence.fixed[dim] = value;
    }
    for (const auto& [dim, value] : target) {
        if (given.count(dim) != 0) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " is both target and evidence");
        }
        joint.fixed[dim] = value;
        evidence.marginalized.push_back(dim);
    }
    for (int dim = 0; dim < dims(); ++dim) {
        if (joint.fixed.count(dim) == 0) {
            joint.marginalized.push_back(dim);
            evidence.marginalized.push_back(dim);
        }
    }
    const double denominator = marginal_density(evidence);
    if (!(denominator > 0.0)) {
        throw std::domain_error("conditional_density: evidence has zero density");
    }
    return marginal_density(joint) / denominator;
}

CoreGradients TrdeModel::zero_gradients() const {
    CoreGradients out;
    out.reserve(coeff_.order());
    for (const auto& core : coeff_.cores()) {
        out.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(core.size())));
    }
    return out;
}

double accumulate_amplitude_gradient(const TrdeModel& model, std::span<const double> x,
                                     double weight, CoreGradients& grad) {
    const int dims = model.dims();
    const auto& perm = model.permutation();
    std::vector<ActiveBasis> active(dims);
    std::vector<RowMatrix> factor(dims);
    for (int d = 0; d < dims; ++d) {
        const double xd = x[perm[d]];
        check_unit(xd, perm[d]);
        active[d] = model.grid(d).eval_active(xd);
        fill_factor(model.cores()[d], active[d], factor[d]);
    }
    // prefix[d] = Q_0 ... Q_{d-1}; suffix[d] = Q_d ... Q_{D-1}.
    std::vector<RowMatrix> prefix(dims + 1);
    std::vector<RowMatrix> suffix(dims + 1);
    const int r0 = model.cores()[0].left_rank();
    prefix[0] = RowMatrix::Identity(r0, r0);
    for (int d = 0; d < dims; ++d) {
        prefix[d + 1] = prefix[d] * factor[d];
    }
    suffix[dims] = RowMatrix::Identity(r0, r0);
    for (int d = dims - 1; d >= 0; --d) {
        suffix[d] = factor[d] * suffix[d + 1];
    }
    const double t = prefix[dims].trace();
    const double scale = weight * 2.0 * t;
    for (int d = 0; d < dims; ++d) {
        // dT/dG_d(:,k,:) = f_k(x) * (suffix[d+1] prefix[d])^T
        const RowMatrix env = suffix[d + 1] * prefix[d];
        const Core& core = model.cores()[d];
        const auto slice = static_cast<Eigen::Index>(core.slice_size());
        for (int a = 0; a < 3; ++a) {
            const int k = active[d].first + a;
            SliceMap target(grad[d].data() + k * slice, core.left_rank(), core.right_rank());
            target.noalias() += (scale * active[d].values[a]) * env.transpose();
        }
    }
    return t;
}

double accumulate_partition_gradient(const TrdeModel& model, double weight, CoreGradients& grad) {
    const int dims = model.dims();
    std::vector<Eigen::MatrixXd> transfer(dims);
    for (int d = 0; d < dims; ++d) {
        transfer[d] = pair_transfer(model.cores()[d], model.mass(d), 2);
    }
    const int r0 = model.cores()[0].left_rank();
    std::vector<Eigen::MatrixXd> prefix(dims + 1);
    std::vector<Eigen::MatrixXd> suffix(dims + 1);
    prefix[0] = Eigen::MatrixXd::Identity(r0 * r0, r0 * r0);
    for (int d = 0; d < dims; ++d) {
        prefix[d + 1] = prefix[d] * transfer[d];
    }
    suffix[dims] = Eigen::MatrixXd::Identity(r0 * r0, r0 * r0);
    for (int d = dims - 1; d >= 0; --d) {
        suffix[d] = transfer[d] * suffix[d + 1];
    }
    const double z = prefix[dims].trace();

    for (int d = 0; d < dims; ++d) {
        const Core& core = model.cores()[d];
        const int left = core.left_rank();
        const int right = core.right_rank();
        const int modes = core.mode();
        // env[(j,y),(i,x)] with i,x < left and j,y < right.
        const Eigen::MatrixXd env = suffix[d + 1] * prefix[d];
        // Regroup to rows (i,j) and columns (x,y) so that
        // dZ/dG(i,k,j) = 2 sum_{x,y} env[(j,y),(i,x)] H_k(x,y) is one product.
        Eigen::MatrixXd regrouped(left * right, left * right);
        for (int i = 0; i < left; ++i) {
            for (int j = 0; j < right; ++j) {
                for (int x = 0; x < left; ++x) {
                    for (int y = 0; y < right; ++y) {
                        regrouped(i * right + j, x * right + y) = env(j * right + y, i * left + x);
                    }
                }
            }
        }
        // H_k = sum_l M(k,l) G(:,l,:), banded.
        const auto columns = core.slice_columns();
        const Eigen::MatrixXd& m = model.mass(d);
        Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(columns.rows(), modes);
        for (int k = 0; k < modes; ++k) {
            for (int l = std::max(0, k - 2); l <= std::min(modes - 1, k + 2); ++l) {
                mixed.col(k).noalias() += m(k, l) * columns.col(l);
            }
        }
        Eigen::Map<Eigen::MatrixXd> target(grad[d].data(), columns.rows(), modes);
        target.noalias() += (2.0 * weight) * (regrouped * mixed);
    }
    return z;
}

LikelihoodGradient grad_log_likelihood(const TrdeModel& model, const SampleMatrix& batch,
                                       int threads) {
    if (batch.rows() == 0) {
        throw std::invalid_argument("grad_log_likelihood: empty batch");
    }
    if (batch.cols() != model.dims()) {
        throw std::invalid_argument("grad_log_likelihood: batch has wrong dimension");
    }
    if (!batch.allFinite()) {
        throw std::invalid_argument("grad_log_likelihood: non-finite input");
    }
    const std::size_t chunks = chunk_count(batch.rows());
    std::vector<CoreGradients> partial_grad(chunks);
    std::vector<double> partial_ll(chunks, 0.0);
    std::vector<std::size_t> partial_floor(chunks, 0);
    const auto dims = static_cast<std::size_t>(model.dims());
    parallel_chunks(batch.rows(), threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        CoreGradients grad = model.zero_gradients();
        double ll = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::span<const double> x(batch.row(i).data(), dims);
            const double t = model.amplitude(x);
            const double q = t * t + kLogFloor;
            if (t * t <= kLogFloor) {
                ++partial_floor[c];
            }
            ll += std::log(q);
            accumulate_amplitude_gradient(model, x, 1.0 / q, grad);
        }
        partial_ll[c] = ll;
        partial_grad[c] = std::move(grad);
    });

    LikelihoodGradient out;
    out.gradient = model.zero_gradients();
    for (std::size_t c = 0; c < chunks; ++c) {
        out.log_likelihood += partial_ll[c];
        out.floored += partial_floor[c];
        for (std::size_t d = 0; d < dims; ++d) {
            out.gradient[d] += partial_grad[c][d];
        }
    }
    const auto n = static_cast<double>(batch.rows());
    CoreGradients z_grad = model.zero_gradients();
    const double z = accumulate_partition_gradient(model, 1.0, z_grad);
    out.log_likelihood -= n * std::log(z);
    for (std::size_t d = 0; d < dims; ++d) {
        out.gradient[d] -= (n / z) * z_grad[d];
    }
    return out;
}

}  // namespace trde
