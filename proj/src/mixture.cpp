#include "trde/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "trde/parallel.hpp"
#include "trde/random.hpp"

namespace trde {

Permutation canonical_circular(const Permutation& perm) {
    const std::size_t n = perm.size();
    if (n == 0) {
        return perm;
    }
    Permutation best = perm;
    Permutation candidate(n);
    for (int direction = 0; direction < 2; ++direction) {
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                candidate[i] = direction == 0 ? perm[(s + i) % n] : perm[(s + n - i) % n];
            }
            if (candidate < best) {
                best = candidate;
            }
        }
    }
    return best;
}

std::uint64_t circular_count(int dims) {
    if (dims <= 3) {
        return 1;
    }
    // (D-1)!/2 = 3 * 4 * ... * (D-1)
    std::uint64_t count = 1;
    for (int k = 3; k <= dims - 1; ++k) {
        if (count > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(k)) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        count *= static_cast<std::uint64_t>(k);
    }
    return count;
}

PermutationSet enumerate_circular(int dims, std::optional<std::size_t> limit, std::uint64_t seed) {
    if (dims < 2) {
        throw std::invalid_argument("enumerate_circular: need D >= 2, got " + std::to_string(dims));
    }
    if (limit && *limit == 0) {
        throw std::invalid_argument("enumerate_circular: limit must be >= 1");
    }
    Permutation identity(dims);
    std::iota(identity.begin(), identity.end(), 0);
    const std::uint64_t total = circular_count(dims);

    PermutationSet out;
    if (!limit || total <= *limit) {
        // Canonical forms start with 0 and, for D >= 3, have perm[1] < perm[D-1].
        Permutation rest(identity.begin() + 1, identity.end());
        do {
            if (dims < 3 || rest.front() < rest.back()) {
                Permutation p{0};
                p.insert(p.end(), rest.begin(), rest.end());
                out.perms.push_back(std::move(p));
            }
        } while (std::next_permutation(rest.begin(), rest.end()));
        return out;
    }

    std::mt19937_64 rng(seed);
    std::set<Permutation> seen{identity};
    out.perms.push_back(identity);
    Permutation draw = identity;
    while (out.perms.size() < *limit) {
        std::shuffle(draw.begin(), draw.end(), rng);
        Permutation canon = canonical_circular(draw);
        if (seen.insert(canon).second) {
            out.perms.push_back(std::move(canon));
        }
    }
    return out;
}

TermModel::TermModel(std::vector<TrdeModel> components) : components_(std::move(components)) {
    if (components_.empty()) {
        throw std::invalid_argument("TermModel: need at least one component");
    }
    const auto modes = components_.front().cores().mode_sizes();
    for (const auto& c : components_) {
        if (c.cores().mode_sizes() != modes) {
            throw std::invalid_argument("TermModel: components must share dimension and bases");
        }
    }
    version_ = 1;
}

TermModel TermModel::random(int dims, int k_basis, int rank, const PermutationSet& perms,
                            std::uint64_t seed) {
    std::vector<TrdeModel> components;
    components.reserve(perms.size());
    for (std::size_t m = 0; m < perms.size(); ++m) {
        components.push_back(TrdeModel::random(dims, k_basis, rank, perms.perms[m],
                                               m == 0 ? seed : mix64(seed + m)));
    }
    return TermModel(std::move(components));
}

TrdeModel& TermModel::mutable_component(std::size_t m) {
    ++version_;
    return components_[m];
}

std::size_t TermModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& c : components_) {
        total += c.parameter_count();
    }
    return total;
}

std::vector<double> TermModel::partition_functions() const {
    std::vector<double> z;
    z.reserve(components_.size());
    for (const auto& c : components_) {
        z.push_back(c.partition_function());
    }
    return z;
}

double TermModel::rescale_total_mass(double target) {
    const auto z = partition_functions();
    const double total = std::accumulate(z.begin(), z.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::runtime_error("rescale_total_mass: total mass is " + std::to_string(total));
    }
    const double factor = std::pow(target / total, 1.0 / (2.0 * dims()));
    for (auto& c : components_) {
        c.scale(factor);
    }
    ++version_;
    return factor;
}

double mixture_unnormalized(const TermModel& term, std::span<const double> x) {
    double sum = 0.0;
    for (const auto& c : term.components()) {
        sum += c.unnormalized_density(x);
    }
    return sum;
}

double mixture_log_likelihood(const TermModel& term, const SampleMatrix& batch, int threads) {
    if (batch.rows() == 0) {
        throw std::invalid_argument("mixture_log_likelihood: empty batch");
    }
    if (batch.cols() != term.dims()) {
        throw std::invalid_argument("mixture_log_likelihood: batch has wrong dimension");
    }
    if (!batch.allFinite()) {
        throw std::invalid_argument("mixture_log_likelihood: non-finite input");
    }
    const auto dims = static_cast<std::size_t>(term.dims());
    std::vector<double> partial(chunk_count(batch.rows()), 0.0);
    parallel_chunks(batch.rows(), threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sum += std::log(mixture_unnormalized(term, {batch.row(i).data(), dims}) + kLogFloor);
        }
        partial[c] = sum;
    });
    const auto z = term.partition_functions();
    const double total_z = std::accumulate(z.begin(), z.end(), 0.0);
    return std::accumulate(partial.begin(), partial.end(), 0.0) -
           static_cast<double>(batch.rows()) * std::log(total_z);
}

MixtureGradient grad_mixture_log_likelihood(const TermModel& term, const SampleMatrix& batch,
                                            int threads) {
    if (batch.rows() == 0) {
        throw std::invalid_argument("grad_mixture_log_likelihood: empty batch");
    }
    if (batch.cols() != term.dims()) {
        throw std::invalid_argument("grad_mixture_log_likelihood: batch has wrong dimension");
    }
    if (!batch.allFinite()) {
        throw std::invalid_argument("grad_mixture_log_likelihood: non-finite input");
    }
    const std::size_t components = term.size();
    const auto dims = static_cast<std::size_t>(term.dims());
    const std::size_t chunks = chunk_count(batch.rows());
    std::vector<std::vector<CoreGradients>> partial_grad(chunks);
    std::vector<double> partial_ll(chunks, 0.0);
    std::vector<std::size_t> partial_floor(chunks, 0);

    parallel_chunks(batch.rows(), threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<CoreGradients> grad;
        grad.reserve(components);
        for (const auto& comp : term.components()) {
            grad.push_back(comp.zero_gradients());
        }
        double ll = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::span<const double> x(batch.row(i).data(), dims);
            double q = 0.0;
            for (const auto& comp : term.components()) {
                q += comp.unnormalized_density(x);
            }
            if (q <= kLogFloor) {
                ++partial_floor[c];
            }
            q += kLogFloor;
            ll += std::log(q);
            for (std::size_t m = 0; m < components; ++m) {
                accumulate_amplitude_gradient(term.component(m), x, 1.0 / q, grad[m]);
            }
        }
        partial_ll[c] = ll;
        partial_grad[c] = std::move(grad);
    });

    MixtureGradient out;
    out.gradient.reserve(components);
    for (const auto& comp : term.components()) {
        out.gradient.push_back(comp.zero_gradients());
    }
    for (std::size_t c = 0; c < chunks; ++c) {
        out.log_likelihood += partial_ll[c];
        out.floored += partial_floor[c];
        for (std::size_t m = 0; m < components; ++m) {
            for (std::size_t d = 0; d < dims; ++d) {
                out.gradient[m][d] += partial_grad[c][m][d];
            }
        }
    }

    std::vector<CoreGradients> z_grad;
    out.partition.resize(components);
    for (std::size_t m = 0; m < components; ++m) {
        z_grad.push_back(term.component(m).zero_gradients());
        out.partition[m] = accumulate_partition_gradient(term.component(m), 1.0, z_grad[m]);
    }
    const double total_z = std::accumulate(out.partition.begin(), out.partition.end(), 0.0);
    const auto n = static_cast<double>(batch.rows());
    out.log_likelihood -= n * std::log(total_z);
    for (std::size_t m = 0; m < components; ++m) {
        for (std::size_t d = 0; d < dims; ++d) {
            out.gradient[m][d] -= (n / total_z) * z_grad[m][d];
        }
    }
    return out;
}

std::vector<double> sigma_weights(const TermModel& term) {
    auto z = term.partition_functions();
    const double total = std::accumulate(z.begin(), z.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::domain_error("sigma_weights: total mass is zero");
    }
    for (double& v : z) {
        v /= total;
    }
    return z;
}

SampleMatrix mixture_sample(const TermModel& term, std::size_t n, std::uint64_t seed,
                            int threads) {
    if (n == 0) {
        throw std::invalid_argument("mixture_sample: n must be >= 1");
    }
    const auto sigma = sigma_weights(term);
    std::vector<double> cumulative(sigma.size());
    std::partial_sum(sigma.begin(), sigma.end(), cumulative.begin());
    std::vector<SamplePlan> plans;
    plans.reserve(term.size());
    for (const auto& comp : term.components()) {
        plans.push_back(build_plan(comp));
    }
    const int dims = term.dims();
    SampleMatrix out(static_cast<Eigen::Index>(n), dims);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> u(dims);
        for (std::size_t i = begin; i < end; ++i) {
            // Column D of the stream picks the component; columns 0..D-1 drive the sampler.
            const double pick = counter_uniform(seed, i, static_cast<std::uint64_t>(dims)) *
                                cumulative.back();
            std::size_t m = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
            m = std::min(m, term.size() - 1);
            for (int d = 0; d < dims; ++d) {
                u[d] = counter_uniform(seed, i, static_cast<std::uint64_t>(d));
            }
            const auto x = sample_one(term.component(m), plans[m], u);
            for (int d = 0; d < dims; ++d) {
                out(static_cast<Eigen::Index>(i), d) = x[d];
            }
        }
    });
    return out;
}

}  // namespace trde
