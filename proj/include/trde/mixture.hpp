#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trde/model.hpp"
#include "trde/sampler.hpp"

namespace trde {

using Permutation = std::vector<int>;

/// Canonical representative of a circular arrangement: lexicographically
/// smallest among its rotations and reflections.
Permutation canonical_circular(const Permutation& perm);

/// max(1, (D-1)!/2), saturating at the largest uint64.
std::uint64_t circular_count(int dims);

struct PermutationSet {
    std::vector<Permutation> perms;
    std::size_t size() const { return perms.size(); }
};

/**
 * All canonical circular permutations of 0..D-1 when there are at most
 * `limit` of them (or no limit is given); otherwise `limit` distinct classes
 * drawn uniformly without replacement. The identity arrangement is always
 * the first entry, so a single-component set is the plain TRDE ordering.
 */
PermutationSet enumerate_circular(int dims, std::optional<std::size_t> limit = std::nullopt,
                                  std::uint64_t seed = 0);

/// Mixture of TRDE components over distinct circular permutations. Component
/// weights are derived from the component masses, never stored.
class TermModel {
public:
    explicit TermModel(std::vector<TrdeModel> components);

    /// M components with random cores (shared K and rank) over the given permutations.
    static TermModel random(int dims, int k_basis, int rank, const PermutationSet& perms,
                            std::uint64_t seed);

    int dims() const { return components_.front().dims(); }
    std::size_t size() const { return components_.size(); }
    const TrdeModel& component(std::size_t m) const { return components_[m]; }
    TrdeModel& mutable_component(std::size_t m);
    const std::vector<TrdeModel>& components() const { return components_; }
    std::uint64_t version() const { return version_; }
    std::size_t parameter_count() const;

    std::vector<double> partition_functions() const;
    /// Multiplies every core of every component by one common factor so that
    /// sum_m Z_m == target; ratios between components are preserved.
    double rescale_total_mass(double target);

private:
    std::vector<TrdeModel> components_;
    std::uint64_t version_ = 0;
};

double mixture_unnormalized(const TermModel& term, std::span<const double> x);

/// sum_i log(sum_m q_m(x_i) / sum_m Z_m).
double mixture_log_likelihood(const TermModel& term, const SampleMatrix& batch, int threads = 1);

struct MixtureGradient {
    double log_likelihood = 0.0;
    std::vector<CoreGradients> gradient;  // per component
    std::vector<double> partition;        // Z_m
    std::size_t floored = 0;
};

MixtureGradient grad_mixture_log_likelihood(const TermModel& term, const SampleMatrix& batch,
                                            int threads = 1);

/// sigma_m = Z_m / sum Z.
std::vector<double> sigma_weights(const TermModel& term);

/// Exact mixture samples: component m ~ Categorical(sigma), then the
/// component's inverse-CDF sampler. Deterministic under seed.
SampleMatrix mixture_sample(const TermModel& term, std::size_t n, std::uint64_t seed,
                            int threads = 1);

}  // namespace trde
