#include "trde/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "trde/parallel.hpp"
#include "trde/random.hpp"

namespace trde {

namespace {

constexpr int kBisectionSteps = 50;

// W(k,l) for |k - l| <= 2 from W = G^T N G, with N given in the regrouped
// layout (rows (a, j), columns (b, y)).
BandWeights band_from_regrouped(const Core& core, const Eigen::MatrixXd& regrouped) {
    const auto columns = core.slice_columns();
    const Eigen::MatrixXd mixed = regrouped * columns;
    const int modes = core.mode();
    BandWeights band = BandWeights::Zero(modes, 5);
    for (int k = 0; k < modes; ++k) {
        for (int o = -2; o <= 2; ++o) {
            const int l = k + o;
            if (l >= 0 && l < modes) {
                band(k, 2 + o) = columns.col(k).dot(mixed.col(l));
            }
        }
    }
    return band;
}

// General conditional weights. `left` is R_0 x R_axis; right is R_{axis+1}^2 x R_0^2.
BandWeights general_weights(const Core& core, const Eigen::MatrixXd& right, const RowMatrix& left) {
    const int r0 = static_cast<int>(left.rows());
    const int rl = core.left_rank();
    const int rr = core.right_rank();
    // regrouped[(a,j),(b,y)] = sum_{i',x'} right[(j,y),(i',x')] left[i',a] left[x',b]
    Eigen::MatrixXd regrouped(rl * rr, rl * rr);
    RowMatrix block(r0, r0);
    for (int j = 0; j < rr; ++j) {
        for (int y = 0; y < rr; ++y) {
            const int row = j * rr + y;
            for (int i = 0; i < r0; ++i) {
                for (int x = 0; x < r0; ++x) {
                    block(i, x) = right(row, i * r0 + x);
                }
            }
            const RowMatrix sandwiched = left.transpose() * block * left;
            for (int a = 0; a < rl; ++a) {
                for (int b = 0; b < rl; ++b) {
                    regrouped(a * rr + j, b * rr + y) = sandwiched(a, b);
                }
            }
        }
    }
    return band_from_regrouped(core, regrouped);
}

double block_dot(const BandWeights& band, int interval, const std::array<double, 9>& pieces) {
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            sum += band(interval + a, 2 + b - a) * pieces[a * 3 + b];
        }
    }
    return sum;
}

// Cumulative interval masses: prefix[j] is the mass of intervals [0, j).
std::vector<double> interval_prefix(const BasisGrid& grid, const BandWeights& band) {
    const int intervals = grid.interval_count();
    std::vector<double> prefix(intervals + 1, 0.0);
    for (int j = 0; j < intervals; ++j) {
        const double mass = block_dot(band, j, grid.interval_pair_integral(j));
        prefix[j + 1] = prefix[j] + std::max(mass, 0.0);
    }
    return prefix;
}

}  // namespace

SamplePlan build_plan(const TrdeModel& model) {
    const int dims = model.dims();
    SamplePlan plan;
    plan.marginal.resize(dims);
    plan.right.resize(dims);
    for (int d = 0; d < dims; ++d) {
        plan.marginal[d] = pair_transfer(model.cores()[d], model.mass(d), 2);
    }
    const int r0 = model.cores()[0].left_rank();
    plan.right[dims - 1] = Eigen::MatrixXd::Identity(r0 * r0, r0 * r0);
    for (int d = dims - 2; d >= 0; --d) {
        plan.right[d] = plan.marginal[d + 1] * plan.right[d + 1];
    }
    plan.first_weights =
        general_weights(model.cores()[0], plan.right[0], RowMatrix::Identity(r0, r0));
    plan.model_version = model.version();
    return plan;
}

BandWeights conditional_weights(const TrdeModel& model, const SamplePlan& plan, int axis,
                                const RowMatrix& left) {
    if (axis == 0) {
        return plan.first_weights;
    }
    const Core& core = model.cores()[axis];
    if (axis == model.dims() - 1) {
        // Nothing left to integrate: W = w w^T with w_k = Trace(L G(:,k,:)).
        const int modes = core.mode();
        Eigen::VectorXd w(modes);
        for (int k = 0; k < modes; ++k) {
            w(k) = (left * core.slice(k)).trace();
        }
        BandWeights band = BandWeights::Zero(modes, 5);
        for (int k = 0; k < modes; ++k) {
            for (int o = -2; o <= 2; ++o) {
                const int l = k + o;
                if (l >= 0 && l < modes) {
                    band(k, 2 + o) = w(k) * w(l);
                }
            }
        }
        return band;
    }
    return general_weights(core, plan.right[axis], left);
}

double conditional_cdf(const BasisGrid& grid, const BandWeights& weights, double x) {
    const auto prefix = interval_prefix(grid, weights);
    const double total = prefix.back();
    if (!(total > 0.0)) {
        throw DegenerateConditional(-1);
    }
    const auto pos = grid.locate(x);
    const double partial = block_dot(weights, pos.interval, grid.local_pair_integral(pos.interval, pos.t));
    return (prefix[pos.interval] + partial) / total;
}

double invert_conditional_cdf(const BasisGrid& grid, const BandWeights& weights, double u,
                              int axis) {
    const auto prefix = interval_prefix(grid, weights);
    const double total = prefix.back();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateConditional(axis);
    }
    const double target = u * total;
    const int intervals = grid.interval_count();
    // First interval whose cumulative mass passes the target.
    int j = static_cast<int>(std::upper_bound(prefix.begin() + 1, prefix.end(), target) -
                             (prefix.begin() + 1));
    j = std::min(j, intervals - 1);
    double lo = 0.0;
    double hi = 1.0;
    for (int step = 0; step < kBisectionSteps; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double value = prefix[j] + block_dot(weights, j, grid.local_pair_integral(j, mid));
        if (value < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double x = (j + 0.5 * (lo + hi)) * grid.knot_step();
    return std::clamp(x, 0.0, 1.0);
}

std::vector<double> sample_one(const TrdeModel& model, const SamplePlan& plan,
                               std::span<const double> u) {
    if (plan.model_version != model.version()) {
        throw std::logic_error("sample plan is stale: model changed after build_plan");
    }
    const int dims = model.dims();
    if (static_cast<int>(u.size()) != dims) {
        throw std::invalid_argument("sample_one: seed vector has wrong dimension");
    }
    std::vector<double> x(dims, 0.0);
    const int r0 = model.cores()[0].left_rank();
    RowMatrix left = RowMatrix::Identity(r0, r0);
    for (int d = 0; d < dims; ++d) {
        if (!(u[d] >= 0.0 && u[d] <= 1.0)) {
            throw std::domain_error("sample_one: seed outside the unit cube");
        }
        const BandWeights weights = conditional_weights(model, plan, d, left);
        const double xd = invert_conditional_cdf(model.grid(d), weights, u[d], d);
        x[model.permutation()[d]] = xd;
        if (d + 1 < dims) {
            left = left * model.phi_factor(d, xd);
            // The conditional is invariant to the scale of the left product.
            const double norm = left.cwiseAbs().maxCoeff();
            if (norm > 0.0) {
                left /= norm;
            }
        }
    }
    return x;
}

SampleMatrix sample_batch(const TrdeModel& model, const SamplePlan& plan, std::size_t n,
                          std::uint64_t seed, int threads) {
    if (n == 0) {
        throw std::invalid_argument("sample_batch: n must be >= 1");
    }
    const int dims = model.dims();
    SampleMatrix out(static_cast<Eigen::Index>(n), dims);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> u(dims);
        for (std::size_t i = begin; i < end; ++i) {
            for (int d = 0; d < dims; ++d) {
                u[d] = counter_uniform(seed, i, static_cast<std::uint64_t>(d));
            }
            const auto x = sample_one(model, plan, u);
            for (int d = 0; d < dims; ++d) {
                out(static_cast<Eigen::Index>(i), d) = x[d];
            }
        }
    });
    return out;
}

}  // namespace trde
