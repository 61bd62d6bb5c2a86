#include "trde/trainer.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "trde/parallel.hpp"
#include "trde/random.hpp"

namespace trde {

namespace {

constexpr double kAutoClip = 10.0;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

using Gradients = std::vector<CoreGradients>;

Gradients zeros_like(const TermModel& term) {
    Gradients out;
    out.reserve(term.size());
    for (const auto& c : term.components()) {
        out.push_back(c.zero_gradients());
    }
    return out;
}

double squared_norm(const Gradients& g) {
    double total = 0.0;
    for (const auto& comp : g) {
        for (const auto& core : comp) {
            total += core.squaredNorm();
        }
    }
    return total;
}

std::vector<TrCores> snapshot(const TermModel& term) {
    std::vector<TrCores> out;
    out.reserve(term.size());
    for (const auto& c : term.components()) {
        out.push_back(c.cores());
    }
    return out;
}

void restore(TermModel& term, const std::vector<TrCores>& cores) {
    for (std::size_t m = 0; m < term.size(); ++m) {
        term.mutable_component(m).set_cores(cores[m]);
    }
}

SampleMatrix gather(const SampleMatrix& data, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end) {
    SampleMatrix out(static_cast<Eigen::Index>(end - begin), data.cols());
    for (std::size_t i = begin; i < end; ++i) {
        out.row(static_cast<Eigen::Index>(i - begin)) = data.row(static_cast<Eigen::Index>(order[i]));
    }
    return out;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

Optimizer parse_optimizer(std::string_view name) {
    if (name == "adam" || name == "adaptive-moment") {
        return Optimizer::adam;
    }
    if (name == "sgd" || name == "plain-sgd") {
        return Optimizer::sgd;
    }
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view optimizer_name(Optimizer optimizer) {
    return optimizer == Optimizer::adam ? "adam" : "sgd";
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("batch_size must be >= 1");
    }
    if (max_epochs < 1) {
        throw std::invalid_argument("max_epochs must be >= 1");
    }
    if (patience < 1) {
        throw std::invalid_argument("patience must be >= 1");
    }
    if (grad_clip && !(*grad_clip > 0.0)) {
        throw std::invalid_argument("grad_clip must be > 0");
    }
    if (threads < 1) {
        throw std::invalid_argument("threads must be >= 1");
    }
}

std::vector<double> sample_nll(const TermModel& term, const SampleMatrix& batch, int threads) {
    if (batch.cols() != term.dims()) {
        throw std::invalid_argument("sample_nll: data has " + std::to_string(batch.cols()) +
                                    " columns, model has " + std::to_string(term.dims()));
    }
    const double log_z = std::log(sum_of(term.partition_functions()));
    const auto dims = static_cast<std::size_t>(term.dims());
    std::vector<double> out(static_cast<std::size_t>(batch.rows()));
    parallel_chunks(out.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double q = mixture_unnormalized(term, {batch.row(i).data(), dims});
            out[i] = q <= kLogFloor ? std::nan("") : log_z - std::log(q + kLogFloor);
        }
    });
    return out;
}

NllReport evaluate_nll(const TermModel& term, const Dataset& data, Split split, int threads) {
    const SampleMatrix rows = data.split(split);
    if (rows.rows() == 0) {
        throw std::invalid_argument("evaluate_nll: split '" + std::string(split_name(split)) +
                                    "' is empty");
    }
    const auto values = sample_nll(term, rows, threads);
    NllReport report;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : values) {
        if (std::isnan(v)) {
            ++report.floored;
            continue;
        }
        sum += v;
        sum_sq += v * v;
        ++report.count;
    }
    if (report.count == 0) {
        report.mean = std::numeric_limits<double>::infinity();
        return report;
    }
    const auto n = static_cast<double>(report.count);
    const double mean = sum / n;
    report.mean = mean + data.log_jacobian();
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    report.std_error = std::sqrt(var / n);
    return report;
}

NllReport evaluate_nll(const TrdeModel& model, const Dataset& data, Split split, int threads) {
    return evaluate_nll(TermModel({model}), data, split, threads);
}

TrainReport fit(TermModel& term, const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.dims() != term.dims()) {
        throw std::invalid_argument("fit: dataset has " + std::to_string(data.dims()) +
                                    " dimensions, model has " + std::to_string(term.dims()));
    }
    const SampleMatrix train = data.split(Split::train);
    if (train.rows() == 0 || data.split_size(Split::validation) == 0) {
        throw std::invalid_argument("fit: need non-empty train and validation splits");
    }
    const auto n_train = static_cast<std::size_t>(train.rows());
    const double target_mass = static_cast<double>(term.size());
    term.rescale_total_mass(target_mass);

    Gradients first_moment = zeros_like(term);
    Gradients second_moment = zeros_like(term);
    std::uint64_t step = 0;
    std::optional<double> clip = config.grad_clip;

    TrainReport report;
    report.best_val_nll = evaluate_nll(term, data, Split::validation, config.threads).mean;
    auto best = snapshot(term);
    std::size_t since_best = 0;
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::mt19937_64 rng(mix64(config.seed ^ mix64(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_ll = 0.0;
        std::size_t seen = 0;

        for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const std::size_t end = std::min(n_train, begin + config.batch_size);
            const SampleMatrix batch = gather(train, order, begin, end);
            const auto grad = grad_mixture_log_likelihood(term, batch, config.threads);
            const auto n = static_cast<double>(end - begin);
            if (!std::isfinite(grad.log_likelihood)) {
                report.diverged = true;
                report.diagnostic = "non-finite train log-likelihood at epoch " +
                                    std::to_string(epoch) + ", step " + std::to_string(step);
                break;
            }
            epoch_ll += grad.log_likelihood;
            seen += end - begin;

            // Ascent direction on the mean log-likelihood.
            Gradients direction = grad.gradient;
            double norm_sq = squared_norm(direction) / (n * n);
            if (!std::isfinite(norm_sq)) {
                if (clip) {
                    report.diverged = true;
                    report.diagnostic = "non-finite gradient at epoch " + std::to_string(epoch) +
                                        " with clipping already enabled";
                    break;
                }
                clip = kAutoClip;
                report.clipped = true;
                spdlog::warn("non-finite gradient at epoch {}; skipping step and clipping to norm {}",
                             epoch, kAutoClip);
                continue;
            }
            double factor = 1.0 / n;
            if (clip && std::sqrt(norm_sq) > *clip) {
                factor *= *clip / std::sqrt(norm_sq);
            }

            ++step;
            const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t m = 0; m < term.size(); ++m) {
                TrdeModel& comp = term.mutable_component(m);
                for (int d = 0; d < comp.dims(); ++d) {
                    const Eigen::VectorXd g = factor * direction[m][d];
                    Core& core = comp.mutable_core(d);
                    Eigen::Map<Eigen::VectorXd> params(core.data().data(),
                                                       static_cast<Eigen::Index>(core.size()));
                    if (config.optimizer == Optimizer::sgd) {
                        params += config.learning_rate * g;
                        continue;
                    }
                    auto& m1 = first_moment[m][d];
                    auto& m2 = second_moment[m][d];
                    m1 = kBeta1 * m1 + (1.0 - kBeta1) * g;
                    m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.cwiseAbs2();
                    params.array() += config.learning_rate * (m1.array() / correction1) /
                                      ((m2.array() / correction2).sqrt() + kAdamEps);
                }
            }

            // The likelihood is invariant to a common core scale c, so the
            // gradient at the rescaled point is the old one divided by c.
            double c = 1.0;
            try {
                c = term.rescale_total_mass(target_mass);
            } catch (const std::runtime_error& e) {
                report.diverged = true;
                report.diagnostic = std::string("gauge rescale failed: ") + e.what();
                break;
            }
            for (std::size_t m = 0; m < term.size(); ++m) {
                for (std::size_t d = 0; d < first_moment[m].size(); ++d) {
                    first_moment[m][d] /= c;
                    second_moment[m][d] /= c * c;
                }
            }
        }
        if (report.diverged) {
            break;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_nll = -epoch_ll / static_cast<double>(std::max<std::size_t>(seen, 1)) +
                           data.log_jacobian();
        record.val_nll = evaluate_nll(term, data, Split::validation, config.threads).mean;
        const auto z = term.partition_functions();
        record.sum_z = sum_of(z);
        record.sigma = sigma_weights(term);
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        spdlog::info("epoch {:4d}  train {:.5f}  val {:.5f}  sumZ {:.3g}  {:.1f}s", epoch,
                     record.train_nll, record.val_nll, record.sum_z, record.seconds);
        report.epochs.push_back(record);

        if (!std::isfinite(record.val_nll)) {
            report.diverged = true;
            report.diagnostic = "non-finite validation NLL at epoch " + std::to_string(epoch);
            break;
        }
        if (record.val_nll < report.best_val_nll) {
            report.best_val_nll = record.val_nll;
            report.best_epoch = epoch;
            best = snapshot(term);
            since_best = 0;
        } else if (++since_best >= config.patience) {
            spdlog::info("early stop after {} epochs without improvement", config.patience);
            break;
        }
    }
    if (report.diverged) {
        spdlog::error("training diverged: {}; restoring epoch {}", report.diagnostic,
                      report.best_epoch);
    }
    restore(term, best);
    return report;
}

TrainReport fit(TrdeModel& model, const Dataset& data, const TrainConfig& config) {
    TermModel term({model});
    TrainReport report = fit(term, data, config);
    model.set_cores(term.component(0).cores());
    return report;
}

void write_report_csv(const std::filesystem::path& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "epoch,train_nll,val_nll,sum_z,seconds\n";
    out.precision(17);
    for (const auto& e : report.epochs) {
        out << e.epoch << ',' << e.train_nll << ',' << e.val_nll << ',' << e.sum_z << ','
            << e.seconds << '\n';
    }
}

}  // namespace trde
