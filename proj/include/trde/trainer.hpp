#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trde/datasets.hpp"
#include "trde/mixture.hpp"

namespace trde {

enum class Optimizer { sgd, adam };

Optimizer parse_optimizer(std::string_view name);
std::string_view optimizer_name(Optimizer optimizer);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 512;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;
    std::optional<double> grad_clip;
    int threads = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_nll = 0.0;
    double val_nll = 0.0;
    double sum_z = 0.0;
    std::vector<double> sigma;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_nll = 0.0;
    /// Set when training stopped on a non-finite value; `diagnostic` says where.
    bool diverged = false;
    std::string diagnostic;
    /// Whether clipping was switched on during the run.
    bool clipped = false;
};

/**
 * Minibatch maximum likelihood on the train split with early stopping on the
 * validation split. The joint mass sum_m Z_m is rescaled to M after every
 * step; the best-validation parameters are restored before returning.
 * NLL values in the report are in original data units.
 */
TrainReport fit(TermModel& term, const Dataset& data, const TrainConfig& config);
TrainReport fit(TrdeModel& model, const Dataset& data, const TrainConfig& config);

struct NllReport {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
    /// Samples whose density hit the log floor; excluded from mean and count.
    std::size_t floored = 0;
};

/// Mean negative log-likelihood per sample of one split, in original units.
NllReport evaluate_nll(const TermModel& term, const Dataset& data, Split split, int threads = 1);
NllReport evaluate_nll(const TrdeModel& model, const Dataset& data, Split split, int threads = 1);

/// Per-sample NLL in the unit cube, NaN for samples that hit the floor.
std::vector<double> sample_nll(const TermModel& term, const SampleMatrix& batch, int threads = 1);

/// Writes epoch,train_nll,val_nll,sum_z,seconds.
void write_report_csv(const std::filesystem::path& path, const TrainReport& report);

}  // namespace trde
