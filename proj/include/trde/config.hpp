#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trde/datasets.hpp"
#include "trde/trainer.hpp"

namespace trde {

/// Bad or unknown configuration; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Either a toy generator or a CSV file.
struct DataSource {
    std::optional<ToySpec> toy;
    std::filesystem::path csv;
    bool header = false;
    /// Shuffle seed for CSV data; toy data derives its own from the toy seed.
    std::uint64_t seed = 0;
    SplitFractions fractions;

    std::string name() const;
    std::uint64_t shuffle_seed() const;
};

struct ModelConfig {
    int k_basis = 64;
    int rank = 8;
    std::size_t components = 1;
    std::uint64_t seed = 0;
};

struct RunConfig {
    DataSource data;
    ModelConfig model;
    TrainConfig train;
};

/**
 * Parses a run config from JSON text:
 *
 *   {"data":  {"toy": "two-spirals", "n": 62500, "noise": 0.1, "seed": 1,
 *              "split": [0.8, 0.1, 0.1]}        (or "csv": path, "header": bool)
 *    "model": {"k_basis": 64, "rank": 8, "components": 1, "seed": 0},
 *    "train": {"learning_rate": 1e-3, "batch_size": 512, "max_epochs": 200,
 *              "patience": 20, "seed": 0, "optimizer": "adam",
 *              "grad_clip": 10, "threads": 1}}
 *
 * Every section and key is optional; unknown keys are rejected by name.
 */
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds the dataset, standardized on its own train split.
Dataset load_dataset(const DataSource& source);
/// Same rows and split, mapped with previously fitted affines.
Dataset load_dataset(const DataSource& source, const std::vector<Affine>& affine);

}  // namespace trde
