#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trde/datasets.hpp"
#include "trde/mixture.hpp"

namespace trde {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Everything needed to evaluate or sample a trained model without the run
 * config: the mixture itself, the affine maps of the training data, and the
 * seeds used for the split and for training.
 */
struct Checkpoint {
    TermModel model;
    std::vector<Affine> affine;
    std::string dataset;
    std::uint64_t data_seed = 0;
    std::uint64_t train_seed = 0;
};

/*
 * Layout, all integers and reals little-endian:
 *   "TRDECKPT"  u32 version  u32 D  u32 K  u32 M
 *   per component: u32 ranks[D+1], u32 permutation[D]
 *   per dimension: f64 offset, f64 scale
 *   per component, per core: f64 values in (left, mode, right) row-major order
 *   u32 name length, name bytes, u64 data seed, u64 train seed
 */
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Human-readable, lossy view (JSON text).
std::string checkpoint_json(const Checkpoint& ckpt);

/// Dataset view carrying the checkpoint's maps, for converting samples.
Dataset affine_view(const Checkpoint& ckpt);

}  // namespace trde
