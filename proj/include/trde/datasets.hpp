#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trde/model.hpp"

namespace trde {

/// Per-dimension affine map: original = offset + scale * unit.
struct Affine {
    double offset = 0.0;
    double scale = 1.0;

    double to_unit(double x) const { return (x - offset) / scale; }
    double to_original(double u) const { return offset + scale * u; }
};

enum class Split { train, validation, test, all };

Split parse_split(std::string_view name);
std::string_view split_name(Split split);

struct SplitFractions {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

/// Distance kept between the train split and the edges of [0,1].
inline constexpr double kUnitMargin = 0.025;

/**
 * Sample matrix mapped into the unit cube, with the maps needed to get back
 * to original units. Rows are ordered train, then validation, then test.
 */
struct Dataset {
    std::string name;
    SampleMatrix data;
    std::vector<Affine> affine;
    std::size_t train_end = 0;
    std::size_t validation_end = 0;

    int dims() const { return static_cast<int>(data.cols()); }
    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    SampleMatrix split(Split which) const;
    std::size_t split_size(Split which) const;
    /// sum_d log(scale_d): NLL in original units = NLL in unit cube + this.
    double log_jacobian() const;
    SampleMatrix to_original(const SampleMatrix& unit) const;
    SampleMatrix to_unit(const SampleMatrix& original) const;
};

/**
 * Builds a dataset from raw rows: rows are shuffled with `seed`, split, then
 * every dimension is z-scored and mapped so the train split spans
 * [kUnitMargin, 1 - kUnitMargin]. Validation and test rows are clipped to [0,1].
 */
Dataset standardize(const SampleMatrix& raw, const SplitFractions& fractions, std::uint64_t seed,
                    std::string name);

/// Maps raw rows with known affines (e.g. from a checkpoint); clips to [0,1].
/// Rows are shuffled and split exactly as standardize() would.
Dataset apply_affine(const SampleMatrix& raw, const std::vector<Affine>& affine,
                     const SplitFractions& fractions, std::uint64_t seed, std::string name);

enum class ToyFamily {
    two_spirals,
    checkerboard,
    rings,
    swissroll2d,
    pinwheel,
    tree,
    sierpinski,
    swissroll3d,
    circles3d,
    s_curve,
};

ToyFamily parse_toy_family(std::string_view name);
std::string_view toy_family_name(ToyFamily family);
int toy_dims(ToyFamily family);
/// Noise level used when a spec does not set one.
double default_noise(ToyFamily family);

struct ToySpec {
    ToyFamily family = ToyFamily::two_spirals;
    std::size_t n = 1000;
    std::optional<double> noise;
    std::uint64_t seed = 0;
};

/// Raw generator output in original units.
SampleMatrix generate_toy_raw(const ToySpec& spec);
Dataset generate_toy(const ToySpec& spec, const SplitFractions& fractions = {});

/// Reads comma-separated numeric rows (optionally skipping one header line).
SampleMatrix read_csv(const std::filesystem::path& path, bool header = false);
void write_csv(const std::filesystem::path& path, const SampleMatrix& rows);
void write_csv(std::ostream& out, const SampleMatrix& rows);
Dataset ingest_csv(const std::filesystem::path& path, const SplitFractions& fractions,
                   std::uint64_t seed, bool header = false);

/**
 * KL(p || q) between regular-grid histograms of two sample sets over their
 * joint bounding box, with one pseudo-count added to every bin of both.
 * D <= 3 only.
 */
double histogram_kl(const SampleMatrix& p, const SampleMatrix& q, int bins_per_dim);

/// Kolmogorov-Smirnov statistic of `values` against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> values, Cdf&& cdf) {
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = cdf(values[i]);
        worst = std::max({worst, std::abs(f - static_cast<double>(i) / n),
                          std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return worst;
}

}  // namespace trde
