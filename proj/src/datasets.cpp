#include "trde/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "trde/random.hpp"

namespace trde {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kGeneratorChunk = 4096;

struct FamilyInfo {
    ToyFamily family;
    std::string_view name;
    int dims;
    double noise;
};

// Noise levels are documented defaults in generator units.
constexpr FamilyInfo kFamilies[] = {
    {ToyFamily::two_spirals, "two-spirals", 2, 0.1},
    {ToyFamily::checkerboard, "checkerboard", 2, 0.0},
    {ToyFamily::rings, "rings", 2, 0.08},
    {ToyFamily::swissroll2d, "swissroll2d", 2, 1.0},
    {ToyFamily::pinwheel, "pinwheel", 2, 0.1},
    {ToyFamily::tree, "tree", 2, 0.02},
    {ToyFamily::sierpinski, "sierpinski", 2, 0.0},
    {ToyFamily::swissroll3d, "swissroll3d", 3, 0.5},
    {ToyFamily::circles3d, "circles3d", 3, 0.05},
    {ToyFamily::s_curve, "s-curve", 3, 0.05},
};

const FamilyInfo& info(ToyFamily family) {
    for (const auto& f : kFamilies) {
        if (f.family == family) {
            return f;
        }
    }
    throw std::invalid_argument("unknown toy family");
}

std::vector<std::size_t> shuffled_rows(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void split_bounds(std::size_t n, const SplitFractions& f, std::size_t& train_end,
                  std::size_t& validation_end) {
    if (f.train <= 0.0 || f.validation < 0.0 || f.test < 0.0 ||
        std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must be non-negative and sum to 1");
    }
    train_end = static_cast<std::size_t>(std::llround(static_cast<double>(n) * f.train));
    validation_end = std::min(
        n, train_end + static_cast<std::size_t>(std::llround(static_cast<double>(n) * f.validation)));
    if (train_end == 0) {
        throw std::invalid_argument("train split is empty");
    }
}

Dataset map_rows(const SampleMatrix& raw, const std::vector<std::size_t>& order,
                 const std::vector<Affine>& affine, std::size_t train_end,
                 std::size_t validation_end, std::string name) {
    Dataset out;
    out.name = std::move(name);
    out.affine = affine;
    out.train_end = train_end;
    out.validation_end = validation_end;
    out.data.resize(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (Eigen::Index d = 0; d < raw.cols(); ++d) {
            const double u = affine[d].to_unit(raw(static_cast<Eigen::Index>(order[i]), d));
            out.data(static_cast<Eigen::Index>(i), d) = std::clamp(u, 0.0, 1.0);
        }
    }
    return out;
}

// --- toy generators -------------------------------------------------------
// Each writes rows [begin, end) of `out` using its own engine.

void two_spirals(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
                 double noise) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double n = std::sqrt(unif(rng)) * 540.0 * 2.0 * kPi / 360.0;
        double x = -std::cos(n) * n + unif(rng) * 0.5;
        double y = std::sin(n) * n + unif(rng) * 0.5;
        if (unif(rng) < 0.5) {
            x = -x;
            y = -y;
        }
        out(i, 0) = x / 3.0 + noise * normal(rng);
        out(i, 1) = y / 3.0 + noise * normal(rng);
    }
}

void checkerboard(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
                  double noise) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double x1 = unif(rng) * 4.0 - 2.0;
        const double shift = unif(rng) < 0.5 ? 0.0 : 2.0;
        const double x2 = unif(rng) - shift + std::fmod(std::floor(x1) + 4.0, 2.0);
        out(i, 0) = 2.0 * x1 + noise * normal(rng);
        out(i, 1) = 2.0 * x2 + noise * normal(rng);
    }
}

void rings(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
           double noise) {
    // Four concentric circles of radius 3, 2.25, 1.5, 0.75.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double radius = 3.0 * (1.0 - 0.25 * std::floor(unif(rng) * 4.0));
        const double angle = 2.0 * kPi * unif(rng);
        out(i, 0) = radius * std::cos(angle) + noise * normal(rng);
        out(i, 1) = radius * std::sin(angle) + noise * normal(rng);
    }
}

void swissroll2d(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
                 double noise) {
    // (x, z) of the classic swiss roll, divided by 5.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double t = 1.5 * kPi * (1.0 + 2.0 * unif(rng));
        out(i, 0) = (t * std::cos(t) + noise * normal(rng)) / 5.0;
        out(i, 1) = (t * std::sin(t) + noise * normal(rng)) / 5.0;
    }
}

void pinwheel(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
              double noise) {
    // Five arms, radial std 0.3, tangential std `noise`, twist rate 0.25.
    constexpr int kArms = 5;
    std::uniform_int_distribution<int> arm(0, kArms - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double radial = 1.0 + 0.3 * normal(rng);
        const double tangential = noise * normal(rng);
        const double angle = 2.0 * kPi * arm(rng) / kArms + 0.25 * std::exp(radial);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        out(i, 0) = 2.0 * (radial * c + tangential * s);
        out(i, 1) = 2.0 * (-radial * s + tangential * c);
    }
}

struct Segment {
    double x0, y0, x1, y1, length;
};

std::vector<Segment> tree_segments() {
    // Binary tree of depth 7: trunk of length 1, branches turn by +-30 degrees
    // and shrink by 0.7 at every level.
    std::vector<Segment> segments;
    struct Node {
        double x, y, angle, length;
        int depth;
    };
    std::vector<Node> stack{{0.0, -1.0, kPi / 2.0, 1.0, 0}};
    while (!stack.empty()) {
        const Node n = stack.back();
        stack.pop_back();
        const double x1 = n.x + n.length * std::cos(n.angle);
        const double y1 = n.y + n.length * std::sin(n.angle);
        segments.push_back({n.x, n.y, x1, y1, n.length});
        if (n.depth < 6) {
            stack.push_back({x1, y1, n.angle + kPi / 6.0, 0.7 * n.length, n.depth + 1});
            stack.push_back({x1, y1, n.angle - kPi / 6.0, 0.7 * n.length, n.depth + 1});
        }
    }
    return segments;
}

void tree(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
          double noise) {
    static const std::vector<Segment> segments = tree_segments();
    static const std::vector<double> lengths = [] {
        std::vector<double> l;
        for (const auto& s : segments) {
            l.push_back(s.length);
        }
        return l;
    }();
    std::discrete_distribution<std::size_t> pick(lengths.begin(), lengths.end());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const Segment& s = segments[pick(rng)];
        const double t = unif(rng);
        out(i, 0) = s.x0 + t * (s.x1 - s.x0) + noise * normal(rng);
        out(i, 1) = s.y0 + t * (s.y1 - s.y0) + noise * normal(rng);
    }
}

void sierpinski(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
                double noise) {
    // Uniform on the level-4 Sierpinski carpet in [0,1]^2: pick one of the 8
    // outer sub-squares at every level, then a uniform point in the last one.
    constexpr int kLevels = 4;
    std::uniform_int_distribution<int> cell(0, 7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        double x = 0.0;
        double y = 0.0;
        double size = 1.0;
        for (int level = 0; level < kLevels; ++level) {
            int c = cell(rng);
            if (c >= 4) {
                ++c;  // skip the centre cell
            }
            size /= 3.0;
            x += (c % 3) * size;
            y += (c / 3) * size;
        }
        out(i, 0) = x + unif(rng) * size + noise * normal(rng);
        out(i, 1) = y + unif(rng) * size + noise * normal(rng);
    }
}

void swissroll3d(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
                 double noise) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double t = 1.5 * kPi * (1.0 + 2.0 * unif(rng));
        out(i, 0) = t * std::cos(t) + noise * normal(rng);
        out(i, 1) = 21.0 * unif(rng) + noise * normal(rng);
        out(i, 2) = t * std::sin(t) + noise * normal(rng);
    }
}

void circles3d(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
               double noise) {
    // Two interlocked unit circles: one in the xy-plane around the origin,
    // one in the xz-plane around (1,0,0). Offsets are Gaussian with norm
    // truncated at 4 standard deviations.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double angle = 2.0 * kPi * unif(rng);
        const bool second = unif(rng) < 0.5;
        double g[3];
        do {
            g[0] = normal(rng);
            g[1] = normal(rng);
            g[2] = normal(rng);
        } while (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] > 16.0);
        if (second) {
            out(i, 0) = 1.0 + std::cos(angle) + noise * g[0];
            out(i, 1) = noise * g[1];
            out(i, 2) = std::sin(angle) + noise * g[2];
        } else {
            out(i, 0) = std::cos(angle) + noise * g[0];
            out(i, 1) = std::sin(angle) + noise * g[1];
            out(i, 2) = noise * g[2];
        }
    }
}

void s_curve(SampleMatrix& out, std::size_t begin, std::size_t end, std::mt19937_64& rng,
             double noise) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double t = 3.0 * kPi * (unif(rng) - 0.5);
        const double sign = t < 0.0 ? -1.0 : 1.0;
        out(i, 0) = std::sin(t) + noise * normal(rng);
        out(i, 1) = 2.0 * unif(rng) + noise * normal(rng);
        out(i, 2) = sign * (std::cos(t) - 1.0) + noise * normal(rng);
    }
}

}  // namespace

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation" || name == "val") return Split::validation;
    if (name == "test") return Split::test;
    if (name == "all") return Split::all;
    throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        case Split::all: return "all";
    }
    return "all";
}

SampleMatrix Dataset::split(Split which) const {
    std::size_t begin = 0;
    std::size_t end = rows();
    switch (which) {
        case Split::train: end = train_end; break;
        case Split::validation: begin = train_end; end = validation_end; break;
        case Split::test: begin = validation_end; break;
        case Split::all: break;
    }
    return data.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
}

std::size_t Dataset::split_size(Split which) const {
    switch (which) {
        case Split::train: return train_end;
        case Split::validation: return validation_end - train_end;
        case Split::test: return rows() - validation_end;
        case Split::all: return rows();
    }
    return 0;
}

double Dataset::log_jacobian() const {
    double total = 0.0;
    for (const auto& a : affine) {
        total += std::log(a.scale);
    }
    return total;
}

SampleMatrix Dataset::to_original(const SampleMatrix& unit) const {
    SampleMatrix out(unit.rows(), unit.cols());
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        for (Eigen::Index d = 0; d < unit.cols(); ++d) {
            out(i, d) = affine[d].to_original(unit(i, d));
        }
    }
    return out;
}

SampleMatrix Dataset::to_unit(const SampleMatrix& original) const {
    SampleMatrix out(original.rows(), original.cols());
    for (Eigen::Index i = 0; i < original.rows(); ++i) {
        for (Eigen::Index d = 0; d < original.cols(); ++d) {
            out(i, d) = affine[d].to_unit(original(i, d));
        }
    }
    return out;
}

Dataset standardize(const SampleMatrix& raw, const SplitFractions& fractions, std::uint64_t seed,
                    std::string name) {
    const std::size_t n = static_cast<std::size_t>(raw.rows());
    if (n == 0 || raw.cols() == 0) {
        throw std::invalid_argument("standardize: empty data");
    }
    std::size_t train_end = 0;
    std::size_t validation_end = 0;
    split_bounds(n, fractions, train_end, validation_end);
    const auto order = shuffled_rows(n, seed);

    std::vector<Affine> affine(raw.cols());
    for (Eigen::Index d = 0; d < raw.cols(); ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < train_end; ++i) {
            mean += raw(static_cast<Eigen::Index>(order[i]), d);
        }
        mean /= static_cast<double>(train_end);
        double var = 0.0;
        for (std::size_t i = 0; i < train_end; ++i) {
            const double diff = raw(static_cast<Eigen::Index>(order[i]), d) - mean;
            var += diff * diff;
        }
        const double sd = std::sqrt(var / static_cast<double>(train_end));
        double zmin = std::numeric_limits<double>::infinity();
        double zmax = -std::numeric_limits<double>::infinity();
        if (sd > 0.0) {
            for (std::size_t i = 0; i < train_end; ++i) {
                const double z = (raw(static_cast<Eigen::Index>(order[i]), d) - mean) / sd;
                zmin = std::min(zmin, z);
                zmax = std::max(zmax, z);
            }
        }
        if (!(sd > 0.0) || !(zmax > zmin) || !std::isfinite(sd)) {
            throw std::invalid_argument("zero variance in column " + std::to_string(d + 1));
        }
        // unit = m + (1 - 2m) (z - zmin) / (zmax - zmin), z = (x - mean) / sd
        const double scale = sd * (zmax - zmin) / (1.0 - 2.0 * kUnitMargin);
        affine[d] = {mean + sd * zmin - kUnitMargin * scale, scale};
    }
    return map_rows(raw, order, affine, train_end, validation_end, std::move(name));
}

Dataset apply_affine(const SampleMatrix& raw, const std::vector<Affine>& affine,
                     const SplitFractions& fractions, std::uint64_t seed, std::string name) {
    if (static_cast<Eigen::Index>(affine.size()) != raw.cols()) {
        throw std::invalid_argument("apply_affine: data has " + std::to_string(raw.cols()) +
                                    " columns, expected " + std::to_string(affine.size()));
    }
    const std::size_t n = static_cast<std::size_t>(raw.rows());
    if (n == 0) {
        throw std::invalid_argument("apply_affine: empty data");
    }
    std::size_t train_end = 0;
    std::size_t validation_end = 0;
    split_bounds(n, fractions, train_end, validation_end);
    return map_rows(raw, shuffled_rows(n, seed), affine, train_end, validation_end,
                    std::move(name));
}

ToyFamily parse_toy_family(std::string_view name) {
    for (const auto& f : kFamilies) {
        if (f.name == name) {
            return f.family;
        }
    }
    throw std::invalid_argument("unknown toy family '" + std::string(name) + "'");
}

std::string_view toy_family_name(ToyFamily family) { return info(family).name; }
int toy_dims(ToyFamily family) { return info(family).dims; }
double default_noise(ToyFamily family) { return info(family).noise; }

SampleMatrix generate_toy_raw(const ToySpec& spec) {
    if (spec.n == 0) {
        throw std::invalid_argument("generate_toy: n must be >= 1");
    }
    const double noise = spec.noise.value_or(default_noise(spec.family));
    if (noise < 0.0) {
        throw std::invalid_argument("generate_toy: noise must be non-negative");
    }
    SampleMatrix out(static_cast<Eigen::Index>(spec.n), toy_dims(spec.family));
    for (std::size_t begin = 0; begin < spec.n; begin += kGeneratorChunk) {
        const std::size_t end = std::min(spec.n, begin + kGeneratorChunk);
        std::mt19937_64 rng(mix64(spec.seed ^ mix64(begin / kGeneratorChunk)));
        switch (spec.family) {
            case ToyFamily::two_spirals: two_spirals(out, begin, end, rng, noise); break;
            case ToyFamily::checkerboard: checkerboard(out, begin, end, rng, noise); break;
            case ToyFamily::rings: rings(out, begin, end, rng, noise); break;
            case ToyFamily::swissroll2d: swissroll2d(out, begin, end, rng, noise); break;
            case ToyFamily::pinwheel: pinwheel(out, begin, end, rng, noise); break;
            case ToyFamily::tree: tree(out, begin, end, rng, noise); break;
            case ToyFamily::sierpinski: sierpinski(out, begin, end, rng, noise); break;
            case ToyFamily::swissroll3d: swissroll3d(out, begin, end, rng, noise); break;
            case ToyFamily::circles3d: circles3d(out, begin, end, rng, noise); break;
            case ToyFamily::s_curve: s_curve(out, begin, end, rng, noise); break;
        }
    }
    return out;
}

Dataset generate_toy(const ToySpec& spec, const SplitFractions& fractions) {
    return standardize(generate_toy_raw(spec), fractions, mix64(spec.seed + 1),
                       std::string(toy_family_name(spec.family)));
}

SampleMatrix read_csv(const std::filesystem::path& path, bool header) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    std::vector<double> values;
    std::size_t columns = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) {
            continue;
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::size_t column = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
                throw std::runtime_error("'" + path.string() + "': non-numeric cell '" +
                                         std::string(cell) + "' at row " +
                                         std::to_string(line_no) + ", column " +
                                         std::to_string(column + 1));
            }
            values.push_back(v);
            ++column;
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (rows == 0) {
            columns = column;
        } else if (column != columns) {
            throw std::runtime_error("'" + path.string() + "': row " + std::to_string(line_no) +
                                     " has " + std::to_string(column) + " columns, expected " +
                                     std::to_string(columns));
        }
        ++rows;
    }
    if (rows == 0) {
        throw std::runtime_error("'" + path.string() + "': empty file");
    }
    SampleMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns));
    std::copy(values.begin(), values.end(), out.data());
    return out;
}

void write_csv(std::ostream& out, const SampleMatrix& rows) {
    char buffer[64];
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index d = 0; d < rows.cols(); ++d) {
            if (d > 0) {
                out.put(',');
            }
            const auto result = std::to_chars(buffer, buffer + sizeof(buffer), rows(i, d));
            out.write(buffer, result.ptr - buffer);
        }
        out.put('\n');
    }
}

void write_csv(const std::filesystem::path& path, const SampleMatrix& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    write_csv(out, rows);
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

Dataset ingest_csv(const std::filesystem::path& path, const SplitFractions& fractions,
                   std::uint64_t seed, bool header) {
    return standardize(read_csv(path, header), fractions, seed, path.stem().string());
}

double histogram_kl(const SampleMatrix& p, const SampleMatrix& q, int bins_per_dim) {
    if (p.rows() == 0 || q.rows() == 0) {
        throw std::invalid_argument("histogram_kl: empty sample set");
    }
    if (p.cols() != q.cols()) {
        throw std::invalid_argument("histogram_kl: dimension mismatch");
    }
    const int dims = static_cast<int>(p.cols());
    if (dims > 3) {
        throw std::invalid_argument("histogram_kl: D = " + std::to_string(dims) +
                                    " > 3 is not supported");
    }
    if (bins_per_dim < 1) {
        throw std::invalid_argument("histogram_kl: bins_per_dim must be >= 1");
    }
    std::vector<double> lo(dims);
    std::vector<double> hi(dims);
    for (int d = 0; d < dims; ++d) {
        lo[d] = std::min(p.col(d).minCoeff(), q.col(d).minCoeff());
        hi[d] = std::max(p.col(d).maxCoeff(), q.col(d).maxCoeff());
    }
    std::size_t bins = 1;
    for (int d = 0; d < dims; ++d) {
        bins *= static_cast<std::size_t>(bins_per_dim);
    }
    auto histogram = [&](const SampleMatrix& s) {
        std::vector<double> counts(bins, 1.0);
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            std::size_t cell = 0;
            for (int d = 0; d < dims; ++d) {
                const double width = hi[d] - lo[d];
                int b = width > 0.0
                            ? static_cast<int>(std::floor((s(i, d) - lo[d]) / width * bins_per_dim))
                            : 0;
                b = std::clamp(b, 0, bins_per_dim - 1);
                cell = cell * bins_per_dim + static_cast<std::size_t>(b);
            }
            counts[cell] += 1.0;
        }
        const double total = static_cast<double>(s.rows() + bins);
        for (double& c : counts) {
            c /= total;
        }
        return counts;
    };
    const auto hp = histogram(p);
    const auto hq = histogram(q);
    double kl = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        kl += hp[b] * std::log(hp[b] / hq[b]);
    }
    return std::max(kl, 0.0);
}

}  // namespace trde
