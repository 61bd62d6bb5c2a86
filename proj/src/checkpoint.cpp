#include "trde/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace trde {

namespace {

constexpr std::string_view kMagic = "TRDECKPT";

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(std::string_view s) { out_.append(s); }
    std::string take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int width) {
        for (int b = 0; b < width; ++b) {
            out_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
        }
    }
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
        }
    }
    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int b = 0; b < width; ++b) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + b])) << (8 * b);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

// Sanity bound on sizes read from a file, so corrupt headers fail cleanly.
constexpr std::uint32_t kMaxCount = 1u << 20;

std::uint32_t bounded(std::uint32_t v, const char* what) {
    if (v == 0 || v > kMaxCount) {
        throw CheckpointError(std::string("checkpoint field ") + what + " out of range: " +
                              std::to_string(v));
    }
    return v;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const TermModel& term = ckpt.model;
    const int dims = term.dims();
    if (static_cast<int>(ckpt.affine.size()) != dims) {
        throw CheckpointError("checkpoint affine count does not match model dimension");
    }
    Writer w;
    w.bytes(kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(dims));
    w.u32(static_cast<std::uint32_t>(term.component(0).cores()[0].mode()));
    w.u32(static_cast<std::uint32_t>(term.size()));
    for (const auto& comp : term.components()) {
        for (int r : comp.cores().ranks()) {
            w.u32(static_cast<std::uint32_t>(r));
        }
        for (int p : comp.permutation()) {
            w.u32(static_cast<std::uint32_t>(p));
        }
    }
    for (const auto& a : ckpt.affine) {
        w.f64(a.offset);
        w.f64(a.scale);
    }
    for (const auto& comp : term.components()) {
        for (const auto& core : comp.cores().cores()) {
            for (int i = 0; i < core.left_rank(); ++i) {
                for (int k = 0; k < core.mode(); ++k) {
                    for (int j = 0; j < core.right_rank(); ++j) {
                        w.f64(core(i, k, j));
                    }
                }
            }
        }
    }
    w.u32(static_cast<std::uint32_t>(ckpt.dataset.size()));
    w.bytes(ckpt.dataset);
    w.u64(ckpt.data_seed);
    w.u64(ckpt.train_seed);
    return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw CheckpointError("not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const int dims = static_cast<int>(bounded(r.u32(), "D"));
    const int k_basis = static_cast<int>(bounded(r.u32(), "K"));
    const auto components = bounded(r.u32(), "M");

    std::vector<std::vector<int>> ranks(components);
    std::vector<std::vector<int>> perms(components);
    for (std::uint32_t m = 0; m < components; ++m) {
        for (int d = 0; d <= dims; ++d) {
            ranks[m].push_back(static_cast<int>(bounded(r.u32(), "rank")));
        }
        for (int d = 0; d < dims; ++d) {
            perms[m].push_back(static_cast<int>(r.u32()));
        }
    }
    std::vector<Affine> affine(dims);
    for (auto& a : affine) {
        a.offset = r.f64();
        a.scale = r.f64();
    }
    std::vector<TrdeModel> models;
    try {
        for (std::uint32_t m = 0; m < components; ++m) {
            std::vector<Core> cores;
            for (int d = 0; d < dims; ++d) {
                Core core(ranks[m][d], k_basis, ranks[m][d + 1]);
                for (int i = 0; i < core.left_rank(); ++i) {
                    for (int k = 0; k < k_basis; ++k) {
                        for (int j = 0; j < core.right_rank(); ++j) {
                            core(i, k, j) = r.f64();
                        }
                    }
                }
                cores.push_back(std::move(core));
            }
            models.emplace_back(TrCores(std::move(cores)), perms[m]);
        }
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("invalid checkpoint model: ") + e.what());
    }
    const std::uint32_t name_length = r.u32();
    Checkpoint out{TermModel(std::move(models)), std::move(affine),
                   std::string(r.bytes(name_length)), 0, 0};
    out.data_seed = r.u64();
    out.train_seed = r.u64();
    if (!r.done()) {
        throw CheckpointError("trailing bytes after checkpoint");
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = encode_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw CheckpointError("write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

std::string checkpoint_json(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["dataset"] = ckpt.dataset;
    j["data_seed"] = ckpt.data_seed;
    j["train_seed"] = ckpt.train_seed;
    j["dims"] = ckpt.model.dims();
    j["k_basis"] = ckpt.model.component(0).cores()[0].mode();
    j["parameters"] = ckpt.model.parameter_count();
    j["sigma"] = sigma_weights(ckpt.model);
    for (const auto& a : ckpt.affine) {
        j["affine"].push_back({{"offset", a.offset}, {"scale", a.scale}});
    }
    for (const auto& comp : ckpt.model.components()) {
        nlohmann::json c;
        c["ranks"] = comp.cores().ranks();
        c["permutation"] = comp.permutation();
        c["partition_function"] = comp.partition_function();
        for (const auto& core : comp.cores().cores()) {
            nlohmann::json shape = {core.left_rank(), core.mode(), core.right_rank()};
            nlohmann::json values = nlohmann::json::array();
            for (int i = 0; i < core.left_rank(); ++i) {
                for (int k = 0; k < core.mode(); ++k) {
                    for (int jj = 0; jj < core.right_rank(); ++jj) {
                        values.push_back(core(i, k, jj));
                    }
                }
            }
            c["cores"].push_back({{"shape", shape}, {"values", values}});
        }
        j["components"].push_back(c);
    }
    return j.dump(2);
}

Dataset affine_view(const Checkpoint& ckpt) {
    Dataset view;
    view.name = ckpt.dataset;
    view.affine = ckpt.affine;
    view.data = SampleMatrix(0, ckpt.model.dims());
    return view;
}

}  // namespace trde
