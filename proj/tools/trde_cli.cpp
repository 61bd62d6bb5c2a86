// trde: fit, sample, evaluate and query tensor-ring B-spline density models.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "trde/checkpoint.hpp"
#include "trde/config.hpp"
#include "trde/mixture.hpp"
#include "trde/trainer.hpp"

namespace {

using namespace trde;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Raised for bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int resolve_threads(std::optional<int> flag) {
    if (flag) {
        return std::max(1, *flag);
    }
    if (const char* env = std::getenv("TRD_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw UsageError(std::string("TRD_THREADS is not an integer: ") + env);
        }
    }
    return 1;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const char* command) {
    if (!seed) {
        throw UsageError(std::string(command) + " needs an explicit --seed");
    }
    return *seed;
}

// Flags that describe where data comes from; shared by fit, eval and bench.
struct DataFlags {
    std::string config;
    std::string toy;
    std::optional<std::size_t> n;
    std::optional<double> noise;
    std::optional<std::uint64_t> data_seed;
    std::string csv;
    bool header = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON run config");
        app->add_option("--toy", toy, "toy family (overrides config)");
        app->add_option("--n", n, "toy sample count");
        app->add_option("--noise", noise, "toy noise level");
        app->add_option("--data-seed", data_seed, "toy generator / CSV shuffle seed");
        app->add_option("--csv", csv, "CSV data file (overrides config)");
        app->add_flag("--header", header, "skip one header line in the CSV");
    }

    RunConfig resolve() const {
        RunConfig run = config.empty() ? RunConfig{} : load_run_config(config);
        DataSource& src = run.data;
        if (!toy.empty() && !csv.empty()) {
            throw UsageError("--toy and --csv are mutually exclusive");
        }
        if (!toy.empty()) {
            ToySpec spec = src.toy.value_or(ToySpec{});
            spec.family = parse_toy_family(toy);
            src.toy = spec;
            src.csv.clear();
        }
        if (!csv.empty()) {
            src.toy.reset();
            src.csv = csv;
        }
        if (header) {
            src.header = true;
        }
        if (data_seed) {
            src.seed = *data_seed;
        }
        if (src.toy) {
            src.toy->seed = src.seed;
            if (n) {
                src.toy->n = *n;
            }
            if (noise) {
                src.toy->noise = *noise;
            }
        }
        if (!src.toy && src.csv.empty()) {
            throw UsageError("no data source: pass --toy, --csv or a --config with a data section");
        }
        return run;
    }
};

struct ModelFlags {
    std::optional<int> k_basis;
    std::optional<int> rank;
    std::optional<std::size_t> components;
    std::optional<double> lr;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patience;
    std::string optimizer;
    std::optional<double> grad_clip;

    void attach(CLI::App* app) {
        app->add_option("--k", k_basis, "basis functions per dimension");
        app->add_option("--rank", rank, "tensor-ring rank");
        app->add_option("--components", components, "mixture components M");
        app->add_option("--lr", lr, "learning rate");
        app->add_option("--batch", batch, "minibatch size");
        app->add_option("--epochs", epochs, "maximum epochs");
        app->add_option("--patience", patience, "early-stopping patience");
        app->add_option("--optimizer", optimizer, "adam or sgd");
        app->add_option("--grad-clip", grad_clip, "gradient norm clip");
    }

    void apply(RunConfig& run) const {
        if (k_basis) run.model.k_basis = *k_basis;
        if (rank) run.model.rank = *rank;
        if (components) run.model.components = *components;
        if (lr) run.train.learning_rate = *lr;
        if (batch) run.train.batch_size = *batch;
        if (epochs) run.train.max_epochs = *epochs;
        if (patience) run.train.patience = *patience;
        if (!optimizer.empty()) run.train.optimizer = parse_optimizer(optimizer);
        if (grad_clip) run.train.grad_clip = *grad_clip;
    }
};

PermutationSet permutations_for(int dims, std::size_t components, std::uint64_t seed) {
    if (components < 1) {
        throw ConfigError("components must be >= 1");
    }
    const std::uint64_t available = circular_count(dims);
    if (components > available) {
        throw ConfigError("components = " + std::to_string(components) + " exceeds the " +
                          std::to_string(available) + " circular orderings available at D = " +
                          std::to_string(dims));
    }
    return enumerate_circular(dims, components, seed);
}

TermModel initial_model(const ModelConfig& cfg, int dims) {
    if (cfg.k_basis < 4) {
        throw ConfigError("k_basis must be >= 4");
    }
    if (cfg.rank < 1) {
        throw ConfigError("rank must be >= 1");
    }
    return TermModel::random(dims, cfg.k_basis, cfg.rank,
                             permutations_for(dims, cfg.components, cfg.seed), cfg.seed);
}

// Output target for CSV data; "-" is stdout, and status lines then go to
// stderr so the data stays parseable.
class Output {
public:
    explicit Output(const std::string& path) : path_(path) {
        if (path_ != "-") {
            file_.open(path_, std::ios::binary);
            if (!file_) {
                throw std::runtime_error("cannot open " + path_ + " for writing");
            }
        }
    }
    std::ostream& data() { return path_ == "-" ? std::cout : file_; }
    std::ostream& status() { return path_ == "-" ? std::cerr : std::cout; }
    void finish() {
        data().flush();
        if (!data()) {
            throw std::runtime_error("failed writing " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream file_;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << text;
}

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(std::stoi(item));
        }
    }
    return out;
}

std::map<int, double> parse_assignments(const std::vector<std::string>& items) {
    std::map<int, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw UsageError("expected DIM=VALUE, got '" + item + "'");
        }
        const int dim = std::stoi(item.substr(0, eq));
        if (!out.emplace(dim, std::stod(item.substr(eq + 1))).second) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " appears more than once");
        }
    }
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(static_cast<T>(std::stoll(item)));
        }
    }
    if (out.empty()) {
        throw UsageError("empty list '" + text + "'");
    }
    return out;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    DataFlags data;
    ModelFlags model;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
    std::string report;
    std::string export_json;
};

int run_fit(const FitArgs& args) {
    RunConfig run = args.data.resolve();
    args.model.apply(run);
    const std::uint64_t seed = require_seed(args.seed, "fit");
    run.model.seed = seed;
    run.train.seed = seed;
    run.train.threads = resolve_threads(args.threads);
    run.train.validate();

    const Dataset data = load_dataset(run.data);
    spdlog::info("data {}: {} rows, D = {} (train {}, validation {}, test {})", data.name,
                 data.rows(), data.dims(), data.split_size(Split::train),
                 data.split_size(Split::validation), data.split_size(Split::test));
    TermModel term = initial_model(run.model, data.dims());
    spdlog::info("model: K = {}, R = {}, M = {}, {} parameters", run.model.k_basis,
                 run.model.rank, term.size(), term.parameter_count());

    const TrainReport report = fit(term, data, run.train);
    Checkpoint ckpt{term, data.affine, data.name, run.data.shuffle_seed(), seed};
    save_checkpoint(args.out, ckpt);
    if (!args.report.empty()) {
        write_report_csv(args.report, report);
    }
    if (!args.export_json.empty()) {
        write_text(args.export_json, checkpoint_json(ckpt));
    }
    const NllReport test = evaluate_nll(term, data, data.split_size(Split::test) > 0
                                                        ? Split::test
                                                        : Split::validation,
                                        run.train.threads);
    std::cout << "best_epoch " << report.best_epoch << "\n"
              << "best_val_nll " << report.best_val_nll << "\n"
              << "test_nll " << test.mean << " +- " << test.std_error << "\n"
              << "checkpoint " << args.out << "\n";
    if (report.diverged) {
        std::cerr << "error: training diverged: " << report.diagnostic
                  << " (best-validation state saved)\n";
        return kExitRuntime;
    }
    return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string checkpoint;
    std::size_t n = 0;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
    bool unit = false;
};

int run_sample(const SampleArgs& args) {
    const std::uint64_t seed = require_seed(args.seed, "sample");
    if (args.n == 0) {
        throw UsageError("--n must be >= 1");
    }
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const SampleMatrix unit = mixture_sample(ckpt.model, args.n, seed, resolve_threads(args.threads));
    Output out(args.out);
    write_csv(out.data(), args.unit ? unit : affine_view(ckpt).to_original(unit));
    out.finish();
    out.status() << "wrote " << args.n << " samples x " << unit.cols() << " dims to " << args.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint;
    DataFlags data;
    std::string split = "test";
    std::string reference;
    std::optional<std::uint64_t> seed;
    std::optional<int> bins;
    std::optional<int> threads;
};

int run_eval(const EvalArgs& args) {
    const Split split = parse_split(args.split);
    const RunConfig run = args.data.resolve();
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const int threads = resolve_threads(args.threads);
    const Dataset data = load_dataset(run.data, ckpt.affine);
    if (data.dims() != ckpt.model.dims()) {
        throw std::invalid_argument("dimension mismatch: data has " + std::to_string(data.dims()) +
                                    ", checkpoint has " + std::to_string(ckpt.model.dims()));
    }
    const NllReport nll = evaluate_nll(ckpt.model, data, split, threads);
    std::cout.precision(17);
    std::cout << "split " << split_name(split) << "\n"
              << "samples " << nll.count << "\n"
              << "floored " << nll.floored << "\n"
              << "nll " << nll.mean << " +- " << nll.std_error << "\n";

    if (!args.reference.empty()) {
        const int dims = ckpt.model.dims();
        if (dims > 3) {
            throw std::invalid_argument("KL block needs D <= 3, checkpoint has D = " +
                                        std::to_string(dims));
        }
        const std::uint64_t seed = require_seed(args.seed, "eval with --reference");
        const SampleMatrix reference = read_csv(args.reference);
        if (reference.cols() != dims) {
            throw std::invalid_argument("dimension mismatch: reference has " +
                                        std::to_string(reference.cols()) + " columns");
        }
        const int bins = args.bins.value_or(dims == 3 ? 50 : 100);
        const SampleMatrix model = affine_view(ckpt).to_original(mixture_sample(
            ckpt.model, static_cast<std::size_t>(reference.rows()), seed, threads));
        std::cout << "kl " << histogram_kl(reference, model, bins) << " (bins " << bins
                  << ", samples " << reference.rows() << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------- marginal

struct MarginalArgs {
    std::string checkpoint;
    std::string free;
    std::vector<std::string> fix;
    std::vector<std::string> upper;
    bool conditional = false;
    int resolution = 100;
    std::string out;
};

int run_marginal(const MarginalArgs& args) {
    if (args.resolution < 1) {
        throw UsageError("--resolution must be >= 1");
    }
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const TermModel& term = ckpt.model;
    const int dims = term.dims();
    const std::vector<int> free = parse_dims(args.free);
    if (free.size() > 3) {
        throw UsageError("at most 3 free dimensions on a grid");
    }
    const auto fixed = parse_assignments(args.fix);
    const auto upper = parse_assignments(args.upper);

    DensityQuery base;
    base.upper_limits = upper;
    base.fixed = fixed;
    std::vector<bool> used(dims, false);
    auto claim = [&](int dim) {
        if (dim < 0 || dim >= dims) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " out of range");
        }
        if (used[dim]) {
            throw std::invalid_argument("inconsistent query: dimension " + std::to_string(dim) +
                                        " appears more than once");
        }
        used[dim] = true;
    };
    for (int d : free) claim(d);
    for (const auto& [d, v] : fixed) claim(d);
    for (const auto& [d, v] : upper) claim(d);
    for (int d = 0; d < dims; ++d) {
        if (!used[d]) {
            base.marginalized.push_back(d);
        }
    }

    auto mixture_value = [&](const DensityQuery& q) {
        double total = 0.0;
        for (const auto& c : term.components()) {
            total += c.marginal_density(q);
        }
        return total;
    };
    const auto z = term.partition_functions();
    double denominator = std::accumulate(z.begin(), z.end(), 0.0);
    if (args.conditional && !fixed.empty()) {
        DensityQuery evidence;
        evidence.fixed = fixed;
        for (int d = 0; d < dims; ++d) {
            if (!fixed.contains(d)) {
                evidence.marginalized.push_back(d);
            }
        }
        denominator = mixture_value(evidence);
        if (!(denominator > 0.0)) {
            throw std::domain_error("conditioning values have zero density");
        }
    }

    Output sink(args.out);
    std::ostream& out = sink.data();
    out.precision(17);
    for (int d : free) {
        out << 'x' << d << ',';
    }
    out << "density\n";
    const int g = args.resolution;
    std::size_t cells = 1;
    for (std::size_t i = 0; i < free.size(); ++i) {
        cells *= static_cast<std::size_t>(g);
    }
    const double cell_volume = std::pow(1.0 / g, static_cast<double>(free.size()));
    double integral = 0.0;
    DensityQuery query = base;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        std::vector<double> coords(free.size());
        for (std::size_t i = free.size(); i-- > 0;) {
            coords[i] = (static_cast<double>(rest % g) + 0.5) / g;
            rest /= g;
        }
        for (std::size_t i = 0; i < free.size(); ++i) {
            query.fixed[free[i]] = coords[i];
        }
        const double density = mixture_value(query) / denominator;
        integral += density * cell_volume;
        for (double c : coords) {
            out << c << ',';
        }
        out << density << '\n';
    }
    sink.finish();
    sink.status() << "rows " << cells << "\n"
              << "grid_integral " << integral << "\n";
    return 0;
}

// ---------------------------------------------------------------- perms

struct PermsArgs {
    int dims = 0;
    std::optional<std::size_t> limit;
    std::optional<std::uint64_t> seed;
};

int run_perms(const PermsArgs& args) {
    if (args.dims < 2) {
        throw UsageError("--dims must be >= 2");
    }
    const std::uint64_t count = circular_count(args.dims);
    std::optional<std::size_t> limit = args.limit;
    if (limit && *limit < count && !args.seed) {
        throw UsageError("perms: sampling a subset needs an explicit --seed");
    }
    const auto set = enumerate_circular(args.dims, limit, args.seed.value_or(0));
    std::cout << "count " << count << "\n";
    for (const auto& p : set.perms) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::cout << (i ? " " : "") << p[i];
        }
        std::cout << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    DataFlags data;
    ModelFlags model;
    std::string ks = "16";
    std::string ranks = "4";
    std::string components = "1";
    std::size_t samples = 10000;
    bool params_only = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
};

int run_bench(const BenchArgs& args) {
    const auto ks = parse_list<int>(args.ks);
    const auto ranks = parse_list<int>(args.ranks);
    const auto comps = parse_list<std::size_t>(args.components);
    const std::uint64_t seed = require_seed(args.seed, "bench");
    RunConfig run = args.data.resolve();
    args.model.apply(run);
    run.train.seed = seed;
    run.train.threads = resolve_threads(args.threads);
    run.train.validate();
    const Dataset data = load_dataset(run.data);

    Output sink(args.out);
    std::ostream& out = sink.data();
    out.precision(10);
    out << "K,R,M,params,val_nll,train_seconds,sample_seconds,status\n";
    for (int k : ks) {
        for (int r : ranks) {
            for (std::size_t m : comps) {
                ModelConfig cell = run.model;
                cell.k_basis = k;
                cell.rank = r;
                cell.components = m;
                cell.seed = seed;
                const std::size_t params = m * static_cast<std::size_t>(data.dims()) *
                                           static_cast<std::size_t>(k) * r * r;
                out << k << ',' << r << ',' << m << ',' << params << ',';
                if (args.params_only) {
                    out << ",,,counted\n";
                    continue;
                }
                try {
                    TermModel term = initial_model(cell, data.dims());
                    const auto t0 = std::chrono::steady_clock::now();
                    const TrainReport report = fit(term, data, run.train);
                    const auto t1 = std::chrono::steady_clock::now();
                    mixture_sample(term, args.samples, seed, run.train.threads);
                    const auto t2 = std::chrono::steady_clock::now();
                    out << report.best_val_nll << ','
                        << std::chrono::duration<double>(t1 - t0).count() << ','
                        << std::chrono::duration<double>(t2 - t1).count() << ','
                        << (report.diverged ? "diverged" : "ok") << '\n';
                } catch (const std::exception& e) {
                    spdlog::error("bench cell K={} R={} M={} failed: {}", k, r, m, e.what());
                    out << ",,,failed\n";
                }
                out.flush();
            }
        }
    }
    sink.finish();
    sink.status() << "wrote " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- gen-toy

struct GenToyArgs {
    std::string family;
    std::size_t n = 0;
    std::optional<double> noise;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_gen_toy(const GenToyArgs& args) {
    ToySpec spec;
    spec.family = parse_toy_family(args.family);
    spec.n = args.n;
    spec.noise = args.noise;
    spec.seed = require_seed(args.seed, "gen-toy");
    Output out(args.out);
    write_csv(out.data(), generate_toy_raw(spec));
    out.finish();
    out.status() << "wrote " << args.n << " rows of " << args.family << " to " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-ring B-spline density estimation"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "train a model and write a checkpoint");
    fit_args.data.attach(fit_cmd);
    fit_args.model.attach(fit_cmd);
    fit_cmd->add_option("--seed", fit_args.seed, "initialization and shuffling seed");
    fit_cmd->add_option("--threads", fit_args.threads, "worker threads (default TRD_THREADS or 1)");
    fit_cmd->add_option("--out", fit_args.out, "checkpoint path")->required();
    fit_cmd->add_option("--report", fit_args.report, "per-epoch CSV report");
    fit_cmd->add_option("--export-json", fit_args.export_json, "human-readable model dump");

    SampleArgs sample_args;
    auto* sample_cmd = app.add_subcommand("sample", "draw exact samples from a checkpoint");
    sample_cmd->add_option("--checkpoint", sample_args.checkpoint)->required();
    sample_cmd->add_option("--n", sample_args.n, "number of samples")->required();
    sample_cmd->add_option("--seed", sample_args.seed, "sampling seed");
    sample_cmd->add_option("--threads", sample_args.threads);
    sample_cmd->add_option("--out", sample_args.out, "CSV output")->required();
    sample_cmd->add_flag("--unit", sample_args.unit, "write unit-cube coordinates");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "mean NLL of a data split");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
    eval_args.data.attach(eval_cmd);
    eval_cmd->add_option("--split", eval_args.split, "train, validation, test or all");
    eval_cmd->add_option("--reference", eval_args.reference, "reference sample CSV for the KL block");
    eval_cmd->add_option("--bins", eval_args.bins, "histogram bins per dimension");
    eval_cmd->add_option("--seed", eval_args.seed, "sampling seed for the KL block");
    eval_cmd->add_option("--threads", eval_args.threads);

    MarginalArgs marginal_args;
    auto* marginal_cmd = app.add_subcommand(
        "marginal", "grid of a marginal, cumulative or conditional density (unit-cube coordinates)");
    marginal_cmd->add_option("--checkpoint", marginal_args.checkpoint)->required();
    marginal_cmd->add_option("--free", marginal_args.free, "comma-separated grid dimensions");
    marginal_cmd->add_option("--fix", marginal_args.fix, "DIM=VALUE evaluated at a point");
    marginal_cmd->add_option("--upper", marginal_args.upper, "DIM=VALUE integrated over [0, VALUE]");
    marginal_cmd->add_flag("--conditional", marginal_args.conditional,
                           "divide by the density of the --fix values");
    marginal_cmd->add_option("--resolution", marginal_args.resolution, "grid points per free dim");
    marginal_cmd->add_option("--out", marginal_args.out, "CSV output")->required();

    PermsArgs perms_args;
    auto* perms_cmd = app.add_subcommand("perms", "list canonical circular permutations");
    perms_cmd->add_option("--dims", perms_args.dims, "dimension D")->required();
    perms_cmd->add_option("--limit", perms_args.limit, "sample at most this many");
    perms_cmd->add_option("--seed", perms_args.seed, "subset seed");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "sweep K, R and M");
    bench_args.data.attach(bench_cmd);
    bench_args.model.attach(bench_cmd);
    bench_cmd->add_option("--ks", bench_args.ks, "comma-separated K values");
    bench_cmd->add_option("--ranks", bench_args.ranks, "comma-separated R values");
    bench_cmd->add_option("--ms", bench_args.components, "comma-separated M values");
    bench_cmd->add_option("--samples", bench_args.samples, "samples drawn for timing");
    bench_cmd->add_flag("--params-only", bench_args.params_only, "count parameters, skip training");
    bench_cmd->add_option("--seed", bench_args.seed);
    bench_cmd->add_option("--threads", bench_args.threads);
    bench_cmd->add_option("--out", bench_args.out, "CSV output")->required();

    GenToyArgs toy_args;
    auto* toy_cmd = app.add_subcommand("gen-toy", "write toy samples in original units");
    toy_cmd->add_option("--family", toy_args.family)->required();
    toy_cmd->add_option("--n", toy_args.n)->required();
    toy_cmd->add_option("--noise", toy_args.noise);
    toy_cmd->add_option("--seed", toy_args.seed);
    toy_cmd->add_option("--out", toy_args.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*fit_cmd) return run_fit(fit_args);
        if (*sample_cmd) return run_sample(sample_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*marginal_cmd) return run_marginal(marginal_args);
        if (*perms_cmd) return run_perms(perms_args);
        if (*bench_cmd) return run_bench(bench_args);
        if (*toy_cmd) return run_gen_toy(toy_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
