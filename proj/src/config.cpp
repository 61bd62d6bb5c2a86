#include "trde/config.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "trde/random.hpp"

namespace trde {

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::string& section,
                    const std::set<std::string>& allowed) {
    if (!object.is_object()) {
        throw ConfigError("config section '" + section + "' must be an object");
    }
    for (const auto& [key, value] : object.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) +
                              "'");
        }
    }
}

template <typename T>
void read(const json& object, const std::string& section, const char* key, T& target) {
    if (!object.contains(key)) {
        return;
    }
    try {
        target = object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
    }
}

DataSource parse_data(const json& j) {
    reject_unknown(j, "data", {"toy", "n", "noise", "seed", "csv", "header", "split"});
    DataSource source;
    if (j.contains("toy") && j.contains("csv")) {
        throw ConfigError("config 'data' sets both 'toy' and 'csv'");
    }
    read(j, "data", "seed", source.seed);
    if (j.contains("toy")) {
        std::string family;
        read(j, "data", "toy", family);
        ToySpec spec;
        try {
            spec.family = parse_toy_family(family);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        read(j, "data", "n", spec.n);
        if (j.contains("noise")) {
            double noise = 0.0;
            read(j, "data", "noise", noise);
            spec.noise = noise;
        }
        spec.seed = source.seed;
        source.toy = spec;
    } else {
        std::string path;
        read(j, "data", "csv", path);
        source.csv = path;
        read(j, "data", "header", source.header);
    }
    if (j.contains("split")) {
        std::vector<double> split;
        read(j, "data", "split", split);
        if (split.size() != 3) {
            throw ConfigError("config key 'data.split' needs three fractions");
        }
        source.fractions = {split[0], split[1], split[2]};
    }
    return source;
}

ModelConfig parse_model(const json& j) {
    reject_unknown(j, "model", {"k_basis", "rank", "components", "seed"});
    ModelConfig model;
    read(j, "model", "k_basis", model.k_basis);
    read(j, "model", "rank", model.rank);
    read(j, "model", "components", model.components);
    read(j, "model", "seed", model.seed);
    return model;
}

TrainConfig parse_train(const json& j) {
    reject_unknown(j, "train", {"learning_rate", "batch_size", "max_epochs", "patience", "seed",
                                "optimizer", "grad_clip", "threads"});
    TrainConfig train;
    read(j, "train", "learning_rate", train.learning_rate);
    read(j, "train", "batch_size", train.batch_size);
    read(j, "train", "max_epochs", train.max_epochs);
    read(j, "train", "patience", train.patience);
    read(j, "train", "seed", train.seed);
    read(j, "train", "threads", train.threads);
    if (j.contains("optimizer")) {
        std::string name;
        read(j, "train", "optimizer", name);
        try {
            train.optimizer = parse_optimizer(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("grad_clip") && !j.at("grad_clip").is_null()) {
        double clip = 0.0;
        read(j, "train", "grad_clip", clip);
        train.grad_clip = clip;
    }
    return train;
}

}  // namespace

std::string DataSource::name() const {
    return toy ? std::string(toy_family_name(toy->family)) : csv.stem().string();
}

std::uint64_t DataSource::shuffle_seed() const { return toy ? mix64(toy->seed + 1) : seed; }

RunConfig parse_run_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "", {"data", "model", "train"});
    RunConfig config;
    if (j.contains("data")) {
        config.data = parse_data(j.at("data"));
    }
    if (j.contains("model")) {
        config.model = parse_model(j.at("model"));
    }
    if (j.contains("train")) {
        config.train = parse_train(j.at("train"));
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

Dataset load_dataset(const DataSource& source) {
    if (source.toy) {
        return generate_toy(*source.toy, source.fractions);
    }
    if (source.csv.empty()) {
        throw ConfigError("no data source: set a toy family or a CSV path");
    }
    return ingest_csv(source.csv, source.fractions, source.seed, source.header);
}

Dataset load_dataset(const DataSource& source, const std::vector<Affine>& affine) {
    SampleMatrix raw;
    if (source.toy) {
        raw = generate_toy_raw(*source.toy);
    } else if (!source.csv.empty()) {
        raw = read_csv(source.csv, source.header);
    } else {
        throw ConfigError("no data source: set a toy family or a CSV path");
    }
    return apply_affine(raw, affine, source.fractions, source.shuffle_seed(), source.name());
}

}  // namespace trde
