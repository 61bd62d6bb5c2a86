#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "trde/checkpoint.hpp"
#include "trde/config.hpp"

#ifndef TRDE_CLI_PATH
#error "TRDE_CLI_PATH must point at the built command-line tool"
#endif

using namespace trde;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(TRDE_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    std::size_t got = 0;
    while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        r.out.append(buffer, got);
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Value following `key` on its own output line.
std::string field(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " ", 0) == 0) {
            return line.substr(key.size() + 1);
        }
    }
    return {};
}

struct Workdir {
    fs::path path;
    Workdir() {
        path = fs::temp_directory_path() / ("trde_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~Workdir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const char* kFitArgs = "-q fit --toy rings --n 1200 --data-seed 4 --k 10 --rank 3 --epochs 3 "
                       "--lr 0.01 --batch 128 ";

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    Workdir dir;
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("fit --toy rings --out " + dir / "a.ckpt").code == 2);  // no seed
    CHECK(run("gen-toy --family rings --n 10 --out " + dir / "a.csv").code == 2);
    CHECK(run("gen-toy --family moons --n 10 --seed 1 --out " + dir / "a.csv").code == 2);
    CHECK(run("perms --dims 8 --limit 3").code == 2);  // subset without a seed
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"train": {"learnin_rate": 0.1}})";
    }
    CHECK(run("fit --config " + dir / "bad.json" + " --seed 1 --out " + dir / "a.ckpt").code == 2);
    CHECK_FALSE(fs::exists(dir / "a.ckpt"));
}

TEST_CASE("runtime errors exit with code 1") {
    Workdir dir;
    CHECK(run("sample --checkpoint " + dir / "missing.ckpt" + " --n 5 --seed 1 --out -").code == 1);
    {
        std::ofstream junk(dir / "junk.ckpt");
        junk << "definitely not a checkpoint";
    }
    CHECK(run("eval --checkpoint " + dir / "junk.ckpt" + " --toy rings").code == 1);
}

TEST_CASE("fit is reproducible down to the checkpoint bytes") {
    Workdir dir;
    const auto a = run(std::string(kFitArgs) + "--seed 7 --out " + dir / "a.ckpt");
    const auto b = run(std::string(kFitArgs) + "--seed 7 --threads 2 --out " + dir / "b.ckpt");
    const auto c = run(std::string(kFitArgs) + "--seed 8 --out " + dir / "c.ckpt");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    REQUIRE(c.code == 0);
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
    CHECK(slurp(dir / "a.ckpt") != slurp(dir / "c.ckpt"));
    CHECK(field(a.out, "best_val_nll") == field(b.out, "best_val_nll"));

    // the file decodes and re-encodes to the same bytes
    const auto bytes = slurp(dir / "a.ckpt");
    CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);
}

TEST_CASE("eval agrees with the library on the same split") {
    Workdir dir;
    REQUIRE(run(std::string(kFitArgs) + "--seed 3 --out " + dir / "m.ckpt").code == 0);
    const auto e = run("-q eval --checkpoint " + dir / "m.ckpt" +
                       " --toy rings --n 1200 --data-seed 4 --split validation");
    REQUIRE(e.code == 0);
    const auto ckpt = load_checkpoint(dir / "m.ckpt");
    DataSource src;
    src.toy = ToySpec{ToyFamily::rings, 1200, std::nullopt, 4};
    const auto data = load_dataset(src, ckpt.affine);
    const auto ref = evaluate_nll(ckpt.model, data, Split::validation);
    std::istringstream nll(field(e.out, "nll"));
    double mean = 0.0;
    nll >> mean;
    CHECK(mean == doctest::Approx(ref.mean).epsilon(1e-8));
    CHECK(field(e.out, "samples") == std::to_string(ref.count));
}

TEST_CASE("sample is deterministic and maps back to original units") {
    Workdir dir;
    REQUIRE(run(std::string(kFitArgs) + "--seed 3 --out " + dir / "m.ckpt").code == 0);
    const auto a = run("-q sample --checkpoint " + dir / "m.ckpt" + " --n 200 --seed 5 --out -");
    const auto b = run("-q sample --checkpoint " + dir / "m.ckpt" + " --n 200 --seed 5 --out -");
    const auto u = run("-q sample --checkpoint " + dir / "m.ckpt" + " --n 200 --seed 5 --unit --out " +
                       dir / "u.csv");
    REQUIRE(a.code == 0);
    REQUIRE(u.code == 0);
    CHECK(a.out == b.out);
    {
        std::ofstream f(dir / "a.csv");
        f << a.out;
    }
    const auto original = read_csv(dir / "a.csv");
    const auto unit = read_csv(dir / "u.csv");
    CHECK(original.rows() == 200);
    CHECK(unit.minCoeff() >= 0.0);
    CHECK(unit.maxCoeff() <= 1.0);
    const auto ckpt = load_checkpoint(dir / "m.ckpt");
    CHECK((affine_view(ckpt).to_original(unit) - original).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("marginal grids integrate to one") {
    Workdir dir;
    REQUIRE(run(std::string(kFitArgs) + "--seed 3 --out " + dir / "m.ckpt").code == 0);
    const auto joint = run("-q marginal --checkpoint " + dir / "m.ckpt" +
                           " --free 0,1 --resolution 60 --out " + dir / "grid.csv");
    REQUIRE(joint.code == 0);
    CHECK(field(joint.out, "rows") == "3600");
    CHECK(std::stod(field(joint.out, "grid_integral")) == doctest::Approx(1.0).epsilon(2e-3));
    const auto cond = run("-q marginal --checkpoint " + dir / "m.ckpt" +
                          " --free 1 --fix 0=0.4 --conditional --resolution 200 --out " +
                          dir / "c.csv");
    REQUIRE(cond.code == 0);
    CHECK(std::stod(field(cond.out, "grid_integral")) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(run("-q marginal --checkpoint " + dir / "m.ckpt" + " --free 0 --fix 1=1.5 --out " +
              dir / "x.csv")
              .code == 2);
}

TEST_CASE("perms, gen-toy and bench") {
    Workdir dir;
    const auto p = run("perms --dims 5");
    REQUIRE(p.code == 0);
    CHECK(field(p.out, "count") == "12");
    CHECK(std::count(p.out.begin(), p.out.end(), '\n') == 13);
    const auto sub = run("perms --dims 9 --limit 4 --seed 2");
    CHECK(sub.code == 0);
    CHECK(std::count(sub.out.begin(), sub.out.end(), '\n') == 5);

    REQUIRE(run("-q gen-toy --family s-curve --n 50 --seed 3 --out " + dir / "t1.csv").code == 0);
    REQUIRE(run("-q gen-toy --family s-curve --n 50 --seed 3 --out " + dir / "t2.csv").code == 0);
    CHECK(slurp(dir / "t1.csv") == slurp(dir / "t2.csv"));
    CHECK(read_csv(dir / "t1.csv").cols() == 3);

    const auto bench = run("-q bench --toy swissroll3d --n 100 --ks 64 --ranks 6 --params-only "
                           "--seed 1 --out -");
    REQUIRE(bench.code == 0);
    CHECK(bench.out.find("64,6,1,6912,") != std::string::npos);
}
