#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "oracles.hpp"
#include "qhash/goodset.hpp"
#include "qhash/io.hpp"

using namespace qhash;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qhash_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json jload(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

const std::string kCli = QHASH_CLI_PATH;

}  // namespace

TEST_CASE("format_double round-trips bitwise") {
    for (double v : {0.1, 1.0 / 3.0, 1.0, 0.0625, -0.25, 1e-300, 9.87e17,
                     3.141592653589793, -0.0, 2.2250738585072014e-308}) {
        const std::string text = format_double(v);
        const double back = std::strtod(text.c_str(), nullptr);
        CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    }
}

TEST_CASE("json writer emits parseable documents") {
    JsonWriter w;
    w.begin_object();
    w.key("name").value("a\"b\\c\nd");
    w.key("flag").value(true);
    w.key("x").value(0.1);
    w.key("n").value(Index{-42});
    w.key("items").begin_array();
    w.value(Index{1});
    w.begin_array().value(Index{2}).end_array();
    w.begin_object().key("k").value("v").end_object();
    w.end_array();
    w.key("empty").begin_object().end_object();
    w.end_object();

    const auto j = nlohmann::json::parse(w.str());
    CHECK(j["name"] == "a\"b\\c\nd");
    CHECK(j["flag"] == true);
    CHECK(j["x"].get<double>() == 0.1);
    CHECK(j["n"] == -42);
    CHECK(j["items"][0] == 1);
    CHECK(j["items"][1][0] == 2);
    CHECK(j["items"][2]["k"] == "v");
    CHECK(j["empty"].is_object());
}

TEST_CASE("key file round trip") {
    TempDir tmp;
    const GroupSpec spec({4, 3, 5});
    std::mt19937_64 rng(41);
    const auto key = oracle::random_key(rng, spec, 6);
    const RunManifest manifest = make_manifest("goodset", spec, 0.25, 6, 99);
    write_text_file(tmp.file("key.json"), key_file_text(manifest, spec, key));

    const KeyFile back = read_key_file(tmp.file("key.json"));
    CHECK(back.spec == spec);
    REQUIRE(back.key.size() == key.size());
    for (std::size_t i = 0; i < key.size(); ++i) CHECK(back.key[i] == key[i]);
    CHECK(back.manifest.command == "goodset");
    CHECK(back.manifest.epsilon == 0.25);
    CHECK(back.manifest.seed == 99);
    CHECK_FALSE(back.manifest.timestamp.empty());
    CHECK_FALSE(back.manifest.tool_version.empty());
}

TEST_CASE("state file round trip is bitwise") {
    TempDir tmp;
    const GroupSpec spec({3, 5});
    std::mt19937_64 rng(42);
    const HashParams params(spec, oracle::random_key(rng, spec, 3), 0.5);
    const HashState<double> state = build_state(params, GroupElement{{2, 4}});
    const RunManifest manifest = make_manifest("build", spec, 0.5, 3, 0);
    write_text_file(tmp.file("state.json"), state_file_text(manifest, state));

    const StateFile back = read_state_file(tmp.file("state.json"));
    CHECK(back.state.t == state.t);
    CHECK(back.state.m == state.m);
    REQUIRE(back.state.amplitudes.size() == state.amplitudes.size());
    for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i) {
        CHECK(back.state.amplitudes(i).real() == state.amplitudes(i).real());
        CHECK(back.state.amplitudes(i).imag() == state.amplitudes(i).imag());
    }
}

TEST_CASE("reader rejects malformed files") {
    TempDir tmp;
    CHECK_THROWS_AS(read_key_file(tmp.file("missing.json")), IoError);
    CHECK_THROWS_AS(read_state_file(tmp.file("missing.json")), IoError);

    write_text_file(tmp.file("garbage.json"), "not json at all {");
    CHECK_THROWS_AS(read_key_file(tmp.file("garbage.json")), std::invalid_argument);

    write_text_file(tmp.file("short.json"),
                    R"({"manifest":{"command":"x","group":[2],"epsilon":1,"set_size":1,)"
                    R"("seed":0,"tool_version":"0","timestamp":"t"},"kind":"state",)"
                    R"("dims":{"t":2,"m":1},"norm":1.0,"amplitudes":[[1.0,0.0]]})");
    CHECK_THROWS_AS(read_state_file(tmp.file("short.json")), std::invalid_argument);

    write_text_file(tmp.file("unnorm.json"),
                    R"({"manifest":{"command":"x","group":[2],"epsilon":1,"set_size":1,)"
                    R"("seed":0,"tool_version":"0","timestamp":"t"},"kind":"state",)"
                    R"("dims":{"t":1,"m":0},"norm":2.0,"amplitudes":[[2.0,0.0]]})");
    CHECK_THROWS_AS(read_state_file(tmp.file("unnorm.json")), std::invalid_argument);

    write_text_file(tmp.file("badkey.json"),
                    R"({"manifest":{"command":"x","group":[4],"epsilon":1,"set_size":1,)"
                    R"("seed":0,"tool_version":"0","timestamp":"t"},"kind":"key",)"
                    R"("group":[4],"multipliers":[[2]]})");
    CHECK_THROWS_AS(read_key_file(tmp.file("badkey.json")), std::invalid_argument);
}

TEST_CASE("cli build writes a loadable state") {
    TempDir tmp;
    const std::string record = tmp.file("rec.json");
    const std::string state_path = tmp.file("state.json");
    CHECK(run(kCli + " build --group 3x5 --size 4 --seed 3 --input 1101 --out \"" +
              state_path + "\" > \"" + record + "\"") == 0);

    const auto rec = jload(record);
    CHECK(rec["kind"] == "state");
    CHECK(rec["payload"]["dim"] == 16);
    CHECK(rec["payload"]["t"] == 4);
    CHECK(rec["payload"]["m"] == 2);
    CHECK(std::abs(rec["payload"]["norm"].get<double>() - 1.0) < 1e-12);
    CHECK(rec["manifest"]["command"] == "build");

    const StateFile state = read_state_file(state_path);
    CHECK(state.state.t == 4);
    CHECK(state.manifest.group == std::vector<Index>{3, 5});

    // manifest fields are never empty
    CHECK_FALSE(rec["manifest"]["command"].get<std::string>().empty());
    CHECK_FALSE(rec["manifest"]["tool_version"].get<std::string>().empty());
    CHECK_FALSE(rec["manifest"]["timestamp"].get<std::string>().empty());
    CHECK_FALSE(rec["manifest"]["group"].empty());

    // empty message hashes to the identity
    const std::string rec2 = tmp.file("rec2.json");
    CHECK(run(kCli + " build --group 3x5 --size 2 --input \"\" > \"" + rec2 + "\"") == 0);
    CHECK(jload(rec2)["payload"]["hash"] == nlohmann::json::array({0, 0}));
}

TEST_CASE("cli goodset bias, search and fixed-g scopes") {
    TempDir tmp;
    const std::string rec = tmp.file("rec.json");

    REQUIRE(run(kCli + " goodset --mode bias --group 5 > \"" + rec + "\"") == 0);
    auto payload = jload(rec)["payload"];
    CHECK(payload["max_abs_bias"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(payload["claimed_zero"] == false);
    CHECK(payload["pool_size"] == 4);

    REQUIRE(run(kCli + " goodset --mode bias --group 5 --diagnostic > \"" + rec + "\"") == 0);
    payload = jload(rec)["payload"];
    CHECK(payload["claimed_zero"] == true);
    CHECK(payload["pool_size"] == 5);

    REQUIRE(run(kCli + " goodset --mode search --group 5 --epsilon 0.1 --size 4 > \"" +
                rec + "\"") == 0);
    payload = jload(rec)["payload"];
    CHECK(payload["found"] == true);
    CHECK(payload["t_min"] == 2);
    CHECK(payload["delta"].get<double>() < 0.1);

    REQUIRE(run(kCli + " goodset --mode montecarlo --group 3x5 --epsilon 0.3 --size 8"
                       " --seed 2 --trials 200 --fixed-g 1,0 > \"" + rec + "\"") == 0);
    payload = jload(rec)["payload"];
    CHECK(payload["scope"] == "fixed");
    CHECK(payload["fixed_g"] == nlohmann::json::array({1, 0}));
    CHECK(run(kCli + " goodset --mode montecarlo --group 3x5 --epsilon 0.3 --size 8"
                     " --trials 200 --fixed-g 9,0 2> /dev/null") == 2);
}

TEST_CASE("cli exit codes") {
    TempDir tmp;
    CHECK(run(kCli + " --version > /dev/null") == 0);
    CHECK(run(kCli + " build --group 5xx3 --size 2 --input 1 2> /dev/null") == 2);
    CHECK(run(kCli + " build --group 5 --size 2 --input 12 2> /dev/null") == 2);
    CHECK(run(kCli + " overlap --group 5 --size 2 --x 1 2> /dev/null") == 2);  // missing --y
    CHECK(run(kCli + " goodset --mode montecarlo --group 5 --epsilon 0.2 --size 3"
                     " --trials 0 2> /dev/null") == 2);
    CHECK(run(kCli + " goodset --mode nosuch --group 5 2> /dev/null") == 2);
    CHECK(run(kCli + " bounds --epsilon 0 --group 16 2> /dev/null") == 2);
    CHECK(run(kCli + " goodset --mode search --group 101 --epsilon 0.5 --size 5"
                     " 2> /dev/null") == 3);
    CHECK(run("QHASH_GUARD=10 " + kCli +
              " goodset --mode bias --group 101 2> /dev/null") == 3);
    CHECK(run("QHASH_GUARD=zebra " + kCli +
              " goodset --mode bias --group 5 2> /dev/null") == 2);
    CHECK(run(kCli + " build --group 5 --size 2 --input 1 --out /nonexistent_dir_qh/x.json"
                     " 2> /dev/null") == 4);
    CHECK(run(kCli + " goodset --mode verify --key \"" + tmp.file("none.json") +
              "\" --epsilon 0.1 2> /dev/null") == 4);

    const GroupSpec z5({5});
    write_text_file(tmp.file("k5.json"),
                    key_file_text(make_manifest("goodset", z5, 0.1, 1, 0), z5,
                                  {Automorphism(z5, {2})}));
    CHECK(run(kCli + " build --group 7 --key \"" + tmp.file("k5.json") +
              "\" --input 1 2> /dev/null") == 2);
    CHECK(run(kCli + " build --group 5 --key \"" + tmp.file("k5.json") +
              "\" --input 1 > /dev/null") == 0);
}

TEST_CASE("cli sample and verify agree on the key file") {
    TempDir tmp;
    const std::string key_path = tmp.file("key.json");
    const std::string rec_a = tmp.file("a.json");
    const std::string rec_b = tmp.file("b.json");
    REQUIRE(run(kCli + " goodset --mode sample --group 3x5x7 --epsilon 0.2 --size 25"
                       " --seed 12 --out \"" + key_path + "\" > \"" + rec_a + "\"") == 0);
    REQUIRE(run(kCli + " goodset --mode verify --key \"" + key_path +
                "\" --epsilon 0.2 > \"" + rec_b + "\"") == 0);

    const auto a = jload(rec_a);
    const auto b = jload(rec_b);
    CHECK(a["mode"] == "sample");
    CHECK(b["mode"] == "verify");
    CHECK(a["payload"].dump() == b["payload"].dump());

    // the sampled key matches the library sampler for the same seed
    const KeyFile kf = read_key_file(key_path);
    const SamplerConfig config(kf.spec, unit_group(kf.spec), 25, 0.2, 12, 1);
    const auto expected = sample_key(config);
    REQUIRE(kf.key.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(kf.key[i] == expected[i]);
}

TEST_CASE("cli overlap and bounds anchors") {
    TempDir tmp;
    const std::string rec = tmp.file("rec.json");
    REQUIRE(run(kCli + " overlap --group 5 --size 4 --seed 7 --x 110 --y 110"
                       " > \"" + rec + "\"") == 0);
    CHECK(jload(rec)["payload"]["overlap_sq"].get<double>() == 1.0);

    REQUIRE(run(kCli + " bounds --epsilon 0.1 --group 1024 > \"" + rec + "\"") == 0);
    const auto payload = jload(rec)["payload"];
    CHECK(payload["plain_size"] == 139);
    CHECK(payload["union_size"] == 153);
    CHECK(payload["group_order"] == 1024);
}

TEST_CASE("cli sweep row count and reproducibility") {
    TempDir tmp;
    const std::string csv_a = tmp.file("a.csv");
    const std::string csv_b = tmp.file("b.csv");
    const std::string cmd = " sweep --group 13 --epsilon 0.2,0.4 --size 4,6 --seeds 2"
                            " --seed 5 --trials 100 --out ";
    REQUIRE(run(kCli + cmd + "\"" + csv_a + "\" > /dev/null") == 0);
    REQUIRE(run(kCli + cmd + "\"" + csv_b + "\" --threads 4 > /dev/null") == 0);

    auto data_lines = [](const std::string& path) {
        std::ifstream in(path);
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') lines.push_back(line);
        return lines;
    };
    const auto a = data_lines(csv_a);
    const auto b = data_lines(csv_b);
    REQUIRE(a.size() == 9);  // header + 2*2*2 rows
    CHECK(a[0] == "group,epsilon,t,seed,delta,is_good,azuma_bound,bad_rate,stderr");
    CHECK(a == b);
}
