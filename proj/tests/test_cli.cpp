#include "commands.hpp"

#include "dsom/io.hpp"

#include "synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dsom;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

/// A scratch directory with a small record file in it, removed on scope exit.
struct Workspace {
    fs::path root;
    fs::path input;

    explicit Workspace(const std::string& name, Index records = 120)
        : root(fs::temp_directory_path() / ("dsom_cli_" + name))
    {
        fs::remove_all(root);
        fs::create_directories(root);
        input = root / "records.csv";
        const auto synth = testing::draw_clouds(testing::block_centroids(4, 0.8), records, 0.01, 3, 4, 12);
        std::ofstream f(input);
        cloud::write_records(f, synth.dataset);
    }
    ~Workspace() { fs::remove_all(root); }

    std::string path(const std::string& leaf) const { return (root / leaf).string(); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("train writes a complete deterministic run")
{
    Workspace ws("train");
    const auto r = invoke({"train", "--input", ws.input.string(), "--rows", "4", "--cols", "3", "--learning-rate",
                           "0.1", "--out", ws.path("run")});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(ws.root / "run" / artifacts::prototypes));
    CHECK(fs::exists(ws.root / "run" / artifacts::assignments));
    const auto manifest = nlohmann::json::parse(slurp(ws.root / "run" / artifacts::manifest));
    CHECK(manifest["mode"] == "deterministic");
    CHECK(manifest["rows"] == 4);
    CHECK(manifest["cols"] == 3);
    CHECK(manifest["dim"] == 42);
    CHECK(manifest["records"] == 120);
    CHECK(manifest["input"]["sha256"] == sha256_file(ws.input));
    CHECK(manifest["config"]["seed"].is_null());
    CHECK(manifest["per_epoch_change_counts"].size() == manifest["epochs_run"].get<std::size_t>());

    const auto assignments = read_assignments_csv(ws.root / "run" / artifacts::assignments);
    CHECK(assignments.size() == 120);
    CHECK(read_grid_csv(ws.root / "run" / artifacts::prototypes).node_count() == 12);
}

TEST_CASE("train usage errors exit 2")
{
    Workspace ws("train_errors");
    SUBCASE("missing input names the path")
    {
        const auto r = invoke({"train", "--input", ws.path("nope.csv"), "--rows", "2", "--cols", "2", "--out",
                               ws.path("run")});
        CHECK(r.code == 2);
        CHECK(r.err.find(ws.path("nope.csv")) != std::string::npos);
        CHECK_FALSE(fs::exists(ws.root / "run"));
    }
    SUBCASE("avg-per-node conflicts with rows")
    {
        const auto r = invoke({"train", "--input", ws.input.string(), "--avg-per-node", "10", "--rows", "2", "--cols",
                               "2", "--out", ws.path("run")});
        CHECK(r.code == 2);
        CHECK(r.err.find("conflict") != std::string::npos);
        CHECK_FALSE(fs::exists(ws.root / "run"));
    }
    SUBCASE("no map size")
    {
        CHECK(invoke({"train", "--input", ws.input.string(), "--out", ws.path("run")}).code == 2);
    }
    SUBCASE("rows without cols")
    {
        CHECK(invoke({"train", "--input", ws.input.string(), "--rows", "2", "--out", ws.path("run")}).code == 2);
    }
    SUBCASE("bad values")
    {
        CHECK(invoke({"train", "--input", ws.input.string(), "--rows", "2", "--cols", "2", "--learning-rate", "1.5",
                      "--out", ws.path("run")})
                  .code
              == 2);
        CHECK(invoke({"train", "--input", ws.input.string(), "--rows", "2", "--cols", "2", "--init", "pca", "--out",
                      ws.path("run")})
                  .code
              == 2);
    }
    SUBCASE("malformed input file")
    {
        std::ofstream(ws.path("bad.csv")) << "day,cell_row,cell_col\n";
        CHECK(invoke({"train", "--input", ws.path("bad.csv"), "--rows", "2", "--cols", "2", "--out", ws.path("run")})
                  .code
              == 2);
    }
    SUBCASE("unknown subcommand and no subcommand")
    {
        CHECK(invoke({"fit"}).code == 2);
        CHECK(invoke({}).code == 2);
    }
}

TEST_CASE("help exits 0")
{
    const auto r = invoke({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("train") != std::string::npos);
}

TEST_CASE("compare")
{
    Workspace ws("compare");
    const std::vector<std::string> common{"--input", ws.input.string(), "--rows", "2", "--cols", "3"};
    auto train_into = [&](const std::string& dir, std::vector<std::string> extra) {
        std::vector<std::string> args{"train"};
        args.insert(args.end(), common.begin(), common.end());
        args.insert(args.end(), extra.begin(), extra.end());
        args.push_back("--out");
        args.push_back(ws.path(dir));
        REQUIRE(invoke(args).code == 0);
    };
    train_into("det1", {});
    train_into("det2", {});
    train_into("rand", {"--init", "random", "--select", "random", "--seed", "5"});

    const auto same = invoke({"compare", ws.path("det1"), ws.path("det2")});
    CHECK(same.code == 0);
    CHECK(same.out.find("prototypes.csv: identical") != std::string::npos);
    CHECK(invoke({"compare", ws.path("det1"), ws.path("det1")}).code == 0);

    const auto diff = invoke({"compare", ws.path("det1"), ws.path("rand")});
    CHECK(diff.code == 1);
    CHECK(diff.out.find("DIFFERENT") != std::string::npos);

    fs::remove(ws.root / "det2" / artifacts::assignments);
    CHECK(invoke({"compare", ws.path("det1"), ws.path("det2")}).code == 2);
    CHECK(invoke({"compare", ws.path("det1"), ws.path("missing")}).code == 2);
}

TEST_CASE("label reproduces the trained assignments")
{
    Workspace ws("label");
    REQUIRE(invoke({"train", "--input", ws.input.string(), "--avg-per-node", "20", "--out", ws.path("run")}).code == 0);
    REQUIRE(invoke({"label", "--input", ws.input.string(), "--run", ws.path("run"), "--out", ws.path("labels.csv")})
                .code
            == 0);
    CHECK(slurp(ws.root / "labels.csv") == slurp(ws.root / "run" / artifacts::assignments));
    CHECK(invoke({"label", "--input", ws.input.string(), "--run", ws.path("none"), "--out", ws.path("x.csv")}).code
          == 2);
}

TEST_CASE("report writes per-node products and checks the data")
{
    Workspace ws("report");
    REQUIRE(invoke({"train", "--input", ws.input.string(), "--rows", "2", "--cols", "2", "--out", ws.path("run")}).code
            == 0);
    const auto r = invoke({"report", "--run", ws.path("run"), "--input", ws.input.string(), "--out", ws.path("rep"),
                           "--emit-pgm"});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(ws.root / "rep" / "report.json"));
    CHECK(report["nodes"].size() == 4);
    CHECK(report["histogram_correlation"].size() == 4);
    for (const char* stem : {"rfo_node_1_1", "rfo_node_1_2", "rfo_node_2_1", "rfo_node_2_2"}) {
        CHECK(fs::exists(ws.root / "rep" / (std::string(stem) + ".csv")));
        CHECK(fs::exists(ws.root / "rep" / (std::string(stem) + ".pgm")));
    }

    Workspace other("report_other", 80);
    const auto mismatch = invoke({"report", "--run", ws.path("run"), "--input", other.input.string(), "--out",
                                  ws.path("rep2")});
    CHECK(mismatch.code == 2);
    CHECK(mismatch.err.find("fingerprint") != std::string::npos);
}

TEST_CASE("bench reports every mode combination")
{
    Workspace ws("bench", 60);
    auto bench = [&](const std::string& file) {
        return invoke({"bench", "--input", ws.input.string(), "--rows", "2", "--cols", "2", "--seeds", "1,2,3",
                       "--out", ws.path(file)});
    };
    const auto first = bench("b1.json");
    REQUIRE(first.code == 0);
    REQUIRE(bench("b2.json").code == 0);
    const auto a = nlohmann::json::parse(slurp(ws.root / "b1.json"));
    const auto b = nlohmann::json::parse(slurp(ws.root / "b2.json"));
    REQUIRE(a["rows"].size() == 10);
    for (const auto& row : a["rows"]) {
        CHECK(row.contains("epochs_run"));
        CHECK(row.contains("seconds"));
    }
    CHECK(a["rows"][0]["variant"] == "SOM+GI+SSS");
    CHECK(a["rows"][0]["seed"].is_null());
    CHECK(a["rows"][0]["prototypes_sha256"] == b["rows"][0]["prototypes_sha256"]);
    CHECK(a["rows"][0]["epochs_run"] == b["rows"][0]["epochs_run"]);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(a["rows"][i]["prototypes_sha256"] == b["rows"][i]["prototypes_sha256"]);
    CHECK(first.out.find("| SOM+GI |") != std::string::npos);

    CHECK(invoke({"bench", "--input", ws.input.string(), "--rows", "2", "--cols", "2"}).code == 2);
}
