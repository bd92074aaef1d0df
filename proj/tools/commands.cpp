#include "commands.hpp"

#include "dsom/cloud.hpp"
#include "dsom/fingerprint.hpp"
#include "dsom/io.hpp"
#include "dsom/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace dsom::cli {

namespace {

/// Raised for failures that should end the process with a given code and message.
struct Failure {
    int code;
    std::string message;
};

struct TrainFlags {
    std::string input;
    std::optional<int> rows;
    std::optional<int> cols;
    std::optional<double> avgPerNode;
    double learningRate = 0.1;
    double base = std::numbers::e;
    std::string init = "gradient";
    std::string select = "staggered";
    std::uint64_t seed = 0;
    std::optional<int> epochCap;
    bool gradientRescale = false;
};

void add_train_flags(CLI::App& cmd, TrainFlags& f)
{
    cmd.add_option("--input", f.input, "Record CSV")->required();
    auto* rows = cmd.add_option("--rows", f.rows, "Map rows")->check(CLI::PositiveNumber);
    auto* cols = cmd.add_option("--cols", f.cols, "Map columns")->check(CLI::PositiveNumber);
    auto* avg = cmd.add_option("--avg-per-node", f.avgPerNode, "Target samples per node (derives rows/cols)")
                    ->check(CLI::PositiveNumber);
    avg->excludes(rows)->excludes(cols);
    rows->needs(cols);
    cols->needs(rows);
    cmd.add_option("--learning-rate", f.learningRate, "Initial learning rate in (0,1]")->capture_default_str();
    cmd.add_option("--base", f.base, "Decay base (> 1)")->capture_default_str();
    cmd.add_option("--init", f.init, "Prototype initialization")
        ->check(CLI::IsMember({"gradient", "random"}))
        ->capture_default_str();
    cmd.add_option("--select", f.select, "Sample presentation order")
        ->check(CLI::IsMember({"staggered", "random"}))
        ->capture_default_str();
    cmd.add_option("--seed", f.seed, "Seed for random init/selection")->capture_default_str();
    cmd.add_option("--epoch-cap", f.epochCap, "Upper bound on epochs")->check(CLI::PositiveNumber);
    cmd.add_flag("--gradient-rescale", f.gradientRescale, "Stretch gradient init to the data range");
}

TrainerConfig to_config(const TrainFlags& f)
{
    TrainerConfig c;
    if (f.avgPerNode)
        c.avgSamplesPerNode = *f.avgPerNode;
    else if (f.rows && f.cols)
        c.shape = GridShape{*f.rows, *f.cols};
    else
        throw Failure{usage, "config: give either --rows/--cols or --avg-per-node"};
    c.initialLearningRate = f.learningRate;
    c.base = f.base;
    c.init = f.init == "random" ? InitKind::random : InitKind::gradient;
    c.select = f.select == "random" ? SelectKind::random : SelectKind::staggered;
    c.seed = f.seed;
    c.epochCap = f.epochCap;
    c.gradientRescale = f.gradientRescale;
    c.validate();
    return c;
}

cloud::LoadResult load_input(const std::string& path)
{
    if (!fs::exists(path))
        throw Failure{usage, "input file not found: " + path};
    cloud::LoadResult loaded = cloud::load_records(fs::path(path));
    if (loaded.dataset.records.empty())
        throw Failure{usage, "no usable records in " + path};
    return loaded;
}

InputProvenance provenance(const std::string& path, const cloud::LoadResult& loaded)
{
    return {path, sha256_file(path), loaded.droppedMissing, loaded.droppedAllZero};
}

int cmd_train(const TrainFlags& flags, const std::string& outDir, std::ostream& out)
{
    const TrainerConfig config = to_config(flags);
    const cloud::LoadResult loaded = load_input(flags.input);
    const TrainingRun<double> run = train(loaded.dataset.features(), config);
    write_run(outDir, run, provenance(flags.input, loaded));
    out << "trained " << run.grid.rows() << "x" << run.grid.cols() << " map on " << run.sampleCount << " records ("
        << (config.deterministic() ? "deterministic" : "seeded") << "): " << run.epochsRun << " epochs, "
        << (run.converged ? "converged" : "epoch budget exhausted") << "\n";
    return ok;
}

int cmd_label(const std::string& input, const std::string& runDir, const std::string& outFile, std::ostream& out)
{
    const cloud::LoadResult loaded = load_input(input);
    const fs::path protoPath = fs::path(runDir) / artifacts::prototypes;
    if (!fs::exists(protoPath))
        throw Failure{usage, "missing " + protoPath.string()};
    const SomGrid<double> grid = read_grid_csv(protoPath);
    const auto assignments = label(grid, loaded.dataset.features());
    write_assignments_csv(fs::path(outFile), assignments);
    out << "labeled " << assignments.size() << " records\n";
    return ok;
}

nlohmann::json read_manifest(const fs::path& dir)
{
    std::ifstream in(dir / artifacts::manifest);
    if (!in)
        throw Failure{usage, "missing " + (dir / artifacts::manifest).string()};
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Failure{usage, "unreadable manifest: " + std::string(e.what())};
    }
}

int cmd_report(const std::string& runDir, const std::string& input, const std::string& outDir, bool emitPgm,
               std::ostream& out)
{
    const fs::path dir(runDir);
    const nlohmann::json manifest = read_manifest(dir);
    const cloud::LoadResult loaded = load_input(input);
    const std::string fingerprint = data_fingerprint(loaded.dataset.features());
    if (manifest.value("data_fingerprint", std::string()) != fingerprint)
        throw Failure{usage, "input does not match the data this run was trained on (fingerprint mismatch)"};

    for (const char* name : {artifacts::prototypes, artifacts::assignments})
        if (!fs::exists(dir / name))
            throw Failure{usage, "missing " + (dir / name).string()};
    const SomGrid<double> grid = read_grid_csv(dir / artifacts::prototypes);
    const auto assignments = read_assignments_csv(dir / artifacts::assignments);
    const cloud::RegimeReport report = cloud::regime_report(grid, assignments, loaded.dataset);
    cloud::write_report(outDir, report, emitPgm);
    out << "wrote report for " << report.nodes.size() << " nodes to " << outDir << "\n";
    return ok;
}

std::optional<std::string> read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// One-line description of where two text files first diverge.
std::string describe_difference(const std::string& a, const std::string& b)
{
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    std::size_t line = 0, differing = 0, first = 0;
    for (;;) {
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (!ga && !gb)
            break;
        ++line;
        if (ga != gb || la != lb) {
            if (differing++ == 0)
                first = line;
        }
    }
    return std::to_string(differing) + " differing line(s), first at line " + std::to_string(first);
}

int cmd_compare(const std::string& dirA, const std::string& dirB, std::ostream& out)
{
    bool same = true;
    for (const char* name : {artifacts::prototypes, artifacts::assignments, artifacts::manifest}) {
        for (const auto& d : {dirA, dirB})
            if (!fs::exists(fs::path(d) / name))
                throw Failure{usage, "incomplete run directory " + d + ": missing " + name};
    }
    // The manifest carries wall-clock time, so only the model artifacts are compared.
    for (const char* name : {artifacts::prototypes, artifacts::assignments}) {
        const auto a = read_bytes(fs::path(dirA) / name);
        const auto b = read_bytes(fs::path(dirB) / name);
        if (!a || !b)
            throw Failure{usage, std::string("cannot read ") + name};
        if (*a == *b) {
            out << name << ": identical\n";
        } else {
            same = false;
            out << name << ": DIFFERENT (" << describe_difference(*a, *b) << ")\n";
        }
    }
    return same ? ok : mismatch;
}

struct BenchFlags {
    TrainFlags train;
    std::vector<std::uint64_t> seeds;
    std::string outFile;
};

std::string markdown_table(const nlohmann::ordered_json& rows)
{
    std::ostringstream md;
    md << "| variant | init | select | seed | seconds | epochs | converged | final QE |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        md << "| " << r["variant"].get<std::string>() << " | " << r["init"].get<std::string>() << " | "
           << r["select"].get<std::string>() << " | " << (r["seed"].is_null() ? "-" : r["seed"].dump()) << " | "
           << format_double(r["seconds"].get<double>()).substr(0, 8) << " | " << r["epochs_run"].get<int>() << " | "
           << (r["converged"].get<bool>() ? "yes" : "no") << " | "
           << format_double(r["final_quantization_error"].get<double>()).substr(0, 8) << " |\n";
    }
    return md.str();
}

int cmd_bench(const BenchFlags& flags, std::ostream& out)
{
    const TrainerConfig base = to_config(flags.train);
    const cloud::LoadResult loaded = load_input(flags.train.input);
    const Samples samples = loaded.dataset.features();

    struct Variant {
        const char* name;
        InitKind init;
        SelectKind select;
    };
    static constexpr Variant kDeterministic{"SOM+GI+SSS", InitKind::gradient, SelectKind::staggered};
    static constexpr Variant kSeeded[] = {
        {"SOM", InitKind::random, SelectKind::random},
        {"SOM+GI", InitKind::gradient, SelectKind::random},
        {"SOM+SSS", InitKind::random, SelectKind::staggered},
    };

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    auto run_variant = [&](const Variant& v, std::optional<std::uint64_t> seed) {
        TrainerConfig c = base;
        c.init = v.init;
        c.select = v.select;
        c.seed = seed.value_or(0);
        const TrainingRun<double> run = train(samples, c);
        std::ostringstream protos;
        write_grid_csv(protos, run.grid);
        rows.push_back({{"variant", v.name},
                        {"init", to_string(v.init)},
                        {"select", to_string(v.select)},
                        {"seed", seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json()},
                        {"seconds", run.seconds},
                        {"epochs_run", run.epochsRun},
                        {"max_epochs", run.schedule.maxEpochs},
                        {"converged", run.converged},
                        {"initial_quantization_error", run.initialQuantizationError},
                        {"final_quantization_error", run.finalQuantizationError},
                        {"prototypes_sha256", sha256_hex(protos.str())}});
    };

    run_variant(kDeterministic, std::nullopt);
    for (const auto seed : flags.seeds)
        for (const auto& v : kSeeded)
            run_variant(v, seed);

    nlohmann::ordered_json report;
    report["input"] = flags.train.input;
    report["input_sha256"] = sha256_file(flags.train.input);
    report["records"] = samples.rows();
    report["seeds"] = flags.seeds;
    report["rows"] = rows;
    if (!flags.outFile.empty()) {
        std::ofstream f(flags.outFile, std::ios::binary);
        if (!f)
            throw Failure{usage, "cannot write " + flags.outFile};
        f << report.dump(2) << "\n";
    }
    out << markdown_table(rows);
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Deterministic self-organizing map trainer for histogram records"};
    app.require_subcommand(1);

    TrainFlags trainFlags;
    std::string trainOut;
    auto* train = app.add_subcommand("train", "Train a map and write manifest, prototypes and assignments");
    add_train_flags(*train, trainFlags);
    train->add_option("--out", trainOut, "Output run directory")->required();

    std::string labelInput, labelRun, labelOut;
    auto* labelCmd = app.add_subcommand("label", "Assign records to the nodes of a trained map");
    labelCmd->add_option("--input", labelInput, "Record CSV")->required();
    labelCmd->add_option("--run", labelRun, "Run directory holding prototypes.csv")->required();
    labelCmd->add_option("--out", labelOut, "Assignments CSV to write")->required();

    std::string reportRun, reportInput, reportOut;
    bool emitPgm = false;
    auto* report = app.add_subcommand("report", "Regime histograms, cloud fractions, RFO grids, correlations");
    report->add_option("--run", reportRun, "Run directory")->required();
    report->add_option("--input", reportInput, "Record CSV the run was trained on")->required();
    report->add_option("--out", reportOut, "Report output directory")->required();
    report->add_flag("--emit-pgm", emitPgm, "Also write grayscale PGM images of each RFO grid");

    std::string dirA, dirB;
    auto* compare = app.add_subcommand("compare", "Exit 0 iff two runs have byte-identical artifacts");
    compare->add_option("run_a", dirA)->required();
    compare->add_option("run_b", dirB)->required();

    BenchFlags benchFlags;
    auto* bench = app.add_subcommand("bench", "Time init x selection mode combinations");
    add_train_flags(*bench, benchFlags.train);
    bench->add_option("--seeds", benchFlags.seeds, "Seeds for the randomized variants")->delimiter(',')->required();
    bench->add_option("--out", benchFlags.outFile, "JSON report file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ExcludesError& e) {
        err << "config conflict: " << e.what() << "\n";
        return usage;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return usage;
    }

    try {
        if (*train)
            return cmd_train(trainFlags, trainOut, out);
        if (*labelCmd)
            return cmd_label(labelInput, labelRun, labelOut, out);
        if (*report)
            return cmd_report(reportRun, reportInput, reportOut, emitPgm, out);
        if (*compare)
            return cmd_compare(dirA, dirB, out);
        if (*bench)
            return cmd_bench(benchFlags, out);
    } catch (const Failure& f) {
        err << "error: " << f.message << "\n";
        return f.code;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    }
    return usage;
}

} // namespace dsom::cli
