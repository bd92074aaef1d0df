#include "dsom/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dsom {

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view field)
{
    while (!field.empty() && field.front() == ' ')
        field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ')
        field.remove_suffix(1);
    if (!field.empty() && field.front() == '+')
        field.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw InputError("not a number: '" + std::string(field) + "'");
    return value;
}

long long parse_integer(std::string_view field)
{
    while (!field.empty() && field.front() == ' ')
        field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ')
        field.remove_suffix(1);
    long long value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw InputError("not an integer: '" + std::string(field) + "'");
    return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());
    return in;
}

} // namespace

void write_grid_csv(std::ostream& out, const SomGrid<double>& grid)
{
    out << "row,col";
    for (Index i = 0; i < grid.dim(); ++i)
        out << ",f" << i;
    out << '\n';
    for (Index n = 0; n < grid.node_count(); ++n) {
        const NodeCoord c = grid.coord_of(n);
        out << c.row << ',' << c.col;
        for (Index i = 0; i < grid.dim(); ++i)
            out << ',' << format_double(grid.prototypes()(n, i));
        out << '\n';
    }
}

void write_grid_csv(const std::filesystem::path& path, const SomGrid<double>& grid)
{
    auto out = open_out(path);
    write_grid_csv(out, grid);
}

SomGrid<double> read_grid_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("prototype file is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "row" || header[1] != "col")
        throw InputError("prototype file: bad header");
    const Index dim = static_cast<Index>(header.size()) - 2;

    struct Entry {
        NodeCoord coord;
        std::vector<double> values;
    };
    std::vector<Entry> entries;
    int rows = 0, cols = 0;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r")
            continue;
        const auto fields = split_csv_line(line);
        if (static_cast<Index>(fields.size()) != dim + 2)
            throw InputError("prototype file line " + std::to_string(lineNo) + ": wrong field count");
        Entry e;
        try {
            e.coord = {static_cast<int>(parse_integer(fields[0])), static_cast<int>(parse_integer(fields[1]))};
            for (Index i = 0; i < dim; ++i) {
                const double v = parse_double(fields[static_cast<std::size_t>(i) + 2]);
                if (!std::isfinite(v))
                    throw InputError("non-finite prototype value");
                e.values.push_back(v);
            }
        } catch (const InputError& err) {
            throw InputError("prototype file line " + std::to_string(lineNo) + ": " + err.what());
        }
        rows = std::max(rows, e.coord.row);
        cols = std::max(cols, e.coord.col);
        entries.push_back(std::move(e));
    }
    if (entries.empty() || static_cast<Index>(entries.size()) != Index(rows) * cols)
        throw InputError("prototype file does not describe a full rectangular lattice");

    SomGrid<double> grid(rows, cols, dim);
    std::vector<bool> seen(entries.size(), false);
    for (const auto& e : entries) {
        if (!grid.contains(e.coord) || seen[static_cast<std::size_t>(grid.index_of(e.coord))])
            throw InputError("prototype file: invalid or duplicate node " + to_string(e.coord));
        seen[static_cast<std::size_t>(grid.index_of(e.coord))] = true;
        for (Index i = 0; i < dim; ++i)
            grid.prototypes()(grid.index_of(e.coord), i) = e.values[static_cast<std::size_t>(i)];
    }
    return grid;
}

SomGrid<double> read_grid_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_grid_csv(in);
}

void write_assignments_csv(std::ostream& out, const std::vector<NodeCoord>& assignments)
{
    out << "record_index,row,col\n";
    for (std::size_t i = 0; i < assignments.size(); ++i)
        out << i << ',' << assignments[i].row << ',' << assignments[i].col << '\n';
}

void write_assignments_csv(const std::filesystem::path& path, const std::vector<NodeCoord>& assignments)
{
    auto out = open_out(path);
    write_assignments_csv(out, assignments);
}

std::vector<NodeCoord> read_assignments_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string_view>{"record_index", "row", "col"})
        throw InputError(path.string() + ": bad assignments header");
    std::vector<NodeCoord> out;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r")
            continue;
        const auto fields = split_csv_line(line);
        try {
            if (fields.size() != 3)
                throw InputError("wrong field count");
            if (parse_integer(fields[0]) != static_cast<long long>(out.size()))
                throw InputError("record indices must be consecutive from 0");
            out.push_back({static_cast<int>(parse_integer(fields[1])), static_cast<int>(parse_integer(fields[2]))});
        } catch (const InputError& err) {
            throw InputError(path.string() + " line " + std::to_string(lineNo) + ": " + err.what());
        }
    }
    return out;
}

std::string manifest_json(const TrainingRun<double>& run, const InputProvenance& input)
{
    using nlohmann::ordered_json;
    const auto& cfg = run.config;

    ordered_json config;
    config["avg_samples_per_node"] = cfg.avgSamplesPerNode ? ordered_json(*cfg.avgSamplesPerNode) : ordered_json();
    config["rows"] = cfg.shape ? ordered_json(cfg.shape->rows) : ordered_json();
    config["cols"] = cfg.shape ? ordered_json(cfg.shape->cols) : ordered_json();
    config["initial_learning_rate"] = cfg.initialLearningRate;
    config["base"] = cfg.base;
    config["init"] = to_string(cfg.init);
    config["select"] = to_string(cfg.select);
    config["seed"] = cfg.deterministic() ? ordered_json() : ordered_json(cfg.seed);
    config["epoch_cap"] = cfg.epochCap ? ordered_json(*cfg.epochCap) : ordered_json();
    config["gradient_rescale"] = cfg.gradientRescale;

    const double lambda = run.schedule.radius_time_constant();
    ordered_json schedule;
    schedule["initial_radius"] = run.schedule.initialRadius;
    schedule["initial_learning_rate"] = run.schedule.initialRate;
    schedule["base"] = run.schedule.base;
    schedule["max_epochs"] = run.schedule.maxEpochs;
    schedule["radius_time_constant"] = std::isfinite(lambda) ? ordered_json(lambda) : ordered_json();
    schedule["rate_time_constant"] = run.schedule.rate_time_constant();

    ordered_json m;
    m["mode"] = cfg.deterministic() ? "deterministic" : "seeded";
    m["config"] = config;
    m["schedule"] = schedule;
    m["input"] = {{"path", input.path},
                  {"sha256", input.sha256},
                  {"dropped_missing", input.droppedMissing},
                  {"dropped_all_zero", input.droppedAllZero}};
    m["data_fingerprint"] = run.dataFingerprint;
    m["records"] = run.sampleCount;
    m["rows"] = run.grid.rows();
    m["cols"] = run.grid.cols();
    m["dim"] = run.grid.dim();
    m["epochs_run"] = run.epochsRun;
    m["converged"] = run.converged;
    m["per_epoch_change_counts"] = run.perEpochChangeCounts;
    m["initial_quantization_error"] = run.initialQuantizationError;
    m["final_quantization_error"] = run.finalQuantizationError;
    m["duration_seconds"] = run.seconds;
    return m.dump(2) + "\n";
}

void write_run(const std::filesystem::path& dir, const TrainingRun<double>& run, const InputProvenance& input)
{
    std::filesystem::create_directories(dir);
    write_grid_csv(dir / artifacts::prototypes, run.grid);
    write_assignments_csv(dir / artifacts::assignments, run.assignments);
    auto out = open_out(dir / artifacts::manifest);
    out << manifest_json(run, input);
}

} // namespace dsom
