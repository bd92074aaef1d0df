#include "dsom/cloud.hpp"

#include "dsom/fingerprint.hpp"
#include "dsom/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dsom::cloud {

namespace {

bool is_missing(std::string_view field)
{
    while (!field.empty() && field.front() == ' ')
        field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ')
        field.remove_suffix(1);
    if (field.empty())
        return true;
    if (field.size() != 3)
        return false;
    auto lower = [](char c) { return static_cast<char>(c | 0x20); };
    return lower(field[0]) == 'n' && lower(field[1]) == 'a' && lower(field[2]) == 'n';
}

int parse_index(std::string_view field, const char* what)
{
    const long long v = parse_integer(field);
    if (v < 0 || v > std::numeric_limits<int>::max())
        throw InputError(std::string(what) + " out of range: " + std::to_string(v));
    return static_cast<int>(v);
}

} // namespace

Samples CloudDataset::features() const
{
    Samples out(static_cast<Index>(records.size()), kBins);
    for (std::size_t r = 0; r < records.size(); ++r)
        out.row(static_cast<Index>(r)) = records[r].hist.transpose();
    return out;
}

std::string records_header()
{
    std::string h = "day,cell_row,cell_col";
    for (Index i = 0; i < kBins; ++i) {
        h += ",b";
        if (i < 10)
            h += '0';
        h += std::to_string(i);
    }
    return h;
}

LoadResult load_records(std::istream& in, const std::string& sourceName)
{
    LoadResult result;
    std::string line;
    if (!std::getline(in, line))
        throw InputError(sourceName + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
        line.erase(0, 3);
    if (line != records_header())
        throw InputError(sourceName + " line 1: expected header " + records_header());

    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r")
            continue;
        ++result.totalRows;
        try {
            const auto fields = split_csv_line(line);
            if (static_cast<Index>(fields.size()) != kBins + 3)
                throw InputError("expected " + std::to_string(kBins + 3) + " fields, got "
                                 + std::to_string(fields.size()));
            CloudRecord rec;
            rec.day = static_cast<int>(parse_integer(fields[0]));
            rec.cellRow = parse_index(fields[1], "cell_row");
            rec.cellCol = parse_index(fields[2], "cell_col");
            result.dataset.gridRows = std::max(result.dataset.gridRows, rec.cellRow + 1);
            result.dataset.gridCols = std::max(result.dataset.gridCols, rec.cellCol + 1);

            bool missing = false;
            for (Index i = 0; i < kBins; ++i) {
                const auto field = fields[static_cast<std::size_t>(i) + 3];
                if (is_missing(field)) {
                    missing = true;
                    continue;
                }
                const double v = parse_double(field);
                if (!(v >= 0.0 && v <= 1.0))
                    throw InputError("bin b" + std::to_string(i) + " = " + std::string(field) + " outside [0,1]");
                rec.hist(i) = v;
            }
            if (missing) {
                ++result.droppedMissing;
                continue;
            }
            if ((rec.hist.array() == 0.0).all()) {
                ++result.droppedAllZero;
                continue;
            }
            const double total = regime_cloud_fraction(rec.hist);
            if (total > 1.0 + kCloudFractionSlack)
                throw InputError("total cloud fraction " + format_double(total) + " exceeds 1");
            result.dataset.records.push_back(rec);
        } catch (const InputError& err) {
            throw InputError(sourceName + " line " + std::to_string(lineNo) + ": " + err.what());
        }
    }
    return result;
}

LoadResult load_records(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open input " + path.string());
    return load_records(in, path.string());
}

void write_records(std::ostream& out, const CloudDataset& dataset)
{
    out << records_header() << '\n';
    for (const auto& rec : dataset.records) {
        out << rec.day << ',' << rec.cellRow << ',' << rec.cellCol;
        for (Index i = 0; i < kBins; ++i)
            out << ',' << format_double(rec.hist(i));
        out << '\n';
    }
}

double regime_cloud_fraction(std::span<const double> prototype)
{
    if (static_cast<Index>(prototype.size()) != kBins)
        throw InputError("regime_cloud_fraction: expected 42 bins, got " + std::to_string(prototype.size()));
    double total = 0.0;
    for (double v : prototype)
        total += v;
    return total;
}

namespace {

/// Per-node, per-cell assignment counts plus per-cell totals, in one pass.
struct CellCounts {
    std::vector<Eigen::MatrixXi> perNode;
    Eigen::MatrixXi total;
};

CellCounts count_cells(const CloudDataset& dataset, std::span<const NodeCoord> assignments, int mapRows,
                       int mapCols)
{
    if (assignments.size() != dataset.records.size())
        throw InputError("assignments (" + std::to_string(assignments.size()) + ") do not match records ("
                         + std::to_string(dataset.records.size()) + ")");
    CellCounts counts;
    counts.total = Eigen::MatrixXi::Zero(dataset.gridRows, dataset.gridCols);
    counts.perNode.assign(static_cast<std::size_t>(mapRows) * mapCols,
                          Eigen::MatrixXi::Zero(dataset.gridRows, dataset.gridCols));
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const auto& rec = dataset.records[i];
        const NodeCoord& a = assignments[i];
        ++counts.total(rec.cellRow, rec.cellCol);
        if (a.row >= 1 && a.row <= mapRows && a.col >= 1 && a.col <= mapCols)
            ++counts.perNode[static_cast<std::size_t>(a.row - 1) * mapCols + (a.col - 1)](rec.cellRow, rec.cellCol);
    }
    return counts;
}

RfoGrid make_rfo(const Eigen::MatrixXi& assigned, const Eigen::MatrixXi& total)
{
    RfoGrid g;
    g.observations = total;
    g.values = Eigen::MatrixXd::Zero(total.rows(), total.cols());
    for (Index r = 0; r < total.rows(); ++r)
        for (Index c = 0; c < total.cols(); ++c)
            if (total(r, c) > 0)
                g.values(r, c) = double(assigned(r, c)) / double(total(r, c));
    return g;
}

} // namespace

RfoGrid rfo_grid(const CloudDataset& dataset, std::span<const NodeCoord> assignments, const NodeCoord& node)
{
    if (assignments.size() != dataset.records.size())
        throw InputError("rfo_grid: assignments do not match records");
    Eigen::MatrixXi assigned = Eigen::MatrixXi::Zero(dataset.gridRows, dataset.gridCols);
    Eigen::MatrixXi total = Eigen::MatrixXi::Zero(dataset.gridRows, dataset.gridCols);
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const auto& rec = dataset.records[i];
        ++total(rec.cellRow, rec.cellCol);
        if (assignments[i] == node)
            ++assigned(rec.cellRow, rec.cellCol);
    }
    return make_rfo(assigned, total);
}

double pattern_correlation(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw InputError("pattern_correlation: length mismatch");
    if (x.size() < 2)
        throw InputError("pattern_correlation: need at least two points");
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 && syy == 0.0)
        throw UndefinedResult("pattern_correlation: both inputs are constant");
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double rfo_correlation(const RfoGrid& a, const RfoGrid& b)
{
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw InputError("rfo_correlation: grids differ in shape");
    std::vector<double> xs, ys;
    for (Index c = 0; c < a.values.cols(); ++c)
        for (Index r = 0; r < a.values.rows(); ++r)
            if (a.observations(r, c) > 0 && b.observations(r, c) > 0) {
                xs.push_back(a.values(r, c));
                ys.push_back(b.values(r, c));
            }
    return pattern_correlation(xs, ys);
}

RegimeReport regime_report(const SomGrid<double>& grid, std::span<const NodeCoord> assignments,
                           const CloudDataset& dataset)
{
    if (grid.dim() != kBins)
        throw InputError("regime_report: map prototypes have " + std::to_string(grid.dim()) + " bins, expected 42");
    const CellCounts counts = count_cells(dataset, assignments, grid.rows(), grid.cols());

    RegimeReport report;
    report.rows = grid.rows();
    report.cols = grid.cols();
    report.records = static_cast<Index>(dataset.records.size());
    for (Index n = 0; n < grid.node_count(); ++n) {
        NodeRegime node;
        node.node = grid.coord_of(n);
        node.histogram = grid.prototypes().row(n).transpose();
        node.cloudFraction = regime_cloud_fraction(node.histogram);
        node.count = counts.perNode[static_cast<std::size_t>(n)].sum();
        node.rfo = make_rfo(counts.perNode[static_cast<std::size_t>(n)], counts.total);
        report.nodes.push_back(std::move(node));
    }

    const Index k = grid.node_count();
    report.correlation = Eigen::MatrixXd::Constant(k, k, std::nan(""));
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) {
            const auto& hi = report.nodes[static_cast<std::size_t>(i)].histogram;
            const auto& hj = report.nodes[static_cast<std::size_t>(j)].histogram;
            try {
                report.correlation(i, j) = pattern_correlation(std::span<const double>(hi.data(), kBins),
                                                               std::span<const double>(hj.data(), kBins));
            } catch (const UndefinedResult&) {
                // both prototypes flat; left as NaN
            }
        }
    return report;
}

RegimeReport regime_report(const TrainingRun<double>& run, const CloudDataset& dataset)
{
    if (run.dataFingerprint != data_fingerprint(dataset.features()))
        throw InputError("regime_report: run was trained on different data (fingerprint mismatch)");
    return regime_report(run.grid, run.assignments, dataset);
}

std::string rfo_file_stem(const NodeCoord& node)
{
    return "rfo_node_" + std::to_string(node.row) + "_" + std::to_string(node.col);
}

void write_rfo_csv(std::ostream& out, const RfoGrid& rfo)
{
    for (Index r = 0; r < rfo.values.rows(); ++r) {
        for (Index c = 0; c < rfo.values.cols(); ++c) {
            if (c > 0)
                out << ',';
            out << format_double(rfo.observations(r, c) > 0 ? rfo.values(r, c) : kNoData);
        }
        out << '\n';
    }
}

void write_rfo_pgm(std::ostream& out, const RfoGrid& rfo)
{
    // Gray 0 is no-data; observed cells map [0,1] onto 1..255.
    out << "P2\n" << rfo.values.cols() << ' ' << rfo.values.rows() << "\n255\n";
    for (Index r = 0; r < rfo.values.rows(); ++r) {
        for (Index c = 0; c < rfo.values.cols(); ++c) {
            if (c > 0)
                out << ' ';
            const int level = rfo.observations(r, c) > 0 ? 1 + static_cast<int>(std::lround(rfo.values(r, c) * 254.0)) : 0;
            out << level;
        }
        out << '\n';
    }
}

std::string report_json(const RegimeReport& report)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["rows"] = report.rows;
    j["cols"] = report.cols;
    j["records"] = report.records;
    j["rfo_no_data_value"] = kNoData;
    ordered_json nodes = ordered_json::array();
    for (const auto& n : report.nodes) {
        ordered_json hist = ordered_json::array();
        for (Index i = 0; i < kBins; ++i)
            hist.push_back(n.histogram(i));
        nodes.push_back({{"row", n.node.row},
                         {"col", n.node.col},
                         {"count", n.count},
                         {"cloud_fraction", n.cloudFraction},
                         {"rfo_file", rfo_file_stem(n.node) + ".csv"},
                         {"histogram", hist}});
    }
    j["nodes"] = nodes;
    ordered_json corr = ordered_json::array();
    for (Index i = 0; i < report.correlation.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Index k = 0; k < report.correlation.cols(); ++k) {
            const double v = report.correlation(i, k);
            row.push_back(std::isnan(v) ? ordered_json() : ordered_json(v));
        }
        corr.push_back(row);
    }
    j["histogram_correlation"] = corr;
    return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& dir, const RegimeReport& report, bool emitPgm)
{
    std::filesystem::create_directories(dir);
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw InputError("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(dir / "report.json");
        out << report_json(report);
    }
    for (const auto& n : report.nodes) {
        auto csv = open(dir / (rfo_file_stem(n.node) + ".csv"));
        write_rfo_csv(csv, n.rfo);
        if (emitPgm) {
            auto pgm = open(dir / (rfo_file_stem(n.node) + ".pgm"));
            write_rfo_pgm(pgm, n.rfo);
        }
    }
}

} // namespace dsom::cloud
