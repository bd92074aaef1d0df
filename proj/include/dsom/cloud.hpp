#ifndef DSOM_CLOUD_HPP
#define DSOM_CLOUD_HPP

#include "dsom/core.hpp"
#include "dsom/grid.hpp"
#include "dsom/trainer.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dsom::cloud {

/// 6 optical-thickness classes x 7 cloud-top-pressure classes.
inline constexpr Index kBins = 42;

using Histogram = Eigen::Matrix<double, kBins, 1>;

/// One grid cell on one day. Cell indices are zero-based.
struct CloudRecord {
    int day = 0;
    int cellRow = 0;
    int cellCol = 0;
    Histogram hist = Histogram::Zero();

    friend bool operator==(const CloudRecord& a, const CloudRecord& b)
    {
        return a.day == b.day && a.cellRow == b.cellRow && a.cellCol == b.cellCol && a.hist == b.hist;
    }
};

struct CloudDataset {
    std::vector<CloudRecord> records;
    /// Spatial extent: every cell index seen in the input, dropped rows included.
    int gridRows = 0;
    int gridCols = 0;

    /// Histograms stacked one record per row, in record order.
    Samples features() const;
};

struct LoadResult {
    CloudDataset dataset;
    Index droppedMissing = 0;
    Index droppedAllZero = 0;
    Index totalRows = 0;
};

/// Tolerance on the total cloud fraction of a record before it is rejected as > 1.
inline constexpr double kCloudFractionSlack = 1e-6;

/**
 * Reads the record CSV: header `day,cell_row,cell_col,b00,...,b41`, one record per line.
 *
 * A bin that is empty or `NaN` marks the record as missing; records whose 42 bins are
 * all zero are cloud free. Both kinds are dropped and counted. Anything else that does
 * not parse, a bin outside [0,1], or a total above 1 is an InputError naming the line.
 * Blank lines are ignored. Retained records keep file order.
 */
LoadResult load_records(std::istream& in, const std::string& sourceName = "<stream>");
LoadResult load_records(const std::filesystem::path& path);

void write_records(std::ostream& out, const CloudDataset& dataset);
std::string records_header();

/// Total cloud fraction: the sum of the 42 bins.
double regime_cloud_fraction(std::span<const double> prototype);

template <typename Derived>
double regime_cloud_fraction(const Eigen::MatrixBase<Derived>& prototype)
{
    if (prototype.size() != kBins)
        throw InputError("regime_cloud_fraction: expected 42 bins, got " + std::to_string(prototype.size()));
    double total = 0.0;
    for (Index i = 0; i < kBins; ++i)
        total += double(prototype(i));
    return total;
}

/// Per-cell relative frequency of occurrence of one node.
struct RfoGrid {
    /// Fraction of a cell's records assigned to the node; meaningful only where populated.
    Eigen::MatrixXd values;
    /// Retained records per cell; zero marks a no-data cell.
    Eigen::MatrixXi observations;

    bool populated(int r, int c) const { return observations(r, c) > 0; }
};

/// Sentinel written in place of no-data cells.
inline constexpr double kNoData = -1.0;

RfoGrid rfo_grid(const CloudDataset& dataset, std::span<const NodeCoord> assignments, const NodeCoord& node);

/// Pearson correlation. If exactly one input is constant the result is 0.
double pattern_correlation(std::span<const double> x, std::span<const double> y);

/// Pearson correlation over cells populated in both grids.
double rfo_correlation(const RfoGrid& a, const RfoGrid& b);

struct NodeRegime {
    NodeCoord node;
    Histogram histogram;
    double cloudFraction = 0.0;
    Index count = 0;
    RfoGrid rfo;
};

struct RegimeReport {
    int rows = 0;
    int cols = 0;
    Index records = 0;
    std::vector<NodeRegime> nodes;
    /// Pairwise histogram correlations between nodes; NaN where undefined.
    Eigen::MatrixXd correlation;
};

RegimeReport regime_report(const SomGrid<double>& grid, std::span<const NodeCoord> assignments,
                           const CloudDataset& dataset);

/// As above, after checking the run was trained on exactly this dataset.
RegimeReport regime_report(const TrainingRun<double>& run, const CloudDataset& dataset);

std::string rfo_file_stem(const NodeCoord& node);
void write_rfo_csv(std::ostream& out, const RfoGrid& rfo);
void write_rfo_pgm(std::ostream& out, const RfoGrid& rfo);
std::string report_json(const RegimeReport& report);

/// report.json plus rfo_node_R_C.csv per node (and .pgm when asked).
void write_report(const std::filesystem::path& dir, const RegimeReport& report, bool emitPgm);

} // namespace dsom::cloud

#endif // DSOM_CLOUD_HPP
