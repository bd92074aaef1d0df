#ifndef DSOM_IO_HPP
#define DSOM_IO_HPP

#include "dsom/core.hpp"
#include "dsom/grid.hpp"
#include "dsom/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dsom {

/// Shortest-safe text form of a double: 17 significant digits, locale independent.
std::string format_double(double value);

/// Strict decimal parse of a whole field; throws InputError on trailing junk.
double parse_double(std::string_view field);
long long parse_integer(std::string_view field);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// `row,col,f0,...,f{D-1}`, one line per node in (row, col) order.
void write_grid_csv(std::ostream& out, const SomGrid<double>& grid);
void write_grid_csv(const std::filesystem::path& path, const SomGrid<double>& grid);
SomGrid<double> read_grid_csv(std::istream& in);
SomGrid<double> read_grid_csv(const std::filesystem::path& path);

/// `record_index,row,col`.
void write_assignments_csv(std::ostream& out, const std::vector<NodeCoord>& assignments);
void write_assignments_csv(const std::filesystem::path& path, const std::vector<NodeCoord>& assignments);
std::vector<NodeCoord> read_assignments_csv(const std::filesystem::path& path);

/// Provenance that only the caller knows about (the input file and how it was filtered).
struct InputProvenance {
    std::string path;
    std::string sha256;
    Index droppedMissing = 0;
    Index droppedAllZero = 0;
};

/// JSON manifest of a run: configuration, schedule, input hash and convergence record.
std::string manifest_json(const TrainingRun<double>& run, const InputProvenance& input);

namespace artifacts {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* prototypes = "prototypes.csv";
inline constexpr const char* assignments = "assignments.csv";
} // namespace artifacts

void write_run(const std::filesystem::path& dir, const TrainingRun<double>& run, const InputProvenance& input);

} // namespace dsom

#endif // DSOM_IO_HPP
