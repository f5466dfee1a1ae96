#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcnd/core.hpp"

namespace fcnd {

namespace fs = std::filesystem;

/// Shortest decimal text that reads back to exactly `v`.
std::string format_exact(double v);
/// `v` with 9 significant digits.
std::string format_9(double v);
/// Parses a full token as a double; nullopt on junk.
std::optional<double> parse_double(std::string_view token);

/// Writes `text` to `path` through a temporary file and rename.
void write_text_file(const fs::path& path, const std::string& text);
std::string read_text_file(const fs::path& path);

// ---------------------------------------------------------------------------
// Instances
//
//   # name <identifier>            (optional; otherwise the file stem)
//   <nodes> <arcs> <commodities> [pc]
//   <tail> <head> <cost> <capacity> <fixed> [K per-commodity costs if pc]
//   <origin> <destination> <demand>
//
// Node indices are 1-based; other `#` lines and blank lines are ignored.

Instance parse_instance(std::string_view text, const std::string& fallback_name);
std::string format_instance(const Instance& instance);
Instance read_instance(const fs::path& path);
void write_instance(const Instance& instance, const fs::path& path);

// ---------------------------------------------------------------------------
// Solution archives

struct ArchiveEntry {
  DesignVector design;
  double objective = 0.0;
  std::string provenance;
  double wall_time = 0.0;
};

/// Designs for one instance, ascending by objective (ties by design), no
/// duplicate designs.
struct SolutionArchive {
  std::string instance_name;
  std::vector<ArchiveEntry> entries;

  /// Inserts in order; a design already present keeps the lower objective.
  /// Returns false when nothing changed.
  bool insert(ArchiveEntry entry);
  const ArchiveEntry* best() const { return entries.empty() ? nullptr : &entries.front(); }
};

std::string format_archive(const SolutionArchive& archive);
SolutionArchive parse_archive(std::string_view text);
/// With `instance`, every objective is recomputed with solve_flow_lp and a
/// relative mismatch above 1e-6 throws IntegrityError.
SolutionArchive read_archive(const fs::path& path, const Instance* instance = nullptr);
void write_archive(const SolutionArchive& archive, const fs::path& path);
/// Read-modify-write. Creates the file when missing.
void append_archive(const fs::path& path, const std::string& instance_name,
                    const Solution& solution);

// ---------------------------------------------------------------------------
// Feature tables

inline constexpr int kFeatureCount = 30;
using FeatureRow = std::array<double, kFeatureCount>;

struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<std::uint8_t> labels;
};

std::string format_feature_table(const std::vector<FeatureRow>& rows,
                                 const std::vector<std::uint8_t>& labels);
void write_feature_table(const std::vector<FeatureRow>& rows,
                         const std::vector<std::uint8_t>& labels, const fs::path& path);
FeatureTable parse_feature_table(std::string_view text);
FeatureTable read_feature_table(const fs::path& path);

// ---------------------------------------------------------------------------
// Per-arc vectors (labels, predictions), sample sets, solutions, trajectories

/// One line per arc: `<arc> <bit> [<probability>]`, arcs 1-based.
std::string format_arc_bits(const std::vector<std::uint8_t>& bits,
                            const std::vector<double>* probabilities = nullptr);
std::vector<std::uint8_t> parse_arc_bits(std::string_view text);

std::string format_sample_set(const SampleSet& samples, const std::string& routine);
/// Flows are not stored; feasible entries come back with empty flows.
SampleSet parse_sample_set(std::string_view text);

std::string format_solution(const Solution& solution);
Solution parse_solution(std::string_view text);

std::string format_trajectory(const Trajectory& trajectory);
Trajectory parse_trajectory(std::string_view text);

}  // namespace fcnd
