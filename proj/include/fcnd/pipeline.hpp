#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/heuristics.hpp"
#include "fcnd/io.hpp"
#include "fcnd/ml.hpp"
#include "fcnd/work_clock.hpp"

namespace fcnd {

// ---------------------------------------------------------------------------
// Metrics

/// 100 (objective - best_known) / best_known, snapped to 0 within 1e-9
/// relative. Throws StructuralError unless best_known > 0.
double primal_gap(double objective, double best_known);

/// Time average over [0, horizon] of the piecewise-constant gap, capped at
/// 100. The gap is 100 before the first incumbent. Throws StructuralError
/// unless horizon > 0.
double primal_integral(const Trajectory& trajectory, double best_known);

/// (Π (v + shift))^(1/n) - shift. Throws on empty input or negative values.
double shifted_geomean(std::span<const double> values, double shift = 1.0);

/// Linear interpolation between order statistics at (n-1) q.
double quantile(std::vector<double> values, double q);

/// Flips each bit independently with probability p.
std::vector<std::uint8_t> noisy_labels(std::span<const std::uint8_t> labels, double p,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sampling and Algorithm 1

struct SamplingConfig {
  bool rss = true;
  bool lsfs = true;
  double budget = 300.0;  // per routine
  double per_iter = 20.0;
  int lsfs_columns = 3;
  std::uint64_t seed = 1;
};

struct Sampling {
  SampleSet samples;
  /// Clock reading when the slower routine finished.
  double duration = 0.0;
  int rss_feasible = 0;
  int lsfs_feasible = 0;
};

/// Runs the enabled routines on separate threads and merges their samples,
/// RSS first.
Sampling run_samplers(const Instance& instance, const SamplingConfig& cfg);

enum class Integration : std::uint8_t { kLsr, kLbh, kLswsh };

struct SlsConfig {
  SamplingConfig sampling;
  Integration integration = Integration::kLsr;
  double respect_fraction = 0.8;
  /// search.budget is the total, sampling included.
  LsConfig search;
};

struct SlsResult {
  std::optional<Solution> best;
  /// Sample incumbents, then the search, on one clock.
  Trajectory trajectory;
  Sampling sampling;
  Predictions prediction;  // 1 = remove
  bool fallback = false;   // no feasible sample: plain ls_star
};

/// Sample, take the best sample, predict, search. `presampled` must come
/// from run_samplers with cfg.sampling; the clock then skips the sampling.
SlsResult sls(const Instance& instance, const ClassifierModel& model, const SlsConfig& cfg,
              WorkClock& clock, const Sampling* presampled = nullptr);

/// Re-prices a solution read from disk (flows are not stored).
Solution with_flows(const Instance& instance, const Solution& solution);

// ---------------------------------------------------------------------------
// Benchmarks

/// Scenario tags:
///   ls                   LS* from scratch
///   bnb                  branch and bound on the full instance
///   sls                  Algorithm 1 with the model and LSR
///   lsr-model, lbh-model, lswsh-model
///                        strategy fed by the model on the stored samples
///   lsr-db-P, lbh-db-P, lswsh-db-P
///                        strategy fed by archive labels flipped with prob. P
struct Scenario {
  enum class Kind : std::uint8_t { kLs, kBnb, kSls, kLsr, kLbh, kLswsh };
  enum class Source : std::uint8_t { kNone, kModel, kLabels };

  std::string tag;
  Kind kind = Kind::kLs;
  Source source = Source::kNone;
  double noise = 0.0;

  /// Throws StructuralError on an unknown tag.
  static Scenario parse(std::string_view tag);
};

struct ExperimentRecord {
  std::string instance;
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<double> best_objective;
  Trajectory trajectory;
  std::optional<ClassifierMetrics> metrics;

  friend bool operator==(const ExperimentRecord& a, const ExperimentRecord& b);
};

std::string format_record(const ExperimentRecord& record);
ExperimentRecord parse_record(std::string_view text);
void write_record(const ExperimentRecord& record, const fs::path& path);
ExperimentRecord read_record(const fs::path& path);

struct BenchInput {
  Instance instance;
  std::optional<SolutionArchive> archive;
  /// Samples for the best-sample and feature inputs of model/db scenarios.
  std::optional<SampleSet> samples;
  /// Full sampler output reused by sls (see sls()).
  std::optional<Sampling> sls_sampling;
};

struct BenchConfig {
  double budget = 120.0;
  LsConfig search;         // budget ignored
  SlsConfig sls;           // search.budget ignored
  std::uint64_t seed = 1;
  int jobs = 1;
  /// When set, one record file per run; existing matching records are
  /// loaded instead of rerun.
  fs::path record_dir;
};

/// Runs one scenario on one input. Throws IntegrityError when the scenario
/// needs a model, archive or samples that are missing.
ExperimentRecord run_scenario(const BenchInput& input, const Scenario& scenario,
                              const ClassifierModel* model, const BenchConfig& cfg);

/// Every (input, scenario) pair, in input-major order.
std::vector<ExperimentRecord> run_benchmark(const std::vector<BenchInput>& inputs,
                                            const std::vector<Scenario>& scenarios,
                                            const ClassifierModel* model, const BenchConfig& cfg);

fs::path record_path(const fs::path& dir, const std::string& instance, const std::string& scenario);

struct ScenarioSummary {
  std::string scenario;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
  double mean = 0.0;
  double geomean = 0.0;  // shifted, shift removed
  int wins = 0;
};

struct ClassifierSummary {
  std::string scenario;
  double balanced_accuracy = 0.0, fpr = 0.0, fnr = 0.0;
  int instances = 0;
};

struct BenchmarkReport {
  std::vector<ScenarioSummary> gap;
  std::vector<ScenarioSummary> integral;
  std::vector<ClassifierSummary> classifier;
  std::map<std::string, double> best_known;
  /// [scenario][instance] values.
  std::map<std::string, std::map<std::string, double>> gaps, integrals;
};

/// Best known = min over the archives and every record. A run without a
/// solution has gap and integral 100. Wins go to the unique best value on an
/// instance (ties within 1e-9 award none).
BenchmarkReport summarize(const std::vector<ExperimentRecord>& records,
                          const std::map<std::string, double>& archive_best = {});

enum class ReportFormat : std::uint8_t { kText, kCsv };

/// Geomean columns print the shifted value (geomean + 1).
std::string render_report(const BenchmarkReport& report, ReportFormat format);

}  // namespace fcnd
