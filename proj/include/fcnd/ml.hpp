#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/io.hpp"

namespace fcnd {

// Feature layout (30 columns, all in [0,1]):
//   0-2    capacity, variable cost, fixed cost (divided by instance maxima)
//   3-7    tail node: degree, |supply|, supply sign, max in-capacity, max out-capacity
//   8-12   head node: same five
//   13-14  fractional open / closed frequency
//   15-19  fractional histogram bins [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1]
//   20-29  arc bit in the 10 best distinct feasible samples, zero-padded
inline constexpr int kBasicFeatures = 3;
inline constexpr int kNodeFeatures = 10;
inline constexpr int kGraphFeatures = kBasicFeatures + kNodeFeatures;

using FeatureMask = std::array<bool, kFeatureCount>;

FeatureMask all_features();
/// Basic and node features only.
FeatureMask graph_features();

/// One row per arc. Sampling features are zero when `samples` is empty.
std::vector<FeatureRow> featurize(const Instance& instance, const SampleSet& samples);

/// 1 = remove: complement of the OR of the top three designs. Throws
/// IntegrityError on an empty archive or a design length mismatch.
std::vector<std::uint8_t> build_labels(const SolutionArchive& archive, const Instance& instance);

/// ω1 y log p + ω0 (1-y) log(1-p), negated.
double weighted_bce(double label, double probability, double omega1, double omega0);

enum class ModelFamily : std::uint8_t { kLinear, kBoosted };

struct TrainOptions {
  // linear
  int epochs = 500;
  double step = 0.1;
  // boosted
  int stages = 100;
  double shrinkage = 0.1;
  int max_depth = 7;
  int min_leaf = 20;
  double l2 = 1e-3;

  FeatureMask features = all_features();
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;  // x < threshold goes left
  int left = -1, right = -1;
  double value = 0.0;  // leaf output, shrinkage included
};

using Tree = std::vector<TreeNode>;  // root at index 0

struct ClassifierModel {
  ModelFamily family = ModelFamily::kLinear;
  double omega1 = 0.5, omega0 = 0.5;
  double threshold = 0.5;
  /// Single-class training data: the model is constant.
  bool degenerate = false;
  FeatureMask features = all_features();
  double bias = 0.0;  // linear bias or boosted base score
  std::array<double, kFeatureCount> weights{};
  std::vector<Tree> trees;
  int max_depth = 0;
  /// Mean training loss after each epoch or stage.
  std::vector<double> loss_history;

  double score(const FeatureRow& row) const;
  double probability(const FeatureRow& row) const;
};

ClassifierModel train(ModelFamily family, const std::vector<FeatureRow>& rows,
                      const std::vector<std::uint8_t>& labels, double omega1, double omega0,
                      const TrainOptions& options = {});

struct Predictions {
  std::vector<double> probability;
  std::vector<std::uint8_t> decision;
};

Predictions predict(const ClassifierModel& model, const std::vector<FeatureRow>& rows);
/// Throws StructuralError unless every row has 30 entries.
Predictions predict(const ClassifierModel& model, const std::vector<std::vector<double>>& rows);

struct ClassifierMetrics {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double balanced_accuracy = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  bool degenerate = false;  // a class is absent from the labels
};

ClassifierMetrics classifier_metrics(const std::vector<std::uint8_t>& decisions,
                                     const std::vector<std::uint8_t>& labels);
ClassifierMetrics metrics_from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                      std::int64_t fn);

std::string to_string(ModelFamily family);
ModelFamily parse_family(std::string_view name);

std::string format_model(const ClassifierModel& model);
ClassifierModel parse_model(std::string_view text);
void write_model(const ClassifierModel& model, const fs::path& path);
ClassifierModel read_model(const fs::path& path);

}  // namespace fcnd
