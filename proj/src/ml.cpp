#include "fcnd/ml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "fcnd/errors.hpp"

namespace fcnd {

FeatureMask all_features() {
  FeatureMask m;
  m.fill(true);
  return m;
}

FeatureMask graph_features() {
  FeatureMask m{};
  for (int f = 0; f < kGraphFeatures; ++f) m[f] = true;
  return m;
}

namespace {

double ratio(double v, double max) { return max > 0.0 ? v / max : 0.0; }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<FeatureRow> featurize(const Instance& instance, const SampleSet& samples) {
  const int m = instance.arc_count();
  const int n = instance.node_count();
  const int K = instance.commodity_count();

  std::vector<double> var_cost(m);
  double max_u = 0.0, max_c = 0.0, max_f = 0.0;
  for (int a = 0; a < m; ++a) {
    const Arc& arc = instance.arc(a);
    double c = arc.variable_cost;
    if (instance.has_commodity_costs()) {
      c = 0.0;
      for (int k = 0; k < K; ++k) c += instance.cost(a, k);
      c /= std::max(K, 1);
    }
    var_cost[a] = c;
    max_u = std::max(max_u, arc.capacity);
    max_c = std::max(max_c, c);
    max_f = std::max(max_f, arc.fixed_cost);
  }

  std::vector<double> degree(n), supply(n, 0.0), in_cap(n, 0.0), out_cap(n, 0.0);
  for (int i = 0; i < n; ++i) {
    degree[i] = static_cast<double>(instance.in_arcs(i).size() + instance.out_arcs(i).size());
    for (ArcId a : instance.in_arcs(i)) in_cap[i] = std::max(in_cap[i], instance.arc(a).capacity);
    for (ArcId a : instance.out_arcs(i)) out_cap[i] = std::max(out_cap[i], instance.arc(a).capacity);
  }
  for (const Commodity& k : instance.commodities()) {
    supply[k.origin] += k.demand;
    supply[k.destination] -= k.demand;
  }
  double max_deg = 0.0, max_supply = 0.0;
  for (int i = 0; i < n; ++i) {
    max_deg = std::max(max_deg, degree[i]);
    max_supply = std::max(max_supply, std::abs(supply[i]));
  }
  const auto node_block = [&](NodeId i, double* out) {
    out[0] = ratio(degree[i], max_deg);
    out[1] = ratio(std::abs(supply[i]), max_supply);
    out[2] = supply[i] > 1e-9 ? 1.0 : (supply[i] < -1e-9 ? 0.0 : 0.5);
    out[3] = ratio(in_cap[i], max_u);
    out[4] = ratio(out_cap[i], max_u);
  };

  std::vector<FeatureRow> rows(m);
  for (int a = 0; a < m; ++a) {
    FeatureRow& r = rows[a];
    r.fill(0.0);
    const Arc& arc = instance.arc(a);
    r[0] = ratio(arc.capacity, max_u);
    r[1] = ratio(var_cost[a], max_c);
    r[2] = ratio(arc.fixed_cost, max_f);
    node_block(arc.tail, &r[3]);
    node_block(arc.head, &r[8]);
  }

  if (!samples.fractional.empty()) {
    const double count = static_cast<double>(samples.fractional.size());
    for (const Eigen::VectorXd& y : samples.fractional) {
      if (y.size() != m) throw StructuralError("fractional sample length does not match arc count");
      for (int a = 0; a < m; ++a) {
        const double v = y[a];
        if (v >= 1.0 - 1e-6) rows[a][13] += 1.0;
        else if (v <= 1e-6) rows[a][14] += 1.0;
        else rows[a][15 + std::min(4, static_cast<int>(v / 0.2))] += 1.0;
      }
    }
    for (FeatureRow& r : rows)
      for (int f = 13; f < 20; ++f) r[f] /= count;
  }

  std::set<DesignVector> used;
  int column = 20;
  for (const Solution* s : samples.ranked_feasible()) {
    if (column >= kFeatureCount) break;
    if (static_cast<int>(s->design.size()) != m)
      throw StructuralError("feasible sample length does not match arc count");
    if (!used.insert(s->design).second) continue;
    for (int a = 0; a < m; ++a) rows[a][column] = s->design[a] ? 1.0 : 0.0;
    ++column;
  }
  return rows;
}

std::vector<std::uint8_t> build_labels(const SolutionArchive& archive, const Instance& instance) {
  if (archive.entries.empty()) throw IntegrityError("archive for " + archive.instance_name + " is empty");
  const int m = instance.arc_count();
  std::vector<std::uint8_t> labels(m, 1);
  const std::size_t top = std::min<std::size_t>(3, archive.entries.size());
  for (std::size_t i = 0; i < top; ++i) {
    const DesignVector& y = archive.entries[i].design;
    if (static_cast<int>(y.size()) != m) throw IntegrityError("archive design length does not match arc count");
    for (int a = 0; a < m; ++a)
      if (y[a]) labels[a] = 0;
  }
  return labels;
}

double weighted_bce(double label, double probability, double omega1, double omega0) {
  const double p = std::clamp(probability, 1e-15, 1.0 - 1e-15);
  return -omega1 * label * std::log(p) - omega0 * (1.0 - label) * std::log(1.0 - p);
}

double ClassifierModel::score(const FeatureRow& row) const {
  double z = bias;
  if (family == ModelFamily::kLinear) {
    for (int f = 0; f < kFeatureCount; ++f) z += weights[f] * row[f];
    return z;
  }
  for (const Tree& t : trees) {
    int i = 0;
    while (t[i].feature >= 0) i = row[t[i].feature] < t[i].threshold ? t[i].left : t[i].right;
    z += t[i].value;
  }
  return z;
}

double ClassifierModel::probability(const FeatureRow& row) const { return sigmoid(score(row)); }

namespace {

double mean_loss(const std::vector<double>& score, const std::vector<std::uint8_t>& labels,
                 double w1, double w0) {
  double s = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) s += weighted_bce(labels[i], sigmoid(score[i]), w1, w0);
  return s / static_cast<double>(score.size());
}

void train_linear(ClassifierModel& model, const std::vector<FeatureRow>& rows,
                  const std::vector<std::uint8_t>& labels, const TrainOptions& opt) {
  const std::size_t n = rows.size();
  const double w1 = model.omega1, w0 = model.omega0;
  std::vector<double> score(n, 0.0);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::array<double, kFeatureCount> grad{};
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      const double g = labels[i] ? w1 * (p - 1.0) : w0 * p;
      grad_b += g;
      for (int f = 0; f < kFeatureCount; ++f)
        if (opt.features[f]) grad[f] += g * rows[i][f];
    }
    model.bias -= opt.step * grad_b / static_cast<double>(n);
    for (int f = 0; f < kFeatureCount; ++f) model.weights[f] -= opt.step * grad[f] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) score[i] = model.score(rows[i]);
    model.loss_history.push_back(mean_loss(score, labels, w1, w0));
  }
}

/// One regression tree on gradient statistics, grown level by level with
/// exact splits between consecutive distinct values.
Tree grow_tree(const std::vector<FeatureRow>& rows, const std::vector<double>& g,
               const std::vector<double>& h, const std::vector<std::vector<int>>& sorted,
               const TrainOptions& opt, std::vector<int>& node_of) {
  const int n = static_cast<int>(rows.size());
  const double lambda = opt.l2;
  Tree tree(1);
  std::fill(node_of.begin(), node_of.end(), 0);
  std::vector<int> active{0};

  for (int depth = 0; depth < opt.max_depth && !active.empty(); ++depth) {
    const std::size_t size = tree.size();
    std::vector<double> G(size, 0.0), H(size, 0.0);
    std::vector<int> count(size, 0);
    std::vector<char> is_active(size, 0);
    for (int v : active) is_active[v] = 1;
    for (int i = 0; i < n; ++i) {
      const int v = node_of[i];
      if (!is_active[v]) continue;
      G[v] += g[i];
      H[v] += h[i];
      ++count[v];
    }
    std::vector<double> best_gain(size, 1e-12), best_thr(size, 0.0);
    std::vector<int> best_feat(size, -1);
    std::vector<double> GL(size), HL(size), last(size);
    std::vector<int> cl(size);
    for (int f = 0; f < kFeatureCount; ++f) {
      if (!opt.features[f]) continue;
      std::fill(GL.begin(), GL.end(), 0.0);
      std::fill(HL.begin(), HL.end(), 0.0);
      std::fill(cl.begin(), cl.end(), 0);
      for (int i : sorted[f]) {
        const int v = node_of[i];
        if (!is_active[v]) continue;
        const double x = rows[i][f];
        if (cl[v] > 0 && x > last[v] && cl[v] >= opt.min_leaf && count[v] - cl[v] >= opt.min_leaf) {
          const double gr = G[v] - GL[v], hr = H[v] - HL[v];
          const double gain = GL[v] * GL[v] / (HL[v] + lambda) + gr * gr / (hr + lambda) -
                              G[v] * G[v] / (H[v] + lambda);
          if (gain > best_gain[v]) {
            best_gain[v] = gain;
            best_feat[v] = f;
            best_thr[v] = 0.5 * (last[v] + x);
          }
        }
        GL[v] += g[i];
        HL[v] += h[i];
        ++cl[v];
        last[v] = x;
      }
    }
    std::vector<int> next;
    std::vector<int> remap(size, -1);
    for (int v : active) {
      if (best_feat[v] < 0) continue;
      tree[v].feature = best_feat[v];
      tree[v].threshold = best_thr[v];
      tree[v].left = static_cast<int>(tree.size());
      tree.emplace_back();
      tree[v].right = static_cast<int>(tree.size());
      tree.emplace_back();
      next.push_back(tree[v].left);
      next.push_back(tree[v].right);
      remap[v] = v;
    }
    for (int i = 0; i < n; ++i) {
      const int v = node_of[i];
      if (v < static_cast<int>(size) && remap[v] >= 0)
        node_of[i] = rows[i][tree[v].feature] < tree[v].threshold ? tree[v].left : tree[v].right;
    }
    active = std::move(next);
  }

  std::vector<double> G(tree.size(), 0.0), H(tree.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    G[node_of[i]] += g[i];
    H[node_of[i]] += h[i];
  }
  for (std::size_t v = 0; v < tree.size(); ++v)
    if (tree[v].feature < 0) tree[v].value = -opt.shrinkage * G[v] / (H[v] + lambda);
  return tree;
}

void train_boosted(ClassifierModel& model, const std::vector<FeatureRow>& rows,
                   const std::vector<std::uint8_t>& labels, const TrainOptions& opt) {
  const int n = static_cast<int>(rows.size());
  const double w1 = model.omega1, w0 = model.omega0;
  double pos = 0.0, neg = 0.0;
  for (int i = 0; i < n; ++i) (labels[i] ? pos : neg) += labels[i] ? w1 : w0;
  model.bias = std::log(pos / neg);
  model.max_depth = opt.max_depth;

  std::vector<std::vector<int>> sorted(kFeatureCount);
  for (int f = 0; f < kFeatureCount; ++f) {
    if (!opt.features[f]) continue;
    sorted[f].resize(n);
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](int a, int b) { return rows[a][f] < rows[b][f]; });
  }
  std::vector<double> score(n, model.bias), g(n), h(n);
  std::vector<int> node_of(n);
  for (int stage = 0; stage < opt.stages; ++stage) {
    for (int i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      const double w = labels[i] ? w1 : w0;
      g[i] = labels[i] ? w1 * (p - 1.0) : w0 * p;
      h[i] = std::max(w * p * (1.0 - p), 1e-12);
    }
    Tree tree = grow_tree(rows, g, h, sorted, opt, node_of);
    for (int i = 0; i < n; ++i) score[i] += tree[node_of[i]].value;
    model.trees.push_back(std::move(tree));
    model.loss_history.push_back(mean_loss(score, labels, w1, w0));
  }
}

}  // namespace

ClassifierModel train(ModelFamily family, const std::vector<FeatureRow>& rows,
                      const std::vector<std::uint8_t>& labels, double omega1, double omega0,
                      const TrainOptions& options) {
  if (rows.size() != labels.size()) throw StructuralError("feature rows and labels differ in length");
  if (rows.empty()) throw StructuralError("training set is empty");
  if (!(omega1 > 0.0) || !(omega0 > 0.0)) throw StructuralError("class weights must be positive");
  if (options.max_depth < 1 || options.min_leaf < 1 || options.stages < 0 || options.epochs < 0)
    throw StructuralError("invalid training options");
  ClassifierModel model;
  model.family = family;
  model.omega1 = omega1;
  model.omega0 = omega0;
  model.features = options.features;
  model.max_depth = family == ModelFamily::kBoosted ? options.max_depth : 0;

  std::size_t positives = 0;
  for (auto l : labels) positives += l ? 1 : 0;
  if (positives == 0 || positives == labels.size()) {
    model.degenerate = true;
    model.bias = positives == 0 ? -10.0 : 10.0;
    return model;
  }
  if (family == ModelFamily::kLinear) train_linear(model, rows, labels, options);
  else train_boosted(model, rows, labels, options);
  return model;
}

Predictions predict(const ClassifierModel& model, const std::vector<FeatureRow>& rows) {
  Predictions out;
  out.probability.reserve(rows.size());
  out.decision.reserve(rows.size());
  for (const FeatureRow& r : rows) {
    const double p = model.probability(r);
    out.probability.push_back(p);
    out.decision.push_back(p >= model.threshold ? 1 : 0);
  }
  return out;
}

Predictions predict(const ClassifierModel& model, const std::vector<std::vector<double>>& rows) {
  std::vector<FeatureRow> fixed(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(kFeatureCount))
      throw StructuralError("feature row has " + std::to_string(rows[i].size()) + " entries, expected 30");
    std::copy(rows[i].begin(), rows[i].end(), fixed[i].begin());
  }
  return predict(model, fixed);
}

ClassifierMetrics metrics_from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                      std::int64_t fn) {
  ClassifierMetrics m;
  m.tp = tp, m.tn = tn, m.fp = fp, m.fn = fn;
  const double pos = static_cast<double>(tp + fn), neg = static_cast<double>(tn + fp);
  m.degenerate = pos == 0.0 || neg == 0.0;
  const double tpr = pos > 0.0 ? tp / pos : 1.0;
  const double tnr = neg > 0.0 ? tn / neg : 1.0;
  m.balanced_accuracy = 0.5 * (tpr + tnr);
  m.fpr = neg > 0.0 ? fp / neg : 0.0;
  m.fnr = pos > 0.0 ? fn / pos : 0.0;
  return m;
}

ClassifierMetrics classifier_metrics(const std::vector<std::uint8_t>& decisions,
                                     const std::vector<std::uint8_t>& labels) {
  if (decisions.size() != labels.size()) throw StructuralError("decisions and labels differ in length");
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) (decisions[i] ? tp : fn) += 1;
    else (decisions[i] ? fp : tn) += 1;
  }
  return metrics_from_counts(tp, tn, fp, fn);
}

std::string to_string(ModelFamily family) {
  return family == ModelFamily::kLinear ? "linear" : "boosted";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "linear") return ModelFamily::kLinear;
  if (name == "boosted") return ModelFamily::kBoosted;
  throw StructuralError("unknown model family '" + std::string(name) + "'");
}

std::string format_model(const ClassifierModel& model) {
  std::ostringstream out;
  out << "# fcnd classifier\n";
  out << "family " << to_string(model.family) << "\n";
  out << "omega1 " << format_exact(model.omega1) << "\n";
  out << "omega0 " << format_exact(model.omega0) << "\n";
  out << "threshold " << format_exact(model.threshold) << "\n";
  out << "degenerate " << (model.degenerate ? 1 : 0) << "\n";
  out << "features ";
  for (bool b : model.features) out << (b ? '1' : '0');
  out << "\n";
  out << "bias " << format_exact(model.bias) << "\n";
  if (model.family == ModelFamily::kLinear) {
    out << "weights";
    for (double w : model.weights) out << " " << format_exact(w);
    out << "\n";
    return out.str();
  }
  out << "max_depth " << model.max_depth << "\n";
  out << "trees " << model.trees.size() << "\n";
  for (const Tree& t : model.trees) {
    out << "tree " << t.size() << "\n";
    for (const TreeNode& v : t)
      out << v.feature << " " << format_exact(v.threshold) << " " << v.left << " " << v.right << " "
          << format_exact(v.value) << "\n";
  }
  return out.str();
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::string_view text) : text_(text) {}

  /// Next non-blank, non-comment line split into tokens.
  std::vector<std::string> next() {
    while (pos_ <= text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string line(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      ++line_;
      std::istringstream in(line);
      std::vector<std::string> tokens;
      for (std::string t; in >> t;) tokens.push_back(t);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return tokens;
    }
    throw ParseError("unexpected end of model file", line_);
  }

  std::vector<std::string> expect(const std::string& key, std::size_t values) {
    auto t = next();
    if (t[0] != key || t.size() != values + 1)
      throw ParseError("expected '" + key + "' with " + std::to_string(values) + " value(s)", line_);
    return t;
  }

  double number(const std::string& token) {
    const auto v = parse_double(token);
    if (!v || !std::isfinite(*v)) throw ParseError("bad number '" + token + "'", line_);
    return *v;
  }

  int integer(const std::string& token) {
    const double v = number(token);
    if (v != std::floor(v)) throw ParseError("bad integer '" + token + "'", line_);
    return static_cast<int>(v);
  }

  int line() const { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

}  // namespace

ClassifierModel parse_model(std::string_view text) {
  ModelReader r(text);
  ClassifierModel model;
  try {
    model.family = parse_family(r.expect("family", 1)[1]);
  } catch (const StructuralError& e) {
    throw ParseError(e.what(), r.line());
  }
  model.omega1 = r.number(r.expect("omega1", 1)[1]);
  model.omega0 = r.number(r.expect("omega0", 1)[1]);
  model.threshold = r.number(r.expect("threshold", 1)[1]);
  model.degenerate = r.integer(r.expect("degenerate", 1)[1]) != 0;
  const std::string mask = r.expect("features", 1)[1];
  if (mask.size() != static_cast<std::size_t>(kFeatureCount) ||
      mask.find_first_not_of("01") != std::string::npos)
    throw ParseError("feature mask must be 30 binary digits", r.line());
  for (int f = 0; f < kFeatureCount; ++f) model.features[f] = mask[f] == '1';
  model.bias = r.number(r.expect("bias", 1)[1]);
  if (model.family == ModelFamily::kLinear) {
    const auto w = r.expect("weights", kFeatureCount);
    for (int f = 0; f < kFeatureCount; ++f) model.weights[f] = r.number(w[f + 1]);
    return model;
  }
  model.max_depth = r.integer(r.expect("max_depth", 1)[1]);
  const int count = r.integer(r.expect("trees", 1)[1]);
  if (count < 0) throw ParseError("negative tree count", r.line());
  for (int t = 0; t < count; ++t) {
    const int size = r.integer(r.expect("tree", 1)[1]);
    if (size < 1) throw ParseError("empty tree", r.line());
    Tree tree(size);
    for (TreeNode& v : tree) {
      const auto tok = r.next();
      if (tok.size() != 5) throw ParseError("tree node needs 5 fields", r.line());
      v.feature = r.integer(tok[0]);
      v.threshold = r.number(tok[1]);
      v.left = r.integer(tok[2]);
      v.right = r.integer(tok[3]);
      v.value = r.number(tok[4]);
      if (v.feature >= kFeatureCount || v.feature < -1)
        throw ParseError("feature index out of range", r.line());
      if (v.feature >= 0 && (v.left <= 0 || v.left >= size || v.right <= 0 || v.right >= size))
        throw ParseError("child index out of range", r.line());
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

void write_model(const ClassifierModel& model, const fs::path& path) {
  write_text_file(path, format_model(model));
}

ClassifierModel read_model(const fs::path& path) { return parse_model(read_text_file(path)); }

}  // namespace fcnd
