// Acceptance run: one PASS/FAIL line per criterion.
//
//   fcnd_acceptance [--out DIR] [--reference DIR]
//
// Criteria 1-8 write their report files into DIR. Criterion 9 compares them
// byte for byte with DIR/rerun (a second full run) or with --reference.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fcnd/cli.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/generator.hpp"
#include "fcnd/io.hpp"
#include "fcnd/lp.hpp"
#include "fcnd/ml.hpp"
#include "fcnd/pipeline.hpp"
#include "fcnd/rng.hpp"

using namespace fcnd;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240901;

// criteria 1-2
constexpr int kTinyCount = 50;
constexpr double kOracleRelTol = 1e-6;
constexpr double kBoundTol = 1e-6;
constexpr double kTinyMinutes = 5.0;
// criterion 3
constexpr int kSlopeCount = 100;
constexpr double kSlopeMinutes = 5.0;
// criteria 4-7 (budgets in work-seconds)
constexpr int kTrainCount = 20;
constexpr int kTestCount = 10;
constexpr double kSampleBudget = 30.0;
constexpr double kSamplePerIter = 2.0;
constexpr int kSampleColumns = 3;
constexpr double kLabelBudget = 120.0;
constexpr double kMipTime = 5.0;
constexpr double kNoiseBudget = 60.0;
constexpr double kPipelineBudget = 120.0;
constexpr double kAblationMargin = 0.10;
constexpr double kHighNoise = 0.15;
constexpr double kLearningMinutes = 20.0;
constexpr double kNoiseMinutes = 30.0;
// criterion 8
constexpr double kMetricTol = 1e-9;

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Instances

/// Cycle through all nodes plus random chords; random commodities.
Instance tiny_instance(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int n = 4 + static_cast<int>(rng.below(5));  // 4..8
  const int m = std::min(n * (n - 1), 10 + static_cast<int>(rng.below(5)));  // <= 14
  const int k = 2 + static_cast<int>(rng.below(3));  // 2..4
  std::vector<Arc> arcs;
  std::set<std::pair<int, int>> used;
  auto add = [&](int t, int h) {
    Arc a;
    a.tail = t;
    a.head = h;
    a.variable_cost = std::round(rng.uniform(1.0, 10.0));
    a.capacity = std::round(rng.uniform(8.0, 25.0));
    a.fixed_cost = std::round(rng.uniform(20.0, 120.0));
    arcs.push_back(a);
    used.insert({t, h});
  };
  for (int i = 0; i < n; ++i) add(i, (i + 1) % n);
  while (static_cast<int>(arcs.size()) < m) {
    const int t = static_cast<int>(rng.below(n));
    const int h = static_cast<int>(rng.below(n));
    if (t != h && !used.count({t, h})) add(t, h);
  }
  std::vector<Commodity> coms;
  while (static_cast<int>(coms.size()) < k) {
    const int o = static_cast<int>(rng.below(n));
    const int d = static_cast<int>(rng.below(n));
    if (o != d) coms.push_back({o, d, std::round(rng.uniform(2.0, 10.0))});
  }
  return Instance("tiny" + std::to_string(seed), n, std::move(arcs), std::move(coms));
}

/// Every design is priced by the flow LP unless its fixed cost alone
/// already reaches the incumbent.
std::optional<double> enumerate_optimum(const Instance& inst) {
  const int m = inst.arc_count();
  std::optional<double> best;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    DesignVector y(m);
    double fixed = 0.0;
    for (int a = 0; a < m; ++a)
      if (mask >> a & 1u) {
        y.set(a, true);
        fixed += inst.arc(a).fixed_cost;
      }
    if (best && fixed >= *best) continue;
    if (const auto f = solve_flow_lp(inst, y); f && (!best || f->objective < *best)) best = f->objective;
  }
  return best;
}

double weak_bound(const Instance& inst) {
  ArcFlowModel::Config c;
  c.design_columns = true;
  ArcFlowModel model(inst, c);
  return lp::solve_lp(model.lp()).objective;
}

GenSpec desk_spec(std::uint64_t seed) {
  GenSpec g;
  g.rows = 6;
  g.cols = 6;
  g.commodity_count = 20;
  g.seed = seed;
  return g;
}

// ---------------------------------------------------------------------------

struct TinyCase {
  Instance inst;
  double optimum;
};

std::vector<TinyCase> tiny_cases() {
  std::vector<TinyCase> out;
  for (std::uint64_t s = 1; static_cast<int>(out.size()) < kTinyCount; ++s) {
    Instance inst = tiny_instance(derive_seed(kSeed, "tiny" + std::to_string(s)));
    if (!solve_flow_lp(inst, DesignVector(inst.arc_count(), true))) continue;
    const auto opt = enumerate_optimum(inst);
    out.push_back({std::move(inst), *opt});
  }
  return out;
}

Verdict criterion1(const std::vector<TinyCase>& cases, const fs::path& dir, double oracle_minutes) {
  const auto t0 = Clock::now();
  fs::create_directories(dir / "tiny");
  std::ostringstream rep;
  rep << "instance arcs bnb enumeration\n";
  int matched = 0;
  double worst = 0.0;
  for (const TinyCase& c : cases) {
    const fs::path file = dir / "tiny" / (c.inst.name() + ".inst");
    const fs::path sol = dir / "tiny" / (c.inst.name() + ".sol");
    write_instance(c.inst, file);
    std::ostringstream out, err;
    const int code = run_cli({"solve", "--strategy", "bnb", "--instance", file.string(), "--out", sol.string(),
                              "--budget", "1e9", "--seed", std::to_string(kSeed)},
                             out, err);
    double obj = NAN;
    if (code == kExitOk) obj = parse_solution(read_text_file(sol)).objective;
    const double rel = std::abs(obj - c.optimum) / std::max(1.0, std::abs(c.optimum));
    if (rel <= kOracleRelTol) ++matched;
    worst = std::max(worst, std::isnan(rel) ? INFINITY : rel);
    rep << c.inst.name() << " " << c.inst.arc_count() << " " << format_9(obj) << " " << format_9(c.optimum) << "\n";
  }
  write_text_file(dir / "c1_bnb_oracle.txt", rep.str());
  const double minutes = minutes_since(t0) + oracle_minutes;
  const bool pass = matched == static_cast<int>(cases.size()) && minutes <= kTinyMinutes;
  return {1, pass,
          "bnb matches enumeration on " + std::to_string(matched) + "/" + std::to_string(cases.size()) +
              " tiny instances, worst rel. error " + num(worst, 12) + ", " + num(minutes, 2) + " min"};
}

Verdict criterion2(const std::vector<TinyCase>& cases, const fs::path& dir, double oracle_minutes) {
  const auto t0 = Clock::now();
  std::ostringstream rep;
  rep << "instance weak path_flow optimum\n";
  int ok = 0;
  for (const TinyCase& c : cases) {
    CsLimits lim;
    lim.max_iter = 1;
    WorkClock clock;
    const CsResult cs = capacity_scaling(c.inst, 0.05, lim, clock);
    const double weak = weak_bound(c.inst);
    const bool good = cs.bound_valid && cs.first_bound <= c.optimum + kBoundTol * std::max(1.0, c.optimum) &&
                      cs.first_bound >= weak - kBoundTol;
    ok += good;
    rep << c.inst.name() << " " << format_9(weak) << " " << format_9(cs.first_bound) << " "
        << format_9(c.optimum) << (good ? "" : " VIOLATED") << "\n";
  }
  write_text_file(dir / "c2_relaxation_bounds.txt", rep.str());
  const double minutes = minutes_since(t0) + oracle_minutes;
  const bool pass = ok == static_cast<int>(cases.size()) && minutes <= kTinyMinutes;
  return {2, pass,
          "weak LP <= path-flow bound <= optimum on " + std::to_string(ok) + "/" + std::to_string(cases.size()) +
              ", " + num(minutes, 2) + " min"};
}

Verdict criterion3(const fs::path& dir) {
  const auto t0 = Clock::now();
  std::ostringstream rep;
  rep << "instance flows feasible_roundings\n";
  int flows = 0, feasible = 0;
  for (int i = 0; i < kSlopeCount; ++i) {
    GenSpec g = desk_spec(derive_seed(kSeed, "slope" + std::to_string(i)));
    if (i % 2) {
      g.topology = Topology::kCircular;
      g.ring_size = 12;
      g.chords = 8;
    }
    if (i % 3 == 0) g.capacity_ratio = kLooseCapacity;
    const Instance inst = generate(g);
    std::vector<Eigen::VectorXd> totals;
    {
      ArcFlowModel::Config c;
      c.design_columns = true;
      ArcFlowModel model(inst, c);
      const auto r = lp::solve_lp(model.lp());
      totals.push_back(model.extract(r.x).arc_totals(inst.arc_count()));
    }
    {
      WorkClock clock;
      CsLimits lim;
      lim.max_iter = 2;
      const CsResult cs = capacity_scaling(inst, 0.05, lim, clock);
      totals.push_back(cs.relaxation.arc_totals(inst.arc_count()));
    }
    {
      WorkClock clock;
      SlopeState st = SlopeState::initial(inst);
      SlopeScaler ss(inst);
      for (int it = 0; it < 3; ++it) {
        const SlopeStep step = ss.iterate(st, clock);
        if (step.feasible) totals.push_back(step.flows.arc_totals(inst.arc_count()));
      }
    }
    int here = 0;
    for (const Eigen::VectorXd& t : totals) here += solve_flow_lp(inst, round_up_design(inst, t)).has_value();
    flows += static_cast<int>(totals.size());
    feasible += here;
    rep << inst.name() << " " << totals.size() << " " << here << "\n";
  }
  write_text_file(dir / "c3_slope_rounding.txt", rep.str());
  const double minutes = minutes_since(t0);
  const bool pass = flows == feasible && flows >= kSlopeCount && minutes <= kSlopeMinutes;
  return {3, pass,
          std::to_string(feasible) + "/" + std::to_string(flows) + " rounded relaxation flows feasible on " +
              std::to_string(kSlopeCount) + " instances, " + num(minutes, 2) + " min"};
}

// ---------------------------------------------------------------------------
// Learning data

struct Prepared {
  BenchInput input;
  Sampling sampling;
  std::vector<FeatureRow> rows;
  std::vector<std::uint8_t> labels;
};

Prepared prepare(const GenSpec& spec) {
  Prepared p{BenchInput{generate(spec), std::nullopt, std::nullopt, std::nullopt}, {}, {}, {}};
  const Instance& inst = p.input.instance;
  SamplingConfig sc;
  sc.budget = kSampleBudget;
  sc.per_iter = kSamplePerIter;
  sc.lsfs_columns = kSampleColumns;
  sc.seed = derive_seed(kSeed, inst.name());  // the stream sls derives in run_scenario
  p.sampling = run_samplers(inst, sc);

  SolutionArchive ar;
  ar.instance_name = inst.name();
  for (const Solution& s : p.sampling.samples.feasible) ar.insert({s.design, s.objective, s.provenance, s.wall_time});
  LsConfig ext;
  ext.budget = kLabelBudget;
  ext.mip_time = kMipTime;
  ext.seed = derive_seed(kSeed, "extended:" + inst.name());
  WorkClock clock;
  const SearchResult r = ls_star(inst, ext, clock, p.sampling.samples.best());
  for (const Solution& s : r.samples.feasible) ar.insert({s.design, s.objective, "extended", s.wall_time});
  if (r.best) ar.insert({r.best->design, r.best->objective, "extended", r.best->wall_time});
  if (ar.entries.empty()) throw std::runtime_error("no solution at all for " + inst.name());

  p.rows = featurize(inst, p.sampling.samples);
  p.labels = build_labels(ar, inst);
  p.input.archive = std::move(ar);
  p.input.samples = p.sampling.samples;
  p.input.sls_sampling = p.sampling;
  return p;
}

struct Pooled {
  std::vector<FeatureRow> rows;
  std::vector<std::uint8_t> labels;
};

Pooled pool(const std::vector<Prepared>& set) {
  Pooled out;
  for (const Prepared& p : set) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

ClassifierMetrics evaluate(const ClassifierModel& m, const Pooled& test) {
  return classifier_metrics(predict(m, test.rows).decision, test.labels);
}

std::string metrics_line(const std::string& tag, const ClassifierMetrics& m) {
  return tag + " balanced_accuracy " + format_9(m.balanced_accuracy) + " fpr " + format_9(m.fpr) + " fnr " +
         format_9(m.fnr) + " tp " + std::to_string(m.tp) + " tn " + std::to_string(m.tn) + " fp " +
         std::to_string(m.fp) + " fn " + std::to_string(m.fn) + "\n";
}

struct LearningOutcome {
  Verdict ablation, bias;
  ClassifierModel negative;  // ω1 = 0.25, ω0 = 0.75, boosted
};

LearningOutcome criteria45(const std::vector<Prepared>& train_set, const std::vector<Prepared>& test_set,
                           const fs::path& dir, double prep_minutes) {
  const auto t0 = Clock::now();
  const Pooled tr = pool(train_set), te = pool(test_set);
  std::ostringstream rep;
  std::size_t positives = 0;
  for (auto l : tr.labels) positives += l;
  rep << "train_rows " << tr.rows.size() << " remove_share " << format_9(double(positives) / tr.rows.size())
      << " test_rows " << te.rows.size() << "\n";

  bool ablation_ok = true;
  std::string ablation_detail;
  for (ModelFamily fam : {ModelFamily::kLinear, ModelFamily::kBoosted}) {
    TrainOptions all, graph;
    graph.features = graph_features();
    const auto m_all = evaluate(train(fam, tr.rows, tr.labels, 0.5, 0.5, all), te);
    const auto m_graph = evaluate(train(fam, tr.rows, tr.labels, 0.5, 0.5, graph), te);
    rep << metrics_line(to_string(fam) + "_all", m_all) << metrics_line(to_string(fam) + "_graph", m_graph);
    const double margin = m_all.balanced_accuracy - m_graph.balanced_accuracy;
    ablation_ok = ablation_ok && margin >= kAblationMargin;
    ablation_detail += to_string(fam) + " " + num(m_all.balanced_accuracy, 3) + " vs " +
                       num(m_graph.balanced_accuracy, 3) + " (+" + num(margin, 3) + "); ";
  }

  LearningOutcome out;
  const ClassifierModel positive = train(ModelFamily::kBoosted, tr.rows, tr.labels, 0.75, 0.25);
  out.negative = train(ModelFamily::kBoosted, tr.rows, tr.labels, 0.25, 0.75);
  const auto mp = evaluate(positive, te), mn = evaluate(out.negative, te);
  rep << metrics_line("boosted_w1", mp) << metrics_line("boosted_w-1", mn);
  for (ModelFamily fam : {ModelFamily::kLinear}) {
    rep << metrics_line(to_string(fam) + "_w1", evaluate(train(fam, tr.rows, tr.labels, 0.75, 0.25), te));
    rep << metrics_line(to_string(fam) + "_w-1", evaluate(train(fam, tr.rows, tr.labels, 0.25, 0.75), te));
  }
  write_text_file(dir / "c4_c5_classifiers.txt", rep.str());
  write_model(out.negative, dir / "model_w-1.txt");

  const double minutes = prep_minutes + minutes_since(t0);
  out.ablation = {4, ablation_ok && minutes <= kLearningMinutes,
                  ablation_detail + "margin >= " + num(kAblationMargin, 2) + ", " + num(minutes, 2) + " min"};
  const bool bias_ok = mp.fnr < mn.fnr && mp.fpr > mn.fpr;
  out.bias = {5, bias_ok,
              "boosted FNR w1 " + num(mp.fnr, 3) + " < w-1 " + num(mn.fnr, 3) + ", FPR w1 " + num(mp.fpr, 3) +
                  " > w-1 " + num(mn.fpr, 3)};
  return out;
}

std::pair<Verdict, Verdict> criteria67(const std::vector<Prepared>& test_set, const ClassifierModel& model,
                                       const fs::path& dir) {
  const auto t0 = Clock::now();
  std::vector<BenchInput> inputs;
  std::map<std::string, double> archive_best;
  std::map<std::string, double> sample_best;
  for (const Prepared& p : test_set) {
    inputs.push_back(p.input);
    archive_best[p.input.instance.name()] = p.input.archive->best()->objective;
    sample_best[p.input.instance.name()] = p.sampling.samples.best()->objective;
  }
  BenchConfig cfg;
  cfg.seed = kSeed;
  cfg.search.mip_time = kMipTime;
  cfg.sls.sampling.budget = kSampleBudget;
  cfg.sls.sampling.per_iter = kSamplePerIter;
  cfg.sls.sampling.lsfs_columns = kSampleColumns;

  cfg.budget = kNoiseBudget;
  auto records = run_benchmark(
      inputs, {Scenario::parse("lsr-db-0"), Scenario::parse("lsr-db-" + num(kHighNoise, 2))}, nullptr, cfg);
  const double noise_minutes = minutes_since(t0);

  const auto t1 = Clock::now();
  cfg.budget = kPipelineBudget;
  const auto pipeline = run_benchmark(inputs, {Scenario::parse("ls"), Scenario::parse("sls")}, &model, cfg);
  records.insert(records.end(), pipeline.begin(), pipeline.end());
  const double pipeline_minutes = minutes_since(t1);

  std::ostringstream rec_text;
  for (const ExperimentRecord& r : records) rec_text << format_record(r) << "\n";
  write_text_file(dir / "c6_c7_records.txt", rec_text.str());
  const BenchmarkReport rep = summarize(records, archive_best);
  write_text_file(dir / "c6_c7_report.txt", render_report(rep, ReportFormat::kText));
  write_text_file(dir / "c6_c7_report.csv", render_report(rep, ReportFormat::kCsv));

  auto row = [](const std::vector<ScenarioSummary>& rows, const std::string& tag) {
    for (const ScenarioSummary& s : rows)
      if (s.scenario == tag) return s;
    throw std::runtime_error("missing scenario " + tag);
  };
  const double g0 = row(rep.gap, "lsr-db-0").geomean;
  const double g15 = row(rep.gap, "lsr-db-" + num(kHighNoise, 2)).geomean;
  Verdict c6{6, g0 < g15 && noise_minutes <= kNoiseMinutes,
             "LSR geomean gap (shifted) noise 0: " + num(g0 + 1, 3) + " < noise " + num(kHighNoise, 2) + ": " +
                 num(g15 + 1, 3) + ", " + num(noise_minutes, 2) + " min"};

  const double pi_sls = row(rep.integral, "sls").geomean;
  const double pi_ls = row(rep.integral, "ls").geomean;
  std::string detail = "geomean primal integral (shifted) SLS " + num(pi_sls + 1, 3) + " vs LS* " +
                       num(pi_ls + 1, 3);
  bool pass = pi_sls <= pi_ls;
  if (!pass) {
    bool never_worse = true;
    for (const auto& [inst, gap] : rep.gaps.at("sls"))
      never_worse = never_worse && gap <= primal_gap(sample_best.at(inst), rep.best_known.at(inst)) + 1e-9;
    pass = never_worse;
    detail += never_worse ? "; ordering fails, soft rule holds (SLS gap <= best-sample gap everywhere)"
                          : "; ordering fails and SLS worse than its best sample";
  }
  detail += ", " + num(pipeline_minutes, 2) + " min";
  return {c6, Verdict{7, pass, detail}};
}

// ---------------------------------------------------------------------------

Verdict criterion8(const fs::path& dir) {
  std::ostringstream rep;
  int failed = 0, total = 0;
  auto check = [&](const std::string& what, double got, double want) {
    ++total;
    const bool ok = std::abs(got - want) <= kMetricTol;
    failed += !ok;
    rep << what << " " << format_exact(got) << " expected " << format_exact(want) << (ok ? "" : " FAIL") << "\n";
  };
  check("primal_gap(110,100)", primal_gap(110.0, 100.0), 10.0);
  check("primal_gap(100,100)", primal_gap(100.0, 100.0), 0.0);
  check("primal_gap(2150,2000)", primal_gap(2150.0, 2000.0), 7.5);
  check("primal_gap(2437.5,2000)", primal_gap(2437.5, 2000.0), 21.875);
  {
    Trajectory t;
    t.record(0.0, 150.0);
    t.record(10.0, 110.0);
    t.horizon = 100.0;
    check("primal_integral(50%/10s,10%/90s)", primal_integral(t, 100.0), 14.0);
    Trajectory at_best;
    at_best.record(0.0, 100.0);
    at_best.horizon = 100.0;
    check("primal_integral(best at t=0)", primal_integral(at_best, 100.0), 0.0);
    Trajectory empty;
    empty.horizon = 100.0;
    check("primal_integral(empty)", primal_integral(empty, 100.0), 100.0);
  }
  check("shifted_geomean{0,3}", shifted_geomean(std::vector<double>{0.0, 3.0}), 1.0);
  check("shifted_geomean{0,0,0}", shifted_geomean(std::vector<double>{0.0, 0.0, 0.0}), 0.0);
  check("shifted_geomean{0.08}", shifted_geomean(std::vector<double>{0.08}), 0.08);
  {
    const auto perfect = classifier_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
    check("perfect balanced_accuracy", perfect.balanced_accuracy, 1.0);
    check("perfect fpr", perfect.fpr, 0.0);
    check("perfect fnr", perfect.fnr, 0.0);
    const auto all_pos = classifier_metrics({1, 1, 1, 1}, {1, 1, 0, 0});
    check("all-positive balanced_accuracy", all_pos.balanced_accuracy, 0.5);
    check("all-positive fpr", all_pos.fpr, 1.0);
    check("all-positive fnr", all_pos.fnr, 0.0);
    const auto mixed = classifier_metrics({1, 0, 0, 0, 1}, {1, 1, 0, 0, 0});
    check("mixed balanced_accuracy", mixed.balanced_accuracy, (0.5 + 2.0 / 3.0) / 2.0);
    check("mixed fpr", mixed.fpr, 1.0 / 3.0);
    check("mixed fnr", mixed.fnr, 0.5);
  }
  write_text_file(dir / "c8_metrics.txt", rep.str());
  return {8, failed == 0, std::to_string(total - failed) + "/" + std::to_string(total) + " hand cases within 1e-9"};
}

/// Criteria 1-8; `print` streams each verdict as it is reached.
std::vector<Verdict> run_suite(const fs::path& dir, bool print) {
  fs::create_directories(dir);
  std::vector<Verdict> out;
  auto emit = [&](Verdict v) {
    if (print) std::cout << "criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    out.push_back(std::move(v));
  };
  const auto t0 = Clock::now();
  const auto cases = tiny_cases();
  const double oracle_minutes = minutes_since(t0);
  emit(criterion1(cases, dir, oracle_minutes));
  emit(criterion2(cases, dir, oracle_minutes));
  emit(criterion3(dir));

  const auto t1 = Clock::now();
  std::vector<Prepared> train_set, test_set;
  for (int i = 0; i < kTrainCount; ++i) train_set.push_back(prepare(desk_spec(derive_seed(kSeed, "train" + std::to_string(i)))));
  for (int i = 0; i < kTestCount; ++i) test_set.push_back(prepare(desk_spec(derive_seed(kSeed, "test" + std::to_string(i)))));
  {
    std::ostringstream rep;
    rep << "instance rss_feasible lsfs_feasible fractional best_sample archive_best\n";
    for (const auto* set : {&train_set, &test_set})
      for (const Prepared& p : *set)
        rep << p.input.instance.name() << " " << p.sampling.rss_feasible << " " << p.sampling.lsfs_feasible << " "
            << p.sampling.samples.fractional.size() << " "
            << format_9(p.sampling.samples.best() ? p.sampling.samples.best()->objective : NAN) << " "
            << format_9(p.input.archive->best()->objective) << "\n";
    write_text_file(dir / "c4_sampling.txt", rep.str());
  }
  LearningOutcome learning = criteria45(train_set, test_set, dir, minutes_since(t1));
  emit(learning.ablation);
  emit(learning.bias);
  auto [c6, c7] = criteria67(test_set, learning.negative, dir);
  emit(c6);
  emit(c7);
  emit(criterion8(dir));
  return out;
}

Verdict compare_reports(const fs::path& a, const fs::path& b) {
  // top-level files only; subdirectories hold inputs and the rerun
  std::set<std::string> names;
  for (const fs::path& d : {a, b})
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_regular_file()) names.insert(e.path().filename().string());
  int same = 0;
  std::string differing;
  for (const std::string& n : names) {
    const bool equal = fs::exists(a / n) && fs::exists(b / n) && read_text_file(a / n) == read_text_file(b / n);
    if (equal) ++same;
    else differing += " " + n;
  }
  const bool pass = !names.empty() && same == static_cast<int>(names.size());
  return {9, pass,
          std::to_string(same) + "/" + std::to_string(names.size()) + " report files byte-identical" +
              (differing.empty() ? "" : "; differ:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9", "fcnd_acceptance"};
  std::string out = "acceptance_out", reference;
  app.add_option("--out", out, "Report directory");
  app.add_option("--reference", reference, "Report directory of an earlier run to compare against");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path dir(out);
    fs::remove_all(dir);
    std::vector<Verdict> verdicts = run_suite(dir, true);
    fs::path other;
    if (reference.empty()) {
      other = dir / "rerun";
      run_suite(other, false);
    } else {
      other = reference;
    }
    Verdict v9 = compare_reports(dir, other);
    std::cout << "criterion 9: " << (v9.pass ? "PASS" : "FAIL") << "  " << v9.detail << std::endl;
    verdicts.push_back(v9);
    int failed = 0;
    for (const Verdict& v : verdicts) failed += !v.pass;
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
}
