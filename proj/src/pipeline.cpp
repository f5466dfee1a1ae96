#include "fcnd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/mip.hpp"
#include "fcnd/rng.hpp"

namespace fcnd {

double primal_gap(double objective, double best_known) {
  if (!(best_known > 0.0)) throw StructuralError("best known objective must be positive");
  const double diff = objective - best_known;
  if (diff <= 1e-9 * best_known) return 0.0;
  return 100.0 * diff / best_known;
}

double primal_integral(const Trajectory& trajectory, double best_known) {
  const double horizon = trajectory.horizon;
  if (!(horizon > 0.0)) throw StructuralError("primal integral needs a positive horizon");
  double area = 0.0;
  double t = 0.0;
  double gap = 100.0;
  for (const TrajectoryPoint& p : trajectory.points) {
    const double at = std::clamp(p.time, 0.0, horizon);
    area += gap * (at - t);
    t = at;
    gap = std::min(100.0, primal_gap(p.objective, best_known));
  }
  area += gap * (horizon - t);
  return area / horizon;
}

double shifted_geomean(std::span<const double> values, double shift) {
  if (values.empty()) throw StructuralError("geometric mean of no values");
  double logs = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw StructuralError("geometric mean needs nonnegative values");
    logs += std::log(v + shift);
  }
  return std::exp(logs / static_cast<double>(values.size())) - shift;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw StructuralError("quantile of no values");
  if (!(q >= 0.0 && q <= 1.0)) throw StructuralError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<std::uint8_t> noisy_labels(std::span<const std::uint8_t> labels, double p,
                                       std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw StructuralError("noise probability outside [0,1]");
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> out(labels.begin(), labels.end());
  for (auto& bit : out)
    if (rng.uniform() < p) bit = bit ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------

Sampling run_samplers(const Instance& instance, const SamplingConfig& cfg) {
  if (!cfg.rss && !cfg.lsfs) throw StructuralError("no sampling routine enabled");
  SampleRun rss, lsfs;
  WorkClock rss_clock, lsfs_clock;
  std::exception_ptr error;
  std::mutex error_mutex;
  auto guarded = [&](auto&& body) {
    try {
      body();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  if (cfg.rss)
    threads.emplace_back([&] {
      guarded([&] {
        RssOptions opt;
        opt.budget = cfg.budget;
        opt.per_iter = cfg.per_iter;
        opt.seed = derive_seed(cfg.seed, "rss");
        rss = rss_sample(instance, opt, rss_clock);
      });
    });
  if (cfg.lsfs)
    threads.emplace_back([&] {
      guarded([&] {
        lsfs = lsfs_sample(instance, cfg.budget, cfg.per_iter, cfg.lsfs_columns,
                           derive_seed(cfg.seed, "lsfs"), lsfs_clock);
      });
    });
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);

  Sampling out;
  out.samples.append(rss.samples);
  out.samples.append(lsfs.samples);
  out.duration = std::max(rss_clock.seconds(), lsfs_clock.seconds());
  out.rss_feasible = static_cast<int>(rss.samples.feasible.size());
  out.lsfs_feasible = static_cast<int>(lsfs.samples.feasible.size());
  return out;
}

Solution with_flows(const Instance& instance, const Solution& solution) {
  if (!solution.flows.flows.empty()) return solution;
  WorkClock scratch;
  auto s = evaluate_design(instance, solution.design, scratch, solution.provenance);
  if (!s) throw IntegrityError("stored design is infeasible for instance " + instance.name());
  s->wall_time = solution.wall_time;
  return *s;
}

namespace {

DesignVector keep_design(const std::vector<std::uint8_t>& remove) {
  DesignVector y(remove.size());
  for (std::size_t a = 0; a < remove.size(); ++a) y.set(a, remove[a] == 0);
  return y;
}

SearchResult integrate(const Instance& instance, Integration how,
                       const std::vector<std::uint8_t>& remove, const Solution& best_sample,
                       double respect_fraction, const LsConfig& cfg, WorkClock& clock) {
  switch (how) {
    case Integration::kLsr:
      return lsr(instance, remove, best_sample, cfg, clock);
    case Integration::kLbh:
      return lbh(instance, keep_design(remove), best_sample, respect_fraction, cfg, clock);
    case Integration::kLswsh:
      return lswsh(instance, keep_design(remove), best_sample, respect_fraction, cfg, clock);
  }
  throw StructuralError("unknown integration strategy");
}

Trajectory sample_trajectory(const SampleSet& samples) {
  std::vector<const Solution*> order;
  for (const Solution& s : samples.feasible) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Solution* a, const Solution* b) {
    return a->wall_time < b->wall_time || (a->wall_time == b->wall_time && a->objective < b->objective);
  });
  Trajectory t;
  for (const Solution* s : order) t.record(s->wall_time, s->objective);
  return t;
}

}  // namespace

SlsResult sls(const Instance& instance, const ClassifierModel& model, const SlsConfig& cfg,
              WorkClock& clock, const Sampling* presampled) {
  cfg.search.validate();
  const double start = clock.seconds();
  SlsResult out;
  if (presampled) out.sampling = *presampled;
  else out.sampling = run_samplers(instance, cfg.sampling);
  clock.advance_to(start + out.sampling.duration);
  for (Solution& s : out.sampling.samples.feasible) s.wall_time += start;
  out.trajectory = sample_trajectory(out.sampling.samples);

  LsConfig search = cfg.search;
  search.budget = std::max(0.0, start + cfg.search.budget - clock.seconds());
  const Solution* best = out.sampling.samples.best();
  SearchResult r;
  if (!best) {
    out.fallback = true;
    r = ls_star(instance, search, clock);
  } else {
    out.prediction = predict(model, featurize(instance, out.sampling.samples));
    r = integrate(instance, cfg.integration, out.prediction.decision, *best, cfg.respect_fraction,
                  search, clock);
  }
  out.trajectory = Trajectory::merge(out.trajectory, r.trajectory);
  out.best = r.best;
  if (!out.best && best) out.best = *best;
  return out;
}

// ---------------------------------------------------------------------------

Scenario Scenario::parse(std::string_view tag) {
  Scenario s;
  s.tag = std::string(tag);
  if (tag == "ls") return s;
  if (tag == "bnb") {
    s.kind = Kind::kBnb;
    return s;
  }
  if (tag == "sls") {
    s.kind = Kind::kSls;
    s.source = Source::kModel;
    return s;
  }
  const std::size_t dash = tag.find('-');
  if (dash == std::string_view::npos) throw StructuralError("unknown scenario '" + s.tag + "'");
  const std::string_view head = tag.substr(0, dash);
  const std::string_view rest = tag.substr(dash + 1);
  if (head == "lsr") s.kind = Kind::kLsr;
  else if (head == "lbh") s.kind = Kind::kLbh;
  else if (head == "lswsh") s.kind = Kind::kLswsh;
  else throw StructuralError("unknown scenario '" + s.tag + "'");
  if (rest == "model") {
    s.source = Source::kModel;
    return s;
  }
  if (rest.substr(0, 3) == "db-") {
    const auto p = parse_double(rest.substr(3));
    if (!p || !(*p >= 0.0 && *p <= 1.0)) throw StructuralError("bad noise level in '" + s.tag + "'");
    s.source = Source::kLabels;
    s.noise = *p;
    return s;
  }
  throw StructuralError("unknown scenario '" + s.tag + "'");
}

bool operator==(const ExperimentRecord& a, const ExperimentRecord& b) {
  auto same_metrics = [](const std::optional<ClassifierMetrics>& x,
                         const std::optional<ClassifierMetrics>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return x->tp == y->tp && x->tn == y->tn && x->fp == y->fp && x->fn == y->fn;
  };
  return a.instance == b.instance && a.scenario == b.scenario && a.seed == b.seed &&
         a.best_objective == b.best_objective && a.trajectory.points == b.trajectory.points &&
         a.trajectory.horizon == b.trajectory.horizon && same_metrics(a.metrics, b.metrics);
}

std::string format_record(const ExperimentRecord& r) {
  std::ostringstream out;
  out << "record\n";
  out << "instance " << r.instance << "\n";
  out << "scenario " << r.scenario << "\n";
  out << "seed " << r.seed << "\n";
  out << "best " << (r.best_objective ? format_exact(*r.best_objective) : std::string("none")) << "\n";
  if (r.metrics)
    out << "confusion " << r.metrics->tp << " " << r.metrics->tn << " " << r.metrics->fp << " "
        << r.metrics->fn << "\n";
  out << format_trajectory(r.trajectory);
  return out.str();
}

ExperimentRecord parse_record(std::string_view text) {
  ExperimentRecord r;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  auto next = [&](const char* what) -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++number;
      std::istringstream words(line);
      std::vector<std::string> tokens;
      for (std::string w; words >> w;) tokens.push_back(w);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return tokens;
    }
    throw ParseError(std::string("missing ") + what, number);
  };
  auto expect = [&](const char* key, std::size_t values) {
    auto t = next(key);
    if (t[0] != key || t.size() != values + 1)
      throw ParseError(std::string("expected '") + key + "'", number);
    return t;
  };
  if (next("header") != std::vector<std::string>{"record"}) throw ParseError("expected 'record'", number);
  r.instance = expect("instance", 1)[1];
  r.scenario = expect("scenario", 1)[1];
  {
    const auto t = expect("seed", 1);
    try {
      std::size_t used = 0;
      r.seed = std::stoull(t[1], &used);
      if (used != t[1].size()) throw std::invalid_argument("seed");
    } catch (const std::exception&) {
      throw ParseError("bad seed", number);
    }
  }
  {
    const auto t = expect("best", 1);
    if (t[1] != "none") {
      const auto v = parse_double(t[1]);
      if (!v) throw ParseError("bad objective", number);
      r.best_objective = *v;
    }
  }
  auto t = next("trajectory");
  if (t[0] == "confusion") {
    if (t.size() != 5) throw ParseError("confusion needs four counts", number);
    std::int64_t c[4];
    for (int i = 0; i < 4; ++i) {
      const auto v = parse_double(t[i + 1]);
      if (!v || *v < 0 || *v != std::floor(*v)) throw ParseError("bad count", number);
      c[i] = static_cast<std::int64_t>(*v);
    }
    r.metrics = metrics_from_counts(c[0], c[1], c[2], c[3]);
    t = next("trajectory");
  }
  if (t[0] != "horizon") throw ParseError("expected 'horizon'", number);
  std::string rest = line + "\n";
  for (std::string l; std::getline(in, l);) rest += l + "\n";
  try {
    r.trajectory = parse_trajectory(rest);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), number + e.line() - 1);
  }
  return r;
}

void write_record(const ExperimentRecord& record, const fs::path& path) {
  write_text_file(path, format_record(record));
}

ExperimentRecord read_record(const fs::path& path) { return parse_record(read_text_file(path)); }

fs::path record_path(const fs::path& dir, const std::string& instance, const std::string& scenario) {
  return dir / (instance + "__" + scenario + ".rec");
}

ExperimentRecord run_scenario(const BenchInput& input, const Scenario& scenario,
                              const ClassifierModel* model, const BenchConfig& cfg) {
  const Instance& inst = input.instance;
  ExperimentRecord rec;
  rec.instance = inst.name();
  rec.scenario = scenario.tag;
  rec.seed = cfg.seed;
  const std::uint64_t stream = derive_seed(cfg.seed, inst.name());
  LsConfig search = cfg.search;
  search.budget = cfg.budget;
  search.seed = stream;

  const bool needs_model = scenario.source == Scenario::Source::kModel;
  if (needs_model && !model) throw IntegrityError("scenario " + scenario.tag + " needs a model");
  if (scenario.source == Scenario::Source::kLabels && !input.archive)
    throw IntegrityError("scenario " + scenario.tag + " needs an archive for " + inst.name());
  const bool needs_samples = scenario.kind == Scenario::Kind::kLsr ||
                             scenario.kind == Scenario::Kind::kLbh ||
                             scenario.kind == Scenario::Kind::kLswsh;
  if (needs_samples && !input.samples)
    throw IntegrityError("scenario " + scenario.tag + " needs samples for " + inst.name());

  std::optional<std::vector<std::uint8_t>> truth;
  if (input.archive) truth = build_labels(*input.archive, inst);

  WorkClock clock;
  std::optional<Solution> best;
  switch (scenario.kind) {
    case Scenario::Kind::kLs: {
      SearchResult r = ls_star(inst, search, clock);
      best = std::move(r.best);
      rec.trajectory = std::move(r.trajectory);
      break;
    }
    case Scenario::Kind::kBnb: {
      MipProblem p(inst);
      p.limits.time = cfg.budget;
      p.seed = stream;
      MipResult r = solve_mip(p, clock);
      best = std::move(r.best);
      rec.trajectory = std::move(r.trajectory);
      break;
    }
    case Scenario::Kind::kSls: {
      SlsConfig sc = cfg.sls;
      sc.search = search;
      sc.sampling.seed = stream;
      SlsResult r = sls(inst, *model, sc, clock, input.sls_sampling ? &*input.sls_sampling : nullptr);
      best = std::move(r.best);
      rec.trajectory = std::move(r.trajectory);
      if (truth && !r.prediction.decision.empty())
        rec.metrics = classifier_metrics(r.prediction.decision, *truth);
      break;
    }
    case Scenario::Kind::kLsr:
    case Scenario::Kind::kLbh:
    case Scenario::Kind::kLswsh: {
      const Solution* sample = input.samples->best();
      if (!sample) throw IntegrityError("no feasible sample for " + inst.name());
      const Solution start = with_flows(inst, *sample);
      std::vector<std::uint8_t> remove;
      if (needs_model) {
        remove = predict(*model, featurize(inst, *input.samples)).decision;
      } else {
        remove = noisy_labels(*truth, scenario.noise, derive_seed(stream, scenario.tag));
      }
      if (truth) rec.metrics = classifier_metrics(remove, *truth);
      const Integration how = scenario.kind == Scenario::Kind::kLsr   ? Integration::kLsr
                              : scenario.kind == Scenario::Kind::kLbh ? Integration::kLbh
                                                                      : Integration::kLswsh;
      SearchResult r = integrate(inst, how, remove, start, cfg.sls.respect_fraction, search, clock);
      best = std::move(r.best);
      rec.trajectory = std::move(r.trajectory);
      break;
    }
  }
  if (best) rec.best_objective = best->objective;
  rec.trajectory.horizon = cfg.budget;
  return rec;
}

std::vector<ExperimentRecord> run_benchmark(const std::vector<BenchInput>& inputs,
                                            const std::vector<Scenario>& scenarios,
                                            const ClassifierModel* model, const BenchConfig& cfg) {
  const std::size_t total = inputs.size() * scenarios.size();
  std::vector<ExperimentRecord> out(total);
  if (!cfg.record_dir.empty()) fs::create_directories(cfg.record_dir);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < total;) {
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        const BenchInput& in = inputs[job / scenarios.size()];
        const Scenario& sc = scenarios[job % scenarios.size()];
        fs::path file;
        if (!cfg.record_dir.empty()) {
          file = record_path(cfg.record_dir, in.instance.name(), sc.tag);
          if (fs::exists(file)) {
            try {
              ExperimentRecord old = read_record(file);
              if (old.instance == in.instance.name() && old.scenario == sc.tag && old.seed == cfg.seed &&
                  old.trajectory.horizon == cfg.budget) {
                out[job] = std::move(old);
                continue;
              }
            } catch (const ParseError&) {
              // rerun
            }
          }
        }
        out[job] = run_scenario(in, sc, model, cfg);
        if (!file.empty()) write_record(out[job], file);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(std::max<std::size_t>(total, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ScenarioSummary summarize_values(const std::string& scenario, const std::vector<double>& v) {
  ScenarioSummary s;
  s.scenario = scenario;
  s.q10 = quantile(v, 0.1);
  s.q50 = quantile(v, 0.5);
  s.q90 = quantile(v, 0.9);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.geomean = shifted_geomean(v);
  return s;
}

void award_wins(std::vector<ScenarioSummary>& rows,
                const std::map<std::string, std::map<std::string, double>>& values,
                const std::vector<std::string>& instances) {
  for (const std::string& inst : instances) {
    double best = INFINITY;
    for (const ScenarioSummary& r : rows) {
      const auto& m = values.at(r.scenario);
      if (auto it = m.find(inst); it != m.end()) best = std::min(best, it->second);
    }
    ScenarioSummary* winner = nullptr;
    int at_best = 0;
    for (ScenarioSummary& r : rows) {
      const auto& m = values.at(r.scenario);
      auto it = m.find(inst);
      if (it != m.end() && it->second <= best + 1e-9) {
        ++at_best;
        winner = &r;
      }
    }
    if (at_best == 1) ++winner->wins;
  }
}

}  // namespace

BenchmarkReport summarize(const std::vector<ExperimentRecord>& records,
                          const std::map<std::string, double>& archive_best) {
  BenchmarkReport rep;
  std::vector<std::string> scenarios, instances;
  for (const ExperimentRecord& r : records) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end())
      scenarios.push_back(r.scenario);
    if (std::find(instances.begin(), instances.end(), r.instance) == instances.end())
      instances.push_back(r.instance);
  }
  for (const auto& [name, v] : archive_best) rep.best_known[name] = v;
  for (const ExperimentRecord& r : records) {
    if (!r.best_objective) continue;
    auto it = rep.best_known.find(r.instance);
    if (it == rep.best_known.end()) rep.best_known[r.instance] = *r.best_objective;
    else it->second = std::min(it->second, *r.best_objective);
  }
  for (const ExperimentRecord& r : records) {
    double gap = 100.0, integral = 100.0;
    auto bk = rep.best_known.find(r.instance);
    if (bk != rep.best_known.end()) {
      if (r.best_objective) gap = primal_gap(*r.best_objective, bk->second);
      integral = primal_integral(r.trajectory, bk->second);
    }
    rep.gaps[r.scenario][r.instance] = gap;
    rep.integrals[r.scenario][r.instance] = integral;
  }
  for (const std::string& sc : scenarios) {
    std::vector<double> g, pi;
    for (const auto& [inst, v] : rep.gaps[sc]) g.push_back(v);
    for (const auto& [inst, v] : rep.integrals[sc]) pi.push_back(v);
    rep.gap.push_back(summarize_values(sc, g));
    rep.integral.push_back(summarize_values(sc, pi));

    ClassifierSummary cs;
    cs.scenario = sc;
    for (const ExperimentRecord& r : records) {
      if (r.scenario != sc || !r.metrics) continue;
      cs.balanced_accuracy += r.metrics->balanced_accuracy;
      cs.fpr += r.metrics->fpr;
      cs.fnr += r.metrics->fnr;
      ++cs.instances;
    }
    if (cs.instances > 0) {
      cs.balanced_accuracy /= cs.instances;
      cs.fpr /= cs.instances;
      cs.fnr /= cs.instances;
      rep.classifier.push_back(cs);
    }
  }
  award_wins(rep.gap, rep.gaps, instances);
  award_wins(rep.integral, rep.integrals, instances);
  return rep;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

void text_table(std::ostringstream& out, const std::string& title,
                const std::vector<ScenarioSummary>& rows) {
  std::size_t w = 8;
  for (const ScenarioSummary& r : rows) w = std::max(w, r.scenario.size());
  out << title << "\n";
  out << pad_right("Scenario", w);
  for (const char* h : {"q0.1", "q0.5", "q0.9", "Mean", "Geomean", "Wins"}) out << pad_left(h, 9);
  out << "\n";
  for (const ScenarioSummary& r : rows) {
    out << pad_right(r.scenario, w);
    for (double v : {r.q10, r.q50, r.q90, r.mean, r.geomean + 1.0}) out << pad_left(fixed2(v), 9);
    out << pad_left(std::to_string(r.wins), 9) << "\n";
  }
}

}  // namespace

std::string render_report(const BenchmarkReport& rep, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "table,scenario,q0.1,q0.5,q0.9,mean,geomean,wins\n";
    for (const auto& [name, rows] : {std::pair{"primal_gap", &rep.gap}, std::pair{"primal_integral", &rep.integral}})
      for (const ScenarioSummary& r : *rows)
        out << name << "," << r.scenario << "," << format_9(r.q10) << "," << format_9(r.q50) << ","
            << format_9(r.q90) << "," << format_9(r.mean) << "," << format_9(r.geomean + 1.0) << ","
            << r.wins << "\n";
    for (const ClassifierSummary& c : rep.classifier)
      out << "classifier," << c.scenario << ",balanced_accuracy," << format_9(c.balanced_accuracy)
          << ",fpr," << format_9(c.fpr) << ",fnr," << format_9(c.fnr) << "\n";
    for (const auto& [inst, v] : rep.best_known) out << "best_known," << inst << "," << format_9(v) << "\n";
    return out.str();
  }
  text_table(out, "Primal gap (%)", rep.gap);
  out << "\n";
  text_table(out, "Primal integral", rep.integral);
  if (!rep.classifier.empty()) {
    std::size_t w = 8;
    for (const ClassifierSummary& c : rep.classifier) w = std::max(w, c.scenario.size());
    out << "\nClassifier\n" << pad_right("Scenario", w);
    for (const char* h : {"BalAcc", "FPR", "FNR"}) out << pad_left(h, 9);
    out << "\n";
    for (const ClassifierSummary& c : rep.classifier)
      out << pad_right(c.scenario, w) << pad_left(fixed2(c.balanced_accuracy), 9)
          << pad_left(fixed2(c.fpr), 9) << pad_left(fixed2(c.fnr), 9) << "\n";
  }
  out << "\nBest known\n";
  for (const auto& [inst, v] : rep.best_known) out << inst << " " << format_9(v) << "\n";
  return out.str();
}

}  // namespace fcnd
