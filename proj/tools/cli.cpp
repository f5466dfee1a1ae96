#include "fcnd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/generator.hpp"
#include "fcnd/io.hpp"
#include "fcnd/mip.hpp"
#include "fcnd/ml.hpp"
#include "fcnd/pipeline.hpp"
#include "fcnd/rng.hpp"

namespace fcnd {

namespace {

/// Infeasible or failed run (exit 3).
class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flag combination found after parsing (exit 1).
class Usage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SearchFlags {
  double budget = 120.0;
  double lambda = 0.05;
  int m0 = 20;
  double mip_time = 20.0;
  int columns = 50;
  double prune_eps = 0.01;

  void add(CLI::App* app) {
    app->add_option("--budget", budget, "Total budget (work-seconds)")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda", lambda, "Capacity smoothing factor")->check(CLI::Range(0.0, 1.0));
    app->add_option("--m0", m0, "Initial neighbourhood size")->check(CLI::NonNegativeNumber);
    app->add_option("--mip-time", mip_time, "Time limit per neighbourhood MIP")->check(CLI::PositiveNumber);
    app->add_option("--columns", columns, "Columns per pricing round")->check(CLI::PositiveNumber);
    app->add_option("--prune-eps", prune_eps, "Capacity-scaling pruning threshold")->check(CLI::Range(0.0, 1.0));
  }

  LsConfig config(std::uint64_t seed) const {
    LsConfig c;
    c.budget = budget;
    c.lambda = lambda;
    c.m0 = m0;
    c.mip_time = mip_time;
    c.columns_per_round = columns;
    c.prune_eps = prune_eps;
    c.seed = seed;
    return c;
  }
};

struct SamplingFlags {
  double budget = 300.0;
  double per_iter = 20.0;
  int columns = 3;

  void add(CLI::App* app, const std::string& prefix) {
    app->add_option("--" + prefix + "budget", budget, "Sampling budget per routine")->check(CLI::NonNegativeNumber);
    app->add_option("--per-iter", per_iter, "Time limit per sampling iteration")->check(CLI::PositiveNumber);
    app->add_option("--sample-columns", columns, "LSFS columns per pricing round")->check(CLI::PositiveNumber);
  }

  SamplingConfig config(std::uint64_t seed) const {
    SamplingConfig c;
    c.budget = budget;
    c.per_iter = per_iter;
    c.lsfs_columns = columns;
    c.seed = seed;
    return c;
  }
};

Integration parse_integration(const std::string& s) {
  if (s == "lsr") return Integration::kLsr;
  if (s == "lbh") return Integration::kLbh;
  return Integration::kLswsh;
}

std::vector<std::uint8_t> read_bits(const fs::path& path, const Instance& inst) {
  auto bits = parse_arc_bits(read_text_file(path));
  if (static_cast<int>(bits.size()) != inst.arc_count())
    throw IntegrityError(path.string() + " has " + std::to_string(bits.size()) + " arcs, instance has " +
                         std::to_string(inst.arc_count()));
  return bits;
}

SampleSet read_samples(const fs::path& path) { return parse_sample_set(read_text_file(path)); }

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IntegrityError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

struct GenerateCmd {
  fs::path out;
  int count = 1;
  std::uint64_t seed = 1;
  std::string topology = "grid";
  int rows = 6, cols = 6, ring = 12, chords = 6, commodities = 20;
  bool loose = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("generate", "Write generated instances");
    c->add_option("--out", out, "Output directory")->required();
    c->add_option("--count", count, "Number of instances")->check(CLI::PositiveNumber);
    c->add_option("--seed", seed, "Seed of the first instance");
    c->add_option("--topology", topology)->check(CLI::IsMember({"grid", "circular"}));
    c->add_option("--rows", rows)->check(CLI::PositiveNumber);
    c->add_option("--cols", cols)->check(CLI::PositiveNumber);
    c->add_option("--ring", ring)->check(CLI::PositiveNumber);
    c->add_option("--chords", chords)->check(CLI::NonNegativeNumber);
    c->add_option("--commodities", commodities)->check(CLI::PositiveNumber);
    c->add_flag("--loose", loose, "Loose capacity ratio");
  }

  int run(std::ostream& os) const {
    fs::create_directories(out);
    for (int i = 0; i < count; ++i) {
      GenSpec g;
      g.topology = topology == "grid" ? Topology::kGrid : Topology::kCircular;
      g.rows = rows;
      g.cols = cols;
      g.ring_size = ring;
      g.chords = chords;
      g.commodity_count = commodities;
      if (loose) g.capacity_ratio = kLooseCapacity;
      g.seed = seed + static_cast<std::uint64_t>(i);
      const Instance inst = generate(g);
      const fs::path file = out / (inst.name() + ".inst");
      write_instance(inst, file);
      os << file.string() << "\n";
    }
    return kExitOk;
  }
};

struct SampleCmd {
  fs::path instance, out, archive;
  std::string routine = "both";
  SamplingFlags sampling;
  std::uint64_t seed = 1;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("sample", "Run sampling routines");
    c->add_option("--instance", instance)->required();
    c->add_option("--out", out, "Sample set file")->required();
    c->add_option("--archive", archive, "Archive to extend with the feasible samples");
    c->add_option("--routine", routine)->check(CLI::IsMember({"rss", "lsfs", "both"}));
    c->add_option("--seed", seed);
    sampling.add(c, "");
  }

  int run(std::ostream& os) const {
    const Instance inst = read_instance(instance);
    SamplingConfig cfg = sampling.config(derive_seed(seed, "sample"));
    cfg.rss = routine != "lsfs";
    cfg.lsfs = routine != "rss";
    const Sampling s = run_samplers(inst, cfg);
    write_text_file(out, format_sample_set(s.samples, routine));
    if (!archive.empty()) {
      SolutionArchive ar;
      if (fs::exists(archive)) ar = read_archive(archive, &inst);
      else ar.instance_name = inst.name();
      if (ar.instance_name != inst.name())
        throw IntegrityError("archive " + archive.string() + " belongs to " + ar.instance_name);
      for (const Solution& x : s.samples.feasible) ar.insert({x.design, x.objective, x.provenance, x.wall_time});
      write_archive(ar, archive);
    }
    os << "fractional " << s.samples.fractional.size() << " feasible " << s.samples.feasible.size();
    if (const Solution* b = s.samples.best()) os << " best " << format_9(b->objective);
    os << "\n";
    return kExitOk;
  }
};

struct LabelCmd {
  fs::path instance, archive, out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("label", "Write arc labels (1 = remove) from an archive");
    c->add_option("--instance", instance)->required();
    c->add_option("--archive", archive)->required();
    c->add_option("--out", out)->required();
  }

  int run(std::ostream& os) const {
    const Instance inst = read_instance(instance);
    const SolutionArchive ar = read_archive(archive, &inst);
    const auto labels = build_labels(ar, inst);
    write_text_file(out, format_arc_bits(labels));
    os << "remove " << std::count(labels.begin(), labels.end(), 1) << " of " << labels.size() << "\n";
    return kExitOk;
  }
};

struct TrainCmd {
  std::vector<fs::path> instances, samples, archives;
  fs::path out, table;
  std::string family = "boosted", features = "all";
  double omega1 = 0.5, omega0 = 0.5;
  TrainOptions opt;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train", "Fit a classifier on sampled instances");
    c->add_option("--instance", instances)->required();
    c->add_option("--samples", samples, "One sample file per instance")->required();
    c->add_option("--archive", archives, "One archive per instance")->required();
    c->add_option("--out", out, "Model file")->required();
    c->add_option("--table", table, "Also write the feature table");
    c->add_option("--family", family)->check(CLI::IsMember({"linear", "boosted"}));
    c->add_option("--features", features)->check(CLI::IsMember({"all", "graph"}));
    c->add_option("--omega1", omega1, "Weight of the remove class")->check(CLI::PositiveNumber);
    c->add_option("--omega0", omega0, "Weight of the keep class")->check(CLI::PositiveNumber);
    c->add_option("--epochs", opt.epochs)->check(CLI::NonNegativeNumber);
    c->add_option("--step", opt.step)->check(CLI::PositiveNumber);
    c->add_option("--stages", opt.stages)->check(CLI::NonNegativeNumber);
    c->add_option("--shrinkage", opt.shrinkage)->check(CLI::PositiveNumber);
    c->add_option("--max-depth", opt.max_depth)->check(CLI::PositiveNumber);
    c->add_option("--min-leaf", opt.min_leaf)->check(CLI::PositiveNumber);
  }

  int run(std::ostream& os) const {
    if (samples.size() != instances.size() || archives.size() != instances.size())
      throw Usage("--instance, --samples and --archive need the same number of files");
    std::vector<FeatureRow> rows;
    std::vector<std::uint8_t> labels;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance inst = read_instance(instances[i]);
      const auto r = featurize(inst, read_samples(samples[i]));
      const auto l = build_labels(read_archive(archives[i], &inst), inst);
      rows.insert(rows.end(), r.begin(), r.end());
      labels.insert(labels.end(), l.begin(), l.end());
    }
    TrainOptions o = opt;
    o.features = features == "all" ? all_features() : graph_features();
    const ClassifierModel model = train(parse_family(family), rows, labels, omega1, omega0, o);
    write_model(model, out);
    if (!table.empty()) write_feature_table(rows, labels, table);
    const auto m = classifier_metrics(predict(model, rows).decision, labels);
    os << "rows " << rows.size() << " balanced_accuracy " << format_9(m.balanced_accuracy)
       << (model.degenerate ? " degenerate" : "") << "\n";
    return kExitOk;
  }
};

struct PredictCmd {
  fs::path model, instance, samples, out, labels;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("predict", "Write per-arc decisions (1 = remove)");
    c->add_option("--model", model)->required();
    c->add_option("--instance", instance)->required();
    c->add_option("--samples", samples)->required();
    c->add_option("--out", out)->required();
    c->add_option("--labels", labels, "Reference labels; prints classifier metrics");
  }

  int run(std::ostream& os) const {
    const ClassifierModel m = read_model(model);
    const Instance inst = read_instance(instance);
    const Predictions p = predict(m, featurize(inst, read_samples(samples)));
    write_text_file(out, format_arc_bits(p.decision, &p.probability));
    os << "remove " << std::count(p.decision.begin(), p.decision.end(), 1) << " of " << p.decision.size();
    if (!labels.empty()) {
      const auto c = classifier_metrics(p.decision, read_bits(labels, inst));
      os << " balanced_accuracy " << format_9(c.balanced_accuracy) << " fpr " << format_9(c.fpr) << " fnr "
         << format_9(c.fnr);
    }
    os << "\n";
    return kExitOk;
  }
};

struct SolveCmd {
  std::string strategy;
  fs::path instance, out, trajectory, samples, prediction, model;
  std::uint64_t seed = 1;
  double respect = 0.8;
  std::string integration = "lsr";
  SearchFlags search;
  SamplingFlags sampling;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("solve", "Solve one instance");
    c->add_option("--strategy", strategy)->required()->check(
        CLI::IsMember({"ls", "lsr", "lbh", "lswsh", "sls", "bnb"}));
    c->add_option("--instance", instance)->required();
    c->add_option("--out", out, "Solution file")->required();
    c->add_option("--trajectory", trajectory, "Trajectory file");
    c->add_option("--samples", samples, "Sample set (lsr, lbh, lswsh)");
    c->add_option("--prediction", prediction, "Arc decisions, 1 = remove (lsr, lbh, lswsh)");
    c->add_option("--model", model, "Model (sls, or instead of --prediction)");
    c->add_option("--respect", respect, "Share of arcs that must follow the prediction")
        ->check(CLI::Range(0.0, 1.0));
    c->add_option("--integration", integration, "Search used by sls")
        ->check(CLI::IsMember({"lsr", "lbh", "lswsh"}));
    c->add_option("--seed", seed);
    search.add(c);
    sampling.add(c, "sample-");
  }

  int run(std::ostream& os) const {
    const Instance inst = read_instance(instance);
    const std::uint64_t stream = derive_seed(seed, "solve");
    const LsConfig cfg = search.config(stream);
    WorkClock clock;
    std::optional<Solution> best;
    Trajectory traj;

    if (strategy == "ls") {
      SearchResult r = ls_star(inst, cfg, clock);
      best = std::move(r.best);
      traj = std::move(r.trajectory);
    } else if (strategy == "bnb") {
      MipProblem p(inst);
      p.limits.time = search.budget;
      p.seed = stream;
      MipResult r = solve_mip(p, clock);
      os << "status " << to_string(r.status) << " nodes " << r.nodes << "\n";
      if (r.status == MipStatus::kInfeasible) throw Failure("instance is infeasible");
      best = std::move(r.best);
      traj = std::move(r.trajectory);
    } else if (strategy == "sls") {
      if (model.empty()) throw Usage("--strategy sls needs --model");
      SlsConfig sc;
      sc.sampling = sampling.config(derive_seed(seed, "sample"));
      sc.integration = parse_integration(integration);
      sc.respect_fraction = respect;
      sc.search = cfg;
      SlsResult r = sls(inst, read_model(model), sc, clock);
      if (r.fallback) os << "no feasible sample, ran LS* from scratch\n";
      best = std::move(r.best);
      traj = std::move(r.trajectory);
    } else {
      if (samples.empty()) throw Usage("--strategy " + strategy + " needs --samples");
      if (prediction.empty() == model.empty())
        throw Usage("--strategy " + strategy + " needs exactly one of --prediction and --model");
      const SampleSet set = read_samples(samples);
      const Solution* sample = set.best();
      if (!sample) throw Failure("sample set has no feasible solution");
      const Solution start = with_flows(inst, *sample);
      const auto remove = prediction.empty() ? predict(read_model(model), featurize(inst, set)).decision
                                             : read_bits(prediction, inst);
      SearchResult r;
      if (strategy == "lsr") {
        r = lsr(inst, remove, start, cfg, clock);
      } else {
        DesignVector keep(remove.size());
        for (std::size_t a = 0; a < remove.size(); ++a) keep.set(a, remove[a] == 0);
        r = strategy == "lbh" ? lbh(inst, keep, start, respect, cfg, clock)
                              : lswsh(inst, keep, start, respect, cfg, clock);
      }
      if (r.reduction_fallback) os << "reduction disconnected a commodity, searched the full graph\n";
      best = std::move(r.best);
      traj = std::move(r.trajectory);
    }
    traj.horizon = search.budget;
    if (!trajectory.empty()) write_text_file(trajectory, format_trajectory(traj));
    if (!best) throw Failure("no feasible solution found");
    write_text_file(out, format_solution(*best));
    os << "objective " << format_9(best->objective) << " open " << best->design.open_count() << "\n";
    return kExitOk;
  }
};

struct BenchCmd {
  fs::path instances, out, samples, archives, model;
  std::string scenarios;
  std::uint64_t seed = 1;
  int jobs = 1;
  double respect = 0.8;
  SearchFlags search;
  SamplingFlags sampling;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("bench", "Run a scenario grid; existing records are kept");
    c->add_option("--instances", instances, "Directory of .inst files")->required();
    c->add_option("--scenarios", scenarios, "Comma-separated scenario tags")->required();
    c->add_option("--out", out, "Record directory")->required();
    c->add_option("--samples", samples, "Directory of <name>.samples files");
    c->add_option("--archives", archives, "Directory of <name>.archive files");
    c->add_option("--model", model);
    c->add_option("--seed", seed);
    c->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    c->add_option("--respect", respect)->check(CLI::Range(0.0, 1.0));
    search.add(c);
    sampling.add(c, "sample-");
  }

  int run(std::ostream& os) const {
    std::vector<Scenario> grid;
    std::size_t start = 0;
    while (start <= scenarios.size()) {
      std::size_t comma = scenarios.find(',', start);
      if (comma == std::string::npos) comma = scenarios.size();
      const std::string tag = scenarios.substr(start, comma - start);
      try {
        grid.push_back(Scenario::parse(tag));
      } catch (const StructuralError& e) {
        throw Usage(e.what());
      }
      start = comma + 1;
    }
    std::vector<BenchInput> inputs;
    for (const fs::path& file : files_with(instances, ".inst")) {
      BenchInput in{read_instance(file), std::nullopt, std::nullopt, std::nullopt};
      const std::string name = in.instance.name();
      if (!samples.empty() && fs::exists(samples / (name + ".samples")))
        in.samples = read_samples(samples / (name + ".samples"));
      if (!archives.empty() && fs::exists(archives / (name + ".archive")))
        in.archive = read_archive(archives / (name + ".archive"), &in.instance);
      inputs.push_back(std::move(in));
    }
    if (inputs.empty()) throw IntegrityError("no .inst files in " + instances.string());
    std::optional<ClassifierModel> m;
    if (!model.empty()) m = read_model(model);

    BenchConfig cfg;
    cfg.budget = search.budget;
    cfg.search = search.config(seed);
    cfg.sls.sampling = sampling.config(seed);
    cfg.sls.respect_fraction = respect;
    cfg.seed = seed;
    cfg.jobs = jobs;
    cfg.record_dir = out;
    const auto records = run_benchmark(inputs, grid, m ? &*m : nullptr, cfg);
    os << "records " << records.size() << " in " << out.string() << "\n";
    return kExitOk;
  }
};

struct ReportCmd {
  fs::path records, archives, out;
  std::string format = "txt";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Render benchmark tables");
    c->add_option("--records", records, "Record directory")->required();
    c->add_option("--archives", archives, "Archive directory for best-known values");
    c->add_option("--format", format)->check(CLI::IsMember({"txt", "csv"}));
    c->add_option("--out", out, "Output file (default stdout)");
  }

  int run(std::ostream& os) const {
    std::vector<ExperimentRecord> recs;
    for (const fs::path& f : files_with(records, ".rec")) recs.push_back(read_record(f));
    if (recs.empty()) throw IntegrityError("no records in " + records.string());
    std::map<std::string, double> best;
    if (!archives.empty())
      for (const fs::path& f : files_with(archives, ".archive")) {
        const SolutionArchive ar = read_archive(f);
        if (const ArchiveEntry* e = ar.best()) best[ar.instance_name] = e->objective;
      }
    const std::string text =
        render_report(summarize(recs, best), format == "csv" ? ReportFormat::kCsv : ReportFormat::kText);
    if (out.empty()) os << text;
    else write_text_file(out, text);
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-charge network design solver suite", "fcnd"};
  app.require_subcommand(1);
  GenerateCmd generate;
  SampleCmd sample;
  LabelCmd label;
  TrainCmd train_cmd;
  PredictCmd predict_cmd;
  SolveCmd solve;
  BenchCmd bench;
  ReportCmd report;
  generate.add(app);
  sample.add(app);
  label.add(app);
  train_cmd.add(app);
  predict_cmd.add(app);
  solve.add(app);
  bench.add(app);
  report.add(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (name == "generate") return generate.run(out);
    if (name == "sample") return sample.run(out);
    if (name == "label") return label.run(out);
    if (name == "train") return train_cmd.run(out);
    if (name == "predict") return predict_cmd.run(out);
    if (name == "solve") return solve.run(out);
    if (name == "bench") return bench.run(out);
    return report.run(out);
  } catch (const Usage& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Failure& e) {
    err << "failure: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace fcnd
