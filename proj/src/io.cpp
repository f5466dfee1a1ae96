#include "fcnd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"

namespace fcnd {

std::string format_exact(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_9(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

std::optional<double> parse_double(std::string_view token) {
  double v = 0.0;
  const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

struct Line {
  int number = 0;
  std::vector<std::string_view> tokens;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Non-blank, non-comment lines. Comment lines are passed to `on_comment`.
template <typename F>
std::vector<Line> content_lines(std::string_view text, F on_comment) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    ++number;
    pos = end + 1;
    auto tokens = split(raw);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (tokens.front().front() == '#') {
      on_comment(tokens, number);
    } else {
      out.push_back({number, std::move(tokens)});
    }
    if (end == text.size()) break;
  }
  return out;
}

std::vector<Line> content_lines(std::string_view text) {
  return content_lines(text, [](const auto&, int) {});
}

double number(std::string_view token, int line, const char* what) {
  auto v = parse_double(token);
  if (!v || !std::isfinite(*v)) throw ParseError(std::string("bad ") + what + " '" + std::string(token) + "'", line);
  return *v;
}

long integer(std::string_view token, int line, const char* what) {
  long v = 0;
  const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size())
    throw ParseError(std::string("bad ") + what + " '" + std::string(token) + "'", line);
  return v;
}

void expect_tokens(const Line& l, std::size_t n, const char* what) {
  if (l.tokens.size() != n)
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " fields, got " +
                         std::to_string(l.tokens.size()),
                     l.number);
}

DesignVector design_token(std::string_view token, int line) {
  try {
    return DesignVector::from_string(token);
  } catch (const StructuralError& e) {
    throw ParseError(e.what(), line);
  }
}

std::string clean_tag(const std::string& tag) {
  if (tag.empty()) return "-";
  std::string s = tag;
  for (char& c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Instances

Instance parse_instance(std::string_view text, const std::string& fallback_name) {
  std::string name = fallback_name;
  const auto lines = content_lines(text, [&](const std::vector<std::string_view>& t, int) {
    if (t.size() == 3 && t[0] == "#" && t[1] == "name") name = std::string(t[2]);
  });
  if (lines.empty()) throw ParseError("missing header", 1);

  const Line& h = lines.front();
  if (h.tokens.size() != 3 && h.tokens.size() != 4)
    throw ParseError("malformed header: expected 'nodes arcs commodities [pc]'", h.number);
  const bool pc = h.tokens.size() == 4;
  if (pc && h.tokens[3] != "pc") throw ParseError("malformed header: unknown flag", h.number);
  const long n = integer(h.tokens[0], h.number, "node count");
  const long m = integer(h.tokens[1], h.number, "arc count");
  const long kc = integer(h.tokens[2], h.number, "commodity count");
  if (n <= 0 || m < 0 || kc < 0) throw ParseError("malformed header: counts", h.number);
  if (static_cast<long>(lines.size()) != 1 + m + kc)
    throw ParseError("expected " + std::to_string(m) + " arc and " + std::to_string(kc) +
                         " commodity lines, found " + std::to_string(lines.size() - 1),
                     lines.size() < static_cast<std::size_t>(1 + m + kc) ? lines.back().number
                                                                       : lines[1 + m + kc].number);

  auto node = [&](std::string_view tok, int line) {
    const long v = integer(tok, line, "node index");
    if (v < 1 || v > n) throw ParseError("node index out of range", line);
    return static_cast<int>(v - 1);
  };

  std::vector<Arc> arcs;
  std::vector<std::vector<double>> costs;
  for (long a = 0; a < m; ++a) {
    const Line& l = lines[1 + a];
    expect_tokens(l, pc ? 5 + kc : 5, "arc line");
    Arc arc;
    arc.tail = node(l.tokens[0], l.number);
    arc.head = node(l.tokens[1], l.number);
    if (arc.tail == arc.head) throw ParseError("self-loop", l.number);
    arc.variable_cost = number(l.tokens[2], l.number, "variable cost");
    arc.capacity = number(l.tokens[3], l.number, "capacity");
    arc.fixed_cost = number(l.tokens[4], l.number, "fixed cost");
    if (!(arc.capacity > 0.0)) throw ParseError("capacity must be positive", l.number);
    if (arc.variable_cost < 0.0) throw ParseError("negative variable cost", l.number);
    if (arc.fixed_cost < 0.0) throw ParseError("negative fixed cost", l.number);
    if (pc) {
      std::vector<double> row;
      for (long k = 0; k < kc; ++k) {
        const double c = number(l.tokens[5 + k], l.number, "commodity cost");
        if (c < 0.0) throw ParseError("negative commodity cost", l.number);
        row.push_back(c);
      }
      costs.push_back(std::move(row));
    }
    arcs.push_back(arc);
  }
  std::vector<Commodity> commodities;
  for (long k = 0; k < kc; ++k) {
    const Line& l = lines[1 + m + k];
    expect_tokens(l, 3, "commodity line");
    Commodity c;
    c.origin = node(l.tokens[0], l.number);
    c.destination = node(l.tokens[1], l.number);
    if (c.origin == c.destination) throw ParseError("origin equals destination", l.number);
    c.demand = number(l.tokens[2], l.number, "demand");
    if (!(c.demand > 0.0)) throw ParseError("demand must be positive", l.number);
    commodities.push_back(c);
  }
  return Instance(name, static_cast<int>(n), std::move(arcs), std::move(commodities),
                  std::move(costs));
}

std::string format_instance(const Instance& instance) {
  std::ostringstream out;
  out << "# name " << clean_tag(instance.name()) << "\n";
  out << instance.node_count() << " " << instance.arc_count() << " "
      << instance.commodity_count() << (instance.has_commodity_costs() ? " pc" : "") << "\n";
  for (int a = 0; a < instance.arc_count(); ++a) {
    const Arc& arc = instance.arc(a);
    out << arc.tail + 1 << " " << arc.head + 1 << " " << format_exact(arc.variable_cost) << " "
        << format_exact(arc.capacity) << " " << format_exact(arc.fixed_cost);
    if (instance.has_commodity_costs())
      for (double c : instance.commodity_costs()[a]) out << " " << format_exact(c);
    out << "\n";
  }
  for (const Commodity& c : instance.commodities())
    out << c.origin + 1 << " " << c.destination + 1 << " " << format_exact(c.demand) << "\n";
  return out.str();
}

Instance read_instance(const fs::path& path) {
  return parse_instance(read_text_file(path), path.stem().string());
}

void write_instance(const Instance& instance, const fs::path& path) {
  write_text_file(path, format_instance(instance));
}

// ---------------------------------------------------------------------------
// Archives

bool SolutionArchive::insert(ArchiveEntry entry) {
  auto same = std::find_if(entries.begin(), entries.end(),
                           [&](const ArchiveEntry& e) { return e.design == entry.design; });
  if (same != entries.end()) {
    if (!(entry.objective < same->objective)) return false;
    entries.erase(same);
  }
  auto pos = std::upper_bound(entries.begin(), entries.end(), entry,
                              [](const ArchiveEntry& a, const ArchiveEntry& b) {
                                return a.objective < b.objective ||
                                       (a.objective == b.objective && a.design < b.design);
                              });
  entries.insert(pos, std::move(entry));
  return true;
}

std::string format_archive(const SolutionArchive& archive) {
  std::ostringstream out;
  out << "# objective wall_time provenance design\n";
  out << "instance " << clean_tag(archive.instance_name) << "\n";
  for (const ArchiveEntry& e : archive.entries)
    out << format_exact(e.objective) << " " << format_exact(e.wall_time) << " "
        << clean_tag(e.provenance) << " " << e.design.to_string() << "\n";
  return out.str();
}

SolutionArchive parse_archive(std::string_view text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw ParseError("missing archive header", 1);
  const Line& h = lines.front();
  if (h.tokens.size() != 2 || h.tokens[0] != "instance")
    throw ParseError("malformed archive header", h.number);
  SolutionArchive archive;
  archive.instance_name = std::string(h.tokens[1]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    expect_tokens(l, 4, "archive entry");
    ArchiveEntry e;
    e.objective = number(l.tokens[0], l.number, "objective");
    e.wall_time = number(l.tokens[1], l.number, "wall time");
    e.provenance = std::string(l.tokens[2]);
    e.design = design_token(l.tokens[3], l.number);
    if (!archive.entries.empty() && archive.entries.front().design.size() != e.design.size())
      throw ParseError("design length differs from previous entries", l.number);
    archive.insert(std::move(e));
  }
  return archive;
}

SolutionArchive read_archive(const fs::path& path, const Instance* instance) {
  SolutionArchive archive = parse_archive(read_text_file(path));
  if (instance) {
    for (const ArchiveEntry& e : archive.entries) {
      if (static_cast<int>(e.design.size()) != instance->arc_count())
        throw IntegrityError("archive design length does not match instance " + instance->name());
      const auto flows = solve_flow_lp(*instance, e.design);
      if (!flows)
        throw IntegrityError("archive design is infeasible for instance " + instance->name());
      const double tol = 1e-6 * std::max(1.0, std::abs(flows->objective));
      if (std::abs(flows->objective - e.objective) > tol)
        throw IntegrityError("archive objective " + format_exact(e.objective) +
                             " does not match recomputed " + format_exact(flows->objective));
    }
  }
  return archive;
}

void write_archive(const SolutionArchive& archive, const fs::path& path) {
  write_text_file(path, format_archive(archive));
}

void append_archive(const fs::path& path, const std::string& instance_name,
                    const Solution& solution) {
  SolutionArchive archive;
  archive.instance_name = instance_name;
  if (fs::exists(path)) {
    archive = parse_archive(read_text_file(path));
    if (archive.instance_name != clean_tag(instance_name))
      throw IntegrityError("archive belongs to instance " + archive.instance_name);
    if (!archive.entries.empty() && archive.entries.front().design.size() != solution.design.size())
      throw IntegrityError("design length does not match archive");
  }
  archive.insert({solution.design, solution.objective, solution.provenance, solution.wall_time});
  write_archive(archive, path);
}

// ---------------------------------------------------------------------------
// Feature tables

std::string format_feature_table(const std::vector<FeatureRow>& rows,
                                 const std::vector<std::uint8_t>& labels) {
  if (rows.size() != labels.size()) throw StructuralError("feature rows and labels differ in length");
  std::string out;
  for (int f = 0; f < kFeatureCount; ++f) out += "f" + std::to_string(f + 1) + ",";
  out += "label\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r]) out += format_9(v) + ",";
    out += labels[r] ? "1\n" : "0\n";
  }
  return out;
}

void write_feature_table(const std::vector<FeatureRow>& rows,
                         const std::vector<std::uint8_t>& labels, const fs::path& path) {
  write_text_file(path, format_feature_table(rows, labels));
}

FeatureTable parse_feature_table(std::string_view text) {
  FeatureTable table;
  int number_ = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++number_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t s = 0;
    while (true) {
      const std::size_t c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (cells.size() != kFeatureCount + 1)
      throw ParseError("expected " + std::to_string(kFeatureCount + 1) + " columns", number_);
    if (header) {
      header = false;
      if (cells.back() != "label") throw ParseError("missing feature table header", number_);
      continue;
    }
    FeatureRow row;
    for (int f = 0; f < kFeatureCount; ++f) row[f] = number(cells[f], number_, "feature");
    if (cells.back() != "0" && cells.back() != "1") throw ParseError("label must be 0 or 1", number_);
    table.rows.push_back(row);
    table.labels.push_back(cells.back() == "1");
  }
  if (header) throw ParseError("missing feature table header", 1);
  return table;
}

FeatureTable read_feature_table(const fs::path& path) {
  return parse_feature_table(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Arc bits, sample sets, solutions, trajectories

std::string format_arc_bits(const std::vector<std::uint8_t>& bits,
                            const std::vector<double>* probabilities) {
  if (probabilities && probabilities->size() != bits.size())
    throw StructuralError("probabilities and decisions differ in length");
  std::ostringstream out;
  out << "# arc " << (probabilities ? "decision probability" : "label") << "\n";
  for (std::size_t a = 0; a < bits.size(); ++a) {
    out << a + 1 << " " << (bits[a] ? 1 : 0);
    if (probabilities) out << " " << format_9((*probabilities)[a]);
    out << "\n";
  }
  return out.str();
}

std::vector<std::uint8_t> parse_arc_bits(std::string_view text) {
  std::vector<std::uint8_t> bits;
  for (const Line& l : content_lines(text)) {
    if (l.tokens.size() != 2 && l.tokens.size() != 3) throw ParseError("expected 'arc bit'", l.number);
    if (integer(l.tokens[0], l.number, "arc") != static_cast<long>(bits.size()) + 1)
      throw ParseError("arcs must be listed in order", l.number);
    const long b = integer(l.tokens[1], l.number, "bit");
    if (b != 0 && b != 1) throw ParseError("bit must be 0 or 1", l.number);
    bits.push_back(static_cast<std::uint8_t>(b));
  }
  return bits;
}

std::string format_sample_set(const SampleSet& samples, const std::string& routine) {
  std::ostringstream out;
  out << "samples " << clean_tag(routine) << "\n";
  out << "fractional " << samples.fractional.size() << "\n";
  for (const Eigen::VectorXd& y : samples.fractional) {
    for (Eigen::Index a = 0; a < y.size(); ++a) out << (a ? " " : "") << format_exact(y[a]);
    out << "\n";
  }
  out << "feasible " << samples.feasible.size() << "\n";
  for (const Solution& s : samples.feasible)
    out << format_exact(s.objective) << " " << format_exact(s.wall_time) << " "
        << clean_tag(s.provenance) << " " << s.design.to_string() << "\n";
  return out.str();
}

SampleSet parse_sample_set(std::string_view text) {
  const auto lines = content_lines(text);
  std::size_t i = 0;
  auto next = [&](const char* what) -> const Line& {
    if (i >= lines.size()) throw ParseError(std::string("missing ") + what, lines.empty() ? 1 : lines.back().number);
    return lines[i++];
  };
  const Line& h = next("header");
  if (h.tokens.size() != 2 || h.tokens[0] != "samples") throw ParseError("malformed sample header", h.number);
  SampleSet set;
  const Line& fh = next("fractional section");
  if (fh.tokens.size() != 2 || fh.tokens[0] != "fractional") throw ParseError("expected 'fractional <count>'", fh.number);
  const long nf = integer(fh.tokens[1], fh.number, "count");
  for (long r = 0; r < nf; ++r) {
    const Line& l = next("fractional row");
    Eigen::VectorXd y(static_cast<Eigen::Index>(l.tokens.size()));
    for (std::size_t a = 0; a < l.tokens.size(); ++a) {
      y[static_cast<Eigen::Index>(a)] = number(l.tokens[a], l.number, "fractional value");
      if (y[static_cast<Eigen::Index>(a)] < 0.0 || y[static_cast<Eigen::Index>(a)] > 1.0)
        throw ParseError("fractional value outside [0,1]", l.number);
    }
    if (!set.fractional.empty() && set.fractional.front().size() != y.size())
      throw ParseError("fractional row length differs", l.number);
    set.fractional.push_back(std::move(y));
  }
  const Line& sh = next("feasible section");
  if (sh.tokens.size() != 2 || sh.tokens[0] != "feasible") throw ParseError("expected 'feasible <count>'", sh.number);
  const long ns = integer(sh.tokens[1], sh.number, "count");
  for (long r = 0; r < ns; ++r) {
    const Line& l = next("feasible row");
    expect_tokens(l, 4, "feasible entry");
    Solution s;
    s.objective = number(l.tokens[0], l.number, "objective");
    s.wall_time = number(l.tokens[1], l.number, "wall time");
    s.provenance = std::string(l.tokens[2]);
    s.design = design_token(l.tokens[3], l.number);
    set.feasible.push_back(std::move(s));
  }
  if (i != lines.size()) throw ParseError("trailing content", lines[i].number);
  return set;
}

std::string format_solution(const Solution& solution) {
  std::ostringstream out;
  out << "objective " << format_exact(solution.objective) << "\n";
  out << "wall_time " << format_exact(solution.wall_time) << "\n";
  out << "provenance " << clean_tag(solution.provenance) << "\n";
  out << "design " << solution.design.to_string() << "\n";
  out << "# flow <commodity> <arc> <amount>\n";
  for (std::size_t k = 0; k < solution.flows.flows.size(); ++k)
    for (const FlowEntry& e : solution.flows.flows[k])
      out << "flow " << k + 1 << " " << e.arc + 1 << " " << format_exact(e.amount) << "\n";
  return out.str();
}

Solution parse_solution(std::string_view text) {
  Solution s;
  bool have_design = false;
  for (const Line& l : content_lines(text)) {
    const std::string_view key = l.tokens[0];
    if (key == "flow") {
      expect_tokens(l, 4, "flow line");
      const long k = integer(l.tokens[1], l.number, "commodity");
      const long a = integer(l.tokens[2], l.number, "arc");
      if (k < 1 || a < 1) throw ParseError("index out of range", l.number);
      if (static_cast<long>(s.flows.flows.size()) < k) s.flows.flows.resize(k);
      s.flows.flows[k - 1].push_back({static_cast<int>(a - 1), number(l.tokens[3], l.number, "amount")});
      continue;
    }
    expect_tokens(l, 2, "solution field");
    if (key == "objective") s.objective = number(l.tokens[1], l.number, "objective");
    else if (key == "wall_time") s.wall_time = number(l.tokens[1], l.number, "wall time");
    else if (key == "provenance") s.provenance = std::string(l.tokens[1]);
    else if (key == "design") {
      s.design = design_token(l.tokens[1], l.number);
      have_design = true;
    } else throw ParseError("unknown field '" + std::string(key) + "'", l.number);
  }
  if (!have_design) throw ParseError("missing design", 1);
  s.flows.objective = s.objective;
  s.flows.design.resize(static_cast<Eigen::Index>(s.design.size()));
  for (std::size_t a = 0; a < s.design.size(); ++a) s.flows.design[static_cast<Eigen::Index>(a)] = s.design[a];
  return s;
}

std::string format_trajectory(const Trajectory& trajectory) {
  std::ostringstream out;
  out << "horizon " << format_exact(trajectory.horizon) << "\n";
  for (const TrajectoryPoint& p : trajectory.points)
    out << format_exact(p.time) << " " << format_exact(p.objective) << "\n";
  return out.str();
}

Trajectory parse_trajectory(std::string_view text) {
  const auto lines = content_lines(text);
  if (lines.empty() || lines[0].tokens.size() != 2 || lines[0].tokens[0] != "horizon")
    throw ParseError("missing horizon", lines.empty() ? 1 : lines[0].number);
  Trajectory t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    expect_tokens(lines[i], 2, "trajectory point");
    const double time = number(lines[i].tokens[0], lines[i].number, "time");
    const double obj = number(lines[i].tokens[1], lines[i].number, "objective");
    if (!t.points.empty() && (time <= t.points.back().time || obj >= t.points.back().objective))
      throw ParseError("trajectory must improve strictly over time", lines[i].number);
    t.points.push_back({time, obj});
  }
  t.horizon = number(lines[0].tokens[1], lines[0].number, "horizon");
  return t;
}

}  // namespace fcnd
