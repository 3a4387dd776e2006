// arbor: invariants of arborescent links from weighted plane trees.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "arbor/components.hpp"
#include "arbor/coxeter.hpp"
#include "arbor/flatten.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/tangle.hpp"
#include "arbor/wirtinger.hpp"

using namespace arbor;
using nlohmann::json;

namespace {

constexpr int kExitAgree = 0;
constexpr int kExitViolation = 1;
constexpr int kExitSkipped = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  bool json = false;
  std::string out;
  std::uint64_t seed = 0;
  int max_vertices = 12;
  int kmax = -1;
  std::string file;
  std::string tree;
  // corpus
  int count = 10;
  bool many_twigs = false;
  Weight weight_min = -5;
  Weight weight_max = 5;
  std::vector<Weight> exclude;
  bool timings = false;
  // diagram
  std::string format = "json";
};

std::string read_tree_text(const Options& o) {
  if (!o.file.empty()) {
    std::ifstream in(o.file);
    if (!in) throw UsageError("cannot read tree file " + o.file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (o.tree.empty()) throw UsageError("no tree given; pass a tree expression or --file");
  return o.tree;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

enum class Status { agree, skipped, violation };

Status worse(Status a, Status b) { return std::max(a, b); }

const char* status_name(Status s) {
  switch (s) {
    case Status::agree: return "agree";
    case Status::skipped: return "skipped";
    case Status::violation: return "violation";
  }
  return "?";
}

int exit_code(Status s) {
  switch (s) {
    case Status::agree: return kExitAgree;
    case Status::skipped: return kExitSkipped;
    case Status::violation: return kExitViolation;
  }
  return kExitViolation;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

struct Record {
  json data;
  Status status = Status::agree;
  bool equality = false;
};

/// The full pipeline on one tree.
Record evaluate(const PlaneTree& tree, std::uint64_t seed, bool timings) {
  using Clock = std::chrono::steady_clock;
  Record rec;
  json& j = rec.data;
  json times = json::object();
  auto ms = [](Clock::time_point a) { return std::chrono::duration<double, std::milli>(Clock::now() - a).count(); };
  std::vector<std::string> problems;

  auto t0 = Clock::now();
  const auto flat = flattening_number(tree);
  const int f2 = flat.value + 2;
  j["tree"] = serialize(tree);
  j["f"] = flat.value;
  j["f_plus_2"] = f2;
  times["f"] = ms(t0);

  t0 = Clock::now();
  if (tree.size() <= kParityVertexGuard) {
    const auto m = m_bruteforce(tree);
    j["m"] = m.value;
    if (m.value != f2) {
      rec.status = Status::violation;
      problems.push_back("m != f + 2");
    }
  } else {
    j["m"] = nullptr;
    rec.status = worse(rec.status, Status::skipped);
    problems.push_back("m skipped: more than " + std::to_string(kParityVertexGuard) + " vertices");
  }
  times["m"] = ms(t0);

  t0 = Clock::now();
  const auto bounds = meridional_rank_bounds(tree, seed);
  times["bounds"] = ms(t0);
  j["omega_bound"] = bounds.upper ? json(bounds.upper->bound) : json(nullptr);
  j["mu_lower_bound"] = bounds.lower ? json(bounds.lower->rank) : json(nullptr);
  j["upper_status"] = to_string(bounds.upper_status);
  j["lower_status"] = to_string(bounds.lower_status);
  j["certificates"] = {{"upper", bounds.upper ? certificate_to_json(*bounds.upper) : json(nullptr)},
                       {"lower", bounds.lower ? rank_certificate_to_json(*bounds.lower) : json(nullptr)}};
  if (bounds.upper_status == BoundStatus::failed) {
    rec.status = Status::violation;
    problems.push_back("upper bound: " + bounds.upper_note);
  } else if (bounds.upper_status == BoundStatus::unavailable) {
    rec.status = worse(rec.status, Status::skipped);
    problems.push_back("upper bound skipped: " + bounds.upper_note);
  }
  if (bounds.lower_status == BoundStatus::failed) {
    rec.status = Status::violation;
    problems.push_back("lower bound: " + bounds.lower_note);
  } else if (bounds.lower_status == BoundStatus::unavailable) {
    j["lower_note"] = bounds.lower_note;
  }
  if (bounds.upper && bounds.lower && bounds.lower->rank > bounds.upper->bound) {
    rec.status = Status::violation;
    problems.push_back("mu lower bound exceeds beta upper bound");
  }
  rec.equality = bounds.equality();
  j["equality"] = rec.equality;
  j["status"] = status_name(rec.status);
  if (!problems.empty()) j["notes"] = problems;
  if (rec.status == Status::violation)
    j["reproduce"] = "arbor invariants " + quoted(serialize(tree)) + " --seed " + std::to_string(seed);
  if (timings) j["timings_ms"] = times;
  return rec;
}

void print_record_text(std::ostream& os, const json& j) {
  os << "tree      " << j["tree"].get<std::string>() << "\n";
  os << "f         " << j["f"] << "\n";
  os << "f + 2     " << j["f_plus_2"] << "\n";
  os << "m         " << (j["m"].is_null() ? std::string("skipped") : j["m"].dump()) << "\n";
  os << "beta <=   " << (j["omega_bound"].is_null() ? std::string("-") : j["omega_bound"].dump()) << "  ("
     << j["upper_status"].get<std::string>() << ")\n";
  os << "mu >=     " << (j["mu_lower_bound"].is_null() ? std::string("-") : j["mu_lower_bound"].dump()) << "  ("
     << j["lower_status"].get<std::string>() << ")\n";
  if (j["equality"].get<bool>()) os << "beta = mu = m = " << j["f_plus_2"] << "\n";
  if (j.contains("notes"))
    for (const auto& n : j["notes"]) os << "note      " << n.get<std::string>() << "\n";
  if (j.contains("lower_note")) os << "note      " << j["lower_note"].get<std::string>() << "\n";
  os << "status    " << j["status"].get<std::string>() << "\n";
  if (j.contains("reproduce")) os << "reproduce " << j["reproduce"].get<std::string>() << "\n";
}

int cmd_invariants(const Options& o) {
  const auto tree = parse_tree(read_tree_text(o));
  auto rec = evaluate(tree, o.seed, o.timings);
  Output out(o.out);
  if (o.json) out.stream() << rec.data.dump() << "\n";
  else print_record_text(out.stream(), rec.data);
  return exit_code(rec.status);
}

int cmd_corpus(const Options& o) {
  if (o.count < 0) throw UsageError("--count must be >= 0");
  RandomTreeOptions opt;
  opt.max_vertices = o.max_vertices;
  opt.weight_min = o.weight_min;
  opt.weight_max = o.weight_max;
  opt.exclude = std::set<Weight>(o.exclude.begin(), o.exclude.end());
  opt.many_twigs_only = o.many_twigs;
  if (o.count > 0) {
    try {
      random_tree(opt, o.seed);
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
  }
  Output out(o.out);
  int agree = 0, skipped = 0, violations = 0, equalities = 0;
  Status overall = Status::agree;
  for (int i = 0; i < o.count; ++i) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
    auto rec = evaluate(random_tree(opt, seed), seed, o.timings);
    json head = {{"index", i}, {"seed", seed}};
    head.update(rec.data);
    rec.data = std::move(head);
    out.stream() << rec.data.dump() << "\n";
    overall = worse(overall, rec.status);
    (rec.status == Status::agree ? agree : rec.status == Status::skipped ? skipped : violations)++;
    if (rec.equality) ++equalities;
  }
  json summary = {{"records", o.count},
                  {"agree", agree},
                  {"skipped", skipped},
                  {"violations", violations},
                  {"equalities", equalities}};
  out.stream() << json{{"summary", summary}}.dump() << "\n";
  out.stream().flush();
  if (!o.json)
    std::cerr << "equalities: " << equalities << "/" << o.count << "  agree: " << agree << "  skipped: " << skipped
              << "  violations: " << violations << "\n";
  return exit_code(overall);
}

int cmd_diagram(const Options& o) {
  if (o.format != "json" && o.format != "svg") throw UsageError("unknown format " + o.format + " (json or svg)");
  const auto tree = parse_tree(read_tree_text(o));
  const Diagram d = compile(tree);
  Output out(o.out);
  if (o.format == "json") out.stream() << diagram_to_json(d).dump(o.json ? -1 : 2) << "\n";
  else out.stream() << render_svg(d);
  return kExitAgree;
}

int cmd_wirtinger(const Options& o) {
  const auto tree = parse_tree(read_tree_text(o));
  const int f2 = flattening_number(tree).value + 2;
  json j = {{"tree", serialize(tree)}, {"f_plus_2", f2}};
  Status status = Status::agree;
  std::optional<BridgeBoundCertificate> cert;
  try {
    cert = bridge_upper_bound(tree, o.seed);
    j["certificate"] = certificate_to_json(*cert);
  } catch (const PreconditionError& e) {
    j["certificate"] = nullptr;
    j["note"] = e.what();
    status = Status::skipped;
  } catch (const PropagationFailure& e) {
    j["certificate"] = nullptr;
    j["note"] = e.what();
    j["reproduce"] = "arbor wirtinger " + quoted(serialize(tree)) + " --seed " + std::to_string(o.seed);
    status = Status::violation;
  }
  if (cert) {
    const Diagram& d = cert->diagram;
    j["arcs"] = d.arc_count();
    if (d.arc_count() > kExactArcGuard) {
      j["exact"] = nullptr;
      j["exact_note"] = "more than " + std::to_string(kExactArcGuard) + " arcs";
      status = worse(status, Status::skipped);
    } else {
      const int kmax = o.kmax >= 0 ? o.kmax : f2;
      auto exact = wirtinger_exact(d, kmax);
      j["kmax"] = kmax;
      if (exact.value) {
        j["exact"] = *exact.value;
        j["exact_seeds"] = exact.seeds;
        if (*exact.value > f2) status = Status::violation;
      } else {
        j["exact"] = "exceeds kmax";
        if (kmax >= f2) status = Status::violation;
        else status = worse(status, Status::skipped);
      }
    }
  }
  j["status"] = status_name(status);
  Output out(o.out);
  out.stream() << j.dump(o.json ? -1 : 2) << "\n";
  return exit_code(status);
}

int cmd_coxeter(const Options& o) {
  const auto tree = parse_tree(read_tree_text(o));
  const auto report = meridional_rank_bounds(tree, o.seed);
  json j = rank_bounds_to_json(report);
  Status status = Status::agree;
  if (report.lower_status == BoundStatus::failed || report.upper_status == BoundStatus::failed) status = Status::violation;
  else if (report.lower_status == BoundStatus::unavailable) status = Status::skipped;
  j["status"] = status_name(status);
  Output out(o.out);
  out.stream() << j.dump(o.json ? -1 : 2) << "\n";
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Invariants of arborescent links given by weighted plane trees"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json, "Machine-readable output (JSON or JSON lines)");
  app.add_option("--out", o.out, "Write the result to this file instead of stdout");
  app.add_option("--seed", o.seed, "Random seed for tree generation and seed search");
  app.add_option("--max-vertices", o.max_vertices, "Largest random tree (corpus)")->check(CLI::PositiveNumber);
  app.add_option("--kmax", o.kmax, "Largest seed count tried by the exact Wirtinger search");
  app.add_option("--file", o.file, "Read the tree expression from this file");
  app.add_flag("--timings", o.timings, "Add per-stage timings to records");

  auto tree_arg = [&](CLI::App* sub) { sub->add_option("tree", o.tree, "Tree expression, e.g. \"(2 (3) (4))\""); };

  auto* inv = app.add_subcommand("invariants", "f, m, bridge and meridional rank bounds for one tree");
  tree_arg(inv);
  auto* corpus = app.add_subcommand("corpus", "Run the pipeline on random trees, JSON lines report");
  corpus->add_option("--count", o.count, "Number of trees")->check(CLI::NonNegativeNumber);
  corpus->add_flag("--many-twigs", o.many_twigs, "Only trees with many twigs");
  corpus->add_option("--min-weight", o.weight_min, "Smallest weight");
  corpus->add_option("--max-weight", o.weight_max, "Largest weight");
  corpus->add_option("--exclude", o.exclude, "Weights never drawn")->delimiter(',');
  auto* dia = app.add_subcommand("diagram", "Export the compiled diagram");
  tree_arg(dia);
  dia->add_option("--format", o.format, "json or svg");
  auto* wir = app.add_subcommand("wirtinger", "Bridge number upper bound and exact Wirtinger number");
  tree_arg(wir);
  auto* cox = app.add_subcommand("coxeter", "Coxeter quotient lower bound on the meridional rank");
  tree_arg(cox);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (inv->parsed()) return cmd_invariants(o);
    if (corpus->parsed()) return cmd_corpus(o);
    if (dia->parsed()) return cmd_diagram(o);
    if (wir->parsed()) return cmd_wirtinger(o);
    if (cox->parsed()) return cmd_coxeter(o);
  } catch (const ParseError& e) {
    std::cerr << "arbor: parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "arbor: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GuardExceeded& e) {
    std::cerr << "arbor: " << e.what() << "\n";
    return kExitSkipped;
  } catch (const Error& e) {
    std::cerr << "arbor: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitUsage;
}
