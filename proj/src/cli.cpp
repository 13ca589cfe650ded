#include "ruinsim/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ruinsim/asymptotics.hpp"
#include "ruinsim/errors.hpp"
#include "ruinsim/tailcalc.hpp"

#ifndef RUINSIM_VERSION
#define RUINSIM_VERSION "unknown"
#endif

namespace ruinsim {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

std::int64_t integer(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(where + ": expected an integer");
}

std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  const std::int64_t v = integer(j.at(key), where + "." + key);
  if (v < 0) throw ConfigError(where + "." + key + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::vector<int> int_list(const json& v, const std::string& where) {
  std::vector<int> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(static_cast<int>(integer(e, where)));
  } else {
    out.push_back(static_cast<int>(integer(v, where)));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

TailDistribution parse_law(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError(where + ": expected an object with a string 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "rvstar") {
      check_keys(j, where, {"kind", "alpha", "beta", "scale"});
      return TailDistribution::rv_star(number(j, "alpha", where), number(j, "beta", where),
                                       number(j, "scale", where));
    }
    if (kind == "pareto") {
      check_keys(j, where, {"kind", "alpha", "scale"});
      return TailDistribution::pareto(number(j, "alpha", where), number(j, "scale", where));
    }
    if (kind == "lognormal") {
      check_keys(j, where, {"kind", "mu", "sigma"});
      return TailDistribution::lognormal(number(j, "mu", where), number(j, "sigma", where));
    }
    if (kind == "shifted") {
      check_keys(j, where, {"kind", "base", "offset"});
      if (!j.contains("base")) throw ConfigError(where + ": missing 'base'");
      return TailDistribution::shifted(parse_law(j.at("base"), where + ".base"),
                                       number(j, "offset", where));
    }
  } catch (const SpecError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

json law_json(const TailDistribution& d) {
  json base = std::visit(
      [](const auto& law) -> json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, RvStarLaw>) {
          return {{"kind", "rvstar"}, {"alpha", law.alpha}, {"beta", law.beta}, {"scale", law.scale}};
        } else if constexpr (std::is_same_v<T, ParetoLaw>) {
          return {{"kind", "pareto"}, {"alpha", law.alpha}, {"scale", law.scale}};
        } else {
          return {{"kind", "lognormal"}, {"mu", law.mu}, {"sigma", law.sigma}};
        }
      },
      d.base());
  if (!d.is_shifted()) return base;
  return {{"kind", "shifted"}, {"base", base}, {"offset", d.offset()}};
}

ExperimentConfig parse_model(const json& j) {
  const std::string where = "model";
  check_keys(j, where, {"f", "g", "dependence", "alpha", "horizon", "truncation_tol"});
  if (!j.contains("f") || !j.contains("g")) throw ConfigError("model: 'f' and 'g' are required");
  ExperimentConfig c{ModelSpec{parse_law(j.at("f"), "model.f"), parse_law(j.at("g"), "model.g")},
                     {}, {}, {}, {}};

  c.model.dependence = Independent{};
  if (j.contains("dependence")) {
    const json& d = j.at("dependence");
    if (!d.is_object() || !d.contains("kind") || !d.at("kind").is_string()) {
      throw ConfigError("model.dependence: expected an object with a string 'kind'");
    }
    const auto kind = d.at("kind").get<std::string>();
    if (kind == "independent") {
      check_keys(d, "model.dependence", {"kind"});
    } else if (kind == "fgm") {
      check_keys(d, "model.dependence", {"kind", "theta"});
      c.model.dependence = FgmDependence{number(d, "theta", "model.dependence")};
    } else {
      throw ConfigError("model.dependence: unknown kind '" + kind + "'");
    }
  }

  if (j.contains("alpha")) {
    c.model.alpha = number(j, "alpha", where);
  } else {
    c.model.alpha = classify(c.model.f, c.model.g).effective_alpha;
  }

  const double tol = number_or(j, "truncation_tol", 1e-6, where);
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("model.truncation_tol: must lie in (0, 1)");
  c.horizons = {1};
  c.model.horizon = FiniteHorizon{1};
  if (j.contains("horizon")) {
    const json& h = j.at("horizon");
    if (h.is_string()) {
      if (h.get<std::string>() != "infinite") {
        throw ConfigError("model.horizon: expected an integer, a list, or \"infinite\"");
      }
      c.horizons.clear();
      c.model.horizon = InfiniteHorizon{tol};
    } else {
      c.horizons = int_list(h, "model.horizon");
    }
  }
  if (!c.horizons.empty()) {
    for (int n : c.horizons) {
      if (n < 1) throw ConfigError("model.horizon: horizons must be at least 1");
    }
    c.model.horizon = FiniteHorizon{*std::max_element(c.horizons.begin(), c.horizons.end())};
  } else {
    c.model.horizon = InfiniteHorizon{tol};
  }
  return c;
}

void parse_run(const json& j, RunConfig& r) {
  const std::string where = "run";
  check_keys(j, where, {"samples", "moment_samples", "seed", "workers", "x_grid"});
  r.samples = count_or(j, "samples", r.samples, where);
  r.moment_samples = count_or(j, "moment_samples", r.moment_samples, where);
  r.seed = count_or(j, "seed", r.seed, where);
  r.workers = static_cast<unsigned>(count_or(j, "workers", r.workers, where));
  if (j.contains("x_grid")) {
    const json& g = j.at("x_grid");
    if (g.is_array()) {
      for (const auto& v : g) {
        if (!v.is_number()) throw ConfigError("run.x_grid: expected numbers");
        r.x_grid.points.push_back(v.get<double>());
      }
      if (r.x_grid.points.empty()) throw ConfigError("run.x_grid: empty list");
      if (!std::is_sorted(r.x_grid.points.begin(), r.x_grid.points.end())) {
        throw ConfigError("run.x_grid: points must be ascending");
      }
    } else {
      check_keys(g, "run.x_grid", {"points", "quantile_lo", "quantile_hi"});
      r.x_grid.count = static_cast<int>(count_or(g, "points", 20, "run.x_grid"));
      r.x_grid.quantile_lo = number_or(g, "quantile_lo", 1e-5, "run.x_grid");
      r.x_grid.quantile_hi = number_or(g, "quantile_hi", 1e-1, "run.x_grid");
    }
  }
}

void parse_verify(const json& j, VerifyConfig& v) {
  const std::string where = "verify";
  check_keys(j, where, {"law", "n_list", "n_max", "eps", "potter_b", "potter_eps", "ratio_points",
                        "tolerance"});
  if (j.contains("law")) {
    if (!j.at("law").is_string()) throw ConfigError("verify.law: expected \"f\" or \"g\"");
    v.law = j.at("law").get<std::string>();
    if (v.law != "f" && v.law != "g") throw ConfigError("verify.law: expected \"f\" or \"g\"");
  }
  if (j.contains("n_list")) v.n_list = int_list(j.at("n_list"), "verify.n_list");
  if (j.contains("n_max")) v.n_max = static_cast<int>(integer(j.at("n_max"), "verify.n_max"));
  v.eps = number_or(j, "eps", v.eps, where);
  v.potter_b = number_or(j, "potter_b", v.potter_b, where);
  v.potter_eps = number_or(j, "potter_eps", v.potter_eps, where);
  if (j.contains("ratio_points")) {
    v.ratio_points = static_cast<int>(integer(j.at("ratio_points"), "verify.ratio_points"));
  }
  if (j.contains("tolerance")) v.tolerance = number(j, "tolerance", where);
}

void parse_output(const json& j, OutputConfig& o) {
  check_keys(j, "output", {"csv_path", "svg_path"});
  for (const auto* key : {"csv_path", "svg_path"}) {
    if (j.contains(key) && !j.at(key).is_string()) {
      throw ConfigError(std::string("output.") + key + ": expected a string");
    }
  }
  if (j.contains("csv_path")) o.csv_path = j.at("csv_path").get<std::string>();
  if (j.contains("svg_path")) o.svg_path = j.at("svg_path").get<std::string>();
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError("cannot write " + path);
  file << body;
  if (!file) throw ConfigError("failed writing " + path);
}

MonteCarloOptions tail_options(const ExperimentConfig& c) {
  MonteCarloOptions mc;
  mc.samples = c.run.samples;
  mc.seed = c.run.seed;
  mc.workers = c.run.workers;
  return mc;
}

MonteCarloOptions moment_options(const ExperimentConfig& c) {
  MonteCarloOptions mc = tail_options(c);
  mc.samples = c.run.moment_samples;
  return mc;
}

std::vector<double> resolve_grid(const ExperimentConfig& c) {
  if (!c.run.x_grid.points.empty()) return c.run.x_grid.points;
  return default_x_grid(c.model.f, c.model.g, c.run.x_grid.count, c.run.x_grid.quantile_hi,
                        c.run.x_grid.quantile_lo);
}

struct RatioRun {
  std::vector<RatioDiagnostic> rows;
  std::vector<PlotSeries> plot;
};

RatioRun ratio_run(const ExperimentConfig& c) {
  certify(c.model.f, c.model.g, c.model.alpha);
  const auto grid = resolve_grid(c);
  std::vector<ModelSpec> specs;
  std::vector<TailSweep> sweeps;
  if (c.horizons.empty()) {
    specs.push_back(c.model);
    sweeps.push_back(estimate_tails(c.model, grid, tail_options(c)));
  } else {
    for (int n : c.horizons) {
      ModelSpec s = c.model;
      s.horizon = FiniteHorizon{n};
      specs.push_back(s);
    }
    sweeps = estimate_tails_prefix(c.model, c.horizons, grid, tail_options(c));
  }
  std::vector<std::vector<RatioDiagnostic>> by_target[2];
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto k = coefficients(specs[i], moment_options(c));
    for (Target t : {Target::SumS, Target::MaxM}) {
      by_target[t == Target::SumS ? 0 : 1].push_back(ratio_join(sweeps[i].at(t), [&](double x) {
        return asymptotic_tail(k, t, c.model.f, c.model.g, x);
      }));
    }
  }
  RatioRun run;
  for (const auto& group : by_target) {
    for (const auto& rows : group) run.rows.insert(run.rows.end(), rows.begin(), rows.end());
  }
  for (const auto& rows : by_target[1]) {
    PlotSeries s;
    s.label = "n = " + horizon_label(rows.front().estimate.horizon);
    for (const auto& r : rows) {
      s.x.push_back(r.x);
      s.y.push_back(r.ratio);
    }
    run.plot.push_back(std::move(s));
  }
  return run;
}

std::string ratio_csv(const ExperimentConfig& c, std::string_view command,
                      const std::vector<RatioDiagnostic>& rows) {
  std::string body = csv_header_comment(c, command) + estimate_csv_header();
  for (const auto& r : rows) body += estimate_csv_row(r);
  return body;
}

void emit(const ExperimentConfig& c, const std::string& body, std::ostream& out) {
  if (c.output.csv_path.empty()) {
    out << body;
  } else {
    write_file(c.output.csv_path, body);
  }
}

int cmd_simulate(const ExperimentConfig& c, std::string_view command, std::ostream& out) {
  const auto run = ratio_run(c);
  emit(c, ratio_csv(c, command, run.rows), out);
  if (!c.output.svg_path.empty()) {
    write_file(c.output.svg_path, ratio_svg(run.plot, "Pr(M > x) / asymptotic"));
  }
  if (!c.output.csv_path.empty()) {
    out << command << ": " << run.rows.size() << " rows written to " << c.output.csv_path << '\n';
  }
  return 0;
}

int cmd_coeffs(const ExperimentConfig& c, std::ostream& out) {
  certify(c.model.f, c.model.g, c.model.alpha);
  std::vector<ModelSpec> specs;
  if (c.horizons.empty()) {
    specs.push_back(c.model);
  } else {
    for (int n : c.horizons) {
      ModelSpec s = c.model;
      s.horizon = FiniteHorizon{n};
      specs.push_back(s);
    }
  }
  std::string body = csv_header_comment(c, "coeffs") + "horizon,alpha,mu_alpha,A,B,C,se_B,se_C\n";
  for (const auto& s : specs) {
    const auto k = coefficients(s, moment_options(c));
    body += horizon_label(k.horizon) + ',' + format_number(k.alpha) + ',' +
            format_number(k.mu_alpha) + ',' + format_number(k.a) + ',' + format_number(k.b) +
            ',' + format_number(k.c) + ',' + format_number(k.se_b) + ',' +
            format_number(k.se_c) + '\n';
  }
  emit(c, body, out);
  return 0;
}

std::string report_csv(const ExperimentConfig& c, const VerificationReport& rep) {
  std::string body = csv_header_comment(c, "verify " + rep.lemma_id) +
                     "lemma,n,x,observed,predicted,ratio,se,hits\n";
  for (const auto& r : rep.rows) {
    body += rep.lemma_id + ',' + std::to_string(r.n) + ',' + format_number(r.x) + ',' +
            format_number(r.observed) + ',' + format_number(r.predicted) + ',' +
            format_number(r.ratio()) + ',' + format_number(r.se) + ',' + std::to_string(r.hits) +
            '\n';
  }
  return body;
}

std::string summary_line(const std::string& id, bool pass, double statistic, double tolerance) {
  return id + (pass ? " PASS" : " FAIL") + " statistic=" + format_number(statistic) +
         " tolerance=" + format_number(tolerance);
}

int cmd_verify(const ExperimentConfig& c, const std::string& lemma, std::ostream& out) {
  if (lemma == "ratio") {
    const auto run = ratio_run(c);
    const double tol = c.verify.tolerance.value_or(0.10);
    const std::size_t points = static_cast<std::size_t>(std::max(c.verify.ratio_points, 1));
    double worst = 0.0;
    for (std::size_t i = 0; i < run.rows.size(); ++i) {
      // Rows come in blocks of one grid per (target, horizon).
      const std::size_t grid = run.plot.front().x.size();
      if (i % grid + points >= grid) worst = std::max(worst, std::abs(run.rows[i].ratio - 1.0));
    }
    emit(c, ratio_csv(c, "verify ratio", run.rows), out);
    if (!c.output.svg_path.empty()) {
      write_file(c.output.svg_path, ratio_svg(run.plot, "Pr(M > x) / asymptotic"));
    }
    const bool pass = worst <= tol;
    out << summary_line("ratio", pass, worst, tol) << '\n';
    return pass ? 0 : 1;
  }

  if (std::isnan(c.model.alpha)) {
    throw ConfigError("model.alpha is required when the pair is not certified");
  }
  const auto& v = c.verify;
  const TailDistribution& law = v.law == "f" ? c.model.f : c.model.g;
  const double alpha = c.model.alpha;
  const std::vector<double> grid = c.run.x_grid.points;
  VerificationReport rep;
  if (lemma == "c2") {
    rep = verify_product(c.model.f, c.model.g, alpha, grid, v.tolerance.value_or(0.1));
  } else if (lemma == "l2") {
    rep = verify_sum({LogTransformTail(c.model.f), LogTransformTail(c.model.g)}, alpha, grid,
                     v.tolerance.value_or(0.1));
  } else if (lemma == "pakes") {
    rep = verify_pakes(LogTransformTail(law), alpha, grid, v.tolerance.value_or(0.1));
  } else if (lemma == "kesten") {
    rep = verify_kesten(c.model.g, alpha, v.eps, v.n_max, grid, tail_options(c));
  } else if (lemma == "remainder") {
    rep = verify_remainder(c.model, v.n_list, grid, tail_options(c), v.tolerance.value_or(0.05));
  } else {
    rep = verify_potter(LogTransformTail(law), alpha, v.potter_b, v.potter_eps);
  }
  if (v.tolerance) {
    rep.tolerance = *v.tolerance;
    rep.finalize();
  }
  emit(c, report_csv(c, rep), out);
  std::string line = summary_line(rep.lemma_id, rep.pass, rep.max_rel_err, rep.tolerance);
  if (rep.x0) line += " x0=" + format_number(*rep.x0);
  if (rep.monotone) line += std::string(" monotone=") + (*rep.monotone ? "true" : "false");
  if (rep.zero_hit_cells > 0) line += " zero_hit_cells=" + std::to_string(rep.zero_hit_cells);
  out << line << '\n';
  return rep.pass ? 0 : 1;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + e.what());
  }
  check_keys(doc, "config", {"model", "run", "verify", "output"});
  if (!doc.contains("model")) throw ConfigError("config: missing 'model'");
  ExperimentConfig c = parse_model(doc.at("model"));
  if (doc.contains("run")) parse_run(doc.at("run"), c.run);
  if (doc.contains("verify")) parse_verify(doc.at("verify"), c.verify);
  if (doc.contains("output")) parse_output(doc.at("output"), c.output);
  return c;
}

std::string canonical_json(const ExperimentConfig& c) {
  json model;
  model["f"] = law_json(c.model.f);
  model["g"] = law_json(c.model.g);
  if (const auto* fgm = std::get_if<FgmDependence>(&c.model.dependence)) {
    model["dependence"] = {{"kind", "fgm"}, {"theta", fgm->theta}};
  } else {
    model["dependence"] = {{"kind", "independent"}};
  }
  model["alpha"] = c.model.alpha;
  if (c.horizons.empty()) {
    model["horizon"] = "infinite";
    model["truncation_tol"] = std::get<InfiniteHorizon>(c.model.horizon).truncation_tol;
  } else {
    model["horizon"] = c.horizons;
  }
  json grid;
  if (c.run.x_grid.points.empty()) {
    grid = {{"points", c.run.x_grid.count},
            {"quantile_lo", c.run.x_grid.quantile_lo},
            {"quantile_hi", c.run.x_grid.quantile_hi}};
  } else {
    grid = c.run.x_grid.points;
  }
  const json run = {{"samples", c.run.samples},
                    {"moment_samples", c.run.moment_samples},
                    {"seed", c.run.seed},
                    {"x_grid", grid}};
  json verify = {{"law", c.verify.law},         {"n_list", c.verify.n_list},
                 {"n_max", c.verify.n_max},     {"eps", c.verify.eps},
                 {"potter_b", c.verify.potter_b}, {"potter_eps", c.verify.potter_eps},
                 {"ratio_points", c.verify.ratio_points}};
  verify["tolerance"] = c.verify.tolerance ? json(*c.verify.tolerance) : json(nullptr);
  return json{{"model", model}, {"run", run}, {"verify", verify}}.dump();
}

std::string fnv1a64_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string csv_header_comment(const ExperimentConfig& config, std::string_view command) {
  return "# ruinsim " RUINSIM_VERSION " command=" + std::string(command) +
         " config_fnv1a64=" + fnv1a64_hex(canonical_json(config)) +
         " seed=" + std::to_string(config.run.seed) + '\n';
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string estimate_csv_header() {
  return "target,horizon,x,p_hat,se,ci_lo,ci_hi,asymptotic,ratio,ratio_lo,ratio_hi,samples,"
         "method\n";
}

std::string estimate_csv_row(const RatioDiagnostic& r) {
  const auto& e = r.estimate;
  return to_string(e.target) + ',' + horizon_label(e.horizon) + ',' + format_number(r.x) + ',' +
         format_number(e.p_hat) + ',' + format_number(e.se) + ',' + format_number(e.ci_lo) + ',' +
         format_number(e.ci_hi) + ',' + format_number(r.asymptotic) + ',' +
         format_number(r.ratio) + ',' + format_number(r.ratio_lo) + ',' +
         format_number(r.ratio_hi) + ',' + std::to_string(e.samples) + ',' + to_string(e.method) +
         '\n';
}

std::string ratio_svg(const std::vector<PlotSeries>& series, std::string_view title) {
  constexpr double kW = 720, kH = 440, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b"};
  double xlo = std::numeric_limits<double>::infinity();
  double xhi = 0.0;
  double ylo = 0.9;
  double yhi = 1.1;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!(xhi > xlo)) {
    xlo = 1.0;
    xhi = 10.0;
  }
  const double lx0 = std::log10(xlo);
  const double lx1 = std::log10(xhi);
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const auto px = [&](double x) { return kLeft + (std::log10(x) - lx0) / (lx1 - lx0) * (kW - kLeft - kRight); };
  const auto py = [&](double y) { return kTop + (yhi - y) / (yhi - ylo) * (kH - kTop - kBottom); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight
      << "\" height=\"" << kH - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(std::ceil(lx0 - 1e-9)); k <= static_cast<int>(std::floor(lx1 + 1e-9)); ++k) {
    const double x = px(std::pow(10.0, k));
    svg << "<line x1=\"" << x << "\" y1=\"" << kH - kBottom << "\" x2=\"" << x << "\" y2=\""
        << kH - kBottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << kH - kBottom + 18 << "\" text-anchor=\"middle\">1e"
        << k << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ylo + (yhi - ylo) * i / 4.0;
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << kLeft << "\" y2=\""
        << py(y) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << format_number(std::round(y * 1000.0) / 1000.0) << "</text>\n";
  }
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << py(1.0) << "\" x2=\"" << kW - kRight
      << "\" y2=\"" << py(1.0) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\">x</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!(series[s].x[i] > 0.0) || !std::isfinite(series[s].y[i])) continue;
      svg << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
    }
    svg << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s) + 8.0;
    svg << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4 << "\">"
        << xml_escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo and quadrature checks of tail asymptotics for discounted aggregate "
               "losses",
               "ruinsim"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", RUINSIM_VERSION);

  std::string config_path;
  std::string out_path;
  std::string svg_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> moment_samples;
  std::optional<unsigned> workers;
  std::vector<int> horizons;
  bool infinite = false;
  std::optional<double> theta;
  std::optional<double> tolerance;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_path, "CSV output path (stdout when absent)");
  app.add_option("--svg", svg_path, "SVG ratio plot path");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--samples", samples, "Monte Carlo paths for tail estimates and checks");
  app.add_option("--moment-samples", moment_samples, "Monte Carlo paths for coefficient moments");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("-n", horizons, "finite horizon(s), comma separated")->delimiter(',');
  app.add_flag("--infinite", infinite, "infinite horizon");
  app.add_option("--theta", theta, "FGM coupling parameter");
  app.add_option("--tolerance", tolerance, "verification tolerance");

  auto* simulate = app.add_subcommand("simulate", "tail estimates and ratio diagnostics");
  auto* coeffs = app.add_subcommand("coeffs", "asymptotic coefficients");
  auto* verify = app.add_subcommand("verify", "numeric check of one tail lemma");
  std::string lemma;
  verify->add_option("lemma", lemma, "check id")
      ->required()
      ->check(CLI::IsMember({"c2", "l2", "pakes", "kesten", "remainder", "potter", "ratio"}));
  auto* fgm = app.add_subcommand("fgm", "ratio diagnostics under FGM coupling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig c = parse_config(read_file(config_path));
    if (!out_path.empty()) c.output.csv_path = out_path;
    if (!svg_path.empty()) c.output.svg_path = svg_path;
    if (seed) c.run.seed = *seed;
    if (samples) c.run.samples = *samples;
    if (moment_samples) c.run.moment_samples = *moment_samples;
    if (workers) c.run.workers = *workers;
    if (tolerance) c.verify.tolerance = *tolerance;
    if (infinite && !horizons.empty()) throw ConfigError("-n and --infinite are exclusive");
    if (!horizons.empty()) {
      for (int n : horizons) {
        if (n < 1) throw ConfigError("-n: horizons must be at least 1");
      }
      c.horizons = horizons;
      c.model.horizon = FiniteHorizon{*std::max_element(horizons.begin(), horizons.end())};
    }
    if (infinite) {
      const auto* inf = std::get_if<InfiniteHorizon>(&c.model.horizon);
      c.horizons.clear();
      c.model.horizon = InfiniteHorizon{inf ? inf->truncation_tol : 1e-6};
    }
    if (theta) c.model.dependence = FgmDependence{*theta};
    if (fgm->parsed() && !std::holds_alternative<FgmDependence>(c.model.dependence)) {
      throw ConfigError("fgm: --theta or an fgm dependence in the config is required");
    }

    if (simulate->parsed()) return cmd_simulate(c, "simulate", out);
    if (coeffs->parsed()) return cmd_coeffs(c, out);
    if (fgm->parsed()) return cmd_simulate(c, "fgm", out);
    if (verify->parsed()) return cmd_verify(c, lemma, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const AssumptionError& e) {
    err << "refused: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace ruinsim
