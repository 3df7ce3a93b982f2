#pragma once
// Command layer: a validated, JSON-round-trippable RunConfig plus the drivers
// behind each subcommand.  The argv front end in tools/ stays a thin shell so
// every code path here is callable in-process from the tests.
//
// Exit codes: 0 success, 2 configuration error (BadConfig, UnknownModel,
// OutOfRange, DimensionOverflow), 3 numerical failure (all other errors).

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "classical_opt.hpp"
#include "coherent.hpp"
#include "core.hpp"
#include "eigensolve.hpp"
#include "model.hpp"
#include "semiclassic.hpp"
#include "spinblocks.hpp"
#include "thermo.hpp"

namespace mfspin {

struct ConfigTerm {
  double coeff = 0.0;
  int a = 0, b = 0, c = 0;
  bool operator==(const ConfigTerm& o) const {
    return coeff == o.coeff && a == o.a && b == o.b && c == o.c;
  }
};

struct RunConfig {
  std::string command;            // spectrum|predict|gap|pressure|oscillator|verify|sweep
  std::string model = "curie_weiss";
  std::vector<ConfigTerm> terms;  // explicit symbol; overrides `model` when nonempty
  double gamma = 0.0;
  double alpha = 0.0;
  double beta_c = 0.0;
  double lambda = 0.0;
  int p = 2;
  std::vector<int> n;             // sites; commands accept one value or a list
  std::vector<double> beta;       // inverse temperatures (pressure)
  double window = 8.0;            // spectral window above E0
  int kmax = 3;                   // ladder k cutoff; oscillator level count - 1
  int mmax = 3;                   // ladder m cutoff
  double tol = 1e-11;             // eigensolver tolerance
  int threads = 0;                // 0 = hardware default
  std::string output;             // file path; empty = stdout
  std::string format;             // "", "json", "csv"; "" = per-command default
  double omega = 1.0;             // oscillator frequency ratio
  int k_trunc = 200;              // oscillator truncation order
  std::string sweep_param = "gamma";
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  int sweep_points = 0;

  bool operator==(const RunConfig& o) const {
    return command == o.command && model == o.model && terms == o.terms &&
           gamma == o.gamma && alpha == o.alpha && beta_c == o.beta_c &&
           lambda == o.lambda && p == o.p && n == o.n && beta == o.beta &&
           window == o.window && kmax == o.kmax && mmax == o.mmax && tol == o.tol &&
           threads == o.threads && output == o.output && format == o.format &&
           omega == o.omega && k_trunc == o.k_trunc && sweep_param == o.sweep_param &&
           sweep_from == o.sweep_from && sweep_to == o.sweep_to &&
           sweep_points == o.sweep_points;
  }
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "command", "model",   "terms",       "gamma",      "alpha",    "beta_c",
      "lambda",  "p",       "n",           "beta",       "window",   "kmax",
      "mmax",    "tol",     "threads",     "output",     "format",   "omega",
      "k_trunc", "sweep_param", "sweep_from", "sweep_to", "sweep_points"};
  return keys;
}

// --------------------------------------------------------------------------
// Config (de)serialization.  The emitted form is canonical: every key, fixed
// order, lists always as arrays, floats through fmt_float — so identical
// configs serialize byte-identically and round-trip exactly.
// --------------------------------------------------------------------------

inline std::string config_to_json(const RunConfig& c) {
  std::string s = "{\"command\": \"" + json_escape(c.command) + "\"";
  s += ", \"model\": \"" + json_escape(c.model) + "\"";
  s += ", \"terms\": [";
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    if (i) s += ", ";
    s += "[" + fmt_float(c.terms[i].coeff) + ", " + std::to_string(c.terms[i].a) +
         ", " + std::to_string(c.terms[i].b) + ", " + std::to_string(c.terms[i].c) +
         "]";
  }
  s += "], \"gamma\": " + fmt_float(c.gamma);
  s += ", \"alpha\": " + fmt_float(c.alpha);
  s += ", \"beta_c\": " + fmt_float(c.beta_c);
  s += ", \"lambda\": " + fmt_float(c.lambda);
  s += ", \"p\": " + std::to_string(c.p);
  s += ", \"n\": [";
  for (std::size_t i = 0; i < c.n.size(); ++i)
    s += (i ? ", " : "") + std::to_string(c.n[i]);
  s += "], \"beta\": [";
  for (std::size_t i = 0; i < c.beta.size(); ++i)
    s += (i ? ", " : "") + fmt_float(c.beta[i]);
  s += "], \"window\": " + fmt_float(c.window);
  s += ", \"kmax\": " + std::to_string(c.kmax);
  s += ", \"mmax\": " + std::to_string(c.mmax);
  s += ", \"tol\": " + fmt_float(c.tol);
  s += ", \"threads\": " + std::to_string(c.threads);
  s += ", \"output\": \"" + json_escape(c.output) + "\"";
  s += ", \"format\": \"" + json_escape(c.format) + "\"";
  s += ", \"omega\": " + fmt_float(c.omega);
  s += ", \"k_trunc\": " + std::to_string(c.k_trunc);
  s += ", \"sweep_param\": \"" + json_escape(c.sweep_param) + "\"";
  s += ", \"sweep_from\": " + fmt_float(c.sweep_from);
  s += ", \"sweep_to\": " + fmt_float(c.sweep_to);
  s += ", \"sweep_points\": " + std::to_string(c.sweep_points);
  s += "}";
  return s;
}

namespace detail {

inline double config_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number())
    throw BadConfig("config key '" + key + "' must be a number");
  return v.get<double>();
}

inline int config_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw BadConfig("config key '" + key + "' must be an integer");
  return v.get<int>();
}

inline std::string config_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string())
    throw BadConfig("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw BadConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw BadConfig("config must be a JSON object");
  for (const auto& item : j.items())
    if (!config_keys().count(item.key()))
      throw BadConfig("config: unknown key '" + item.key() + "'");

  RunConfig c;
  auto has = [&](const char* k) { return j.contains(k); };
  if (has("command")) c.command = detail::config_string(j["command"], "command");
  if (has("model")) c.model = detail::config_string(j["model"], "model");
  if (has("terms")) {
    if (!j["terms"].is_array()) throw BadConfig("config key 'terms' must be an array");
    for (const auto& t : j["terms"]) {
      if (!t.is_array() || t.size() != 4)
        throw BadConfig("config key 'terms' entries must be [coeff, a, b, c]");
      ConfigTerm ct;
      ct.coeff = detail::config_double(t[0], "terms[][0]");
      ct.a = detail::config_int(t[1], "terms[][1]");
      ct.b = detail::config_int(t[2], "terms[][2]");
      ct.c = detail::config_int(t[3], "terms[][3]");
      c.terms.push_back(ct);
    }
  }
  if (has("gamma")) c.gamma = detail::config_double(j["gamma"], "gamma");
  if (has("alpha")) c.alpha = detail::config_double(j["alpha"], "alpha");
  if (has("beta_c")) c.beta_c = detail::config_double(j["beta_c"], "beta_c");
  if (has("lambda")) c.lambda = detail::config_double(j["lambda"], "lambda");
  if (has("p")) c.p = detail::config_int(j["p"], "p");
  if (has("n")) {
    if (j["n"].is_array())
      for (const auto& v : j["n"]) c.n.push_back(detail::config_int(v, "n"));
    else
      c.n.push_back(detail::config_int(j["n"], "n"));
  }
  if (has("beta")) {
    if (j["beta"].is_array())
      for (const auto& v : j["beta"]) c.beta.push_back(detail::config_double(v, "beta"));
    else
      c.beta.push_back(detail::config_double(j["beta"], "beta"));
  }
  if (has("window")) c.window = detail::config_double(j["window"], "window");
  if (has("kmax")) c.kmax = detail::config_int(j["kmax"], "kmax");
  if (has("mmax")) c.mmax = detail::config_int(j["mmax"], "mmax");
  if (has("tol")) c.tol = detail::config_double(j["tol"], "tol");
  if (has("threads")) c.threads = detail::config_int(j["threads"], "threads");
  if (has("output")) c.output = detail::config_string(j["output"], "output");
  if (has("format")) c.format = detail::config_string(j["format"], "format");
  if (has("omega")) c.omega = detail::config_double(j["omega"], "omega");
  if (has("k_trunc")) c.k_trunc = detail::config_int(j["k_trunc"], "k_trunc");
  if (has("sweep_param"))
    c.sweep_param = detail::config_string(j["sweep_param"], "sweep_param");
  if (has("sweep_from")) c.sweep_from = detail::config_double(j["sweep_from"], "sweep_from");
  if (has("sweep_to")) c.sweep_to = detail::config_double(j["sweep_to"], "sweep_to");
  if (has("sweep_points")) c.sweep_points = detail::config_int(j["sweep_points"], "sweep_points");
  return c;
}

// --------------------------------------------------------------------------
// Validation and model construction.
// --------------------------------------------------------------------------

inline ModelParams config_params(const RunConfig& c) {
  ModelParams prm;
  prm.gamma = c.gamma;
  prm.alpha = c.alpha;
  prm.beta_c = c.beta_c;
  prm.lambda = c.lambda;
  prm.p = c.p;
  return prm;
}

inline NcPolynomial model_polynomial(const RunConfig& c) {
  if (!c.terms.empty()) {
    std::vector<Term> ts;
    for (const ConfigTerm& t : c.terms)
      ts.push_back({t.coeff, Monomial{t.a, t.b, t.c}});
    return NcPolynomial::from_terms(ts);
  }
  return builtin_model(c.model, config_params(c));
}

inline std::string model_label(const RunConfig& c) {
  return c.terms.empty() ? c.model : std::string("custom");
}

inline void validate(const RunConfig& c) {
  static const std::set<std::string> commands{
      "spectrum", "predict", "gap", "pressure", "oscillator", "verify", "sweep"};
  if (!commands.count(c.command))
    throw BadConfig("unknown command '" + c.command + "'");
  if (c.format != "" && c.format != "json" && c.format != "csv")
    throw BadConfig("format must be 'json' or 'csv'");
  if (c.command == "sweep") {
    if (c.format == "json") throw BadConfig("sweep emits csv only");
  } else if (c.command == "pressure") {
    // either format
  } else if (c.format == "csv") {
    throw BadConfig("command '" + c.command + "' emits json only");
  }

  for (const ConfigTerm& t : c.terms) {
    if (!std::isfinite(t.coeff)) throw BadConfig("term coefficient must be finite");
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.a + t.b + t.c > 10)
      throw BadConfig("term exponents must be >= 0 with total degree <= 10");
  }
  if (c.terms.empty()) (void)builtin_model(c.model, config_params(c));

  for (int n : c.n)
    if (n < 1) throw BadConfig("n must be >= 1");
  for (double b : c.beta)
    if (!(b > 0.0)) throw BadConfig("beta must be > 0");
  if (!(c.window > 0.0)) throw BadConfig("window must be > 0");
  if (c.kmax < 1 || c.mmax < 1) throw BadConfig("kmax and mmax must be >= 1");
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw BadConfig("tol must lie in (0, 1)");
  if (c.threads < 0) throw BadConfig("threads must be >= 0");
  if (!(c.omega >= 1.0)) throw BadConfig("omega must be >= 1");
  if (c.k_trunc < 2) throw BadConfig("k_trunc must be >= 2");

  const bool needs_n = c.command == "spectrum" || c.command == "predict" ||
                       c.command == "gap" || c.command == "sweep";
  if (needs_n && c.n.empty())
    throw BadConfig("command '" + c.command + "' needs --n");
  if ((c.command == "predict" || c.command == "sweep") && c.n.size() != 1)
    throw BadConfig("command '" + c.command + "' takes exactly one --n");
  if (c.command == "pressure") {
    if (c.beta.empty()) throw BadConfig("pressure needs --beta");
    if (c.n.size() > 1) throw BadConfig("pressure takes at most one --n");
  }
  if (c.command == "oscillator" && c.kmax > c.k_trunc)
    throw BadConfig("oscillator needs kmax <= k_trunc");
  if (c.command == "sweep") {
    static const std::set<std::string> params{"gamma", "alpha", "beta_c", "lambda"};
    if (!params.count(c.sweep_param))
      throw BadConfig("sweep_param must be one of gamma, alpha, beta_c, lambda");
    if (!c.terms.empty()) throw BadConfig("sweep varies a builtin-model parameter");
    if (c.sweep_points < 2) throw BadConfig("sweep_points must be >= 2");
    if (!(c.sweep_from <= c.sweep_to) || !std::isfinite(c.sweep_from) ||
        !std::isfinite(c.sweep_to))
      throw BadConfig("sweep range must be finite with sweep_from <= sweep_to");
  }
}

// --------------------------------------------------------------------------
// Command drivers.
// --------------------------------------------------------------------------

namespace detail {

inline SpectrumOptions spectrum_options(const RunConfig& c) {
  SpectrumOptions o;
  o.threads = c.threads;
  o.eig_tol = c.tol;
  return o;
}

inline OptimizeConfig optimize_config(const RunConfig& c) {
  OptimizeConfig o;
  o.threads = c.threads;
  return o;
}

}  // namespace detail

inline void cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  NcPolynomial poly = model_polynomial(cfg);
  std::vector<std::string> parts;
  for (int n : cfg.n) {
    SpectrumResult r =
        assemble_spectrum(poly, n, cfg.window, std::nullopt, detail::spectrum_options(cfg));
    r.model = model_label(cfg);
    parts.push_back(to_json(r));
  }
  if (parts.size() == 1) {
    out << parts[0] << "\n";
  } else {
    out << "[";
    for (std::size_t i = 0; i < parts.size(); ++i) out << (i ? ",\n " : "") << parts[i];
    out << "]\n";
  }
}

inline void cmd_predict(const RunConfig& cfg, std::ostream& out) {
  NcPolynomial poly = model_polynomial(cfg);
  const int n = cfg.n.front();
  MinimumReport report = minimize_on_ball(poly, detail::optimize_config(cfg));
  bool all_interior = true;
  for (const MinimumRecord& m : report.minima)
    all_interior = all_interior && m.location == MinimumLocation::interior;

  std::string prediction;
  if (all_interior) {
    prediction = "{\"kind\": \"interior\", \"minima\": [";
    for (std::size_t i = 0; i < report.minima.size(); ++i) {
      InteriorPrediction ip = predict_interior(poly, report.minima[i].m0, n);
      if (i) prediction += ", ";
      prediction += "{\"e0\": " + fmt_float(ip.e0) + ", \"gap\": " + fmt_float(ip.gap) + "}";
    }
    prediction += "]}";
  } else {
    LadderPrediction lp = predict(poly, report, n, cfg.kmax, cfg.mmax);
    prediction = to_json(lp);
  }
  out << "{\"model\": \"" << json_escape(model_label(cfg)) << "\", \"n\": " << n
      << ", \"report\": " << to_json(report) << ", \"prediction\": " << prediction
      << "}\n";
}

inline void cmd_gap(const RunConfig& cfg, std::ostream& out) {
  NcPolynomial poly = model_polynomial(cfg);
  MinimumReport report = minimize_on_ball(poly, detail::optimize_config(cfg));
  std::vector<std::string> parts;
  for (int n : cfg.n) {
    SpectrumResult sr =
        assemble_spectrum(poly, n, cfg.window, std::nullopt, detail::spectrum_options(cfg));
    LadderPrediction lp = predict(poly, report, n, cfg.kmax, cfg.mmax);
    parts.push_back("{\"n\": " + std::to_string(n) +
                    ", \"e0_exact\": " + fmt_float(sr.e0) +
                    ", \"e0_predicted\": " + fmt_float(lp.predicted_e0) +
                    ", \"gap_exact\": " + json_number(sr.gap) +
                    ", \"gap_predicted\": " + fmt_float(lp.predicted_gap) +
                    ", \"gap_to_next_predicted\": " + fmt_float(lp.gap_to_next) + "}");
  }
  if (parts.size() == 1) {
    out << parts[0] << "\n";
  } else {
    out << "[";
    for (std::size_t i = 0; i < parts.size(); ++i) out << (i ? ",\n " : "") << parts[i];
    out << "]\n";
  }
}

inline void cmd_pressure(const RunConfig& cfg, std::ostream& out) {
  NcPolynomial poly = model_polynomial(cfg);
  ThermoOptions topt;
  topt.threads = cfg.threads;
  std::vector<PressureResult> rows;
  for (double beta : cfg.beta) {
    PressureResult r = variational_pressure(poly, beta, topt);
    if (!cfg.n.empty()) r.exact = exact_pressure(poly, cfg.n.front(), beta, topt);
    rows.push_back(r);
  }
  if (cfg.format == "csv") {
    out << pressure_csv(rows);
    return;
  }
  out << "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PressureResult& r = rows[i];
    out << (i ? ",\n " : "") << "{\"beta\": " << fmt_float(r.beta)
        << ", \"variational\": " << fmt_float(r.variational)
        << ", \"exact\": " << (r.exact ? fmt_float(*r.exact) : std::string("null"))
        << ", \"maximizer_r\": " << fmt_float(r.maximizer_r)
        << ", \"inner_minimizer\": [" << fmt_float(r.inner_minimizer[0]) << ", "
        << fmt_float(r.inner_minimizer[1]) << ", " << fmt_float(r.inner_minimizer[2])
        << "]}";
  }
  out << "]\n";
}

inline void cmd_oscillator(const RunConfig& cfg, std::ostream& out) {
  OscillatorTruncation trunc = oscillator(cfg.omega, cfg.k_trunc);
  std::vector<double> levels = oscillator_spectrum(trunc, cfg.kmax + 1);
  double worst = 0.0;
  std::string lv = "[", pr = "[";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    double ref = (2.0 * k + 1.0) * cfg.omega;
    worst = std::max(worst, std::abs(levels[k] - ref));
    lv += (k ? ", " : "") + fmt_float(levels[k]);
    pr += (k ? ", " : "") + fmt_float(ref);
  }
  out << "{\"omega\": " << fmt_float(cfg.omega) << ", \"k_trunc\": " << cfg.k_trunc
      << ", \"levels\": " << lv << "], \"predicted\": " << pr
      << "], \"max_abs_dev\": " << fmt_float(worst) << "}\n";
}

inline void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const int n = cfg.n.front();
  out << "param,n,gap_exact,gap_predicted,e0_exact,e0_predicted\n";
  for (int i = 0; i < cfg.sweep_points; ++i) {
    const double value =
        cfg.sweep_from +
        (cfg.sweep_to - cfg.sweep_from) * double(i) / (cfg.sweep_points - 1);
    ModelParams prm = config_params(cfg);
    if (cfg.sweep_param == "gamma") prm.gamma = value;
    if (cfg.sweep_param == "alpha") prm.alpha = value;
    if (cfg.sweep_param == "beta_c") prm.beta_c = value;
    if (cfg.sweep_param == "lambda") prm.lambda = value;
    NcPolynomial poly = builtin_model(cfg.model, prm);
    SpectrumResult sr =
        assemble_spectrum(poly, n, cfg.window, std::nullopt, detail::spectrum_options(cfg));
    MinimumReport report = minimize_on_ball(poly, detail::optimize_config(cfg));
    LadderPrediction lp = predict(poly, report, n, cfg.kmax, cfg.mmax);
    out << fmt_float(value) << "," << n << "," << json_number(sr.gap) << ","
        << fmt_float(lp.predicted_gap) << "," << fmt_float(sr.e0) << ","
        << fmt_float(lp.predicted_e0) << "\n";
  }
}

// --------------------------------------------------------------------------
// verify: fast self-contained invariant suites, one per module.  Returns the
// number of violations; the runner maps any violation to exit code 3.
// --------------------------------------------------------------------------

namespace verify {

using Check = void (*)(std::ostream&, int&);

inline void req(bool ok, const std::string& what, std::ostream& out, int& bad) {
  if (!ok) {
    ++bad;
    out << "  violation: " << what << "\n";
  }
}

inline void core_suite(std::ostream& out, int& bad) {
  std::vector<double> ones(1024, 1.0);
  req(pairwise_sum(ones) == 1024.0, "pairwise_sum of ones", out, bad);
  std::vector<double> v{0.1, -2.0, 3.5, 1.25};
  std::vector<double> w = v;
  for (double& x : w) x += 7.0;
  req(std::abs(logsumexp(w) - logsumexp(v) - 7.0) < 1e-12, "logsumexp shift", out, bad);
  SignedLog s = SignedLog::from(-3.0).pow_int(3);
  req(std::abs(s.value() + 27.0) < 1e-12, "SignedLog pow", out, bad);
  req(std::abs(log_binom(20, 7) - std::log(double(binom_u64(20, 7)))) < 1e-12,
      "log_binom vs exact", out, bad);
  Mat3 r = rotation_about_axis(Vec3{0.0, 0.6, 0.8}, 0.7);
  req(is_orthogonal(r, 1e-12), "rotation orthogonal", out, bad);
  for (const Vec3& m : fibonacci_sphere(64))
    req(std::abs(m.norm() - 1.0) < 1e-12, "fibonacci_sphere unit norm", out, bad);
  req(fmt_float(1.0 / 3.0) == "3.3333333333333331e-01", "fmt_float format", out, bad);
}

inline void model_suite(std::ostream& out, int& bad) {
  ModelParams prm;
  prm.gamma = 3.0;
  prm.alpha = 0.7;
  prm.beta_c = 0.3;
  prm.lambda = 1.2;
  prm.p = 3;
  const Vec3 pts[] = {{0.3, -0.2, 0.5}, {-0.6, 0.1, 0.4}, {0.05, 0.9, -0.3}};
  for (const char* name : {"curie_weiss", "lmg", "pspin", "field"}) {
    NcPolynomial poly = builtin_model(name, prm);
    for (const Vec3& m : pts) {
      const double h = 1e-6;
      Vec3 g = poly.grad(m);
      for (int i = 0; i < 3; ++i) {
        Vec3 mp = m, mm = m;
        mp[i] += h;
        mm[i] -= h;
        double fd = (poly.eval(mp) - poly.eval(mm)) / (2.0 * h);
        req(std::abs(fd - g[i]) < 1e-5, std::string(name) + " gradient fd", out, bad);
      }
      Mat3 rot = rotation_about_axis(Vec3{1.0, 0.0, 0.0}, 0.4);
      NcPolynomial pr = poly.rotated(rot);
      Vec3 rtm = rot.transpose().apply(m);
      req(std::abs(pr.eval(m) - poly.eval(rtm)) < 1e-10,
          std::string(name) + " rotation identity", out, bad);
      req(std::abs(poly.scaled_argument(0.7).eval(m) -
                   poly.eval(Vec3{0.7 * m[0], 0.7 * m[1], 0.7 * m[2]})) < 1e-12,
          std::string(name) + " scaled argument", out, bad);
    }
  }
}

inline void spinblocks_suite(std::ostream& out, int& bad) {
  for (int n = 1; n <= 20; ++n) {
    unsigned long long total = 0;
    for (const auto& [bi, mu] : blocks(n)) total += *mu.exact * (bi.twice_j + 1);
    req(total == (1ULL << n), "multiplicity sum N=" + std::to_string(n), out, bad);
  }
  ModelParams prm;
  prm.lambda = 1.3;
  NcPolynomial field = builtin_model("field", prm);
  for (const auto& [bi, mu] : blocks(12)) {
    BandedHermitian h = build_block(field, 12, bi.twice_j);
    for (int k = 0; k <= bi.twice_j; ++k) {
      double want = -2.0 * 1.3 * (0.5 * bi.twice_j - k);
      req(std::abs(h.get(k, k).real() - want) < 1e-12, "field block diagonal", out, bad);
      if (k > 0)
        req(std::abs(h.get(k, k - 1)) < 1e-14, "field block off-diagonal", out, bad);
    }
  }
  prm.gamma = 3.0;
  NcPolynomial cw = builtin_model("curie_weiss", prm);
  for (const auto& [bi, mu] : blocks(24)) {
    BandedHermitian h = build_block(cw, 24, bi.twice_j);
    double tr = 0.0;
    for (int k = 0; k <= bi.twice_j; ++k) tr += h.get(k, k).real();
    double jj = 0.5 * bi.twice_j;
    double want = -(4.0 / 24.0) * jj * (jj + 1.0) * (bi.twice_j + 1.0) / 3.0;
    req(std::abs(tr - want) < 1e-10 * (1.0 + std::abs(want)),
        "curie_weiss block trace 2J=" + std::to_string(bi.twice_j), out, bad);
  }
}

inline void eigensolve_suite(std::ostream& out, int& bad) {
  // Dirichlet Laplacian: tridiagonal (2, -1) has eigenvalues 2 - 2cos(k pi / (d+1)).
  const int d = 50;
  BandedMatrix lap(d, 1, 1);
  for (int i = 0; i < d; ++i) {
    lap.at(i, i) = 2.0;
    if (i + 1 < d) {
      lap.at(i + 1, i) = -1.0;
      lap.at(i, i + 1) = -1.0;
    }
  }
  std::vector<double> ev = banded_eigenvalues(BandedHermitian::from_general(lap));
  for (int k = 1; k <= d; ++k)
    req(std::abs(ev[k - 1] - (2.0 - 2.0 * std::cos(k * kPi / (d + 1)))) < 1e-10,
        "laplacian eigenvalue", out, bad);

  ModelParams prm;
  prm.lambda = 0.9;
  SpectrumResult sr = assemble_spectrum(builtin_model("field", prm), 30, 6.5);
  req(std::abs(sr.e0 + 0.9 * 30.0) < 1e-9, "field ground energy", out, bad);
  req(std::abs(sr.gap - 2.0 * 0.9) < 1e-9, "field gap", out, bad);

  prm.gamma = 3.0;
  BandedHermitian blk = build_block(builtin_model("curie_weiss", prm), 40, 40);
  std::vector<EigenPair> pairs = lowest_eigenpairs(blk, 4, 1e-11, true);
  for (const EigenPair& pL : pairs) {
    std::vector<cplx> av(pL.vector->size());
    blk.matvec(pL.vector->data(), av.data());
    double resid = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i)
      resid += std::norm(av[i] - pL.value * (*pL.vector)[i]);
    req(std::sqrt(resid) < 1e-9 * blk.norm_bound(), "eigenpair residual", out, bad);
  }
}

inline void classical_opt_suite(std::ostream& out, int& bad) {
  ModelParams prm;
  prm.gamma = 3.0;
  MinimumReport rep = minimize_on_ball(builtin_model("curie_weiss", prm));
  req(rep.is_unique && rep.minima.size() == 1, "cw3 unique minimum", out, bad);
  req(std::abs(rep.global_value + 3.0) < 1e-9, "cw3 minimum value", out, bad);
  req(std::abs(rep.minima[0].omega_perp_lo - 1.0) < 1e-7 &&
          std::abs(rep.minima[0].omega_perp_hi - 3.0) < 1e-7,
      "cw3 transverse frequencies", out, bad);
  prm.gamma = 1.0;
  MinimumReport rep1 = minimize_on_ball(builtin_model("curie_weiss", prm));
  req(rep1.minima.size() == 2 && !rep1.is_unique, "cw1 twofold minimum", out, bad);
  req(std::abs(rep1.global_value + 1.25) < 1e-9, "cw1 minimum value", out, bad);

  NcPolynomial interior = NcPolynomial::from_terms(
      {{1.0, {0, 0, 2}}, {-1.0, {0, 0, 1}}, {0.25, {0, 0, 0}},
       {1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}});
  MinimumReport rep2 = minimize_on_ball(interior);
  req(rep2.minima.size() == 1 &&
          rep2.minima[0].location == MinimumLocation::interior,
      "interior minimum found", out, bad);
  req(std::abs(rep2.global_value) < 1e-9 &&
          std::abs(rep2.minima[0].m0[2] - 0.5) < 1e-6,
      "interior minimum location", out, bad);

  prm.gamma = 3.0;
  NcPolynomial cw = builtin_model("curie_weiss", prm);
  Mat3 rot = rotation_about_axis(Vec3{0.6, 0.0, 0.8}, 1.1);
  MinimumReport rep3 = minimize_on_ball(cw.rotated(rot));
  req(std::abs(rep3.global_value - rep.global_value) < 1e-9,
      "rotation invariance of the minimum", out, bad);
}

inline void semiclassic_suite(std::ostream& out, int& bad) {
  ModelParams prm;
  prm.lambda = 0.9;
  NcPolynomial field = builtin_model("field", prm);
  SpectrumResult sr = assemble_spectrum(field, 40, 7.0);
  MinimumReport rep = minimize_on_ball(field);
  LadderPrediction lp = predict(field, rep, 40, 4, 4);
  for (std::size_t i = 0; i < 9 && i < sr.levels.size() && i < lp.levels.size(); ++i)
    req(std::abs(sr.levels[i].e - lp.levels[i].energy) < 1e-8,
        "field ladder level " + std::to_string(i), out, bad);

  OscillatorTruncation tr = oscillator(1.5, 80);
  std::vector<double> ev = oscillator_spectrum(tr, 6);
  for (std::size_t k = 0; k < ev.size(); ++k)
    req(std::abs(ev[k] - (2.0 * k + 1.0) * 1.5) < 1e-6,
        "oscillator level " + std::to_string(k), out, bad);

  std::vector<double> gs = ground_state_coefficients(1.0, 10);
  req(std::abs(gs[0] - 1.0) < 1e-14, "ground state at omega=1", out, bad);
  for (std::size_t i = 1; i < gs.size(); ++i)
    req(gs[i] == 0.0, "ground state at omega=1 tail", out, bad);
  std::vector<double> g2 = ground_state_coefficients(2.0, 400);
  double norm = 0.0;
  for (double cn : g2) norm += cn * cn;
  req(std::abs(norm - 1.0) < 1e-10, "ground state normalization", out, bad);

  int viol = 0;
  for (double omx : {1.5, 3.0})
    for (int k = 1; k <= 3; ++k)
      for (int n = 2 * k; n <= 40; ++n) {
        double lhs = std::abs(oscillator_overlap(n, k, omx));
        if (lhs * lhs > expdecay_bound(n, k, omx) * (1.0 + 1e-12)) ++viol;
      }
  req(viol == 0, "overlap decay bound for k >= 1", out, bad);
}

inline void coherent_suite(std::ostream& out, int& bad) {
  SphericalQuadrature quad = spherical_quadrature(8, 15);
  double wsum = 0.0;
  for (const QuadratureNode& node : quad.nodes) wsum += node.weight;
  req(std::abs(wsum - 4.0 * kPi) < 1e-12, "quadrature weight sum", out, bad);
  auto dfact = [](int m) {
    double r = 1.0;
    for (int i = m; i >= 2; i -= 2) r *= i;
    return r;
  };
  for (int a = 0; a <= 4; a += 2)
    for (int b = 0; b <= 4 - a; b += 2)
      for (int c = 0; c <= 4 - a - b; c += 2) {
        double integral = 0.0;
        for (const QuadratureNode& node : quad.nodes) {
          Vec3 e = unit_vector(node.angle);
          integral += node.weight * std::pow(e[0], a) * std::pow(e[1], b) *
                      std::pow(e[2], c);
        }
        double want = 4.0 * kPi * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) /
                      dfact(a + b + c + 1);
        req(std::abs(integral - want) < 1e-12, "quadrature moment", out, bad);
      }

  NcPolynomial one = NcPolynomial::from_terms({{1.0, {0, 0, 0}}});
  SphericalQuadrature q10 = spherical_quadrature_for_degree(2 * 10);
  DenseHermitian res = quantize(one, 10, 10, q10);
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j)
      req(std::abs(res.at(i, j) - (i == j ? cplx(10.0, 0.0) : cplx(0.0, 0.0))) < 1e-10,
          "resolution of unity", out, bad);

  for (int twice_j : {8, 40})
    for (double theta : {0.3, 0.9, 1.5})
      for (double delta : {0.2, 1.0}) {
        ChernoffTail t = chernoff_tail(twice_j, theta, delta);
        req(t.lhs <= t.rhs * (1.0 + 1e-12), "chernoff tail", out, bad);
      }

  for (int k = 0; k <= 5; ++k)
    for (int kp = k; kp <= 5; ++kp)
      for (double theta = 0.1; theta < 1.6; theta += 0.3) {
        double lhs = std::abs(rotated_overlap(30, k, kp, SphereAngle{theta, 0.4}));
        req(lhs <= rotated_overlap_bound(30, k, kp, SphereAngle{theta, 0.4}) *
                       (1.0 + 1e-10),
            "rotated overlap bound", out, bad);
      }

  std::vector<Vec3> dirs{{0.0, 0.0, 1.0},
                         {std::sin(0.5), 0.0, std::cos(0.5)},
                         {std::sin(0.5) * std::cos(2.1), std::sin(0.5) * std::sin(2.1),
                          std::cos(0.5)}};
  GramResult gr = gram(16, 2, dirs);
  std::vector<double> ev = gr.matrix.eigenvalues();
  for (double e : ev)
    req(e >= 1.0 - gr.radius - 1e-9 && e <= 1.0 + gr.radius + 1e-9,
        "gram eigenvalue containment", out, bad);

  std::vector<cplx> coef = coherent_coefficients(12, SphereAngle{0.8, 0.0});
  for (int n = 0; n <= 12; ++n)
    req(std::abs(rotated_overlap(12, 0, n, SphereAngle{0.8, 0.0}) - coef[n]) < 1e-12,
        "rotated overlap k=0 column", out, bad);
}

inline void thermo_suite(std::ostream& out, int& bad) {
  req(binary_entropy(0.0) == std::log(2.0) && binary_entropy(1.0) == 0.0,
      "binary entropy endpoints", out, bad);
  ModelParams prm;
  prm.lambda = 1.0;
  NcPolynomial field = builtin_model("field", prm);
  double target = std::log(2.0 * std::cosh(1.0));
  req(std::abs(exact_pressure(field, 40, 1.0) - target) < 1e-8,
      "field exact pressure", out, bad);
  req(std::abs(variational_pressure(field, 1.0).variational - target) < 1e-8,
      "field variational pressure", out, bad);

  NcPolynomial g = NcPolynomial::from_terms({{-1.0, {0, 0, 2}}, {-0.3, {1, 0, 0}}});
  SphericalQuadrature quad = spherical_quadrature_for_degree(2 * 16 + 2);
  DenseHermitian a = quantize(g, 16, 16, quad);
  BerezinLiebResult bl = berezin_lieb(a, g, 16, 1.0, quad);
  req(bl.lower_int < bl.trace && bl.trace < bl.upper_int, "berezin-lieb sandwich",
      out, bad);
}

}  // namespace verify

inline int cmd_verify(const RunConfig&, std::ostream& out) {
  struct Suite {
    const char* name;
    verify::Check fn;
  };
  const Suite suites[] = {
      {"core", verify::core_suite},           {"model", verify::model_suite},
      {"spinblocks", verify::spinblocks_suite}, {"eigensolve", verify::eigensolve_suite},
      {"classical_opt", verify::classical_opt_suite},
      {"semiclassic", verify::semiclassic_suite},
      {"coherent", verify::coherent_suite},   {"thermo", verify::thermo_suite}};
  int bad = 0;
  for (const Suite& s : suites) {
    int before = bad;
    s.fn(out, bad);
    out << (bad == before ? "ok " : "FAIL ") << s.name << "\n";
  }
  out << (bad == 0 ? "verify: all suites passed\n"
                   : "verify: " + std::to_string(bad) + " violation(s)\n");
  return bad;
}

// --------------------------------------------------------------------------
// Dispatch.
// --------------------------------------------------------------------------

inline int execute(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  if (cfg.command == "spectrum") cmd_spectrum(cfg, out);
  else if (cfg.command == "predict") cmd_predict(cfg, out);
  else if (cfg.command == "gap") cmd_gap(cfg, out);
  else if (cfg.command == "pressure") cmd_pressure(cfg, out);
  else if (cfg.command == "oscillator") cmd_oscillator(cfg, out);
  else if (cfg.command == "sweep") cmd_sweep(cfg, out);
  else if (cfg.command == "verify") return cmd_verify(cfg, out) == 0 ? 0 : 3;
  return 0;
}

inline int exit_code_for(const Error& e) {
  static const std::set<std::string> config_kinds{"BadConfig", "UnknownModel",
                                                  "OutOfRange", "DimensionOverflow"};
  return config_kinds.count(e.kind()) ? 2 : 3;
}

// Full runner: output-file handling plus error -> exit-code mapping.
inline int run_command(const RunConfig& cfg, std::ostream& err = std::cerr) {
  try {
    if (!cfg.output.empty()) {
      std::ofstream file(cfg.output);
      if (!file) throw BadConfig("cannot open output file '" + cfg.output + "'");
      return execute(cfg, file);
    }
    return execute(cfg, std::cout);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace mfspin
