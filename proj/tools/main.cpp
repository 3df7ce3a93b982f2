// mfspin: mean-field spin spectra, semiclassical ladders, and pressures.
//
// One subcommand per invocation; identical keys are accepted from a JSON file
// via --config, with explicit flags taking precedence.  Exit codes: 0 success,
// 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mfspin/cli.hpp"

namespace {

mfspin::ConfigTerm parse_term(const std::string& text) {
  std::istringstream in(text);
  mfspin::ConfigTerm t;
  char c1 = 0, c2 = 0, c3 = 0;
  if (!(in >> t.coeff >> c1 >> t.a >> c2 >> t.b >> c3 >> t.c) || c1 != ',' ||
      c2 != ',' || c3 != ',' || (in >> std::ws, !in.eof()))
    throw mfspin::BadConfig("--terms entries must look like 'coeff,a,b,c': got '" +
                            text + "'");
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field quantum spin models: exact block spectra, "
               "semiclassical predictions, and pressures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string model, output, format, sweep_param;
  std::vector<std::string> term_strings;
  double gamma = 0, alpha = 0, beta_c = 0, lambda = 0, window = 0, tol = 0, omega = 0;
  double sweep_from = 0, sweep_to = 0;
  int p = 0, kmax = 0, mmax = 0, threads = 0, k_trunc = 0, sweep_points = 0;
  std::vector<int> n;
  std::vector<double> beta;

  auto* o_config = app.add_option("--config", config_path, "JSON config file; flags override");
  auto* o_model = app.add_option("--model", model, "builtin symbol: curie_weiss, lmg, pspin, field");
  auto* o_terms = app.add_option("--terms", term_strings, "explicit symbol term 'coeff,a,b,c' (repeatable)");
  auto* o_gamma = app.add_option("--gamma", gamma, "model parameter gamma");
  auto* o_alpha = app.add_option("--alpha", alpha, "model parameter alpha");
  auto* o_beta_c = app.add_option("--beta_c", beta_c, "model parameter beta_c");
  auto* o_lambda = app.add_option("--lambda", lambda, "model parameter lambda");
  auto* o_p = app.add_option("--p", p, "pspin exponent");
  auto* o_n = app.add_option("--n", n, "number of sites (repeatable)");
  auto* o_beta = app.add_option("--beta", beta, "inverse temperature (repeatable)");
  auto* o_window = app.add_option("--window", window, "energy window above the ground state");
  auto* o_kmax = app.add_option("--kmax", kmax, "ladder k cutoff / oscillator level count - 1");
  auto* o_mmax = app.add_option("--mmax", mmax, "ladder m cutoff");
  auto* o_tol = app.add_option("--tol", tol, "eigensolver tolerance");
  auto* o_threads = app.add_option("--threads", threads, "worker threads (0 = auto)");
  auto* o_output = app.add_option("--output", output, "write to file instead of stdout");
  auto* o_format = app.add_option("--format", format, "output format: json or csv");
  auto* o_omega = app.add_option("--omega", omega, "oscillator frequency ratio (>= 1)");
  auto* o_k_trunc = app.add_option("--k_trunc", k_trunc, "oscillator truncation order");
  auto* o_sweep_param = app.add_option("--sweep_param", sweep_param, "parameter swept: gamma, alpha, beta_c, lambda");
  auto* o_sweep_from = app.add_option("--sweep_from", sweep_from, "sweep start value");
  auto* o_sweep_to = app.add_option("--sweep_to", sweep_to, "sweep end value");
  auto* o_sweep_points = app.add_option("--sweep_points", sweep_points, "sweep grid size");

  for (const char* name : {"spectrum", "predict", "gap", "pressure", "oscillator",
                           "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  mfspin::RunConfig cfg;
  try {
    if (o_config->count()) {
      std::ifstream in(config_path);
      if (!in)
        throw mfspin::BadConfig("cannot read config file '" + config_path + "'");
      std::ostringstream text;
      text << in.rdbuf();
      cfg = mfspin::config_from_json(text.str());
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (o_model->count()) cfg.model = model;
    if (o_terms->count()) {
      cfg.terms.clear();
      for (const std::string& t : term_strings) cfg.terms.push_back(parse_term(t));
    }
    if (o_gamma->count()) cfg.gamma = gamma;
    if (o_alpha->count()) cfg.alpha = alpha;
    if (o_beta_c->count()) cfg.beta_c = beta_c;
    if (o_lambda->count()) cfg.lambda = lambda;
    if (o_p->count()) cfg.p = p;
    if (o_n->count()) cfg.n = n;
    if (o_beta->count()) cfg.beta = beta;
    if (o_window->count()) cfg.window = window;
    if (o_kmax->count()) cfg.kmax = kmax;
    if (o_mmax->count()) cfg.mmax = mmax;
    if (o_tol->count()) cfg.tol = tol;
    if (o_threads->count()) cfg.threads = threads;
    if (o_output->count()) cfg.output = output;
    if (o_format->count()) cfg.format = format;
    if (o_omega->count()) cfg.omega = omega;
    if (o_k_trunc->count()) cfg.k_trunc = k_trunc;
    if (o_sweep_param->count()) cfg.sweep_param = sweep_param;
    if (o_sweep_from->count()) cfg.sweep_from = sweep_from;
    if (o_sweep_to->count()) cfg.sweep_to = sweep_to;
    if (o_sweep_points->count()) cfg.sweep_points = sweep_points;
  } catch (const mfspin::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfspin::exit_code_for(e);
  }

  return mfspin::run_command(cfg);
}
