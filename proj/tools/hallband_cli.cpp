// Command-line front end for the half-plane quantum Hall band library.
//
// Subcommands: bands, derivative, kdelta, quasimode, verify, bulk, edge,
// localize, synthesize. See --help for the column schema of each report.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hallband/cli.hpp"

namespace {

using hallband::cli::Command;
using hallband::cli::RunConfig;

struct RawOptions {
  std::string k_range, delta_list, interval, epsilons, profile, format = "csv";
  std::string out, config_file, x_range, y_range;
  int n = 1;
  double b = 1.0, mu = -1.0, c_n = 1.0;
  double step = 5e-4, margin = 14.0, tol = 1e-12;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hallband: dispersion curves, quasi-modes, and bulk/edge diagnostics of the\n"
      "half-plane quantum Hall fiber operator h(k) = -d^2/dx^2 + (x-k)^2 (Dirichlet)."};
  app.require_subcommand(1);

  RawOptions raw;

  const std::map<std::string, Command> commands = {
      {"bands", Command::bands},         {"derivative", Command::derivative},
      {"kdelta", Command::kdelta},       {"quasimode", Command::quasimode},
      {"verify", Command::verify},       {"bulk", Command::bulk},
      {"edge", Command::edge},           {"localize", Command::localize},
      {"synthesize", Command::synthesize}};

  const std::map<std::string, std::string> descriptions = {
      {"bands", "Band sweep; CSV columns: n, k, lambda, dlambda, err_est, method"},
      {"derivative",
       "Hadamard vs central-difference band velocity; columns: n, k, dlambda_hadamard, "
       "dlambda_fd, h_used, rel_dev"},
      {"kdelta",
       "Threshold momenta k_n(delta); columns: n, delta, k_numeric, k_expansion, abs_diff, "
       "lambda_residual"},
      {"quasimode",
       "Quasi-mode reports; columns: n, k, alpha, beta, eta, eta_minus_en, residual_norm, "
       "epsilon, kt_valid, kt_lower, kt_upper, lambda, sup_diff, sup_slope_diff"},
      {"verify",
       "JSON verification report: anchors, rho tables, Kato-Temple enclosures, "
       "Hadamard-vs-FD residuals"},
      {"bulk",
       "Bulk-state current diagnostics; columns: n, delta, family, J, abs_J, current_bound, "
       "sandwich_lo, sandwich_hi, norm, solved_nodes, b"},
      {"edge",
       "Edge-current bounds on an energy interval; columns: n, i_lo, i_hi, c_minus, c_plus, "
       "k_lo, k_hi"},
      {"localize",
       "Strip-localization masses; columns: n, delta, epsilon, strip_width, mass, "
       "localization_bound, mass_over_form"},
      {"synthesize", "Complex field samples of a bulk state; columns: x, y, re, im, abs"}};
  for (const auto& [name, desc] : descriptions)
    app.add_subcommand(name, desc)->fallthrough();
  auto* on = app.add_option("--n", raw.n, "band index (n = 1 is the lowest band)");
  auto* ok = app.add_option("--k-range", raw.k_range, "quasi-momentum grid lo:hi:step");
  auto* od = app.add_option("--delta-list", raw.delta_list,
                            "comma-separated distances to the Landau level, each in (0, 2)");
  auto* oi = app.add_option("--interval", raw.interval, "energy interval lo,hi");
  auto* oe = app.add_option("--epsilon", raw.epsilons, "comma-separated strip parameters in (0, 1)");
  auto* op = app.add_option(
      "--profile", raw.profile,
      "Fourier profile family:params, placed relative to k_n(delta): indicator:start,width | "
      "gaussian:center_offset,width | power:p");
  auto* ob = app.add_option("--b", raw.b, "magnetic field strength (bulk command only)");
  auto* omu = app.add_option("--mu", raw.mu, "velocity-envelope constant (default 2n-1)");
  auto* ocn = app.add_option("--cn", raw.c_n, "localization bound constant C_n (default 1)");
  auto* os = app.add_option("--step", raw.step, "solver grid/ODE step");
  auto* om = app.add_option("--margin", raw.margin, "fiber domain margin (right end = k + margin)");
  auto* ot = app.add_option("--tol", raw.tol, "eigenvalue root tolerance");
  auto* of = app.add_option("--format", raw.format, "output format: csv | json");
  auto* oo = app.add_option("--out", raw.out, "output path (written atomically)");
  auto* ox = app.add_option("--x-range", raw.x_range, "x grid lo:hi:step (synthesize)");
  auto* oy = app.add_option("--y-range", raw.y_range, "y grid lo:hi:step (synthesize)");
  app.add_option("--config", raw.config_file, "key=value config file; explicit flags win");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!raw.config_file.empty()) {
      const auto kv = hallband::cli::read_config_file(raw.config_file);
      auto apply = [&](CLI::Option* opt, const std::string& key, auto& target) {
        auto it = kv.find(key);
        if (it == kv.end() || opt->count() > 0) return;
        using T = std::decay_t<decltype(target)>;
        if constexpr (std::is_same_v<T, std::string>)
          target = it->second;
        else if constexpr (std::is_same_v<T, int>)
          target = std::stoi(it->second);
        else
          target = hallband::cli::parse_double(it->second);
      };
      apply(on, "n", raw.n);
      apply(ok, "k-range", raw.k_range);
      apply(od, "delta-list", raw.delta_list);
      apply(oi, "interval", raw.interval);
      apply(oe, "epsilon", raw.epsilons);
      apply(op, "profile", raw.profile);
      apply(ob, "b", raw.b);
      apply(omu, "mu", raw.mu);
      apply(ocn, "cn", raw.c_n);
      apply(os, "step", raw.step);
      apply(om, "margin", raw.margin);
      apply(ot, "tol", raw.tol);
      apply(of, "format", raw.format);
      apply(oo, "out", raw.out);
      apply(ox, "x-range", raw.x_range);
      apply(oy, "y-range", raw.y_range);
    }

    RunConfig cfg;
    cfg.command = commands.at(app.get_subcommands().front()->get_name());
    cfg.n = raw.n;
    cfg.b = raw.b;
    cfg.mu = raw.mu;
    cfg.c_n = raw.c_n;
    cfg.solver.step = raw.step;
    cfg.solver.domain_margin = raw.margin;
    cfg.solver.lambda_tol = raw.tol;
    cfg.out_path = raw.out;
    if (raw.format == "csv")
      cfg.format = hallband::cli::Format::csv;
    else if (raw.format == "json")
      cfg.format = hallband::cli::Format::json;
    else
      throw hallband::validation_error("unknown format: " + raw.format);
    if (!raw.k_range.empty()) cfg.k_values = hallband::cli::parse_range(raw.k_range);
    if (!raw.delta_list.empty()) cfg.delta_list = hallband::cli::parse_list(raw.delta_list);
    if (!raw.epsilons.empty()) cfg.epsilons = hallband::cli::parse_list(raw.epsilons);
    if (!raw.interval.empty()) {
      const auto v = hallband::cli::parse_list(raw.interval);
      if (v.size() != 2) throw hallband::validation_error("--interval expects lo,hi");
      cfg.interval = {v[0], v[1]};
    }
    if (!raw.profile.empty()) cfg.profile = hallband::cli::parse_profile(raw.profile);
    if (!raw.x_range.empty()) cfg.x_values = hallband::cli::parse_range(raw.x_range);
    if (!raw.y_range.empty()) cfg.y_values = hallband::cli::parse_range(raw.y_range);

    return hallband::cli::dispatch(cfg, std::cerr);
  } catch (const hallband::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
