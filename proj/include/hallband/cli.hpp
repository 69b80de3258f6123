#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hallband/asymptotics.hpp"
#include "hallband/errors.hpp"
#include "hallband/fiber_solver.hpp"
#include "hallband/quasimode.hpp"
#include "hallband/states.hpp"

// Command dispatch, table export (CSV / JSON), and the small parsers behind
// the command-line front end. Outputs are byte-stable for a fixed config: no
// timestamps, fixed column order, 17-significant-digit decimals.
namespace hallband::cli {

inline constexpr int kSchemaVersion = 1;

enum class Command { bands, derivative, kdelta, quasimode, verify, bulk, edge, localize, synthesize };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::bands: return "bands";
    case Command::derivative: return "derivative";
    case Command::kdelta: return "kdelta";
    case Command::quasimode: return "quasimode";
    case Command::verify: return "verify";
    case Command::bulk: return "bulk";
    case Command::edge: return "edge";
    case Command::localize: return "localize";
    case Command::synthesize: return "synthesize";
  }
  return "?";
}

enum class Format { csv, json };

struct ProfileSpec {
  std::string family;          // indicator | gaussian | power
  std::vector<double> params;  // indicator: start,width; gaussian: center_offset,width; power: p
};

struct RunConfig {
  Command command = Command::bands;
  int n = 1;
  std::vector<double> k_values;
  std::vector<double> delta_list;
  std::optional<std::pair<double, double>> interval;
  std::vector<double> epsilons;
  std::optional<ProfileSpec> profile;
  double b = 1.0;
  double mu = -1.0;   // velocity-envelope calibration constant; < 0 selects 2n-1
  double c_n = 1.0;   // localization bound constant
  fiber_solver::SolverConfig solver;
  Format format = Format::csv;
  std::string out_path;
  std::vector<double> x_values, y_values;
};

using Cell = std::variant<double, std::string, bool, long long>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// ---- small parsers ---------------------------------------------------------

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw validation_error("cannot parse number: '" + s + "'");
  }
  if (pos != s.size()) throw validation_error("trailing junk in number: '" + s + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_double(item));
  return out;
}

// "lo:hi:step" -> inclusive grid
inline std::vector<double> parse_range(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw validation_error("range must be lo:hi:step, got '" + s + "'");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0)) throw validation_error("range step must be positive");
  if (hi < lo) throw validation_error("range needs hi >= lo");
  std::vector<double> out;
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long i = 0; i <= count; ++i) out.push_back(lo + i * step);
  return out;
}

inline ProfileSpec parse_profile(const std::string& s) {
  const auto colon = s.find(':');
  ProfileSpec spec;
  spec.family = s.substr(0, colon);
  if (colon != std::string::npos) spec.params = parse_list(s.substr(colon + 1));
  if (spec.family != "indicator" && spec.family != "gaussian" && spec.family != "power")
    throw validation_error("unknown profile family '" + spec.family + "'");
  const std::size_t want = (spec.family == "power") ? 1 : 2;
  if (spec.params.size() != want)
    throw validation_error("profile '" + spec.family + "' expects " + std::to_string(want) +
                           " parameter(s)");
  return spec;
}

// key=value configuration file ('#' starts a comment); callers merge these
// under explicit command-line flags, so flags win.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream f(path);
  if (!f) throw validation_error("cannot open config file: " + path);
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

// Profile parameters are relative to the support edge k_n(delta).
inline states::Family make_family(const ProfileSpec& spec, double support_left) {
  if (spec.family == "indicator")
    return states::Indicator{support_left + spec.params[0],
                             support_left + spec.params[0] + spec.params[1]};
  if (spec.family == "gaussian")
    return states::Gaussian{support_left + spec.params[0], spec.params[1]};
  return states::Power{spec.params[0]};
}

// ---- formatting / export ---------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string cell_to_string(const Cell& c) {
  if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<bool>(c)) return std::get<bool>(c) ? "true" : "false";
  return std::to_string(std::get<long long>(c));
}

inline nlohmann::ordered_json config_echo(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["command"] = command_name(cfg.command);
  j["n"] = cfg.n;
  if (!cfg.k_values.empty()) j["k_values"] = cfg.k_values;
  if (!cfg.delta_list.empty()) j["delta_list"] = cfg.delta_list;
  if (cfg.interval) j["interval"] = {cfg.interval->first, cfg.interval->second};
  if (!cfg.epsilons.empty()) j["epsilons"] = cfg.epsilons;
  if (cfg.profile) {
    j["profile"]["family"] = cfg.profile->family;
    j["profile"]["params"] = cfg.profile->params;
  }
  j["b"] = cfg.b;
  j["mu"] = cfg.mu;
  j["c_n"] = cfg.c_n;
  j["solver"] = {{"domain_margin", cfg.solver.domain_margin},
                 {"step", cfg.solver.step},
                 {"lambda_tol", cfg.solver.lambda_tol}};
  j["format"] = cfg.format == Format::csv ? "csv" : "json";
  return j;
}

inline void atomic_write(const std::string& path, const std::string& content) {
  if (path.empty()) throw validation_error("output path must not be empty");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw numerical_error("cannot open output file: " + tmp, "io-failure");
    f << content;
    if (!f.good()) throw numerical_error("write failed for: " + tmp, "io-failure");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw numerical_error("rename to " + path + " failed: " + ec.message(), "io-failure");
}

inline void export_table(const Table& table, const RunConfig& cfg) {
  if (table.rows.empty()) throw validation_error("refusing to export an empty table");
  std::string content;
  if (cfg.format == Format::csv) {
    std::string line;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) line += ',';
      line += table.columns[i];
    }
    content += line + "\n";
    for (const auto& row : table.rows) {
      line.clear();
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) line += ',';
        line += cell_to_string(row[i]);
      }
      content += line + "\n";
    }
  } else {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config_echo(cfg);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json r;
      for (std::size_t i = 0; i < row.size(); ++i) {
        const auto& c = row[i];
        if (std::holds_alternative<double>(c))
          r[table.columns[i]] = std::get<double>(c);
        else if (std::holds_alternative<std::string>(c))
          r[table.columns[i]] = std::get<std::string>(c);
        else if (std::holds_alternative<bool>(c))
          r[table.columns[i]] = std::get<bool>(c);
        else
          r[table.columns[i]] = std::get<long long>(c);
      }
      j["rows"].push_back(std::move(r));
    }
    content = j.dump(1) + "\n";
  }
  atomic_write(cfg.out_path, content);
}

// ---- command pipelines -----------------------------------------------------

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw validation_error(msg);
}

// central-difference step for the derivative cross-check, widened in the
// flat-band regime where the difference signal shrinks
inline double fd_step(int n, double k) {
  double h = 1e-4;
  if (k >= 2.5) {
    const double dl = std::abs(asymptotics::leading_terms(n, k).dlambda_lead);
    if (dl > 0.0) h = std::clamp(std::cbrt(3e-13 / (k * k * dl)), 1e-4, 5e-3);
  }
  return h;
}

inline Table run_bands(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "k", "lambda", "dlambda", "err_est", "method"};
  const auto sweep = fiber_solver::band_sweep(cfg.n, cfg.k_values, cfg.solver);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& e = sweep[i];
    if (e.point) {
      const auto& p = *e.point;
      t.rows.push_back({static_cast<long long>(p.n), p.k, p.lambda, p.dlambda, p.err_est,
                        std::string(fiber_solver::method_name(p.method))});
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.rows.push_back({static_cast<long long>(cfg.n), cfg.k_values[i], nan, nan, nan,
                        std::string("error")});
    }
  }
  return t;
}

inline Table run_derivative(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "k", "dlambda_hadamard", "dlambda_fd", "h_used", "rel_dev"};
  for (double k : cfg.k_values) {
    const auto sol = fiber_solver::detail::solve({cfg.n, k}, cfg.solver);
    const double h = fd_step(cfg.n, k);
    const double lp = fiber_solver::eigenvalue({cfg.n, k + h}, cfg.solver).lambda;
    const double lm = fiber_solver::eigenvalue({cfg.n, k - h}, cfg.solver).lambda;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::abs(sol.point.dlambda - fd) / std::abs(sol.point.dlambda);
    t.rows.push_back(
        {static_cast<long long>(cfg.n), k, sol.point.dlambda, fd, h, rel});
  }
  return t;
}

inline Table run_kdelta(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "delta", "k_numeric", "k_expansion", "abs_diff", "lambda_residual"};
  for (double delta : cfg.delta_list) {
    const auto td = asymptotics::k_delta(cfg.n, delta, cfg.solver);
    const double lam = fiber_solver::eigenvalue({cfg.n, td.k_numeric}, cfg.solver).lambda;
    t.rows.push_back({static_cast<long long>(cfg.n), delta, td.k_numeric, td.k_expansion,
                      std::abs(td.k_numeric - td.k_expansion),
                      lam - (2.0 * cfg.n - 1.0) - delta});
  }
  return t;
}

inline Table run_quasimode(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "k", "alpha", "beta", "eta", "eta_minus_en", "residual_norm",
               "epsilon", "kt_valid", "kt_lower", "kt_upper", "lambda", "sup_diff",
               "sup_slope_diff"};
  const double En = 2.0 * cfg.n - 1.0;
  for (double k : cfg.k_values) {
    const auto qm = quasimode::build(cfg.n, k, {}, cfg.solver);
    const auto er = quasimode::energy_and_residual(qm);
    const auto kt = quasimode::kato_temple(er.eta, er.epsilon, En - 1.0, En + 1.0);
    const auto cmp = quasimode::eigen_comparison(cfg.n, k, {}, cfg.solver);
    const double lam = fiber_solver::eigenvalue({cfg.n, k}, cfg.solver).lambda;
    t.rows.push_back({static_cast<long long>(cfg.n), k, qm.alpha, qm.beta, er.eta,
                      er.eta - En, er.residual_norm, er.epsilon, kt.valid, kt.lower, kt.upper,
                      lam, cmp.sup_diff, cmp.sup_slope_diff});
  }
  return t;
}

inline Table run_verify(const RunConfig& cfg) {
  Table t;
  t.columns = {"section", "k", "value", "reference", "deviation", "pass"};
  const double En = 2.0 * cfg.n - 1.0;

  // exact anchor at k = 0
  {
    const double lam = fiber_solver::eigenvalue({cfg.n, 0.0}, cfg.solver).lambda;
    const double ref = 4.0 * cfg.n - 1.0;
    t.rows.push_back({std::string("anchor_lambda_at_0"), 0.0, lam, ref, std::abs(lam - ref),
                      std::abs(lam - ref) <= 1e-8});
  }

  const std::vector<double> flat_grid{3.0, 3.5, 4.0, 4.5};
  const auto rep = asymptotics::convergence_report(cfg.n, flat_grid, cfg.solver);
  for (const auto& row : rep.rows) {
    t.rows.push_back({std::string("rho"), row.k, row.rho, 1.0, std::abs(row.rho - 1.0),
                      std::abs(row.rho - 1.0) <= 0.5});
    t.rows.push_back({std::string("rho_prime"), row.k, row.rho_prime, 1.0,
                      std::abs(row.rho_prime - 1.0), std::abs(row.rho_prime - 1.0) <= 0.5});
  }
  t.rows.push_back({std::string("rho_fit_slope"), 0.0, rep.fitted_slope, -2.0,
                    std::abs(rep.fitted_slope + 2.0),
                    rep.fitted_slope >= -3.0 && rep.fitted_slope <= -1.0});

  for (double k : flat_grid) {
    const auto qm = quasimode::build(cfg.n, k, {}, cfg.solver);
    const auto er = quasimode::energy_and_residual(qm);
    const auto kt = quasimode::kato_temple(er.eta, er.epsilon, En - 1.0, En + 1.0);
    const double lam = fiber_solver::eigenvalue({cfg.n, k}, cfg.solver).lambda;
    const bool inside = kt.valid && kt.lower <= lam && lam <= kt.upper;
    t.rows.push_back({std::string("kato_temple"), k, lam, er.eta,
                      kt.valid ? kt.upper - kt.lower : std::numeric_limits<double>::quiet_NaN(),
                      inside});
  }

  for (double k : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    const auto sol = fiber_solver::detail::solve({cfg.n, k}, cfg.solver);
    const double h = fd_step(cfg.n, k);
    const double lp = fiber_solver::eigenvalue({cfg.n, k + h}, cfg.solver).lambda;
    const double lm = fiber_solver::eigenvalue({cfg.n, k - h}, cfg.solver).lambda;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::abs(sol.point.dlambda - fd) / std::abs(sol.point.dlambda);
    t.rows.push_back({std::string("hadamard_vs_fd"), k, sol.point.dlambda, fd, rel, rel <= 1e-6});
  }
  return t;
}

inline Table run_bulk(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "delta", "family", "J", "abs_J", "current_bound", "sandwich_lo",
               "sandwich_hi", "norm", "solved_nodes", "b"};
  states::SolverCache cache(cfg.solver);
  for (double delta : cfg.delta_list) {
    const auto td = asymptotics::k_delta(cfg.n, delta, cfg.solver);
    const auto fam = make_family(*cfg.profile, td.k_numeric);
    const auto profile = states::make_profile(cfg.n, delta, fam, cache);
    auto d = states::diagnose(profile, cfg.epsilons, cache, cfg.mu, cfg.c_n);
    d = states::rescale_field(d, cfg.b);
    t.rows.push_back({static_cast<long long>(cfg.n), delta, std::string(cfg.profile->family),
                      d.current, std::abs(d.current), d.current_bound, d.sandwich_lo,
                      d.sandwich_hi, d.norm, static_cast<long long>(profile.nodes.size()),
                      d.field_strength});
  }
  return t;
}

inline Table run_edge(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "i_lo", "i_hi", "c_minus", "c_plus", "k_lo", "k_hi"};
  states::SolverCache cache(cfg.solver);
  const auto eb = states::edge_current_bounds(cfg.n, cfg.interval->first, cfg.interval->second,
                                              cache);
  t.rows.push_back({static_cast<long long>(cfg.n), cfg.interval->first, cfg.interval->second,
                    eb.c_minus, eb.c_plus, eb.k_lo, eb.k_hi});
  return t;
}

inline Table run_localize(const RunConfig& cfg) {
  Table t;
  t.columns = {"n", "delta", "epsilon", "strip_width", "mass", "localization_bound", "mass_over_form"};
  states::SolverCache cache(cfg.solver);
  for (double delta : cfg.delta_list) {
    const auto td = asymptotics::k_delta(cfg.n, delta, cfg.solver);
    const auto fam = make_family(*cfg.profile, td.k_numeric);
    const auto profile = states::make_profile(cfg.n, delta, fam, cache);
    for (double eps : cfg.epsilons) {
      const auto loc = states::localization_mass(profile, eps, cache, cfg.c_n);
      const double form = loc.bound / cfg.c_n;  // functional form with C_n = 1
      t.rows.push_back({static_cast<long long>(cfg.n), delta, eps, loc.strip_width, loc.mass,
                        loc.bound, loc.mass / form});
    }
  }
  return t;
}

inline Table run_synthesize(const RunConfig& cfg) {
  Table t;
  t.columns = {"x", "y", "re", "im", "abs"};
  states::SolverCache cache(cfg.solver);
  const double delta = cfg.delta_list.front();
  const auto td = asymptotics::k_delta(cfg.n, delta, cfg.solver);
  const auto fam = make_family(*cfg.profile, td.k_numeric);
  const auto profile = states::make_profile(cfg.n, delta, fam, cache);
  const auto field = states::synthesize_state(profile, cfg.x_values, cfg.y_values, cache);
  for (std::size_t ix = 0; ix < field.x_grid.size(); ++ix)
    for (std::size_t iy = 0; iy < field.y_grid.size(); ++iy) {
      const auto v = field.values[ix * field.y_grid.size() + iy];
      t.rows.push_back({field.x_grid[ix], field.y_grid[iy], v.real(), v.imag(), std::abs(v)});
    }
  return t;
}

inline void validate_config(const RunConfig& cfg) {
  require(cfg.n >= 1, "band index n must be >= 1");
  cfg.solver.validate();
  require(!cfg.out_path.empty(), "an output path is required (--out)");
  require(cfg.b > 0.0, "field strength b must be positive");
  for (double k : cfg.k_values) require(std::isfinite(k), "k values must be finite");
  for (double d : cfg.delta_list)
    require(d > 0.0 && d < 2.0, "delta values must lie in (0, 2)");
  for (double e : cfg.epsilons) require(e > 0.0 && e < 1.0, "epsilon values must lie in (0, 1)");
  require(cfg.b == 1.0 || cfg.command == Command::bulk,
          "--b is only meaningful for the bulk command");
  switch (cfg.command) {
    case Command::bands:
    case Command::derivative:
    case Command::quasimode:
      require(!cfg.k_values.empty(), "--k-range is required for this command");
      break;
    case Command::kdelta:
      require(!cfg.delta_list.empty(), "--delta-list is required for kdelta");
      break;
    case Command::verify:
      break;
    case Command::bulk:
    case Command::localize:
      require(!cfg.delta_list.empty(), "--delta-list is required for this command");
      require(cfg.profile.has_value(), "--profile is required for this command");
      if (cfg.command == Command::localize)
        require(!cfg.epsilons.empty(), "--epsilon is required for localize");
      break;
    case Command::edge:
      require(cfg.interval.has_value(), "--interval is required for edge");
      break;
    case Command::synthesize:
      require(!cfg.delta_list.empty(), "--delta-list is required for synthesize");
      require(cfg.profile.has_value(), "--profile is required for synthesize");
      require(!cfg.x_values.empty() && !cfg.y_values.empty(),
              "--x-range and --y-range are required for synthesize");
      break;
  }
}

}  // namespace detail

// Runs one validated command end to end and writes the report artifact.
// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 solver
// disagreement sentinel.
inline int dispatch(RunConfig cfg, std::ostream& diag) {
  try {
    detail::validate_config(cfg);
    if (cfg.command == Command::verify) cfg.format = Format::json;  // verify is a JSON report
    Table t;
    switch (cfg.command) {
      case Command::bands: t = detail::run_bands(cfg); break;
      case Command::derivative: t = detail::run_derivative(cfg); break;
      case Command::kdelta: t = detail::run_kdelta(cfg); break;
      case Command::quasimode: t = detail::run_quasimode(cfg); break;
      case Command::verify: t = detail::run_verify(cfg); break;
      case Command::bulk: t = detail::run_bulk(cfg); break;
      case Command::edge: t = detail::run_edge(cfg); break;
      case Command::localize: t = detail::run_localize(cfg); break;
      case Command::synthesize: t = detail::run_synthesize(cfg); break;
    }
    export_table(t, cfg);
    return 0;
  } catch (const validation_error& e) {
    if (cfg.format == Format::json)
      diag << nlohmann::ordered_json{{"error", {{"reason", "validation"}, {"message", e.what()}}}}
                  .dump()
           << "\n";
    else
      diag << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const disagreement_error& e) {
    if (cfg.format == Format::json)
      diag << nlohmann::ordered_json{{"error", {{"reason", e.reason()}, {"message", e.what()}}}}
                  .dump()
           << "\n";
    else
      diag << "solver disagreement: " << e.what() << "\n";
    return 4;
  } catch (const numerical_error& e) {
    if (cfg.format == Format::json)
      diag << nlohmann::ordered_json{{"error", {{"reason", e.reason()}, {"message", e.what()}}}}
                  .dump()
           << "\n";
    else
      diag << "numerical error [" << e.reason() << "]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace hallband::cli
