// Copyright 2026 The AGIA Risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agia/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "agia/bounds.hpp"
#include "agia/errors.hpp"
#include "agia/mechanism.hpp"
#include "table.hpp"

namespace agia::cli {
namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kKsAlpha = 0.05;

// Bad flag combinations that CLI11 cannot express on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string metric = "mse";
  std::int64_t n = 0;
  double sigma = 0;
  double clip_norm = 1;
  double min_norm = 1;
  double eta = 0;
  double eta_db = 0;
  double gamma = 0;
  double gamma_prior = 0;
  double data_range = 0;
  std::int64_t m_rows = 1;
  double rest_norm = 0;
  bool include_bias = false;
  std::vector<double> target;
  double target_norm = 0;
  std::int64_t trials = 500;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string format = "csv";
  std::string dump;
  std::string vary;
  std::vector<double> grid;
  std::vector<std::string> columns;
};

// One subcommand plus the flags it registered, so handlers can ask which
// values were actually supplied (on the command line or via --config).
struct Command {
  CLI::App* app;
  const Flags& f;

  bool given(const std::string& flag) const {
    return app->get_option_no_throw(flag) != nullptr && app->count(flag) > 0;
  }
  void require(const std::string& flag, const std::string& why) const {
    if (!given(flag)) throw UsageError(flag + " is required " + why);
  }
  bool psnr() const { return f.metric == "psnr"; }
};

Format output_format(const Flags& f) {
  return f.format == "json" ? Format::kJson : Format::kCsv;
}

void add_metric(CLI::App* app, Flags& f) {
  app->add_option("--metric", f.metric, "Error metric")
      ->check(CLI::IsMember({"mse", "psnr"}))
      ->capture_default_str();
}

void add_dimension(CLI::App* app, Flags& f, bool required) {
  auto* opt = app->add_option("--n", f.n, "Data dimension N");
  if (required) opt->required();
}

void add_min_norm(CLI::App* app, Flags& f) {
  app->add_option("--min-norm", f.min_norm,
                  "Smallest l2-norm over the non-zero data points")
      ->capture_default_str();
}

void add_sigma(CLI::App* app, Flags& f, bool required) {
  auto* opt = app->add_option("--sigma", f.sigma, "Noise multiplier");
  if (required) opt->required();
}

void add_clip_norm(CLI::App* app, Flags& f) {
  app->add_option("--clip-norm", f.clip_norm, "Clipping norm C")
      ->capture_default_str();
}

void add_thresholds(CLI::App* app, Flags& f) {
  app->add_option("--eta", f.eta, "MSE threshold (--metric mse)");
  app->add_option("--eta-db", f.eta_db, "PSNR threshold in dB (--metric psnr)");
  app->add_option("--data-range", f.data_range,
                  "Peak-to-peak data range used by the PSNR");
}

void add_attack(CLI::App* app, Flags& f) {
  add_clip_norm(app, f);
  app->add_option("--m-rows", f.m_rows, "Rows M of the attack layer")
      ->capture_default_str();
  app->add_option("--rest-norm", f.rest_norm,
                  "Gradient norm of the parameters outside the attack layer")
      ->capture_default_str();
  app->add_flag("--include-bias", f.include_bias,
                "Count bias derivatives towards the clipped norm");
  app->add_option("--target", f.target, "Explicit target, comma separated")
      ->delimiter(',');
  app->add_option("--target-norm", f.target_norm,
                  "Norm of the synthetic target (default: --min-norm)");
  app->add_option("--trials", f.trials, "Monte Carlo trials")
      ->capture_default_str();
  app->add_option("--threads", f.threads, "Worker threads, 0 = all cores")
      ->capture_default_str();
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--seed", f.seed, "Seed for every random stream")
      ->capture_default_str();
  app->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app->add_option("--config", "Flat `key = value` file of flag defaults");
}

// The MSE threshold named by --eta, or by --eta-db and --data-range.
double mse_threshold(const Command& c, Record& r) {
  if (c.psnr()) {
    if (c.given("--eta")) {
      throw UsageError("--eta is an MSE threshold; use --eta-db with --metric psnr");
    }
    c.require("--eta-db", "with --metric psnr");
    c.require("--data-range", "with --metric psnr");
    r.emplace_back("eta_db", c.f.eta_db);
    r.emplace_back("data_range", c.f.data_range);
    if (!(c.f.data_range > 0)) {
      throw DomainError("--data-range must be > 0, got " +
                        internal::show(c.f.data_range));
    }
    return psnr_to_mse_threshold(c.f.eta_db, c.f.data_range);
  }
  if (c.given("--eta-db")) {
    throw UsageError("--eta-db is a PSNR threshold; pass --metric psnr");
  }
  c.require("--eta", "with --metric mse");
  return c.f.eta;
}

Record head(const Flags& f) {
  return {{"metric", f.metric}, {"n", f.n}};
}

void cmd_bound(const Command& c, std::ostream& out) {
  const Flags& f = c.f;
  RiskParams<double> params(f.n, f.sigma, f.clip_norm, f.min_norm);
  Record r = head(f);
  r.emplace_back("sigma", f.sigma);
  r.emplace_back("clip_norm", f.clip_norm);
  r.emplace_back("min_norm", f.min_norm);
  const double eta = mse_threshold(c, r);
  double gamma;
  if (c.psnr()) {
    params.set_data_range(f.data_range);
    gamma = psnr_exceedance_bound(params, f.eta_db).gamma;
  } else {
    gamma = rero_gamma_mse(params, eta).gamma;
  }
  r.emplace_back("eta", eta);
  r.emplace_back("gamma", gamma);
  TableWriter(out, output_format(f)).write(r);
}

void cmd_calibrate(const Command& c, std::ostream& out) {
  const Flags& f = c.f;
  Record r = head(f);
  r.emplace_back("min_norm", f.min_norm);
  const double eta = mse_threshold(c, r);
  const double sigma = sigma_from_eta_gamma(f.n, f.min_norm, eta, f.gamma);
  r.emplace_back("eta", eta);
  r.emplace_back("gamma", f.gamma);
  r.emplace_back("sigma", sigma);
  TableWriter(out, output_format(f)).write(r);
}

void cmd_corridor(const Command& c, std::ostream& out) {
  const Flags& f = c.f;
  const RiskParams<double> params(f.n, f.sigma, f.clip_norm, f.min_norm);
  const auto corridor = risk_corridor(params, f.gamma_prior);
  Record r = head(f);
  r.emplace_back("sigma", f.sigma);
  r.emplace_back("min_norm", f.min_norm);
  r.emplace_back("gamma_prior", f.gamma_prior);
  r.emplace_back("eta_lower", corridor.lower);
  r.emplace_back("eta_upper", corridor.upper);
  if (c.psnr()) {
    c.require("--data-range", "with --metric psnr");
    if (!(f.data_range > 0)) throw DomainError("--data-range must be > 0");
    r.emplace_back("data_range", f.data_range);
    r.emplace_back("psnr_db_lower", psnr(corridor.upper, f.data_range));
    r.emplace_back("psnr_db_upper", psnr(corridor.lower, f.data_range));
  }
  TableWriter(out, output_format(f)).write(r);
}

TargetVector<double> make_target(const Command& c) {
  const Flags& f = c.f;
  if (c.given("--target")) {
    if (c.given("--target-norm")) {
      throw UsageError("--target-norm only applies to synthetic targets");
    }
    Vector<double> x = Eigen::Map<const Vector<double>>(
        f.target.data(), static_cast<Eigen::Index>(f.target.size()));
    if (c.given("--n") && f.n != x.size()) {
      throw UsageError("--n " + std::to_string(f.n) + " disagrees with the " +
                       std::to_string(x.size()) + " entries of --target");
    }
    if (x.norm() == 0) throw DomainError("--target has zero norm");
    return TargetVector<double>(std::move(x));
  }
  c.require("--n", "unless --target is given");
  const double norm = c.given("--target-norm") ? f.target_norm : f.min_norm;
  return TargetVector<double>::on_sphere(f.n, norm, f.seed);
}

AttackConfig<double> make_attack(const Flags& f) {
  AttackConfig<double> config;
  config.rows = f.m_rows;
  config.clip_norm = f.clip_norm;
  config.noise_multiplier = f.sigma;
  config.rest_norm = f.rest_norm;
  config.include_bias_rows = f.include_bias;
  config.seed = f.seed;
  return config;
}

std::optional<double> data_range_flag(const Command& c) {
  if (!c.given("--data-range")) return std::nullopt;
  if (!(c.f.data_range > 0)) throw DomainError("--data-range must be > 0");
  return c.f.data_range;
}

void cmd_simulate(const Command& c, std::ostream& out) {
  const Flags& f = c.f;
  const auto target = make_target(c);
  const auto config = make_attack(f);
  const auto batch = run_trials(target, config, f.trials, {.threads = f.threads},
                                data_range_flag(c));

  if (c.given("--dump")) {
    std::ofstream dump(f.dump);
    if (!dump) throw UsageError("cannot open --dump file '" + f.dump + "'");
    TableWriter rows(dump, Format::kCsv);
    for (std::size_t t = 0; t < batch.mse.size(); ++t) {
      rows.write({{"trial", static_cast<std::int64_t>(t)},
                  {"mse", batch.mse[t]},
                  {"psnr", batch.psnr[t]}});
    }
    if (!dump.flush()) throw UsageError("failed writing --dump file '" + f.dump + "'");
  }

  const std::int64_t n = target.dimension();
  const RiskParams<double> law(n, f.sigma, f.clip_norm, target.norm());
  const auto mse = summarize<double>(batch.mse);
  const auto db = summarize<double>(batch.psnr);
  const double q1 = eta_from_gamma(law, 0.25);
  const double q2 = eta_from_gamma(law, 0.5);
  const double q3 = eta_from_gamma(law, 0.75);
  const double range = batch.data_range;

  Record r{{"trials", f.trials},
           {"seed", static_cast<std::int64_t>(f.seed)},
           {"n", n},
           {"target_norm", target.norm()},
           {"data_range", range},
           {"sigma", f.sigma},
           {"clip_norm", f.clip_norm},
           {"m_rows", f.m_rows},
           {"rest_norm", f.rest_norm},
           {"include_bias", std::string(f.include_bias ? "true" : "false")},
           {"clip_factor", clip_factor(target, config)},
           {"mse_mean", mse.mean},
           {"mse_q1", mse.q1},
           {"mse_median", mse.median},
           {"mse_q3", mse.q3},
           {"mse_mean_theory", expected_mse(f.sigma, target.norm())},
           {"mse_q1_theory", q1},
           {"mse_median_theory", q2},
           {"mse_q3_theory", q3},
           {"psnr_sentinels", f.trials - db.count},
           {"psnr_mean", db.mean},
           {"psnr_q1", db.q1},
           {"psnr_median", db.median},
           {"psnr_q3", db.q3},
           {"psnr_q1_theory", psnr(q3, range)},
           {"psnr_median_theory", psnr(q2, range)},
           {"psnr_q3_theory", psnr(q1, range)},
           {"ks_statistic", ks_statistic(batch, law, target.norm())},
           {"ks_critical", kolmogorov_critical_value(f.trials, kKsAlpha)}};
  TableWriter(out, output_format(f)).write(r);
}

// ---------------------------------------------------------------- sweep

const std::map<std::string, std::string>& vary_flags() {
  static const std::map<std::string, std::string> flags{
      {"sigma", "--sigma"}, {"eta", "--eta"},           {"gamma", "--gamma"},
      {"m", "--m-rows"},    {"rest-norm", "--rest-norm"}};
  return flags;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> columns{
      "gamma",       "sigma_calibrated", "eta_upper",    "mse_floor",
      "clip_factor", "mse_mean",         "mse_median",   "ks_statistic"};
  return columns;
}

std::vector<std::string> default_columns(const Command& c) {
  const std::string& v = c.f.vary;
  const std::string eta_flag = c.psnr() ? "--eta-db" : "--eta";
  if (v == "sigma") return {"gamma"};
  if (v == "eta") return {c.given("--gamma") ? "sigma_calibrated" : "gamma"};
  if (v == "gamma") {
    return {c.given(eta_flag) ? "sigma_calibrated" : "eta_upper"};
  }
  return {"clip_factor", "mse_mean", "mse_floor"};
}

void check_grid(const Flags& f) {
  if (f.grid.empty()) throw UsageError("--grid must list at least one value");
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    if (!std::isfinite(f.grid[i])) throw UsageError("--grid values must be finite");
    if (i > 0 && !(f.grid[i] > f.grid[i - 1])) {
      throw UsageError("--grid must be strictly increasing");
    }
    if (f.vary == "m" && (f.grid[i] < 1 || std::floor(f.grid[i]) != f.grid[i])) {
      throw UsageError("--grid values for --vary m must be integers >= 1");
    }
  }
}

void cmd_sweep(const Command& c, std::ostream& out) {
  const Flags& f = c.f;
  std::string fixed_flag = vary_flags().at(f.vary);
  if (f.vary == "eta" && c.psnr()) fixed_flag = "--eta-db";
  if (c.given(fixed_flag)) {
    throw UsageError("--vary " + f.vary + " conflicts with " + fixed_flag);
  }
  check_grid(f);
  const std::vector<std::string> columns =
      c.given("--columns") ? f.columns : default_columns(c);
  if (c.psnr()) {
    c.require("--data-range", "with --metric psnr");
    if (!(f.data_range > 0)) throw DomainError("--data-range must be > 0");
  }

  const bool needs_target = std::any_of(columns.begin(), columns.end(), [](auto& k) {
    return k == "mse_floor" || k == "clip_factor" || k == "mse_mean" ||
           k == "mse_median" || k == "ks_statistic";
  });
  std::optional<TargetVector<double>> target;
  if (needs_target) target = make_target(c);
  const std::int64_t n = target ? target->dimension() : f.n;
  if (!target) c.require("--n", "for this sweep");

  auto need = [&](bool known, const std::string& flag, const std::string& col) {
    if (!known) throw UsageError("column " + col + " needs " + flag);
  };
  const std::string eta_flag = c.psnr() ? "--eta-db" : "--eta";
  const std::string var_name = f.vary == "eta" && c.psnr() ? "eta_db"
                               : f.vary == "m"             ? "m_rows"
                               : f.vary == "rest-norm"     ? "rest_norm"
                                                           : f.vary;

  TableWriter table(out, output_format(f));
  for (double value : f.grid) {
    Flags point = f;
    bool sigma_known = c.given("--sigma");
    bool eta_known = c.given(eta_flag);
    bool gamma_known = c.given("--gamma");
    if (f.vary == "sigma") point.sigma = value, sigma_known = true;
    if (f.vary == "eta") (c.psnr() ? point.eta_db : point.eta) = value, eta_known = true;
    if (f.vary == "gamma") point.gamma = value, gamma_known = true;
    if (f.vary == "m") point.m_rows = static_cast<std::int64_t>(value);
    if (f.vary == "rest-norm") point.rest_norm = value;
    const double eta =
        c.psnr() ? psnr_to_mse_threshold(point.eta_db, f.data_range) : point.eta;

    Record r;
    if (f.vary == "m") {
      r.emplace_back(var_name, point.m_rows);
    } else {
      r.emplace_back(var_name, value);
    }
    std::optional<TrialBatch<double>> batch;
    auto trials = [&]() -> const TrialBatch<double>& {
      need(sigma_known, "--sigma", "Monte Carlo columns");
      if (!batch) {
        batch = run_trials(*target, make_attack(point), f.trials,
                           {.threads = f.threads}, data_range_flag(c));
      }
      return *batch;
    };
    for (const std::string& col : columns) {
      double v = 0;
      if (col == "gamma") {
        need(sigma_known, "--sigma", col);
        need(eta_known, eta_flag, col);
        const RiskParams<double> params(n, point.sigma, f.clip_norm, f.min_norm);
        v = rero_gamma_mse(params, eta).gamma;
      } else if (col == "sigma_calibrated") {
        need(eta_known, eta_flag, col);
        need(gamma_known, "--gamma", col);
        v = sigma_from_eta_gamma(n, f.min_norm, eta, point.gamma);
      } else if (col == "eta_upper") {
        need(sigma_known, "--sigma", col);
        need(gamma_known, "--gamma", col);
        const RiskParams<double> params(n, point.sigma, f.clip_norm, f.min_norm);
        v = eta_from_gamma(params, point.gamma);
      } else if (col == "mse_floor") {
        need(sigma_known, "--sigma", col);
        v = expected_mse(point.sigma, target->norm());
      } else if (col == "clip_factor") {
        need(sigma_known, "--sigma", col);
        v = clip_factor(*target, make_attack(point));
      } else if (col == "mse_mean") {
        v = summarize<double>(trials().mse).mean;
      } else if (col == "mse_median") {
        v = summarize<double>(trials().mse).median;
      } else if (col == "ks_statistic") {
        const RiskParams<double> law(n, point.sigma, f.clip_norm, target->norm());
        v = ks_statistic(trials(), law, target->norm());
      }
      r.emplace_back(col, v);
    }
    table.write(r);
  }
}

// ---------------------------------------------------------------- config

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool mentions(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Appends `--key=value` for every config entry whose flag is not already on
// the command line, so flags always win over the file.
std::vector<std::string> merge_config(const CLI::App& app,
                                      std::vector<std::string> args) {
  const CLI::App* sub = nullptr;
  for (const auto& a : args) {
    if (!a.empty() && a[0] != '-') {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  }
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (sub == nullptr || path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot read --config file '" + path + "'");
  const std::vector<std::string> given = args;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected `key = value`");
    }
    std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const std::string flag = "--" + key;
    if (key == "config" || key == "help" ||
        sub->get_option_no_throw(flag) == nullptr) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": '" + key +
                       "' is not an option of " + sub->get_name());
    }
    if (!mentions(given, flag)) args.push_back(flag + "=" + value);
  }
  return args;
}

void print_error(std::ostream& err, const RunOptions& options,
                 const std::string& message) {
  if (options.color) {
    err << "\033[1;31merror:\033[0m " << message << '\n';
  } else {
    err << "error: " << message << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err, RunOptions options) {
  CLI::App app{"Reconstruction-risk bounds and attack simulation for DP-SGD",
               "agia-risk"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags f;
  using Handler = std::function<void(const Command&, std::ostream&)>;
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* bound = app.add_subcommand(
      "bound", "Upper bound gamma on the success probability at threshold eta");
  add_metric(bound, f);
  add_dimension(bound, f, true);
  add_sigma(bound, f, true);
  add_clip_norm(bound, f);
  add_min_norm(bound, f);
  add_thresholds(bound, f);
  add_common(bound, f);
  commands.emplace_back(bound, cmd_bound);

  auto* calibrate = app.add_subcommand(
      "calibrate", "Noise multiplier sigma that caps the risk at (eta, gamma)");
  add_metric(calibrate, f);
  add_dimension(calibrate, f, true);
  add_min_norm(calibrate, f);
  add_thresholds(calibrate, f);
  calibrate->add_option("--gamma", f.gamma, "Target success probability")
      ->required();
  add_common(calibrate, f);
  commands.emplace_back(calibrate, cmd_calibrate);

  auto* corridor = app.add_subcommand(
      "corridor", "Error interval [0, eta(gamma_prior)] of the risk corridor");
  add_metric(corridor, f);
  add_dimension(corridor, f, true);
  add_sigma(corridor, f, true);
  add_clip_norm(corridor, f);
  add_min_norm(corridor, f);
  corridor->add_option("--gamma-prior", f.gamma_prior,
                       "Prior success probability of an identification attack")
      ->required();
  corridor->add_option("--data-range", f.data_range,
                       "Peak-to-peak data range (--metric psnr)");
  add_common(corridor, f);
  commands.emplace_back(corridor, cmd_corridor);

  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo attack on one privatized step; summary vs theory");
  add_dimension(simulate, f, false);
  add_sigma(simulate, f, true);
  add_min_norm(simulate, f);
  add_attack(simulate, f);
  simulate->add_option("--data-range", f.data_range,
                       "PSNR peak (default: the target's max - min)");
  simulate->add_option("--dump", f.dump, "Write per-trial trial,mse,psnr CSV");
  add_common(simulate, f);
  commands.emplace_back(simulate, cmd_simulate);

  auto* sweep = app.add_subcommand(
      "sweep", "One output row per grid value of a single varied parameter");
  add_metric(sweep, f);
  add_dimension(sweep, f, false);
  add_sigma(sweep, f, false);
  add_min_norm(sweep, f);
  add_thresholds(sweep, f);
  sweep->add_option("--gamma", f.gamma, "Success probability");
  add_attack(sweep, f);
  std::vector<std::string> vary_names;
  for (const auto& [name, _] : vary_flags()) vary_names.push_back(name);
  sweep->add_option("--vary", f.vary, "Parameter to sweep")
      ->required()
      ->check(CLI::IsMember(vary_names));
  sweep->add_option("--grid", f.grid, "Strictly increasing values, comma separated")
      ->required()
      ->delimiter(',');
  sweep->add_option("--columns", f.columns, "Output columns, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember(sweep_columns()));
  add_common(sweep, f);
  commands.emplace_back(sweep, cmd_sweep);

  try {
    const std::vector<std::string> merged = merge_config(app, args);
    std::vector<std::string> reversed(merged.rbegin(), merged.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    print_error(err, options, e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    print_error(err, options, e.what());
    return kExitUsage;
  }

  for (const auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    try {
      handler(Command{sub, f}, out);
      return kExitOk;
    } catch (const UsageError& e) {
      print_error(err, options, e.what());
    } catch (const DomainError& e) {
      print_error(err, options, e.what());
    } catch (const ConfigurationError& e) {
      print_error(err, options, e.what());
    } catch (const ShapeError& e) {
      print_error(err, options, e.what());
    } catch (const ReconstructionError& e) {
      print_error(err, options, e.what());
    } catch (const std::exception& e) {
      print_error(err, options, std::string("internal: ") + e.what());
      return 1;
    }
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace agia::cli
