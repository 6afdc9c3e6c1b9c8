#include "tripleq/cli.hpp"

#include "tripleq/envs.hpp"
#include "tripleq/harness.hpp"
#include "tripleq/io.hpp"
#include "tripleq/lp.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace tripleq::cli {

namespace {

// Flag/config validation failure; message names the field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every flag is stored as a string under the same key a config file uses.
class FlagSet {
 public:
  void add(CLI::App& app, const std::string& key, const std::string& help) {
    auto& slot = values_[key];
    options_[key] = app.add_option("--" + key, slot, help);
  }

  Json to_json() const {
    Json doc = Json::object();
    for (const auto& [key, opt] : options_) {
      if (opt->count() > 0) doc[key] = values_.at(key);
    }
    return doc;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
};

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  try {
    Json doc = Json::parse(in);
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    return doc;
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// Config values may be JSON numbers or strings (flags are always strings).
double get_double(const Json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  try {
    if (v.is_number()) return v.get<double>();
    std::size_t used = 0;
    const auto s = v.get<std::string>();
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number");
  }
}

long get_long(const Json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  try {
    if (v.is_number_integer()) return v.get<long>();
    std::size_t used = 0;
    const auto s = v.get<std::string>();
    const long n = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer");
  }
}

std::string get_string(const Json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ConfigError(key + ": expected a string");
}

std::optional<double> opt_double(const Json& cfg, const std::string& key) {
  if (!cfg.contains(key)) return std::nullopt;
  return get_double(cfg, key);
}

std::optional<long> opt_long(const Json& cfg, const std::string& key) {
  if (!cfg.contains(key)) return std::nullopt;
  return get_long(cfg, key);
}

// "7", "1..5", "1,3,5" or a JSON array of integers.
std::vector<std::uint64_t> parse_seeds(const Json& cfg) {
  if (!cfg.contains("seed")) return {0};
  const auto& v = cfg.at("seed");
  std::vector<std::uint64_t> seeds;
  try {
    if (v.is_array()) {
      for (const auto& s : v) seeds.push_back(s.get<std::uint64_t>());
    } else if (v.is_number_integer()) {
      seeds.push_back(v.get<std::uint64_t>());
    } else {
      const auto text = v.get<std::string>();
      const auto dots = text.find("..");
      if (dots != std::string::npos) {
        const auto lo = std::stoull(text.substr(0, dots));
        const auto hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument(text);
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          std::size_t used = 0;
          seeds.push_back(std::stoull(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        }
      }
    }
  } catch (const std::exception&) {
    throw ConfigError("seed: expected an integer, a list a,b,c or a range lo..hi");
  }
  if (seeds.empty()) throw ConfigError("seed: no seeds given");
  return seeds;
}

Cell parse_cell(const Json& v, const std::string& key) {
  try {
    if (v.is_array() && v.size() == 2) return {v[0].get<int>(), v[1].get<int>()};
    const auto text = v.get<std::string>();
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a cell 'row,col'");
  }
}

// "r,c;r,c" or [[r,c], ...]
std::vector<Cell> parse_cells(const Json& v, const std::string& key) {
  std::vector<Cell> cells;
  if (v.is_array()) {
    for (const auto& item : v) cells.push_back(parse_cell(item, key));
    return cells;
  }
  if (!v.is_string()) throw ConfigError(key + ": expected 'r,c;r,c' or a list of pairs");
  std::stringstream ss(v.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) cells.push_back(parse_cell(Json(item), key));
  }
  return cells;
}

struct EnvChoice {
  std::string name;
  Cmdp spec;
  // A requested rho above H cannot live in the model; the excess is carried
  // here and added to the LP tightening, where it reads as infeasible.
  double rho_excess = 0.0;
};

EnvChoice build_env(const Json& cfg) {
  if (!cfg.contains("env")) throw ConfigError("env: required (gridworld | random | chain | <spec.json>)");
  const auto env = get_string(cfg, "env");
  auto built = [&]() -> Cmdp {
    try {
      if (env == "chain") return chain_cmdp();
      if (env == "random") {
        const int S = static_cast<int>(opt_long(cfg, "states").value_or(2));
        const int A = static_cast<int>(opt_long(cfg, "actions").value_or(2));
        const int H = static_cast<int>(opt_long(cfg, "horizon").value_or(3));
        const auto seed = static_cast<std::uint64_t>(opt_long(cfg, "env-seed").value_or(11));
        return random_cmdp(S, A, H, seed);
      }
      if (env == "gridworld") {
        GridWorldConfig g;
        if (auto v = opt_long(cfg, "width")) g.width = static_cast<int>(*v);
        if (auto v = opt_long(cfg, "height")) g.height = static_cast<int>(*v);
        if (auto v = opt_long(cfg, "horizon")) g.horizon = static_cast<int>(*v);
        if (auto v = opt_double(cfg, "budget")) g.cost_budget = *v;
        if (auto v = opt_double(cfg, "slip")) g.slip_prob = *v;
        if (cfg.contains("obstacles")) g.obstacles = parse_cells(cfg.at("obstacles"), "obstacles");
        if (cfg.contains("start")) g.start = parse_cell(cfg.at("start"), "start");
        if (cfg.contains("goal")) {
          g.goal = parse_cell(cfg.at("goal"), "goal");
        } else {
          g.goal = {g.height - 1, g.width - 1};
        }
        return grid_world(g);
      }
      std::ifstream in(env);
      if (!in) throw ConfigError("env: unknown environment or unreadable spec file '" + env + "'");
      Json doc;
      try {
        doc = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("env: " + std::string(e.what()));
      }
      return cmdp_from_json(doc);
    } catch (const CmdpError& e) {
      throw ConfigError(std::string("env: ") + e.what());
    }
  }();
  double excess = 0.0;
  if (auto rho = opt_double(cfg, "rho")) {
    const double H = built.horizon();
    if (*rho > H) excess = *rho - H;
    try {
      built = built.with_rho(std::min(*rho, H));
    } catch (const CmdpError& e) {
      throw ConfigError(e.what());
    }
  }
  return {env, std::move(built), excess};
}

void add_env_flags(CLI::App& app, FlagSet& flags) {
  flags.add(app, "env", "gridworld | random | chain | path to a spec JSON");
  flags.add(app, "rho", "override the utility threshold");
  flags.add(app, "width", "grid width");
  flags.add(app, "height", "grid height");
  flags.add(app, "horizon", "episode length H (gridworld, random)");
  flags.add(app, "budget", "grid cost budget");
  flags.add(app, "slip", "grid slip probability");
  flags.add(app, "obstacles", "grid obstacles 'r,c;r,c'");
  flags.add(app, "start", "grid start cell 'r,c'");
  flags.add(app, "goal", "grid goal cell 'r,c'");
  flags.add(app, "states", "random: number of states");
  flags.add(app, "actions", "random: number of actions");
  flags.add(app, "env-seed", "random: instance seed");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

HyperParams build_hyperparams(const Json& cfg, const Cmdp& spec) {
  if (!cfg.contains("episodes")) throw ConfigError("episodes: required");
  const long K = get_long(cfg, "episodes");
  if (K < 1) throw ConfigError("episodes: must be >= 1");
  const auto mode = cfg.contains("mode") ? get_string(cfg, "mode") : std::string("practical");
  PracticalOverrides o;
  o.iota = opt_double(cfg, "iota");
  o.epsilon = opt_double(cfg, "epsilon");
  o.chi = opt_double(cfg, "chi");
  o.eta = opt_double(cfg, "eta");
  o.frame_len = opt_long(cfg, "frame-len");
  try {
    if (mode == "theory") {
      if (!o.empty()) throw ConfigError("mode: hyperparameter overrides are only legal in practical mode");
      return HyperParams::theory(spec.num_states(), spec.num_actions(), spec.horizon(), K);
    }
    if (mode == "practical") {
      return HyperParams::practical(spec.num_states(), spec.num_actions(), spec.horizon(), K, o);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("mode: expected theory or practical");
}

int cmd_run(const Json& cfg, std::ostream& out) {
  const auto env = build_env(cfg);
  const auto hp = build_hyperparams(cfg, env.spec);
  const auto seeds = parse_seeds(cfg);
  const long eval_every = opt_long(cfg, "eval-every").value_or(env.name == "gridworld" ? 100 : 1);
  if (eval_every < 1) throw ConfigError("eval-every: must be >= 1");
  const long stop_episodes = opt_long(cfg, "stop-episodes").value_or(0);
  if (stop_episodes < 0) throw ConfigError("stop-episodes: must be >= 0");
  const std::filesystem::path dir = cfg.contains("out") ? get_string(cfg, "out") : std::string("out");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("out: cannot create '" + dir.string() + "'");

  if (env.rho_excess > 0.0) throw InfeasibleError("rho exceeds the horizon; no policy can attain it");
  const double baseline = baseline_value(env.spec);
  for (const auto seed : seeds) {
    RunOptions opts;
    opts.eval_every = eval_every;
    opts.baseline = baseline;
    const auto result = run_experiment(env.spec, hp, seed, opts);
    const auto stem = "run_seed" + std::to_string(seed);
    {
      std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
      write_metrics_csv(csv, result.metrics);
    }
    {
      Json header = run_header_json(result.metrics, utc_timestamp());
      header["env"] = env.name;
      header["frame_boundaries"] = result.frame_boundaries;
      std::ofstream side(dir / (stem + ".json"));
      side << header.dump(2) << '\n';
    }
    {
      std::ofstream learner(dir / (stem + ".learner.json"));
      learner << learner_to_json(result.final_state).dump() << '\n';
    }
    const auto& last = result.metrics.rows.back();
    out << "seed " << seed << ": episodes=" << last.k << " regret=" << format_double(last.regret_cum)
        << " violation=" << format_double(last.violation_cum) << " z=" << format_double(result.final_state.z())
        << '\n';
    if (stop_episodes > 0) {
      const auto stop = run_stop_mode(result.final_state, env.spec, stop_episodes, seed + 1, opts);
      std::ofstream csv(dir / (stem + "_stop.csv"), std::ios::binary);
      write_metrics_csv(csv, stop.metrics);
    }
  }
  return kOk;
}

int cmd_baseline(const Json& cfg, bool with_policy, std::ostream& out) {
  const auto env = build_env(cfg);
  const double epsilon = opt_double(cfg, "epsilon").value_or(0.0);
  if (epsilon < 0.0) throw ConfigError("epsilon: must be >= 0");
  const auto sol = solve_cmdp_lp(env.spec, epsilon + env.rho_excess);
  Json doc = lp_solution_to_json(sol);
  doc.erase("occupancy");
  doc.erase("S");
  doc.erase("A");
  doc.erase("H");
  if (with_policy && sol.status == LpStatus::optimal) {
    const auto pi = occupancy_to_policy(sol.occupancy);
    Json steps = Json::array();
    for (const auto& table : pi.probabilities()) {
      Json rows = Json::array();
      for (Eigen::Index x = 0; x < table.rows(); ++x) {
        std::vector<double> row(static_cast<std::size_t>(table.cols()));
        for (Eigen::Index a = 0; a < table.cols(); ++a) row[static_cast<std::size_t>(a)] = table(x, a);
        rows.push_back(row);
      }
      steps.push_back(rows);
    }
    doc["policy"] = steps;
  }
  out << doc.dump() << '\n';
  return kOk;
}

int cmd_env(const Json& cfg, std::ostream& out) {
  const auto env = build_env(cfg);
  if (env.rho_excess > 0.0) throw ConfigError("rho: must lie in [0, H]");
  out << cmdp_to_json(env.spec).dump() << '\n';
  return kOk;
}

int cmd_compare(const std::vector<std::string>& files, double tail_fraction, std::ostream& out) {
  if (files.empty()) throw ConfigError("files: at least one metrics CSV required");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ConfigError("tail: must lie in (0, 1]");
  out << "file,episodes,regret_cum,violation_cum,tail_mean_v,tail_mean_w,tail_mean_reward,tail_mean_utility\n";
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw ConfigError("files: cannot open '" + path + "'");
    std::vector<MetricsRow> rows;
    try {
      rows = read_metrics_csv(in);
    } catch (const std::exception& e) {
      throw ConfigError("files: " + path + ": " + e.what());
    }
    if (rows.empty()) throw ConfigError("files: " + path + " has no rows");
    const auto n = rows.size();
    const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) * tail_fraction));
    double v = 0, w = 0, r = 0, u = 0;
    for (auto i = n - tail; i < n; ++i) {
      v += rows[i].v_pik;
      w += rows[i].w_pik;
      r += rows[i].reward_realized;
      u += rows[i].utility_realized;
    }
    const double t = static_cast<double>(tail);
    out << path << ',' << n << ',' << format_double(rows.back().regret_cum) << ','
        << format_double(rows.back().violation_cum) << ',' << format_double(v / t) << ',' << format_double(w / t)
        << ',' << format_double(r / t) << ',' << format_double(u / t) << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Triple-Q constrained MDP toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; keys mirror flag names");
  };

  FlagSet run_flags;
  auto* run_cmd = app.add_subcommand("run", "run Triple-Q experiments and write metrics CSVs");
  add_config(run_cmd);
  add_env_flags(*run_cmd, run_flags);
  run_flags.add(*run_cmd, "episodes", "number of episodes K");
  run_flags.add(*run_cmd, "seed", "seed, list a,b,c or range lo..hi");
  run_flags.add(*run_cmd, "mode", "theory | practical");
  run_flags.add(*run_cmd, "iota", "practical override");
  run_flags.add(*run_cmd, "epsilon", "practical override");
  run_flags.add(*run_cmd, "chi", "practical override");
  run_flags.add(*run_cmd, "eta", "practical override");
  run_flags.add(*run_cmd, "frame-len", "practical override");
  run_flags.add(*run_cmd, "eval-every", "exact evaluation cadence");
  run_flags.add(*run_cmd, "stop-episodes", "episodes of frozen-table continuation after training");
  run_flags.add(*run_cmd, "out", "output directory");

  FlagSet baseline_flags;
  bool with_policy = false;
  auto* baseline_cmd = app.add_subcommand("baseline", "solve the (tightened) occupancy LP");
  add_config(baseline_cmd);
  add_env_flags(*baseline_cmd, baseline_flags);
  baseline_flags.add(*baseline_cmd, "epsilon", "tightening added to rho");
  baseline_cmd->add_flag("--policy", with_policy, "also print the extracted policy");

  FlagSet env_flags;
  auto* env_cmd = app.add_subcommand("env", "print the environment as a spec JSON document");
  add_config(env_cmd);
  add_env_flags(*env_cmd, env_flags);

  std::vector<std::string> files;
  double tail = 0.1;
  auto* compare_cmd = app.add_subcommand("compare", "summarize metrics CSVs");
  compare_cmd->add_option("files", files, "metrics CSV files")->required();
  compare_cmd->add_option("--tail", tail, "fraction of final episodes averaged");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    auto merged = [&](const FlagSet& flags) {
      Json cfg = config_path.empty() ? Json::object() : load_config(config_path);
      cfg.update(flags.to_json());
      return cfg;
    };
    if (*run_cmd) return cmd_run(merged(run_flags), out);
    if (*baseline_cmd) return cmd_baseline(merged(baseline_flags), with_policy, out);
    if (*env_cmd) return cmd_env(merged(env_flags), out);
    if (*compare_cmd) return cmd_compare(files, tail, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const LpSolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kConfigError;
}

}  // namespace tripleq::cli
