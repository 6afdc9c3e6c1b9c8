#include "tripleq/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace tripleq {

namespace {

template <class T>
T field(const Json& doc, const char* name) {
  if (!doc.contains(name)) throw CmdpError(std::string("json: missing field '") + name + "'");
  try {
    return doc.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw CmdpError(std::string("json: field '") + name + "': " + e.what());
  }
}

std::vector<double> flat_tables(const StepTables<double>& tables) {
  std::vector<double> flat;
  for (const auto& t : tables) {
    for (Eigen::Index x = 0; x < t.rows(); ++x) {
      for (Eigen::Index a = 0; a < t.cols(); ++a) flat.push_back(t(x, a));
    }
  }
  return flat;
}

StepTables<double> unflatten(const std::vector<double>& flat, int H, int S, int A, const char* name) {
  if (flat.size() != static_cast<std::size_t>(H) * S * A) {
    throw CmdpError(std::string("json: '") + name + "' expected H*S*A entries");
  }
  StepTables<double> tables;
  std::size_t i = 0;
  for (int h = 0; h < H; ++h) {
    Matrix<double> t(S, A);
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) t(x, a) = flat[i++];
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

const char* mode_name(Mode m) { return m == Mode::theory ? "theory" : "practical"; }

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

Json cmdp_to_json(const Cmdp& spec) {
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  std::vector<double> transitions;
  transitions.reserve(static_cast<std::size_t>(H) * S * A * S);
  for (int h = 0; h < H; ++h) {
    const auto& P = spec.transition(h);
    for (Eigen::Index row = 0; row < P.rows(); ++row) {
      for (Eigen::Index next = 0; next < P.cols(); ++next) transitions.push_back(P(row, next));
    }
  }
  std::vector<double> mu(spec.initial_dist().data(), spec.initial_dist().data() + S);
  return Json{{"S", S},
              {"A", A},
              {"H", H},
              {"rho", spec.rho()},
              {"initial_dist", mu},
              {"transitions", transitions},
              {"rewards", flat_tables(spec.rewards())},
              {"utilities", flat_tables(spec.utilities())}};
}

Cmdp cmdp_from_json(const Json& doc) {
  const int S = field<int>(doc, "S");
  const int A = field<int>(doc, "A");
  const int H = field<int>(doc, "H");
  if (S < 1 || A < 1 || H < 1) throw CmdpError("json: S, A and H must be positive");
  const auto flat_p = field<std::vector<double>>(doc, "transitions");
  if (flat_p.size() != static_cast<std::size_t>(H) * S * A * S) {
    throw CmdpError("json: 'transitions' expected H*S*A*S entries");
  }
  std::vector<Kernel<double>> transitions;
  std::size_t i = 0;
  for (int h = 0; h < H; ++h) {
    Kernel<double> P(S * A, S);
    for (int row = 0; row < S * A; ++row) {
      for (int next = 0; next < S; ++next) P(row, next) = flat_p[i++];
    }
    transitions.push_back(std::move(P));
  }
  const auto mu = field<std::vector<double>>(doc, "initial_dist");
  if (mu.size() != static_cast<std::size_t>(S)) throw CmdpError("json: 'initial_dist' expected S entries");
  Vector<double> mu0 = Eigen::Map<const Vector<double>>(mu.data(), S);
  return Cmdp(S, A, H, std::move(transitions),
              unflatten(field<std::vector<double>>(doc, "rewards"), H, S, A, "rewards"),
              unflatten(field<std::vector<double>>(doc, "utilities"), H, S, A, "utilities"),
              field<double>(doc, "rho"), std::move(mu0));
}

Json lp_solution_to_json(const LpSolution& sol) {
  Json doc;
  doc["status"] = sol.status == LpStatus::optimal ? "optimal" : "infeasible";
  if (sol.status == LpStatus::optimal) {
    doc["objective"] = sol.objective;
    doc["utility_value"] = sol.utility_value;
    doc["H"] = sol.occupancy.size();
    doc["S"] = sol.occupancy.front().rows();
    doc["A"] = sol.occupancy.front().cols();
    doc["occupancy"] = flat_tables(sol.occupancy);
  } else {
    doc["objective"] = nullptr;
    doc["utility_value"] = nullptr;
  }
  return doc;
}

LpSolution lp_solution_from_json(const Json& doc) {
  LpSolution sol;
  const auto status = field<std::string>(doc, "status");
  if (status == "infeasible") return sol;
  if (status != "optimal") throw CmdpError("json: unknown LP status '" + status + "'");
  sol.status = LpStatus::optimal;
  sol.objective = field<double>(doc, "objective");
  sol.utility_value = field<double>(doc, "utility_value");
  sol.occupancy = unflatten(field<std::vector<double>>(doc, "occupancy"), field<int>(doc, "H"),
                            field<int>(doc, "S"), field<int>(doc, "A"), "occupancy");
  return sol;
}

Json hyperparams_to_json(const HyperParams& hp) {
  return Json{{"K", hp.K},
              {"chi", hp.chi},
              {"eta", hp.eta},
              {"iota", hp.iota},
              {"alpha_exp", hp.alpha_exp},
              {"frame_len", hp.frame_len},
              {"epsilon", hp.epsilon},
              {"mode", mode_name(hp.mode)}};
}

HyperParams hyperparams_from_json(const Json& doc) {
  HyperParams hp;
  hp.K = field<long>(doc, "K");
  hp.chi = field<double>(doc, "chi");
  hp.eta = field<double>(doc, "eta");
  hp.iota = field<double>(doc, "iota");
  hp.alpha_exp = field<double>(doc, "alpha_exp");
  hp.frame_len = field<long>(doc, "frame_len");
  hp.epsilon = field<double>(doc, "epsilon");
  const auto mode = field<std::string>(doc, "mode");
  if (mode == "theory") {
    hp.mode = Mode::theory;
  } else if (mode == "practical") {
    hp.mode = Mode::practical;
  } else {
    throw CmdpError("json: unknown mode '" + mode + "'");
  }
  hp.validate();
  return hp;
}

Json learner_to_json(const LearnerState& s) {
  std::vector<long> counts;
  for (const auto& n : s.counts()) {
    for (Eigen::Index x = 0; x < n.rows(); ++x) {
      for (Eigen::Index a = 0; a < n.cols(); ++a) counts.push_back(n(x, a));
    }
  }
  return Json{{"S", s.num_states()},
              {"A", s.num_actions()},
              {"H", s.horizon()},
              {"rho", s.rho()},
              {"q", flat_tables(s.q_table())},
              {"c", flat_tables(s.c_table())},
              {"n", counts},
              {"z", s.z()},
              {"cbar", s.cbar()},
              {"episode_in_frame", s.episode_in_frame()},
              {"episodes_done", s.episodes_done()},
              {"frames_done", s.frames_done()},
              {"hyperparams", hyperparams_to_json(s.hp())}};
}

LearnerState learner_from_json(const Json& doc) {
  const int S = field<int>(doc, "S");
  const int A = field<int>(doc, "A");
  const int H = field<int>(doc, "H");
  LearnerState::Fields f;
  f.q = unflatten(field<std::vector<double>>(doc, "q"), H, S, A, "q");
  f.c = unflatten(field<std::vector<double>>(doc, "c"), H, S, A, "c");
  const auto counts = field<std::vector<long>>(doc, "n");
  if (counts.size() != static_cast<std::size_t>(H) * S * A) throw CmdpError("json: 'n' expected H*S*A entries");
  std::size_t i = 0;
  for (int h = 0; h < H; ++h) {
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> n(S, A);
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) n(x, a) = counts[i++];
    }
    f.n.push_back(std::move(n));
  }
  f.z = field<double>(doc, "z");
  f.cbar = field<double>(doc, "cbar");
  f.episode_in_frame = field<long>(doc, "episode_in_frame");
  f.episodes_done = field<long>(doc, "episodes_done");
  f.frames_done = field<long>(doc, "frames_done");
  f.rho = field<double>(doc, "rho");
  if (!doc.contains("hyperparams")) throw CmdpError("json: missing field 'hyperparams'");
  f.hp = hyperparams_from_json(doc.at("hyperparams"));
  return LearnerState(std::move(f));
}

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
  out << kMetricsHeader << '\n';
  for (const auto& r : metrics.rows) {
    out << r.k << ',' << format_double(r.reward_realized) << ',' << format_double(r.utility_realized) << ','
        << format_double(r.v_pik) << ',' << format_double(r.w_pik) << ',' << format_double(r.z) << ','
        << format_double(r.regret_cum) << ',' << format_double(r.violation_cum) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics csv: unexpected header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != 8) throw std::runtime_error("metrics csv: expected 8 columns");
    MetricsRow r;
    r.k = static_cast<long>(values[0]);
    r.reward_realized = values[1];
    r.utility_realized = values[2];
    r.v_pik = values[3];
    r.w_pik = values[4];
    r.z = values[5];
    r.regret_cum = values[6];
    r.violation_cum = values[7];
    rows.push_back(r);
  }
  return rows;
}

Json run_header_json(const RunMetrics& m, const std::string& timestamp) {
  return Json{{"seed", m.seed},
              {"hyperparams", hyperparams_to_json(m.hp)},
              {"baseline_objective", m.baseline},
              {"rho", m.rho},
              {"eval_every", m.eval_every},
              {"episodes", m.rows.size()},
              {"timestamp", timestamp}};
}

}  // namespace tripleq
