#pragma once

// JSON documents for CmdpSpec, LpSolution, HyperParams and learner
// snapshots, plus the per-episode metrics CSV.
//
// Tables are flat row-major arrays next to explicit shape fields:
//   transitions  [h][x][a][x']   rewards / utilities / occupancy  [h][x][a]

#include "tripleq/cmdp.hpp"
#include "tripleq/harness.hpp"
#include "tripleq/lp.hpp"
#include "tripleq/triple_q.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace tripleq {

using Json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

Json cmdp_to_json(const Cmdp& spec);
/// Throws CmdpError for missing fields or invalid models.
Cmdp cmdp_from_json(const Json& doc);

Json lp_solution_to_json(const LpSolution& sol);
LpSolution lp_solution_from_json(const Json& doc);

Json hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const Json& doc);

Json learner_to_json(const LearnerState& state);
LearnerState learner_from_json(const Json& doc);

inline constexpr const char* kMetricsHeader =
    "k,reward_realized,utility_realized,v_pik,w_pik,z,regret_cum,violation_cum";

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// Sidecar document: seed, hyperparameters, baseline, rho, eval cadence and
/// a wall-clock timestamp.
Json run_header_json(const RunMetrics& metrics, const std::string& timestamp);

}  // namespace tripleq
