#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gendisc/average_solver.hpp"
#include "gendisc/evaluator.hpp"
#include "gendisc/ldp.hpp"
#include "gendisc/model.hpp"
#include "gendisc/risk_solver.hpp"
#include "gendisc/schedule.hpp"

namespace gendisc::io {

using nlohmann::json;

// Model documents:
//   {"n_states": S, "n_actions": A,
//    "kernel": [ P^0, ..., P^{A-1} ]   each an S x S array of rows,
//    "reward": [ [c(0,0), ..., c(0,A-1)], ..., [c(S-1,0), ...] ]}
// Unknown fields and shape mismatches raise ConfigError; invalid
// probabilities raise InvalidModel from the Model constructor.
Model model_from_json(const json& doc);
json model_to_json(const Model& model);
Model load_model(const std::filesystem::path& path);

// Schedule documents: {"family": "hyperbolic", "h": h, "r": r},
// {"family": "unit"}, {"family": "tabulated", "values": [...], "tail_divergent": bool}.
DiscountSchedule schedule_from_json(const json& doc);
json schedule_to_json(const DiscountSchedule& schedule);

/// Accepts a JSON schedule document or the shorthands `unit`,
/// `hyperbolic:h:r` and `tabulated:v0,v1,...[:divergent]`.
DiscountSchedule parse_schedule(const std::string& spec);

json to_json(const StationaryPolicy& u);
json to_json(const SpanSolution& sol);
json to_json(const CertificateInfo& cert);
json to_json(const RiskSolution& sol);
json to_json(const CheckReport& report);
json to_json(const RateReport& report);
json to_json(const LdpReport& report);
json to_json(const Theorem5Report& report);
json to_json(const DvResult& result);

/// i,phi_i,lambda_tilde_i
std::string lambda_tilde_csv(const TimeExtendedSolution& sol, const DiscountSchedule& schedule);
/// gamma,lambda,certificate,residual
std::string sweep_csv(const std::vector<SweepRow>& rows);
/// n,Sum_phi,Q_exact,bound,normalized_log_Q
std::string ldp_csv(const LdpReport& report);

/// Doubles print with 17 significant digits so files round-trip.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& contents);

} // namespace gendisc::io
