#pragma once

#include "finmem/dp_markov.hpp"
#include "finmem/dp_nonmarkov.hpp"
#include "finmem/info.hpp"
#include "finmem/tables.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace finmem {

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

/// CSV "k,residual", k starting at 1.
void write_residual_csv(std::ostream& out, const IterationTrace& trace);
/// CSV "k,sup_error,bound,slack,satisfied".
void write_bound_csv(std::ostream& out, const BoundReport& report);

nlohmann::ordered_json trace_json(const IterationTrace& trace);
/// Flat values with a legend describing the index layout.
nlohmann::ordered_json value_table_json(const ValueTable& J, const InfoSpace& space);
nlohmann::ordered_json q_table_json(const QTable& Q, const InfoSpace& space);
nlohmann::ordered_json policy_json(const Policy& policy, const InfoSpace& space);
nlohmann::ordered_json lipschitz_json(const LipschitzEstimate& est);
nlohmann::ordered_json bound_report_json(const BoundReport& report);

/// Reads {"policy": {"memory": L, "n_points": N, "choice": [...]}} back. Throws ConfigError.
Policy policy_from_json(const nlohmann::json& j, const InfoSpace& space);

} // namespace finmem
