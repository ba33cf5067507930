#include "finmem/report_io.hpp"

#include "finmem/model_io.hpp"

#include <charconv>
#include <ostream>

namespace finmem {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_residual_csv(std::ostream& out, const IterationTrace& trace) {
    out << "k,residual\n";
    for (std::size_t k = 0; k < trace.residuals.size(); ++k)
        out << (k + 1) << ',' << format_double(trace.residuals[k]) << '\n';
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
    out << "k,sup_error,bound,slack,satisfied\n";
    for (const auto& r : report.rows)
        out << r.k << ',' << format_double(r.sup_error) << ',' << format_double(r.bound) << ','
            << format_double(r.slack) << ',' << (r.satisfied ? "true" : "false") << '\n';
}

ordered_json trace_json(const IterationTrace& trace) {
    return {{"iterations", trace.iterations}, {"converged", trace.converged}, {"residuals", trace.residuals}};
}

namespace {

ordered_json space_legend(const InfoSpace& space) {
    return {{"n_points", space.n_points()},
            {"memory", space.memory()},
            {"window_order", "newest first; index = sum_lag x(-lag) * n_points^lag"}};
}

} // namespace

ordered_json value_table_json(const ValueTable& J, const InfoSpace& space) {
    ordered_json j = space_legend(space);
    j["layout"] = "info";
    j["values"] = J.values;
    return j;
}

ordered_json q_table_json(const QTable& Q, const InfoSpace& space) {
    ordered_json j = space_legend(space);
    j["layout"] = "info * n_actions + action";
    j["n_actions"] = Q.n_actions;
    j["values"] = Q.values;
    return j;
}

ordered_json policy_json(const Policy& policy, const InfoSpace& space) {
    ordered_json j = space_legend(space);
    j["choice"] = policy.choice;
    return j;
}

ordered_json lipschitz_json(const LipschitzEstimate& est) {
    return {{"memory", est.memory},
            {"value", est.value},
            {"mode", est.mode == LipschitzMode::exact ? "exact" : "sampled"},
            {"is_exact", est.is_exact},
            {"windows", est.windows},
            {"samples", est.samples},
            {"method", est.method}};
}

ordered_json bound_report_json(const BoundReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"k", r.k},
                        {"sup_error", r.sup_error},
                        {"bound", r.bound},
                        {"slack", r.slack},
                        {"satisfied", r.satisfied},
                        {"witness_info", r.witness_info},
                        {"witness_action", r.witness_action},
                        {"witness_belief", r.witness_belief}});
    return {{"in_scope", report.in_scope},
            {"all_satisfied", report.all_satisfied()},
            {"limit_bound", report.limit_bound},
            {"tail_start", report.tail_start},
            {"limit_satisfied", report.limit_satisfied},
            {"episode_seed", report.episode_seed},
            {"policy_label", report.policy_label},
            {"lipschitz", lipschitz_json(report.lipschitz)},
            {"rows", rows}};
}

Policy policy_from_json(const nlohmann::json& j, const InfoSpace& space) {
    const auto it = j.find("policy");
    if (it == j.end() || !it->is_object()) throw ConfigError("policy", "missing policy object");
    const auto& p = *it;
    auto field = [&](const char* key) -> const nlohmann::json& {
        const auto f = p.find(key);
        if (f == p.end()) throw ConfigError(std::string("policy.") + key, "missing field");
        return *f;
    };
    if (field("n_points").get<std::size_t>() != space.n_points() || field("memory").get<std::size_t>() != space.memory())
        throw ConfigError("policy", "policy was computed for a different grid or memory");
    const auto& choice = field("choice");
    if (!choice.is_array() || choice.size() != space.size())
        throw ConfigError("policy.choice", "expected " + std::to_string(space.size()) + " entries");
    Policy out;
    out.choice = choice.get<std::vector<std::size_t>>();
    return out;
}

} // namespace finmem
