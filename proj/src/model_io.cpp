#include "finmem/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <memory>

namespace finmem {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join(path, key), "missing field");
    return *it;
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number, got " + std::string(j.type_name()));
    return j.get<double>();
}

std::size_t as_index(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
        throw ConfigError(path, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

std::vector<double> as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], at_index(path, i)));
    return out;
}

Eigen::MatrixXd as_matrix(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_array() || j.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = as_vector(j[r], at_index(path, r));
        if (row.size() != n)
            throw ConfigError(at_index(path, r), "expected " + std::to_string(n) + " entries");
        for (std::size_t c = 0; c < n; ++c) P(Eigen::Index(r), Eigen::Index(c)) = row[c];
    }
    return P;
}

double optional_double(const json& j, const std::string& key, double fallback, const std::string& path) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : as_double(*it, join(path, key));
}

GridSpace parse_grid(const json& j) {
    const auto& bounds = require(j, "bounds", "grid");
    if (!bounds.is_array() || bounds.empty()) throw ConfigError("grid.bounds", "expected a nonempty array of [lo, hi]");
    std::vector<Interval> box;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto v = as_vector(bounds[i], at_index("grid.bounds", i));
        if (v.size() != 2) throw ConfigError(at_index("grid.bounds", i), "expected [lo, hi]");
        box.push_back({v[0], v[1]});
    }
    const std::size_t n = as_index(require(j, "points_per_axis", "grid"), "grid.points_per_axis");
    try {
        return GridSpace(std::move(box), n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("grid", e.what());
    }
}

ActionSet parse_actions(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("actions", "expected a nonempty array");
    ActionSet set;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = at_index("actions", i);
        const auto& label = require(j[i], "label", path);
        if (!label.is_string()) throw ConfigError(join(path, "label"), "expected a string");
        set.actions.push_back({label.get<std::string>(), as_vector(require(j[i], "payload", path), join(path, "payload"))});
    }
    return set;
}

std::vector<ModeDrift> parse_mode_drifts(const json& j, std::size_t modes, std::size_t dim) {
    const auto& list = require(j, "modes", "dynamics");
    if (!list.is_array() || list.size() != modes)
        throw ConfigError("dynamics.modes", "expected one entry per mode (" + std::to_string(modes) + ")");
    std::vector<ModeDrift> out;
    for (std::size_t s = 0; s < modes; ++s) {
        const std::string path = at_index("dynamics.modes", s);
        ModeDrift m;
        const auto it = list[s].find("drift");
        m.drift = it == list[s].end() ? std::vector<double>(dim, 0.0) : as_vector(*it, join(path, "drift"));
        if (m.drift.size() != dim) throw ConfigError(join(path, "drift"), "expected " + std::to_string(dim) + " entries");
        m.gain = optional_double(list[s], "gain", 1.0, path);
        m.scale = optional_double(list[s], "scale", 1.0, path);
        m.sigma = optional_double(list[s], "sigma", 0.1, path);
        out.push_back(std::move(m));
    }
    return out;
}

TransitionKernel parse_table_kernel(const json& j, std::size_t N, std::size_t S, std::size_t U) {
    TransitionKernel k(N, S, U);
    const auto probs = as_vector(require(j, "probs", "dynamics"), "dynamics.probs");
    if (probs.size() != k.probs.size())
        throw ConfigError("dynamics.probs", "expected " + std::to_string(k.probs.size()) + " entries (x, s, u, x')");
    k.probs = probs;
    const auto it = j.find("exit");
    if (it != j.end()) {
        const auto exit = as_vector(*it, "dynamics.exit");
        if (exit.size() != k.exit_mass.size())
            throw ConfigError("dynamics.exit", "expected " + std::to_string(k.exit_mass.size()) + " entries (x, s, u)");
        k.exit_mass = exit;
    }
    return k;
}

TransitionKernel parse_dynamics(const json& j, const GridSpace& grid, std::size_t modes, const ActionSet& actions) {
    const auto& fam = require(j, "family", "dynamics");
    if (!fam.is_string()) throw ConfigError("dynamics.family", "expected a string");
    const std::string family = fam.get<std::string>();
    std::unique_ptr<DensityFamily> density;
    if (family == "gaussian")
        density = std::make_unique<GaussianDensity>(parse_mode_drifts(j, modes, grid.dim()));
    else if (family == "truncated_gaussian")
        density = std::make_unique<TruncatedGaussianDensity>(parse_mode_drifts(j, modes, grid.dim()), grid.bounds());
    else if (family == "point_mass")
        density = std::make_unique<PointMassDensity>(parse_mode_drifts(j, modes, grid.dim()));
    else if (family == "identity")
        density = std::make_unique<PointMassDensity>(PointMassDensity::identity(grid.dim(), modes));
    else if (family == "uniform")
        density = std::make_unique<UniformDensity>(grid);
    else if (family == "table")
        return parse_table_kernel(j, grid.size(), modes, actions.size());
    else
        throw ConfigError("dynamics.family", "unknown family '" + family +
                                                 "' (gaussian, truncated_gaussian, point_mass, identity, uniform, table)");
    try {
        return build_kernel(*density, grid, modes, actions);
    } catch (const ModelError& e) {
        throw ConfigError("dynamics", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("dynamics", e.what());
    }
}

ChainModel parse_chain(const json& j, const GridSpace& grid, std::size_t modes) {
    const auto& type_field = require(j, "type", "chain");
    if (!type_field.is_string()) throw ConfigError("chain.type", "expected a string");
    const std::string type = type_field.get<std::string>();
    if (type == "constant") return constant_chain(as_matrix(require(j, "matrix", "chain"), modes, "chain.matrix"), grid.size());
    if (type == "blend") {
        const auto lo = as_matrix(require(j, "at_lo", "chain"), modes, "chain.at_lo");
        const auto hi = as_matrix(require(j, "at_hi", "chain"), modes, "chain.at_hi");
        const auto it = j.find("axis");
        const std::size_t axis = it == j.end() ? 0 : as_index(*it, "chain.axis");
        if (axis >= grid.dim()) throw ConfigError("chain.axis", "axis beyond grid dimension");
        return blended_chain(grid, lo, hi, axis);
    }
    if (type == "explicit") {
        const auto& list = require(j, "matrices", "chain");
        if (!list.is_array() || list.size() != grid.size())
            throw ConfigError("chain.matrices", "expected one matrix per grid point (" + std::to_string(grid.size()) + ")");
        ChainModel c;
        c.n_modes = modes;
        for (std::size_t x = 0; x < list.size(); ++x)
            c.matrices.push_back(as_matrix(list[x], modes, at_index("chain.matrices", x)));
        return c;
    }
    throw ConfigError("chain.type", "unknown type '" + type + "' (constant, blend, explicit)");
}

RewardModel parse_reward(const json& j, const GridSpace& grid, const ActionSet& actions) {
    const auto& type_field = require(j, "type", "reward");
    if (!type_field.is_string()) throw ConfigError("reward.type", "expected a string");
    const std::string type = type_field.get<std::string>();
    const double M = as_double(require(j, "M", "reward"), "reward.M");
    if (type == "quadratic") {
        const auto target = as_vector(require(j, "target", "reward"), "reward.target");
        if (target.size() != grid.dim()) throw ConfigError("reward.target", "expected " + std::to_string(grid.dim()) + " entries");
        return quadratic_reward(grid, actions, target, optional_double(j, "state_weight", 1.0, "reward"),
                                optional_double(j, "action_weight", 0.0, "reward"), M);
    }
    if (type == "constant")
        return constant_reward(grid.size(), actions.size(), as_double(require(j, "value", "reward"), "reward.value"), M);
    if (type == "table") {
        const auto& rows = require(j, "values", "reward");
        if (!rows.is_array() || rows.size() != grid.size())
            throw ConfigError("reward.values", "expected one row per grid point (" + std::to_string(grid.size()) + ")");
        RewardModel r{grid.size(), actions.size(), {}, M};
        for (std::size_t x = 0; x < rows.size(); ++x) {
            const auto row = as_vector(rows[x], at_index("reward.values", x));
            if (row.size() != actions.size())
                throw ConfigError(at_index("reward.values", x), "expected one entry per action");
            r.values.insert(r.values.end(), row.begin(), row.end());
        }
        return r;
    }
    throw ConfigError("reward.type", "unknown type '" + type + "' (quadratic, constant, table)");
}

} // namespace

MdpModel parse_model(const json& config) {
    MdpModel m{parse_grid(require(config, "grid", "")), 1, {}, {}, {}, {}, 0.9, {}, {}};
    m.modes = as_index(require(config, "modes", ""), "modes");
    if (m.modes == 0) throw ConfigError("modes", "must be positive");
    m.actions = parse_actions(require(config, "actions", ""));
    for (const auto& a : m.actions.actions)
        if (a.payload.size() != m.grid.dim())
            throw ConfigError("actions", "payload of '" + a.label + "' must have " + std::to_string(m.grid.dim()) + " entries");
    m.kernel = parse_dynamics(require(config, "dynamics", ""), m.grid, m.modes, m.actions);
    m.chain = parse_chain(require(config, "chain", ""), m.grid, m.modes);
    m.reward = parse_reward(require(config, "reward", ""), m.grid, m.actions);
    m.gamma = as_double(require(config, "gamma", ""), "gamma");

    const auto it = config.find("initial");
    const json initial = it == config.end() ? json::object() : *it;
    const auto x = initial.find("x");
    if (x == initial.end() || (x->is_string() && x->get<std::string>() == "uniform")) {
        m.initial_x.assign(m.n_points(), 1.0 / double(m.n_points()));
    } else {
        m.initial_x = as_vector(*x, "initial.x");
        if (m.initial_x.size() != m.n_points())
            throw ConfigError("initial.x", "expected \"uniform\" or one probability per grid point");
    }
    const auto s = initial.find("s");
    if (s == initial.end() || (s->is_string() && s->get<std::string>() == "uniform"))
        m.initial_s.assign(m.modes, 1.0 / double(m.modes));
    else
        m.initial_s = as_vector(*s, "initial.s");
    return m;
}

SolverConfig parse_solver(const json& config) {
    SolverConfig c;
    const auto it = config.find("solver");
    if (it == config.end()) return c;
    const json& j = *it;
    if (!j.is_object()) throw ConfigError("solver", "expected an object");
    auto idx = [&](const char* key, std::size_t& out) {
        if (auto f = j.find(key); f != j.end()) out = as_index(*f, join("solver", key));
    };
    idx("memory", c.memory);
    idx("max_iters", c.max_iters);
    idx("belief_res", c.belief_res);
    idx("iters", c.iters);
    idx("episodes", c.episodes);
    idx("seeds", c.seeds);
    idx("max_steps", c.max_steps);
    idx("max_memory", c.max_memory);
    idx("lipschitz_samples", c.lipschitz_samples);
    if (auto f = j.find("seed"); f != j.end()) c.seed = as_index(*f, "solver.seed");
    if (auto f = j.find("threads"); f != j.end()) c.threads = unsigned(as_index(*f, "solver.threads"));
    if (auto f = j.find("start"); f != j.end()) c.start = as_index(*f, "solver.start");
    c.tol = optional_double(j, "tol", c.tol, "solver");
    c.reward_noise = optional_double(j, "reward_noise", c.reward_noise, "solver");
    if (!(c.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
    if (c.reward_noise < 0.0) throw ConfigError("solver.reward_noise", "must be nonnegative");
    if (auto f = j.find("mixing"); f != j.end()) {
        const auto& type = require(*f, "type", "solver.mixing");
        if (!type.is_string()) throw ConfigError("solver.mixing.type", "expected a string");
        c.mixing = type.get<std::string>();
        if (auto b = f->find("belief"); b != f->end()) c.mixing_belief = as_vector(*b, "solver.mixing.belief");
    }
    if (c.mixing != "uniform" && c.mixing != "stationary" && c.mixing != "prior" && c.mixing != "constant")
        throw ConfigError("solver.mixing.type", "unknown mixing '" + c.mixing + "' (uniform, stationary, prior, constant)");
    if (auto f = j.find("window"); f != j.end()) {
        if (!f->is_array() || f->empty()) throw ConfigError("solver.window", "expected a nonempty array of grid indices");
        std::vector<std::size_t> w;
        for (std::size_t i = 0; i < f->size(); ++i) w.push_back(as_index((*f)[i], at_index("solver.window", i)));
        c.window = std::move(w);
    }
    return c;
}

std::size_t default_belief_resolution(std::size_t modes) { return modes <= 2 ? 20 : 10; }

ExperimentConfig parse_config(const json& config) {
    ExperimentConfig out{parse_model(config), parse_solver(config)};
    if (out.solver.belief_res == 0) out.solver.belief_res = default_belief_resolution(out.model.modes);
    if (out.solver.window) {
        for (std::size_t i = 0; i < out.solver.window->size(); ++i)
            if ((*out.solver.window)[i] >= out.model.n_points())
                throw ConfigError(at_index("solver.window", i), "grid index out of range");
    }
    if (out.solver.start && *out.solver.start >= out.model.n_points())
        throw ConfigError("solver.start", "grid index out of range");
    return out;
}

json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_config_file(path)); }

nlohmann::ordered_json dump_model(const MdpModel& m) {
    using ojson = nlohmann::ordered_json;
    const std::size_t N = m.n_points(), S = m.modes, U = m.n_actions();
    ojson out;
    out["encoding"] = "float64";
    ojson bounds = ojson::array();
    for (const auto& b : m.grid.bounds()) bounds.push_back({b.lo, b.hi});
    out["grid"] = {{"bounds", bounds}, {"points_per_axis", m.grid.points_per_axis()}, {"size", N}};
    out["modes"] = S;
    ojson actions = ojson::array();
    for (const auto& a : m.actions.actions) actions.push_back({{"label", a.label}, {"payload", a.payload}});
    out["actions"] = actions;
    out["kernel"] = {{"shape", {N, S, U, N}}, {"probs", m.kernel.probs},
                     {"exit_shape", {N, S, U}}, {"exit", m.kernel.exit_mass}};
    std::vector<double> chain;
    chain.reserve(N * S * S);
    for (const auto& P : m.chain.matrices)
        for (Eigen::Index r = 0; r < P.rows(); ++r)
            for (Eigen::Index c = 0; c < P.cols(); ++c) chain.push_back(P(r, c));
    out["chain"] = {{"shape", {m.chain.n_points(), S, S}}, {"values", chain}};
    out["reward"] = {{"shape", {N, U}}, {"values", m.reward.values}, {"M", m.reward.bound_M}};
    out["gamma"] = m.gamma;
    out["initial"] = {{"x", m.initial_x}, {"s", m.initial_s}};
    return out;
}

std::size_t default_start(const MdpModel& model) {
    if (model.initial_x.empty()) return 0;
    return std::size_t(std::max_element(model.initial_x.begin(), model.initial_x.end()) - model.initial_x.begin());
}

} // namespace finmem
