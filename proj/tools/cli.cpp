#include "cli.hpp"

#include "finmem/dp_belief.hpp"
#include "finmem/dp_markov.hpp"
#include "finmem/dp_nonmarkov.hpp"
#include "finmem/model_io.hpp"
#include "finmem/report_io.hpp"
#include "finmem/rng.hpp"
#include "finmem/sim.hpp"
#include "finmem/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

namespace finmem::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

unsigned long long fnv1a(const std::string& bytes) {
    unsigned long long h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

struct Flags {
    std::string model;
    std::string out;
    std::string policy;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<std::size_t> memory, belief_res, iters, episodes, seeds, max_steps, start, max_memory;
    std::optional<unsigned> threads;
    std::optional<std::string> mixing;
};

struct Context {
    std::string command;
    Flags flags;
    ExperimentConfig config;
    std::string config_bytes;
    fs::path out_dir;
    std::vector<std::uint64_t> seeds_used;
    std::ostream& out;
    std::ostream& err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError(p.string(), "cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

void write_json(const fs::path& p, const ordered_json& j) { write_file(p, j.dump(2) + "\n"); }

SolverOptions solver_options(const SolverConfig& c) { return {c.tol, c.max_iters, c.threads}; }

void apply_flags(SolverConfig& c, const Flags& f) {
    if (f.seed) c.seed = *f.seed;
    if (f.tol) {
        if (!(*f.tol > 0.0)) throw ConfigError("--tol", "must be positive");
        c.tol = *f.tol;
    }
    if (f.memory) c.memory = *f.memory;
    if (f.belief_res) c.belief_res = *f.belief_res;
    if (f.iters) c.iters = *f.iters;
    if (f.episodes) c.episodes = *f.episodes;
    if (f.seeds) c.seeds = *f.seeds;
    if (f.max_steps) c.max_steps = *f.max_steps;
    if (f.start) c.start = *f.start;
    if (f.max_memory) c.max_memory = *f.max_memory;
    if (f.threads) c.threads = *f.threads;
    if (f.mixing) c.mixing = *f.mixing;
    if (c.mixing != "uniform" && c.mixing != "stationary" && c.mixing != "prior" && c.mixing != "constant")
        throw ConfigError("--mixing", "unknown mixing '" + c.mixing + "'");
    if (c.belief_res == 0) throw ConfigError("--belief-res", "must be positive");
    if (c.episodes == 0) throw ConfigError("--episodes", "must be positive");
    if (c.seeds == 0) throw ConfigError("--seeds", "must be positive");
}

ordered_json solver_json(const SolverConfig& c) {
    ordered_json j{{"memory", c.memory},       {"tol", c.tol},           {"max_iters", c.max_iters},
                   {"mixing", c.mixing},       {"belief_res", c.belief_res}, {"iters", c.iters},
                   {"episodes", c.episodes},   {"seed", c.seed},         {"seeds", c.seeds},
                   {"max_steps", c.max_steps}, {"reward_noise", c.reward_noise},
                   {"threads", c.threads},     {"max_memory", c.max_memory},
                   {"lipschitz_samples", c.lipschitz_samples}};
    if (c.window) j["window"] = *c.window;
    if (c.start) j["start"] = *c.start;
    if (c.mixing_belief) j["mixing_belief"] = *c.mixing_belief;
    return j;
}

void write_manifest(const Context& ctx, double wall_seconds, int exit_code) {
    std::ostringstream hash;
    hash << std::hex << fnv1a(ctx.config_bytes);
    ordered_json m{{"command", ctx.command},
                   {"version", kVersion},
                   {"generator", kGeneratorName},
                   {"config_path", ctx.flags.model},
                   {"config_fnv1a", hash.str()},
                   {"parameters", solver_json(ctx.config.solver)},
                   {"seeds", ctx.seeds_used},
                   {"exit_code", exit_code},
                   {"wall_time_seconds", wall_seconds}};
    write_json(ctx.out_dir / "manifest.json", m);
}

MixingWeights make_mixing(const ExperimentConfig& cfg, const InfoSpace& space) {
    const auto& m = cfg.model;
    const auto& mix = cfg.solver.mixing;
    if (mix == "uniform") return MixingWeights::uniform(space, m.modes);
    if (mix == "stationary") {
        if (!m.chain.is_constant())
            throw ConfigError("solver.mixing.type", "stationary mixing needs a constant chain");
        return MixingWeights::stationary(space, m.chain.matrices.front());
    }
    const Belief b = cfg.solver.mixing_belief ? Belief(*cfg.solver.mixing_belief) : m.initial_belief();
    if (mix == "constant") return MixingWeights::constant(space, b);
    return MixingWeights::from_prior(space, m.chain, b);
}

InfoState start_window(const ExperimentConfig& cfg) {
    const auto& s = cfg.solver;
    if (s.window) {
        if (s.window->size() != s.memory + 1)
            throw ConfigError("solver.window", "window has " + std::to_string(s.window->size()) +
                                                   " entries, memory " + std::to_string(s.memory) +
                                                   " needs " + std::to_string(s.memory + 1));
        return InfoState(*s.window);
    }
    return InfoState::repeated(s.start.value_or(default_start(cfg.model)), s.memory);
}

LipschitzEstimate auto_lipschitz(const MdpModel& model, std::size_t L, const SolverConfig& c) {
    try {
        return estimate_lipschitz(model, L, LipschitzMode::exact);
    } catch (const CapacityError&) {
        return estimate_lipschitz(model, L, LipschitzMode::sampled, c.lipschitz_samples, c.seed);
    }
}

// --- commands ----------------------------------------------------------------

int cmd_validate(Context& ctx) {
    const auto violations = validate_model(ctx.config.model);
    ordered_json list = ordered_json::array();
    for (const auto& v : violations) {
        list.push_back({{"path", v.path}, {"rule", v.rule}, {"expected", v.expected}, {"actual", v.actual}});
        ctx.err << v.path << " [" << v.rule << "] expected " << v.expected << ", got " << v.actual << '\n';
    }
    write_json(ctx.out_dir / "violations.json", {{"violations", list}});
    write_json(ctx.out_dir / "model.json", dump_model(ctx.config.model));
    ctx.out << "validate: " << violations.size() << " violation(s)\n";
    return violations.empty() ? kOk : kInvariantViolation;
}

int cmd_solve(Context& ctx) {
    const auto& cfg = ctx.config;
    require_valid(cfg.model);
    const InfoSpace space(cfg.model.n_points(), cfg.solver.memory);
    const auto w = make_mixing(cfg, space);
    const auto opts = solver_options(cfg.solver);
    const auto vi = value_iteration(cfg.model, w, opts);
    const auto qi = q_value_iteration(cfg.model, w, opts);
    const Policy policy = greedy_policy(cfg.model, w, vi.values, opts.threads);

    std::ostringstream csv;
    write_residual_csv(csv, vi.trace);
    write_file(ctx.out_dir / "residuals.csv", csv.str());
    std::ostringstream qcsv;
    write_residual_csv(qcsv, qi.trace);
    write_file(ctx.out_dir / "q_residuals.csv", qcsv.str());

    write_json(ctx.out_dir / "solve.json",
               {{"mixing", w.label()},
                {"iterations", vi.trace.iterations},
                {"predicted_sweeps", predicted_sweeps(opts.tol, cfg.model.gamma, cfg.model.reward.bound_M)},
                {"value_trace", trace_json(vi.trace)},
                {"q_trace", trace_json(qi.trace)},
                {"values", value_table_json(vi.values, space)},
                {"q_values", q_table_json(qi.values, space)},
                {"policy", policy_json(policy, space)}});
    ctx.out << "solve: " << space.size() << " information states, " << vi.trace.iterations
            << " sweeps, converged=" << vi.trace.converged << '\n';
    return vi.trace.converged && qi.trace.converged ? kOk : kNotConverged;
}

int cmd_evaluate(Context& ctx) {
    const auto& cfg = ctx.config;
    require_valid(cfg.model);
    const InfoSpace space(cfg.model.n_points(), cfg.solver.memory);
    const auto w = make_mixing(cfg, space);
    const auto opts = solver_options(cfg.solver);

    Policy policy;
    ValueTable optimal;
    std::string source;
    if (!ctx.flags.policy.empty()) {
        const auto j = nlohmann::json::parse(read_file(ctx.flags.policy), nullptr, false);
        if (j.is_discarded()) throw ConfigError(ctx.flags.policy, "malformed JSON");
        policy = policy_from_json(j, space);
        if (auto v = j.find("values"); v != j.end() && v->contains("values")) {
            optimal.values = (*v)["values"].get<std::vector<double>>();
            if (optimal.size() != space.size()) throw ConfigError("values", "table size does not match memory");
        }
        source = ctx.flags.policy;
    }
    bool converged = true;
    if (optimal.values.empty()) {
        const auto vi = value_iteration(cfg.model, w, opts);
        converged = vi.trace.converged;
        optimal = vi.values;
        if (ctx.flags.policy.empty()) {
            policy = greedy_policy(cfg.model, w, optimal, opts.threads);
            source = "greedy";
        }
    }
    const auto pe = policy_evaluation(cfg.model, w, policy, opts);
    converged = converged && pe.trace.converged;
    const double gap = sup_metric(optimal, pe.values);

    const InfoState I0 = start_window(cfg);
    const std::size_t i0 = space.encode(I0);
    ctx.seeds_used = {cfg.solver.seed};
    const auto mc = monte_carlo_value(cfg.model, RolloutPolicy::table(policy, space, source), I0,
                                      cfg.model.initial_belief(), cfg.solver.episodes, cfg.solver.seed,
                                      {cfg.solver.max_steps, cfg.solver.reward_noise}, cfg.solver.threads);
    const double diff = std::abs(mc.mean - pe.values[i0]);
    const bool within = diff <= 3.0 * mc.standard_error + mc.truncation_tail;

    std::ostringstream csv;
    write_residual_csv(csv, pe.trace);
    write_file(ctx.out_dir / "evaluation_residuals.csv", csv.str());
    write_json(ctx.out_dir / "evaluate.json",
               {{"policy_source", source},
                {"mixing", w.label()},
                {"trace", trace_json(pe.trace)},
                {"gap_to_optimal", gap},
                {"start_window", I0.window()},
                {"policy_value_at_start", pe.values[i0]},
                {"monte_carlo",
                 {{"mean", mc.mean},
                  {"standard_error", mc.standard_error},
                  {"truncation_tail", mc.truncation_tail},
                  {"episodes", mc.episodes},
                  {"max_steps", mc.max_steps},
                  {"seed", cfg.solver.seed}}},
                {"monte_carlo_within_3se", within},
                {"values", value_table_json(pe.values, space)}});
    ctx.out << "evaluate: |J* - J^pi| = " << format_double(gap) << ", J^pi(I0) = "
            << format_double(pe.values[i0]) << ", MC = " << format_double(mc.mean) << " +- "
            << format_double(mc.standard_error) << '\n';
    return converged ? kOk : kNotConverged;
}

int cmd_belief_solve(Context& ctx) {
    const auto& cfg = ctx.config;
    require_valid(cfg.model);
    const BeliefGrid grid(cfg.model.modes, cfg.solver.belief_res);
    const auto sol = belief_q_iteration(cfg.model, grid, solver_options(cfg.solver));
    std::ostringstream csv;
    write_residual_csv(csv, sol.trace);
    write_file(ctx.out_dir / "residuals.csv", csv.str());
    write_json(ctx.out_dir / "belief_solve.json",
               {{"resolution", grid.resolution()},
                {"lattice_size", grid.size()},
                {"trace", trace_json(sol.trace)},
                {"layout", "(x * lattice_size + lattice_index) * n_actions + action; lattice points in lexicographic composition order"},
                {"n_actions", cfg.model.n_actions()},
                {"values", sol.values.values}});
    ctx.out << "belief-solve: lattice " << grid.size() << " points, " << sol.trace.iterations
            << " sweeps, converged=" << sol.trace.converged << '\n';
    return sol.trace.converged ? kOk : kNotConverged;
}

int cmd_bound(Context& ctx) {
    const auto& cfg = ctx.config;
    const auto& model = cfg.model;
    require_valid(model);
    const BeliefGrid grid(model.modes, cfg.solver.belief_res);
    const auto qhat = belief_q_iteration(model, grid, solver_options(cfg.solver));
    const InfoSpace space(model.n_points(), cfg.solver.memory);
    const auto lip = auto_lipschitz(model, cfg.solver.memory, cfg.solver);
    const SupErrorProbe probe(model, space, grid, qhat.values, default_belief_samples(grid));
    const InfoState I0 = start_window(cfg);
    const Belief b0 = model.initial_belief();
    const auto walker = RolloutPolicy::uniform_random(model.n_actions());

    ordered_json reports = ordered_json::array();
    bool violated = false;
    for (std::size_t i = 0; i < cfg.solver.seeds; ++i) {
        const std::uint64_t seed = cfg.solver.seed + i;
        ctx.seeds_used.push_back(seed);
        const auto trace = simulate_episode(model, walker, I0, b0, {cfg.solver.iters, 0.0}, seed, 0);
        const auto traj = belief_trajectory_from_episode(trace, b0, model.chain);
        const std::size_t K = std::min(cfg.solver.iters, traj.size());
        const auto iterates = nonmarkov_iteration(model, space, traj, K, cfg.solver.threads);
        const auto report = build_bound_report(model, iterates, probe, lip, traj);
        if (report.in_scope && !report.all_satisfied()) violated = true;

        std::ostringstream csv;
        write_bound_csv(csv, report);
        write_file(ctx.out_dir / ("bound_seed" + std::to_string(seed) + ".csv"), csv.str());
        auto j = bound_report_json(report);
        j["iterations"] = K;
        j["episode_exited"] = !trace.truncated;
        reports.push_back(std::move(j));
    }
    write_json(ctx.out_dir / "bound.json",
               {{"memory", cfg.solver.memory},
                {"resolution", grid.resolution()},
                {"reference_trace", trace_json(qhat.trace)},
                {"belief_samples", probe.n_samples()},
                {"lipschitz", lipschitz_json(lip)},
                {"reports", reports}});
    ctx.out << "bound: L=" << cfg.solver.memory << " l_L=" << format_double(lip.value) << ", "
            << cfg.solver.seeds << " seed(s), " << (violated ? "VIOLATED" : "satisfied") << '\n';
    if (!qhat.trace.converged) return kNotConverged;
    return violated ? kInvariantViolation : kOk;
}

int cmd_lipschitz(Context& ctx) {
    const auto& cfg = ctx.config;
    require_valid(cfg.model);
    std::ostringstream csv;
    csv << "L,value,mode,is_exact,per_factor_bound\n";
    ordered_json rows = ordered_json::array();
    for (std::size_t L = 0; L <= cfg.solver.max_memory; ++L) {
        const auto est = auto_lipschitz(cfg.model, L, cfg.solver);
        if (est.mode == LipschitzMode::sampled) ctx.seeds_used.push_back(cfg.solver.seed);
        const double pf = per_factor_lipschitz_bound(cfg.model.chain, L);
        csv << L << ',' << format_double(est.value) << ','
            << (est.mode == LipschitzMode::exact ? "exact" : "sampled") << ','
            << (est.is_exact ? "true" : "false") << ',' << format_double(pf) << '\n';
        auto j = lipschitz_json(est);
        j["per_factor_bound"] = pf;
        rows.push_back(std::move(j));
        ctx.out << "L=" << L << " l_L=" << format_double(est.value) << " (" << est.method << ")\n";
    }
    write_file(ctx.out_dir / "lipschitz.csv", csv.str());
    write_json(ctx.out_dir / "lipschitz.json", {{"sweep", rows}});
    return kOk;
}

int cmd_simulate(Context& ctx) {
    const auto& cfg = ctx.config;
    require_valid(cfg.model);
    const InfoState I0 = start_window(cfg);
    std::optional<RolloutPolicy> policy;
    if (!ctx.flags.policy.empty()) {
        const InfoSpace space(cfg.model.n_points(), cfg.solver.memory);
        const auto j = nlohmann::json::parse(read_file(ctx.flags.policy), nullptr, false);
        if (j.is_discarded()) throw ConfigError(ctx.flags.policy, "malformed JSON");
        policy = RolloutPolicy::table(policy_from_json(j, space), space, ctx.flags.policy);
    } else {
        policy = RolloutPolicy::uniform_random(cfg.model.n_actions());
    }
    const SimOptions opts{cfg.solver.max_steps, cfg.solver.reward_noise};
    const Belief b0 = cfg.model.initial_belief();
    ctx.seeds_used = {cfg.solver.seed};

    std::vector<EpisodeTrace> traces;
    traces.reserve(cfg.solver.episodes);
    std::ostringstream jsonl;
    for (std::size_t e = 0; e < cfg.solver.episodes; ++e) {
        traces.push_back(simulate_episode(cfg.model, *policy, I0, b0, opts, cfg.solver.seed, e));
        write_trace_jsonl(jsonl, traces.back());
    }
    write_file(ctx.out_dir / "episodes.jsonl", jsonl.str());
    std::ostringstream bin;
    write_trace_columnar(bin, traces);
    write_file(ctx.out_dir / "episodes.bin", bin.str());

    const auto mc = monte_carlo_value(cfg.model, *policy, I0, b0, cfg.solver.episodes, cfg.solver.seed,
                                      opts, cfg.solver.threads);
    write_json(ctx.out_dir / "simulate.json",
               {{"policy", policy->label()},
                {"generator", kGeneratorName},
                {"stream_rule", "episode e draws from stream e"},
                {"start_window", I0.window()},
                {"episodes", mc.episodes},
                {"max_steps", mc.max_steps},
                {"mean_return", mc.mean},
                {"standard_error", mc.standard_error},
                {"truncation_tail", mc.truncation_tail}});
    ctx.out << "simulate: " << mc.episodes << " episodes, mean return " << format_double(mc.mean)
            << " +- " << format_double(mc.standard_error) << '\n';
    return kOk;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--model", f.model, "model config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (default $" + std::string(kOutDirEnv) + " or ./out)");
    sub->add_option("--seed", f.seed, "base RNG seed");
    sub->add_option("--tol", f.tol, "solver tolerance on the distance to the fixed point");
    sub->add_option("--memory", f.memory, "window memory L");
    sub->add_option("--belief-res", f.belief_res, "belief lattice resolution m");
    sub->add_option("--iters", f.iters, "iterations K of the time-varying backup");
    sub->add_option("--episodes", f.episodes, "Monte-Carlo episodes");
    sub->add_option("--seeds", f.seeds, "number of episode seeds for bound");
    sub->add_option("--max-steps", f.max_steps, "episode truncation horizon (0: automatic)");
    sub->add_option("--start", f.start, "starting grid index");
    sub->add_option("--max-memory", f.max_memory, "largest L of the lipschitz sweep");
    sub->add_option("--threads", f.threads, "worker thread cap");
    sub->add_option("--mixing", f.mixing, "mode weights: uniform, stationary, prior, constant");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finite-memory dynamic programming for coupled continuous/discrete-mode MDPs", "finmem"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"validate", "check model invariants"},
        {"solve", "value and Q-value iteration over information states"},
        {"evaluate", "policy evaluation with a Monte-Carlo cross-check"},
        {"belief-solve", "Q-value iteration on the belief lattice"},
        {"bound", "episode, belief trajectory, time-varying iteration and error-bound report"},
        {"lipschitz", "Lipschitz constant of the window belief map, swept over L"},
        {"simulate", "episode batch"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, flags);
        if (name == "evaluate" || name == "simulate")
            sub->add_option("--policy", flags.policy, "solve.json holding a policy")->check(CLI::ExistingFile);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "finmem: " << e.what() << '\n';
        return kConfigError;
    }

    const auto started = std::chrono::steady_clock::now();
    std::string command;
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();

    fs::path out_dir = flags.out;
    if (out_dir.empty()) {
        const char* env = std::getenv(kOutDirEnv);
        out_dir = env && *env ? env : "out";
    }

    int code = kOk;
    try {
        std::string bytes = read_file(flags.model);
        Context ctx{command, flags, parse_config(nlohmann::json::parse(bytes)), std::move(bytes), out_dir, {}, out, err};
        apply_flags(ctx.config.solver, flags);
        fs::create_directories(out_dir);
        if (command == "validate") code = cmd_validate(ctx);
        else if (command == "solve") code = cmd_solve(ctx);
        else if (command == "evaluate") code = cmd_evaluate(ctx);
        else if (command == "belief-solve") code = cmd_belief_solve(ctx);
        else if (command == "bound") code = cmd_bound(ctx);
        else if (command == "lipschitz") code = cmd_lipschitz(ctx);
        else code = cmd_simulate(ctx);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_manifest(ctx, wall, code);
    } catch (const ConfigError& e) {
        err << "finmem: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        err << "finmem: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ModelError& e) {
        err << "finmem: invalid model: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const CapacityError& e) {
        err << "finmem: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "finmem: " << e.what() << '\n';
        return kConfigError;
    }
    return code;
}

} // namespace finmem::cli
