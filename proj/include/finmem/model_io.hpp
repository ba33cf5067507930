#pragma once

#include "finmem/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace finmem {

/// Bad or missing config field; path is a dotted location such as "chain.at_lo[1]".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Optional "solver" section: defaults for the CLI, overridable by flags.
struct SolverConfig {
    std::size_t memory = 0;
    double tol = 1e-8;
    std::size_t max_iters = 100000;
    /// uniform | stationary | prior | constant
    std::string mixing = "prior";
    /// Belief for "constant" mixing; the initial mode distribution when absent.
    std::optional<std::vector<double>> mixing_belief;
    /// 0 until parse_config fills in default_belief_resolution(modes).
    std::size_t belief_res = 0;
    std::size_t iters = 50;
    std::size_t episodes = 1000;
    std::uint64_t seed = 1;
    std::size_t seeds = 1;
    std::size_t max_steps = 0;
    double reward_noise = 0.0;
    unsigned threads = 1;
    /// Initial window override, newest first. Without it x(0) is repeated.
    std::optional<std::vector<std::size_t>> window;
    /// Starting grid index; defaults to the most likely x(0).
    std::optional<std::size_t> start;
    /// Largest L of the lipschitz sweep.
    std::size_t max_memory = 4;
    /// Windows drawn per L when the exact enumeration is too large.
    std::size_t lipschitz_samples = 20000;
};

struct ExperimentConfig {
    MdpModel model;
    SolverConfig solver;
};

/// Builds the model from the config sections grid, modes, actions, dynamics,
/// chain, reward, gamma and initial. Does not run validate_model.
MdpModel parse_model(const nlohmann::json& config);
SolverConfig parse_solver(const nlohmann::json& config);
ExperimentConfig parse_config(const nlohmann::json& config);

/// Reads and parses a JSON config file. Throws ConfigError.
nlohmann::json read_config_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical dump: every array flat with an explicit "shape", float64 values.
nlohmann::ordered_json dump_model(const MdpModel& model);

/// Lattice resolution used when none is configured: 20 for up to two modes, 10 beyond.
std::size_t default_belief_resolution(std::size_t modes);

/// Start index used when no window or start is configured: argmax of the x(0) distribution.
std::size_t default_start(const MdpModel& model);

} // namespace finmem
