#pragma once

// Models shared by the unit and acceptance tests, built in code so tests do not
// depend on the config parser.

#include "finmem/model.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace fmtest {

enum class ChainKind { blend, ergodic, identical_rows, identity };

struct DeskOptions {
    std::size_t points = 21;
    std::size_t modes = 2;
    /// Gaussian successors leak out of X; otherwise they are truncated to X.
    bool exit = true;
    ChainKind chain = ChainKind::blend;
    double gamma = 0.9;
};

/// X = [0,1], |U| = 2, M = 1, quadratic cost around 0.4.
finmem::MdpModel desk_model(const DeskOptions& options = {});

/// [[0.9, 0.1], [0.2, 0.8]]
Eigen::MatrixXd ergodic_matrix();
/// [[0.7, 0.3], [0.4, 0.6]]
Eigen::MatrixXd ergodic_matrix_hi();
/// Both rows equal to (0.6, 0.4).
Eigen::MatrixXd identical_rows_matrix();

/// Random kernel (with optional exit), random x-dependent chain, rewards in [0, 1].
finmem::MdpModel random_model(std::uint64_t seed, std::size_t points, std::size_t modes,
                              std::size_t actions, double gamma, bool exit);

} // namespace fmtest
