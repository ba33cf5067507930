#pragma once

// Shared inner loop of every information-state backup.

#include "finmem/info.hpp"
#include "finmem/model.hpp"

#include <span>

namespace finmem::detail {

/// sum_s w_s sum_x' K[x0,s,u,x'] next[succ(info, x')]; exit mass contributes 0.
inline double continuation(const TransitionKernel& kernel, const InfoSpace& space,
                           std::size_t info, std::size_t u, std::span<const double> w,
                           std::span<const double> next) {
    const std::size_t x0 = space.newest(info);
    const std::size_t base = space.successor(info, 0);
    double acc = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) {
        if (w[s] == 0.0) continue;
        const auto row = kernel.row(x0, s, u);
        double part = 0.0;
        for (std::size_t y = 0; y < row.size(); ++y) part += row[y] * next[base + y];
        acc += w[s] * part;
    }
    return acc;
}

inline void check_space(const MdpModel& model, const InfoSpace& space) {
    if (space.n_points() != model.n_points())
        throw std::invalid_argument("information space built for " +
                                    std::to_string(space.n_points()) + " grid points, model has " +
                                    std::to_string(model.n_points()));
}

} // namespace finmem::detail
