#pragma once

#include "finmem/belief.hpp"
#include "finmem/model.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace finmem {

/// Raised before allocating a table that would exceed the element budget.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, std::size_t required, std::size_t limit);
    std::size_t required() const { return required_; }
    std::size_t limit() const { return limit_; }

private:
    std::size_t required_;
    std::size_t limit_;
};

/// Default element budget for dense tables (doubles).
inline constexpr std::size_t kDefaultElementLimit = std::size_t(1) << 27;

/// Throws CapacityError when count exceeds limit.
void check_capacity(const std::string& what, std::size_t count,
                    std::size_t limit = kDefaultElementLimit);

/**
 * Finite-memory observation window (x(k), x(k-1), ..., x(k-L)), newest first.
 */
class InfoState {
public:
    explicit InfoState(std::vector<std::size_t> window);
    /// Window of length L+1 filled with x0 (the default episode pre-history).
    static InfoState repeated(std::size_t x0, std::size_t memory);

    std::size_t memory() const { return window_.size() - 1; }
    std::size_t newest() const { return window_.front(); }
    const std::vector<std::size_t>& window() const { return window_; }
    std::size_t operator[](std::size_t lag) const { return window_[lag]; }

    friend bool operator==(const InfoState&, const InfoState&) = default;

private:
    std::vector<std::size_t> window_;
};

/// Shift the window: (x_new, x(k), ..., x(k-L+1)). Rejects x_new >= n_points.
InfoState push_observation(const InfoState& info, std::size_t x_new, std::size_t n_points);

/**
 * Enumeration of all (grid points)^(L+1) windows.
 *
 * The flat index is mixed radix with base n_points and the newest entry least
 * significant, so the newest observation is index % n_points and pushing x'
 * maps index i to x' + n_points * (i mod n_points^L).
 */
class InfoSpace {
public:
    InfoSpace(std::size_t n_points, std::size_t memory,
              std::size_t element_limit = kDefaultElementLimit);

    std::size_t n_points() const { return n_points_; }
    std::size_t memory() const { return memory_; }
    std::size_t size() const { return size_; }

    std::size_t encode(const InfoState& info) const;
    InfoState decode(std::size_t index) const;
    std::size_t newest(std::size_t index) const { return index % n_points_; }
    /// Index of the successor window after observing x_new; x_new < n_points.
    std::size_t successor(std::size_t index, std::size_t x_new) const {
        return x_new + n_points_ * (index % tail_);
    }

    friend bool operator==(const InfoSpace&, const InfoSpace&) = default;

private:
    std::size_t n_points_;
    std::size_t memory_;
    std::size_t size_;
    std::size_t tail_; ///< n_points^L
};

/// One step of the open-loop mode recursion: returns P(x)^T b.
Belief belief_update(const Belief& b, std::size_t x, const ChainModel& chain);

/**
 * Mode distribution at time 0 given the window and the belief at time -L:
 * P(x(0))^T ... P(x(-L))^T b, applied from the oldest observation forward.
 */
Belief beta(const InfoState& info, const Belief& b_minus_L, const ChainModel& chain);

} // namespace finmem
