#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace finmem {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/**
 * Regular tensor-product grid over the box X = [lo_1,hi_1] x ... x [lo_n,hi_n].
 *
 * Grid points (not cells) are the state atoms. Points are flattened with
 * axis 0 varying fastest. Both box endpoints are grid points on every axis.
 */
class GridSpace {
public:
    GridSpace(std::vector<Interval> bounds, std::size_t points_per_axis);

    std::size_t dim() const { return bounds_.size(); }
    std::size_t points_per_axis() const { return points_per_axis_; }
    /// Total number of grid points, points_per_axis^dim.
    std::size_t size() const { return size_; }
    const std::vector<Interval>& bounds() const { return bounds_; }

    double spacing(std::size_t axis) const;
    /// Product of the per-axis spacings.
    double cell_volume() const;
    /// Lebesgue volume of X.
    double volume() const;

    double coordinate(std::size_t point, std::size_t axis) const;
    std::vector<double> point(std::size_t index) const;
    std::size_t axis_index(std::size_t point, std::size_t axis) const;

    bool contains(std::span<const double> x) const;
    /// Index of the grid point closest to x (per-axis rounding, clamped to X).
    std::size_t nearest(std::span<const double> x) const;

private:
    std::vector<Interval> bounds_;
    std::size_t points_per_axis_;
    std::size_t size_;
};

struct Action {
    std::string label;
    std::vector<double> payload;
};

/// Finite, ordered control set U. Checked by validate_model.
struct ActionSet {
    std::vector<Action> actions;

    std::size_t size() const { return actions.size(); }
    const Action& operator[](std::size_t i) const { return actions[i]; }
};

} // namespace finmem
