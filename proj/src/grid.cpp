#include "finmem/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace finmem {

GridSpace::GridSpace(std::vector<Interval> bounds, std::size_t points_per_axis)
    : bounds_(std::move(bounds)), points_per_axis_(points_per_axis), size_(1) {
    if (bounds_.empty())
        throw std::invalid_argument("grid: dimension must be positive");
    if (points_per_axis_ < 2)
        throw std::invalid_argument("grid: points_per_axis must be at least 2");
    for (std::size_t a = 0; a < bounds_.size(); ++a) {
        const auto& b = bounds_[a];
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi))
            throw std::invalid_argument("grid: axis " + std::to_string(a) +
                                        " needs finite bounds with lo < hi");
        if (size_ > std::numeric_limits<std::size_t>::max() / points_per_axis_)
            throw std::invalid_argument("grid: point count overflows");
        size_ *= points_per_axis_;
    }
}

double GridSpace::spacing(std::size_t axis) const {
    const auto& b = bounds_.at(axis);
    return (b.hi - b.lo) / double(points_per_axis_ - 1);
}

double GridSpace::cell_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
}

double GridSpace::volume() const {
    double v = 1.0;
    for (const auto& b : bounds_) v *= b.hi - b.lo;
    return v;
}

std::size_t GridSpace::axis_index(std::size_t point, std::size_t axis) const {
    for (std::size_t a = 0; a < axis; ++a) point /= points_per_axis_;
    return point % points_per_axis_;
}

double GridSpace::coordinate(std::size_t point, std::size_t axis) const {
    if (point >= size_) throw std::out_of_range("grid: point index out of range");
    const auto i = axis_index(point, axis);
    // Last point is pinned to hi so the endpoints are exact.
    if (i + 1 == points_per_axis_) return bounds_[axis].hi;
    return bounds_[axis].lo + double(i) * spacing(axis);
}

std::vector<double> GridSpace::point(std::size_t index) const {
    std::vector<double> x(dim());
    for (std::size_t a = 0; a < dim(); ++a) x[a] = coordinate(index, a);
    return x;
}

bool GridSpace::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t a = 0; a < dim(); ++a)
        if (!(x[a] >= bounds_[a].lo && x[a] <= bounds_[a].hi)) return false;
    return true;
}

std::size_t GridSpace::nearest(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("grid: dimension mismatch");
    std::size_t index = 0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < dim(); ++a) {
        double t = std::round((x[a] - bounds_[a].lo) / spacing(a));
        t = std::clamp(t, 0.0, double(points_per_axis_ - 1));
        index += std::size_t(t) * stride;
        stride *= points_per_axis_;
    }
    return index;
}

} // namespace finmem
