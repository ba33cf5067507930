#include "finmem/tables.hpp"

#include <cmath>
#include <stdexcept>

namespace finmem {

ValueTable QTable::min_over_actions() const {
    ValueTable v(n_states);
    for (std::size_t i = 0; i < n_states; ++i) v[i] = row(i)[argmin_lowest(row(i))];
    return v;
}

std::size_t argmin_lowest(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmin over an empty set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

double sup_metric(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("sup_metric: tables of size " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()));
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double sup_metric(const ValueTable& a, const ValueTable& b) {
    return sup_metric(std::span<const double>(a.values), std::span<const double>(b.values));
}

double sup_metric(const QTable& a, const QTable& b) {
    if (a.n_states != b.n_states || a.n_actions != b.n_actions)
        throw std::invalid_argument("sup_metric: Q tables have different shapes");
    return sup_metric(std::span<const double>(a.values), std::span<const double>(b.values));
}

} // namespace finmem
