#include "mixopt/mixture.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mixopt/error.hpp"

namespace mixopt {

bool on_simplex(std::span<const double> values, double tol) {
    if (values.empty()) return false;
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

MixtureWeights::MixtureWeights(std::vector<double> values) : values_(std::move(values)) {
    if (!on_simplex(values_)) {
        throw NumericalError("mixture weights are not on the simplex (size " +
                             std::to_string(values_.size()) + ")");
    }
}

MixtureWeights MixtureWeights::normalized(std::vector<double> values) {
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw NumericalError("cannot normalize negative or non-finite weight");
        }
        sum += v;
    }
    if (!(sum > 0.0)) throw NumericalError("cannot normalize weights with zero total");
    for (double& v : values) v /= sum;
    return MixtureWeights(std::move(values));
}

MixtureWeights MixtureWeights::uniform(std::size_t m) {
    if (m == 0) throw ConfigError("uniform weights need m >= 1");
    std::vector<double> values(m, 1.0 / static_cast<double>(m));
    // Last entry absorbs the rounding residue.
    values.back() = 1.0 - std::accumulate(values.begin(), values.end() - 1, 0.0);
    return MixtureWeights(std::move(values));
}

}  // namespace mixopt
