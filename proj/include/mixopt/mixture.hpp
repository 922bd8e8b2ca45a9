#ifndef MIXOPT_MIXTURE_HPP
#define MIXOPT_MIXTURE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mixopt {

/// A point on the probability simplex: entries >= 0 summing to 1.
class MixtureWeights {
public:
    static constexpr double kSumTolerance = 1e-12;

    MixtureWeights() = default;

    /// Validates that `values` already lies on the simplex.
    explicit MixtureWeights(std::vector<double> values);

    /// Divides non-negative `values` by their sum.
    static MixtureWeights normalized(std::vector<double> values);

    /// 1/m everywhere.
    static MixtureWeights uniform(std::size_t m);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }

    bool operator==(const MixtureWeights&) const = default;

private:
    std::vector<double> values_;
};

/// True when `values` is non-negative, finite and sums to 1 within `tol`.
bool on_simplex(std::span<const double> values, double tol = MixtureWeights::kSumTolerance);

}  // namespace mixopt

#endif  // MIXOPT_MIXTURE_HPP
