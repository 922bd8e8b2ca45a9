#ifndef MIXOPT_BALANCE_HPP
#define MIXOPT_BALANCE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mixopt/mixture.hpp"
#include "mixopt/types.hpp"

namespace mixopt {

/// Per-domain running sums of final-layer gradients and sample counts
/// for one reweighting round.
class GradientAccumulator {
public:
    GradientAccumulator(int m, Eigen::Index dim);

    int m() const noexcept { return static_cast<int>(sums_.rows()); }
    Eigen::Index dim() const noexcept { return sums_.cols(); }

    /// Adds one example's flattened gradient to domain `domain`.
    void add(int domain, const Eigen::Ref<const Vector>& gradient);
    /// Adds a gradient already summed over `count` examples.
    void add_sum(int domain, const Eigen::Ref<const Vector>& gradient_sum, std::int64_t count);
    void reset();

    /// Row i is the summed gradient of domain i.
    const Matrix& sums() const noexcept { return sums_; }
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

private:
    Matrix sums_;
    std::vector<std::int64_t> counts_;
};

/// G_ij = sum_i . sum_j / (count_i * count_j); zero rows and columns for
/// domains that received no samples. Exactly symmetric.
Matrix gram(const GradientAccumulator& acc);

/// Softmax of lambda * eta_multiplier * G p / ||G p||_2.
///
/// Returns nullopt when ||G p|| is zero so the caller can keep the
/// previous weights; throws NumericalError on non-finite input.
std::optional<MixtureWeights> randb_update(const Matrix& g, const MixtureWeights& p_eval, double lambda,
                                           double eta_multiplier = 1.0);

/// Exponentiated (multiplicative-weights) update:
/// p'_t ~ p'_{t-1} * exp(eta * (G p) / mu), renormalized.
MixtureWeights multiplicative_weights_update(const MixtureWeights& state, const Matrix& g,
                                             const MixtureWeights& p_eval, double eta, double mu);

/// Fixed uniform proportions, last entry absorbing rounding.
MixtureWeights stratified_weights(int m);

/// Max-subtracted softmax.
std::vector<double> softmax(const Vector& logits);

/// Dense text dump, one row per line, 17 significant digits.
void write_dense_matrix(const Matrix& matrix, const std::filesystem::path& path);
Matrix read_dense_matrix(const std::filesystem::path& path);

}  // namespace mixopt

#endif  // MIXOPT_BALANCE_HPP
