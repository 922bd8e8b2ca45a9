#ifndef MIXOPT_THEORY_HPP
#define MIXOPT_THEORY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/mixture.hpp"
#include "mixopt/types.hpp"

namespace mixopt::theory {

/// Per-cluster scalar alignments a_x = grad L(x) . grad L(D_p).
struct AlignmentInstance {
    std::vector<std::vector<double>> clusters;
};

/// Projects per-point gradients (one per row) onto the evaluation gradient.
std::vector<double> project(const Matrix& point_gradients, const Vector& eval_gradient);

double mean(const std::vector<double>& values);

/// Best achievable mean alignment of a |D_i|-subset of D_i u D_j minus
/// the mean of D_i. Requires |D_i| = |D_j| > 0.
double regret_exact(const AlignmentInstance& instance, int i, int j);

/// Same quantity by enumerating every subset; exponential, for n <= ~12.
double regret_by_enumeration(const AlignmentInstance& instance, int i, int j);

struct RegretResult {
    double regret = 0.0;
    double bound = 0.0;
    double r_i = 0.0;
    double r_j = 0.0;
    /// mean(D_i) - mean(D_j), non-negative by precondition.
    double mean_gap = 0.0;

    bool holds(double slack = 1e-12) const { return regret <= bound + slack; }
};

/// Regret together with max{0, (r_i + r_j - gap) / 2}. Throws ConfigError
/// unless mean(D_i) >= mean(D_j) and |D_i| = |D_j|.
RegretResult regret_bound(const AlignmentInstance& instance, int i, int j);

/// Stability against single swaps: with i the cluster of highest mean
/// alignment, every element of D_i is >= every element of every other D_j.
bool is_stable(const AlignmentInstance& instance);

/// Index of the cluster with the highest mean alignment (first on ties).
int top_cluster(const AlignmentInstance& instance);

/// Moving x1 into the top class and x0 out improves its alignment iff a_x1 > a_x0.
inline bool swap_improves(double a_x0, double a_x1) { return a_x1 > a_x0; }

/// Largest step size for which the max-corner step provably beats the
/// alternative mixture p''. nullopt when every gradient is zero.
/// Rows of `skill_gradients` are g_1..g_m.
std::optional<double> eta_bound(const Matrix& skill_gradients, const MixtureWeights& p,
                                const MixtureWeights& p_alt, double smoothness);

struct GreedyResult {
    bool dominates = false;
    double decrease_maxcorner = 0.0;
    double decrease_alt = 0.0;
    /// nullopt when the bound is undefined.
    std::optional<double> eta_bound;
    bool precondition_met = false;

    double margin() const { return decrease_maxcorner - decrease_alt; }
};

/// One SGD step on the quadratic family L_i(θ) = (smoothness/2)||θ - θ*_i||^2
/// whose gradients at θ = 0 are the rows of `skill_gradients`; compares the
/// evaluation-loss decrease of the argmax_i (G p)_i corner against p''.
GreedyResult greedy_dominates(const Matrix& skill_gradients, const MixtureWeights& p, const MixtureWeights& p_alt,
                              double smoothness, double eta);

/// Outcome of one Monte-Carlo lemma check.
struct LemmaCheck {
    std::string name;
    int trials = 0;
    int violations = 0;
    /// Smallest slack observed (negative means violated).
    double worst_margin = 0.0;

    bool passed() const { return violations == 0; }
};

struct TheoryCheckOptions {
    std::uint64_t seed = 0;
    int regret_oracle_trials = 200;
    int regret_bound_trials = 1000;
    int stability_trials = 1000;
    int greedy_trials = 500;
};

/// Runs every lemma check on seeded random instances.
std::vector<LemmaCheck> run_theory_checks(const TheoryCheckOptions& options);

}  // namespace mixopt::theory

#endif  // MIXOPT_THEORY_HPP
