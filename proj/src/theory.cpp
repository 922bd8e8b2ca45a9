#include "mixopt/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "mixopt/error.hpp"

namespace mixopt::theory {

namespace {

const std::vector<double>& cluster(const AlignmentInstance& instance, int idx) {
    if (idx < 0 || idx >= static_cast<int>(instance.clusters.size())) {
        throw ConfigError("cluster index " + std::to_string(idx) + " out of range");
    }
    return instance.clusters[static_cast<std::size_t>(idx)];
}

void require_pair(const AlignmentInstance& instance, int i, int j) {
    const auto& di = cluster(instance, i);
    const auto& dj = cluster(instance, j);
    if (di.empty() || dj.empty()) throw ConfigError("regret needs non-empty clusters");
    if (di.size() != dj.size()) throw ConfigError("regret needs |D_i| = |D_j|");
    for (double v : di) {
        if (!std::isfinite(v)) throw NumericalError("non-finite alignment");
    }
    for (double v : dj) {
        if (!std::isfinite(v)) throw NumericalError("non-finite alignment");
    }
}

double radius(const std::vector<double>& values, double centre) {
    double r = 0.0;
    for (double v : values) r = std::max(r, std::abs(v - centre));
    return r;
}

Vector as_vector(const MixtureWeights& p) {
    return Eigen::Map<const Vector>(p.values().data(), static_cast<Eigen::Index>(p.size()));
}

}  // namespace

std::vector<double> project(const Matrix& point_gradients, const Vector& eval_gradient) {
    if (point_gradients.cols() != eval_gradient.size()) throw DataError("gradient dimensions differ");
    const Vector a = point_gradients * eval_gradient;
    return {a.data(), a.data() + a.size()};
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("mean of an empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double regret_exact(const AlignmentInstance& instance, int i, int j) {
    require_pair(instance, i, j);
    // Optimal exchange: swap the weakest of D_i for the strongest of D_j
    // while that helps. Summing only the gains keeps a stable pair at exactly 0.
    std::vector<double> di = cluster(instance, i);
    std::vector<double> dj = cluster(instance, j);
    std::sort(di.begin(), di.end());
    std::sort(dj.begin(), dj.end(), std::greater<>());
    double gain = 0.0;
    for (std::size_t k = 0; k < di.size() && dj[k] > di[k]; ++k) gain += dj[k] - di[k];
    return gain / static_cast<double>(di.size());
}

double regret_by_enumeration(const AlignmentInstance& instance, int i, int j) {
    require_pair(instance, i, j);
    const auto& di = cluster(instance, i);
    const auto& dj = cluster(instance, j);
    std::vector<double> pool(di);
    pool.insert(pool.end(), dj.begin(), dj.end());
    if (pool.size() > 24) throw ConfigError("enumeration limited to 24 pooled points");
    const int n = static_cast<int>(di.size());
    const std::uint32_t limit = 1u << pool.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        if (std::popcount(mask) != n) continue;
        double sum = 0.0;
        for (std::size_t b = 0; b < pool.size(); ++b) {
            if (mask & (1u << b)) sum += pool[b];
        }
        best = std::max(best, sum / n);
    }
    return std::max(0.0, best - mean(di));
}

RegretResult regret_bound(const AlignmentInstance& instance, int i, int j) {
    require_pair(instance, i, j);
    const auto& di = cluster(instance, i);
    const auto& dj = cluster(instance, j);
    const double mi = mean(di);
    const double mj = mean(dj);
    if (mi < mj) throw ConfigError("regret bound requires mean(D_i) >= mean(D_j); swap i and j");
    RegretResult r;
    r.r_i = radius(di, mi);
    r.r_j = radius(dj, mj);
    r.mean_gap = mi - mj;
    r.bound = std::max(0.0, 0.5 * (r.r_i + r.r_j - r.mean_gap));
    r.regret = regret_exact(instance, i, j);
    return r;
}

int top_cluster(const AlignmentInstance& instance) {
    int best = -1;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < instance.clusters.size(); ++c) {
        const double m = mean(instance.clusters[c]);
        if (best < 0 || m > best_mean) {
            best = static_cast<int>(c);
            best_mean = m;
        }
    }
    return best;
}

bool is_stable(const AlignmentInstance& instance) {
    if (instance.clusters.size() < 2) throw ConfigError("stability needs at least two clusters");
    const int top = top_cluster(instance);
    const auto& di = instance.clusters[static_cast<std::size_t>(top)];
    const double lowest = *std::min_element(di.begin(), di.end());
    for (std::size_t c = 0; c < instance.clusters.size(); ++c) {
        if (static_cast<int>(c) == top) continue;
        for (double a : instance.clusters[c]) {
            if (swap_improves(lowest, a)) return false;
        }
    }
    return true;
}

std::optional<double> eta_bound(const Matrix& skill_gradients, const MixtureWeights& p, const MixtureWeights& p_alt,
                                double smoothness) {
    const auto m = skill_gradients.rows();
    if (static_cast<Eigen::Index>(p.size()) != m || static_cast<Eigen::Index>(p_alt.size()) != m) {
        throw DataError("mixtures do not match the number of skills");
    }
    if (!(smoothness > 0.0)) throw ConfigError("smoothness constant must be positive");
    const Vector g_p = skill_gradients.transpose() * as_vector(p);
    const Vector g_alt = skill_gradients.transpose() * as_vector(p_alt);
    const double best_alignment = (skill_gradients * g_p).maxCoeff();
    const double max_sq_norm = skill_gradients.rowwise().squaredNorm().maxCoeff();
    const double denominator = max_sq_norm + g_alt.squaredNorm();
    if (denominator == 0.0) return std::nullopt;
    const double numerator = std::max(0.0, best_alignment - g_alt.dot(g_p));
    return numerator / denominator / smoothness;
}

GreedyResult greedy_dominates(const Matrix& skill_gradients, const MixtureWeights& p, const MixtureWeights& p_alt,
                              double smoothness, double eta) {
    GreedyResult result;
    result.eta_bound = eta_bound(skill_gradients, p, p_alt, smoothness);
    result.precondition_met = result.eta_bound && eta <= *result.eta_bound;

    // θ0 = 0 and θ*_i = -g_i / L, so ∇L_i(θ0) = g_i.
    const Matrix optima = -skill_gradients / smoothness;
    const Vector weights = as_vector(p);
    auto eval_loss = [&](const Vector& theta) {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < optima.rows(); ++i) {
            loss += weights[i] * 0.5 * smoothness * (theta.transpose() - optima.row(i)).squaredNorm();
        }
        return loss;
    };

    const Vector g_p = skill_gradients.transpose() * weights;
    Eigen::Index corner = 0;
    (skill_gradients * g_p).maxCoeff(&corner);
    const Vector theta0 = Vector::Zero(skill_gradients.cols());
    const double base = eval_loss(theta0);
    const Vector step_corner = theta0 - eta * skill_gradients.row(corner).transpose();
    const Vector step_alt = theta0 - eta * (skill_gradients.transpose() * as_vector(p_alt));
    result.decrease_maxcorner = base - eval_loss(step_corner);
    result.decrease_alt = base - eval_loss(step_alt);
    result.dominates = result.decrease_maxcorner >= result.decrease_alt;
    return result;
}

namespace {

MixtureWeights random_simplex(std::size_t m, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> v(m);
    for (double& x : v) x = expo(rng);
    return MixtureWeights::normalized(std::move(v));
}

std::vector<double> normal_sample(std::size_t n, double centre, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(centre, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

AlignmentInstance random_pair(std::mt19937_64& rng, int max_n) {
    const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, max_n)(rng));
    std::normal_distribution<double> centre(0.0, 2.0);
    AlignmentInstance inst{{normal_sample(n, centre(rng), rng), normal_sample(n, centre(rng), rng)}};
    if (mean(inst.clusters[0]) < mean(inst.clusters[1])) std::swap(inst.clusters[0], inst.clusters[1]);
    return inst;
}

}  // namespace

std::vector<LemmaCheck> run_theory_checks(const TheoryCheckOptions& options) {
    std::vector<LemmaCheck> checks;

    {
        std::mt19937_64 rng(derive_seed(options.seed, "theory/regret-oracle"));
        LemmaCheck c{"regret_exact_matches_enumeration", 0, 0, std::numeric_limits<double>::infinity()};
        for (int t = 0; t < options.regret_oracle_trials; ++t) {
            const auto inst = random_pair(rng, 6);
            const double diff = std::abs(regret_exact(inst, 0, 1) - regret_by_enumeration(inst, 0, 1));
            const double margin = 1e-12 - diff;
            c.worst_margin = std::min(c.worst_margin, margin);
            c.violations += margin < 0.0;
            ++c.trials;
        }
        checks.push_back(c);
    }
    {
        std::mt19937_64 rng(derive_seed(options.seed, "theory/regret-bound"));
        LemmaCheck c{"regret_bound", 0, 0, std::numeric_limits<double>::infinity()};
        for (int t = 0; t < options.regret_bound_trials; ++t) {
            const auto r = regret_bound(random_pair(rng, 8), 0, 1);
            c.worst_margin = std::min(c.worst_margin, r.bound - r.regret);
            c.violations += !r.holds();
            ++c.trials;
        }
        checks.push_back(c);
    }
    {
        std::mt19937_64 rng(derive_seed(options.seed, "theory/stability"));
        LemmaCheck c{"stable_implies_zero_regret", 0, 0, std::numeric_limits<double>::infinity()};
        for (int t = 0; t < options.stability_trials; ++t) {
            const int m = std::uniform_int_distribution<int>(2, 4)(rng);
            const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 6)(rng));
            std::normal_distribution<double> centre(0.0, 4.0);
            AlignmentInstance inst;
            for (int k = 0; k < m; ++k) inst.clusters.push_back(normal_sample(n, centre(rng), rng));
            if (!is_stable(inst)) continue;
            ++c.trials;
            const int top = top_cluster(inst);
            for (int j = 0; j < m; ++j) {
                if (j == top) continue;
                const double regret = regret_exact(inst, top, j);
                c.worst_margin = std::min(c.worst_margin, -regret);
                if (regret != 0.0) {
                    ++c.violations;
                    break;
                }
            }
        }
        if (c.trials == 0) c.worst_margin = 0.0;
        checks.push_back(c);
    }
    {
        std::mt19937_64 rng(derive_seed(options.seed, "theory/greedy"));
        LemmaCheck c{"greedy_step_dominance", 0, 0, std::numeric_limits<double>::infinity()};
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int t = 0; t < options.greedy_trials; ++t) {
            const int m = std::uniform_int_distribution<int>(2, 5)(rng);
            const int dim = std::uniform_int_distribution<int>(1, 10)(rng);
            Matrix grads(m, dim);
            for (Eigen::Index r = 0; r < m; ++r) {
                for (Eigen::Index col = 0; col < dim; ++col) grads(r, col) = normal(rng);
            }
            const auto p = random_simplex(static_cast<std::size_t>(m), rng);
            const auto alt = random_simplex(static_cast<std::size_t>(m), rng);
            const double smooth = std::uniform_real_distribution<double>(0.5, 5.0)(rng);
            const auto bound = eta_bound(grads, p, alt, smooth);
            if (!bound) continue;
            const auto g = greedy_dominates(grads, p, alt, smooth, *bound / 2.0);
            c.worst_margin = std::min(c.worst_margin, g.margin());
            c.violations += g.margin() < -1e-9;
            ++c.trials;
        }
        checks.push_back(c);
    }
    return checks;
}

}  // namespace mixopt::theory
