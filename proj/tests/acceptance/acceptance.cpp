// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// runtime budget. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "hand_costs.hpp"
#include "mixopt/balance.hpp"
#include "mixopt/costmodel.hpp"
#include "mixopt/experiment.hpp"
#include "mixopt/model.hpp"
#include "mixopt/regroup.hpp"
#include "mixopt/synthetic.hpp"
#include "mixopt/theory.hpp"
#include "support.hpp"

using namespace mixopt;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failures without stopping at the first one.
class Tally {
public:
    void require(bool ok, const std::string& what) {
        ++checks_;
        if (!ok) {
            ++failures_;
            if (first_.empty()) first_ = what;
        }
    }
    Outcome outcome(const std::string& summary) const {
        Outcome o;
        o.pass = failures_ == 0;
        o.detail = summary + "; checks=" + std::to_string(checks_) + " failures=" + std::to_string(failures_);
        if (!first_.empty()) o.detail += " first=" + first_;
        return o;
    }

private:
    long checks_ = 0;
    long failures_ = 0;
    std::string first_;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Targets random_targets(const ToyModel& model, Eigen::Index batch, std::mt19937_64& rng) {
    Targets t;
    if (model.loss() == LossKind::cross_entropy) {
        for (Eigen::Index i = 0; i < batch; ++i) t.classes.push_back(static_cast<int>(rng() % model.output_dim()));
    } else {
        t.values = testing::random_matrix(batch, model.output_dim(), rng);
    }
    return t;
}

Outcome per_example_trick() {
    Tally tally;
    double worst_rel = 0.0, worst_abs = 0.0;
    std::mt19937_64 rng(101);
    for (int seed = 0; seed < 10; ++seed) {
        const int in = 2 + seed % 5;
        const int hidden = 4 + 3 * seed;  // up to 31
        const int out = 2 + seed % 4;
        const LossKind kind = seed % 2 ? LossKind::squared_error : LossKind::cross_entropy;
        std::vector<int> widths = {in, hidden, out};
        if (seed % 3 == 0) widths = {in, hidden, 1 + hidden / 2, out};
        const ToyModel model = ToyModel::initialize(widths, kind, static_cast<std::uint64_t>(seed));
        for (int b : {1, 4, 32}) {
            const Matrix x = testing::random_matrix(b, in, rng);
            const Targets t = random_targets(model, b, rng);
            const BackwardResult batch = loss_and_backward(model, x, t);
            const auto per = per_example_final_layer_grads(batch.cache.final_inputs(), batch.output_grad);
            Matrix sum = Matrix::Zero(batch.gradients.weight.back().rows(), batch.gradients.weight.back().cols());
            for (int i = 0; i < b; ++i) {
                Targets one;
                if (!t.classes.empty()) one.classes = {t.classes[static_cast<std::size_t>(i)]};
                if (t.values.size()) one.values = t.values.row(i);
                const Matrix naive = loss_and_backward(model, x.row(i), one).gradients.weight.back();
                const double rel = testing::max_relative_error(per[static_cast<std::size_t>(i)], naive);
                worst_rel = std::max(worst_rel, rel);
                tally.require(rel <= 1e-6, "per-example relative error " + fmt(rel));
                sum += per[static_cast<std::size_t>(i)];
            }
            const double abs_err = (sum - batch.gradients.weight.back()).cwiseAbs().maxCoeff();
            worst_abs = std::max(worst_abs, abs_err);
            tally.require(abs_err <= 1e-10, "sum absolute error " + fmt(abs_err));
        }
    }
    return tally.outcome("worst rel=" + fmt(worst_rel) + " worst sum abs=" + fmt(worst_abs));
}

double summed_loss(const ToyModel& model, const Matrix& x, const Targets& t) {
    const auto losses = example_losses(model, forward(model, x).outputs(), t);
    double s = 0.0;
    for (double l : losses) s += l;
    return s;
}

Outcome finite_differences() {
    Tally tally;
    double worst = 0.0;
    std::mt19937_64 rng(202);
    for (int seed = 0; seed < 20; ++seed) {
        const int in = 2 + seed % 4;
        const int out = 2 + seed % 3;
        const std::vector<int> widths = seed % 2 ? std::vector<int>{in, 8, out} : std::vector<int>{in, 6, 5, out};
        const LossKind kind = seed % 4 < 2 ? LossKind::cross_entropy : LossKind::squared_error;
        ToyModel model = ToyModel::initialize(widths, kind, static_cast<std::uint64_t>(seed));
        tally.require(model.parameter_count() <= 200, "model too large");
        const Matrix x = testing::random_matrix(6, in, rng);
        const Targets t = random_targets(model, 6, rng);
        const Vector analytic = loss_and_backward(model, x, t).gradients.flatten();
        const Vector theta = model.parameters();
        Vector numeric(theta.size());
        const double h = 1e-5;
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Vector up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            model.set_parameters(up);
            const double lu = summed_loss(model, x, t);
            model.set_parameters(down);
            const double ld = summed_loss(model, x, t);
            numeric[k] = (lu - ld) / (2 * h);
        }
        const double rel = (analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm());
        worst = std::max(worst, rel);
        tally.require(rel <= 1e-5, "relative error " + fmt(rel));
    }
    return tally.outcome("worst relative error=" + fmt(worst));
}

Outcome gram_and_update() {
    Tally tally;
    std::mt19937_64 rng(303);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    double worst_scale = 0.0, worst_flat = 0.0;
    int unique_argmax = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 7);
        const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng() % 40);
        GradientAccumulator acc(m, dim);
        // Guarantee every domain a sample so ||Gp|| > 0 almost surely.
        for (int d = 0; d < m; ++d) acc.add(d, testing::random_matrix(dim, 1, rng).col(0));
        const int extra = static_cast<int>(rng() % 60);
        for (int s = 0; s < extra; ++s) acc.add(static_cast<int>(rng() % m), testing::random_matrix(dim, 1, rng).col(0));
        const Matrix G = gram(acc);

        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                tally.require(std::abs(G(i, j) - G(j, i)) <= 1e-12 * std::max(1.0, std::abs(G(i, j))), "asymmetric G");
            }
        }
        const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(G).eigenvalues().minCoeff();
        tally.require(min_eig >= -1e-8 * G.trace(), "negative eigenvalue " + fmt(min_eig));

        std::vector<double> raw(static_cast<std::size_t>(m));
        for (double& v : raw) v = gamma(rng) + 1e-12;
        const MixtureWeights p = MixtureWeights::normalized(raw);
        const double lambda = std::uniform_real_distribution<double>(0.05, 20.0)(rng);
        const auto out = randb_update(G, p, lambda);
        tally.require(out.has_value(), "degenerate update on a non-zero Gram");
        if (!out) continue;
        tally.require(on_simplex(out->span()), "update off the simplex");

        for (double c : {1e-6, 1.0, 1e6}) {
            const auto scaled = randb_update(c * G, p, lambda);
            for (int i = 0; i < m; ++i) {
                const double d = std::abs((*scaled)[i] - (*out)[i]);
                worst_scale = std::max(worst_scale, d);
                tally.require(d <= 1e-12, "scale invariance " + fmt(d));
            }
        }

        const auto flat = randb_update(G, p, 1e-9);
        for (int i = 0; i < m; ++i) {
            const double d = std::abs((*flat)[i] - 1.0 / m);
            worst_flat = std::max(worst_flat, d);
            tally.require(d <= 1e-8, "small-lambda uniformity " + fmt(d));
        }

        const Vector v = G * Eigen::Map<const Vector>(p.values().data(), m);
        Eigen::Index best;
        const double top = v.maxCoeff(&best);
        const bool unique = std::count_if(v.begin(), v.end(), [&](double x) { return x == top; }) == 1;
        if (unique) {
            ++unique_argmax;
            const auto got = std::max_element(out->values().begin(), out->values().end()) - out->values().begin();
            tally.require(got == best, "argmax not preserved");
        }
    }
    return tally.outcome("worst scale diff=" + fmt(worst_scale) + " worst flat diff=" + fmt(worst_flat) +
                         " unique-argmax cases=" + std::to_string(unique_argmax));
}

Outcome regret_suite() {
    Tally tally;
    using namespace theory;
    std::mt19937_64 rng(404);
    std::normal_distribution<double> centre(0.0, 2.0), unit(0.0, 1.0);

    // Oracle equivalence, n = 1..6 cycled so every size is covered.
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 6);
        AlignmentInstance inst{{{}, {}}};
        const double ci = centre(rng), cj = centre(rng);
        for (std::size_t k = 0; k < n; ++k) {
            inst.clusters[0].push_back(ci + unit(rng));
            inst.clusters[1].push_back(cj + unit(rng));
        }
        const double d = std::abs(regret_exact(inst, 0, 1) - regret_by_enumeration(inst, 0, 1));
        tally.require(d <= 1e-12, "enumeration mismatch " + fmt(d));
    }

    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng() % 8);
        AlignmentInstance inst{{{}, {}}};
        const double ci = centre(rng), cj = centre(rng);
        for (std::size_t k = 0; k < n; ++k) {
            inst.clusters[0].push_back(ci + unit(rng));
            inst.clusters[1].push_back(cj + unit(rng));
        }
        if (mean(inst.clusters[0]) < mean(inst.clusters[1])) std::swap(inst.clusters[0], inst.clusters[1]);
        const bool held = regret_bound(inst, 0, 1).holds();
        violations += !held;
        tally.require(held, "regret bound violated");
    }

    const auto library = run_theory_checks({404, 200, 1000, 1000, 0});
    int stable_cases = 0;
    for (const auto& c : library) {
        tally.require(c.passed(), c.name);
        if (c.name == "stable_implies_zero_regret") stable_cases = c.trials;
    }
    tally.require(stable_cases > 0, "no stable instances sampled");
    return tally.outcome("bound violations=" + std::to_string(violations) +
                         " stable instances checked=" + std::to_string(stable_cases));
}

Outcome greedy_dominance() {
    Tally tally;
    using namespace theory;
    std::mt19937_64 rng(505);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    auto simplex = [&](int m) {
        std::vector<double> v(static_cast<std::size_t>(m));
        for (double& x : v) x = expo(rng);
        return MixtureWeights::normalized(v);
    };
    int instances = 0;
    double worst = 1e300;
    while (instances < 500) {
        const int m = 2 + static_cast<int>(rng() % 4);
        const int dim = 1 + static_cast<int>(rng() % 10);
        Matrix g(m, dim);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        const MixtureWeights p = simplex(m), alt = simplex(m);
        const double smooth = std::uniform_real_distribution<double>(0.5, 5.0)(rng);
        const auto bound = eta_bound(g, p, alt, smooth);
        if (!bound) continue;
        const GreedyResult r = greedy_dominates(g, p, alt, smooth, *bound / 2);
        worst = std::min(worst, r.margin());
        tally.require(r.margin() >= -1e-9, "margin " + fmt(r.margin()));
        ++instances;
    }
    return tally.outcome("instances=" + std::to_string(instances) + " worst margin=" + fmt(worst));
}

Outcome clustering() {
    Tally tally;
    auto monotone = [](const KMeansResult& r) {
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            if (r.inertia_history[i] > r.inertia_history[i - 1]) return false;
        }
        return true;
    };
    const std::vector<int> candidates = {2, 3, 4, 5, 6};
    std::string chosen;
    double min_sil = 1.0;
    int runs = 0;
    const struct {
        int k;
        std::uint64_t seed;
    } corpora[] = {{3, 61}, {4, 62}, {5, 63}};
    for (const auto& c : corpora) {
        const auto blobs = synthetic::gaussian_blobs(c.k, 40, 3, 0.1, 5.0, c.seed);
        const SelectKResult sel = select_k(blobs.points, candidates, c.seed);
        tally.require(sel.report.chosen_k == c.k, "chose k=" + std::to_string(sel.report.chosen_k));
        chosen += (chosen.empty() ? "" : ",") + std::to_string(sel.report.chosen_k);
        for (const auto& cand : sel.report.candidates) {
            if (cand.k == c.k) {
                min_sil = std::min(min_sil, cand.silhouette);
                tally.require(cand.silhouette > 0.8, "silhouette " + fmt(cand.silhouette));
            }
            // Re-run each candidate with its recorded seed to inspect the history.
            const KMeansResult r = kmeans(blobs.points, cand.k, cand.seed);
            tally.require(monotone(r), "inertia increased");
            tally.require(r.partition.inertia == cand.inertia, "re-run differs");
            ++runs;
        }
    }
    std::mt19937_64 rng(606);
    for (int t = 0; t < 50; ++t) {
        const PointMatrix x = testing::random_matrix(20 + static_cast<Eigen::Index>(rng() % 200), 2 + static_cast<Eigen::Index>(rng() % 6), rng);
        tally.require(monotone(kmeans(x, 1 + static_cast<int>(rng() % 10), rng())), "inertia increased");
        ++runs;
    }

    const auto one = synthetic::gaussian_blobs(1, 60, 3, 0.1, 5.0, 64);
    std::vector<int> halves(60, 0);
    std::fill(halves.begin() + 30, halves.end(), 1);
    SilhouetteOptions exact;
    exact.exact = true;
    const double split = silhouette(one.points, halves, 2, exact);
    tally.require(split < 0.3, "split silhouette " + fmt(split));
    return tally.outcome("chosen k=" + chosen + " (true 3,4,5) min silhouette=" + fmt(min_sil) +
                         " split silhouette=" + fmt(split) + " monotone runs=" + std::to_string(runs));
}

Outcome mixing_benefit() {
    Tally tally;
    testing::TempDir dir("acceptance-mixing");
    const int m = 4;
    synthetic::NoisyDomainOptions opts;
    opts.domains = m;
    const std::string noisy_label = "domain_" + std::to_string(opts.noisy_domain);

    std::ofstream paired("paired_comparison.csv", std::ios::trunc);
    paired << "seed,stratified_final_eval_loss,randb_final_eval_loss,randb_noisy_weight,randb_not_worse,noisy_below_uniform\n";
    paired.precision(17);

    int wins = 0, noisy_low = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto manifest = dir / ("corpus_" + std::to_string(seed) + ".jsonl");
        const Corpus corpus = synthetic::noisy_domain_corpus(opts, seed);
        save_corpus(corpus, manifest);

        std::map<Strategy, ExperimentReport> reports;
        for (Strategy s : {Strategy::stratified, Strategy::randb}) {
            ExperimentConfig cfg;
            cfg.manifest = manifest;
            cfg.fixed_k = m;
            cfg.train.strategy = s;
            cfg.train.lambda = 3.0;
            cfg.train.rounds = 20;
            cfg.train.steps_per_round = 50;
            cfg.train.batch_size = 32;
            cfg.train.seed = seed;
            cfg.output_dir = dir / (std::string(to_string(s)) + "_" + std::to_string(seed));
            reports.emplace(s, run_experiment(cfg));
        }

        // The noisy cluster is the one holding most of the noisy domain's train points.
        const Partition p = load_partition(reports.at(Strategy::randb).output_dir / "partition.jsonl");
        std::vector<int> noisy_count(static_cast<std::size_t>(m), 0);
        std::map<std::string, std::string> domain_of;
        for (const Example& ex : corpus.examples()) domain_of[ex.id] = ex.domain_label;
        for (std::size_t i = 0; i < p.train_ids.size(); ++i) {
            if (domain_of[p.train_ids[i]] == noisy_label) ++noisy_count[static_cast<std::size_t>(p.labels[i])];
        }
        const auto noisy = static_cast<std::size_t>(std::max_element(noisy_count.begin(), noisy_count.end()) - noisy_count.begin());

        const double strat = reports.at(Strategy::stratified).final_eval_loss_weighted;
        const double randb = reports.at(Strategy::randb).final_eval_loss_weighted;
        const double weight = reports.at(Strategy::randb).logs.back().weights_used[noisy];
        const bool win = randb <= strat;
        const bool low = weight < 1.0 / m;
        wins += win;
        noisy_low += low;
        paired << seed << ',' << strat << ',' << randb << ',' << weight << ',' << win << ',' << low << '\n';
    }
    tally.require(wins >= 8, "randb not worse on only " + std::to_string(wins) + "/10 seeds");
    tally.require(noisy_low >= 8, "noisy weight below 1/m on only " + std::to_string(noisy_low) + "/10 seeds");
    return tally.outcome("randb<=stratified on " + std::to_string(wins) + "/10, noisy weight<1/m on " +
                         std::to_string(noisy_low) + "/10 (paired_comparison.csv)");
}

Outcome cost_model() {
    Tally tally;
    using namespace cost;
    for (const auto& row : testing::kHandCosts) {
        const CostReport report = compare(row.params);
        for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
            const MethodCost& mc = report.methods[k];
            tally.require(testing::relative_error(mc.total_flops, row.total[k]) <= 1e-9, "total flops");
            if (row.overhead[k] == 0.0) {
                tally.require(mc.relative_overhead == 0.0, "standard overhead");
            } else {
                tally.require(testing::relative_error(mc.relative_overhead, row.overhead[k]) <= 1e-9, "overhead");
            }
            tally.require(mc.consistent, std::string(to_string(mc.method)) + " columns disagree");
        }
    }
    const CostParams dolly{1e8, 1.6384e7, 1e5, 7, 10, 0.01};
    const double overhead = relative_overhead(Method::randb, dolly);
    tally.require(std::abs(overhead - 4.99e-6) <= 0.01e-6, "overhead " + fmt(overhead));
    // Reported table value: 0.0006 percent.
    const double reported = 0.0006 / 100.0;
    const double orders = std::abs(std::log10(overhead / reported));
    tally.require(orders < 1.0, "not within an order of magnitude of the reported overhead");
    return tally.outcome("randb overhead=" + fmt(overhead) + " (" + fmt(100 * overhead) + "%) vs reported 0.0006%");
}

Outcome mw_aggregation() {
    Tally tally;
    std::mt19937_64 rng(909);
    double worst = 0.0;
    std::gamma_distribution<double> gamma(1.0, 1.0);
    auto simplex = [&](int m) {
        std::vector<double> v(static_cast<std::size_t>(m));
        for (double& x : v) x = gamma(rng) + 1e-12;
        return MixtureWeights::normalized(v);
    };
    for (int t = 0; t < 100; ++t) {
        const int m = 2 + static_cast<int>(rng() % 7);
        const Matrix f = testing::random_matrix(m, m + 3, rng);
        const Matrix G = f * f.transpose();
        const MixtureWeights p = simplex(m), start = simplex(m);
        const double eta = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        const double mu = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
        const MixtureWeights twice =
            multiplicative_weights_update(multiplicative_weights_update(start, G, p, eta, mu), G, p, eta, mu);
        const MixtureWeights once = multiplicative_weights_update(start, G, p, 2 * eta, mu);
        for (int i = 0; i < m; ++i) {
            const double d = std::abs(twice[i] - once[i]);
            worst = std::max(worst, d);
            tally.require(d <= 1e-12, "aggregation " + fmt(d));
        }
    }
    return tally.outcome("worst difference=" + fmt(worst));
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "per-example final-layer gradients", 5, per_example_trick},
        {2, "backprop vs finite differences", 10, finite_differences},
        {3, "Gram and update properties", 10, gram_and_update},
        {4, "regret suite", 30, regret_suite},
        {5, "greedy step dominance", 30, greedy_dominance},
        {6, "clustering and k selection", 60, clustering},
        {7, "end-to-end mixing benefit", 300, mixing_benefit},
        {8, "cost model", 1, cost_model},
        {9, "multiplicative-weights aggregation", 1, mw_aggregation},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("[%s] criterion %d: %s (%.2fs / %.0fs budget%s) %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.budget_seconds, in_time ? "" : ", OVER BUDGET", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
