#include "mixopt/regroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mixopt/error.hpp"

namespace mixopt {

namespace {

double squared_distance(const PointMatrix& a, Eigen::Index i, const PointMatrix& b, Eigen::Index j) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        sum += d * d;
    }
    return sum;
}

void require_finite(const PointMatrix& points, const char* what) {
    if (!points.allFinite()) throw DataError(std::string(what) + " contain non-finite values");
}

std::vector<Eigen::Index> plus_plus_seeds(const PointMatrix& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> chosen;
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

    auto take = [&](Eigen::Index idx) {
        chosen.push_back(idx);
        taken[static_cast<std::size_t>(idx)] = true;
        for (Eigen::Index p = 0; p < n; ++p) {
            nearest[p] = std::min(nearest[p], squared_distance(points, p, points, idx));
        }
    };

    take(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    while (static_cast<int>(chosen.size()) < k) {
        double total = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            if (!taken[p]) total += nearest[p];
        }
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            for (Eigen::Index p = 0; p < n; ++p) {
                if (taken[p] || nearest[p] <= 0.0) continue;
                acc += nearest[p];
                pick = p;
                if (acc > r) break;
            }
        } else {
            // Every remaining point duplicates a chosen one.
            std::vector<Eigen::Index> free;
            for (Eigen::Index p = 0; p < n; ++p) {
                if (!taken[p]) free.push_back(p);
            }
            pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
        }
        take(pick);
    }
    return chosen;
}

/// Nearest-centroid assignment followed by empty-cluster repair. Returns inertia.
double assign_and_repair(const PointMatrix& points, PointMatrix& centroids, std::vector<int>& labels) {
    const Eigen::Index n = points.rows();
    const int k = static_cast<int>(centroids.rows());
    std::vector<double> dist(static_cast<std::size_t>(n));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index p = 0; p < n; ++p) {
        int best = 0;
        double best_d = squared_distance(points, p, centroids, 0);
        for (int c = 1; c < k; ++c) {
            const double d = squared_distance(points, p, centroids, c);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[p] = best;
        dist[p] = best_d;
        ++counts[best];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        Eigen::Index far = -1;
        for (Eigen::Index p = 0; p < n; ++p) {
            if (counts[labels[p]] > 1 && (far < 0 || dist[p] > dist[far])) far = p;
        }
        --counts[labels[far]];
        labels[far] = c;
        counts[c] = 1;
        dist[far] = 0.0;
        centroids.row(c) = points.row(far);
    }
    double total = 0.0;
    for (double d : dist) total += d;
    return total;
}

PointMatrix cluster_means(const PointMatrix& points, const std::vector<int>& labels, int k) {
    PointMatrix sums = PointMatrix::Zero(k, points.cols());
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index p = 0; p < points.rows(); ++p) {
        sums.row(labels[p]) += points.row(p);
        counts[labels[p]] += 1.0;
    }
    for (int c = 0; c < k; ++c) sums.row(c) /= counts[c];
    return sums;
}

}  // namespace

double inertia(const PointMatrix& points, const PointMatrix& centroids, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
        throw DataError("labels do not cover the points");
    }
    double total = 0.0;
    for (Eigen::Index p = 0; p < points.rows(); ++p) {
        total += squared_distance(points, p, centroids, labels[p]);
    }
    return total;
}

namespace {

KMeansResult lloyd(const PointMatrix& points, int k, std::uint64_t seed, std::uint64_t init_seed,
                   const KMeansOptions& options) {
    std::mt19937_64 rng(init_seed);
    const auto seeds = plus_plus_seeds(points, k, rng);
    PointMatrix centroids(k, points.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = points.row(seeds[c]);

    KMeansResult result;
    std::vector<int> labels(static_cast<std::size_t>(points.rows()));
    for (int iter = 0; iter < options.max_iters; ++iter) {
        result.inertia_history.push_back(assign_and_repair(points, centroids, labels));
        PointMatrix updated = cluster_means(points, labels, k);
        double shift = 0.0;
        for (int c = 0; c < k; ++c) shift = std::max(shift, (updated.row(c) - centroids.row(c)).norm());
        centroids = std::move(updated);
        ++result.iterations;
        if (shift < options.tol) {
            result.converged = true;
            break;
        }
    }
    // Relabel against the final centroids so every point sits with its nearest one.
    const double final_inertia = assign_and_repair(points, centroids, labels);
    result.inertia_history.push_back(final_inertia);

    result.partition.k = k;
    result.partition.seed = seed;
    result.partition.inertia = final_inertia;
    result.partition.centroids = std::move(centroids);
    result.partition.labels = std::move(labels);
    return result;
}

}  // namespace

KMeansResult kmeans(const PointMatrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
    if (k <= 0) throw ConfigError("k must be positive, got " + std::to_string(k));
    if (k > points.rows()) {
        throw ConfigError("k=" + std::to_string(k) + " exceeds the " + std::to_string(points.rows()) +
                          " available points");
    }
    if (options.max_iters <= 0 || !(options.tol > 0.0) || options.n_init <= 0) {
        throw ConfigError("k-means needs max_iters > 0, tol > 0 and n_init > 0");
    }
    require_finite(points, "k-means inputs");

    KMeansResult best = lloyd(points, k, seed, seed, options);
    for (int r = 1; r < options.n_init; ++r) {
        KMeansResult next = lloyd(points, k, seed, derive_seed(seed, "restart=" + std::to_string(r)), options);
        if (next.partition.inertia < best.partition.inertia) best = std::move(next);
    }
    return best;
}

double silhouette(const PointMatrix& points, const std::vector<int>& labels, int k,
                  const SilhouetteOptions& options) {
    if (k < 2) throw ConfigError("silhouette needs k >= 2");
    const Eigen::Index n = points.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw DataError("labels do not cover the points");
    for (int l : labels) {
        if (l < 0 || l >= k) throw DataError("label outside [0, k)");
    }

    std::vector<Eigen::Index> sample(static_cast<std::size_t>(n));
    std::iota(sample.begin(), sample.end(), Eigen::Index{0});
    if (!options.exact && options.sample_cap > 0 && n > options.sample_cap) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(sample.begin(), sample.end(), rng);
        sample.resize(static_cast<std::size_t>(options.sample_cap));
        std::sort(sample.begin(), sample.end());
    }
    const std::size_t m = sample.size();

    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (auto idx : sample) ++sizes[labels[idx]];
    if (std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }) < 2) {
        throw ConfigError("silhouette needs at least two populated clusters");
    }

    // Row i holds summed distances from sample[i] to each cluster.
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(m), k);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = std::sqrt(squared_distance(points, sample[i], points, sample[j]));
            sums(static_cast<Eigen::Index>(i), labels[sample[j]]) += d;
            sums(static_cast<Eigen::Index>(j), labels[sample[i]]) += d;
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int own = labels[sample[i]];
        if (sizes[own] <= 1) continue;
        const double a = sums(static_cast<Eigen::Index>(i), own) / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || sizes[c] == 0) continue;
            b = std::min(b, sums(static_cast<Eigen::Index>(i), c) / sizes[c]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(m);
}

SelectKResult select_k(const PointMatrix& points, const std::vector<int>& k_candidates,
                       std::uint64_t seed, const KMeansOptions& kmeans_options,
                       SilhouetteOptions silhouette_options) {
    if (k_candidates.empty()) throw ConfigError("select_k needs at least one candidate k");
    silhouette_options.seed = derive_seed(seed, "silhouette");

    SelectKResult best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k : k_candidates) {
        const std::uint64_t k_seed = derive_seed(seed, "kmeans/k=" + std::to_string(k));
        KMeansResult run = kmeans(points, k, k_seed, kmeans_options);
        const double score = silhouette(points, run.partition.labels, k, silhouette_options);
        best.report.candidates.push_back({k, score, run.partition.inertia, k_seed});
        if (score > best_score || (score == best_score && k < best.report.chosen_k)) {
            best_score = score;
            best.report.chosen_k = k;
            best.partition = std::move(run.partition);
        }
    }
    return best;
}

std::vector<int> assign_to_nearest(const PointMatrix& centroids, const PointMatrix& queries) {
    if (centroids.rows() == 0) throw ConfigError("assign_to_nearest needs at least one centroid");
    if (queries.rows() > 0 && queries.cols() != centroids.cols()) {
        throw DataError("query dimension " + std::to_string(queries.cols()) +
                        " does not match centroid dimension " + std::to_string(centroids.cols()));
    }
    std::vector<int> out(static_cast<std::size_t>(queries.rows()));
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        int best = 0;
        double best_d = squared_distance(queries, q, centroids, 0);
        for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
            const double d = squared_distance(queries, q, centroids, c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out[q] = best;
    }
    return out;
}

PointMatrix unit_normalized(const PointMatrix& points) {
    PointMatrix out = points;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double norm = out.row(r).norm();
        if (norm > 0.0) out.row(r) /= norm;
    }
    return out;
}

SelectKResult regroup(const Corpus& corpus, const RegroupOptions& options) {
    PointMatrix train = corpus.embeddings(Split::train);
    PointMatrix eval = corpus.embeddings(Split::eval);
    if (options.normalize) {
        train = unit_normalized(train);
        eval = unit_normalized(eval);
    }
    SelectKResult result = select_k(train, options.k_candidates, options.seed, options.kmeans,
                                    options.silhouette);
    result.partition.train_ids = corpus.ids(Split::train);
    result.partition.eval_ids = corpus.ids(Split::eval);
    result.partition.eval_labels = assign_to_nearest(result.partition.centroids, eval);
    return result;
}

}  // namespace mixopt
