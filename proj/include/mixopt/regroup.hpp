#ifndef MIXOPT_REGROUP_HPP
#define MIXOPT_REGROUP_HPP

#include <cstdint>
#include <vector>

#include "mixopt/corpus.hpp"
#include "mixopt/partition.hpp"
#include "mixopt/types.hpp"

namespace mixopt {

struct KMeansOptions {
    int max_iters = 300;
    /// Stop once the largest centroid move (Euclidean) drops below tol.
    double tol = 1e-4;
    /// Independent k-means++ restarts; the lowest final inertia wins.
    int n_init = 10;
};

struct KMeansResult {
    Partition partition;
    int iterations = 0;
    bool converged = false;
    /// Inertia after every assignment step, the last entry being final.
    std::vector<double> inertia_history;
};

/// Lloyd's algorithm from k-means++ seedings, best of n_init restarts.
/// Deterministic for a fixed seed; the history is that of the kept restart.
/// Empty clusters are reseeded with the point farthest from its centroid,
/// so every returned cluster is non-empty.
KMeansResult kmeans(const PointMatrix& points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Sum of squared distances of every point to its assigned centroid.
double inertia(const PointMatrix& points, const PointMatrix& centroids,
               const std::vector<int>& labels);

struct SilhouetteOptions {
    /// Points evaluated when not exact; uniformly sampled without replacement.
    int sample_cap = 2048;
    bool exact = false;
    std::uint64_t seed = 0;
};

/// Mean silhouette coefficient; singletons score 0. Throws ConfigError
/// when k < 2 or fewer than two clusters are populated.
double silhouette(const PointMatrix& points, const std::vector<int>& labels, int k,
                  const SilhouetteOptions& options = {});

struct KCandidate {
    int k = 0;
    double silhouette = 0.0;
    double inertia = 0.0;
    std::uint64_t seed = 0;
};

struct KSelectionReport {
    std::vector<KCandidate> candidates;
    int chosen_k = 0;
};

struct SelectKResult {
    Partition partition;
    KSelectionReport report;
};

/// Clusters once per candidate k and keeps the best silhouette; ties go
/// to the smaller k, then to the earlier candidate.
SelectKResult select_k(const PointMatrix& points, const std::vector<int>& k_candidates,
                       std::uint64_t seed, const KMeansOptions& kmeans_options = {},
                       SilhouetteOptions silhouette_options = {});

/// Nearest centroid per query; ties resolve to the lowest index.
std::vector<int> assign_to_nearest(const PointMatrix& centroids, const PointMatrix& queries);

/// Scales every row to unit length; zero rows are left untouched.
PointMatrix unit_normalized(const PointMatrix& points);

struct RegroupOptions {
    std::vector<int> k_candidates;
    std::uint64_t seed = 0;
    bool normalize = false;
    KMeansOptions kmeans;
    SilhouetteOptions silhouette;
};

/// Full skill partitioning of a corpus: cluster the train embeddings,
/// pick k, then map each eval example onto its nearest train centroid.
SelectKResult regroup(const Corpus& corpus, const RegroupOptions& options);

}  // namespace mixopt

#endif  // MIXOPT_REGROUP_HPP
