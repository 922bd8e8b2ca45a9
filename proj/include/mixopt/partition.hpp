#ifndef MIXOPT_PARTITION_HPP
#define MIXOPT_PARTITION_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/types.hpp"

namespace mixopt {

/// A skill-assigning function realized as k centroids plus explicit labels.
///
/// `labels[i]` is the cluster of the i-th clustered point. When the
/// partition was built from a corpus, `train_ids[i]` names that point and
/// `eval_ids`/`eval_labels` hold the evaluation examples mapped onto the
/// same clusters.
struct Partition {
    int k = 0;
    std::uint64_t seed = 0;
    double inertia = 0.0;
    PointMatrix centroids;
    std::vector<int> labels;
    std::vector<std::string> train_ids;
    std::vector<std::string> eval_ids;
    std::vector<int> eval_labels;

    int d_emb() const noexcept { return static_cast<int>(centroids.cols()); }

    /// Cluster of a train or eval example, if assigned.
    std::optional<int> cluster_of(const std::string& id) const;

    /// Per-cluster member positions into `labels`.
    std::vector<std::vector<std::size_t>> members() const;

    /// Points per cluster.
    std::vector<std::size_t> cluster_sizes() const;
};

/// Writes the record file: a header line, k centroid rows, then one
/// (id, cluster) pair per line for train and eval assignments.
void save_partition(const Partition& partition, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path);

}  // namespace mixopt

#endif  // MIXOPT_PARTITION_HPP
