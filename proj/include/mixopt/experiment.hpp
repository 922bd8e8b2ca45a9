#ifndef MIXOPT_EXPERIMENT_HPP
#define MIXOPT_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/config.hpp"
#include "mixopt/regroup.hpp"
#include "mixopt/trainer.hpp"

namespace mixopt {

inline constexpr int kReportVersion = 1;

struct ExperimentReport {
    int chosen_k = 0;
    KSelectionReport selection;
    MixtureWeights eval_weights;
    std::vector<RoundLog> logs;
    double final_eval_loss_weighted = 0.0;
    double wall_clock_seconds = 0.0;
    std::string config_echo;
    std::filesystem::path output_dir;
};

/// Regroup then train. Writes partition.jsonl, rounds.csv, plot_data.csv,
/// report.json (and gram/round_NNNN.txt when dump_gram is set) into the
/// configured output directory. Errors carry the failing stage in their
/// message but keep their type.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Same pipeline with the regroup stage replaced by an existing partition.
ExperimentReport run_experiment(const ExperimentConfig& config, const Partition& partition);

/// Clustering stage alone: fixed k, or silhouette-driven choice among candidates.
SelectKResult regroup_stage(const Corpus& corpus, const ExperimentConfig& config);

/// Writes plot_data.csv with columns round, p_0..p_{m-1}, train_loss,
/// eval_loss_weighted (one row per round). Returns the file path.
std::filesystem::path emit_plot_data(const std::vector<RoundLog>& logs, const std::filesystem::path& dir);

/// JSON form of a k-selection report.
std::string selection_json(const KSelectionReport& report);

}  // namespace mixopt

#endif  // MIXOPT_EXPERIMENT_HPP
