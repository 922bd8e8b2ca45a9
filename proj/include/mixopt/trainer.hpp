#ifndef MIXOPT_TRAINER_HPP
#define MIXOPT_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include "mixopt/corpus.hpp"
#include "mixopt/mixture.hpp"
#include "mixopt/model.hpp"
#include "mixopt/partition.hpp"

namespace mixopt {

enum class Strategy { stratified, multiplicative_weights, randb };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct TrainConfig {
    int rounds = 20;           // T
    int steps_per_round = 50;  // K
    int batch_size = 32;       // B
    double learning_rate = 0.1;
    double lambda = 3.0;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::randb;
    int hidden_units = 16;
    /// Multiply the softmax argument of the R&B rule by the learning rate.
    bool eta_in_softmax = false;

    void validate() const;
};

struct RoundLog {
    int round = 0;
    MixtureWeights weights_used;
    Matrix gram;
    double train_loss = 0.0;
    std::vector<double> eval_loss_per_cluster;
    double eval_loss_weighted = 0.0;
    /// True when this round's R&B update hit ||G p|| = 0 and the weights
    /// were carried forward.
    bool degenerate_update = false;
};

/// Corpus examples arranged for training: train rows with their class and
/// cluster, eval rows grouped by cluster.
struct TrainingData {
    int m = 0;
    int num_classes = 0;
    Matrix train_inputs;
    std::vector<int> train_targets;
    std::vector<int> train_clusters;
    /// Per-cluster row positions into train_inputs.
    std::vector<std::vector<std::size_t>> members;
    std::vector<Matrix> eval_inputs;
    std::vector<std::vector<int>> eval_targets;
};

/// Requires every example to carry a class target and every example to
/// be assigned by `partition`.
TrainingData make_training_data(const Corpus& corpus, const Partition& partition);

struct SampledExample {
    std::size_t row = 0;
    int cluster = 0;
};

/// B i.i.d. draws: cluster ~ weights, then a uniform member of that cluster.
std::vector<SampledExample> sample_batch(const std::vector<std::vector<std::size_t>>& members,
                                         const MixtureWeights& weights, int batch_size,
                                         std::mt19937_64& rng);

struct TrainingResult {
    ToyModel model;
    std::vector<RoundLog> logs;
};

/// Round-based SGD with per-round mixture reweighting.
///
/// Each round runs K steps at weights p^t, accumulating per-cluster
/// final-layer gradients (taken at the pre-step parameters), then builds
/// G and applies the configured strategy. Throws DivergenceError naming
/// the round if the loss or parameters stop being finite.
TrainingResult run_training(const TrainingData& data, const TrainConfig& config, const MixtureWeights& p_eval,
                            ToyModel model);

/// Builds the data and a default one-hidden-layer tanh classifier seeded
/// from config.seed, then trains.
TrainingResult run_training(const Corpus& corpus, const Partition& partition, const TrainConfig& config,
                            const MixtureWeights& p_eval);

/// CSV with columns round, p_0..p_{m-1}, train_loss, eval_loss_weighted,
/// eval_loss_0..eval_loss_{m-1}.
void write_round_csv(const std::vector<RoundLog>& logs, const std::filesystem::path& path);

/// Parses write_round_csv output; Gram matrices are not stored there.
std::vector<RoundLog> read_round_csv(const std::filesystem::path& path);

}  // namespace mixopt

#endif  // MIXOPT_TRAINER_HPP
