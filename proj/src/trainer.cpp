#include "mixopt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "mixopt/balance.hpp"
#include "mixopt/error.hpp"

namespace mixopt {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::stratified: return "stratified";
        case Strategy::multiplicative_weights: return "multiplicative_weights";
        case Strategy::randb: return "randb";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "stratified") return Strategy::stratified;
    if (text == "multiplicative_weights" || text == "mw") return Strategy::multiplicative_weights;
    if (text == "randb") return Strategy::randb;
    throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (steps_per_round < 0) throw ConfigError("steps_per_round must be >= 0");
    if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
    if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
}

TrainingData make_training_data(const Corpus& corpus, const Partition& partition) {
    std::map<std::string, int> cluster;
    for (std::size_t i = 0; i < partition.train_ids.size(); ++i) cluster.emplace(partition.train_ids[i], partition.labels[i]);
    for (std::size_t i = 0; i < partition.eval_ids.size(); ++i) cluster.emplace(partition.eval_ids[i], partition.eval_labels[i]);

    TrainingData data;
    data.m = partition.k;
    data.members.resize(static_cast<std::size_t>(data.m));
    std::vector<std::vector<const Example*>> eval_by_cluster(static_cast<std::size_t>(data.m));
    std::vector<const Example*> train;
    for (const Example& ex : corpus.examples()) {
        auto it = cluster.find(ex.id);
        if (it == cluster.end()) throw DataError("example '" + ex.id + "' is not covered by the partition");
        if (it->second < 0 || it->second >= data.m) throw DataError("example '" + ex.id + "' assigned outside [0, k)");
        if (!ex.target) throw DataError("example '" + ex.id + "' has no class target");
        data.num_classes = std::max(data.num_classes, *ex.target + 1);
        if (ex.split == Split::train) {
            data.members[static_cast<std::size_t>(it->second)].push_back(train.size());
            data.train_clusters.push_back(it->second);
            data.train_targets.push_back(*ex.target);
            train.push_back(&ex);
        } else {
            eval_by_cluster[static_cast<std::size_t>(it->second)].push_back(&ex);
        }
    }
    if (data.num_classes < 2) data.num_classes = 2;

    const int d = corpus.d_emb();
    data.train_inputs.resize(static_cast<Eigen::Index>(train.size()), d);
    for (std::size_t r = 0; r < train.size(); ++r) {
        for (int c = 0; c < d; ++c) data.train_inputs(static_cast<Eigen::Index>(r), c) = train[r]->embedding[c];
    }
    for (const auto& group : eval_by_cluster) {
        Matrix inputs(static_cast<Eigen::Index>(group.size()), d);
        std::vector<int> targets;
        for (std::size_t r = 0; r < group.size(); ++r) {
            for (int c = 0; c < d; ++c) inputs(static_cast<Eigen::Index>(r), c) = group[r]->embedding[c];
            targets.push_back(*group[r]->target);
        }
        data.eval_inputs.push_back(std::move(inputs));
        data.eval_targets.push_back(std::move(targets));
    }
    return data;
}

std::vector<SampledExample> sample_batch(const std::vector<std::vector<std::size_t>>& members,
                                         const MixtureWeights& weights, int batch_size, std::mt19937_64& rng) {
    if (weights.size() != members.size()) throw DataError("weights and clusters differ in count");
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (weights[i] > 0.0 && members[i].empty()) {
            throw DataError("positive sampling weight on empty cluster " + std::to_string(i));
        }
    }
    std::vector<SampledExample> batch;
    if (batch_size <= 0) return batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    std::discrete_distribution<int> pick_cluster(weights.values().begin(), weights.values().end());
    for (int b = 0; b < batch_size; ++b) {
        const int cluster = pick_cluster(rng);
        const auto& pool = members[static_cast<std::size_t>(cluster)];
        const auto at = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
        batch.push_back({pool[at], cluster});
    }
    return batch;
}

namespace {

double mean_loss(const ToyModel& model, const Matrix& inputs, const std::vector<int>& targets) {
    if (inputs.rows() == 0) return 0.0;
    const ForwardCache cache = forward(model, inputs);
    const auto losses = example_losses(model, cache.outputs(), Targets{targets, {}});
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

void fill_losses(const ToyModel& model, const TrainingData& data, const MixtureWeights& p_eval, RoundLog& log) {
    log.train_loss = mean_loss(model, data.train_inputs, data.train_targets);
    log.eval_loss_per_cluster.assign(static_cast<std::size_t>(data.m), 0.0);
    log.eval_loss_weighted = 0.0;
    for (int c = 0; c < data.m; ++c) {
        const auto i = static_cast<std::size_t>(c);
        log.eval_loss_per_cluster[i] = mean_loss(model, data.eval_inputs[i], data.eval_targets[i]);
        log.eval_loss_weighted += p_eval[i] * log.eval_loss_per_cluster[i];
    }
    if (!std::isfinite(log.train_loss) || !std::isfinite(log.eval_loss_weighted)) {
        throw NumericalError("evaluation loss is not finite");
    }
}

// Clusters without members cannot be sampled; their weight stays at zero.
MixtureWeights mask_empty_clusters(const MixtureWeights& p, const std::vector<std::vector<std::size_t>>& members) {
    std::vector<double> masked = p.values();
    bool changed = false;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        if (members[i].empty() && masked[i] > 0.0) {
            masked[i] = 0.0;
            changed = true;
        }
    }
    return changed ? MixtureWeights::normalized(std::move(masked)) : p;
}

}  // namespace

TrainingResult run_training(const TrainingData& data, const TrainConfig& config, const MixtureWeights& p_eval,
                            ToyModel model) {
    config.validate();
    if (model.loss() != LossKind::cross_entropy) throw ConfigError("training expects a cross-entropy model");
    if (static_cast<int>(p_eval.size()) != data.m) throw ConfigError("evaluation weights do not match the partition");
    if (model.input_dim() != data.train_inputs.cols() || model.output_dim() < data.num_classes) {
        throw ConfigError("model shape does not fit the training data");
    }

    std::mt19937_64 rng(derive_seed(config.seed, "sampling"));
    const Eigen::Index final_dim = model.final_layer().weight.size();
    GradientAccumulator acc(data.m, final_dim);

    MixtureWeights p = mask_empty_clusters(stratified_weights(data.m), data.members);
    MixtureWeights mw_state = p;
    std::vector<RoundLog> logs;
    for (int t = 0; t < config.rounds; ++t) {
        RoundLog log;
        log.round = t;
        log.weights_used = p;
        acc.reset();
        try {
            for (int k = 0; k < config.steps_per_round; ++k) {
                const auto batch = sample_batch(data.members, p, config.batch_size, rng);
                if (batch.empty()) continue;
                Matrix inputs(static_cast<Eigen::Index>(batch.size()), data.train_inputs.cols());
                Targets targets;
                for (std::size_t b = 0; b < batch.size(); ++b) {
                    inputs.row(static_cast<Eigen::Index>(b)) = data.train_inputs.row(static_cast<Eigen::Index>(batch[b].row));
                    targets.classes.push_back(data.train_targets[batch[b].row]);
                }
                BackwardResult res = loss_and_backward(model, inputs, targets);

                const auto per_example = per_example_final_layer_grads(res.cache.final_inputs(), res.output_grad);
                for (std::size_t b = 0; b < batch.size(); ++b) {
                    acc.add(batch[b].cluster, per_example[b].reshaped());
                }

                const double scale = 1.0 / static_cast<double>(batch.size());
                for (auto& w : res.gradients.weight) w *= scale;
                for (auto& v : res.gradients.bias) v *= scale;
                sgd_step(model, res.gradients, config.learning_rate);
            }
            log.gram = gram(acc);
            fill_losses(model, data, p_eval, log);
        } catch (const NumericalError& e) {
            throw DivergenceError(t, e.what());
        }

        switch (config.strategy) {
            case Strategy::stratified:
                p = stratified_weights(data.m);
                break;
            case Strategy::multiplicative_weights:
                mw_state = multiplicative_weights_update(mw_state, log.gram, p_eval, config.learning_rate,
                                                         1.0 / config.lambda);
                p = mw_state;
                break;
            case Strategy::randb: {
                const double eta = config.eta_in_softmax ? config.learning_rate : 1.0;
                auto next = eta > 0.0 ? randb_update(log.gram, p_eval, config.lambda, eta) : std::nullopt;
                if (next) {
                    p = std::move(*next);
                } else {
                    log.degenerate_update = true;
                }
                break;
            }
        }
        p = mask_empty_clusters(p, data.members);
        logs.push_back(std::move(log));
    }
    return {std::move(model), std::move(logs)};
}

TrainingResult run_training(const Corpus& corpus, const Partition& partition, const TrainConfig& config,
                            const MixtureWeights& p_eval) {
    config.validate();
    TrainingData data = make_training_data(corpus, partition);
    ToyModel model = ToyModel::initialize({corpus.d_emb(), config.hidden_units, data.num_classes},
                                          LossKind::cross_entropy, derive_seed(config.seed, "init"));
    return run_training(data, config, p_eval, std::move(model));
}

void write_round_csv(const std::vector<RoundLog>& logs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t m = logs.empty() ? 0 : logs.front().weights_used.size();
    out << "round";
    for (std::size_t i = 0; i < m; ++i) out << ",p_" << i;
    out << ",train_loss,eval_loss_weighted";
    for (std::size_t i = 0; i < m; ++i) out << ",eval_loss_" << i;
    out << '\n' << std::setprecision(17);
    for (const RoundLog& log : logs) {
        out << log.round;
        for (double v : log.weights_used.values()) out << ',' << v;
        out << ',' << log.train_loss << ',' << log.eval_loss_weighted;
        for (double v : log.eval_loss_per_cluster) out << ',' << v;
        out << '\n';
    }
    if (!out) throw DataError("short write on " + path.string());
}

std::vector<RoundLog> read_round_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("round CSV is empty");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
    if (columns < 5 || (columns - 3) % 2 != 0) throw DataError("round CSV header has an unexpected shape");
    const std::size_t m = (columns - 3) / 2;

    std::vector<RoundLog> logs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError("non-numeric cell in round CSV: '" + cell + "'");
            }
        }
        if (cells.size() != columns) throw DataError("round CSV row has the wrong number of cells");
        RoundLog log;
        log.round = static_cast<int>(cells[0]);
        log.weights_used = MixtureWeights(std::vector<double>(cells.begin() + 1, cells.begin() + 1 + static_cast<std::ptrdiff_t>(m)));
        log.train_loss = cells[1 + m];
        log.eval_loss_weighted = cells[2 + m];
        log.eval_loss_per_cluster.assign(cells.begin() + 3 + static_cast<std::ptrdiff_t>(m), cells.end());
        logs.push_back(std::move(log));
    }
    return logs;
}

}  // namespace mixopt
