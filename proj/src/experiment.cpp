#include "mixopt/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>

#include <json.hpp>

#include "mixopt/balance.hpp"
#include "mixopt/error.hpp"

namespace mixopt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kManifestFormatVersion = 1;
constexpr int kPartitionFormatVersion = 1;
constexpr int kRoundCsvVersion = 1;

/// Re-throws `fn`'s error with a stage prefix, preserving its category.
template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DivergenceError&) {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(stage) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(stage) + ": " + e.what());
    }
}

void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
    const fs::path probe = dir / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

json candidate_json(const KCandidate& c) {
    return {{"k", c.k},
            {"silhouette", std::isfinite(c.silhouette) ? json(c.silhouette) : json(nullptr)},
            {"inertia", c.inertia},
            {"seed", c.seed}};
}

json selection_doc(const KSelectionReport& report) {
    json candidates = json::array();
    for (const auto& c : report.candidates) candidates.push_back(candidate_json(c));
    return {{"chosen_k", report.chosen_k}, {"candidates", candidates}};
}

ExperimentReport train_stage(const ExperimentConfig& config, const Corpus& corpus, const Partition& partition,
                             KSelectionReport selection, std::chrono::steady_clock::time_point start) {
    ExperimentReport report;
    report.chosen_k = partition.k;
    report.selection = std::move(selection);
    report.config_echo = config.to_text();
    report.output_dir = config.output_dir;

    in_stage("save partition", [&] { save_partition(partition, config.output_dir / "partition.jsonl"); });
    report.eval_weights =
        in_stage("eval proportions", [&] { return eval_proportions(corpus, partition, config.proportion_unit); });

    TrainingResult trained =
        in_stage("train", [&] { return run_training(corpus, partition, config.train, report.eval_weights); });
    report.logs = std::move(trained.logs);
    report.final_eval_loss_weighted = report.logs.back().eval_loss_weighted;

    in_stage("write outputs", [&] {
        write_round_csv(report.logs, config.output_dir / "rounds.csv");
        emit_plot_data(report.logs, config.output_dir);
        if (config.dump_gram) {
            fs::create_directories(config.output_dir / "gram");
            for (const RoundLog& log : report.logs) {
                char name[32];
                std::snprintf(name, sizeof name, "round_%04d.txt", log.round);
                write_dense_matrix(log.gram, config.output_dir / "gram" / name);
            }
        }
    });
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json rounds = json::array();
    for (const RoundLog& log : report.logs) {
        rounds.push_back({{"round", log.round},
                          {"weights", log.weights_used.values()},
                          {"train_loss", log.train_loss},
                          {"eval_loss_weighted", log.eval_loss_weighted},
                          {"eval_loss_per_cluster", log.eval_loss_per_cluster},
                          {"degenerate_update", log.degenerate_update}});
    }
    const json doc = {{"report_version", kReportVersion},
                      {"formats",
                       {{"manifest", kManifestFormatVersion},
                        {"partition", kPartitionFormatVersion},
                        {"round_csv", kRoundCsvVersion},
                        {"config", kConfigVersion}}},
                      {"chosen_k", report.chosen_k},
                      {"selection", selection_doc(report.selection)},
                      {"eval_weights", report.eval_weights.values()},
                      {"strategy", to_string(config.train.strategy)},
                      {"rounds", rounds},
                      {"final_eval_loss_weighted", report.final_eval_loss_weighted},
                      {"wall_clock_seconds", report.wall_clock_seconds},
                      {"config", report.config_echo}};
    std::ofstream out(config.output_dir / "report.json", std::ios::trunc);
    if (!out) throw DataError("cannot write report.json");
    out << doc.dump(2) << '\n';
    return report;
}

}  // namespace

SelectKResult regroup_stage(const Corpus& corpus, const ExperimentConfig& config) {
    RegroupOptions options;
    options.seed = derive_seed(config.train.seed, "clustering");
    options.normalize = config.normalize_embeddings;
    options.kmeans = config.kmeans;
    options.silhouette = config.silhouette;
    if (!config.fixed_k) {
        options.k_candidates = config.k_candidates;
        return regroup(corpus, options);
    }

    PointMatrix train = corpus.embeddings(Split::train);
    PointMatrix eval = corpus.embeddings(Split::eval);
    if (options.normalize) {
        train = unit_normalized(train);
        eval = unit_normalized(eval);
    }
    const int k = *config.fixed_k;
    const std::uint64_t k_seed = derive_seed(options.seed, "kmeans/k=" + std::to_string(k));
    KMeansResult run = kmeans(train, k, k_seed, options.kmeans);
    SelectKResult out;
    double score = std::numeric_limits<double>::quiet_NaN();
    if (k >= 2) {
        SilhouetteOptions sil = options.silhouette;
        sil.seed = derive_seed(options.seed, "silhouette");
        score = silhouette(train, run.partition.labels, k, sil);
    }
    out.report.candidates.push_back({k, score, run.partition.inertia, k_seed});
    out.report.chosen_k = k;
    out.partition = std::move(run.partition);
    out.partition.train_ids = corpus.ids(Split::train);
    out.partition.eval_ids = corpus.ids(Split::eval);
    out.partition.eval_labels = assign_to_nearest(out.partition.centroids, eval);
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    prepare_output_dir(config.output_dir);
    const Corpus corpus = in_stage("load corpus", [&] { return load_corpus(config.manifest); });
    SelectKResult grouped = in_stage("regroup", [&] { return regroup_stage(corpus, config); });
    return train_stage(config, corpus, grouped.partition, std::move(grouped.report), start);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const Partition& partition) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    prepare_output_dir(config.output_dir);
    const Corpus corpus = in_stage("load corpus", [&] { return load_corpus(config.manifest); });
    KSelectionReport selection;
    selection.chosen_k = partition.k;
    selection.candidates.push_back(
        {partition.k, std::numeric_limits<double>::quiet_NaN(), partition.inertia, partition.seed});
    return train_stage(config, corpus, partition, std::move(selection), start);
}

fs::path emit_plot_data(const std::vector<RoundLog>& logs, const fs::path& dir) {
    if (logs.empty()) throw DataError("no round logs to plot");
    const fs::path path = dir / "plot_data.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t m = logs.front().weights_used.size();
    out << "round";
    for (std::size_t i = 0; i < m; ++i) out << ",p_" << i;
    out << ",train_loss,eval_loss_weighted\n" << std::setprecision(17);
    for (const RoundLog& log : logs) {
        out << log.round;
        for (double v : log.weights_used.values()) out << ',' << v;
        out << ',' << log.train_loss << ',' << log.eval_loss_weighted << '\n';
    }
    if (!out) throw DataError("short write on " + path.string());
    return path;
}

std::string selection_json(const KSelectionReport& report) { return selection_doc(report).dump(2); }

}  // namespace mixopt
