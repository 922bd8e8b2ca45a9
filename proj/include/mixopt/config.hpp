#ifndef MIXOPT_CONFIG_HPP
#define MIXOPT_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/corpus.hpp"
#include "mixopt/regroup.hpp"
#include "mixopt/trainer.hpp"

namespace mixopt {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kOutputDirEnv = "MIXOPT_OUTPUT_DIR";

/// One experiment, read from a flat `key = value` file.
///
/// `config_version` is mandatory. Unknown or repeated keys are errors, as
/// is giving both `k` and `k_candidates`. Relative paths resolve against
/// the config file's directory.
struct ExperimentConfig {
    std::filesystem::path manifest;
    std::optional<int> fixed_k;
    std::vector<int> k_candidates;
    TrainConfig train;
    ProportionUnit proportion_unit = ProportionUnit::examples;
    std::filesystem::path output_dir = "mixopt-out";
    bool normalize_embeddings = false;
    KMeansOptions kmeans;
    SilhouetteOptions silhouette;
    bool dump_gram = false;

    /// Throws ConfigError on inconsistency.
    void validate() const;
    /// Canonical `key = value` text; parse_config(to_text()) reproduces this config.
    std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads a config file and applies the MIXOPT_OUTPUT_DIR override.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace mixopt

#endif  // MIXOPT_CONFIG_HPP
