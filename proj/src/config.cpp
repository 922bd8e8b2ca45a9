#include "mixopt/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mixopt/error.hpp"

namespace mixopt {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': cannot parse '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
    if (out.empty()) throw ConfigError("key '" + key + "' is empty");
    return out;
}

std::string join(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (manifest.empty()) throw ConfigError("config is missing 'manifest'");
    if (fixed_k && !k_candidates.empty()) throw ConfigError("'k' and 'k_candidates' are mutually exclusive");
    if (!fixed_k && k_candidates.empty()) throw ConfigError("config needs 'k' or 'k_candidates'");
    if (fixed_k && *fixed_k < 1) throw ConfigError("'k' must be >= 1");
    for (int k : k_candidates) {
        if (k < 2) throw ConfigError("every k candidate must be >= 2 (silhouette is undefined for k = 1)");
    }
    if (output_dir.empty()) throw ConfigError("'output_dir' is empty");
    if (kmeans.max_iters < 1 || !(kmeans.tol > 0.0) || kmeans.n_init < 1) throw ConfigError("invalid k-means settings");
    if (silhouette.sample_cap < 2) throw ConfigError("'silhouette_sample_cap' must be >= 2");
    train.validate();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    std::optional<int> version;
    auto resolve = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"config_version", [&](auto& k, auto& v) { version = parse_number<int>(k, v); }},
        {"manifest", [&](auto&, auto& v) { cfg.manifest = resolve(v); }},
        {"k", [&](auto& k, auto& v) { cfg.fixed_k = parse_number<int>(k, v); }},
        {"k_candidates", [&](auto& k, auto& v) { cfg.k_candidates = parse_int_list(k, v); }},
        {"rounds", [&](auto& k, auto& v) { cfg.train.rounds = parse_number<int>(k, v); }},
        {"steps_per_round", [&](auto& k, auto& v) { cfg.train.steps_per_round = parse_number<int>(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { cfg.train.batch_size = parse_number<int>(k, v); }},
        {"learning_rate", [&](auto& k, auto& v) { cfg.train.learning_rate = parse_number<double>(k, v); }},
        {"lambda", [&](auto& k, auto& v) { cfg.train.lambda = parse_number<double>(k, v); }},
        {"hidden_units", [&](auto& k, auto& v) { cfg.train.hidden_units = parse_number<int>(k, v); }},
        {"eta_in_softmax", [&](auto& k, auto& v) { cfg.train.eta_in_softmax = parse_bool(k, v); }},
        {"strategy", [&](auto&, auto& v) { cfg.train.strategy = parse_strategy(v); }},
        {"seed", [&](auto& k, auto& v) { cfg.train.seed = parse_number<std::uint64_t>(k, v); }},
        {"proportion_unit", [&](auto&, auto& v) { cfg.proportion_unit = parse_proportion_unit(v); }},
        {"output_dir", [&](auto&, auto& v) { cfg.output_dir = resolve(v); }},
        {"normalize_embeddings", [&](auto& k, auto& v) { cfg.normalize_embeddings = parse_bool(k, v); }},
        {"kmeans_max_iters", [&](auto& k, auto& v) { cfg.kmeans.max_iters = parse_number<int>(k, v); }},
        {"kmeans_tol", [&](auto& k, auto& v) { cfg.kmeans.tol = parse_number<double>(k, v); }},
        {"kmeans_n_init", [&](auto& k, auto& v) { cfg.kmeans.n_init = parse_number<int>(k, v); }},
        {"silhouette_sample_cap", [&](auto& k, auto& v) { cfg.silhouette.sample_cap = parse_number<int>(k, v); }},
        {"silhouette_exact", [&](auto& k, auto& v) { cfg.silhouette.exact = parse_bool(k, v); }},
        {"dump_gram", [&](auto& k, auto& v) { cfg.dump_gram = parse_bool(k, v); }},
    };

    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + " has no '='");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
        if (seen[key]++) throw ConfigError("config key '" + key + "' given twice");
        it->second(key, value);
    }
    if (!version) throw ConfigError("config is missing 'config_version'");
    if (*version != kConfigVersion) throw ConfigError("unsupported config_version " + std::to_string(*version));
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentConfig cfg = parse_config(buffer.str(), path.parent_path());
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output_dir = dir;
    return cfg;
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    out << "config_version = " << kConfigVersion << '\n';
    out << "manifest = " << manifest.string() << '\n';
    if (fixed_k) out << "k = " << *fixed_k << '\n';
    if (!k_candidates.empty()) out << "k_candidates = " << join(k_candidates) << '\n';
    out << "rounds = " << train.rounds << '\n';
    out << "steps_per_round = " << train.steps_per_round << '\n';
    out << "batch_size = " << train.batch_size << '\n';
    out << "learning_rate = " << format_double(train.learning_rate) << '\n';
    out << "lambda = " << format_double(train.lambda) << '\n';
    out << "hidden_units = " << train.hidden_units << '\n';
    out << "eta_in_softmax = " << (train.eta_in_softmax ? "true" : "false") << '\n';
    out << "strategy = " << to_string(train.strategy) << '\n';
    out << "seed = " << train.seed << '\n';
    out << "proportion_unit = " << to_string(proportion_unit) << '\n';
    out << "output_dir = " << output_dir.string() << '\n';
    out << "normalize_embeddings = " << (normalize_embeddings ? "true" : "false") << '\n';
    out << "kmeans_max_iters = " << kmeans.max_iters << '\n';
    out << "kmeans_tol = " << format_double(kmeans.tol) << '\n';
    out << "kmeans_n_init = " << kmeans.n_init << '\n';
    out << "silhouette_sample_cap = " << silhouette.sample_cap << '\n';
    out << "silhouette_exact = " << (silhouette.exact ? "true" : "false") << '\n';
    out << "dump_gram = " << (dump_gram ? "true" : "false") << '\n';
    return out.str();
}

}  // namespace mixopt
