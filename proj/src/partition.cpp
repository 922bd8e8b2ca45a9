#include "mixopt/partition.hpp"

#include <fstream>

#include <json.hpp>

#include "mixopt/error.hpp"

namespace mixopt {

using json = nlohmann::json;

namespace {

constexpr std::string_view kPartitionFormat = "mixopt-partition";
constexpr int kPartitionVersion = 1;

json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception&) {
        throw DataError("partition line " + std::to_string(line_no) + " is not valid JSON");
    }
}

}  // namespace

std::optional<int> Partition::cluster_of(const std::string& id) const {
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
        if (train_ids[i] == id) return labels[i];
    }
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
        if (eval_ids[i] == id) return eval_labels[i];
    }
    return std::nullopt;
}

std::vector<std::vector<std::size_t>> Partition::members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
    return out;
}

std::vector<std::size_t> Partition::cluster_sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++out[static_cast<std::size_t>(l)];
    return out;
}

void save_partition(const Partition& partition, const std::filesystem::path& path) {
    if (partition.train_ids.size() != partition.labels.size() ||
        partition.eval_ids.size() != partition.eval_labels.size()) {
        throw DataError("partition ids and labels are misaligned; cannot serialize");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    const json header = {{"format", kPartitionFormat},
                         {"version", kPartitionVersion},
                         {"k", partition.k},
                         {"d_emb", partition.d_emb()},
                         {"seed", partition.seed},
                         {"inertia", partition.inertia},
                         {"n_train", partition.labels.size()},
                         {"n_eval", partition.eval_labels.size()}};
    out << header.dump() << '\n';
    for (Eigen::Index c = 0; c < partition.centroids.rows(); ++c) {
        json row = json::array();
        for (Eigen::Index j = 0; j < partition.centroids.cols(); ++j) row.push_back(partition.centroids(c, j));
        out << row.dump() << '\n';
    }
    for (std::size_t i = 0; i < partition.labels.size(); ++i) {
        out << json::array({partition.train_ids[i], partition.labels[i], "train"}).dump() << '\n';
    }
    for (std::size_t i = 0; i < partition.eval_labels.size(); ++i) {
        out << json::array({partition.eval_ids[i], partition.eval_labels[i], "eval"}).dump() << '\n';
    }
    if (!out) throw DataError("short write on " + path.string());
}

Partition load_partition(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open partition file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("partition file is empty");
    ++line_no;
    const json header = parse_line(line, line_no);
    if (header.value("format", "") != kPartitionFormat || header.value("version", 0) != kPartitionVersion) {
        throw DataError("unsupported partition file header");
    }

    Partition p;
    std::size_t n_train = 0;
    std::size_t n_eval = 0;
    int d_emb = 0;
    try {
        p.k = header.at("k").get<int>();
        d_emb = header.at("d_emb").get<int>();
        p.seed = header.at("seed").get<std::uint64_t>();
        p.inertia = header.at("inertia").get<double>();
        n_train = header.at("n_train").get<std::size_t>();
        n_eval = header.at("n_eval").get<std::size_t>();
    } catch (const json::exception&) {
        throw DataError("partition header is missing fields");
    }
    if (p.k <= 0 || d_emb < 0) throw DataError("partition header has invalid k or d_emb");

    p.centroids.resize(p.k, d_emb);
    for (int c = 0; c < p.k; ++c) {
        if (!std::getline(in, line)) throw DataError("partition file truncated in centroids");
        const json row = parse_line(line, ++line_no);
        if (!row.is_array() || static_cast<int>(row.size()) != d_emb) {
            throw DataError("centroid row " + std::to_string(c) + " has the wrong length");
        }
        for (int j = 0; j < d_emb; ++j) p.centroids(c, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json rec = parse_line(line, line_no);
        if (!rec.is_array() || rec.size() != 3 || !rec[0].is_string() || !rec[1].is_number_integer() ||
            !rec[2].is_string()) {
            throw DataError("partition line " + std::to_string(line_no) + " is not an (id, cluster, split) record");
        }
        const int cluster = rec[1].get<int>();
        if (cluster < 0 || cluster >= p.k) {
            throw DataError("partition line " + std::to_string(line_no) + " assigns a cluster outside [0, k)");
        }
        if (rec[2] == "train") {
            p.train_ids.push_back(rec[0].get<std::string>());
            p.labels.push_back(cluster);
        } else if (rec[2] == "eval") {
            p.eval_ids.push_back(rec[0].get<std::string>());
            p.eval_labels.push_back(cluster);
        } else {
            throw DataError("partition line " + std::to_string(line_no) + " has an unknown split");
        }
    }
    if (p.labels.size() != n_train || p.eval_labels.size() != n_eval) {
        throw DataError("partition assignment count disagrees with header");
    }
    return p;
}

}  // namespace mixopt
