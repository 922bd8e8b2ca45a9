#include "mixopt/corpus.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "mixopt/error.hpp"

namespace mixopt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::string_view kManifestFormat = "mixopt-manifest";
constexpr int kManifestVersion = 1;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

float read_le_float(const unsigned char* p) {
    std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                         (static_cast<std::uint32_t>(p[2]) << 16) |
                         (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

void write_le_float(std::ostream& out, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff),
                           static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

template <typename T>
T require(const json& record, const char* key, std::size_t line) {
    auto it = record.find(key);
    if (it == record.end()) {
        throw DataError("manifest line " + std::to_string(line) + ": missing field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw DataError("manifest line " + std::to_string(line) + ": field '" + key +
                        "' has the wrong type");
    }
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "eval"; }

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "eval") return Split::eval;
    throw DataError("unknown split '" + std::string(text) + "'");
}

std::string_view to_string(ProportionUnit unit) {
    return unit == ProportionUnit::examples ? "example" : "token";
}

ProportionUnit parse_proportion_unit(std::string_view text) {
    if (text == "example" || text == "examples") return ProportionUnit::examples;
    if (text == "token" || text == "tokens") return ProportionUnit::tokens;
    throw ConfigError("unknown proportion unit '" + std::string(text) + "'");
}

Corpus::Corpus(std::vector<Example> examples, int d_emb, std::vector<std::string> domain_vocabulary)
    : examples_(std::move(examples)), d_emb_(d_emb), vocabulary_(std::move(domain_vocabulary)) {
    if (d_emb_ <= 0) throw DataError("d_emb must be positive");

    std::set<std::string> vocab_set(vocabulary_.begin(), vocabulary_.end());
    if (vocab_set.size() != vocabulary_.size()) {
        throw DataError("domain vocabulary contains duplicates");
    }
    const bool derive_vocab = vocabulary_.empty();

    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < examples_.size(); ++i) {
        const Example& ex = examples_[i];
        if (!seen.insert(ex.id).second) throw DataError("duplicate example id '" + ex.id + "'");
        if (static_cast<int>(ex.embedding.size()) != d_emb_) {
            throw DataError("example '" + ex.id + "' has embedding dimension " +
                            std::to_string(ex.embedding.size()) + ", expected " +
                            std::to_string(d_emb_));
        }
        for (double v : ex.embedding) {
            if (!std::isfinite(v)) {
                throw DataError("example '" + ex.id + "' has a non-finite embedding value");
            }
        }
        if (ex.token_count < 1) throw DataError("example '" + ex.id + "' has token_count < 1");
        if (ex.target && *ex.target < 0) {
            throw DataError("example '" + ex.id + "' has a negative target");
        }
        if (!vocab_set.contains(ex.domain_label)) {
            if (!derive_vocab) {
                throw DataError("example '" + ex.id + "' has domain label '" + ex.domain_label +
                                "' outside the declared vocabulary");
            }
            vocab_set.insert(ex.domain_label);
            vocabulary_.push_back(ex.domain_label);
        }
        (ex.split == Split::train ? train_idx_ : eval_idx_).push_back(i);
    }
    if (train_idx_.empty()) throw DataError("corpus has no train examples");
    if (eval_idx_.empty()) throw DataError("corpus has no eval examples");
}

const std::vector<std::size_t>& Corpus::indices(Split split) const {
    return split == Split::train ? train_idx_ : eval_idx_;
}

PointMatrix Corpus::embeddings(Split split) const {
    const auto& idx = indices(split);
    PointMatrix out(static_cast<Eigen::Index>(idx.size()), d_emb_);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& e = examples_[idx[r]].embedding;
        for (int c = 0; c < d_emb_; ++c) out(static_cast<Eigen::Index>(r), c) = e[c];
    }
    return out;
}

std::vector<std::string> Corpus::ids(Split split) const {
    std::vector<std::string> out;
    for (std::size_t i : indices(split)) out.push_back(examples_[i].id);
    return out;
}

Corpus load_corpus(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest is empty: " + manifest_path.string());
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("manifest header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("format", "") != kManifestFormat) {
        throw DataError("manifest header does not declare format '" + std::string(kManifestFormat) + "'");
    }
    if (header.value("version", 0) != kManifestVersion) {
        throw DataError("unsupported manifest version");
    }
    const auto d_emb = require<int>(header, "d_emb", 1);
    const auto count = require<std::int64_t>(header, "count", 1);
    const auto blob_name = require<std::string>(header, "blob", 1);
    std::vector<std::string> vocabulary;
    if (header.contains("domains")) vocabulary = require<std::vector<std::string>>(header, "domains", 1);
    if (d_emb <= 0 || count < 0) throw DataError("manifest header has invalid d_emb or count");

    const fs::path blob_path = manifest_path.parent_path() / blob_name;
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw DataError("cannot open embedding blob " + blob_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(blob)),
                                     std::istreambuf_iterator<char>());
    const auto expected = static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(d_emb) * 4u;
    if (bytes.size() != expected) {
        throw DataError("embedding blob " + blob_path.string() + " has " +
                        std::to_string(bytes.size()) + " bytes; header declares count=" +
                        std::to_string(count) + " x d_emb=" + std::to_string(d_emb) + " (" +
                        std::to_string(expected) + " bytes): dimension mismatch");
    }

    std::vector<Example> examples;
    examples.reserve(static_cast<std::size_t>(count));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + " is not valid JSON");
        }
        Example ex;
        ex.id = require<std::string>(record, "id", line_no);
        ex.domain_label = require<std::string>(record, "domain_label", line_no);
        ex.split = parse_split(require<std::string>(record, "split", line_no));
        ex.token_count = require<std::int64_t>(record, "token_count", line_no);
        if (record.contains("text")) ex.text = require<std::string>(record, "text", line_no);
        if (record.contains("target")) ex.target = require<int>(record, "target", line_no);
        const auto row = require<std::int64_t>(record, "row", line_no);
        if (row < 0 || row >= count) {
            throw DataError("example '" + ex.id + "' references blob row " + std::to_string(row) +
                            " outside [0, " + std::to_string(count) + ")");
        }
        ex.embedding.resize(static_cast<std::size_t>(d_emb));
        const unsigned char* base = bytes.data() + static_cast<std::size_t>(row) * d_emb * 4u;
        for (int c = 0; c < d_emb; ++c) ex.embedding[c] = read_le_float(base + 4 * c);
        examples.push_back(std::move(ex));
    }
    if (static_cast<std::int64_t>(examples.size()) != count) {
        throw DataError("manifest declares " + std::to_string(count) + " examples but lists " +
                        std::to_string(examples.size()));
    }
    return Corpus(std::move(examples), d_emb, std::move(vocabulary));
}

void save_corpus(const Corpus& corpus, const fs::path& manifest_path, std::string blob_name) {
    if (blob_name.empty()) blob_name = manifest_path.stem().string() + ".f32";
    const fs::path blob_path = manifest_path.parent_path() / blob_name;

    std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
    if (!blob) throw DataError("cannot write " + blob_path.string());
    for (const Example& ex : corpus.examples()) {
        for (double v : ex.embedding) write_le_float(blob, static_cast<float>(v));
    }

    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + manifest_path.string());
    json header = {{"format", kManifestFormat},
                   {"version", kManifestVersion},
                   {"d_emb", corpus.d_emb()},
                   {"count", corpus.size()},
                   {"blob", blob_name},
                   {"domains", corpus.domain_vocabulary()}};
    out << header.dump() << '\n';
    std::size_t row = 0;
    for (const Example& ex : corpus.examples()) {
        json record = {{"id", ex.id},
                       {"domain_label", ex.domain_label},
                       {"split", to_string(ex.split)},
                       {"token_count", ex.token_count},
                       {"row", row++}};
        if (ex.text) record["text"] = *ex.text;
        if (ex.target) record["target"] = *ex.target;
        out << record.dump() << '\n';
    }
    if (!out || !blob) throw DataError("short write while saving corpus");
}

MixtureWeights eval_proportions(const Corpus& corpus, const Partition& partition,
                                ProportionUnit unit) {
    const auto& eval_idx = corpus.indices(Split::eval);
    if (eval_idx.empty()) throw DataError("corpus has zero eval examples");
    if (partition.k <= 0) throw DataError("partition has no clusters");

    std::map<std::string, int> cluster;
    for (std::size_t i = 0; i < partition.eval_ids.size(); ++i) {
        cluster.emplace(partition.eval_ids[i], partition.eval_labels[i]);
    }
    std::vector<double> mass(static_cast<std::size_t>(partition.k), 0.0);
    for (std::size_t i : eval_idx) {
        const Example& ex = corpus.examples()[i];
        auto it = cluster.find(ex.id);
        if (it == cluster.end()) {
            throw DataError("eval example '" + ex.id + "' is not assigned to a cluster");
        }
        if (it->second < 0 || it->second >= partition.k) {
            throw DataError("eval example '" + ex.id + "' assigned outside [0, k)");
        }
        mass[static_cast<std::size_t>(it->second)] +=
            unit == ProportionUnit::examples ? 1.0 : static_cast<double>(ex.token_count);
    }
    return MixtureWeights::normalized(std::move(mass));
}

}  // namespace mixopt
