#ifndef MIXOPT_CORPUS_HPP
#define MIXOPT_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixopt/mixture.hpp"
#include "mixopt/partition.hpp"
#include "mixopt/types.hpp"

namespace mixopt {

enum class Split { train, eval };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Example {
    std::string id;
    std::vector<double> embedding;
    std::string domain_label;
    Split split = Split::train;
    std::int64_t token_count = 1;
    std::optional<std::string> text;
    /// Class label used by the supervised toy model; optional for pure
    /// clustering workloads.
    std::optional<int> target;

    bool operator==(const Example&) const = default;
};

/// An immutable, validated collection of embedded examples.
class Corpus {
public:
    /// Validates every invariant; throws DataError naming the offending id.
    /// When `domain_vocabulary` is empty it is derived in first-seen order.
    Corpus(std::vector<Example> examples, int d_emb,
           std::vector<std::string> domain_vocabulary = {});

    const std::vector<Example>& examples() const noexcept { return examples_; }
    int d_emb() const noexcept { return d_emb_; }
    const std::vector<std::string>& domain_vocabulary() const noexcept { return vocabulary_; }
    std::size_t size() const noexcept { return examples_.size(); }

    /// Positions of the examples in `split`, in corpus order.
    const std::vector<std::size_t>& indices(Split split) const;

    /// Embeddings of `split` stacked one per row, in corpus order.
    PointMatrix embeddings(Split split) const;
    std::vector<std::string> ids(Split split) const;

    bool operator==(const Corpus& other) const {
        return d_emb_ == other.d_emb_ && vocabulary_ == other.vocabulary_ &&
               examples_ == other.examples_;
    }

private:
    std::vector<Example> examples_;
    int d_emb_;
    std::vector<std::string> vocabulary_;
    std::vector<std::size_t> train_idx_;
    std::vector<std::size_t> eval_idx_;
};

/// Reads a manifest (JSON lines: header, then one record per example) and
/// its little-endian float32 embedding blob.
Corpus load_corpus(const std::filesystem::path& manifest_path);

/// Writes `manifest_path` and a blob next to it. `blob_name` defaults to
/// the manifest stem with a `.f32` extension.
void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path,
                 std::string blob_name = {});

enum class ProportionUnit { examples, tokens };

std::string_view to_string(ProportionUnit unit);
ProportionUnit parse_proportion_unit(std::string_view text);

/// Evaluation proportions p: share of eval examples (or eval tokens) per
/// cluster. Clusters without eval examples get 0.
MixtureWeights eval_proportions(const Corpus& corpus, const Partition& partition,
                                ProportionUnit unit = ProportionUnit::examples);

}  // namespace mixopt

#endif  // MIXOPT_CORPUS_HPP
