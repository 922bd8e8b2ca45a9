#ifndef MIXOPT_SYNTHETIC_HPP
#define MIXOPT_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "mixopt/corpus.hpp"
#include "mixopt/types.hpp"

namespace mixopt::synthetic {

struct Blobs {
    PointMatrix points;
    std::vector<int> labels;
    PointMatrix centers;
};

/// `k` isotropic Gaussian blobs of `per_blob` points each. Centers sit on
/// scaled coordinate axes (and their negatives) so every pair is at
/// least `separation` apart.
Blobs gaussian_blobs(int k, int per_blob, int dim, double sigma, double separation, std::uint64_t seed);

struct NoisyDomainOptions {
    int domains = 4;
    int dim = 8;
    int classes = 2;
    int train_per_domain = 400;
    int eval_per_domain = 100;
    /// Domain whose class labels are drawn uniformly at random.
    int noisy_domain = 3;
    double separation = 8.0;
    double sigma = 1.0;
};

/// Classification corpus of `domains` embedding blobs. Each clean domain
/// labels points by a domain-specific linear rule; the noisy domain's
/// labels are pure noise and it has no eval examples, so evaluation weight
/// sits entirely on clean domains. Domain labels read "domain_<i>".
Corpus noisy_domain_corpus(const NoisyDomainOptions& options, std::uint64_t seed);

}  // namespace mixopt::synthetic

#endif  // MIXOPT_SYNTHETIC_HPP
