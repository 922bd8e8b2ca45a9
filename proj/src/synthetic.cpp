#include "mixopt/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mixopt/error.hpp"

namespace mixopt::synthetic {

namespace {

PointMatrix axis_centers(int k, int dim, double separation) {
    if (k > 2 * dim) throw ConfigError("need dim >= k/2 to place well-separated centers");
    // ±s e_i are pairwise >= s*sqrt(2) apart, and 2s for opposite pairs.
    const double s = separation / std::sqrt(2.0);
    PointMatrix centers = PointMatrix::Zero(k, dim);
    for (int c = 0; c < k; ++c) centers(c, c / 2) = (c % 2 == 0) ? s : -s;
    return centers;
}

}  // namespace

Blobs gaussian_blobs(int k, int per_blob, int dim, double sigma, double separation, std::uint64_t seed) {
    if (k < 1 || per_blob < 1 || dim < 1) throw ConfigError("blob sizes must be positive");
    Blobs out;
    out.centers = axis_centers(k, dim, separation);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    out.points.resize(static_cast<Eigen::Index>(k) * per_blob, dim);
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per_blob; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(c) * per_blob + i;
            for (int j = 0; j < dim; ++j) out.points(row, j) = out.centers(c, j) + noise(rng);
            out.labels.push_back(c);
        }
    }
    return out;
}

Corpus noisy_domain_corpus(const NoisyDomainOptions& o, std::uint64_t seed) {
    if (o.domains < 2 || o.classes < 2 || o.noisy_domain < 0 || o.noisy_domain >= o.domains) {
        throw ConfigError("invalid noisy-domain corpus options");
    }
    if (o.train_per_domain < 1 || o.eval_per_domain < 1) throw ConfigError("need examples in every domain");
    const PointMatrix centers = axis_centers(o.domains, o.dim, o.separation);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, o.classes - 1);

    // Per-domain rule: class = argmax over `classes` random directions.
    std::vector<Matrix> rules;
    for (int d = 0; d < o.domains; ++d) {
        Matrix w(o.dim, o.classes);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
        }
        rules.push_back(std::move(w));
    }

    std::vector<Example> examples;
    auto emit = [&](int domain, Split split, int index) {
        Example ex;
        ex.id = "d" + std::to_string(domain) + (split == Split::train ? "-t" : "-e") + std::to_string(index);
        ex.domain_label = "domain_" + std::to_string(domain);
        ex.split = split;
        ex.token_count = 1;
        Eigen::RowVectorXd offset(o.dim);
        for (int j = 0; j < o.dim; ++j) offset[j] = o.sigma * normal(rng);
        ex.embedding.resize(static_cast<std::size_t>(o.dim));
        for (int j = 0; j < o.dim; ++j) {
            // float-representable so the corpus survives a save/load round trip
            ex.embedding[j] = static_cast<double>(static_cast<float>(centers(domain, j) + offset[j]));
        }
        if (domain == o.noisy_domain) {
            ex.target = coin(rng);
        } else {
            Eigen::Index best = 0;
            (offset * rules[static_cast<std::size_t>(domain)]).maxCoeff(&best);
            ex.target = static_cast<int>(best);
        }
        examples.push_back(std::move(ex));
    };
    for (int d = 0; d < o.domains; ++d) {
        for (int i = 0; i < o.train_per_domain; ++i) emit(d, Split::train, i);
        if (d == o.noisy_domain) continue;
        for (int i = 0; i < o.eval_per_domain; ++i) emit(d, Split::eval, i);
    }
    return Corpus(std::move(examples), o.dim);
}

}  // namespace mixopt::synthetic
