#include "mixopt/balance.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mixopt/error.hpp"

namespace mixopt {

GradientAccumulator::GradientAccumulator(int m, Eigen::Index dim)
    : sums_(Matrix::Zero(m, dim)), counts_(static_cast<std::size_t>(m), 0) {
    if (m < 1) throw ConfigError("gradient accumulator needs m >= 1");
}

void GradientAccumulator::add(int domain, const Eigen::Ref<const Vector>& gradient) {
    add_sum(domain, gradient, 1);
}

void GradientAccumulator::add_sum(int domain, const Eigen::Ref<const Vector>& gradient_sum,
                                  std::int64_t count) {
    if (domain < 0 || domain >= m()) throw DataError("gradient for unknown domain " + std::to_string(domain));
    if (gradient_sum.size() != dim()) throw DataError("gradient has the wrong dimension");
    if (count < 0) throw DataError("negative sample count");
    if (!gradient_sum.allFinite()) throw NumericalError("non-finite gradient accumulated");
    sums_.row(domain) += gradient_sum.transpose();
    counts_[static_cast<std::size_t>(domain)] += count;
}

void GradientAccumulator::reset() {
    sums_.setZero();
    std::fill(counts_.begin(), counts_.end(), 0);
}

Matrix gram(const GradientAccumulator& acc) {
    const int m = acc.m();
    Matrix g = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const auto ci = acc.counts()[static_cast<std::size_t>(i)];
        if (ci == 0) continue;
        for (int j = i; j < m; ++j) {
            const auto cj = acc.counts()[static_cast<std::size_t>(j)];
            if (cj == 0) continue;
            const double value = acc.sums().row(i).dot(acc.sums().row(j)) /
                                 (static_cast<double>(ci) * static_cast<double>(cj));
            g(i, j) = value;
            g(j, i) = value;
        }
    }
    if (!g.allFinite()) throw NumericalError("Gram matrix has non-finite entries");
    return g;
}

std::vector<double> softmax(const Vector& logits) {
    const double top = logits.maxCoeff();
    std::vector<double> out(static_cast<std::size_t>(logits.size()));
    double z = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

namespace {

Vector as_vector(const MixtureWeights& p) {
    return Eigen::Map<const Vector>(p.values().data(), static_cast<Eigen::Index>(p.size()));
}

void check_shapes(const Matrix& g, const MixtureWeights& p) {
    if (g.rows() != g.cols() || g.rows() != static_cast<Eigen::Index>(p.size())) {
        throw DataError("Gram matrix and weights have mismatched sizes");
    }
    if (!g.allFinite()) throw NumericalError("Gram matrix has non-finite entries");
}

}  // namespace

std::optional<MixtureWeights> randb_update(const Matrix& g, const MixtureWeights& p_eval, double lambda,
                                           double eta_multiplier) {
    check_shapes(g, p_eval);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
    if (!(eta_multiplier > 0.0) || !std::isfinite(eta_multiplier)) {
        throw ConfigError("eta multiplier must be a positive finite number");
    }
    const Vector v = g * as_vector(p_eval);
    const double norm = v.stableNorm();
    if (norm == 0.0) return std::nullopt;
    return MixtureWeights(softmax((lambda * eta_multiplier / norm) * v));
}

MixtureWeights multiplicative_weights_update(const MixtureWeights& state, const Matrix& g,
                                             const MixtureWeights& p_eval, double eta, double mu) {
    check_shapes(g, p_eval);
    if (state.size() != p_eval.size()) throw DataError("state and evaluation weights differ in size");
    if (!(mu > 0.0) || !(eta >= 0.0)) throw ConfigError("multiplicative weights need eta >= 0 and mu > 0");
    const Vector score = g * as_vector(p_eval);
    Vector logits(score.size());
    for (Eigen::Index i = 0; i < score.size(); ++i) {
        logits[i] = state[static_cast<std::size_t>(i)] > 0.0
                        ? std::log(state[static_cast<std::size_t>(i)]) + eta * score[i] / mu
                        : -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(logits.maxCoeff())) throw NumericalError("multiplicative weights overflowed");
    return MixtureWeights(softmax(logits));
}

MixtureWeights stratified_weights(int m) { return MixtureWeights::uniform(static_cast<std::size_t>(m)); }

void write_dense_matrix(const Matrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << std::setprecision(17);
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            if (c) out << ' ';
            out << matrix(r, c);
        }
        out << '\n';
    }
}

Matrix read_dense_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!ss.eof()) throw DataError("non-numeric entry in " + path.string());
        if (!rows.empty() && row.size() != rows.front().size()) throw DataError("ragged matrix in " + path.string());
        rows.push_back(std::move(row));
    }
    Matrix out(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return out;
}

}  // namespace mixopt
