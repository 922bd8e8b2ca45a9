#ifndef MIXOPT_TYPES_HPP
#define MIXOPT_TYPES_HPP

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace mixopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Points stored one per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Derives an independent seed for a named random sub-stream.
///
/// All randomness in an experiment flows from one top-level seed; each
/// consumer (clustering, init, sampling, ...) asks for its own stream so
/// that adding draws in one place never shifts another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace mixopt

#endif  // MIXOPT_TYPES_HPP
