#ifndef MIXOPT_MODEL_HPP
#define MIXOPT_MODEL_HPP

#include <cstdint>
#include <vector>

#include "mixopt/types.hpp"

namespace mixopt {

enum class LossKind { cross_entropy, squared_error };

/// Linear map s = a W + b, with a the input row.
struct Layer {
    Matrix weight;  // fan_in x fan_out
    Vector bias;    // fan_out
};

/// Multi-layer perceptron: tanh after every layer except the last, whose
/// pre-activations are the model outputs.
class ToyModel {
public:
    ToyModel(std::vector<Layer> layers, LossKind loss);

    /// Gaussian weights with std 1/sqrt(fan_in), zero biases.
    /// `widths` lists the input dimension, hidden widths and output dimension.
    static ToyModel initialize(const std::vector<int>& widths, LossKind loss, std::uint64_t seed);

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const Layer& final_layer() const noexcept { return layers_.back(); }
    LossKind loss() const noexcept { return loss_; }

    Eigen::Index input_dim() const noexcept { return layers_.front().weight.rows(); }
    Eigen::Index output_dim() const noexcept { return layers_.back().weight.cols(); }
    Eigen::Index parameter_count() const noexcept;

    /// Flattened parameter view θ: per layer, weight (column-major) then bias.
    Vector parameters() const;
    void set_parameters(const Eigen::Ref<const Vector>& theta);

    bool all_finite() const;

private:
    std::vector<Layer> layers_;
    LossKind loss_;
};

struct ForwardCache {
    /// inputs[l] is the B x fan_in input of layer l; inputs.back() is the
    /// activation `a` feeding the final layer.
    std::vector<Matrix> inputs;
    /// pre[l] is the B x fan_out pre-activation of layer l.
    std::vector<Matrix> pre;

    const Matrix& outputs() const { return pre.back(); }
    const Matrix& final_inputs() const { return inputs.back(); }
};

/// Rows of `inputs` are examples.
ForwardCache forward(const ToyModel& model, const Matrix& inputs);

/// Supervision for a batch: class indices for cross-entropy, a B x out
/// matrix for squared error.
struct Targets {
    std::vector<int> classes;
    Matrix values;
};

struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    /// Same layout as ToyModel::parameters().
    Vector flatten() const;
};

struct BackwardResult {
    /// Summed over the batch.
    double loss = 0.0;
    std::vector<double> example_loss;
    /// Gradient of the summed loss.
    Gradients gradients;
    /// B x fan_out rows d loss / d s^(i) for the final layer.
    Matrix output_grad;
    ForwardCache cache;
};

/// Per-example losses: softmax cross-entropy, or 0.5 * ||s - y||^2.
std::vector<double> example_losses(const ToyModel& model, const Matrix& outputs, const Targets& targets);

/// Exact gradient of the summed batch loss via backpropagation.
/// Throws NumericalError if the loss is not finite.
BackwardResult loss_and_backward(const ToyModel& model, const Matrix& inputs, const Targets& targets);

/// Per-example final-layer weight gradients a^(i)^T (d l / d s^(i)), each
/// fan_in x fan_out; their sum is the batch final-layer weight gradient.
std::vector<Matrix> per_example_final_layer_grads(const Matrix& activations, const Matrix& output_grad);

/// θ <- θ - eta * gradient. Throws NumericalError if any parameter
/// becomes non-finite (the model is left unchanged in that case).
void sgd_step(ToyModel& model, const Gradients& gradient, double eta);

}  // namespace mixopt

#endif  // MIXOPT_MODEL_HPP
