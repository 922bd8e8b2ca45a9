#include "mixopt/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mixopt/error.hpp"

namespace mixopt {

ToyModel::ToyModel(std::vector<Layer> layers, LossKind loss) : layers_(std::move(layers)), loss_(loss) {
    if (layers_.empty()) throw ConfigError("model needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.weight.rows() == 0 || layer.weight.cols() == 0) throw ConfigError("empty layer");
        if (layer.bias.size() != layer.weight.cols()) {
            throw ConfigError("layer " + std::to_string(l) + " bias does not match its weight");
        }
        if (l > 0 && layers_[l - 1].weight.cols() != layer.weight.rows()) {
            throw ConfigError("layer " + std::to_string(l) + " does not compose with its predecessor");
        }
    }
    if (!all_finite()) throw NumericalError("model parameters must be finite");
}

ToyModel ToyModel::initialize(const std::vector<int>& widths, LossKind loss, std::uint64_t seed) {
    if (widths.size() < 2) throw ConfigError("model widths need input and output dimensions");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        if (widths[l] <= 0 || widths[l + 1] <= 0) throw ConfigError("layer widths must be positive");
        const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        Layer layer{Matrix(widths[l], widths[l + 1]), Vector::Zero(widths[l + 1])};
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = scale * normal(rng);
        }
        layers.push_back(std::move(layer));
    }
    return ToyModel(std::move(layers), loss);
}

Eigen::Index ToyModel::parameter_count() const noexcept {
    Eigen::Index n = 0;
    for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

Vector ToyModel::parameters() const {
    Vector theta(parameter_count());
    Eigen::Index at = 0;
    for (const Layer& l : layers_) {
        theta.segment(at, l.weight.size()) = l.weight.reshaped();
        at += l.weight.size();
        theta.segment(at, l.bias.size()) = l.bias;
        at += l.bias.size();
    }
    return theta;
}

void ToyModel::set_parameters(const Eigen::Ref<const Vector>& theta) {
    if (theta.size() != parameter_count()) throw DataError("parameter vector has the wrong length");
    Eigen::Index at = 0;
    for (Layer& l : layers_) {
        l.weight.reshaped() = theta.segment(at, l.weight.size());
        at += l.weight.size();
        l.bias = theta.segment(at, l.bias.size());
        at += l.bias.size();
    }
}

bool ToyModel::all_finite() const {
    for (const Layer& l : layers_) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

ForwardCache forward(const ToyModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_dim()) {
        throw DataError("input dimension " + std::to_string(inputs.cols()) + " does not match model input " +
                        std::to_string(model.input_dim()));
    }
    ForwardCache cache;
    const auto& layers = model.layers();
    Matrix a = inputs;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z = a * layers[l].weight;
        z.rowwise() += layers[l].bias.transpose();
        cache.inputs.push_back(std::move(a));
        if (l + 1 < layers.size()) a = z.array().tanh().matrix();
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

namespace {

void check_targets(const ToyModel& model, const Matrix& outputs, const Targets& targets) {
    const auto batch = static_cast<std::size_t>(outputs.rows());
    if (model.loss() == LossKind::cross_entropy) {
        if (targets.classes.size() != batch) throw DataError("batch and class targets are misaligned");
        for (int c : targets.classes) {
            if (c < 0 || c >= outputs.cols()) throw DataError("class target " + std::to_string(c) + " out of range");
        }
    } else if (targets.values.rows() != outputs.rows() || targets.values.cols() != outputs.cols()) {
        throw DataError("batch and regression targets are misaligned");
    }
}

}  // namespace

std::vector<double> example_losses(const ToyModel& model, const Matrix& outputs, const Targets& targets) {
    check_targets(model, outputs, targets);
    std::vector<double> out(static_cast<std::size_t>(outputs.rows()));
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
        if (model.loss() == LossKind::cross_entropy) {
            const double top = outputs.row(i).maxCoeff();
            const double lse = top + std::log((outputs.row(i).array() - top).exp().sum());
            out[i] = lse - outputs(i, targets.classes[i]);
        } else {
            out[i] = 0.5 * (outputs.row(i) - targets.values.row(i)).squaredNorm();
        }
    }
    return out;
}

BackwardResult loss_and_backward(const ToyModel& model, const Matrix& inputs, const Targets& targets) {
    BackwardResult result;
    result.cache = forward(model, inputs);
    const Matrix& s = result.cache.outputs();
    result.example_loss = example_losses(model, s, targets);
    for (double l : result.example_loss) result.loss += l;
    if (!std::isfinite(result.loss)) throw NumericalError("loss is not finite");

    Matrix ds(s.rows(), s.cols());
    if (model.loss() == LossKind::cross_entropy) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const Eigen::RowVectorXd e = (s.row(i).array() - s.row(i).maxCoeff()).exp().matrix();
            ds.row(i) = e / e.sum();
            ds(i, targets.classes[i]) -= 1.0;
        }
    } else {
        ds = s - targets.values;
    }
    result.output_grad = ds;

    const auto& layers = model.layers();
    const std::size_t n_layers = layers.size();
    result.gradients.weight.resize(n_layers);
    result.gradients.bias.resize(n_layers);
    Matrix delta = std::move(ds);
    for (std::size_t l = n_layers; l-- > 0;) {
        result.gradients.weight[l] = result.cache.inputs[l].transpose() * delta;
        result.gradients.bias[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        // inputs[l] = tanh(pre[l-1]), so d tanh = 1 - inputs[l]^2.
        const Matrix& act = result.cache.inputs[l];
        delta = ((delta * layers[l].weight.transpose()).array() * (1.0 - act.array().square())).matrix();
    }
    return result;
}

Vector Gradients::flatten() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weight.size(); ++l) n += weight[l].size() + bias[l].size();
    Vector out(n);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weight.size(); ++l) {
        out.segment(at, weight[l].size()) = weight[l].reshaped();
        at += weight[l].size();
        out.segment(at, bias[l].size()) = bias[l];
        at += bias[l].size();
    }
    return out;
}

std::vector<Matrix> per_example_final_layer_grads(const Matrix& activations, const Matrix& output_grad) {
    if (activations.rows() != output_grad.rows()) {
        throw DataError("activation and output-gradient batches differ in length");
    }
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(activations.rows()));
    for (Eigen::Index i = 0; i < activations.rows(); ++i) {
        out.push_back(activations.row(i).transpose() * output_grad.row(i));
    }
    return out;
}

void sgd_step(ToyModel& model, const Gradients& gradient, double eta) {
    auto& layers = model.layers();
    if (gradient.weight.size() != layers.size() || gradient.bias.size() != layers.size()) {
        throw DataError("gradient does not match the model's layers");
    }
    std::vector<Layer> updated = layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (gradient.weight[l].rows() != layers[l].weight.rows() ||
            gradient.weight[l].cols() != layers[l].weight.cols() ||
            gradient.bias[l].size() != layers[l].bias.size()) {
            throw DataError("gradient shape mismatch in layer " + std::to_string(l));
        }
        updated[l].weight -= eta * gradient.weight[l];
        updated[l].bias -= eta * gradient.bias[l];
        if (!updated[l].weight.allFinite() || !updated[l].bias.allFinite()) {
            throw NumericalError("non-finite parameter after SGD step in layer " + std::to_string(l));
        }
    }
    layers = std::move(updated);
}

}  // namespace mixopt
