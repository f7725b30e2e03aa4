#pragma once

// Small fully connected networks with a hand-written reverse pass. Batches
// are column-major: one sample per column.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace salamander {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kIdentity, kTanh, kRelu };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Post-activation values of every layer, input first.
struct ForwardTape {
  std::vector<Matrix> activations;
  bool empty() const { return activations.empty(); }
};

struct NetGradients {
  std::vector<DenseLayer> layers;
};

class DenseNet {
 public:
  DenseNet() = default;

  // sizes = {in, hidden..., out}. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  DenseNet(const std::vector<int>& sizes, std::mt19937_64& rng, Activation hidden = Activation::kTanh,
           Activation output = Activation::kIdentity, double output_scale = 1.0)
      : hidden_(hidden), output_(output) {
    if (sizes.size() < 2) throw std::invalid_argument("network needs at least an input and an output size");
    for (int s : sizes) {
      if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l])) * (l + 2 == sizes.size() ? output_scale : 1.0);
      std::uniform_real_distribution<double> u(-bound, bound);
      DenseLayer layer{Matrix(sizes[l + 1], sizes[l]), Vector(sizes[l + 1])};
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = u(rng);
      layers_.push_back(std::move(layer));
    }
  }

  int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers_.back().weight.rows()); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Matrix forward(const Matrix& input) const {
    check_input(input);
    Matrix a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      apply(activation_of(l), z);
      a = std::move(z);
    }
    return a;
  }

  Vector forward(const Vector& input) const { return forward(Matrix(input)).col(0); }

  Matrix forward(const Matrix& input, ForwardTape& tape) const {
    check_input(input);
    tape.activations.clear();
    tape.activations.push_back(input);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * tape.activations.back();
      z.colwise() += layers_[l].bias;
      apply(activation_of(l), z);
      tape.activations.push_back(std::move(z));
    }
    return tape.activations.back();
  }

  // Reverse pass for loss gradient output_grad = dL/d(output). Optionally
  // returns dL/d(input).
  NetGradients backward(const ForwardTape& tape, const Matrix& output_grad, Matrix* input_grad = nullptr) const {
    if (tape.activations.size() != layers_.size() + 1) {
      throw std::logic_error("backward() needs a recorded forward pass of this network");
    }
    if (output_grad.rows() != output_size() || output_grad.cols() != tape.activations.back().cols()) {
      throw std::invalid_argument("output gradient shape does not match the recorded batch");
    }
    NetGradients g;
    g.layers.resize(layers_.size());
    Matrix delta = output_grad;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      scale_by_derivative(activation_of(l), tape.activations[l + 1], delta);
      g.layers[l].weight = delta * tape.activations[l].transpose();
      g.layers[l].bias = delta.rowwise().sum();
      if (l > 0 || input_grad != nullptr) {
        Matrix prev = layers_[l].weight.transpose() * delta;
        if (l == 0) {
          *input_grad = std::move(prev);
        } else {
          delta = std::move(prev);
        }
      }
    }
    return g;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  std::vector<double> flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
      out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
  }

  void set_flat_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = flat[k++];
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[k++];
    }
  }

  // target <- tau * source + (1 - tau) * target
  void polyak_from(const DenseNet& source, double tau) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight = tau * source.layers_[l].weight + (1.0 - tau) * layers_[l].weight;
      layers_[l].bias = tau * source.layers_[l].bias + (1.0 - tau) * layers_[l].bias;
    }
  }

  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

 private:
  Activation activation_of(std::size_t layer) const { return layer + 1 == layers_.size() ? output_ : hidden_; }

  void check_input(const Matrix& input) const {
    if (layers_.empty()) throw std::logic_error("network has no layers");
    if (input.rows() != input_size()) {
      throw std::invalid_argument("network input has " + std::to_string(input.rows()) + " rows, expected " +
                                  std::to_string(input_size()));
    }
  }

  static void apply(Activation act, Matrix& z) {
    switch (act) {
      case Activation::kIdentity: break;
      // exp form vectorises; agrees with std::tanh to a few ulp
      case Activation::kTanh: z = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0); break;
      case Activation::kRelu: z = z.cwiseMax(0.0); break;
    }
  }

  static void scale_by_derivative(Activation act, const Matrix& out, Matrix& delta) {
    switch (act) {
      case Activation::kIdentity: break;
      case Activation::kTanh: delta.array() *= 1.0 - out.array().square(); break;
      case Activation::kRelu: delta.array() *= (out.array() > 0.0).cast<double>(); break;
    }
  }

  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::kTanh;
  Activation output_ = Activation::kIdentity;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const DenseNet& net, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& l : net.layers()) {
      m_.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
      v_.push_back(m_.back());
    }
  }

  void step(DenseNet& net, const NetGradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, g.layers[l].weight, m_[l].weight, v_[l].weight, c1, c2);
      update(layers[l].bias, g.layers[l].bias, m_[l].bias, v_[l].bias, c1, c2);
    }
  }

  long steps() const { return t_; }

 private:
  template <typename P, typename G>
  void update(P& param, const G& grad, P& m, P& v, double c1, double c2) const {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  double lr_ = 3e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
};

// Adam on a single scalar (the log entropy temperature).
class ScalarAdam {
 public:
  explicit ScalarAdam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(double& param, double grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad * grad;
    const double mh = m_ / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const double vh = v_ / (1.0 - std::pow(beta2_, static_cast<double>(t_)));
    param -= lr_ * mh / (std::sqrt(vh) + eps_);
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  double m_ = 0.0;
  double v_ = 0.0;
  long t_ = 0;
};

}  // namespace salamander
