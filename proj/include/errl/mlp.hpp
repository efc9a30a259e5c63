#ifndef ERRL_MLP_HPP
#define ERRL_MLP_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace errl {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Fully connected network: ReLU on hidden layers, identity on the output layer.
///
/// All weights live in one flat parameter vector. Layer l occupies a column-major
/// (out x in) weight block followed by its bias. Inputs and outputs are batched as
/// columns, so a whole trajectory goes through in one matrix product per layer.
template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialized network. Needs at least an input and an output size.
  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least two layer sizes");
    Eigen::Index count = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] < 1 || sizes_[l + 1] < 1) {
        throw std::invalid_argument("Mlp: layer sizes must be positive");
      }
      count += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = Vec<Scalar>::Zero(count);
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index parameter_count() const { return params_.size(); }

  Vec<Scalar>& parameters() { return params_; }
  const Vec<Scalar>& parameters() const { return params_; }

  Eigen::Map<const Mat<Scalar>> weight(std::size_t l) const {
    return {params_.data() + offset(l), sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<Mat<Scalar>> weight(std::size_t l) {
    return {params_.data() + offset(l), sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const Vec<Scalar>> bias(std::size_t l) const {
    return {params_.data() + offset(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  Eigen::Map<Vec<Scalar>> bias(std::size_t l) {
    return {params_.data() + offset(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_);
    out.parameters() = params_.template cast<Other>();
    return out;
  }

  bool all_finite() const { return params_.allFinite(); }

 private:
  Eigen::Index offset(std::size_t l) const {
    Eigen::Index o = 0;
    for (std::size_t i = 0; i < l; ++i) o += static_cast<Eigen::Index>(sizes_[i + 1]) * (sizes_[i] + 1);
    return o;
  }

  std::vector<int> sizes_;
  Vec<Scalar> params_;
};

/// Orthogonal init: hidden layers gain sqrt(2), output layer `output_gain`, zero biases.
template <typename Scalar>
Mlp<Scalar> make_mlp(std::vector<int> layer_sizes, std::uint64_t seed, double output_gain = 0.01) {
  Mlp<Scalar> net(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto& sizes = net.layer_sizes();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    const int n = std::max(rows, cols);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const double gain = (l + 1 == net.layer_count()) ? output_gain : std::sqrt(2.0);
    net.weight(l) = (gain * q.topLeftCorner(rows, cols)).template cast<Scalar>();
    net.bias(l).setZero();
  }
  return net;
}

/// Post-activation values of every layer, kept for the backward pass.
template <typename Scalar>
struct Tape {
  std::vector<Mat<Scalar>> activations;  // activations[0] is the input batch
};

template <typename Scalar, typename Derived>
Mat<Scalar> forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& inputs,
                    Tape<Scalar>* tape = nullptr) {
  if (inputs.rows() != net.input_size()) {
    throw std::domain_error("forward: input dimension " + std::to_string(inputs.rows()) +
                            " does not match " + std::to_string(net.input_size()));
  }
  Mat<Scalar> a = inputs.template cast<Scalar>();
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(a);
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Mat<Scalar> z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    if (l + 1 < net.layer_count()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
    if (tape) tape->activations.push_back(a);
  }
  return a;
}

/// Gradient of sum_j <upstream.col(j), output.col(j)> with respect to the parameters.
template <typename Scalar, typename Derived>
Vec<Scalar> backward(const Mlp<Scalar>& net, const Tape<Scalar>& tape,
                     const Eigen::MatrixBase<Derived>& upstream) {
  const std::size_t layers = net.layer_count();
  if (tape.activations.size() != layers + 1) throw std::domain_error("backward: stale tape");
  const Eigen::Index batch = tape.activations.front().cols();
  if (upstream.rows() != net.output_size() || upstream.cols() != batch) {
    throw std::domain_error("backward: upstream gradient shape mismatch");
  }
  Mlp<Scalar> grad(net.layer_sizes());
  Mat<Scalar> g = upstream.template cast<Scalar>();
  for (std::size_t l = layers; l-- > 0;) {
    const Mat<Scalar>& input = tape.activations[l];
    grad.weight(l).noalias() = g * input.transpose();
    grad.bias(l) = g.rowwise().sum();
    if (l > 0) {
      Mat<Scalar> back = net.weight(l).transpose() * g;
      g = (input.array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  return std::move(grad.parameters());
}

/// Row-wise softmax over columns of logits (actions x batch).
template <typename Derived>
Mat<typename Derived::Scalar> softmax_columns(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Mat<S> out = logits;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j).array() -= out.col(j).maxCoeff();
    out.col(j) = out.col(j).array().exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

}  // namespace errl

#endif  // ERRL_MLP_HPP
