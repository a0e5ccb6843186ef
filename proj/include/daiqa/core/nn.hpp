#pragma once

// Minimal CPU layer library with hand-written backward passes.
//
// Layers cache what their backward pass needs during forward(). backward()
// only reads that cache and accumulates into parameter gradients, so it may be
// called several times after one forward() (gradients add linearly).

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "daiqa/core/tensor.hpp"

namespace daiqa::nn {

template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  explicit Param(Tensor<T> v) : value(std::move(v)), grad(value.n(), value.c(), value.h(), value.w()) {}
};

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Param<T>*>>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual void collect(const std::string& /*prefix*/, NamedParams<T>& /*out*/) {}
};

/// 2-D convolution, zero padding.
template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, std::mt19937_64& rng, double init_gain = 1.0);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, NamedParams<T>& out) override;

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Param<T> weight_;  // [out, in*k*k]
  Param<T> bias_;    // [out]
  Tensor<T> input_;
};

/// Transposed convolution (the adjoint of Conv2d's input map).
template <typename T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad, std::mt19937_64& rng,
                  double init_gain = 1.0);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, NamedParams<T>& out) override;

  int out_size(int in) const { return (in - 1) * stride_ - 2 * pad_ + kernel_; }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Param<T> weight_;  // [in, out*k*k]
  Param<T> bias_;    // [out]
  Tensor<T> input_;
};

/// Per-sample, per-channel standardization over spatial positions, then an
/// optional per-channel affine map.
template <typename T>
class InstanceNorm2d : public Layer<T> {
 public:
  explicit InstanceNorm2d(int channels, bool affine = true, double eps = 1e-5);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, NamedParams<T>& out) override;

  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }

 private:
  int channels_;
  bool affine_;
  double eps_;
  Param<T> gamma_, beta_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

template <typename T>
class LeakyRelu : public Layer<T> {
 public:
  explicit LeakyRelu(double slope = 0.2) : slope_(static_cast<T>(slope)) {}
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  T slope_;
  Tensor<T> input_;
};

/// Fully connected layer over the flattened per-sample features; output N x out x 1 x 1.
template <typename T>
class Linear : public Layer<T> {
 public:
  Linear(int in_features, int out_features, std::mt19937_64& rng, double init_gain = 1.0);

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, NamedParams<T>& out) override;

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  int in_, out_;
  Param<T> weight_;  // [out, in]
  Param<T> bias_;
  std::array<int, 4> in_shape_{};
  Tensor<T> input_;
};

/// Spatial mean per channel; output N x C x 1 x 1.
template <typename T>
class GlobalAvgPool : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  std::array<int, 4> in_shape_{};
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  Sequential() = default;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(const std::string& prefix, NamedParams<T>& out) override;

  std::size_t size() const { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Adam with bias correction.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Param<T>*> params, double lr, double beta1, double beta2, double eps = 1e-8);

  void zero_grad();
  void step();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<std::vector<T>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

template <typename T>
std::vector<Param<T>*> param_ptrs(const NamedParams<T>& named) {
  std::vector<Param<T>*> out;
  out.reserve(named.size());
  for (const auto& [name, p] : named) out.push_back(p);
  return out;
}

template <typename T>
void zero_grads(const NamedParams<T>& named) {
  for (const auto& [name, p] : named) p->grad.fill(T(0));
}

}  // namespace daiqa::nn
