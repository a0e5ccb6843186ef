#include "daiqa/restore/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace daiqa::restore {

std::string_view to_string(GanMode mode) { return mode == GanMode::kLogistic ? "logistic" : "least_squares"; }

GanMode parse_gan_mode(std::string_view name) {
  if (name == "least_squares") return GanMode::kLeastSquares;
  if (name == "logistic") return GanMode::kLogistic;
  throw std::invalid_argument("unknown gan_mode '" + std::string(name) + "'");
}

template <typename T>
KlResult<T> loss_kl(const Tensor<T>& mu, const Tensor<T>& logvar) {
  mu.check_same(logvar, "loss_kl");
  KlResult<T> r{0.0, Tensor<T>(mu.n(), mu.c(), mu.h(), mu.w()), Tensor<T>(mu.n(), mu.c(), mu.h(), mu.w())};
  const double inv_n = 1.0 / std::max(1, mu.n());
  double total = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu[i], lv = logvar[i];
    if (!std::isfinite(m) || !std::isfinite(lv)) throw std::domain_error("loss_kl: non-finite posterior parameter");
    const double e = std::exp(lv);
    total += 0.5 * (m * m + e - lv - 1.0);
    r.grad_mu[i] = static_cast<T>(m * inv_n);
    r.grad_logvar[i] = static_cast<T>(0.5 * (e - 1.0) * inv_n);
  }
  r.value = total * inv_n;
  return r;
}

namespace {

// Numerically stable log-softmax of one row.
void log_softmax_row(const double* in, int k, std::vector<double>& out) {
  const double mx = *std::max_element(in, in + k);
  double s = 0;
  for (int j = 0; j < k; ++j) s += std::exp(in[j] - mx);
  const double lse = mx + std::log(s);
  out.resize(k);
  for (int j = 0; j < k; ++j) out[j] = in[j] - lse;
}

double log_sigmoid(double a) { return a >= 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a)); }
double sigmoid(double a) { return a >= 0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a)); }

}  // namespace

template <typename T>
LogitLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  const int n = logits.n();
  const int k = static_cast<int>(logits.sample_size());
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  LogitLoss<T> r{0.0, Tensor<T>(logits.n(), logits.c(), logits.h(), logits.w())};
  std::vector<double> row(k), lsm;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw std::out_of_range("domain label " + std::to_string(labels[i]) + " outside [0," + std::to_string(k) + ")");
    auto s = logits.sample(i);
    for (int j = 0; j < k; ++j) row[j] = s[j];
    log_softmax_row(row.data(), k, lsm);
    r.value -= lsm[labels[i]];
    auto g = r.grad.sample(i);
    for (int j = 0; j < k; ++j) g[j] = static_cast<T>((std::exp(lsm[j]) - (j == labels[i] ? 1.0 : 0.0)) / n);
  }
  r.value /= n;
  return r;
}

template <typename T>
LogitLoss<T> domain_confusion(const Tensor<T>& logits) {
  const int n = logits.n();
  const int k = static_cast<int>(logits.sample_size());
  LogitLoss<T> r{0.0, Tensor<T>(logits.n(), logits.c(), logits.h(), logits.w())};
  std::vector<double> row(k), lsm;
  for (int i = 0; i < n; ++i) {
    auto s = logits.sample(i);
    for (int j = 0; j < k; ++j) row[j] = s[j];
    log_softmax_row(row.data(), k, lsm);
    double v = 0;
    for (int j = 0; j < k; ++j) v -= lsm[j];
    r.value += v / k;
    auto g = r.grad.sample(i);
    for (int j = 0; j < k; ++j) g[j] = static_cast<T>((std::exp(lsm[j]) - 1.0 / k) / n);
  }
  r.value /= n;
  return r;
}

template <typename T>
LogitLoss<T> loss_domain_cls(const Tensor<T>& logits, std::span<const int> labels, Side side, LatentPart part) {
  if (side == Side::kEncoder && part == LatentPart::kContent) {
    for (int l : labels)
      if (l < 0 || l >= static_cast<int>(logits.sample_size())) throw std::out_of_range("domain label out of range");
    return domain_confusion(logits);
  }
  return softmax_cross_entropy(logits, labels);
}

template <typename T>
AdversarialLoss<T> loss_adversarial_d(const Tensor<T>& d_real, const Tensor<T>& d_fake, GanMode mode) {
  AdversarialLoss<T> r{0.0, Tensor<T>(d_real.n(), d_real.c(), d_real.h(), d_real.w()),
                       Tensor<T>(d_fake.n(), d_fake.c(), d_fake.h(), d_fake.w())};
  const double nr = static_cast<double>(d_real.size()), nf = static_cast<double>(d_fake.size());
  double real_term = 0, fake_term = 0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    const double a = d_real[i];
    if (mode == GanMode::kLeastSquares) {
      real_term += (a - 1.0) * (a - 1.0);
      r.grad_real[i] = static_cast<T>(2.0 * (a - 1.0) / nr);
    } else {
      real_term += log_sigmoid(-a);
      r.grad_real[i] = static_cast<T>(-sigmoid(a) / nr);
    }
  }
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double a = d_fake[i];
    if (mode == GanMode::kLeastSquares) {
      fake_term += a * a;
      r.grad_fake[i] = static_cast<T>(2.0 * a / nf);
    } else {
      fake_term += log_sigmoid(a);
      r.grad_fake[i] = static_cast<T>(sigmoid(-a) / nf);
    }
  }
  r.value = real_term / nr + fake_term / nf;
  return r;
}

template <typename T>
AdversarialLoss<T> loss_adversarial_g(const Tensor<T>& d_fake, GanMode mode) {
  AdversarialLoss<T> r{0.0, Tensor<T>(), Tensor<T>(d_fake.n(), d_fake.c(), d_fake.h(), d_fake.w())};
  const double nf = static_cast<double>(d_fake.size());
  double total = 0;
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double a = d_fake[i];
    if (mode == GanMode::kLeastSquares) {
      total += (a - 1.0) * (a - 1.0);
      r.grad_fake[i] = static_cast<T>(2.0 * (a - 1.0) / nf);
    } else {
      total -= log_sigmoid(a);
      r.grad_fake[i] = static_cast<T>(-sigmoid(-a) / nf);
    }
  }
  r.value = total / nf;
  return r;
}

// ------------------------------------------------------- FeatureExtractor

template <typename T>
class Tanh : public nn::Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    out_ = x;
    for (auto& v : out_.vec()) v = std::tanh(v);
    return out_;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> d = g;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= T(1) - out_[i] * out_[i];
    return d;
  }

 private:
  Tensor<T> out_;
};

template <typename T>
FeatureExtractor<T>::FeatureExtractor(std::vector<int> channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int in = 3;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    auto stage = std::make_unique<nn::Sequential<T>>();
    // Gain 2 keeps tanh activations away from the purely linear regime.
    stage->template add<nn::Conv2d<T>>(in, channels[i], 3, i == 0 ? 1 : 2, 1, rng, 2.0);
    stage->template add<Tanh<T>>();
    stages_.push_back(std::move(stage));
    in = channels[i];
  }
}

template <typename T>
std::vector<Tensor<T>> FeatureExtractor<T>::forward(const Tensor<T>& x, int max_tap) {
  if (max_tap < 0 || max_tap >= n_taps()) throw std::invalid_argument("FeatureExtractor: tap out of range");
  std::vector<Tensor<T>> taps{x};
  for (int i = 0; i < max_tap; ++i) taps.push_back(stages_[i]->forward(taps.back()));
  last_max_tap_ = max_tap;
  return taps;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::backward(const std::vector<Tensor<T>>& tap_grads) {
  Tensor<T> g;
  for (int i = last_max_tap_; i >= 1; --i) {
    if (!tap_grads[i].empty()) {
      if (g.empty()) g = tap_grads[i];
      else g += tap_grads[i];
    }
    if (!g.empty()) g = stages_[i - 1]->backward(g);
  }
  if (!tap_grads[0].empty()) {
    if (g.empty()) g = tap_grads[0];
    else g += tap_grads[0];
  }
  return g;
}

template <typename T>
PerceptualLoss<T> loss_perceptual(const Tensor<T>& restored, const Tensor<T>& gt, FeatureExtractor<T>& extractor,
                                  std::span<const int> layers) {
  if (layers.empty()) throw std::invalid_argument("loss_perceptual: empty layer set");
  restored.check_same(gt, "loss_perceptual");
  const int max_tap = *std::max_element(layers.begin(), layers.end());
  const auto gt_taps = extractor.forward(gt, max_tap);
  const auto taps = extractor.forward(restored, max_tap);
  std::vector<Tensor<T>> grads(taps.size());
  PerceptualLoss<T> r;
  const double n_layers = static_cast<double>(layers.size());
  for (int l : layers) {
    const auto& a = taps[l];
    const auto& b = gt_taps[l];
    const double count = static_cast<double>(a.size());
    double s = 0;
    if (grads[l].empty()) grads[l] = Tensor<T>(a.n(), a.c(), a.h(), a.w());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      s += std::abs(d);
      grads[l][i] += static_cast<T>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / (count * n_layers));
    }
    r.value += s / count / n_layers;
  }
  r.grad = extractor.backward(grads);
  if (r.grad.empty()) r.grad = Tensor<T>(restored.n(), restored.c(), restored.h(), restored.w());
  return r;
}

TotalLosses total_losses(const ComponentLosses& p, double lambda1, double lambda2) {
  TotalLosses t;
  t.parts = p;
  t.encoder = lambda1 * p.kl + lambda2 * p.perceptual + p.cls_encoder;
  t.generator = lambda1 * p.kl + lambda2 * p.perceptual + p.adv_generator;
  t.discriminator = p.adv_discriminator;
  t.domain = p.cls_discriminator;
  return t;
}

#define DAIQA_INSTANTIATE(T)                                                                                     \
  template KlResult<T> loss_kl(const Tensor<T>&, const Tensor<T>&);                                             \
  template LogitLoss<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);                          \
  template LogitLoss<T> domain_confusion(const Tensor<T>&);                                                     \
  template LogitLoss<T> loss_domain_cls(const Tensor<T>&, std::span<const int>, Side, LatentPart);              \
  template AdversarialLoss<T> loss_adversarial_d(const Tensor<T>&, const Tensor<T>&, GanMode);                  \
  template AdversarialLoss<T> loss_adversarial_g(const Tensor<T>&, GanMode);                                    \
  template class FeatureExtractor<T>;                                                                           \
  template PerceptualLoss<T> loss_perceptual(const Tensor<T>&, const Tensor<T>&, FeatureExtractor<T>&,         \
                                             std::span<const int>);

DAIQA_INSTANTIATE(float)
DAIQA_INSTANTIATE(double)

#undef DAIQA_INSTANTIATE

}  // namespace daiqa::restore
