#pragma once

// Training losses of the restoration network. Every loss returns its value
// together with the analytic gradient with respect to its inputs; values are
// accumulated in double regardless of the element type.

#include <span>
#include <string_view>
#include <vector>

#include "daiqa/core/nn.hpp"
#include "daiqa/core/tensor.hpp"

namespace daiqa::restore {

enum class GanMode { kLeastSquares, kLogistic };
enum class Side { kEncoder, kDiscriminator };
/// Which latent part the domain logits were computed from.
enum class LatentPart { kDegradation, kContent };

std::string_view to_string(GanMode mode);
GanMode parse_gan_mode(std::string_view name);

template <typename T>
struct KlResult {
  double value = 0.0;
  Tensor<T> grad_mu;
  Tensor<T> grad_logvar;
};

/// KL(N(mu, exp(logvar)) || N(0, I)) = 1/2 sum(mu^2 + e^logvar - logvar - 1),
/// summed over latent dimensions and averaged over the batch.
template <typename T>
KlResult<T> loss_kl(const Tensor<T>& mu, const Tensor<T>& logvar);

template <typename T>
struct LogitLoss {
  double value = 0.0;
  Tensor<T> grad;  // d value / d logits
};

/// Mean softmax cross-entropy. Throws std::out_of_range for bad labels.
template <typename T>
LogitLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// Mean cross-entropy against the uniform distribution; minimal (= ln n)
/// exactly when the classifier is maximally confused.
template <typename T>
LogitLoss<T> domain_confusion(const Tensor<T>& logits);

/// Domain classification loss. The discriminator classifies both latent
/// parts. The encoder cooperates on the degradation part (cross-entropy) and
/// confuses the classifier on the content part (uniform-target cross-entropy).
template <typename T>
LogitLoss<T> loss_domain_cls(const Tensor<T>& logits, std::span<const int> labels, Side side, LatentPart part);

template <typename T>
struct AdversarialLoss {
  double value = 0.0;
  Tensor<T> grad_real;  // empty for the generator side
  Tensor<T> grad_fake;
};

/// Least squares: L_D = E[(D(real)-1)^2] + E[D(fake)^2], L_G = E[(D(fake)-1)^2].
/// Logistic (discriminator outputs are logits a, D = sigmoid(a)):
/// L_D = E[log D(fake)] + E[log(1 - D(real))], L_G = -E[log D(fake)].
template <typename T>
AdversarialLoss<T> loss_adversarial_d(const Tensor<T>& d_real, const Tensor<T>& d_fake, GanMode mode);
template <typename T>
AdversarialLoss<T> loss_adversarial_g(const Tensor<T>& d_fake, GanMode mode);

/// Frozen feature network for the perceptual loss. Tap 0 is the input image
/// itself; tap i > 0 is the output of stage i (3x3 conv + tanh).
template <typename T>
class FeatureExtractor {
 public:
  /// `channels` lists the width of each stage; stages after the first use stride 2.
  FeatureExtractor(std::vector<int> channels, std::uint64_t seed);

  int n_taps() const { return static_cast<int>(stages_.size()) + 1; }
  /// Runs the stages needed for taps up to `max_tap` and caches activations.
  std::vector<Tensor<T>> forward(const Tensor<T>& x, int max_tap);
  /// Backpropagates per-tap gradients (empty tensors are skipped) to the input.
  Tensor<T> backward(const std::vector<Tensor<T>>& tap_grads);

 private:
  std::vector<std::unique_ptr<nn::Sequential<T>>> stages_;
  int last_max_tap_ = 0;
};

template <typename T>
struct PerceptualLoss {
  double value = 0.0;
  Tensor<T> grad;  // d value / d restored
};

/// Mean over selected taps of the mean absolute feature difference.
/// Throws std::invalid_argument for an empty layer set or mismatched shapes.
template <typename T>
PerceptualLoss<T> loss_perceptual(const Tensor<T>& restored, const Tensor<T>& gt, FeatureExtractor<T>& extractor,
                                  std::span<const int> layers);

struct ComponentLosses {
  double kl = 0.0;
  double perceptual = 0.0;
  double cls_encoder = 0.0;
  double cls_discriminator = 0.0;
  double adv_generator = 0.0;
  double adv_discriminator = 0.0;
};

struct TotalLosses {
  double encoder = 0.0;        // lambda1 L_kl + lambda2 L_P + L_E^cls
  double generator = 0.0;      // lambda1 L_kl + lambda2 L_P + L_G^adv
  double discriminator = 0.0;  // L_D^adv
  double domain = 0.0;         // L_Dc^cls
  ComponentLosses parts;
};

TotalLosses total_losses(const ComponentLosses& parts, double lambda1, double lambda2);

}  // namespace daiqa::restore
