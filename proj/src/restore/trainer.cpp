#include "daiqa/restore/trainer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "daiqa/core/errors.hpp"
#include "daiqa/forge/dataset.hpp"

namespace daiqa::restore {

RestoreTrainer::RestoreTrainer(RestoreModel& model, std::uint64_t seed)
    : model_(model),
      enc_params_(model.encoder_params()),
      dec_params_(model.decoder_params()),
      disc_params_(model.image_discriminator_params()),
      dom_params_(model.domain_discriminator_params()),
      opt_enc_(nn::param_ptrs(enc_params_), model.config().lr, model.config().beta1, model.config().beta2),
      opt_dec_(nn::param_ptrs(dec_params_), model.config().lr, model.config().beta1, model.config().beta2),
      opt_disc_(nn::param_ptrs(disc_params_), model.config().lr, model.config().beta1, model.config().beta2),
      opt_dom_(nn::param_ptrs(dom_params_), model.config().lr, model.config().beta1, model.config().beta2),
      noise_rng_(forge::mix_seed(seed, 0x6e6f697365)) {}

namespace {

// z = mu + exp(logvar / 2) * eps; returns z and keeps eps for the backward pass.
Tensorf sample_latent(const Tensorf& mu, const Tensorf& logvar, Tensorf& eps, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  eps = Tensorf(mu.n(), mu.c(), mu.h(), mu.w());
  Tensorf z = mu;
  for (std::size_t i = 0; i < z.size(); ++i) {
    eps[i] = normal(rng);
    z[i] += std::exp(0.5f * logvar[i]) * eps[i];
  }
  return z;
}

// Chain rule through the reparameterization plus the weighted KL gradient.
void posterior_grads(const Tensorf& g_z, const Tensorf& logvar, const Tensorf& eps, const KlResult<float>& kl,
                     double lambda1, Tensorf& g_mu, Tensorf& g_logvar) {
  g_mu = Tensorf(logvar.n(), logvar.c(), logvar.h(), logvar.w());
  g_logvar = g_mu;
  const auto l1 = static_cast<float>(lambda1);
  for (std::size_t i = 0; i < g_mu.size(); ++i) {
    const float gz = g_z.empty() ? 0.0f : g_z[i];
    g_mu[i] = gz + l1 * kl.grad_mu[i];
    g_logvar[i] = gz * eps[i] * 0.5f * std::exp(0.5f * logvar[i]) + l1 * kl.grad_logvar[i];
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + name + " loss");
}

}  // namespace

TotalLosses RestoreTrainer::step(const Tensorf& x, const Tensorf& gt, std::span<const int> labels) {
  const RestoreConfig& cfg = model_.config();
  x.check_same(gt, "RestoreTrainer::step");
  if (static_cast<int>(labels.size()) != x.n()) throw std::invalid_argument("RestoreTrainer::step: label count");
  ComponentLosses parts;

  Posterior post = model_.encoder().forward(x);
  Tensorf eps_c, eps_d;
  const Tensorf z_c = sample_latent(post.content_mu, post.content_logvar, eps_c, noise_rng_);
  const Tensorf z_d = sample_latent(post.deg_mu, post.deg_logvar, eps_d, noise_rng_);
  const Tensorf restored = model_.decoder().forward(z_c, z_d, x);

  // Image discriminator: real = pristine, fake = restored, one batched pass.
  if (cfg.adversarial) {
    opt_disc_.zero_grad();
    const Tensorf d_out = model_.image_discriminator().forward(concat_batch(gt, restored));
    const Tensorf d_real = slice_batch(d_out, 0, x.n());
    const Tensorf d_fake = slice_batch(d_out, x.n(), x.n());
    const auto adv = loss_adversarial_d(d_real, d_fake, cfg.gan_mode);
    parts.adv_discriminator = adv.value;
    model_.image_discriminator().backward(concat_batch(adv.grad_real, adv.grad_fake));
    opt_disc_.step();
  }

  // Domain discriminator classifies both latent parts.
  if (cfg.domain_classification) {
    opt_dom_.zero_grad();
    auto& dc = model_.domain_discriminator();
    const auto deg = loss_domain_cls(dc.forward_degradation(z_d), labels, Side::kDiscriminator,
                                     LatentPart::kDegradation);
    dc.backward_degradation(deg.grad);
    const auto con = loss_domain_cls(dc.forward_content(z_c), labels, Side::kDiscriminator, LatentPart::kContent);
    dc.backward_content(con.grad);
    parts.cls_discriminator = deg.value + con.value;
    opt_dom_.step();
  }

  // Encoder / decoder.
  opt_enc_.zero_grad();
  opt_dec_.zero_grad();
  KlResult<float> kl_c, kl_d;
  try {
    kl_c = loss_kl(post.content_mu, post.content_logvar);
    kl_d = loss_kl(post.deg_mu, post.deg_logvar);
  } catch (const std::domain_error&) {
    throw NumericalError("non-finite KL loss");
  }
  parts.kl = kl_c.value + kl_d.value;

  Tensorf g_zc, g_zd;
  auto accumulate = [](Tensorf& acc, const Tensorf& g) {
    if (acc.empty()) acc = g;
    else acc += g;
  };
  if (cfg.perceptual) {
    auto lp = loss_perceptual(restored, gt, model_.extractor(), cfg.perceptual_layers);
    parts.perceptual = lp.value;
    lp.grad *= static_cast<float>(cfg.lambda2);
    // The same gradient reaches decoder parameters and, through the latents, the encoder.
    const auto g = model_.decoder().backward(lp.grad);
    accumulate(g_zc, g.z_content);
    accumulate(g_zd, g.z_deg);
  }
  if (cfg.adversarial) {
    const auto adv = loss_adversarial_g(model_.image_discriminator().forward(restored), cfg.gan_mode);
    parts.adv_generator = adv.value;
    const Tensorf g_restored = model_.image_discriminator().backward(adv.grad_fake);
    model_.decoder().backward(g_restored);  // decoder only; the encoder does not see L_adv
  }
  if (cfg.domain_classification) {
    auto& dc = model_.domain_discriminator();
    const auto deg = loss_domain_cls(dc.forward_degradation(z_d), labels, Side::kEncoder, LatentPart::kDegradation);
    accumulate(g_zd, dc.backward_degradation(deg.grad));
    const auto con = loss_domain_cls(dc.forward_content(z_c), labels, Side::kEncoder, LatentPart::kContent);
    accumulate(g_zc, dc.backward_content(con.grad));
    parts.cls_encoder = deg.value + con.value;
  }
  Tensorf g_cmu, g_clv, g_dmu, g_dlv;
  posterior_grads(g_zc, post.content_logvar, eps_c, kl_c, cfg.lambda1, g_cmu, g_clv);
  posterior_grads(g_zd, post.deg_logvar, eps_d, kl_d, cfg.lambda1, g_dmu, g_dlv);
  model_.encoder().backward(g_cmu, g_clv, g_dmu, g_dlv);

  const TotalLosses total = total_losses(parts, cfg.lambda1, cfg.lambda2);
  require_finite(total.encoder, "encoder");
  require_finite(total.generator, "generator");
  require_finite(total.discriminator, "discriminator");
  require_finite(total.domain, "domain");
  opt_enc_.step();
  opt_dec_.step();
  ++model_.iteration;
  return total;
}

namespace {

struct TrainPair {
  Image distorted;
  Image reference;
  int label = 0;
};

std::vector<TrainPair> load_pairs(const forge::Manifest& manifest, int crop) {
  std::vector<TrainPair> pairs;
  for (const auto* r : manifest.in_split(forge::Split::kTrain)) {
    TrainPair p{read_png(manifest.resolve(r->image_path)), read_png(manifest.resolve(r->ref_path)), r->domain_id};
    if (!p.distorted.same_shape(p.reference))
      throw DataError("distorted/reference size mismatch for " + r->image_path);
    if (p.distorted.height() < crop || p.distorted.width() < crop)
      throw DataError(r->image_path + " is smaller than the training crop");
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError("manifest has no training records");
  return pairs;
}

void copy_crop(const Image& img, int y0, int x0, int size, Tensorf& dst, int n) {
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) dst.at(n, c, y, x) = img.at(c, y0 + y, x0 + x);
}

}  // namespace

TrainResult train_restore(const RestoreConfig& cfg, const forge::Manifest& manifest, const TrainOptions& options) {
  cfg.validate();
  if (manifest.n_domains() != cfg.n_domains || !manifest.dense_domain_ids())
    throw ConfigError("restore config expects " + std::to_string(cfg.n_domains) + " dense domain ids, manifest has " +
                      std::to_string(manifest.n_domains()));
  const auto pairs = load_pairs(manifest, cfg.crop_size);
  std::filesystem::create_directories(options.out_dir);

  RestoreModel model(cfg);
  model.config_hash = options.config_hash;
  RestoreTrainer trainer(model, cfg.seed);
  std::mt19937_64 data_rng(forge::mix_seed(cfg.seed, 0x64617461));

  TrainResult result;
  result.log = options.out_dir / "train_log.csv";
  std::ofstream log(result.log);
  if (!log) throw DataError("cannot write " + result.log.string());
  log << kTrainLogHeader << '\n';
  auto checkpoint = [&](std::int64_t it) {
    save_checkpoint(options.out_dir / ("restore_iter_" + std::to_string(it) + ".ckpt"), model);
  };
  checkpoint(0);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  constexpr int kAlign = 8;
  const int b = cfg.batch_size, s = cfg.crop_size;
  std::vector<int> labels(b);
  Tensorf x(b, 3, s, s), gt(b, 3, s, s);

  for (std::int64_t it = 1; it <= cfg.iterations; ++it) {
    for (int n = 0; n < b; ++n) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), data_rng);
        cursor = 0;
      }
      const TrainPair& p = pairs[order[cursor++]];
      const int ny = (p.distorted.height() - s) / kAlign + 1;
      const int nx = (p.distorted.width() - s) / kAlign + 1;
      const int y0 = static_cast<int>(data_rng() % ny) * kAlign;
      const int x0 = static_cast<int>(data_rng() % nx) * kAlign;
      copy_crop(p.distorted, y0, x0, s, x, n);
      copy_crop(p.reference, y0, x0, s, gt, n);
      labels[n] = p.label;
    }
    TotalLosses loss;
    try {
      loss = trainer.step(x, gt, labels);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    const auto& q = loss.parts;
    log << it << ',' << loss.encoder << ',' << loss.generator << ',' << loss.discriminator << ',' << loss.domain << ','
        << q.kl << ',' << q.perceptual << ',' << q.adv_generator << ',' << q.cls_encoder << '\n';
    if (options.on_iteration) options.on_iteration(it, loss);
    if (options.log_every > 0 && it % options.log_every == 0)
      spdlog::info("restore iter {}/{}: L_P={:.4f} L_kl={:.3f} L_cls={:.3f} L_D={:.3f}", it, cfg.iterations,
                   q.perceptual, q.kl, q.cls_encoder, loss.discriminator);
    if (it % cfg.checkpoint_every == 0) checkpoint(it);
  }
  log.flush();
  result.checkpoint = options.out_dir / "restore.ckpt";
  save_checkpoint(result.checkpoint, model);
  result.iterations = model.iteration;
  return result;
}

}  // namespace daiqa::restore
