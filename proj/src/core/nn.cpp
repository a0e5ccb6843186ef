#include "daiqa/core/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace daiqa::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

struct Geometry {
  int channels, height, width, kernel, stride, pad, out_h, out_w;
};

// col is (channels*k*k) x (out_h*out_w).
template <typename T>
void im2col(const T* img, const Geometry& g, T* col) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = col + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const Geometry& g, T* img) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          const T* src = row + oy * g.out_w;
          T* dst = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> uniform_tensor(int n, int c, int h, int w, double bound, std::mt19937_64& rng) {
  Tensor<T> t(n, c, h, w);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.vec()) v = static_cast<T>(dist(rng));
  return t;
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, std::mt19937_64& rng, double init_gain)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
  const double bound = init_gain / std::sqrt(static_cast<double>(in_ch * kernel * kernel));
  weight_ = Param<T>(uniform_tensor<T>(out_ch, in_ch * kernel * kernel, 1, 1, bound, rng));
  bias_ = Param<T>(uniform_tensor<T>(out_ch, 1, 1, 1, bound, rng));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  if (x.c() != in_ch_)
    throw std::invalid_argument("Conv2d: expected " + std::to_string(in_ch_) + " channels, got " + x.shape_string());
  input_ = x;
  const Geometry g{in_ch_, x.h(), x.w(), kernel_, stride_, pad_, out_size(x.h()), out_size(x.w())};
  if (g.out_h <= 0 || g.out_w <= 0) throw std::invalid_argument("Conv2d: input too small " + x.shape_string());
  const int rows = in_ch_ * kernel_ * kernel_;
  const int plane = g.out_h * g.out_w;
  Tensor<T> y(x.n(), out_ch_, g.out_h, g.out_w);
  std::vector<T> col(static_cast<std::size_t>(rows) * plane);
  CMapMat<T> wm(weight_.value.data(), out_ch_, rows);
  for (int n = 0; n < x.n(); ++n) {
    im2col(x.sample(n).data(), g, col.data());
    MapMat<T> ym(y.sample(n).data(), out_ch_, plane);
    ym.noalias() = wm * CMapMat<T>(col.data(), rows, plane);
    for (int o = 0; o < out_ch_; ++o) ym.row(o).array() += bias_.value[o];
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  const Tensor<T>& x = input_;
  const Geometry g{in_ch_, x.h(), x.w(), kernel_, stride_, pad_, out_size(x.h()), out_size(x.w())};
  const int rows = in_ch_ * kernel_ * kernel_;
  const int plane = g.out_h * g.out_w;
  if (grad_out.n() != x.n() || grad_out.c() != out_ch_ || grad_out.h() != g.out_h || grad_out.w() != g.out_w)
    throw std::invalid_argument("Conv2d::backward: grad shape " + grad_out.shape_string());
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  std::vector<T> col(static_cast<std::size_t>(rows) * plane);
  std::vector<T> dcol(col.size());
  CMapMat<T> wm(weight_.value.data(), out_ch_, rows);
  MapMat<T> dwm(weight_.grad.data(), out_ch_, rows);
  for (int n = 0; n < x.n(); ++n) {
    im2col(x.sample(n).data(), g, col.data());
    CMapMat<T> gy(grad_out.sample(n).data(), out_ch_, plane);
    dwm.noalias() += gy * CMapMat<T>(col.data(), rows, plane).transpose();
    for (int o = 0; o < out_ch_; ++o) bias_.grad[o] += gy.row(o).sum();
    MapMat<T>(dcol.data(), rows, plane).noalias() = wm.transpose() * gy;
    col2im(dcol.data(), g, dx.sample(n).data());
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, NamedParams<T>& out) {
  out.emplace_back(prefix + ".weight", &weight_);
  out.emplace_back(prefix + ".bias", &bias_);
}

// ------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad, std::mt19937_64& rng,
                                    double init_gain)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
  const double fan_in = static_cast<double>(in_ch * kernel * kernel) / (stride * stride);
  const double bound = init_gain / std::sqrt(fan_in);
  weight_ = Param<T>(uniform_tensor<T>(in_ch, out_ch * kernel * kernel, 1, 1, bound, rng));
  bias_ = Param<T>(uniform_tensor<T>(out_ch, 1, 1, 1, bound, rng));
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) {
  if (x.c() != in_ch_)
    throw std::invalid_argument("ConvTranspose2d: expected " + std::to_string(in_ch_) + " channels, got " +
                                x.shape_string());
  input_ = x;
  const int oh = out_size(x.h()), ow = out_size(x.w());
  const Geometry g{out_ch_, oh, ow, kernel_, stride_, pad_, x.h(), x.w()};
  const int rows = out_ch_ * kernel_ * kernel_;
  const int plane = x.h() * x.w();
  Tensor<T> y(x.n(), out_ch_, oh, ow);
  std::vector<T> col(static_cast<std::size_t>(rows) * plane);
  CMapMat<T> wm(weight_.value.data(), in_ch_, rows);
  for (int n = 0; n < x.n(); ++n) {
    MapMat<T>(col.data(), rows, plane).noalias() = wm.transpose() * CMapMat<T>(x.sample(n).data(), in_ch_, plane);
    col2im(col.data(), g, y.sample(n).data());
    for (int o = 0; o < out_ch_; ++o)
      for (auto& v : y.plane(n, o)) v += bias_.value[o];
  }
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& grad_out) {
  const Tensor<T>& x = input_;
  const int oh = out_size(x.h()), ow = out_size(x.w());
  if (grad_out.n() != x.n() || grad_out.c() != out_ch_ || grad_out.h() != oh || grad_out.w() != ow)
    throw std::invalid_argument("ConvTranspose2d::backward: grad shape " + grad_out.shape_string());
  const Geometry g{out_ch_, oh, ow, kernel_, stride_, pad_, x.h(), x.w()};
  const int rows = out_ch_ * kernel_ * kernel_;
  const int plane = x.h() * x.w();
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  std::vector<T> dcol(static_cast<std::size_t>(rows) * plane);
  CMapMat<T> wm(weight_.value.data(), in_ch_, rows);
  MapMat<T> dwm(weight_.grad.data(), in_ch_, rows);
  for (int n = 0; n < x.n(); ++n) {
    im2col(grad_out.sample(n).data(), g, dcol.data());
    CMapMat<T> dc(dcol.data(), rows, plane);
    CMapMat<T> xm(x.sample(n).data(), in_ch_, plane);
    dwm.noalias() += xm * dc.transpose();
    MapMat<T>(dx.sample(n).data(), in_ch_, plane).noalias() = wm * dc;
    for (int o = 0; o < out_ch_; ++o) {
      T s = 0;
      for (T v : grad_out.plane(n, o)) s += v;
      bias_.grad[o] += s;
    }
  }
  return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect(const std::string& prefix, NamedParams<T>& out) {
  out.emplace_back(prefix + ".weight", &weight_);
  out.emplace_back(prefix + ".bias", &bias_);
}

// -------------------------------------------------------- InstanceNorm2d

template <typename T>
InstanceNorm2d<T>::InstanceNorm2d(int channels, bool affine, double eps)
    : channels_(channels), affine_(affine), eps_(eps) {
  gamma_ = Param<T>(Tensor<T>(channels, 1, 1, 1, T(1)));
  beta_ = Param<T>(Tensor<T>(channels, 1, 1, 1, T(0)));
}

template <typename T>
Tensor<T> InstanceNorm2d<T>::forward(const Tensor<T>& x) {
  if (x.c() != channels_) throw std::invalid_argument("InstanceNorm2d: channel mismatch " + x.shape_string());
  const std::size_t m = x.plane_size();
  xhat_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
  inv_std_.assign(static_cast<std::size_t>(x.n()) * x.c(), T(0));
  Tensor<T> y(x.n(), x.c(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      auto src = x.plane(n, c);
      double mean = 0;
      for (T v : src) mean += v;
      mean /= static_cast<double>(m);
      double var = 0;
      for (T v : src) var += (v - mean) * (v - mean);
      var /= static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[static_cast<std::size_t>(n) * x.c() + c] = static_cast<T>(inv);
      auto xh = xhat_.plane(n, c);
      auto dst = y.plane(n, c);
      const T g = affine_ ? gamma_.value[c] : T(1);
      const T b = affine_ ? beta_.value[c] : T(0);
      for (std::size_t i = 0; i < m; ++i) {
        xh[i] = static_cast<T>((src[i] - mean) * inv);
        dst[i] = g * xh[i] + b;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> InstanceNorm2d<T>::backward(const Tensor<T>& grad_out) {
  xhat_.check_same(grad_out, "InstanceNorm2d::backward");
  const std::size_t m = grad_out.plane_size();
  Tensor<T> dx(grad_out.n(), grad_out.c(), grad_out.h(), grad_out.w());
  for (int n = 0; n < grad_out.n(); ++n) {
    for (int c = 0; c < grad_out.c(); ++c) {
      auto g = grad_out.plane(n, c);
      auto xh = xhat_.plane(n, c);
      const double gamma = affine_ ? gamma_.value[c] : 1.0;
      double sum_g = 0, sum_gx = 0;
      for (std::size_t i = 0; i < m; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
      if (affine_) {
        gamma_.grad[c] += static_cast<T>(sum_gx);
        beta_.grad[c] += static_cast<T>(sum_g);
      }
      const double inv = inv_std_[static_cast<std::size_t>(n) * grad_out.c() + c];
      const double md = static_cast<double>(m);
      auto d = dx.plane(n, c);
      for (std::size_t i = 0; i < m; ++i)
        d[i] = static_cast<T>(gamma * inv / md * (md * g[i] - sum_g - xh[i] * sum_gx));
    }
  }
  return dx;
}

template <typename T>
void InstanceNorm2d<T>::collect(const std::string& prefix, NamedParams<T>& out) {
  if (!affine_) return;
  out.emplace_back(prefix + ".gamma", &gamma_);
  out.emplace_back(prefix + ".beta", &beta_);
}

// ------------------------------------------------------------- LeakyRelu

template <typename T>
Tensor<T> LeakyRelu<T>::forward(const Tensor<T>& x) {
  input_ = x;
  Tensor<T> y = x;
  for (auto& v : y.vec())
    if (v < 0) v *= slope_;
  return y;
}

template <typename T>
Tensor<T> LeakyRelu<T>::backward(const Tensor<T>& grad_out) {
  input_.check_same(grad_out, "LeakyRelu::backward");
  Tensor<T> dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (input_[i] < 0) dx[i] *= slope_;
  return dx;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(int in_features, int out_features, std::mt19937_64& rng, double init_gain)
    : in_(in_features), out_(out_features) {
  const double bound = init_gain / std::sqrt(static_cast<double>(in_features));
  weight_ = Param<T>(uniform_tensor<T>(out_features, in_features, 1, 1, bound, rng));
  bias_ = Param<T>(uniform_tensor<T>(out_features, 1, 1, 1, bound, rng));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) {
  if (static_cast<int>(x.sample_size()) != in_)
    throw std::invalid_argument("Linear: expected " + std::to_string(in_) + " features, got " + x.shape_string());
  in_shape_ = x.shape();
  input_ = x;
  Tensor<T> y(x.n(), out_, 1, 1);
  MapMat<T> ym(y.data(), x.n(), out_);
  ym.noalias() = CMapMat<T>(x.data(), x.n(), in_) * CMapMat<T>(weight_.value.data(), out_, in_).transpose();
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < out_; ++o) ym(n, o) += bias_.value[o];
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  const int batch = in_shape_[0];
  if (grad_out.n() != batch || static_cast<int>(grad_out.sample_size()) != out_)
    throw std::invalid_argument("Linear::backward: grad shape " + grad_out.shape_string());
  CMapMat<T> gy(grad_out.data(), batch, out_);
  MapMat<T>(weight_.grad.data(), out_, in_).noalias() += gy.transpose() * CMapMat<T>(input_.data(), batch, in_);
  for (int o = 0; o < out_; ++o) bias_.grad[o] += gy.col(o).sum();
  Tensor<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  MapMat<T>(dx.data(), batch, in_).noalias() = gy * CMapMat<T>(weight_.value.data(), out_, in_);
  return dx;
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, NamedParams<T>& out) {
  out.emplace_back(prefix + ".weight", &weight_);
  out.emplace_back(prefix + ".bias", &bias_);
}

// --------------------------------------------------------- GlobalAvgPool

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x) {
  in_shape_ = x.shape();
  Tensor<T> y(x.n(), x.c(), 1, 1);
  const double m = static_cast<double>(x.plane_size());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      double s = 0;
      for (T v : x.plane(n, c)) s += v;
      y.at(n, c, 0, 0) = static_cast<T>(s / m);
    }
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  const T scale = T(1) / static_cast<T>(dx.plane_size());
  for (int n = 0; n < dx.n(); ++n)
    for (int c = 0; c < dx.c(); ++c) {
      const T g = grad_out.at(n, c, 0, 0) * scale;
      for (auto& v : dx.plane(n, c)) v = g;
    }
  return dx;
}

// ------------------------------------------------------------ Sequential

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) {
  Tensor<T> h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
void Sequential<T>::collect(const std::string& prefix, NamedParams<T>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect(prefix + "." + std::to_string(i), out);
}

// ------------------------------------------------------------------ Adam

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), T(0));
    v_.emplace_back(p->value.size(), T(0));
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->grad.fill(T(0));
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = static_cast<T>(beta1_ * m[i] + (1.0 - beta1_) * g);
      v[i] = static_cast<T>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

#define DAIQA_INSTANTIATE(T)            \
  template class Conv2d<T>;             \
  template class ConvTranspose2d<T>;    \
  template class InstanceNorm2d<T>;     \
  template class LeakyRelu<T>;          \
  template class Linear<T>;             \
  template class GlobalAvgPool<T>;      \
  template class Sequential<T>;         \
  template class Adam<T>;

DAIQA_INSTANTIATE(float)
DAIQA_INSTANTIATE(double)

#undef DAIQA_INSTANTIATE

}  // namespace daiqa::nn
