#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daiqa {

/// Dense NCHW tensor. Vectors are stored as N x F x 1 x 1.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : shape_{n, c, h, w}, data_(static_cast<std::size_t>(n) * c * h * w, fill) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw std::invalid_argument("Tensor: negative dimension");
  }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Elements per sample (C*H*W).
  std::size_t sample_size() const { return static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3]; }
  std::size_t plane_size() const { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  std::span<T> sample(int n) { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<const T> sample(int n) const { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<T> plane(int n, int c) {
    return {data_.data() + (static_cast<std::size_t>(n) * shape_[1] + c) * plane_size(), plane_size()};
  }
  std::span<const T> plane(int n, int c) const {
    return {data_.data() + (static_cast<std::size_t>(n) * shape_[1] + c) * plane_size(), plane_size()};
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Reinterpret with a new shape of identical element count.
  Tensor reshaped(int n, int c, int h, int w) const {
    if (static_cast<std::size_t>(n) * c * h * w != data_.size())
      throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    Tensor out;
    out.shape_ = {n, c, h, w};
    out.data_ = data_;
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  Tensor& operator+=(const Tensor& o) {
    check_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  std::string shape_string() const {
    return "[" + std::to_string(shape_[0]) + "," + std::to_string(shape_[1]) + "," +
           std::to_string(shape_[2]) + "," + std::to_string(shape_[3]) + "]";
  }

  void check_same(const Tensor& o, const char* what) const {
    if (shape_ != o.shape_)
      throw std::invalid_argument(std::string("Tensor ") + what + ": shape " + shape_string() +
                                  " vs " + o.shape_string());
  }

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

/// Concatenate along the batch axis.
template <typename T>
Tensor<T> concat_batch(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.c() != b.c() || a.h() != b.h() || a.w() != b.w())
    throw std::invalid_argument("concat_batch: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  Tensor<T> out(a.n() + b.n(), a.c(), a.h(), a.w());
  std::copy(a.vec().begin(), a.vec().end(), out.vec().begin());
  std::copy(b.vec().begin(), b.vec().end(), out.vec().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

/// Rows [begin, begin+count) of the batch axis.
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& a, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > a.n()) throw std::out_of_range("slice_batch: range");
  Tensor<T> out(count, a.c(), a.h(), a.w());
  auto first = a.vec().begin() + static_cast<std::ptrdiff_t>(begin * a.sample_size());
  std::copy(first, first + static_cast<std::ptrdiff_t>(count * a.sample_size()), out.vec().begin());
  return out;
}

/// Concatenate along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw std::invalid_argument("concat_channels: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int n = 0; n < a.n(); ++n) {
    auto dst = out.sample(n);
    auto sa = a.sample(n);
    auto sb = b.sample(n);
    std::copy(sa.begin(), sa.end(), dst.begin());
    std::copy(sb.begin(), sb.end(), dst.begin() + static_cast<std::ptrdiff_t>(sa.size()));
  }
  return out;
}

/// Split channels [0, c_first) and [c_first, C).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, int c_first) {
  if (c_first < 0 || c_first > x.c()) throw std::out_of_range("split_channels: bad split");
  Tensor<T> a(x.n(), c_first, x.h(), x.w());
  Tensor<T> b(x.n(), x.c() - c_first, x.h(), x.w());
  for (int n = 0; n < x.n(); ++n) {
    auto s = x.sample(n);
    auto mid = s.begin() + static_cast<std::ptrdiff_t>(a.sample_size());
    std::copy(s.begin(), mid, a.sample(n).begin());
    std::copy(mid, s.end(), b.sample(n).begin());
  }
  return {std::move(a), std::move(b)};
}

}  // namespace daiqa
