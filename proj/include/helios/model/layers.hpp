#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "helios/error.hpp"

namespace helios::nn {

/// Square-kernel 2D convolution geometry over CHW tensors.
struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int in_h = 0;
  int in_w = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  int patch() const { return in_channels * kernel * kernel; }
  int positions() const { return out_h() * out_w(); }
};

/// col[(c*k + ky)*k + kx][oy*out_w + ox]; padded taps read `pad_value`.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* col, T pad_value = T(0)) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int c = 0; c < g.in_channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[oy * ow + ox] = (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w)
                                    ? in[(static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w + ix]
                                    : pad_value;
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* din) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int c = 0; c < g.in_channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            din[(static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w + ix] += row[oy * ow + ox];
          }
        }
      }
}

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// out[o][p] = bias[o] + sum_j w[o][j] * col[j][p]. `col` is the im2col buffer.
template <typename T>
void conv_forward(const T* col, const T* weight, const T* bias, const ConvGeometry& g, T* out) {
  const std::size_t P = g.positions();
  const int J = g.patch();
  for (int o = 0; o < g.out_channels; ++o) {
    T* orow = out + o * P;
    std::fill(orow, orow + P, bias[o]);
    const T* w = weight + static_cast<std::size_t>(o) * J;
    for (int j = 0; j < J; ++j)
      if (w[j] != T(0)) axpy(w[j], col + j * P, orow, P);
  }
}

/// Accumulates dW, db and (optionally) dcol from dout.
template <typename T>
void conv_backward(const T* col, const T* weight, const T* dout, const ConvGeometry& g, T* dweight,
                   T* dbias, T* dcol) {
  const std::size_t P = g.positions();
  const int J = g.patch();
  if (dcol) std::fill(dcol, dcol + static_cast<std::size_t>(J) * P, T(0));
  for (int o = 0; o < g.out_channels; ++o) {
    const T* drow = dout + o * P;
    T s = 0;
    for (std::size_t p = 0; p < P; ++p) s += drow[p];
    dbias[o] += s;
    const T* w = weight + static_cast<std::size_t>(o) * J;
    T* dw = dweight + static_cast<std::size_t>(o) * J;
    for (int j = 0; j < J; ++j) {
      dw[j] += dot(drow, col + j * P, P);
      if (dcol) axpy(w[j], drow, dcol + j * P, P);
    }
  }
}

/// out[o] = bias[o] + W[o] . x, W row-major [out][in].
template <typename T>
void dense_forward(const T* x, const T* weight, const T* bias, int in, int out, T* y) {
  for (int o = 0; o < out; ++o) y[o] = bias[o] + dot(weight + static_cast<std::size_t>(o) * in, x, in);
}

template <typename T>
void dense_backward(const T* x, const T* weight, const T* dy, int in, int out, T* dweight, T* dbias,
                    T* dx) {
  if (dx) std::fill(dx, dx + in, T(0));
  for (int o = 0; o < out; ++o) {
    if (dy[o] == T(0)) continue;
    dbias[o] += dy[o];
    axpy(dy[o], x, dweight + static_cast<std::size_t>(o) * in, in);
    if (dx) axpy(dy[o], weight + static_cast<std::size_t>(o) * in, dx, in);
  }
}

/// Non-overlapping factor x factor average pooling over CHW.
template <typename T>
void avgpool_forward(const T* in, int channels, int h, int w, int factor, T* out) {
  const int oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (int c = 0; c < channels; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T s = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            s += in[(static_cast<std::size_t>(c) * h + oy * factor + dy) * w + ox * factor + dx];
        out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = s * inv;
      }
}

template <typename T>
void avgpool_backward(const T* dout, int channels, int h, int w, int factor, T* din) {
  const int oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < oh * factor; ++y)
      for (int x = 0; x < ow * factor; ++x)
        din[(static_cast<std::size_t>(c) * h + y) * w + x] +=
            dout[(static_cast<std::size_t>(c) * oh + y / factor) * ow + x / factor] * inv;
}

template <typename T>
void relu_inplace(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

/// dx = dy where the forward output was positive.
template <typename T>
void relu_backward_inplace(const T* y, T* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(y[i] > T(0))) dy[i] = T(0);
}

template <typename T>
T sigmoid(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
void softmax(const T* logits, int n, T* probs) {
  T mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  T sum = 0;
  for (int i = 0; i < n; ++i) sum += (probs[i] = std::exp(logits[i] - mx));
  for (int i = 0; i < n; ++i) probs[i] /= sum;
}

template <typename T>
void check_finite(const T* x, std::size_t n, const char* where) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) fail(ErrorCode::kNumeric, std::string("non-finite activation in ") + where);
}

}  // namespace helios::nn
