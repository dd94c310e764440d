#include "dcmr/graph.hpp"

#include <algorithm>
#include <cmath>

#include "dcmr/error.hpp"
#include "dcmr/kernels/gemm.hpp"

namespace dcmr {

int norm_groups(int channels) {
  for (int g = std::min(8, channels); g > 1; --g)
    if (channels % g == 0) return g;
  return 1;
}

namespace {

struct ConvGeom {
  int cin, h, w, k, stride, pad, ho, wo;
  int rows() const { return cin * k * k; }
  std::size_t cols() const { return static_cast<std::size_t>(ho) * wo; }
};

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const std::size_t P = g.cols();
  for (int ci = 0; ci < g.cin; ++ci)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        T* dst = col + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * P;
        const T* src = x + static_cast<std::size_t>(ci) * g.h * g.w;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          T* d = dst + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(d, d + g.wo, T(0));
            continue;
          }
          const T* s = src + static_cast<std::size_t>(iy) * g.w;
          if (g.stride == 1) {
            // ix = ox + kx - pad; copy the in-range span, zero the edges
            const int lo = std::max(0, g.pad - kx), hi = std::min(g.wo, g.w + g.pad - kx);
            std::fill(d, d + lo, T(0));
            for (int ox = lo; ox < hi; ++ox) d[ox] = s[ox + kx - g.pad];
            std::fill(d + std::max(lo, hi), d + g.wo, T(0));
          } else {
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.stride + kx - g.pad;
              d[ox] = (ix >= 0 && ix < g.w) ? s[ix] : T(0);
            }
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, T* dx) {
  const std::size_t P = g.cols();
  for (int ci = 0; ci < g.cin; ++ci)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const T* src = col + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * P;
        T* dst = dx + static_cast<std::size_t>(ci) * g.h * g.w;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          const T* s = src + static_cast<std::size_t>(oy) * g.wo;
          T* d = dst + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.w) d[ix] += s[ox];
          }
        }
      }
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

template <typename T>
typename Graph<T>::Id Graph<T>::push(Shape s, bool needs_grad) {
  Node n;
  n.shape = s;
  n.needs_grad = record_ && needs_grad;
  n.data.assign(s.numel(), T(0));
  if (n.needs_grad) n.grad.assign(s.numel(), T(0));
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Id Graph<T>::constant(Shape s, std::vector<T> values) {
  require(values.size() == s.numel(), "graph constant: size mismatch");
  Node n;
  n.shape = s;
  n.data = std::move(values);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Id Graph<T>::parameter(Shape s, const T* values, T* grad_buf) {
  Node n;
  n.shape = s;
  n.ext = values;
  n.ext_grad = grad_buf;
  n.needs_grad = record_ && grad_buf != nullptr;
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Id Graph<T>::conv2d(Id x, Id weight, Id bias, int cout, int kernel, int stride) {
  const Shape xs = shape(x);
  const int pad = kernel / 2;
  ConvGeom g{xs.c, xs.h, xs.w, kernel, stride, pad, (xs.h + 2 * pad - kernel) / stride + 1,
             (xs.w + 2 * pad - kernel) / stride + 1};
  require(shape(weight).numel() == static_cast<std::size_t>(cout) * g.rows(), "conv2d: weight shape mismatch");
  require(shape(bias).numel() == static_cast<std::size_t>(cout), "conv2d: bias shape mismatch");
  const bool direct = kernel == 1 && stride == 1;
  const int K = g.rows();
  const int P = static_cast<int>(g.cols());

  const Id y = push({cout, g.ho, g.wo}, needs(x) || needs(weight) || needs(bias));
  std::vector<T> col;
  const T* colp = val(x);
  if (!direct) {
    col.resize(static_cast<std::size_t>(K) * P);
    im2col(val(x), g, col.data());
    colp = col.data();
  }
  T* out = mut(y);
  kernels::gemm_nn(cout, P, K, val(weight), colp, out, false);
  const T* b = val(bias);
  for (int co = 0; co < cout; ++co) {
    T* o = out + static_cast<std::size_t>(co) * P;
    for (int p = 0; p < P; ++p) o[p] += b[co];
  }

  if (needs(y)) {
    on_backward([this, x, weight, bias, y, g, cout, K, P, direct] {
      const T* dy = grad(y);
      std::vector<T> col;
      const T* colp = val(x);
      if (!direct && needs(weight)) {
        col.resize(static_cast<std::size_t>(K) * P);
        im2col(val(x), g, col.data());
        colp = col.data();
      }
      if (needs(weight)) kernels::gemm_nt(cout, K, P, dy, colp, grad(weight), true);
      if (needs(bias)) {
        T* db = grad(bias);
        for (int co = 0; co < cout; ++co) {
          const T* d = dy + static_cast<std::size_t>(co) * P;
          T s = 0;
          for (int p = 0; p < P; ++p) s += d[p];
          db[co] += s;
        }
      }
      if (needs(x)) {
        if (direct) {
          kernels::gemm_tn(K, P, cout, val(weight), dy, grad(x), true);
        } else {
          std::vector<T> dcol(static_cast<std::size_t>(K) * P);
          kernels::gemm_tn(K, P, cout, val(weight), dy, dcol.data(), false);
          col2im_add(dcol.data(), g, grad(x));
        }
      }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::add(Id a, Id b) {
  return add_scaled(a, b, T(1));
}

template <typename T>
typename Graph<T>::Id Graph<T>::add_scaled(Id a, Id b, T scale) {
  require(shape(a) == shape(b), "add: shape mismatch");
  const Id y = push(shape(a), needs(a) || needs(b));
  const std::size_t n = shape(a).numel();
  const T *pa = val(a), *pb = val(b);
  T* out = mut(y);
  for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] + scale * pb[i];
  if (needs(y)) {
    on_backward([this, a, b, y, n, scale] {
      if (needs(a)) kernels::axpy(n, T(1), grad(y), grad(a));
      if (needs(b)) kernels::axpy(n, scale, grad(y), grad(b));
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::add_channel_bias(Id x, Id v) {
  const Shape s = shape(x);
  require(shape(v).numel() == static_cast<std::size_t>(s.c), "add_channel_bias: size mismatch");
  const Id y = push(s, needs(x) || needs(v));
  const std::size_t plane = s.plane();
  const T *px = val(x), *pv = val(v);
  T* out = mut(y);
  for (int c = 0; c < s.c; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = px[c * plane + i] + pv[c];
  if (needs(y)) {
    on_backward([this, x, v, y, s, plane] {
      const T* dy = grad(y);
      if (needs(x)) kernels::axpy(s.numel(), T(1), dy, grad(x));
      if (needs(v)) {
        T* dv = grad(v);
        for (int c = 0; c < s.c; ++c) {
          T acc = 0;
          for (std::size_t i = 0; i < plane; ++i) acc += dy[c * plane + i];
          dv[c] += acc;
        }
      }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::linear(Id v, Id weight, Id bias, int out) {
  const int in = static_cast<int>(shape(v).numel());
  require(shape(weight).numel() == static_cast<std::size_t>(in) * out, "linear: weight shape mismatch");
  require(shape(bias).numel() == static_cast<std::size_t>(out), "linear: bias shape mismatch");
  const Id y = push({out, 1, 1}, needs(v) || needs(weight) || needs(bias));
  const T *pv = val(v), *pw = val(weight), *pb = val(bias);
  T* o = mut(y);
  for (int i = 0; i < out; ++i) {
    T s = pb[i];
    for (int j = 0; j < in; ++j) s += pw[static_cast<std::size_t>(i) * in + j] * pv[j];
    o[i] = s;
  }
  if (needs(y)) {
    on_backward([this, v, weight, bias, y, in, out] {
      const T* dy = grad(y);
      if (needs(weight)) {
        T* dw = grad(weight);
        const T* pv = val(v);
        for (int i = 0; i < out; ++i)
          for (int j = 0; j < in; ++j) dw[static_cast<std::size_t>(i) * in + j] += dy[i] * pv[j];
      }
      if (needs(bias)) kernels::axpy(static_cast<std::size_t>(out), T(1), dy, grad(bias));
      if (needs(v)) {
        T* dv = grad(v);
        const T* pw = val(weight);
        for (int i = 0; i < out; ++i)
          for (int j = 0; j < in; ++j) dv[j] += pw[static_cast<std::size_t>(i) * in + j] * dy[i];
      }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::row(Id table, int index, int dim) {
  const std::size_t rows = shape(table).numel() / dim;
  require(index >= 0 && static_cast<std::size_t>(index) < rows, "row: index out of range");
  const Id y = push({dim, 1, 1}, needs(table));
  std::copy_n(val(table) + static_cast<std::size_t>(index) * dim, dim, mut(y));
  if (needs(y)) {
    on_backward([this, table, y, index, dim] {
      kernels::axpy(static_cast<std::size_t>(dim), T(1), grad(y), grad(table) + static_cast<std::size_t>(index) * dim);
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::silu(Id x) {
  const Id y = push(shape(x), needs(x));
  const std::size_t n = shape(x).numel();
  const T* px = val(x);
  T* out = mut(y);
  for (std::size_t i = 0; i < n; ++i) out[i] = px[i] * sigmoid(px[i]);
  if (needs(y)) {
    on_backward([this, x, y, n] {
      const T *px = val(x), *dy = grad(y);
      T* dx = grad(x);
      for (std::size_t i = 0; i < n; ++i) {
        const T s = sigmoid(px[i]);
        dx[i] += dy[i] * s * (T(1) + px[i] * (T(1) - s));
      }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::group_norm(Id x, Id gamma, Id beta, int groups) {
  const Shape s = shape(x);
  require(s.c % groups == 0, "group_norm: channels not divisible by groups");
  require(shape(gamma).numel() == static_cast<std::size_t>(s.c) && shape(beta).numel() == static_cast<std::size_t>(s.c),
          "group_norm: affine parameter size mismatch");
  const Id y = push(s, needs(x) || needs(gamma) || needs(beta));
  const int cpg = s.c / groups;
  const std::size_t plane = s.plane();
  const std::size_t gsize = cpg * plane;
  constexpr T eps = T(1e-5);
  std::vector<T> mean(groups), rstd(groups);
  const T *px = val(x), *pg = val(gamma), *pb = val(beta);
  T* out = mut(y);
  for (int g = 0; g < groups; ++g) {
    const T* xs = px + g * gsize;
    T m = 0;
    for (std::size_t i = 0; i < gsize; ++i) m += xs[i];
    m /= static_cast<T>(gsize);
    T v = 0;
    for (std::size_t i = 0; i < gsize; ++i) v += (xs[i] - m) * (xs[i] - m);
    v /= static_cast<T>(gsize);
    mean[g] = m;
    rstd[g] = T(1) / std::sqrt(v + eps);
    for (int cc = 0; cc < cpg; ++cc) {
      const int c = g * cpg + cc;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t k = c * plane + i;
        out[k] = (px[k] - m) * rstd[g] * pg[c] + pb[c];
      }
    }
  }
  if (needs(y)) {
    on_backward([this, x, gamma, beta, y, s, groups, cpg, plane, gsize, mean = std::move(mean),
                 rstd = std::move(rstd)] {
      const T *px = val(x), *pg = val(gamma), *dy = grad(y);
      for (int g = 0; g < groups; ++g) {
        T sum_d = 0, sum_dx = 0;
        for (int cc = 0; cc < cpg; ++cc) {
          const int c = g * cpg + cc;
          T dg = 0, db = 0;
          for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t k = c * plane + i;
            const T xhat = (px[k] - mean[g]) * rstd[g];
            dg += dy[k] * xhat;
            db += dy[k];
            const T d = dy[k] * pg[c];
            sum_d += d;
            sum_dx += d * xhat;
          }
          if (needs(gamma)) grad(gamma)[c] += dg;
          if (needs(beta)) grad(beta)[c] += db;
        }
        if (!needs(x)) continue;
        const T md = sum_d / static_cast<T>(gsize), mdx = sum_dx / static_cast<T>(gsize);
        T* dx = grad(x);
        for (int cc = 0; cc < cpg; ++cc) {
          const int c = g * cpg + cc;
          for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t k = c * plane + i;
            const T xhat = (px[k] - mean[g]) * rstd[g];
            dx[k] += rstd[g] * (dy[k] * pg[c] - md - xhat * mdx);
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::concat(Id a, Id b) {
  const Shape sa = shape(a), sb = shape(b);
  require(sa.h == sb.h && sa.w == sb.w, "concat: spatial shape mismatch");
  const Id y = push({sa.c + sb.c, sa.h, sa.w}, needs(a) || needs(b));
  std::copy_n(val(a), sa.numel(), mut(y));
  std::copy_n(val(b), sb.numel(), mut(y) + sa.numel());
  if (needs(y)) {
    on_backward([this, a, b, y, na = sa.numel(), nb = sb.numel()] {
      if (needs(a)) kernels::axpy(na, T(1), grad(y), grad(a));
      if (needs(b)) kernels::axpy(nb, T(1), grad(y) + na, grad(b));
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::upsample2x(Id x) {
  const Shape s = shape(x);
  const Id y = push({s.c, 2 * s.h, 2 * s.w}, needs(x));
  const T* px = val(x);
  T* out = mut(y);
  const int W2 = 2 * s.w;
  for (int c = 0; c < s.c; ++c)
    for (int r = 0; r < 2 * s.h; ++r) {
      const T* src = px + (static_cast<std::size_t>(c) * s.h + r / 2) * s.w;
      T* dst = out + (static_cast<std::size_t>(c) * 2 * s.h + r) * W2;
      for (int q = 0; q < W2; ++q) dst[q] = src[q / 2];
    }
  if (needs(y)) {
    on_backward([this, x, y, s, W2] {
      const T* dy = grad(y);
      T* dx = grad(x);
      for (int c = 0; c < s.c; ++c)
        for (int r = 0; r < 2 * s.h; ++r) {
          const T* src = dy + (static_cast<std::size_t>(c) * 2 * s.h + r) * W2;
          T* dst = dx + (static_cast<std::size_t>(c) * s.h + r / 2) * s.w;
          for (int q = 0; q < W2; ++q) dst[q / 2] += src[q];
        }
    });
  }
  return y;
}

template <typename T>
typename Graph<T>::Id Graph<T>::avg_pool2x(Id x) {
  const Shape s = shape(x);
  require(s.h % 2 == 0 && s.w % 2 == 0, "avg_pool2x: odd spatial size");
  const int h2 = s.h / 2, w2 = s.w / 2;
  const Id y = push({s.c, h2, w2}, needs(x));
  const T* px = val(x);
  T* out = mut(y);
  for (int c = 0; c < s.c; ++c)
    for (int r = 0; r < h2; ++r) {
      const T* a = px + (static_cast<std::size_t>(c) * s.h + 2 * r) * s.w;
      const T* b = a + s.w;
      T* dst = out + (static_cast<std::size_t>(c) * h2 + r) * w2;
      for (int q = 0; q < w2; ++q) dst[q] = T(0.25) * (a[2 * q] + a[2 * q + 1] + b[2 * q] + b[2 * q + 1]);
    }
  if (needs(y)) {
    on_backward([this, x, y, s, h2, w2] {
      const T* dy = grad(y);
      T* dx = grad(x);
      for (int c = 0; c < s.c; ++c)
        for (int r = 0; r < h2; ++r) {
          const T* src = dy + (static_cast<std::size_t>(c) * h2 + r) * w2;
          T* a = dx + (static_cast<std::size_t>(c) * s.h + 2 * r) * s.w;
          T* b = a + s.w;
          for (int q = 0; q < w2; ++q) {
            const T g = T(0.25) * src[q];
            a[2 * q] += g;
            a[2 * q + 1] += g;
            b[2 * q] += g;
            b[2 * q + 1] += g;
          }
        }
    });
  }
  return y;
}

template <typename T>
T Graph<T>::mse(Id pred, std::span<const T> target, T weight) {
  const std::size_t n = shape(pred).numel();
  require(target.size() == n, "mse: target size mismatch");
  const T* p = val(pred);
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) loss += (p[i] - target[i]) * (p[i] - target[i]);
  loss /= static_cast<T>(n);
  if (needs(pred)) {
    T* g = grad(pred);
    const T scale = weight * T(2) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) g[i] += scale * (p[i] - target[i]);
  }
  return loss;
}

template <typename T>
void Graph<T>::backward() {
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  tape_.clear();
}

template class Graph<float>;
template class Graph<double>;

}  // namespace dcmr
