#pragma once

#include "tsfm/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tsfm::nn {

// Activations are (N, C, D, H, W), conv weights (Cout, Cin, k, k, k),
// token matrices (T, features). All kernels are cubic.

inline Index conv_out_dim(Index in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

/// Unfold one sample (C, D, H, W) into columns (C*k^3, L) for a cubic kernel.
template <typename S>
void im2col(const S* x, Index C, Index D, Index H, Index W, int k, int stride, int pad,
            Index OD, Index OH, Index OW, S* col) {
  const Index L = OD * OH * OW;
  std::fill(col, col + C * k * k * k * L, S(0));
  for (Index c = 0; c < C; ++c) {
    for (int kd = 0; kd < k; ++kd) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          S* row = col + (((c * k + kd) * k + kh) * k + kw) * L;
          for (Index od = 0; od < OD; ++od) {
            const Index id = od * stride - pad + kd;
            if (id < 0 || id >= D) continue;
            for (Index oh = 0; oh < OH; ++oh) {
              const Index ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              const S* src = x + ((c * D + id) * H + ih) * W;
              S* dst = row + (od * OH + oh) * OW;
              // valid ow range: 0 <= ow*stride - pad + kw < W
              Index lo = 0;
              while (lo < OW && lo * stride - pad + kw < 0) ++lo;
              Index hi = OW;
              while (hi > lo && (hi - 1) * stride - pad + kw >= W) --hi;
              if (stride == 1) {
                std::copy(src + lo - pad + kw, src + hi - pad + kw, dst + lo);
              } else {
                for (Index ow = lo; ow < hi; ++ow) dst[ow] = src[ow * stride - pad + kw];
              }
            }
          }
        }
      }
    }
  }
}

/// Fold columns back, accumulating into the sample gradient.
template <typename S>
void col2im_add(const S* col, Index C, Index D, Index H, Index W, int k, int stride, int pad,
                Index OD, Index OH, Index OW, S* dx) {
  const Index L = OD * OH * OW;
  for (Index c = 0; c < C; ++c) {
    for (int kd = 0; kd < k; ++kd) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          const S* row = col + (((c * k + kd) * k + kh) * k + kw) * L;
          for (Index od = 0; od < OD; ++od) {
            const Index id = od * stride - pad + kd;
            if (id < 0 || id >= D) continue;
            for (Index oh = 0; oh < OH; ++oh) {
              const Index ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              S* dst = dx + ((c * D + id) * H + ih) * W;
              const S* src = row + (od * OH + oh) * OW;
              for (Index ow = 0; ow < OW; ++ow) {
                const Index iw = ow * stride - pad + kw;
                if (iw >= 0 && iw < W) dst[iw] += src[ow];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

template <typename S>
Tensor<S> conv3d_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride,
                         int pad) {
  const Index N = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const Index Cout = w.dim(0), Cin = w.dim(1);
  const int k = static_cast<int>(w.dim(2));
  if (Cin != C) throw std::invalid_argument("conv3d: channel mismatch");
  const Index OD = conv_out_dim(D, k, stride, pad);
  const Index OH = conv_out_dim(H, k, stride, pad);
  const Index OW = conv_out_dim(W, k, stride, pad);
  const Index L = OD * OH * OW;
  const Index K = C * k * k * k;

  Tensor<S> y({N, Cout, OD, OH, OW});
  std::vector<S> col(static_cast<std::size_t>(K * L));
  using Map = Eigen::Map<typename Tensor<S>::MatrixRM>;
  using CMap = Eigen::Map<const typename Tensor<S>::MatrixRM>;
  CMap wm(w.data(), Cout, K);
  for (Index n = 0; n < N; ++n) {
    detail::im2col(x.data() + n * C * D * H * W, C, D, H, W, k, stride, pad, OD, OH, OW,
                   col.data());
    CMap cm(col.data(), K, L);
    Map ym(y.data() + n * Cout * L, Cout, L);
    ym.noalias() = wm * cm;
    ym.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(b.data(), Cout);
  }
  return y;
}

/// Accumulates dw/db; writes dx when non-null.
template <typename S>
void conv3d_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy, int stride,
                     int pad, Tensor<S>* dx, Tensor<S>& dw, Tensor<S>& db) {
  const Index N = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const Index Cout = w.dim(0);
  const int k = static_cast<int>(w.dim(2));
  const Index OD = dy.dim(2), OH = dy.dim(3), OW = dy.dim(4);
  const Index L = OD * OH * OW;
  const Index K = C * k * k * k;

  std::vector<S> col(static_cast<std::size_t>(K * L));
  std::vector<S> dcol(dx ? static_cast<std::size_t>(K * L) : 0);
  using Map = Eigen::Map<typename Tensor<S>::MatrixRM>;
  using CMap = Eigen::Map<const typename Tensor<S>::MatrixRM>;
  CMap wm(w.data(), Cout, K);
  Map dwm(dw.data(), Cout, K);
  Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> dbm(db.data(), Cout);
  if (dx) dx->flat().setZero();
  for (Index n = 0; n < N; ++n) {
    detail::im2col(x.data() + n * C * D * H * W, C, D, H, W, k, stride, pad, OD, OH, OW,
                   col.data());
    CMap cm(col.data(), K, L);
    CMap dym(dy.data() + n * Cout * L, Cout, L);
    dwm.noalias() += dym * cm.transpose();
    dbm.noalias() += dym.rowwise().sum();
    if (dx) {
      Map dcm(dcol.data(), K, L);
      dcm.noalias() = wm.transpose() * dym;
      detail::col2im_add(dcol.data(), C, D, H, W, k, stride, pad, OD, OH, OW,
                         dx->data() + n * C * D * H * W);
    }
  }
}

// ---------------------------------------------------------------------------
// Instance normalization: per-sample, per-channel over spatial voxels.

template <typename S>
struct NormStats {
  Tensor<S> mean;     // (N, C) or (T) for layer norm
  Tensor<S> inv_std;  // same shape
};

template <typename S>
Tensor<S> instance_norm_forward(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                                S eps, NormStats<S>& stats) {
  const Index N = x.dim(0), C = x.dim(1);
  const Index M = x.size() / (N * C);
  Tensor<S> y(x.shape());
  stats.mean = Tensor<S>({N, C});
  stats.inv_std = Tensor<S>({N, C});
  for (Index n = 0; n < N; ++n) {
    for (Index c = 0; c < C; ++c) {
      const S* xs = x.data() + (n * C + c) * M;
      S* ys = y.data() + (n * C + c) * M;
      Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> xm(xs, M);
      const S mu = xm.mean();
      const S var = (xm - mu).square().mean();
      const S istd = S(1) / std::sqrt(var + eps);
      stats.mean[n * C + c] = mu;
      stats.inv_std[n * C + c] = istd;
      Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> ym(ys, M);
      ym = (xm - mu) * istd * gamma[c] + beta[c];
    }
  }
  return y;
}

template <typename S>
void instance_norm_backward(const Tensor<S>& x, const Tensor<S>& gamma, const NormStats<S>& stats,
                            const Tensor<S>& dy, Tensor<S>& dx, Tensor<S>& dgamma,
                            Tensor<S>& dbeta) {
  const Index N = x.dim(0), C = x.dim(1);
  const Index M = x.size() / (N * C);
  for (Index n = 0; n < N; ++n) {
    for (Index c = 0; c < C; ++c) {
      const Index off = (n * C + c) * M;
      Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> xm(x.data() + off, M);
      Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> dym(dy.data() + off, M);
      Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> dxm(dx.data() + off, M);
      const S mu = stats.mean[n * C + c];
      const S istd = stats.inv_std[n * C + c];
      const auto xhat = ((xm - mu) * istd).eval();
      dgamma[c] += (dym * xhat).sum();
      dbeta[c] += dym.sum();
      const auto dxhat = (dym * gamma[c]).eval();
      const S m1 = dxhat.mean();
      const S m2 = (dxhat * xhat).mean();
      dxm = (dxhat - m1 - xhat * m2) * istd;
    }
  }
}

// ---------------------------------------------------------------------------
// Pointwise activations.

template <typename S>
Tensor<S> leaky_relu_forward(const Tensor<S>& x, S slope) {
  Tensor<S> y(x.shape());
  y.flat() = (x.flat() >= S(0)).select(x.flat(), x.flat() * slope);
  return y;
}

/// Mask recovered from the output sign (slope preserves sign).
template <typename S>
Tensor<S> leaky_relu_backward(const Tensor<S>& y, const Tensor<S>& dy, S slope) {
  Tensor<S> dx(y.shape());
  dx.flat() = (y.flat() >= S(0)).select(dy.flat(), dy.flat() * slope);
  return dx;
}

template <typename S>
inline S sigmoid(S z) {
  if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
  const S e = std::exp(z);
  return e / (S(1) + e);
}

template <typename S>
Tensor<S> gelu_forward(const Tensor<S>& x) {
  Tensor<S> y(x.shape());
  const S inv_sqrt2 = S(0.70710678118654752440);
  for (Index i = 0; i < x.size(); ++i)
    y[i] = S(0.5) * x[i] * (S(1) + std::erf(x[i] * inv_sqrt2));
  return y;
}

template <typename S>
Tensor<S> gelu_backward(const Tensor<S>& x, const Tensor<S>& dy) {
  Tensor<S> dx(x.shape());
  const S inv_sqrt2 = S(0.70710678118654752440);
  const S inv_sqrt2pi = S(0.39894228040143267794);
  for (Index i = 0; i < x.size(); ++i) {
    const S cdf = S(0.5) * (S(1) + std::erf(x[i] * inv_sqrt2));
    const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * x[i] * x[i]);
    dx[i] = dy[i] * (cdf + x[i] * pdf);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Token-space linear algebra.

/// y (T, out) = x (T, in) * w^T + b, with w (out, in).
template <typename S>
Tensor<S> linear_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  const Index T = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in) throw std::invalid_argument("linear: shape mismatch");
  Tensor<S> y({T, out});
  y.matrix(T, out).noalias() = x.matrix(T, in) * w.matrix(out, in).transpose();
  y.matrix(T, out).rowwise() +=
      Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(b.data(), out);
  return y;
}

template <typename S>
void linear_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy, Tensor<S>* dx,
                     Tensor<S>& dw, Tensor<S>& db) {
  const Index T = x.dim(0), in = x.dim(1), out = w.dim(0);
  dw.matrix(out, in).noalias() += dy.matrix(T, out).transpose() * x.matrix(T, in);
  Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(db.data(), out).noalias() +=
      dy.matrix(T, out).colwise().sum().transpose();
  if (dx) dx->matrix(T, in).noalias() = dy.matrix(T, out) * w.matrix(out, in);
}

template <typename S>
Tensor<S> layer_norm_forward(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                             S eps, NormStats<S>& stats) {
  const Index T = x.dim(0), F = x.dim(1);
  Tensor<S> y({T, F});
  stats.mean = Tensor<S>({T});
  stats.inv_std = Tensor<S>({T});
  Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> g(gamma.data(), F);
  Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> be(beta.data(), F);
  for (Index t = 0; t < T; ++t) {
    Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> xm(x.data() + t * F, F);
    Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> ym(y.data() + t * F, F);
    const S mu = xm.mean();
    const S var = (xm - mu).square().mean();
    const S istd = S(1) / std::sqrt(var + eps);
    stats.mean[t] = mu;
    stats.inv_std[t] = istd;
    ym = (xm - mu) * istd * g + be;
  }
  return y;
}

template <typename S>
void layer_norm_backward(const Tensor<S>& x, const Tensor<S>& gamma, const NormStats<S>& stats,
                         const Tensor<S>& dy, Tensor<S>& dx, Tensor<S>& dgamma, Tensor<S>& dbeta) {
  const Index T = x.dim(0), F = x.dim(1);
  Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> g(gamma.data(), F);
  Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> dg(dgamma.data(), F);
  Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> db(dbeta.data(), F);
  for (Index t = 0; t < T; ++t) {
    Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> xm(x.data() + t * F, F);
    Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> dym(dy.data() + t * F, F);
    Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> dxm(dx.data() + t * F, F);
    const S mu = stats.mean[t];
    const S istd = stats.inv_std[t];
    const auto xhat = ((xm - mu) * istd).eval();
    dg += dym * xhat;
    db += dym;
    const auto dxhat = (dym * g).eval();
    const S m1 = dxhat.mean();
    const S m2 = (dxhat * xhat).mean();
    dxm = (dxhat - m1 - xhat * m2) * istd;
  }
}

template <typename S>
void softmax_rows_inplace(Tensor<S>& x) {
  const Index T = x.dim(0), K = x.dim(1);
  for (Index t = 0; t < T; ++t) {
    Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> r(x.data() + t * K, K);
    const S m = r.maxCoeff();
    r = (r - m).exp();
    r /= r.sum();
  }
}

// ---------------------------------------------------------------------------
// Multi-head self-attention over a (T, hidden) token matrix.

template <typename S>
struct AttentionCache {
  Tensor<S> qkv;    // (T, 3*hidden)
  Tensor<S> probs;  // (heads, T, T)
  Tensor<S> ctx;    // (T, hidden), pre output-projection
};

template <typename S>
Tensor<S> attention_forward(const Tensor<S>& x, const Tensor<S>& qkv_w, const Tensor<S>& qkv_b,
                            const Tensor<S>& out_w, const Tensor<S>& out_b, int heads,
                            AttentionCache<S>& cache) {
  const Index T = x.dim(0), hidden = x.dim(1);
  const Index dk = hidden / heads;
  const S alpha = S(1) / std::sqrt(static_cast<S>(dk));
  cache.qkv = linear_forward(x, qkv_w, qkv_b);
  cache.probs = Tensor<S>({heads, T, T});
  cache.ctx = Tensor<S>({T, hidden});

  using Stride = Eigen::Stride<Eigen::Dynamic, 1>;
  using MapRM = Eigen::Map<const typename Tensor<S>::MatrixRM, 0, Stride>;
  using MapWRM = Eigen::Map<typename Tensor<S>::MatrixRM, 0, Stride>;
  for (int h = 0; h < heads; ++h) {
    MapRM q(cache.qkv.data() + h * dk, T, dk, Stride(3 * hidden, 1));
    MapRM k(cache.qkv.data() + hidden + h * dk, T, dk, Stride(3 * hidden, 1));
    MapRM v(cache.qkv.data() + 2 * hidden + h * dk, T, dk, Stride(3 * hidden, 1));
    Tensor<S> scores({T, T});
    scores.matrix(T, T).noalias() = q * k.transpose() * alpha;
    softmax_rows_inplace(scores);
    std::copy(scores.data(), scores.data() + T * T, cache.probs.data() + h * T * T);
    MapWRM ctx(cache.ctx.data() + h * dk, T, dk, Stride(hidden, 1));
    ctx.noalias() = scores.matrix(T, T) * v;
  }
  return linear_forward(cache.ctx, out_w, out_b);
}

template <typename S>
void attention_backward(const Tensor<S>& x, const Tensor<S>& qkv_w, const Tensor<S>& out_w,
                        const AttentionCache<S>& cache, const Tensor<S>& dy, int heads,
                        Tensor<S>& dx, Tensor<S>& dqkv_w, Tensor<S>& dqkv_b, Tensor<S>& dout_w,
                        Tensor<S>& dout_b) {
  const Index T = x.dim(0), hidden = x.dim(1);
  const Index dk = hidden / heads;
  const S alpha = S(1) / std::sqrt(static_cast<S>(dk));

  Tensor<S> dctx({T, hidden});
  linear_backward(cache.ctx, out_w, dy, &dctx, dout_w, dout_b);

  Tensor<S> dqkv({T, 3 * hidden});
  using Stride = Eigen::Stride<Eigen::Dynamic, 1>;
  using MapRM = Eigen::Map<const typename Tensor<S>::MatrixRM, 0, Stride>;
  using MapWRM = Eigen::Map<typename Tensor<S>::MatrixRM, 0, Stride>;
  for (int h = 0; h < heads; ++h) {
    MapRM q(cache.qkv.data() + h * dk, T, dk, Stride(3 * hidden, 1));
    MapRM k(cache.qkv.data() + hidden + h * dk, T, dk, Stride(3 * hidden, 1));
    MapRM v(cache.qkv.data() + 2 * hidden + h * dk, T, dk, Stride(3 * hidden, 1));
    Eigen::Map<const typename Tensor<S>::MatrixRM> p(cache.probs.data() + h * T * T, T, T);
    MapRM dc(dctx.data() + h * dk, T, dk, Stride(hidden, 1));

    MapWRM dq(dqkv.data() + h * dk, T, dk, Stride(3 * hidden, 1));
    MapWRM dkm(dqkv.data() + hidden + h * dk, T, dk, Stride(3 * hidden, 1));
    MapWRM dv(dqkv.data() + 2 * hidden + h * dk, T, dk, Stride(3 * hidden, 1));

    dv.noalias() = p.transpose() * dc;
    typename Tensor<S>::MatrixRM dp = dc * v.transpose();
    // softmax backward: dS = (dP - rowsum(dP .* P)) .* P, then dA = alpha*dS
    Eigen::Matrix<S, Eigen::Dynamic, 1> rs = (dp.array() * p.array()).rowwise().sum();
    typename Tensor<S>::MatrixRM ds = ((dp.colwise() - rs).array() * p.array()).matrix() * alpha;
    dq.noalias() = ds * k;
    dkm.noalias() = ds.transpose() * q;
  }
  linear_backward(x, qkv_w, dqkv, &dx, dqkv_w, dqkv_b);
}

// ---------------------------------------------------------------------------
// Trilinear resize, align-corners=false, edge-clamped.

struct ResizeAxis {
  std::vector<Index> i0, i1;
  std::vector<double> w0, w1;
};

inline ResizeAxis resize_axis(Index in, Index out) {
  ResizeAxis a;
  a.i0.resize(out);
  a.i1.resize(out);
  a.w0.resize(out);
  a.w1.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index o = 0; o < out; ++o) {
    const double x = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double f = std::floor(x);
    const Index i0 = static_cast<Index>(f);
    const double w1 = x - f;
    a.i0[o] = std::clamp<Index>(i0, 0, in - 1);
    a.i1[o] = std::clamp<Index>(i0 + 1, 0, in - 1);
    a.w0[o] = 1.0 - w1;
    a.w1[o] = w1;
  }
  return a;
}

/// x (C, D, H, W) -> (C, out[0], out[1], out[2]).
template <typename S>
Tensor<S> trilinear_resize(const Tensor<S>& x, const std::array<Index, 3>& out) {
  const Index C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  const ResizeAxis ad = resize_axis(D, out[0]);
  const ResizeAxis ah = resize_axis(H, out[1]);
  const ResizeAxis aw = resize_axis(W, out[2]);
  Tensor<S> y({C, out[0], out[1], out[2]});
  for (Index c = 0; c < C; ++c) {
    const S* xc = x.data() + c * D * H * W;
    S* yc = y.data() + c * out[0] * out[1] * out[2];
    for (Index od = 0; od < out[0]; ++od) {
      for (Index oh = 0; oh < out[1]; ++oh) {
        for (Index ow = 0; ow < out[2]; ++ow) {
          double v = 0.0;
          for (int bd = 0; bd < 2; ++bd) {
            const Index id = bd ? ad.i1[od] : ad.i0[od];
            const double wd = bd ? ad.w1[od] : ad.w0[od];
            if (wd == 0.0) continue;
            for (int bh = 0; bh < 2; ++bh) {
              const Index ih = bh ? ah.i1[oh] : ah.i0[oh];
              const double wh = bh ? ah.w1[oh] : ah.w0[oh];
              if (wh == 0.0) continue;
              for (int bw = 0; bw < 2; ++bw) {
                const Index iw = bw ? aw.i1[ow] : aw.i0[ow];
                const double ww = bw ? aw.w1[ow] : aw.w0[ow];
                if (ww == 0.0) continue;
                v += wd * wh * ww * static_cast<double>(xc[(id * H + ih) * W + iw]);
              }
            }
          }
          yc[(od * out[1] + oh) * out[2] + ow] = static_cast<S>(v);
        }
      }
    }
  }
  return y;
}

/// Adjoint of trilinear_resize: scatters dy back onto the input grid.
template <typename S>
Tensor<S> trilinear_resize_backward(const Tensor<S>& dy, const std::array<Index, 3>& in) {
  const Index C = dy.dim(0), OD = dy.dim(1), OH = dy.dim(2), OW = dy.dim(3);
  const ResizeAxis ad = resize_axis(in[0], OD);
  const ResizeAxis ah = resize_axis(in[1], OH);
  const ResizeAxis aw = resize_axis(in[2], OW);
  Tensor<S> dx({C, in[0], in[1], in[2]});
  for (Index c = 0; c < C; ++c) {
    const S* gyc = dy.data() + c * OD * OH * OW;
    S* gxc = dx.data() + c * in[0] * in[1] * in[2];
    for (Index od = 0; od < OD; ++od) {
      for (Index oh = 0; oh < OH; ++oh) {
        for (Index ow = 0; ow < OW; ++ow) {
          const double g = static_cast<double>(gyc[(od * OH + oh) * OW + ow]);
          for (int bd = 0; bd < 2; ++bd) {
            const Index id = bd ? ad.i1[od] : ad.i0[od];
            const double wd = bd ? ad.w1[od] : ad.w0[od];
            if (wd == 0.0) continue;
            for (int bh = 0; bh < 2; ++bh) {
              const Index ih = bh ? ah.i1[oh] : ah.i0[oh];
              const double wh = bh ? ah.w1[oh] : ah.w0[oh];
              if (wh == 0.0) continue;
              for (int bw = 0; bw < 2; ++bw) {
                const Index iw = bw ? aw.i1[ow] : aw.i0[ow];
                const double ww = bw ? aw.w1[ow] : aw.w0[ow];
                if (ww == 0.0) continue;
                gxc[(id * in[1] + ih) * in[2] + iw] += static_cast<S>(wd * wh * ww * g);
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Channel concatenation for skip connections.

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
  const Index N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1);
  const Index M = a.size() / (N * Ca);
  Tensor<S> y({N, Ca + Cb, a.dim(2), a.dim(3), a.dim(4)});
  for (Index n = 0; n < N; ++n) {
    std::copy(a.data() + n * Ca * M, a.data() + (n + 1) * Ca * M, y.data() + n * (Ca + Cb) * M);
    std::copy(b.data() + n * Cb * M, b.data() + (n + 1) * Cb * M,
              y.data() + n * (Ca + Cb) * M + Ca * M);
  }
  return y;
}

template <typename S>
void split_channels(const Tensor<S>& dy, Index Ca, Tensor<S>& da, Tensor<S>& db) {
  const Index N = dy.dim(0), C = dy.dim(1);
  const Index Cb = C - Ca;
  const Index M = dy.size() / (N * C);
  da = Tensor<S>({N, Ca, dy.dim(2), dy.dim(3), dy.dim(4)});
  db = Tensor<S>({N, Cb, dy.dim(2), dy.dim(3), dy.dim(4)});
  for (Index n = 0; n < N; ++n) {
    std::copy(dy.data() + n * C * M, dy.data() + n * C * M + Ca * M, da.data() + n * Ca * M);
    std::copy(dy.data() + n * C * M + Ca * M, dy.data() + (n + 1) * C * M, db.data() + n * Cb * M);
  }
}

}  // namespace tsfm::nn
