#include "core/kernels.hpp"

#include <algorithm>
#include <vector>

#include "core/gemm.hpp"
#include "core/parallel.hpp"

namespace ts {

namespace {

// Per-image gradient partials for weights are accumulated into a fixed number
// of buckets and then combined in bucket order, which keeps the reduction
// order independent of the thread count.
constexpr int64_t kReduceParts = 8;

template <class T>
void im2col(const T* x, int64_t C, int64_t H, int64_t W, int64_t k,
            int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, T* cols) {
  const int64_t hw = Ho * Wo;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * hw;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          T* dst = row + oy * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src = x + (c * H + iy) * W;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, int64_t C, int64_t H, int64_t W, int64_t k,
                int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, T* dx) {
  const int64_t hw = Ho * Wo;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * hw;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          T* dst = dx + (c * H + iy) * W;
          const T* src = row + oy * Wo;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Var<T> conv2d(Tape<T>& tape, Var<T> input, Var<T> weight, Var<T> bias,
              const ConvSpec& spec) {
  if (spec.kernel < 1 || spec.stride < 1 || spec.in_channels < 1 || spec.out_channels < 1)
    fail(ErrorKind::invalid_argument, "conv2d: spec fields must be positive");
  const TensorT<T>& x = tape.value(input);
  const TensorT<T>& w = tape.value(weight);
  const TensorT<T>& b = tape.value(bias);
  if (x.rank() != 4)
    fail(ErrorKind::shape, "conv2d: input must be rank 4, got " + shape_str(x.shape));
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (C != spec.in_channels)
    fail(ErrorKind::shape, "conv2d: input has " + std::to_string(C) +
                               " channels, expected " + std::to_string(spec.in_channels));
  const Shape wshape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
  if (w.shape != wshape)
    fail(ErrorKind::shape, "conv2d: weight shape " + shape_str(w.shape) +
                               " does not match " + shape_str(wshape));
  if (b.shape != Shape{spec.out_channels})
    fail(ErrorKind::shape, "conv2d: bias shape " + shape_str(b.shape) +
                               " does not match [" + std::to_string(spec.out_channels) + "]");
  const int64_t k = spec.kernel, stride = spec.stride;
  const bool same = spec.padding == Padding::same;
  if (!same && (H < k || W < k))
    fail(ErrorKind::shape, "conv2d: input " + shape_str(x.shape) +
                               " is smaller than an unpadded " + std::to_string(k) +
                               "x" + std::to_string(k) + " kernel");
  const int64_t pad = same ? (k - 1) / 2 : 0;
  const int64_t pad_hi = same ? (k - 1) - pad : 0;
  const int64_t Ho = (H + pad + pad_hi - k) / stride + 1;
  const int64_t Wo = (W + pad + pad_hi - k) / stride + 1;
  const int64_t Cout = spec.out_channels;
  const int64_t kk = C * k * k;
  const int64_t hw = Ho * Wo;

  TensorT<T> out = TensorT<T>::zeros({N, Cout, Ho, Wo});
  {
    const T* xp = x.ptr();
    const T* wp = w.ptr();
    const T* bp = b.ptr();
    T* op = out.ptr();
    parallel_for(N, [&](int64_t n0, int64_t n1) {
      std::vector<T> cols(static_cast<size_t>(kk * hw));
      for (int64_t n = n0; n < n1; ++n) {
        im2col(xp + n * C * H * W, C, H, W, k, stride, pad, Ho, Wo, cols.data());
        T* on = op + n * Cout * hw;
        gemm_nn(Cout, hw, kk, wp, cols.data(), on, false);
        for (int64_t co = 0; co < Cout; ++co) {
          const T bv = bp[co];
          T* row = on + co * hw;
          for (int64_t i = 0; i < hw; ++i) row[i] += bv;
        }
      }
    });
  }

  const int32_t xid = input.id, wid = weight.id, bid = bias.id;
  return tape.emplace(
      "conv2d", std::move(out), {xid, wid, bid},
      [xid, wid, bid, N, C, H, W, k, stride, pad, Ho, Wo, Cout, kk,
       hw](Tape<T>& t, int32_t self) {
        const TensorT<T>& g = t.upstream(self);
        const TensorT<T>& x2 = t.node_value(xid);
        const TensorT<T>& w2 = t.node_value(wid);
        TensorT<T>& dx = t.grad_buf(xid);
        TensorT<T>& dw = t.grad_buf(wid);
        TensorT<T>& db = t.grad_buf(bid);
        const int64_t wsize = w2.numel();
        const int64_t parts = std::min<int64_t>(N, kReduceParts);
        std::vector<T> dw_part(static_cast<size_t>(parts * wsize), T(0));
        std::vector<double> db_part(static_cast<size_t>(parts * Cout), 0.0);
        std::vector<T> wt(static_cast<size_t>(kk * Cout));
        transpose(Cout, kk, w2.ptr(), wt.data());
        const T* xp = x2.ptr();
        const T* gp = g.ptr();
        T* dxp = dx.ptr();
        parallel_for(parts, [&](int64_t p0, int64_t p1) {
          std::vector<T> cols(static_cast<size_t>(kk * hw));
          std::vector<T> colsT(static_cast<size_t>(hw * kk));
          std::vector<T> dcols(static_cast<size_t>(kk * hw));
          for (int64_t p = p0; p < p1; ++p) {
            T* dwp = dw_part.data() + p * wsize;
            double* dbp = db_part.data() + p * Cout;
            for (int64_t n = N * p / parts; n < N * (p + 1) / parts; ++n) {
              const T* gn = gp + n * Cout * hw;
              im2col(xp + n * C * H * W, C, H, W, k, stride, pad, Ho, Wo, cols.data());
              transpose(kk, hw, cols.data(), colsT.data());
              gemm_nn(Cout, kk, hw, gn, colsT.data(), dwp, true);
              gemm_nn(kk, hw, Cout, wt.data(), gn, dcols.data(), false);
              col2im_add(dcols.data(), C, H, W, k, stride, pad, Ho, Wo,
                         dxp + n * C * H * W);
              for (int64_t co = 0; co < Cout; ++co) {
                double acc = 0.0;
                const T* row = gn + co * hw;
                for (int64_t i = 0; i < hw; ++i) acc += static_cast<double>(row[i]);
                dbp[co] += acc;
              }
            }
          }
        });
        for (int64_t p = 0; p < parts; ++p) {
          const T* dwp = dw_part.data() + p * wsize;
          for (int64_t i = 0; i < wsize; ++i) dw.data[static_cast<size_t>(i)] += dwp[i];
          for (int64_t co = 0; co < Cout; ++co)
            db.data[static_cast<size_t>(co)] += static_cast<T>(db_part[p * Cout + co]);
        }
      });
}

template <class T>
Var<T> maxpool2d(Tape<T>& tape, Var<T> input) {
  const TensorT<T>& x = tape.value(input);
  if (x.rank() != 4)
    fail(ErrorKind::shape, "maxpool2d: input must be rank 4, got " + shape_str(x.shape));
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0)
    fail(ErrorKind::shape, "maxpool2d: spatial extents must be even, got " + shape_str(x.shape));
  const int64_t Ho = H / 2, Wo = W / 2;
  TensorT<T> out = TensorT<T>::zeros({N, C, Ho, Wo});
  std::vector<int64_t> argmax(static_cast<size_t>(N * C * Ho * Wo));
  const T* xp = x.ptr();
  T* op = out.ptr();
  for (int64_t plane = 0; plane < N * C; ++plane) {
    const T* xpl = xp + plane * H * W;
    T* opl = op + plane * Ho * Wo;
    int64_t* apl = argmax.data() + plane * Ho * Wo;
    for (int64_t oy = 0; oy < Ho; ++oy) {
      for (int64_t ox = 0; ox < Wo; ++ox) {
        const int64_t base = (2 * oy) * W + 2 * ox;
        const int64_t cand[4] = {base, base + 1, base + W, base + W + 1};
        int64_t best = cand[0];
        T bv = xpl[best];
        for (int i = 1; i < 4; ++i) {
          if (xpl[cand[i]] > bv) {
            bv = xpl[cand[i]];
            best = cand[i];
          }
        }
        opl[oy * Wo + ox] = bv;
        apl[oy * Wo + ox] = plane * H * W + best;
      }
    }
  }
  const int32_t xid = input.id;
  return tape.emplace("maxpool2d", std::move(out), {xid},
                      [xid, argmax = std::move(argmax)](Tape<T>& t, int32_t self) {
                        const TensorT<T>& g = t.upstream(self);
                        TensorT<T>& dx = t.grad_buf(xid);
                        for (size_t i = 0; i < g.data.size(); ++i)
                          dx.data[static_cast<size_t>(argmax[i])] += g.data[i];
                      });
}

template <class T>
Var<T> conv_transpose2d(Tape<T>& tape, Var<T> input, Var<T> weight) {
  const TensorT<T>& x = tape.value(input);
  const TensorT<T>& w = tape.value(weight);
  if (x.rank() != 4)
    fail(ErrorKind::shape, "conv_transpose2d: input must be rank 4, got " + shape_str(x.shape));
  if (w.rank() != 4 || w.dim(2) != 2 || w.dim(3) != 2)
    fail(ErrorKind::shape, "conv_transpose2d: weight must be [in, out, 2, 2], got " + shape_str(w.shape));
  const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (w.dim(0) != Cin)
    fail(ErrorKind::shape, "conv_transpose2d: weight expects " + std::to_string(w.dim(0)) +
                               " input channels, input has " + std::to_string(Cin));
  const int64_t Cout = w.dim(1);
  const int64_t hw = H * W;
  TensorT<T> out = TensorT<T>::zeros({N, Cout, 2 * H, 2 * W});
  {
    // w viewed as [Cin, Cout*4]; wt is its transpose
    std::vector<T> wt(static_cast<size_t>(Cout * 4 * Cin));
    transpose(Cin, Cout * 4, w.ptr(), wt.data());
    const T* xp = x.ptr();
    T* op = out.ptr();
    parallel_for(N, [&](int64_t n0, int64_t n1) {
      std::vector<T> tmp(static_cast<size_t>(Cout * 4 * hw));
      for (int64_t n = n0; n < n1; ++n) {
        gemm_nn(Cout * 4, hw, Cin, wt.data(), xp + n * Cin * hw, tmp.data(), false);
        T* on = op + n * Cout * 4 * hw;
        for (int64_t co = 0; co < Cout; ++co) {
          for (int64_t dy = 0; dy < 2; ++dy) {
            for (int64_t dx2 = 0; dx2 < 2; ++dx2) {
              const T* row = tmp.data() + ((co * 2 + dy) * 2 + dx2) * hw;
              T* oc = on + co * 4 * hw;
              for (int64_t y = 0; y < H; ++y) {
                T* orow = oc + (2 * y + dy) * 2 * W + dx2;
                const T* srow = row + y * W;
                for (int64_t xx = 0; xx < W; ++xx) orow[2 * xx] = srow[xx];
              }
            }
          }
        }
      }
    });
  }
  const int32_t xid = input.id, wid = weight.id;
  return tape.emplace(
      "conv_transpose2d", std::move(out), {xid, wid},
      [xid, wid, N, Cin, H, W, Cout, hw](Tape<T>& t, int32_t self) {
        const TensorT<T>& g = t.upstream(self);
        const TensorT<T>& x2 = t.node_value(xid);
        const TensorT<T>& w2 = t.node_value(wid);
        TensorT<T>& dx = t.grad_buf(xid);
        TensorT<T>& dw = t.grad_buf(wid);
        const int64_t wsize = w2.numel();
        const int64_t parts = std::min<int64_t>(N, kReduceParts);
        std::vector<T> dw_part(static_cast<size_t>(parts * wsize), T(0));
        const T* xp = x2.ptr();
        const T* wp = w2.ptr();
        const T* gp = g.ptr();
        T* dxp = dx.ptr();
        parallel_for(parts, [&](int64_t p0, int64_t p1) {
          std::vector<T> dtmp(static_cast<size_t>(Cout * 4 * hw));
          std::vector<T> dtmpT(static_cast<size_t>(hw * Cout * 4));
          for (int64_t p = p0; p < p1; ++p) {
            T* dwp = dw_part.data() + p * wsize;
            for (int64_t n = N * p / parts; n < N * (p + 1) / parts; ++n) {
              const T* gn = gp + n * Cout * 4 * hw;
              for (int64_t co = 0; co < Cout; ++co) {
                for (int64_t dy = 0; dy < 2; ++dy) {
                  for (int64_t dx2 = 0; dx2 < 2; ++dx2) {
                    T* row = dtmp.data() + ((co * 2 + dy) * 2 + dx2) * hw;
                    const T* gc = gn + co * 4 * hw;
                    for (int64_t y = 0; y < H; ++y) {
                      const T* grow = gc + (2 * y + dy) * 2 * W + dx2;
                      T* drow = row + y * W;
                      for (int64_t xx = 0; xx < W; ++xx) drow[xx] = grow[2 * xx];
                    }
                  }
                }
              }
              gemm_nn(Cin, hw, Cout * 4, wp, dtmp.data(), dxp + n * Cin * hw, true);
              transpose(Cout * 4, hw, dtmp.data(), dtmpT.data());
              gemm_nn(Cin, Cout * 4, hw, xp + n * Cin * hw, dtmpT.data(), dwp, true);
            }
          }
        });
        for (int64_t p = 0; p < parts; ++p) {
          const T* dwp = dw_part.data() + p * wsize;
          for (int64_t i = 0; i < wsize; ++i) dw.data[static_cast<size_t>(i)] += dwp[i];
        }
      });
}

template <class T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b) {
  const TensorT<T>& av = tape.value(a);
  const TensorT<T>& bv = tape.value(b);
  if (av.rank() != 4 || bv.rank() != 4)
    fail(ErrorKind::shape, "concat_channels: inputs must be rank 4");
  if (av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) || av.dim(3) != bv.dim(3))
    fail(ErrorKind::shape, "concat_channels: incompatible shapes " + shape_str(av.shape) +
                               " vs " + shape_str(bv.shape));
  const int64_t N = av.dim(0), Ca = av.dim(1), Cb = bv.dim(1);
  const int64_t hw = av.dim(2) * av.dim(3);
  TensorT<T> out = TensorT<T>::zeros({N, Ca + Cb, av.dim(2), av.dim(3)});
  for (int64_t n = 0; n < N; ++n) {
    std::copy(av.ptr() + n * Ca * hw, av.ptr() + (n + 1) * Ca * hw,
              out.ptr() + n * (Ca + Cb) * hw);
    std::copy(bv.ptr() + n * Cb * hw, bv.ptr() + (n + 1) * Cb * hw,
              out.ptr() + n * (Ca + Cb) * hw + Ca * hw);
  }
  const int32_t aid = a.id, bid = b.id;
  return tape.emplace("concat_channels", std::move(out), {aid, bid},
                      [aid, bid, N, Ca, Cb, hw](Tape<T>& t, int32_t self) {
                        const TensorT<T>& g = t.upstream(self);
                        TensorT<T>& da = t.grad_buf(aid);
                        TensorT<T>& db = t.grad_buf(bid);
                        for (int64_t n = 0; n < N; ++n) {
                          const T* gn = g.ptr() + n * (Ca + Cb) * hw;
                          T* dan = da.ptr() + n * Ca * hw;
                          T* dbn = db.ptr() + n * Cb * hw;
                          for (int64_t i = 0; i < Ca * hw; ++i) dan[i] += gn[i];
                          for (int64_t i = 0; i < Cb * hw; ++i) dbn[i] += gn[Ca * hw + i];
                        }
                      });
}

template <class T>
Var<T> relu(Tape<T>& tape, Var<T> input) {
  const TensorT<T>& x = tape.value(input);
  TensorT<T> out = x;
  for (auto& v : out.data)
    if (v < T(0)) v = T(0);
  const int32_t xid = input.id;
  return tape.emplace("relu", std::move(out), {xid}, [xid](Tape<T>& t, int32_t self) {
    const TensorT<T>& g = t.upstream(self);
    const TensorT<T>& x2 = t.node_value(xid);
    TensorT<T>& dx = t.grad_buf(xid);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (x2.data[i] > T(0)) dx.data[i] += g.data[i];
  });
}

template <class T>
Var<T> sigmoid(Tape<T>& tape, Var<T> input) {
  const TensorT<T>& x = tape.value(input);
  TensorT<T> out = x;
  for (auto& v : out.data) v = sigmoid_scalar(v);
  const int32_t xid = input.id;
  return tape.emplace("sigmoid", std::move(out), {xid}, [xid](Tape<T>& t, int32_t self) {
    const TensorT<T>& g = t.upstream(self);
    const TensorT<T>& s = t.node_value(self);
    TensorT<T>& dx = t.grad_buf(xid);
    for (size_t i = 0; i < g.data.size(); ++i)
      dx.data[i] += g.data[i] * s.data[i] * (T(1) - s.data[i]);
  });
}

template <class T>
TensorT<T> sigmoid_values(const TensorT<T>& logits) {
  TensorT<T> out = logits;
  for (auto& v : out.data) v = sigmoid_scalar(v);
  return out;
}

#define TS_KERNEL_DEF(T)                                                        \
  template Var<T> conv2d<T>(Tape<T>&, Var<T>, Var<T>, Var<T>, const ConvSpec&); \
  template Var<T> maxpool2d<T>(Tape<T>&, Var<T>);                               \
  template Var<T> conv_transpose2d<T>(Tape<T>&, Var<T>, Var<T>);                \
  template Var<T> concat_channels<T>(Tape<T>&, Var<T>, Var<T>);                 \
  template Var<T> relu<T>(Tape<T>&, Var<T>);                                    \
  template Var<T> sigmoid<T>(Tape<T>&, Var<T>);                                 \
  template TensorT<T> sigmoid_values<T>(const TensorT<T>&);
TS_KERNEL_DEF(float)
TS_KERNEL_DEF(double)
#undef TS_KERNEL_DEF

}  // namespace ts
