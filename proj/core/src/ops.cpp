// Copyright 2026 The SINet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sinet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gemm.hpp"
#include "sinet/errors.hpp"

namespace sinet {

namespace {

thread_local MaddCounter* active_counter = nullptr;

void count_madds(std::uint64_t n) {
  if (active_counter) active_counter->add(n);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " +
                         std::to_string(rank) + ", got shape " +
                         t.shape().str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch " +
                         a.shape().str() + " vs " + b.shape().str());
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w;     // input
  std::size_t m, kh, kw;      // weight
  std::size_t ho, wo;         // output
  std::size_t groups, cg, mg; // per-group widths
  int stride, pad;

  std::size_t col_rows() const { return cg * kh * kw; }
  std::size_t col_cols() const { return ho * wo; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad == 0;
  }
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w,
                           const ConvParams& p) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  if (p.stride < 1) throw DimensionError("conv2d stride must be >= 1");
  if (p.padding < 0) throw DimensionError("conv2d padding must be >= 0");
  if (p.groups < 1) throw GroupError("conv2d groups must be >= 1");
  ConvGeometry g{};
  g.n = x.dim(0);
  g.c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.m = w.dim(0);
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.groups = static_cast<std::size_t>(p.groups);
  g.stride = p.stride;
  g.pad = p.padding;
  if (g.kh != g.kw || g.kh % 2 == 0) {
    throw DimensionError("conv2d requires square odd kernels, got " +
                         w.shape().str());
  }
  if (g.c % g.groups != 0) {
    throw GroupError("conv2d input channels " + std::to_string(g.c) +
                     " not divisible by groups " + std::to_string(g.groups));
  }
  if (g.m % g.groups != 0) {
    throw GroupError("conv2d output channels " + std::to_string(g.m) +
                     " not divisible by groups " + std::to_string(g.groups));
  }
  g.cg = g.c / g.groups;
  g.mg = g.m / g.groups;
  if (w.dim(1) != g.cg) {
    throw DimensionError("conv2d weight " + w.shape().str() +
                         " expects " + std::to_string(w.dim(1) * g.groups) +
                         " input channels, got " + std::to_string(g.c));
  }
  const long span_h = static_cast<long>(g.h) + 2 * g.pad;
  if (span_h < static_cast<long>(g.kh)) {
    throw DimensionError("conv2d kernel larger than padded input");
  }
  g.ho = conv_out_extent(g.h, static_cast<int>(g.kh), g.stride, g.pad);
  g.wo = conv_out_extent(g.w, static_cast<int>(g.kw), g.stride, g.pad);
  if (p.bias) {
    const Tensor& b = p.bias->value();
    if (b.rank() != 1 || b.dim(0) != g.m) {
      throw DimensionError("conv2d bias must have shape (" +
                           std::to_string(g.m) + ")");
    }
  }
  return g;
}

// Gathers input group `grp` of sample `n` into a (cg*k*k) x (ho*wo) matrix.
void im2col(const ConvGeometry& g, const double* x, std::size_t n,
            std::size_t grp, double* cols) {
  const std::size_t P = g.col_cols();
  for (std::size_t ci = 0; ci < g.cg; ++ci) {
    const double* plane = x + ((n * g.c) + grp * g.cg + ci) * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad +
                          static_cast<long>(ky);
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad +
                            static_cast<long>(kx);
            const bool inside = iy >= 0 && ix >= 0 &&
                                iy < static_cast<long>(g.h) &&
                                ix < static_cast<long>(g.w);
            row[oy * g.wo + ox] = inside ? plane[iy * g.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* cols, std::size_t n,
            std::size_t grp, double* dx) {
  const std::size_t P = g.col_cols();
  for (std::size_t ci = 0; ci < g.cg; ++ci) {
    double* plane = dx + ((n * g.c) + grp * g.cg + ci) * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad +
                          static_cast<long>(ky);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad +
                            static_cast<long>(kx);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            plane[iy * g.w + ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

// Splits a shape around axis 1 into outer (axis 0) and inner (axes 2..).
std::size_t inner_extent(const Shape& s) {
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s.rank(); ++i) inner *= s[i];
  return inner;
}

}  // namespace

MaddCountScope::MaddCountScope(MaddCounter& counter)
    : previous_(active_counter) {
  active_counter = &counter;
}

MaddCountScope::~MaddCountScope() { active_counter = previous_; }

std::size_t conv_out_extent(std::size_t in, int kernel, int stride,
                            int padding) {
  const long span = static_cast<long>(in) + 2L * padding - kernel;
  if (span < 0 || stride < 1) {
    throw DimensionError("convolution output extent < 1 for input " +
                         std::to_string(in));
  }
  return static_cast<std::size_t>(span / stride + 1);
}

Var conv2d(const Var& input, const ConvParams& p) {
  Tape& tape = p.bias ? common_tape({input, p.weight, *p.bias})
                      : common_tape({input, p.weight});
  const Tensor& x = input.value();
  const Tensor& w = p.weight.value();
  const ConvGeometry g = conv_geometry(x, w, p);

  Tensor out(Shape{g.n, g.m, g.ho, g.wo});
  const std::size_t K = g.col_rows();
  const std::size_t P = g.col_cols();
  std::vector<double> cols(g.pointwise() ? 0 : K * P);
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      const double* col_ptr;
      if (g.pointwise()) {
        col_ptr = x.data().data() + (n * g.c + grp * g.cg) * g.h * g.w;
      } else {
        im2col(g, x.data().data(), n, grp, cols.data());
        col_ptr = cols.data();
      }
      const double* wg = w.data().data() + grp * g.mg * K;
      double* yg = out.data().data() + (n * g.m + grp * g.mg) * P;
      detail::gemm_nn(g.mg, P, K, wg, col_ptr, yg);
      count_madds(static_cast<std::uint64_t>(g.mg) * P * K);
    }
  }
  if (p.bias) {
    const Tensor& b = p.bias->value();
    for (std::size_t n = 0; n < g.n; ++n) {
      for (std::size_t m = 0; m < g.m; ++m) {
        double* y = out.data().data() + (n * g.m + m) * P;
        for (std::size_t i = 0; i < P; ++i) y[i] += b[m];
      }
    }
  }

  std::vector<Var> inputs{input, p.weight};
  if (p.bias) inputs.push_back(*p.bias);
  const Var weight = p.weight;
  const std::optional<Var> bias = p.bias;
  return tape.record(
      std::move(out), inputs,
      [input, weight, bias, g](const Tensor& dy, Tape& t) {
        const Tensor& x = input.value();
        const Tensor& w = weight.value();
        const std::size_t K = g.col_rows();
        const std::size_t P = g.col_cols();
        const bool want_x = input.requires_grad();
        const bool want_w = weight.requires_grad();
        Tensor dx(x.shape());
        Tensor dw(w.shape());
        std::vector<double> cols(K * P);
        std::vector<double> dcols(K * P);
        for (std::size_t n = 0; n < g.n; ++n) {
          for (std::size_t grp = 0; grp < g.groups; ++grp) {
            const double* dyg = dy.data().data() + (n * g.m + grp * g.mg) * P;
            if (want_w) {
              const double* col_ptr;
              if (g.pointwise()) {
                col_ptr = x.data().data() + (n * g.c + grp * g.cg) * g.h * g.w;
              } else {
                im2col(g, x.data().data(), n, grp, cols.data());
                col_ptr = cols.data();
              }
              detail::gemm_nt(g.mg, K, P, dyg, col_ptr,
                              dw.data().data() + grp * g.mg * K);
            }
            if (want_x) {
              const double* wg = w.data().data() + grp * g.mg * K;
              if (g.pointwise()) {
                double* dxg =
                    dx.data().data() + (n * g.c + grp * g.cg) * g.h * g.w;
                detail::gemm_tn(K, P, g.mg, wg, dyg, dxg);
              } else {
                std::fill(dcols.begin(), dcols.end(), 0.0);
                detail::gemm_tn(K, P, g.mg, wg, dyg, dcols.data());
                col2im(g, dcols.data(), n, grp, dx.data().data());
              }
            }
          }
        }
        if (want_x) t.accumulate(input, dx);
        if (want_w) t.accumulate(weight, dw);
        if (bias && bias->requires_grad()) {
          Tensor db(Shape{g.m});
          for (std::size_t n = 0; n < g.n; ++n) {
            for (std::size_t m = 0; m < g.m; ++m) {
              const double* d = dy.data().data() + (n * g.m + m) * P;
              for (std::size_t i = 0; i < P; ++i) db[m] += d[i];
            }
          }
          t.accumulate(*bias, db);
        }
      });
}

Var relu6(const Var& x) {
  Tape& tape = common_tape({x});
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::min(std::max(v[i], 0.0), 6.0);
  }
  return tape.record(std::move(out), {x}, [x](const Tensor& dy, Tape& t) {
    const Tensor& v = x.value();
    Tensor dx(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) {
      dx[i] = (v[i] > 0.0 && v[i] < 6.0) ? dy[i] : 0.0;
    }
    t.accumulate(x, dx);
  });
}

Var sigmoid(const Var& x) {
  Tape& tape = common_tape({x});
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = v[i];
    out[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                    : std::exp(z) / (1.0 + std::exp(z));
  }
  Tensor saved = out;
  return tape.record(std::move(out), {x},
                     [x, y = std::move(saved)](const Tensor& dy, Tape& t) {
                       Tensor dx(y.shape());
                       for (std::size_t i = 0; i < y.size(); ++i) {
                         dx[i] = dy[i] * y[i] * (1.0 - y[i]);
                       }
                       t.accumulate(x, dx);
                     });
}

Var softmax(const Var& x) {
  Tape& tape = common_tape({x});
  const Tensor& v = x.value();
  require_rank(v, 2, "softmax");
  const std::size_t rows = v.dim(0), cols = v.dim(1);
  Tensor out(v.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = v.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  Tensor saved = out;
  return tape.record(
      std::move(out), {x},
      [x, y = std::move(saved), rows, cols](const Tensor& dy, Tape& t) {
        Tensor dx(y.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            dot += dy[r * cols + c] * y[r * cols + c];
          }
          for (std::size_t c = 0; c < cols; ++c) {
            dx[r * cols + c] = y[r * cols + c] * (dy[r * cols + c] - dot);
          }
        }
        t.accumulate(x, dx);
      });
}

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta,
                BatchNormState& state, Mode mode) {
  Tape& tape = common_tape({x, gamma, beta});
  const Tensor& v = x.value();
  require_rank(v, 4, "batchnorm2d");
  const std::size_t N = v.dim(0), C = v.dim(1), HW = v.dim(2) * v.dim(3);
  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  if (gm.size() != C || bt.size() != C) {
    throw DimensionError("batchnorm2d gamma/beta length must equal channels " +
                         std::to_string(C));
  }
  if (state.running_mean.size() != C || state.running_var.size() != C) {
    throw DimensionError("batchnorm2d running stats length must equal " +
                         std::to_string(C));
  }

  const double count = static_cast<double>(N * HW);
  Tensor mean(Shape{C}), inv_std(Shape{C});
  if (mode == Mode::Train) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const double* p = v.data().data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) s += p[i];
      }
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const double* p = v.data().data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / count;
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      const double unbiased = count > 1 ? ss / (count - 1) : var;
      state.running_mean[c] =
          (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu;
      state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] +
                             state.momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  Tensor xhat(v.shape()), out(v.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const double h = (v[off + i] - mean[c]) * inv_std[c];
        xhat[off + i] = h;
        out[off + i] = gm[c] * h + bt[c];
      }
    }
  }

  const bool batch_stats = mode == Mode::Train;
  return tape.record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std, N, C, HW, count,
       batch_stats](const Tensor& dy, Tape& t) {
        const Tensor& gm = gamma.value();
        Tensor dgamma(Shape{C}), dbeta(Shape{C});
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              dbeta[c] += dy[off + i];
              dgamma[c] += dy[off + i] * xhat[off + i];
            }
          }
        }
        if (x.requires_grad()) {
          Tensor dx(xhat.shape());
          for (std::size_t c = 0; c < C; ++c) {
            const double scale = gm[c] * inv_std[c];
            for (std::size_t n = 0; n < N; ++n) {
              const std::size_t off = (n * C + c) * HW;
              for (std::size_t i = 0; i < HW; ++i) {
                if (batch_stats) {
                  dx[off + i] = scale / count *
                                (count * dy[off + i] - dbeta[c] -
                                 xhat[off + i] * dgamma[c]);
                } else {
                  dx[off + i] = scale * dy[off + i];
                }
              }
            }
          }
          t.accumulate(x, dx);
        }
        t.accumulate(gamma, dgamma);
        t.accumulate(beta, dbeta);
      });
}

Var global_avg_pool(const Var& x) {
  Tape& tape = common_tape({x});
  const Tensor& v = x.value();
  require_rank(v, 4, "global_avg_pool");
  const std::size_t N = v.dim(0), C = v.dim(1), HW = v.dim(2) * v.dim(3);
  Tensor out(Shape{N, C});
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    double s = 0.0;
    for (std::size_t i = 0; i < HW; ++i) s += v[nc * HW + i];
    out[nc] = s / static_cast<double>(HW);
  }
  return tape.record(std::move(out), {x},
                     [x, N, C, HW](const Tensor& dy, Tape& t) {
                       Tensor dx(x.value().shape());
                       const double inv = 1.0 / static_cast<double>(HW);
                       for (std::size_t nc = 0; nc < N * C; ++nc) {
                         for (std::size_t i = 0; i < HW; ++i) {
                           dx[nc * HW + i] = dy[nc] * inv;
                         }
                       }
                       t.accumulate(x, dx);
                     });
}

Var fully_connected(const Var& x, const Var& w, const std::optional<Var>& b) {
  Tape& tape = b ? common_tape({x, w, *b}) : common_tape({x, w});
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_rank(xv, 2, "fully_connected input");
  require_rank(wv, 2, "fully_connected weight");
  const std::size_t N = xv.dim(0), D = xv.dim(1), E = wv.dim(1);
  if (wv.dim(0) != D) {
    throw DimensionError("fully_connected inner dimension mismatch: input " +
                         xv.shape().str() + ", weight " + wv.shape().str());
  }
  if (b && (b->value().rank() != 1 || b->value().dim(0) != E)) {
    throw DimensionError("fully_connected bias must have shape (" +
                         std::to_string(E) + ")");
  }
  Tensor out(Shape{N, E});
  detail::gemm_nn(N, E, D, xv.data().data(), wv.data().data(),
                  out.data().data());
  count_madds(static_cast<std::uint64_t>(N) * D * E);
  if (b) {
    const Tensor& bv = b->value();
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t e = 0; e < E; ++e) out[n * E + e] += bv[e];
    }
  }
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(*b);
  return tape.record(
      std::move(out), inputs, [x, w, b, N, D, E](const Tensor& dy, Tape& t) {
        if (x.requires_grad()) {
          Tensor dx(Shape{N, D});
          detail::gemm_nt(N, D, E, dy.data().data(), w.value().data().data(),
                          dx.data().data());
          t.accumulate(x, dx);
        }
        if (w.requires_grad()) {
          Tensor dw(Shape{D, E});
          detail::gemm_tn(D, E, N, x.value().data().data(), dy.data().data(),
                          dw.data().data());
          t.accumulate(w, dw);
        }
        if (b && b->requires_grad()) {
          Tensor db(Shape{E});
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t e = 0; e < E; ++e) db[e] += dy[n * E + e];
          }
          t.accumulate(*b, db);
        }
      });
}

Var concat_channels(std::initializer_list<Var> xs) {
  return concat_channels(std::span<const Var>(xs.begin(), xs.size()));
}

Var concat_channels(std::span<const Var> xs) {
  if (xs.empty()) throw DimensionError("concat_channels needs >= 1 input");
  Tape& tape = xs.front().tape();
  const Shape& first = xs.front().shape();
  if (first.rank() < 2) throw DimensionError("concat_channels needs rank >= 2");
  const std::size_t outer = first[0];
  const std::size_t inner = inner_extent(first);
  std::size_t total_c = 0;
  std::vector<std::size_t> widths;
  for (const auto& v : xs) {
    if (&v.tape() != &tape) throw TapeError("operands belong to different tapes");
    const Shape& s = v.shape();
    bool ok = s.rank() == first.rank() && s[0] == outer;
    for (std::size_t i = 2; ok && i < s.rank(); ++i) ok = s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat_channels shape mismatch " + first.str() +
                           " vs " + s.str());
    }
    widths.push_back(s[1]);
    total_c += s[1];
  }
  std::vector<std::size_t> dims = first.dims();
  dims[1] = total_c;
  Tensor out{Shape(dims)};
  for (std::size_t n = 0; n < outer; ++n) {
    std::size_t c0 = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Tensor& v = xs[k].value();
      const std::size_t len = widths[k] * inner;
      std::copy_n(v.data().data() + n * len, len,
                  out.data().data() + (n * total_c + c0) * inner);
      c0 += widths[k];
    }
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return tape.record(
      std::move(out), inputs,
      [inputs, widths, outer, inner, total_c](const Tensor& dy, Tape& t) {
        std::size_t c0 = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          if (inputs[k].requires_grad()) {
            Tensor dx(inputs[k].shape());
            const std::size_t len = widths[k] * inner;
            for (std::size_t n = 0; n < outer; ++n) {
              std::copy_n(dy.data().data() + (n * total_c + c0) * inner, len,
                          dx.data().data() + n * len);
            }
            t.accumulate(inputs[k], dx);
          }
          c0 += widths[k];
        }
      });
}

std::vector<Var> split_channels(const Var& x, std::size_t groups) {
  Tape& tape = common_tape({x});
  // By value: recording below may reallocate the tape's storage.
  const Shape s = x.shape();
  if (s.rank() < 2) throw DimensionError("split_channels needs rank >= 2");
  if (groups == 0 || s[1] % groups != 0) {
    throw GroupError("split_channels: " + std::to_string(s[1]) +
                     " channels not divisible by " + std::to_string(groups));
  }
  const std::size_t outer = s[0], C = s[1], inner = inner_extent(s);
  const std::size_t cg = C / groups;
  std::vector<Var> parts;
  parts.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::size_t> dims = s.dims();
    dims[1] = cg;
    Tensor out{Shape(dims)};
    const Tensor& v = x.value();
    for (std::size_t n = 0; n < outer; ++n) {
      std::copy_n(v.data().data() + (n * C + g * cg) * inner, cg * inner,
                  out.data().data() + n * cg * inner);
    }
    parts.push_back(tape.record(
        std::move(out), {x},
        [x, g, outer, C, cg, inner](const Tensor& dy, Tape& t) {
          Tensor dx(x.shape());
          for (std::size_t n = 0; n < outer; ++n) {
            std::copy_n(dy.data().data() + n * cg * inner, cg * inner,
                        dx.data().data() + (n * C + g * cg) * inner);
          }
          t.accumulate(x, dx);
        }));
  }
  return parts;
}

Var add(const Var& a, const Var& b) {
  Tape& tape = common_tape({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out = av;
  out += bv;
  return tape.record(std::move(out), {a, b}, [a, b](const Tensor& dy, Tape& t) {
    t.accumulate(a, dy);
    t.accumulate(b, dy);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = common_tape({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](const Tensor& dy, Tape& t) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor da(av.shape()), db(bv.shape());
    for (std::size_t i = 0; i < av.size(); ++i) {
      da[i] = dy[i] * bv[i];
      db[i] = dy[i] * av[i];
    }
    t.accumulate(a, da);
    t.accumulate(b, db);
  });
}

Var scale_rows(const Var& x, const Var& alpha) {
  Tape& tape = common_tape({x, alpha});
  const Tensor& xv = x.value();
  const Tensor& av = alpha.value();
  const std::size_t N = xv.dim(0);
  if (av.rank() != 2 || av.dim(0) != N || av.dim(1) != 1) {
    throw DimensionError("scale_rows expects alpha of shape (" +
                         std::to_string(N) + ", 1), got " + av.shape().str());
  }
  const std::size_t per = xv.size() / N;
  Tensor out(xv.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < per; ++i) {
      out[n * per + i] = xv[n * per + i] * av[n];
    }
  }
  return tape.record(
      std::move(out), {x, alpha}, [x, alpha, N, per](const Tensor& dy, Tape& t) {
        const Tensor& xv = x.value();
        const Tensor& av = alpha.value();
        Tensor dx(xv.shape()), da(av.shape());
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t i = 0; i < per; ++i) {
            dx[n * per + i] = dy[n * per + i] * av[n];
            da[n] += dy[n * per + i] * xv[n * per + i];
          }
        }
        t.accumulate(x, dx);
        t.accumulate(alpha, da);
      });
}

Var sum(const Var& x) {
  Tape& tape = common_tape({x});
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape.record(Tensor::scalar(s), {x}, [x](const Tensor& dy, Tape& t) {
    t.accumulate(x, Tensor(x.shape(), dy[0]));
  });
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  Tape& tape = common_tape({x});
  require_same_shape(x.value(), weights, "weighted_sum");
  double s = 0.0;
  const Tensor& v = x.value();
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * weights[i];
  return tape.record(Tensor::scalar(s), {x},
                     [x, weights](const Tensor& dy, Tape& t) {
                       Tensor dx(weights.shape());
                       for (std::size_t i = 0; i < dx.size(); ++i) {
                         dx[i] = dy[0] * weights[i];
                       }
                       t.accumulate(x, dx);
                     });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  Tape& tape = common_tape({logits});
  const Tensor& v = logits.value();
  require_rank(v, 2, "softmax_cross_entropy");
  const std::size_t N = v.dim(0), K = v.dim(1);
  if (labels.size() != N) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(N) +
                         " rows but " + std::to_string(labels.size()) +
                         " labels");
  }
  Tensor probs(v.shape());
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw DimensionError("label " + std::to_string(y) + " out of range");
    }
    const double* row = v.data().data() + n * K;
    const double mx = *std::max_element(row, row + K);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    for (std::size_t k = 0; k < K; ++k) {
      probs[n * K + k] = std::exp(row[k] - mx) / z;
    }
    loss += (mx + std::log(z)) - row[y];
  }
  loss /= static_cast<double>(N);
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.record(
      Tensor::scalar(loss), {logits},
      [logits, probs = std::move(probs), ys = std::move(ys), N, K](
          const Tensor& dy, Tape& t) {
        Tensor dx = probs;
        const double scale = dy[0] / static_cast<double>(N);
        for (std::size_t n = 0; n < N; ++n) {
          dx[n * K + static_cast<std::size_t>(ys[n])] -= 1.0;
        }
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= scale;
        t.accumulate(logits, dx);
      });
}

}  // namespace sinet
