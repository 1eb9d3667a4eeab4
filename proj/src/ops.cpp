/* Copyright 2026 The roadmtl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "roadmtl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "roadmtl/error.hpp"
#include "roadmtl/kernels/kernels.hpp"

namespace roadmtl::ops {

using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     a.shape().str() + " vs " + b.shape().str());
  }
}

struct ConvGeometry {
  int cin, h, w, kh, kw, ho, wo;
  Conv2dOptions o;
  int k() const { return cin * kh * kw; }
  int p() const { return ho * wo; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && o.stride_h == 1 && o.stride_w == 1 &&
           o.pad_h == 0 && o.pad_w == 0;
  }
};

void im2col(const ConvGeometry& g, const double* x, double* col) {
  for (int c = 0; c < g.cin; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        double* row = col + (static_cast<std::size_t>(c * g.kh + ki) * g.kw +
                             kj) * g.p();
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.o.stride_h - g.o.pad_h + ki;
          double* out = row + static_cast<std::size_t>(oh) * g.wo;
          if (ih < 0 || ih >= g.h) {
            std::fill(out, out + g.wo, 0.0);
            continue;
          }
          const double* xrow = xc + static_cast<std::size_t>(ih) * g.w;
          for (int ow = 0; ow < g.wo; ++ow) {
            const int iw = ow * g.o.stride_w - g.o.pad_w + kj;
            out[ow] = (iw >= 0 && iw < g.w) ? xrow[iw] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* dx) {
  for (int c = 0; c < g.cin; ++c) {
    double* xc = dx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const double* row =
            col + (static_cast<std::size_t>(c * g.kh + ki) * g.kw + kj) *
                      g.p();
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.o.stride_h - g.o.pad_h + ki;
          if (ih < 0 || ih >= g.h) continue;
          double* xrow = xc + static_cast<std::size_t>(ih) * g.w;
          const double* in = row + static_cast<std::size_t>(oh) * g.wo;
          for (int ow = 0; ow < g.wo; ++ow) {
            const int iw = ow * g.o.stride_w - g.o.pad_w + kj;
            if (iw >= 0 && iw < g.w) xrow[iw] += in[ow];
          }
        }
      }
    }
  }
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.c != ws.c) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) +
                     " channels, weight expects " + std::to_string(ws.c));
  }
  if (bias.defined() && (bias.numel() != static_cast<std::size_t>(ws.n))) {
    throw ShapeError("conv2d: bias size " + std::to_string(bias.numel()) +
                     " != out channels " + std::to_string(ws.n));
  }
  ConvGeometry g{xs.c,
                 xs.h,
                 xs.w,
                 ws.h,
                 ws.w,
                 conv_out_size(xs.h, ws.h, options.stride_h, options.pad_h),
                 conv_out_size(xs.w, ws.w, options.stride_w, options.pad_w),
                 options};
  if (g.ho <= 0 || g.wo <= 0) {
    throw ShapeError("conv2d: kernel " + std::to_string(ws.h) + "x" +
                     std::to_string(ws.w) + " does not fit input " +
                     xs.str());
  }
  const int cout = ws.n;
  const Shape out_shape{xs.n, cout, g.ho, g.wo};
  std::vector<double> out(out_shape.numel());
  const auto& K = kernels::active();

  std::vector<double> col;
  if (!g.is_pointwise()) col.resize(static_cast<std::size_t>(g.k()) * g.p());
  const double* xv = x.data().data();
  const double* wv = weight.data().data();
  for (int n = 0; n < xs.n; ++n) {
    const double* xn = xv + static_cast<std::size_t>(n) * xs.sample();
    const double* cols = xn;
    if (!g.is_pointwise()) {
      im2col(g, xn, col.data());
      cols = col.data();
    }
    double* on = out.data() + static_cast<std::size_t>(n) * out_shape.sample();
    K.gemm(false, false, cout, g.p(), g.k(), 1.0, wv, g.k(), cols, g.p(), 0.0,
           on, g.p());
    if (bias.defined()) {
      const double* bv = bias.data().data();
      for (int c = 0; c < cout; ++c) {
        double* plane = on + static_cast<std::size_t>(c) * g.p();
        for (int i = 0; i < g.p(); ++i) plane[i] += bv[c];
      }
    }
  }

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(out_shape, std::move(out), std::move(inputs),
                     [g, xs, cout](Node& self) {
    const auto& K = kernels::active();
    const double* gy = self.grad.data();
    const double* xv = self.input_value(0).data();
    const double* wv = self.input_value(1).data();
    double* gx = self.input_grad(0);
    double* gw = self.input_grad(1);
    double* gb = self.inputs.size() > 2 ? self.input_grad(2) : nullptr;
    const std::size_t out_sample = static_cast<std::size_t>(cout) * g.p();
    std::vector<double> col;
    std::vector<double> dcol;
    if (!g.is_pointwise()) {
      if (gw) col.resize(static_cast<std::size_t>(g.k()) * g.p());
      if (gx) dcol.resize(static_cast<std::size_t>(g.k()) * g.p());
    }
    for (int n = 0; n < xs.n; ++n) {
      const double* gyn = gy + n * out_sample;
      const double* xn = xv + static_cast<std::size_t>(n) * xs.sample();
      if (gw) {
        const double* cols = xn;
        if (!g.is_pointwise()) {
          im2col(g, xn, col.data());
          cols = col.data();
        }
        K.gemm(false, true, cout, g.k(), g.p(), 1.0, gyn, g.p(), cols, g.p(),
               1.0, gw, g.k());
      }
      if (gx) {
        double* gxn = gx + static_cast<std::size_t>(n) * xs.sample();
        if (g.is_pointwise()) {
          K.gemm(true, false, g.k(), g.p(), cout, 1.0, wv, g.k(), gyn, g.p(),
                 1.0, gxn, g.p());
        } else {
          K.gemm(true, false, g.k(), g.p(), cout, 1.0, wv, g.k(), gyn, g.p(),
                 0.0, dcol.data(), g.p());
          col2im_add(g, dcol.data(), gxn);
        }
      }
      if (gb) {
        for (int c = 0; c < cout; ++c)
          gb[c] += K.sum(static_cast<std::size_t>(g.p()),
                         gyn + static_cast<std::size_t>(c) * g.p());
      }
    }
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  double momentum, double eps) {
  const Shape& s = x.shape();
  const auto channels = static_cast<std::size_t>(s.c);
  if (gamma.numel() != channels || beta.numel() != channels ||
      running_mean.numel() != channels || running_var.numel() != channels) {
    throw ShapeError("batch_norm: parameters do not match " +
                     std::to_string(s.c) + " channels of input " + s.str());
  }
  const std::size_t plane = s.plane();
  const std::size_t count = static_cast<std::size_t>(s.n) * plane;
  const double* xv = x.data().data();
  const double* gv = gamma.data().data();
  const double* bv = beta.data().data();

  auto mean = std::make_shared<std::vector<double>>(channels);
  auto invstd = std::make_shared<std::vector<double>>(channels);
  if (training) {
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (int n = 0; n < s.n; ++n)
        acc += kernels::active().sum(plane, xv + (n * channels + c) * plane);
      const double mu = acc / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* p = xv + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      (*mean)[c] = mu;
      (*invstd)[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased =
          count > 1 ? sq / static_cast<double>(count - 1) : var;
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mu;
      rv[c] = (1.0 - momentum) * rv[c] + momentum * unbiased;
    }
  } else {
    const auto rm = running_mean.data();
    const auto rv = running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      (*mean)[c] = rm[c];
      (*invstd)[c] = 1.0 / std::sqrt(rv[c] + eps);
    }
  }

  std::vector<double> out(s.numel());
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (n * channels + c) * plane;
      const double mu = (*mean)[c];
      const double k = (*invstd)[c] * gv[c];
      for (std::size_t i = 0; i < plane; ++i)
        out[off + i] = (xv[off + i] - mu) * k + bv[c];
    }
  }

  return make_result(s, std::move(out), {x, gamma, beta},
                     [s, training, mean, invstd, channels, plane,
                      count](Node& self) {
    const double* gy = self.grad.data();
    const double* xv = self.input_value(0).data();
    const double* gv = self.input_value(1).data();
    double* gx = self.input_grad(0);
    double* gg = self.input_grad(1);
    double* gb = self.input_grad(2);
    for (std::size_t c = 0; c < channels; ++c) {
      const double mu = (*mean)[c];
      const double is = (*invstd)[c];
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += gy[off + i];
          sum_dy_xhat += gy[off + i] * (xv[off + i] - mu) * is;
        }
      }
      if (gg) gg[c] += sum_dy_xhat;
      if (gb) gb[c] += sum_dy;
      if (!gx) continue;
      const double k = gv[c] * is;
      if (training) {
        const double inv_count = 1.0 / static_cast<double>(count);
        for (int n = 0; n < s.n; ++n) {
          const std::size_t off = (n * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const double xhat = (xv[off + i] - mu) * is;
            gx[off + i] += k * (gy[off + i] - inv_count * sum_dy -
                                xhat * inv_count * sum_dy_xhat);
          }
        }
      } else {
        for (int n = 0; n < s.n; ++n) {
          const std::size_t off = (n * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) gx[off + i] += k * gy[off + i];
        }
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  kernels::active().relu_forward(out.size(), x.data().data(), out.data());
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    kernels::active().relu_backward(self.value.size(),
                                    self.input_value(0).data(),
                                    self.grad.data(), self.input_grad(0));
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x.numel());
  kernels::active().leaky_relu_forward(out.size(), slope, x.data().data(),
                                       out.data());
  return make_result(x.shape(), std::move(out), {x}, [slope](Node& self) {
    kernels::active().leaky_relu_backward(self.value.size(), slope,
                                          self.input_value(0).data(),
                                          self.grad.data(),
                                          self.input_grad(0));
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    double* gx = self.input_grad(0);
    const double* y = self.value.data();
    const double* gy = self.grad.data();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      gx[i] += gy[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor max_pool2d(const Tensor& x, int kernel_h, int kernel_w, int stride_h,
                  int stride_w) {
  const Shape& s = x.shape();
  const int ho = conv_out_size(s.h, kernel_h, stride_h, 0);
  const int wo = conv_out_size(s.w, kernel_w, stride_w, 0);
  if (ho <= 0 || wo <= 0) {
    throw ShapeError("max_pool2d: window " + std::to_string(kernel_h) + "x" +
                     std::to_string(kernel_w) + " does not fit input " +
                     s.str());
  }
  const Shape os{s.n, s.c, ho, wo};
  std::vector<double> out(os.numel());
  auto argmax = std::make_shared<std::vector<std::size_t>>(os.numel());
  const double* xv = x.data().data();
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) *
                               s.plane();
      for (int i = 0; i < ho; ++i) {
        for (int j = 0; j < wo; ++j, ++o) {
          std::size_t best = base + static_cast<std::size_t>(i * stride_h) *
                                        s.w + j * stride_w;
          for (int a = 0; a < kernel_h; ++a) {
            for (int b = 0; b < kernel_w; ++b) {
              const std::size_t idx =
                  base + static_cast<std::size_t>(i * stride_h + a) * s.w +
                  (j * stride_w + b);
              if (xv[idx] > xv[best]) best = idx;
            }
          }
          out[o] = xv[best];
          (*argmax)[o] = best;
        }
      }
    }
  }
  return make_result(os, std::move(out), {x}, [argmax](Node& self) {
    double* gx = self.input_grad(0);
    const double* gy = self.grad.data();
    for (std::size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += gy[i];
  });
}

namespace {

struct AxisWeights {
  std::vector<int> i0, i1;
  std::vector<double> l1;  // weight of i1
};

AxisWeights bilinear_axis(int in, int out) {
  AxisWeights a;
  a.i0.resize(out);
  a.i1.resize(out);
  a.l1.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(src);
    if (lo > in - 1) lo = in - 1;
    const int hi = std::min(lo + 1, in - 1);
    a.i0[o] = lo;
    a.i1[o] = hi;
    a.l1[o] = src - lo;
  }
  return a;
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w) {
  const Shape& s = x.shape();
  if (out_h <= 0 || out_w <= 0) {
    throw ShapeError("upsample_bilinear: invalid output size " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  if (out_h == s.h && out_w == s.w) {
    // Exact identity; keep the graph short.
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(s, std::move(out), {x}, [](Node& self) {
      kernels::active().axpy(self.value.size(), 1.0, self.grad.data(),
                             self.input_grad(0));
    });
  }
  auto ay = std::make_shared<AxisWeights>(bilinear_axis(s.h, out_h));
  auto ax = std::make_shared<AxisWeights>(bilinear_axis(s.w, out_w));
  const Shape os{s.n, s.c, out_h, out_w};
  std::vector<double> out(os.numel());
  const double* xv = x.data().data();
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = xv + p * s.plane();
    double* dst = out.data() + p * os.plane();
    for (int i = 0; i < out_h; ++i) {
      const double* r0 = src + static_cast<std::size_t>(ay->i0[i]) * s.w;
      const double* r1 = src + static_cast<std::size_t>(ay->i1[i]) * s.w;
      const double wy1 = ay->l1[i];
      const double wy0 = 1.0 - wy1;
      for (int j = 0; j < out_w; ++j) {
        const double wx1 = ax->l1[j];
        const double wx0 = 1.0 - wx1;
        dst[static_cast<std::size_t>(i) * out_w + j] =
            wy0 * (wx0 * r0[ax->i0[j]] + wx1 * r0[ax->i1[j]]) +
            wy1 * (wx0 * r1[ax->i0[j]] + wx1 * r1[ax->i1[j]]);
      }
    }
  }
  return make_result(os, std::move(out), {x}, [s, os, ay, ax,
                                               planes](Node& self) {
    double* gx = self.input_grad(0);
    const double* gy = self.grad.data();
    for (std::size_t p = 0; p < planes; ++p) {
      double* dst = gx + p * s.plane();
      const double* src = gy + p * os.plane();
      for (int i = 0; i < os.h; ++i) {
        double* r0 = dst + static_cast<std::size_t>(ay->i0[i]) * s.w;
        double* r1 = dst + static_cast<std::size_t>(ay->i1[i]) * s.w;
        const double wy1 = ay->l1[i];
        const double wy0 = 1.0 - wy1;
        for (int j = 0; j < os.w; ++j) {
          const double g = src[static_cast<std::size_t>(i) * os.w + j];
          const double wx1 = ax->l1[j];
          const double wx0 = 1.0 - wx1;
          r0[ax->i0[j]] += g * wy0 * wx0;
          r0[ax->i1[j]] += g * wy0 * wx1;
          r1[ax->i0[j]] += g * wy1 * wx0;
          r1[ax->i1[j]] += g * wy1 * wx1;
        }
      }
    }
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape os = parts.front().shape();
  os.c = 0;
  for (const Tensor& t : parts) {
    const Shape& s = t.shape();
    if (s.n != os.n || s.h != os.h || s.w != os.w) {
      throw ShapeError("concat_channels: " + s.str() +
                       " incompatible with " + parts.front().shape().str());
    }
    os.c += s.c;
  }
  std::vector<double> out(os.numel());
  std::vector<std::size_t> sizes;
  for (int n = 0; n < os.n; ++n) {
    double* dst = out.data() + static_cast<std::size_t>(n) * os.sample();
    for (const Tensor& t : parts) {
      const std::size_t len = t.shape().sample();
      const double* src = t.data().data() + static_cast<std::size_t>(n) * len;
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  for (const Tensor& t : parts) sizes.push_back(t.shape().sample());
  return make_result(os, std::move(out), parts, [os, sizes](Node& self) {
    for (int n = 0; n < os.n; ++n) {
      const double* src =
          self.grad.data() + static_cast<std::size_t>(n) * os.sample();
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (double* g = self.input_grad(k)) {
          kernels::active().axpy(sizes[k], 1.0, src,
                                 g + static_cast<std::size_t>(n) * sizes[k]);
        }
        src += sizes[k];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  kernels::active().add(out.size(), a.data().data(), b.data().data(),
                        out.data());
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& K = kernels::active();
    for (std::size_t k = 0; k < 2; ++k)
      if (double* g = self.input_grad(k))
        K.axpy(self.value.size(), 1.0, self.grad.data(), g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& K = kernels::active();
    if (double* g = self.input_grad(0))
      K.axpy(self.value.size(), 1.0, self.grad.data(), g);
    if (double* g = self.input_grad(1))
      K.axpy(self.value.size(), -1.0, self.grad.data(), g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  kernels::active().mul(out.size(), a.data().data(), b.data().data(),
                        out.data());
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& K = kernels::active();
    const std::size_t n = self.value.size();
    if (double* g = self.input_grad(0))
      K.mul_acc(n, self.grad.data(), self.input_value(1).data(), g);
    if (double* g = self.input_grad(1))
      K.mul_acc(n, self.grad.data(), self.input_value(0).data(), g);
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  kernels::active().scale(out.size(), s, a.data().data(), out.data());
  return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
    kernels::active().axpy(self.value.size(), s, self.grad.data(),
                           self.input_grad(0));
  });
}

Tensor flatten(const Tensor& x) {
  const Shape& s = x.shape();
  const Shape os{s.n, static_cast<int>(s.sample()), 1, 1};
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(os, std::move(out), {x}, [](Node& self) {
    kernels::active().axpy(self.value.size(), 1.0, self.grad.data(),
                           self.input_grad(0));
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.h != 1 || xs.w != 1 || xs.c != ws.c) {
    throw ShapeError("linear: input " + xs.str() + " incompatible with " +
                     std::to_string(ws.c) + " input features");
  }
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(ws.n)) {
    throw ShapeError("linear: bias size mismatch");
  }
  const int in = ws.c;
  const int outf = ws.n;
  const Shape os{xs.n, outf, 1, 1};
  std::vector<double> out(os.numel());
  // Y[N x Out] = X[N x In] * W^T
  kernels::active().gemm(false, true, xs.n, outf, in, 1.0, x.data().data(),
                         in, weight.data().data(), in, 0.0, out.data(), outf);
  if (bias.defined()) {
    const auto bv = bias.data();
    for (int n = 0; n < xs.n; ++n)
      for (int o = 0; o < outf; ++o)
        out[static_cast<std::size_t>(n) * outf + o] += bv[o];
  }
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(os, std::move(out), std::move(inputs),
                     [n = xs.n, in, outf](Node& self) {
    const auto& K = kernels::active();
    const double* gy = self.grad.data();
    if (double* gx = self.input_grad(0))
      K.gemm(false, false, n, in, outf, 1.0, gy, outf,
             self.input_value(1).data(), in, 1.0, gx, in);
    if (double* gw = self.input_grad(1))
      K.gemm(true, false, outf, in, n, 1.0, gy, outf,
             self.input_value(0).data(), in, 1.0, gw, in);
    if (self.inputs.size() > 2) {
      if (double* gb = self.input_grad(2)) {
        for (int i = 0; i < n; ++i)
          for (int o = 0; o < outf; ++o)
            gb[o] += gy[static_cast<std::size_t>(i) * outf + o];
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const double s = kernels::active().sum(x.numel(), x.data().data());
  return make_result(Shape{}, {s}, {x}, [](Node& self) {
    double* g = self.input_grad(0);
    const double gy = self.grad[0];
    const std::size_t n = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += gy;
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

}  // namespace roadmtl::ops
