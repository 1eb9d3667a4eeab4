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

// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "roadmtl/kernels/kernels.hpp"

namespace roadmtl::kernels {
namespace {

constexpr int kMr = 4;
constexpr int kNr = 8;
constexpr int kKc = 256;
constexpr int kMc = 128;
constexpr int kNc = 2048;

void scale_c(int m, int n, double beta, double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    double* row = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0) {
      std::memset(row, 0, sizeof(double) * n);
    } else if (beta != 1.0) {
      for (int j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

// Packs op(A)[i0:i0+mc, p0:p0+kc] * alpha into row panels of kMr, k-major.
void pack_a(bool trans, const double* a, int lda, int i0, int mc, int p0,
            int kc, double alpha, double* out) {
  for (int ip = 0; ip < mc; ip += kMr) {
    const int rows = std::min(kMr, mc - ip);
    for (int p = 0; p < kc; ++p) {
      for (int r = 0; r < kMr; ++r) {
        double v = 0.0;
        if (r < rows) {
          const std::size_t i = static_cast<std::size_t>(i0 + ip + r);
          const std::size_t kk = static_cast<std::size_t>(p0 + p);
          v = trans ? a[kk * lda + i] : a[i * lda + kk];
          v *= alpha;
        }
        *out++ = v;
      }
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into column panels of kNr, k-major.
void pack_b(bool trans, const double* b, int ldb, int p0, int kc, int j0,
            int nc, double* out) {
  for (int jp = 0; jp < nc; jp += kNr) {
    const int cols = std::min(kNr, nc - jp);
    for (int p = 0; p < kc; ++p) {
      const std::size_t kk = static_cast<std::size_t>(p0 + p);
      if (!trans && cols == kNr) {
        std::memcpy(out, b + kk * ldb + j0 + jp, sizeof(double) * kNr);
        out += kNr;
        continue;
      }
      for (int c = 0; c < kNr; ++c) {
        double v = 0.0;
        if (c < cols) {
          const std::size_t j = static_cast<std::size_t>(j0 + jp + c);
          v = trans ? b[j * ldb + kk] : b[kk * ldb + j];
        }
        *out++ = v;
      }
    }
  }
}

void micro_kernel(int kc, const double* ap, const double* bp, double* c,
                  int ldc, int rows, int cols) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  for (int p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d a = _mm256_broadcast_sd(ap);
    c00 = _mm256_fmadd_pd(a, b0, c00);
    c01 = _mm256_fmadd_pd(a, b1, c01);
    a = _mm256_broadcast_sd(ap + 1);
    c10 = _mm256_fmadd_pd(a, b0, c10);
    c11 = _mm256_fmadd_pd(a, b1, c11);
    a = _mm256_broadcast_sd(ap + 2);
    c20 = _mm256_fmadd_pd(a, b0, c20);
    c21 = _mm256_fmadd_pd(a, b1, c21);
    a = _mm256_broadcast_sd(ap + 3);
    c30 = _mm256_fmadd_pd(a, b0, c30);
    c31 = _mm256_fmadd_pd(a, b1, c31);
    ap += kMr;
    bp += kNr;
  }
  if (rows == kMr && cols == kNr) {
    auto acc = [&](int r, __m256d lo, __m256d hi) {
      double* row = c + static_cast<std::size_t>(r) * ldc;
      _mm256_storeu_pd(row, _mm256_add_pd(_mm256_loadu_pd(row), lo));
      _mm256_storeu_pd(row + 4, _mm256_add_pd(_mm256_loadu_pd(row + 4), hi));
    };
    acc(0, c00, c01);
    acc(1, c10, c11);
    acc(2, c20, c21);
    acc(3, c30, c31);
    return;
  }
  alignas(32) double tile[kMr][kNr];
  _mm256_store_pd(&tile[0][0], c00);
  _mm256_store_pd(&tile[0][4], c01);
  _mm256_store_pd(&tile[1][0], c10);
  _mm256_store_pd(&tile[1][4], c11);
  _mm256_store_pd(&tile[2][0], c20);
  _mm256_store_pd(&tile[2][4], c21);
  _mm256_store_pd(&tile[3][0], c30);
  _mm256_store_pd(&tile[3][4], c31);
  for (int r = 0; r < rows; ++r) {
    double* row = c + static_cast<std::size_t>(r) * ldc;
    for (int j = 0; j < cols; ++j) row[j] += tile[r][j];
  }
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  scale_c(m, n, beta, c, ldc);
  if (alpha == 0.0 || k == 0 || m == 0 || n == 0) return;

  thread_local std::vector<double> a_pack;
  thread_local std::vector<double> b_pack;
  a_pack.resize(static_cast<std::size_t>(kMc + kMr) * kKc);
  b_pack.resize(static_cast<std::size_t>(kNc + kNr) * kKc);

  for (int jc = 0; jc < n; jc += kNc) {
    const int nc = std::min(kNc, n - jc);
    for (int pc = 0; pc < k; pc += kKc) {
      const int kc = std::min(kKc, k - pc);
      pack_b(trans_b, b, ldb, pc, kc, jc, nc, b_pack.data());
      for (int ic = 0; ic < m; ic += kMc) {
        const int mc = std::min(kMc, m - ic);
        pack_a(trans_a, a, lda, ic, mc, pc, kc, alpha, a_pack.data());
        for (int jr = 0; jr < nc; jr += kNr) {
          const double* bp =
              b_pack.data() + static_cast<std::size_t>(jr / kNr) * kc * kNr;
          const int cols = std::min(kNr, nc - jr);
          for (int ir = 0; ir < mc; ir += kMr) {
            const double* ap =
                a_pack.data() + static_cast<std::size_t>(ir / kMr) * kc * kMr;
            const int rows = std::min(kMr, mc - ir);
            micro_kernel(kc, ap, bp,
                         c + static_cast<std::size_t>(ic + ir) * ldc + jc + jr,
                         ldc, rows, cols);
          }
        }
      }
    }
  }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void add(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc(std::size_t n, const double* gy, const double* x, double* gz) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t =
        _mm256_mul_pd(_mm256_loadu_pd(gy + i), _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(gz + i, _mm256_add_pd(_mm256_loadu_pd(gz + i), t));
  }
  for (; i < n; ++i) gz[i] += gy[i] * x[i];
}

void relu_forward(std::size_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_and_pd(v, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* gy,
                   double* gx) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask =
        _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d g = _mm256_loadu_pd(gx + i);
    const __m256d sum = _mm256_add_pd(g, _mm256_loadu_pd(gy + i));
    _mm256_storeu_pd(gx + i, _mm256_blendv_pd(g, sum, mask));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

void leaky_relu_forward(std::size_t n, double slope, const double* x,
                        double* y) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(_mm256_mul_pd(vs, v), v, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double* x,
                         const double* gy, double* gx) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask =
        _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d g = _mm256_loadu_pd(gy + i);
    const __m256d t = _mm256_blendv_pd(_mm256_mul_pd(vs, g), g, mask);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), t));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : slope * gy[i];
}

double hsum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(std::size_t n, const double* x) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void sgd_nesterov(std::size_t n, double lr, double momentum,
                  double weight_decay, double* p, const double* g,
                  double* buf) {
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vmu = _mm256_set1_pd(momentum);
  const __m256d vwd = _mm256_set1_pd(weight_decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pv = _mm256_loadu_pd(p + i);
    const __m256d gi =
        _mm256_add_pd(_mm256_loadu_pd(g + i), _mm256_mul_pd(vwd, pv));
    const __m256d b =
        _mm256_add_pd(_mm256_mul_pd(vmu, _mm256_loadu_pd(buf + i)), gi);
    _mm256_storeu_pd(buf + i, b);
    const __m256d step = _mm256_add_pd(gi, _mm256_mul_pd(vmu, b));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(pv, _mm256_mul_pd(vlr, step)));
  }
  for (; i < n; ++i) {
    const double gi = g[i] + weight_decay * p[i];
    buf[i] = momentum * buf[i] + gi;
    p[i] -= lr * (gi + momentum * buf[i]);
  }
}

void adam(std::size_t n, double lr, double beta1, double beta2, double eps,
          double bc1, double bc2, double* p, const double* g, double* m,
          double* v) {
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  const __m256d vb1 = _mm256_set1_pd(beta1), vb2 = _mm256_set1_pd(beta2);
  const __m256d vo1 = _mm256_set1_pd(one_m_b1), vo2 = _mm256_set1_pd(one_m_b2);
  const __m256d vbc1 = _mm256_set1_pd(bc1), vbc2 = _mm256_set1_pd(bc2);
  const __m256d veps = _mm256_set1_pd(eps), vlr = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d mv = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(vo1, gv));
    const __m256d vv =
        _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                      _mm256_mul_pd(vo2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d denom =
        _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vv, vbc2)), veps);
    const __m256d upd =
        _mm256_mul_pd(vlr, _mm256_div_pd(_mm256_div_pd(mv, vbc1), denom));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + one_m_b1 * g[i];
    v[i] = beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    const double denom = std::sqrt(v[i] / bc2) + eps;
    p[i] -= lr * ((m[i] / bc1) / denom);
  }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      Isa::kAvx2,     gemm,         axpy,
      scale,          add,          mul,
      mul_acc,        relu_forward, relu_backward,
      leaky_relu_forward, leaky_relu_backward,
      dot,            sum,          sgd_nesterov,
      adam};
  return table;
}

}  // namespace roadmtl::kernels
