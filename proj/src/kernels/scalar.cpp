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

#include <cmath>
#include <cstring>

#include "roadmtl/kernels/kernels.hpp"

namespace roadmtl::kernels {
namespace {

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

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  scale_c(m, n, beta, c, ldc);
  if (alpha == 0.0 || k == 0) return;
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const double av =
          alpha * (trans_a ? a[static_cast<std::size_t>(p) * lda + i]
                           : a[static_cast<std::size_t>(i) * lda + p]);
      if (av == 0.0) continue;
      if (!trans_b) {
        const double* brow = b + static_cast<std::size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j)
          crow[j] += av * b[static_cast<std::size_t>(j) * ldb + p];
      }
    }
  }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void add(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc(std::size_t n, const double* gy, const double* x, double* gz) {
  for (std::size_t i = 0; i < n; ++i) gz[i] += gy[i] * x[i];
}

void relu_forward(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* gy,
                   double* gx) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

void leaky_relu_forward(std::size_t n, double slope, const double* x,
                        double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double* x,
                         const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i)
    gx[i] += x[i] > 0.0 ? gy[i] : slope * gy[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void sgd_nesterov(std::size_t n, double lr, double momentum,
                  double weight_decay, double* p, const double* g,
                  double* buf) {
  for (std::size_t i = 0; i < n; ++i) {
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
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + one_m_b1 * g[i];
    v[i] = beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    const double denom = std::sqrt(v[i] / bc2) + eps;
    p[i] -= lr * ((m[i] / bc1) / denom);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::kScalar,   gemm,         axpy,
      scale,          add,          mul,
      mul_acc,        relu_forward, relu_backward,
      leaky_relu_forward, leaky_relu_backward,
      dot,            sum,          sgd_nesterov,
      adam};
  return table;
}

}  // namespace roadmtl::kernels
