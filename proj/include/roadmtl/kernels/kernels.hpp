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

// Data-parallel inner loops of the framework. Each kernel has a portable
// scalar reference implementation and, where the CPU supports it, an AVX2
// variant. The active table is selected once at runtime; tests compare the
// variants against the reference.
//
// Elementwise kernels and optimizer updates are required to be bitwise
// identical across variants (no fused multiply-add, same operation order).
// Reductions (gemm, dot, sum) may differ in rounding only.

#pragma once

#include <cstddef>
#include <string_view>

namespace roadmtl::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // Row-major C = alpha * op(A) * op(B) + beta * C, op(X) = X or X^T.
  // op(A) is M x K, op(B) is K x N. beta == 0 overwrites C (NaNs in C are
  // not propagated).
  void (*gemm)(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
               const double* a, int lda, const double* b, int ldb,
               double beta, double* c, int ldc);

  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // y = a * x
  void (*scale)(std::size_t n, double a, const double* x, double* y);
  // z = x + y
  void (*add)(std::size_t n, const double* x, const double* y, double* z);
  // z = x * y
  void (*mul)(std::size_t n, const double* x, const double* y, double* z);
  // gz += gy * x  (product-rule accumulation)
  void (*mul_acc)(std::size_t n, const double* gy, const double* x,
                  double* gz);

  void (*relu_forward)(std::size_t n, const double* x, double* y);
  // gx += gy where x > 0
  void (*relu_backward)(std::size_t n, const double* x, const double* gy,
                        double* gx);
  void (*leaky_relu_forward)(std::size_t n, double slope, const double* x,
                             double* y);
  void (*leaky_relu_backward)(std::size_t n, double slope, const double* x,
                              const double* gy, double* gx);

  double (*dot)(std::size_t n, const double* x, const double* y);
  double (*sum)(std::size_t n, const double* x);

  // PyTorch-convention SGD with Nesterov momentum and L2 weight decay:
  //   g' = g + wd*p ; buf = mu*buf + g' ; p -= lr * (g' + mu*buf)
  void (*sgd_nesterov)(std::size_t n, double lr, double momentum,
                       double weight_decay, double* p, const double* g,
                       double* buf);
  // Adam with bias correction factors bc1 = 1 - b1^t, bc2 = 1 - b2^t:
  //   m = b1*m + (1-b1)*g ; v = b2*v + (1-b2)*g*g
  //   p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
  void (*adam)(std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2, double* p, const double* g,
               double* m, double* v);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// Active table. First use picks AVX2 when available unless the environment
// variable ROADMTL_ISA=scalar is set.
const KernelTable& active();
Isa active_isa();
// Returns false when the requested ISA is unavailable (selection unchanged).
bool select_isa(Isa isa);

}  // namespace roadmtl::kernels
