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

#include "roadmtl/kernels/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

namespace roadmtl::kernels {
namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  // Exercise the comparison kernels on exact zeros and negative zeros too.
  if (n > 3) {
    v[1] = 0.0;
    v[2] = -0.0;
  }
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Triple-loop oracle, independent of both kernel tables.
void naive_gemm(bool ta, bool tb, int m, int n, int k, double alpha,
                const std::vector<double>& a, int lda,
                const std::vector<double>& b, int ldb, double beta,
                std::vector<double>& c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (int p = 0; p < k; ++p) {
        const double av = ta ? a[p * lda + i] : a[i * lda + p];
        const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
        acc += static_cast<long double>(av) * bv;
      }
      const double prev = beta == 0.0 ? 0.0 : beta * c[i * ldc + j];
      c[i * ldc + j] = static_cast<double>(alpha * acc) + prev;
    }
  }
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t{&scalar_table()};
  if (avx2_table() != nullptr) t.push_back(avx2_table());
  return t;
}

class GemmTest : public ::testing::TestWithParam<std::tuple<bool, bool>> {};

TEST_P(GemmTest, MatchesNaiveOracle) {
  const auto [ta, tb] = GetParam();
  std::mt19937_64 rng(7);
  const int sizes[][3] = {{1, 1, 1},   {3, 5, 7},     {4, 8, 16},
                          {13, 29, 31}, {130, 9, 300}, {65, 2100, 17}};
  for (const KernelTable* table : tables()) {
    for (const auto& s : sizes) {
      const int m = s[0], n = s[1], k = s[2];
      const int lda = ta ? m : k;
      const int ldb = tb ? k : n;
      const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
      const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
      auto c0 = random_vec(static_cast<std::size_t>(m) * n, rng);
      for (double beta : {0.0, 1.0, 0.5}) {
        auto expect = c0;
        auto got = c0;
        naive_gemm(ta, tb, m, n, k, 1.5, a, lda, b, ldb, beta, expect, n);
        table->gemm(ta, tb, m, n, k, 1.5, a.data(), lda, b.data(), ldb, beta,
                    got.data(), n);
        for (std::size_t i = 0; i < got.size(); ++i) {
          ASSERT_NEAR(got[i], expect[i], 1e-12 * (1.0 + k))
              << isa_name(table->isa) << " m=" << m << " n=" << n
              << " k=" << k << " beta=" << beta;
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllTransposes, GemmTest,
                         ::testing::Combine(::testing::Bool(),
                                            ::testing::Bool()));

TEST(KernelsTest, BetaZeroDiscardsNaN) {
  std::vector<double> a{1.0}, b{2.0}, c{std::nan("")};
  for (const KernelTable* table : tables()) {
    c[0] = std::nan("");
    table->gemm(false, false, 1, 1, 1, 1.0, a.data(), 1, b.data(), 1, 0.0,
                c.data(), 1);
    EXPECT_EQ(c[0], 2.0) << isa_name(table->isa);
  }
}

// Elementwise kernels must agree bitwise with the scalar reference for every
// length, including the vector-tail lengths.
TEST(KernelsTest, ElementwiseVariantsAreBitwiseIdentical) {
  const KernelTable* simd = avx2_table();
  if (simd == nullptr) GTEST_SKIP() << "no AVX2 on this machine";
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 17u, 1000u}) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);
    const auto g = random_vec(n, rng);

    auto run2 = [&](auto&& f) {
      auto a = y, b = y;
      f(ref, a);
      f(*simd, b);
      EXPECT_TRUE(bitwise_equal(a, b)) << "n=" << n;
    };
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.axpy(n, 0.37, x.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.scale(n, -1.3, x.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.add(n, x.data(), g.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.mul(n, x.data(), g.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.mul_acc(n, g.data(), x.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.relu_forward(n, x.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.relu_backward(n, x.data(), g.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.leaky_relu_forward(n, 0.2, x.data(), o.data());
    });
    run2([&](const KernelTable& t, std::vector<double>& o) {
      t.leaky_relu_backward(n, 0.2, x.data(), g.data(), o.data());
    });

    // Optimizer updates: compare parameters and all state buffers.
    {
      auto p1 = x, p2 = x, b1 = y, b2 = y;
      ref.sgd_nesterov(n, 2.5e-4, 0.9, 5e-4, p1.data(), g.data(), b1.data());
      simd->sgd_nesterov(n, 2.5e-4, 0.9, 5e-4, p2.data(), g.data(), b2.data());
      EXPECT_TRUE(bitwise_equal(p1, p2));
      EXPECT_TRUE(bitwise_equal(b1, b2));
    }
    {
      std::vector<double> v0(n);
      for (std::size_t i = 0; i < n; ++i) v0[i] = std::fabs(y[i]);
      auto p1 = x, p2 = x, m1 = y, m2 = y, v1 = v0, v2 = v0;
      ref.adam(n, 1e-4, 0.9, 0.99, 1e-8, 0.19, 0.0199, p1.data(), g.data(),
               m1.data(), v1.data());
      simd->adam(n, 1e-4, 0.9, 0.99, 1e-8, 0.19, 0.0199, p2.data(), g.data(),
                 m2.data(), v2.data());
      EXPECT_TRUE(bitwise_equal(p1, p2));
      EXPECT_TRUE(bitwise_equal(m1, m2));
      EXPECT_TRUE(bitwise_equal(v1, v2));
    }
    EXPECT_NEAR(ref.dot(n, x.data(), g.data()),
                simd->dot(n, x.data(), g.data()), 1e-12 * (1.0 + n));
    EXPECT_NEAR(ref.sum(n, x.data()), simd->sum(n, x.data()),
                1e-12 * (1.0 + n));
  }
}

TEST(KernelsTest, SelectIsa) {
  const Isa before = active_isa();
  EXPECT_TRUE(select_isa(Isa::kScalar));
  EXPECT_EQ(active_isa(), Isa::kScalar);
  EXPECT_EQ(select_isa(Isa::kAvx2), avx2_table() != nullptr);
  select_isa(before);
  EXPECT_EQ(isa_name(Isa::kAvx2), "avx2");
}

}  // namespace
}  // namespace roadmtl::kernels
