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

// Differentiable tensor operations. Shapes are checked eagerly; failures
// throw ShapeError naming the offending operand.

#pragma once

#include <vector>

#include "roadmtl/tensor.hpp"

namespace roadmtl::ops {

struct Conv2dOptions {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

// x: N x Cin x H x W, weight: Cout x Cin x kh x kw, bias: 1 x Cout x 1 x 1 or
// undefined. Output spatial size floor((H + 2p - k) / s) + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

int conv_out_size(int in, int kernel, int stride, int pad);

// Per-channel normalization over (N, H, W). In training mode batch
// statistics are used and the running estimates are updated in place
// (running_var with the unbiased batch variance).
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  double momentum = 0.1, double eps = 1e-5);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);

// No padding, floor division.
Tensor max_pool2d(const Tensor& x, int kernel_h, int kernel_w, int stride_h,
                  int stride_w);

// Bilinear resampling with half-pixel centers (align_corners = false).
Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w);

Tensor concat_channels(const std::vector<Tensor>& parts);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// N x C x H x W -> N x (C*H*W) x 1 x 1
Tensor flatten(const Tensor& x);
// x: N x F x 1 x 1, weight: Out x F x 1 x 1, bias: 1 x Out x 1 x 1.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace roadmtl::ops
