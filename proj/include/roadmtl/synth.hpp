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

// Procedural road scenes: a perspective road of given curvature on textured
// ground, rendered under one of three weather/surface conditions.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "roadmtl/data.hpp"

namespace roadmtl {

enum class Weather { kClear, kSnow, kGravel };

std::string to_string(Weather w);
Weather parse_weather(const std::string& s);

// Curvature and widths are measured at the 320-row reference camera; other
// image heights are rendered by scaling pixel distances with the height.
inline constexpr int kSynthReferenceHeight = 320;
// angle = clamp(gain * curvature, -1, 1)
inline constexpr double kSynthSteerGain = 100.0;

struct SynthSceneParams {
  double curvature = 0.0;     // 1/px; lateral offset = curvature * depth^2
  double road_width = 600.0;  // px at the bottom row
  double horizon = 0.4;       // row fraction of the horizon
  double noise_level = 0.02;  // per-pixel Gaussian noise std
  Weather weather = Weather::kClear;

  // Throws ContractError for degenerate parameters.
  void validate() const;
};

double synth_angle(double curvature);

// Largest |curvature| keeping the road centre inside the frame.
double max_synth_curvature(int h, int w, double horizon);

// Random parameters for an h x w image under `weather`.
SynthSceneParams sample_synth_params(int h, int w, Weather weather,
                                     nn::Rng& rng);

// Renders a scene; the sample carries both the road mask and the angle.
Sample generate_synth_scene(const SynthSceneParams& params, int h, int w,
                            nn::Rng& rng);

enum class SynthRole { kSource, kTarget, kAnnotatedTarget };

std::string to_string(SynthRole role);

// `count` scenes, each drawn from derived_rng(seed, {role, index}) with a
// weather picked uniformly from `weathers`. Source samples keep only the
// mask, target samples only the angle, annotated target samples both.
std::vector<Sample> generate_synth_set(SynthRole role, std::size_t count,
                                       int h, int w,
                                       std::span<const Weather> weathers,
                                       std::uint64_t seed);

}  // namespace roadmtl
