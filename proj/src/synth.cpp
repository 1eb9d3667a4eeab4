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

#include "roadmtl/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "roadmtl/error.hpp"
#include "roadmtl/random.hpp"

namespace roadmtl {

namespace {

using Rgb = std::array<double, 3>;

struct Palette {
  Rgb sky_top;
  Rgb sky_bottom;
  Rgb ground;
  Rgb ground_alt;
  Rgb road;
  Rgb road_alt;
  double texture;  // amplitude of low-frequency blotches
  bool lane_marks;
  bool tire_tracks;
};

Palette palette(Weather w) {
  switch (w) {
    case Weather::kClear:
      return {{0.35, 0.55, 0.90}, {0.70, 0.82, 0.95}, {0.22, 0.45, 0.18},
              {0.40, 0.36, 0.20}, {0.30, 0.30, 0.32}, {0.38, 0.38, 0.40},
              0.10, true, false};
    case Weather::kSnow:
      return {{0.62, 0.64, 0.68}, {0.80, 0.81, 0.84}, {0.90, 0.91, 0.94},
              {0.78, 0.80, 0.84}, {0.66, 0.65, 0.66}, {0.52, 0.50, 0.50},
              0.08, false, true};
    case Weather::kGravel:
      return {{0.45, 0.60, 0.85}, {0.75, 0.80, 0.88}, {0.30, 0.38, 0.16},
              {0.45, 0.40, 0.25}, {0.60, 0.52, 0.40}, {0.50, 0.43, 0.33},
              0.14, false, false};
  }
  return {};
}

// Smooth noise in [-1, 1]: a coarse random grid bilinearly interpolated.
class ValueNoise {
 public:
  ValueNoise(int cells_y, int cells_x, nn::Rng& rng)
      : ny_(cells_y + 1), nx_(cells_x + 1), grid_(ny_ * nx_) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : grid_) v = d(rng);
  }
  double at(double fy, double fx) const {  // fy, fx in [0, 1]
    const double y = fy * (ny_ - 1), x = fx * (nx_ - 1);
    const int y0 = std::min(static_cast<int>(y), ny_ - 2);
    const int x0 = std::min(static_cast<int>(x), nx_ - 2);
    const double ty = y - y0, tx = x - x0;
    auto g = [&](int yy, int xx) { return grid_[yy * nx_ + xx]; };
    return (1 - ty) * ((1 - tx) * g(y0, x0) + tx * g(y0, x0 + 1)) +
           ty * ((1 - tx) * g(y0 + 1, x0) + tx * g(y0 + 1, x0 + 1));
  }

 private:
  int ny_, nx_;
  std::vector<double> grid_;
};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]),
          a[2] + t * (b[2] - a[2])};
}

}  // namespace

std::string to_string(Weather w) {
  switch (w) {
    case Weather::kClear: return "clear";
    case Weather::kSnow: return "snow";
    case Weather::kGravel: return "gravel";
  }
  return "?";
}

Weather parse_weather(const std::string& s) {
  if (s == "clear") return Weather::kClear;
  if (s == "snow") return Weather::kSnow;
  if (s == "gravel") return Weather::kGravel;
  throw ConfigError("unknown weather '" + s + "'");
}

void SynthSceneParams::validate() const {
  if (!(road_width > 0.0) || !std::isfinite(road_width))
    throw ContractError("synthetic road width must be positive");
  if (!(horizon > 0.0 && horizon < 0.9))
    throw ContractError("synthetic horizon must lie in (0, 0.9)");
  if (!std::isfinite(curvature))
    throw ContractError("synthetic curvature must be finite");
  if (!(noise_level >= 0.0)) throw ContractError("noise level must be >= 0");
}

double synth_angle(double curvature) {
  return std::clamp(kSynthSteerGain * curvature, -1.0, 1.0);
}

double max_synth_curvature(int h, int w, double horizon) {
  // Offset at the horizon, in reference pixels: k * depth^2 with
  // depth = (1 - horizon) * 320; keep it within 35% of the (reference) width.
  const double scale = static_cast<double>(kSynthReferenceHeight) / h;
  const double depth = (1.0 - horizon) * kSynthReferenceHeight;
  const double limit = 0.35 * w * scale / (depth * depth);
  return std::min(1.0 / kSynthSteerGain, limit);
}

SynthSceneParams sample_synth_params(int h, int w, Weather weather,
                                     nn::Rng& rng) {
  SynthSceneParams p;
  p.weather = weather;
  const double scale = static_cast<double>(kSynthReferenceHeight) / h;
  p.horizon = std::uniform_real_distribution<double>(0.32, 0.48)(rng);
  const double kmax = max_synth_curvature(h, w, p.horizon);
  p.curvature = std::uniform_real_distribution<double>(-kmax, kmax)(rng);
  p.road_width =
      std::uniform_real_distribution<double>(0.35, 0.75)(rng) * w * scale;
  p.noise_level = std::uniform_real_distribution<double>(0.01, 0.04)(rng);
  return p;
}

Sample generate_synth_scene(const SynthSceneParams& params, int h, int w,
                            nn::Rng& rng) {
  params.validate();
  if (h < 8 || w < 8) throw ContractError("synthetic scenes need >= 8x8 pixels");
  const Palette pal = palette(params.weather);
  // Reference pixels per output pixel.
  const double scale = static_cast<double>(kSynthReferenceHeight) / h;
  const double horizon_row = params.horizon * h;
  const double centre = 0.5 * (w - 1);

  ValueNoise ground_noise(6, 12, rng);
  ValueNoise road_noise(8, 16, rng);
  ValueNoise sky_noise(3, 6, rng);
  std::normal_distribution<double> pixel_noise(0.0, params.noise_level);

  Sample s;
  s.kind = DatasetKind::kTarget;
  s.image = Image::zeros(h, w);
  s.road_mask = Mask::zeros(h, w);
  s.steer_angle = synth_angle(params.curvature);

  for (int y = 0; y < h; ++y) {
    const double fy = (y + 0.5) / h;
    // Depth from the bottom row in reference pixels; zero at the bottom.
    const double depth = (h - (y + 0.5)) * scale;
    // Perspective: width shrinks linearly to zero at the horizon.
    const double t = (y + 0.5 - horizon_row) / (h - horizon_row);
    const double half_width = 0.5 * params.road_width * t / scale;
    const double offset = params.curvature * depth * depth / scale;
    const double cx = centre + offset;
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) / w;
      Rgb c;
      if (t <= 0.0) {
        c = mix(pal.sky_top, pal.sky_bottom, fy / params.horizon);
        const double n = 0.04 * sky_noise.at(fy, fx);
        for (double& v : c) v += n;
      } else {
        const double dx = std::fabs(x - cx);
        const bool road = dx <= half_width;
        if (road) {
          s.road_mask->at(y, x) = 1;
          const double n = road_noise.at(fy, fx);
          c = mix(pal.road, pal.road_alt, 0.5 + 0.5 * n);
          for (double& v : c) v += pal.texture * 0.5 * n;
          const double u = half_width > 0 ? dx / half_width : 0.0;
          if (pal.lane_marks) {
            const bool edge = u > 0.88 && u < 0.96;
            const bool dash = u < 0.05 && std::fmod(depth / 40.0, 1.0) < 0.5;
            if (edge || dash) c = {0.92, 0.92, 0.90};
          }
          if (pal.tire_tracks) {
            const double track = std::fabs(u - 0.55);
            if (track < 0.12) c = mix(c, {0.40, 0.38, 0.38}, 0.7);
          }
        } else {
          const double n = ground_noise.at(fy, fx);
          c = mix(pal.ground, pal.ground_alt, 0.5 + 0.5 * n);
          for (double& v : c) v += pal.texture * n;
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        s.image.at(ch, y, x) = std::clamp(c[ch] + pixel_noise(rng), 0.0, 1.0);
      }
    }
  }
  return s;
}

std::string to_string(SynthRole role) {
  switch (role) {
    case SynthRole::kSource: return "source";
    case SynthRole::kTarget: return "target";
    case SynthRole::kAnnotatedTarget: return "val";
  }
  return "?";
}

std::vector<Sample> generate_synth_set(SynthRole role, std::size_t count,
                                       int h, int w,
                                       std::span<const Weather> weathers,
                                       std::uint64_t seed) {
  if (weathers.empty()) throw ContractError("no weather to draw scenes from");
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    nn::Rng rng = derived_rng(seed, {static_cast<std::uint64_t>(role), i});
    const Weather weather = weathers[std::uniform_int_distribution<std::size_t>(
        0, weathers.size() - 1)(rng)];
    Sample s = generate_synth_scene(sample_synth_params(h, w, weather, rng), h, w, rng);
    char id[32];
    std::snprintf(id, sizeof id, "%s_%05zu", to_string(role).c_str(), i);
    s.id = id;
    switch (role) {
      case SynthRole::kSource:
        s.kind = DatasetKind::kSource;
        s.steer_angle.reset();
        break;
      case SynthRole::kTarget:
        s.road_mask.reset();
        break;
      case SynthRole::kAnnotatedTarget:
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace roadmtl
