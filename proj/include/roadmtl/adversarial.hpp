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

// Patch discriminators on road-probability maps and the alternating
// generator/discriminator update.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "roadmtl/losses.hpp"
#include "roadmtl/model.hpp"
#include "roadmtl/nn.hpp"
#include "roadmtl/optim.hpp"

namespace roadmtl {

struct DiscriminatorConfig {
  // Stage widths are base, 2 base, 4 base, 8 base.
  int base_channels = 64;
  double leaky_slope = 0.2;
  optim::AdamOptions adam{};

  void validate() const;
};

// Four 4x4 stride-2 convolutions with leaky ReLU, then a 3x3 score conv.
// Output is 1 x H/16 x W/16 for inputs divisible by 16.
class Discriminator : public nn::Module {
 public:
  Discriminator(const DiscriminatorConfig& config, nn::Rng& rng);
  Tensor forward(const Tensor& prob_map);

 private:
  double slope_;
  std::vector<std::shared_ptr<nn::Conv2d>> convs_;
  std::shared_ptr<nn::Conv2d> score_;
};

enum class Stream { kPrimary, kAuxiliary };

class DiscriminatorPair {
 public:
  DiscriminatorPair(const DiscriminatorConfig& config, nn::Rng& rng);

  Tensor discriminate(Stream which, const Tensor& prob_map);
  Discriminator& get(Stream which) {
    return which == Stream::kPrimary ? *primary_ : *auxiliary_;
  }
  optim::Adam& optimizer(Stream which) {
    return which == Stream::kPrimary ? *adam_primary_ : *adam_auxiliary_;
  }
  void set_requires_grad(bool on);
  void train(bool on);

 private:
  std::shared_ptr<Discriminator> primary_;
  std::shared_ptr<Discriminator> auxiliary_;
  std::unique_ptr<optim::Adam> adam_primary_;
  std::unique_ptr<optim::Adam> adam_auxiliary_;
};

struct GeneratorAdvLosses {
  // Discriminator outputs on the target maps, part of the generator graph.
  Tensor d_primary;
  Tensor d_aux;
  Tensor adv_p;
  Tensor adv_a;
};

struct DiscriminatorLosses {
  double primary = 0.0;
  double auxiliary = 0.0;
};

// Discriminator scores of the target segmentation maps with discriminator
// parameters frozen; gradients flow only into the segmentation network.
GeneratorAdvLosses generator_adversarial_losses(DiscriminatorPair& pair,
                                                const ModelOutputs& target);

// One Adam step on both discriminators. Source primary probabilities are the
// "real" samples for both streams; all inputs are detached.
DiscriminatorLosses update_discriminators(DiscriminatorPair& pair,
                                          const ModelOutputs& source,
                                          const ModelOutputs& target);

struct AdversarialStepResult {
  GeneratorAdvLosses generator;
  DiscriminatorLosses discriminator;
};

// Computes the generator losses, hands them to `generator_update` (which is
// expected to backpropagate and step the segmentation network), then updates
// the discriminators.
AdversarialStepResult adversarial_step(
    DiscriminatorPair& pair, const ModelOutputs& source,
    const ModelOutputs& target,
    const std::function<void(const GeneratorAdvLosses&)>& generator_update);

}  // namespace roadmtl
