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

#include "roadmtl/adversarial.hpp"

#include "roadmtl/error.hpp"

namespace roadmtl {

void DiscriminatorConfig::validate() const {
  if (base_channels <= 0)
    throw ConfigError("discriminator base width must be positive");
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky slope must be >= 0");
}

Discriminator::Discriminator(const DiscriminatorConfig& config, nn::Rng& rng)
    : slope_(config.leaky_slope) {
  config.validate();
  int in = 1;
  for (int i = 0; i < 4; ++i) {
    const int out = config.base_channels << i;
    convs_.push_back(register_module(
        "conv" + std::to_string(i),
        std::make_shared<nn::Conv2d>(nn::Conv2dSpec{in, out, 4, 4, 2, 2, 1, 1},
                                     rng)));
    in = out;
  }
  score_ = register_module(
      "score", std::make_shared<nn::Conv2d>(nn::same_conv(in, 1, 3, true), rng));
}

Tensor Discriminator::forward(const Tensor& prob_map) {
  if (prob_map.shape().c != 1) {
    throw ShapeError("discriminator expects a 1-channel map, got " +
                     prob_map.shape().str());
  }
  Tensor x = prob_map;
  for (auto& conv : convs_) x = ops::leaky_relu(conv->forward(x), slope_);
  return score_->forward(x);
}

DiscriminatorPair::DiscriminatorPair(const DiscriminatorConfig& config,
                                     nn::Rng& rng)
    : primary_(std::make_shared<Discriminator>(config, rng)),
      auxiliary_(std::make_shared<Discriminator>(config, rng)),
      adam_primary_(std::make_unique<optim::Adam>(primary_->parameters(), config.adam)),
      adam_auxiliary_(
          std::make_unique<optim::Adam>(auxiliary_->parameters(), config.adam)) {}

Tensor DiscriminatorPair::discriminate(Stream which, const Tensor& prob_map) {
  return get(which).forward(prob_map);
}

void DiscriminatorPair::set_requires_grad(bool on) {
  primary_->set_requires_grad(on);
  auxiliary_->set_requires_grad(on);
}

void DiscriminatorPair::train(bool on) {
  primary_->train(on);
  auxiliary_->train(on);
}

GeneratorAdvLosses generator_adversarial_losses(DiscriminatorPair& pair,
                                                const ModelOutputs& target) {
  pair.set_requires_grad(false);
  GeneratorAdvLosses g;
  g.d_primary = pair.discriminate(Stream::kPrimary,
                                  ops::sigmoid(target.primary_seg_logits));
  g.d_aux = pair.discriminate(Stream::kAuxiliary,
                              ops::sigmoid(target.aux_seg_logits));
  pair.set_requires_grad(true);
  g.adv_p = adversarial_gen_loss(g.d_primary);
  g.adv_a = adversarial_gen_loss(g.d_aux);
  return g;
}

DiscriminatorLosses update_discriminators(DiscriminatorPair& pair,
                                          const ModelOutputs& source,
                                          const ModelOutputs& target) {
  Tensor real, fake_p, fake_a;
  {
    NoGradGuard no_grad;
    real = ops::sigmoid(source.primary_seg_logits.detach());
    fake_p = ops::sigmoid(target.primary_seg_logits.detach());
    fake_a = ops::sigmoid(target.aux_seg_logits.detach());
  }
  DiscriminatorLosses out;
  auto step = [&](Stream s, const Tensor& fake) {
    Discriminator& d = pair.get(s);
    d.zero_grad();
    Tensor loss = discriminator_loss(d.forward(real), d.forward(fake));
    loss.backward();
    pair.optimizer(s).step();
    return loss.item();
  };
  out.primary = step(Stream::kPrimary, fake_p);
  out.auxiliary = step(Stream::kAuxiliary, fake_a);
  return out;
}

AdversarialStepResult adversarial_step(
    DiscriminatorPair& pair, const ModelOutputs& source,
    const ModelOutputs& target,
    const std::function<void(const GeneratorAdvLosses&)>& generator_update) {
  AdversarialStepResult r;
  r.generator = generator_adversarial_losses(pair, target);
  if (generator_update) generator_update(r.generator);
  r.discriminator = update_discriminators(pair, source, target);
  return r;
}

}  // namespace roadmtl
