/* Copyright 2026 The cdnas Authors. All Rights Reserved.

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

#include "cdnas/optim.h"

#include "cdnas/errors.h"

namespace cdnas {

void SgdStep(std::span<Parameter* const> params, float lr, float weight_decay) {
  if (!(lr > 0.0f)) throw DomainError("learning rate must be positive");
  for (Parameter* p : params) {
    float* v = p->value.data();
    const float* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      v[i] -= lr * (g[i] + weight_decay * v[i]);
    }
  }
}

}  // namespace cdnas
