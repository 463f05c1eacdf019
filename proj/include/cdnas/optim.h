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

#ifndef CDNAS_OPTIM_H_
#define CDNAS_OPTIM_H_

#include <span>

#include "cdnas/tape.h"

namespace cdnas {

// p <- p - lr * (g + weight_decay * p) for every parameter. Gradients are
// left untouched; callers zero them between steps. Throws DomainError for
// lr <= 0.
void SgdStep(std::span<Parameter* const> params, float lr, float weight_decay);

}  // namespace cdnas

#endif  // CDNAS_OPTIM_H_
