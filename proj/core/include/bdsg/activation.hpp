// Copyright 2026 The BDSG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>

namespace bdsg {

/// Hidden-layer nonlinearity. Output layers are always linear.
enum class Activation { identity, tanh, elu, softplus };

std::string to_string(Activation activation);
Activation parse_activation(std::string_view name);

double activate(Activation activation, double x) noexcept;
double activate_derivative(Activation activation, double x) noexcept;
double activate_second_derivative(Activation activation, double x) noexcept;

}  // namespace bdsg
