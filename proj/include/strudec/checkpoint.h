// Copyright 2026 The strudec Authors.
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

#include <filesystem>
#include <map>
#include <string>

#include "strudec/tensor.h"

namespace strudec {

// Binary parameter file:
//
//   strudec-params 1 <count>\n
//   then per parameter, in registration order:
//   <name> <rows> <cols>\n<rows*cols little-endian float64, row-major>\n
//
// Names contain no whitespace.
void save_parameters(const ParameterSet& params,
                     const std::filesystem::path& path);

std::map<std::string, Matrix> read_parameters(
    const std::filesystem::path& path);

// Loads every parameter of `params` from `path`. Missing names or shape
// mismatches throw RefusalError naming the offending parameter.
void load_parameters(ParameterSet& params, const std::filesystem::path& path);

}  // namespace strudec
