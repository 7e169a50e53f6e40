// Copyright 2026 The sifkit Authors
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

#ifndef SIFKIT_SIFKIT_HPP
#define SIFKIT_SIFKIT_HPP

#include "sifkit/checker.hpp"
#include "sifkit/error.hpp"
#include "sifkit/evaluator.hpp"
#include "sifkit/expander.hpp"
#include "sifkit/expression.hpp"
#include "sifkit/json_io.hpp"
#include "sifkit/model.hpp"
#include "sifkit/nonlinear.hpp"
#include "sifkit/reader.hpp"
#include "sifkit/sparse.hpp"

#endif  // SIFKIT_SIFKIT_HPP
