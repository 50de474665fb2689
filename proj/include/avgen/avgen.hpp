// Copyright 2026 The avgen Authors.
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

#ifndef AVGEN_AVGEN_HPP_
#define AVGEN_AVGEN_HPP_

#include "avgen/backend.hpp"
#include "avgen/eval.hpp"
#include "avgen/external_backend.hpp"
#include "avgen/ingest.hpp"
#include "avgen/normalize.hpp"
#include "avgen/serdes.hpp"
#include "avgen/strategies.hpp"
#include "avgen/types.hpp"

#endif  // AVGEN_AVGEN_HPP_
