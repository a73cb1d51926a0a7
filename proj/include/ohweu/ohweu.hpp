// Copyright 2026 The OHWEU Authors.
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

#include "ohweu/core.hpp"
#include "ohweu/eval.hpp"
#include "ohweu/hash_init.hpp"
#include "ohweu/index.hpp"
#include "ohweu/io.hpp"
#include "ohweu/label_lsh.hpp"
#include "ohweu/pa_learner.hpp"
#include "ohweu/pipeline.hpp"
