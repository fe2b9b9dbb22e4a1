/*
 * Copyright 2026 The ecca-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"
#include "ecca/model.hpp"
#include "ecca/newton.hpp"
#include "ecca/soc.hpp"
#include "ecca/fit.hpp"
#include "ecca/random.hpp"
#include "ecca/simgen.hpp"
#include "ecca/rank.hpp"
#include "ecca/metrics.hpp"
