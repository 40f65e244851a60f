// Copyright 2026 The ddsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ddsim/bath.hpp"
#include "ddsim/bath_io.hpp"
#include "ddsim/common.hpp"
#include "ddsim/engines.hpp"
#include "ddsim/experiments.hpp"
#include "ddsim/fit.hpp"
#include "ddsim/parallel.hpp"
#include "ddsim/quantum.hpp"
#include "ddsim/sequence.hpp"
