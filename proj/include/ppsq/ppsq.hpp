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
// =============================================================================

#pragma once

#include "ppsq/affine.hpp"
#include "ppsq/common.hpp"
#include "ppsq/network/decentralized.hpp"
#include "ppsq/network/laplacian.hpp"
#include "ppsq/network/topology.hpp"
#include "ppsq/oracle.hpp"
#include "ppsq/problems/log_sum_exp.hpp"
#include "ppsq/problems/quadratic.hpp"
#include "ppsq/problems/wasserstein.hpp"
#include "ppsq/quantize.hpp"
#include "ppsq/schedule.hpp"
#include "ppsq/solvers.hpp"
#include "ppsq/trace.hpp"
#include "ppsq/wire.hpp"
