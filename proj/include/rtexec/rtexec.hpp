// Copyright 2026 The rtexec Authors
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

#ifndef RTEXEC__RTEXEC_HPP_
#define RTEXEC__RTEXEC_HPP_

#include "rtexec/config.hpp"
#include "rtexec/errors.hpp"
#include "rtexec/executor.hpp"
#include "rtexec/metrics_csv.hpp"
#include "rtexec/sched_core.hpp"
#include "rtexec/sim_kernel.hpp"
#include "rtexec/time.hpp"
#include "rtexec/trace_check.hpp"
#include "rtexec/workload.hpp"

#endif  // RTEXEC__RTEXEC_HPP_
