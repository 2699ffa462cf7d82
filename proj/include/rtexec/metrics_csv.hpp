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

#ifndef RTEXEC__METRICS_CSV_HPP_
#define RTEXEC__METRICS_CSV_HPP_

#include <ostream>
#include <string>
#include <string_view>

#include "rtexec/workload.hpp"

namespace rtexec
{

inline constexpr std::string_view kMetricsCsvHeader =
  "sweep_value,topic,sent,received,dropped,skipped_busy,mean_latency_ns,max_latency_ns,"
  "normal_prio_cpu_ns,low_prio_cpu_ns,exhaustions,replenishments";

/// One row per ping stream. Integers only, so output is locale independent.
/// `sweep_value` is empty for single runs.
inline void write_metrics_rows(
  std::ostream & out, const Metrics & metrics, std::string_view sweep_value)
{
  for (const auto & t : metrics.topics) {
    out << sweep_value << ',' << t.topic << ',' <<
      std::to_string(t.sent) << ',' << std::to_string(t.received) << ',' <<
      std::to_string(t.dropped) << ',' << std::to_string(t.skipped_busy) << ',' <<
      std::to_string(t.mean_latency.count()) << ',' <<
      std::to_string(t.max_latency.count()) << ',' <<
      std::to_string(t.normal_prio_cpu.count()) << ',' <<
      std::to_string(t.low_prio_cpu.count()) << ',' <<
      std::to_string(t.exhaustions) << ',' << std::to_string(t.replenishments) << '\n';
  }
}

inline void write_metrics_csv(std::ostream & out, const Metrics & metrics)
{
  out << kMetricsCsvHeader << '\n';
  write_metrics_rows(out, metrics, "");
}

}  // namespace rtexec

#endif  // RTEXEC__METRICS_CSV_HPP_
