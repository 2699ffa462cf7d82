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

#ifndef RTEXEC_TESTS__SUPPORT_HPP_
#define RTEXEC_TESTS__SUPPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rtexec/rtexec.hpp"

namespace rtexec::test_support
{

/// A kernel and CPU scheduler without an executor, for thread-level scenarios.
class SchedHarness
{
public:
  SchedHarness()
  : cpu(kernel)
  {
    kernel.set_dispatcher(
      [this](const Event & ev) {
        if (std::holds_alternative<event::SimulationEnd>(ev.kind)) {
          cpu.settle();
          cpu.sync();
          kernel.record("-", tag::kEnd);
          return;
        }
        if (!cpu.handle(ev)) {
          if (const auto * t = std::get_if<event::Timer>(&ev.kind)) {
            cpu.make_ready(t->thread);
          }
        }
        cpu.settle();
      });
    kernel.set_observer(
      [this](const Event &) {
        if (!violation) {
          violation = cpu.check_invariants();
        }
      });
  }

  /// A thread that always wants the CPU, in bursts of `chunk`.
  ThreadId add_hog(const std::string & name, SchedParams params, TimeNs chunk = TimeNs::from_s(1))
  {
    auto id = std::make_shared<ThreadId>();
    *id = cpu.add_thread(name, params, [this, id, chunk] {cpu.consume(*id, chunk);});
    cpu.make_ready(*id);
    return *id;
  }

  /// A thread that runs `work`, then sleeps `sleep`, forever.
  ThreadId add_periodic(const std::string & name, SchedParams params, TimeNs work, TimeNs sleep)
  {
    auto id = std::make_shared<ThreadId>();
    auto working = std::make_shared<bool>(false);
    *id = cpu.add_thread(
      name, params, [this, id, working, work, sleep] {
        if (!*working) {
          *working = true;
          cpu.consume(*id, work);
          return;
        }
        *working = false;
        kernel.schedule_after(sleep, event::Timer{*id});
        cpu.block(*id);
      });
    cpu.make_ready(*id);
    return *id;
  }

  const Trace & run(TimeNs end)
  {
    cpu.settle();
    return kernel.run_until(end);
  }

  Kernel kernel;
  CpuScheduler cpu;
  std::optional<std::string> violation;
};

/// Sum of normal-priority CPU inside [lo, hi) for a thread, from trace slices.
inline std::int64_t normal_cpu_in(
  const std::vector<TraceRecord> & records, const std::string & thread, std::int64_t lo,
  std::int64_t hi)
{
  std::int64_t sum = 0;
  const auto slices = trace_analysis::normal_slices(records);
  auto it = slices.find(thread);
  if (it == slices.end()) {
    return 0;
  }
  for (const auto & s : it->second) {
    const auto a = std::max(lo, s.start);
    const auto b = std::min(hi, s.end);
    sum += b > a ? b - a : 0;
  }
  return sum;
}

/// Random scenario with 2 to 4 subscriptions, sporadic or FIFO, max_repl in [1, 8].
inline Scenario random_scenario(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::int64_t lo, std::int64_t hi) {
      return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
  Scenario s;
  s.duration = TimeNs::from_ms(uniform(200, 1500));
  s.seed = seed;
  s.queue_depth = static_cast<std::size_t>(uniform(1, 8));
  s.wait_timeout = TimeNs::from_ms(uniform(1, 100));
  s.middleware_costs.fill = TimeNs::from_us(uniform(0, 50));
  s.middleware_costs.wait = TimeNs::from_us(uniform(0, 50));
  s.middleware_costs.take = TimeNs::from_us(uniform(0, 50));
  s.middleware_costs.publish = TimeNs::from_us(uniform(0, 50));
  const auto subs = uniform(2, 4);
  for (std::int64_t i = 0; i < subs; ++i) {
    const auto topic = "t" + std::to_string(i);
    const auto period_us = uniform(1'000, 30'000);
    const auto jitter_us = uniform(0, std::min<std::int64_t>(2'000, period_us - 1));
    s.pings.push_back(
      PingSpec{topic, topic, topic + "_pong", TimeNs::from_us(period_us),
        TimeNs::from_us(jitter_us)});
    CallbackSpec cb{TimeNs::from_us(uniform(100, 20'000)), TimeNs::from_us(uniform(0, 5'000)),
      topic + "_pong"};
    SchedParams sp;
    if (uniform(0, 3) > 0) {
      const auto repl = TimeNs::from_us(uniform(5'000, 100'000));
      const auto budget = TimeNs(std::max<std::int64_t>(1, uniform(1, repl.count())));
      sp = SchedParams::sporadic(
        static_cast<int>(uniform(20, 90)), static_cast<int>(uniform(1, 19)), budget, repl,
        static_cast<std::uint32_t>(uniform(1, 8)));
    } else {
      sp = SchedParams::fifo(static_cast<int>(uniform(1, 90)));
    }
    s.subscriptions.push_back(SubscriptionSpec{topic, cb, sp});
  }
  return s;
}

inline std::string metrics_text(const Metrics & m)
{
  std::ostringstream os;
  write_metrics_csv(os, m);
  return os.str();
}

}  // namespace rtexec::test_support

#endif  // RTEXEC_TESTS__SUPPORT_HPP_
