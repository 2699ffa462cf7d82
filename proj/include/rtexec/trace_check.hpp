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

#ifndef RTEXEC__TRACE_CHECK_HPP_
#define RTEXEC__TRACE_CHECK_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rtexec/errors.hpp"
#include "rtexec/sim_kernel.hpp"

namespace rtexec
{

/// Read `<time_ns> <thread> <tag> [detail...]` lines. Blank lines are skipped.
inline std::vector<TraceRecord> parse_trace(std::istream & in)
{
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(' ') == std::string::npos) {
      continue;
    }
    const auto sp1 = line.find(' ');
    const auto sp2 = sp1 == std::string::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp1 == std::string::npos || sp2 == std::string::npos || sp2 == sp1 + 1) {
      throw TraceParseError(lineno, "expected '<time_ns> <thread> <tag> [detail]'");
    }
    std::int64_t t = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + sp1, t);
    if (ec != std::errc() || ptr != line.data() + sp1 || t < 0) {
      throw TraceParseError(lineno, "bad time field");
    }
    TraceRecord r;
    r.time = TimeNs(t);
    r.thread = line.substr(sp1 + 1, sp2 - sp1 - 1);
    const auto sp3 = line.find(' ', sp2 + 1);
    r.tag = line.substr(sp2 + 1, sp3 == std::string::npos ? std::string::npos : sp3 - sp2 - 1);
    if (r.tag.empty()) {
      throw TraceParseError(lineno, "missing tag");
    }
    if (sp3 != std::string::npos) {
      r.detail = line.substr(sp3 + 1);
    }
    if (!out.empty() && r.time < out.back().time) {
      throw TraceParseError(lineno, "time goes backwards");
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// key=value tokens of a record's detail field.
inline std::map<std::string, std::string> parse_detail(std::string_view detail)
{
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < detail.size()) {
    auto end = detail.find(' ', pos);
    if (end == std::string_view::npos) {
      end = detail.size();
    }
    const auto token = detail.substr(pos, end - pos);
    const auto eq = token.find('=');
    if (eq != std::string_view::npos) {
      kv.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
    }
    pos = end + 1;
  }
  return kv;
}

struct CheckResult
{
  std::string name;
  bool passed{true};
  std::optional<TimeNs> first_violation;
  std::string message;
};

struct TraceReport
{
  std::vector<CheckResult> checks;
  std::map<std::string, std::uint64_t> stats;

  bool all_passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const auto & c) {return c.passed;});
  }

  const CheckResult & check(std::string_view name) const
  {
    for (const auto & c : checks) {
      if (c.name == name) {
        return c;
      }
    }
    throw InvalidParams("check", "unknown check " + std::string(name));
  }

  std::string to_text() const
  {
    std::ostringstream os;
    for (const auto & c : checks) {
      os << c.name << ' ' << (c.passed ? "PASS" : "FAIL");
      if (!c.passed) {
        os << " at " << c.first_violation.value_or(TimeNs()).count() << ": " << c.message;
      }
      os << '\n';
    }
    return os.str();
  }
};

namespace trace_analysis
{

struct ThreadDecl
{
  std::string policy;
  int priority{0};
  int low_priority{0};
  std::int64_t init_budget{0};
  std::int64_t repl_period{0};
  bool sporadic() const {return policy == "SCHED_SPORADIC";}
};

struct Slice
{
  std::int64_t start{0};
  std::int64_t end{0};
  std::int64_t length() const {return end - start;}
};

inline std::int64_t to_i64(const std::map<std::string, std::string> & kv, const std::string & key)
{
  auto it = kv.find(key);
  if (it == kv.end()) {
    return 0;
  }
  std::int64_t v = 0;
  const auto & text = it->second;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidParams("trace." + key, "not an integer: '" + text + "'");
  }
  return v;
}

inline int to_int(const std::map<std::string, std::string> & kv, const std::string & key)
{
  return static_cast<int>(to_i64(kv, key));
}

inline std::map<std::string, ThreadDecl> thread_decls(const std::vector<TraceRecord> & records)
{
  std::map<std::string, ThreadDecl> decls;
  for (const auto & r : records) {
    if (r.tag != tag::kThread) {
      continue;
    }
    const auto kv = parse_detail(r.detail);
    ThreadDecl d;
    d.policy = kv.count("policy") ? kv.at("policy") : "";
    d.priority = to_int(kv, "priority");
    d.low_priority = to_int(kv, "low_priority");
    d.init_budget = to_i64(kv, "init_budget_ns");
    d.repl_period = to_i64(kv, "repl_period_ns");
    decls[r.thread] = d;
  }
  return decls;
}

/// Maximal intervals during which each thread ran at its normal priority.
/// A slice is an activation: it opens on dispatch at normal priority or on a
/// priority restore while running, and closes on preempt, block or drop.
inline std::map<std::string, std::vector<Slice>> normal_slices(
  const std::vector<TraceRecord> & records)
{
  const auto decls = thread_decls(records);
  struct State
  {
    bool running{false};
    bool normal{true};
    std::optional<std::int64_t> open;
  };
  std::map<std::string, State> state;
  std::map<std::string, std::vector<Slice>> out;

  auto update = [&](const std::string & name, std::int64_t now) {
      auto & s = state[name];
      const bool active = s.running && s.normal;
      if (active && !s.open) {
        s.open = now;
      } else if (!active && s.open) {
        out[name].push_back(Slice{*s.open, now});
        s.open.reset();
      }
    };

  for (const auto & r : records) {
    const auto now = r.time.count();
    if (r.tag == tag::kEnd) {
      for (auto & [name, s] : state) {
        if (s.open) {
          out[name].push_back(Slice{*s.open, now});
          s.open.reset();
        }
      }
      continue;
    }
    auto decl = decls.find(r.thread);
    if (decl == decls.end()) {
      continue;
    }
    auto & s = state[r.thread];
    if (r.tag == tag::kDispatch) {
      s.running = true;
      s.normal = to_int(parse_detail(r.detail), "prio") == decl->second.priority;
    } else if (r.tag == tag::kPreempt || r.tag == tag::kBlock) {
      s.running = false;
    } else if (r.tag == tag::kPrioDrop) {
      s.normal = false;
    } else if (r.tag == tag::kPrioRestore) {
      s.normal = true;
    } else {
      continue;
    }
    update(r.thread, now);
  }
  return out;
}

inline CheckResult fail(CheckResult c, std::int64_t at, std::string message)
{
  if (c.passed || (c.first_violation && at < c.first_violation->count())) {
    c.first_violation = TimeNs(std::max<std::int64_t>(at, 0));
    c.message = std::move(message);
  }
  c.passed = false;
  return c;
}

/// Normal-priority CPU of every sporadic thread within any window of one
/// replenishment period stays within its initial budget.
inline CheckResult check_budget_window(const std::vector<TraceRecord> & records)
{
  CheckResult c{"budget_window", true, std::nullopt, {}};
  const auto decls = thread_decls(records);
  const auto slices = normal_slices(records);
  for (const auto & [name, list] : slices) {
    const auto & d = decls.at(name);
    if (!d.sporadic()) {
      continue;
    }
    const auto period = d.repl_period;
    auto window_sum = [&](std::int64_t lo, std::int64_t hi) {
        std::int64_t sum = 0;
        for (const auto & s : list) {
          const auto a = std::max(lo, s.start);
          const auto b = std::min(hi, s.end);
          if (b > a) {
            sum += b - a;
          }
        }
        return sum;
      };
    // The overlap is piecewise linear in the window start, so its maximum is
    // attained with a window starting at a slice start or ending at a slice end.
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto lo = list[i].start;
      std::int64_t sum = 0;
      for (std::size_t j = i; j < list.size() && list[j].start < lo + period; ++j) {
        sum += std::min(list[j].end, lo + period) - list[j].start;
      }
      if (sum > d.init_budget) {
        c = fail(
          c, lo, name + " used " + std::to_string(sum) + "ns at normal priority in [" +
          std::to_string(lo) + ", " + std::to_string(lo + period) + ")");
      }
      const auto hi = list[i].end;
      const auto sum_end = window_sum(hi - period, hi);
      if (sum_end > d.init_budget) {
        c = fail(
          c, hi - period, name + " used " + std::to_string(sum_end) +
          "ns at normal priority in [" + std::to_string(hi - period) + ", " +
          std::to_string(hi) + ")");
      }
    }
  }
  return c;
}

/// Every REPLENISH of amount b lands exactly one period after the start of the
/// activation(s) that consumed b. Merged operations cover consecutive
/// activations and land one period after the latest of them.
inline CheckResult check_replenishment_timing(
  const std::vector<TraceRecord> & records, std::uint64_t & merged)
{
  CheckResult c{"replenishment_timing", true, std::nullopt, {}};
  const auto decls = thread_decls(records);
  const auto slices = normal_slices(records);
  std::map<std::string, std::deque<Slice>> pending;
  for (const auto & [name, list] : slices) {
    for (const auto & s : list) {
      if (s.length() > 0) {
        pending[name].push_back(s);
      }
    }
  }
  for (const auto & r : records) {
    if (r.tag != tag::kReplenish) {
      continue;
    }
    const auto now = r.time.count();
    auto decl = decls.find(r.thread);
    if (decl == decls.end() || !decl->second.sporadic()) {
      c = fail(c, now, "replenishment of undeclared or non-sporadic thread " + r.thread);
      continue;
    }
    const auto period = decl->second.repl_period;
    const auto amount = to_i64(parse_detail(r.detail), "amount");
    auto & queue = pending[r.thread];
    std::int64_t sum = 0;
    std::int64_t last_start = -1;
    std::size_t used = 0;
    while (!queue.empty() && queue.front().start + period <= now) {
      sum += queue.front().length();
      last_start = queue.front().start;
      queue.pop_front();
      ++used;
    }
    if (used > 1) {
      merged += used - 1;
    }
    if (used == 0 || last_start + period != now || sum != amount) {
      c = fail(
        c, now, r.thread + " replenished " + std::to_string(amount) +
        "ns with no matching activation one period earlier");
    }
  }
  return c;
}

inline CheckResult check_lock_nesting(const std::vector<TraceRecord> & records)
{
  CheckResult c{"lock_nesting", true, std::nullopt, {}};
  std::optional<std::string> holder;
  for (const auto & r : records) {
    const auto now = r.time.count();
    if (r.tag == tag::kLock) {
      if (holder) {
        c = fail(c, now, r.thread + " locked while " + *holder + " holds the lock");
      }
      holder = r.thread;
    } else if (r.tag == tag::kUnlock) {
      if (holder != r.thread) {
        c = fail(c, now, r.thread + " unlocked a lock it does not hold");
      }
      holder.reset();
    }
  }
  return c;
}

/// Per worker: SIGNAL -> CB_START -> CB_END -> (READY) -> SIGNAL ..., and no
/// TAKE for a topic whose worker is not READY.
inline CheckResult check_readiness_gating(const std::vector<TraceRecord> & records)
{
  CheckResult c{"readiness_gating", true, std::nullopt, {}};
  enum class W { Ready, Signaled, Running };
  std::map<std::string, W> workers;
  std::map<std::string, std::string> worker_of_topic;
  for (const auto & r : records) {
    const auto now = r.time.count();
    if (r.tag == tag::kTopic) {
      const auto kv = parse_detail(r.detail);
      if (kv.count("topic") && kv.count("worker")) {
        worker_of_topic[kv.at("topic")] = kv.at("worker");
        workers[kv.at("worker")] = W::Ready;
      }
    } else if (r.tag == tag::kTake) {
      const auto kv = parse_detail(r.detail);
      auto it = kv.find("topic");
      if (it != kv.end() && worker_of_topic.count(it->second)) {
        const auto & w = worker_of_topic.at(it->second);
        if (workers[w] != W::Ready) {
          c = fail(c, now, "message taken for " + it->second + " while " + w + " is busy");
        }
      }
    } else if (r.tag == tag::kSignal) {
      const auto kv = parse_detail(r.detail);
      const auto w = kv.count("worker") ? kv.at("worker") : std::string();
      if (workers[w] != W::Ready) {
        c = fail(c, now, "second SIGNAL to " + w + " before it became READY");
      }
      workers[w] = W::Signaled;
    } else if (r.tag == tag::kCbStart) {
      if (workers[r.thread] != W::Signaled) {
        c = fail(c, now, "CB_START on " + r.thread + " without a pending signal");
      }
      workers[r.thread] = W::Running;
    } else if (r.tag == tag::kCbEnd) {
      if (workers[r.thread] != W::Running) {
        c = fail(c, now, "CB_END on " + r.thread + " without CB_START");
      }
      workers[r.thread] = W::Ready;
    }
  }
  return c;
}

/// CPU state checks evaluated at the end of every instant: never idle while
/// a thread is ready, and never running below a ready thread.
inline void check_cpu_states(
  const std::vector<TraceRecord> & records, CheckResult & work, CheckResult & prio)
{
  const auto decls = thread_decls(records);
  enum class S { Blocked, Ready, Running };
  std::map<std::string, S> state;
  std::map<std::string, int> eff;
  for (const auto & [name, d] : decls) {
    state[name] = S::Blocked;
    eff[name] = d.priority;
  }
  std::optional<std::string> running;

  auto end_of_instant = [&](std::int64_t now) {
      for (const auto & [name, s] : state) {
        if (s != S::Ready) {
          continue;
        }
        if (!running) {
          work = fail(work, now, "CPU idle while " + name + " is ready");
        } else if (eff[name] > eff[*running]) {
          prio = fail(prio, now, *running + " runs while higher-priority " + name + " is ready");
        }
      }
    };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto & r = records[i];
    const auto now = r.time.count();
    if (decls.count(r.thread)) {
      if (r.tag == tag::kReady) {
        state[r.thread] = S::Ready;
      } else if (r.tag == tag::kDispatch) {
        if (running) {
          prio = fail(prio, now, r.thread + " dispatched while " + *running + " runs");
        }
        for (const auto & [name, s] : state) {
          if (s == S::Ready && name != r.thread && eff[name] > eff[r.thread]) {
            prio = fail(prio, now, r.thread + " dispatched over higher-priority " + name);
          }
        }
        state[r.thread] = S::Running;
        running = r.thread;
      } else if (r.tag == tag::kPreempt || r.tag == tag::kBlock) {
        state[r.thread] = r.tag == tag::kPreempt ? S::Ready : S::Blocked;
        if (running == r.thread) {
          running.reset();
        }
      } else if (r.tag == tag::kPrioDrop || r.tag == tag::kPrioRestore) {
        eff[r.thread] = to_int(parse_detail(r.detail), "prio");
      }
    }
    const bool last_of_instant = i + 1 == records.size() || records[i + 1].time != r.time;
    if (last_of_instant) {
      end_of_instant(now);
    }
  }
}

/// Per topic: arrivals - taken - dropped stays within [0, depth]. The upper
/// bound is checked at the end of each instant, since an arrival into a full
/// queue is followed by its DROP_MSG at the same time.
inline CheckResult check_message_conservation(const std::vector<TraceRecord> & records)
{
  CheckResult c{"message_conservation", true, std::nullopt, {}};
  std::map<std::string, std::int64_t> depth;
  std::map<std::string, std::int64_t> queued;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto & r = records[i];
    const auto now = r.time.count();
    if (r.tag == tag::kTopic) {
      const auto kv = parse_detail(r.detail);
      if (kv.count("topic")) {
        depth[kv.at("topic")] = to_i64(kv, "depth");
      }
    } else if (r.tag == tag::kArrive || r.tag == tag::kTake || r.tag == tag::kDropMsg) {
      const auto kv = parse_detail(r.detail);
      const auto topic = kv.count("topic") ? kv.at("topic") : std::string();
      auto & q = queued[topic];
      q += r.tag == tag::kArrive ? 1 : -1;
      if (q < 0) {
        c = fail(c, now, "more messages taken or dropped than arrived on " + topic);
      }
    }
    const bool last_of_instant = i + 1 == records.size() || records[i + 1].time != r.time;
    if (!last_of_instant) {
      continue;
    }
    for (const auto & [topic, q] : queued) {
      auto d = depth.find(topic);
      if (d != depth.end() && q > d->second) {
        c = fail(c, now, "queue " + topic + " holds " + std::to_string(q) +
            " messages, depth " + std::to_string(d->second));
      }
    }
  }
  return c;
}

}  // namespace trace_analysis

/// Run every post hoc invariant check over a parsed trace.
inline TraceReport check_trace(const std::vector<TraceRecord> & records)
{
  using namespace trace_analysis;
  TraceReport report;
  std::uint64_t merged = 0;
  report.checks.push_back(check_budget_window(records));
  report.checks.push_back(check_replenishment_timing(records, merged));
  report.checks.push_back(check_lock_nesting(records));
  report.checks.push_back(check_readiness_gating(records));
  CheckResult work{"work_conservation", true, std::nullopt, {}};
  CheckResult prio{"priority_order", true, std::nullopt, {}};
  check_cpu_states(records, work, prio);
  report.checks.push_back(work);
  report.checks.push_back(prio);
  report.checks.push_back(check_message_conservation(records));
  report.stats["records"] = records.size();
  report.stats["merged_replenishments"] = merged;
  return report;
}

inline TraceReport check_trace(const Trace & trace) {return check_trace(trace.records());}

}  // namespace rtexec

#endif  // RTEXEC__TRACE_CHECK_HPP_
