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

#ifndef RTEXEC__CONFIG_HPP_
#define RTEXEC__CONFIG_HPP_

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "rtexec/errors.hpp"
#include "rtexec/workload.hpp"

namespace rtexec
{

// Scenario files are INI text:
//
//   [scenario]            duration_ns, seed
//   [executor]            priority, wait_timeout_ns, queue_depth
//   [middleware]          fill_cost_ns, wait_cost_ns, take_cost_ns, publish_cost_ns
//   [ping.<name>]         send_topic, reply_topic, period_ns, jitter_ns
//   [subscription.<topic>] busy_time_ns, sleep_time_ns, publishes, policy,
//                         priority, low_priority, repl_period_ns,
//                         init_budget_ns, max_repl
//
// Subscription sections are scanned by the executor in file order. Missing
// keys take the Scenario defaults; unknown keys are rejected.

namespace config_detail
{
using boost::property_tree::ptree;

class Section
{
public:
  Section(std::string name, const ptree & tree)
  : name_(std::move(name)), tree_(tree) {}

  void allow(std::initializer_list<std::string_view> keys) const
  {
    for (const auto & [key, value] : tree_) {
      bool known = false;
      for (auto k : keys) {
        known = known || key == k;
      }
      if (!known) {
        throw InvalidParams(name_ + "." + key, "unknown key");
      }
      if (!value.empty()) {
        throw InvalidParams(name_ + "." + key, "unexpected nesting");
      }
    }
  }

  std::optional<std::string> text(const std::string & key) const
  {
    auto it = tree_.find(key);
    if (it == tree_.not_found()) {
      return std::nullopt;
    }
    return it->second.data();
  }

  std::int64_t integer(const std::string & key, std::int64_t fallback) const
  {
    const auto t = text(key);
    if (!t) {
      return fallback;
    }
    std::int64_t v = 0;
    const auto * first = t->data();
    const auto * last = t->data() + t->size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw InvalidParams(name_ + "." + key, "expected an integer, got '" + *t + "'");
    }
    return v;
  }

  TimeNs duration(const std::string & key, TimeNs fallback) const
  {
    const auto v = integer(key, fallback.count());
    if (v < 0) {
      throw InvalidParams(name_ + "." + key, "must not be negative");
    }
    return TimeNs(v);
  }

  std::string required(const std::string & key) const
  {
    auto t = text(key);
    if (!t || t->empty()) {
      throw InvalidParams(name_ + "." + key, "missing required key");
    }
    return *t;
  }

private:
  std::string name_;
  const ptree & tree_;
};

inline SchedParams parse_sched(const Section & sec, const std::string & where)
{
  SchedParams p;
  const auto policy = sec.text("policy").value_or("SCHED_FIFO");
  if (policy == "SCHED_FIFO") {
    p.policy = Policy::Fifo;
  } else if (policy == "SCHED_SPORADIC") {
    p.policy = Policy::Sporadic;
  } else {
    throw InvalidParams(where + ".policy", "expected SCHED_FIFO or SCHED_SPORADIC");
  }
  p.priority = static_cast<int>(sec.integer("priority", 0));
  if (p.policy == Policy::Sporadic) {
    p.low_priority = static_cast<int>(sec.integer("low_priority", 0));
    p.init_budget = sec.duration("init_budget_ns", TimeNs::zero());
    p.repl_period = sec.duration("repl_period_ns", TimeNs::zero());
    const auto max_repl = sec.integer("max_repl", 0);
    if (max_repl < 0 || max_repl > 1'000'000) {
      throw InvalidParams(where + ".max_repl", "out of range");
    }
    p.max_repl = static_cast<std::uint32_t>(max_repl);
  }
  return p;
}
}  // namespace config_detail

/// Parse and validate a scenario; errors name the offending field.
inline Scenario parse_config(std::istream & in)
{
  using config_detail::Section;
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error & e) {
    throw InvalidParams("line " + std::to_string(e.line()), e.message());
  }

  Scenario s;
  s.pings.clear();
  s.subscriptions.clear();
  for (const auto & [name, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw InvalidParams(name, "key outside of any section");
    }
    const Section sec(name, body);
    if (name == "scenario") {
      sec.allow({"duration_ns", "seed"});
      s.duration = sec.duration("duration_ns", s.duration);
      const auto seed = sec.integer("seed", 0);
      if (seed < 0) {
        throw InvalidParams("scenario.seed", "must not be negative");
      }
      s.seed = static_cast<std::uint64_t>(seed);
    } else if (name == "executor") {
      sec.allow({"priority", "wait_timeout_ns", "queue_depth"});
      s.executor_priority = static_cast<int>(sec.integer("priority", s.executor_priority));
      s.wait_timeout = sec.duration("wait_timeout_ns", s.wait_timeout);
      const auto depth = sec.integer("queue_depth", static_cast<std::int64_t>(s.queue_depth));
      if (depth <= 0) {
        throw InvalidParams("executor.queue_depth", "must be positive");
      }
      s.queue_depth = static_cast<std::size_t>(depth);
    } else if (name == "middleware") {
      sec.allow({"fill_cost_ns", "wait_cost_ns", "take_cost_ns", "publish_cost_ns"});
      s.middleware_costs.fill = sec.duration("fill_cost_ns", TimeNs::zero());
      s.middleware_costs.wait = sec.duration("wait_cost_ns", TimeNs::zero());
      s.middleware_costs.take = sec.duration("take_cost_ns", TimeNs::zero());
      s.middleware_costs.publish = sec.duration("publish_cost_ns", TimeNs::zero());
    } else if (name.rfind("ping.", 0) == 0) {
      sec.allow({"send_topic", "reply_topic", "period_ns", "jitter_ns"});
      PingSpec p;
      p.name = name.substr(5);
      p.send_topic = sec.required("send_topic");
      p.reply_topic = sec.required("reply_topic");
      p.period = sec.duration("period_ns", TimeNs::zero());
      p.jitter = sec.duration("jitter_ns", TimeNs::zero());
      s.pings.push_back(std::move(p));
    } else if (name.rfind("subscription.", 0) == 0) {
      sec.allow({"busy_time_ns", "sleep_time_ns", "publishes", "policy", "priority",
          "low_priority", "repl_period_ns", "init_budget_ns", "max_repl"});
      SubscriptionSpec sub;
      sub.topic = name.substr(13);
      sub.callback.busy_time = sec.duration("busy_time_ns", TimeNs::zero());
      sub.callback.sleep_time = sec.duration("sleep_time_ns", TimeNs::zero());
      if (auto pub = sec.text("publishes"); pub && !pub->empty()) {
        sub.callback.publishes = *pub;
      }
      sub.sched = config_detail::parse_sched(sec, name);
      s.subscriptions.push_back(std::move(sub));
    } else {
      throw InvalidParams(name, "unknown section");
    }
  }
  s.validate();
  return s;
}

inline Scenario parse_config(const std::string & text)
{
  std::istringstream in(text);
  return parse_config(in);
}

/// Canonical INI form; parse_config(write_config(s)) == s.
inline std::string write_config(const Scenario & s)
{
  std::ostringstream out;
  out << "; rtexec scenario. Times are integer nanoseconds.\n";
  out << "[scenario]\n";
  out << "duration_ns = " << s.duration.count() << "\n";
  out << "seed = " << s.seed << "\n\n";
  out << "[executor]\n";
  out << "priority = " << s.executor_priority << "\n";
  out << "wait_timeout_ns = " << s.wait_timeout.count() << "\n";
  out << "queue_depth = " << s.queue_depth << "\n\n";
  out << "[middleware]\n";
  out << "fill_cost_ns = " << s.middleware_costs.fill.count() << "\n";
  out << "wait_cost_ns = " << s.middleware_costs.wait.count() << "\n";
  out << "take_cost_ns = " << s.middleware_costs.take.count() << "\n";
  out << "publish_cost_ns = " << s.middleware_costs.publish.count() << "\n";
  for (const auto & p : s.pings) {
    out << "\n[ping." << p.name << "]\n";
    out << "send_topic = " << p.send_topic << "\n";
    out << "reply_topic = " << p.reply_topic << "\n";
    out << "period_ns = " << p.period.count() << "\n";
    out << "jitter_ns = " << p.jitter.count() << "\n";
  }
  for (const auto & sub : s.subscriptions) {
    out << "\n[subscription." << sub.topic << "]\n";
    out << "busy_time_ns = " << sub.callback.busy_time.count() << "\n";
    out << "sleep_time_ns = " << sub.callback.sleep_time.count() << "\n";
    if (sub.callback.publishes) {
      out << "publishes = " << *sub.callback.publishes << "\n";
    }
    out << "policy = " << to_string(sub.sched.policy) << "\n";
    out << "priority = " << sub.sched.priority << "\n";
    if (sub.sched.policy == Policy::Sporadic) {
      out << "low_priority = " << sub.sched.low_priority << "\n";
      out << "repl_period_ns = " << sub.sched.repl_period.count() << "\n";
      out << "init_budget_ns = " << sub.sched.init_budget.count() << "\n";
      out << "max_repl = " << sub.sched.max_repl << "\n";
    }
  }
  return out.str();
}

}  // namespace rtexec

#endif  // RTEXEC__CONFIG_HPP_
