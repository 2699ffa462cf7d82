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

#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "support.hpp"

namespace
{
using namespace rtexec;
using namespace rtexec::literals;

TraceReport check_text(const std::string & text)
{
  std::istringstream in(text);
  return check_trace(parse_trace(in));
}

const char * kSporadicDecl =
  "0 s THREAD policy=SCHED_SPORADIC priority=60 low_priority=10 init_budget_ns=30 "
  "repl_period_ns=100 max_repl=4\n";

TEST(ParseTrace, RoundTripsSimulatorOutput)
{
  const auto r = run_scenario(build_case1(Ratio(3, 10)));
  std::istringstream in(r.trace.to_text());
  EXPECT_EQ(parse_trace(in), r.trace.records());
}

TEST(ParseTrace, ReportsLineNumbers)
{
  auto line_of = [](const std::string & text) {
      std::istringstream in(text);
      try {
        parse_trace(in);
      } catch (const TraceParseError & e) {
        return e.line();
      }
      return std::size_t{0};
    };
  EXPECT_EQ(line_of("0 a READY\n10 a\n"), 2u);
  EXPECT_EQ(line_of("0 a READY\n\nx a READY\n"), 3u);
  EXPECT_EQ(line_of("-1 a READY\n"), 1u);
  EXPECT_EQ(line_of("5 a READY\n4 a BLOCK\n"), 2u);
  EXPECT_EQ(line_of("0 a READY\n5 a DISPATCH prio=3\n"), 0u);
}

TEST(ParseTrace, DetailTokens)
{
  const auto kv = parse_detail("topic=hprt seq=12 worker=hprt_worker");
  EXPECT_EQ(kv.at("topic"), "hprt");
  EXPECT_EQ(kv.at("seq"), "12");
  EXPECT_EQ(kv.at("worker"), "hprt_worker");
}

TEST(CheckTrace, EmptyTracePassesVacuously)
{
  const auto report = check_text("");
  EXPECT_TRUE(report.all_passed());
  EXPECT_EQ(report.checks.size(), 7u);
}

TEST(CheckTrace, Case1TracePasses)
{
  const auto r = run_scenario(build_case1(Ratio(3, 10)));
  const auto report = check_trace(r.trace);
  EXPECT_TRUE(report.all_passed()) << report.to_text();
}

TEST(CheckTrace, ExtraCallbackStartFailsReadinessGating)
{
  const auto r = run_scenario(build_case1(Ratio(3, 10)));
  std::string text = r.trace.to_text();
  const std::string needle = " hprt_worker CB_START topic=hprt seq=5\n";
  const auto pos = text.find(needle);
  ASSERT_NE(pos, std::string::npos);
  const auto line_start = text.rfind('\n', pos) + 1;
  const auto line_end = pos + needle.size();
  const auto line = text.substr(line_start, line_end - line_start);
  text.insert(line_end, line);
  const auto report = check_text(text);
  const auto & c = report.check("readiness_gating");
  EXPECT_FALSE(c.passed);
  ASSERT_TRUE(c.first_violation);
  EXPECT_EQ(std::to_string(c.first_violation->count()), line.substr(0, line.find(' ')));
  EXPECT_TRUE(report.check("budget_window").passed);
}

TEST(CheckTrace, BudgetWindowOverrun)
{
  const auto ok = check_text(std::string(kSporadicDecl) +
      "0 s READY\n0 s DISPATCH prio=60\n30 s EXHAUST\n30 s PRIO_DROP prio=10\n"
      "100 s REPLENISH amount=30 budget=30\n100 s PRIO_RESTORE prio=60\n130 s BLOCK\n200 - END\n");
  EXPECT_TRUE(ok.all_passed()) << ok.to_text();

  const auto bad = check_text(std::string(kSporadicDecl) +
      "0 s READY\n10 s DISPATCH prio=60\n50 s BLOCK\n60 - END\n");
  const auto & c = bad.check("budget_window");
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.first_violation, TimeNs(0));
}

TEST(CheckTrace, ReplenishmentMustComeOnePeriodAfterActivation)
{
  const std::string head = std::string(kSporadicDecl) +
    "5 s READY\n5 s DISPATCH prio=60\n15 s BLOCK\n";
  EXPECT_TRUE(check_text(head + "105 s REPLENISH amount=10 budget=30\n").all_passed());
  const auto early = check_text(head + "95 s REPLENISH amount=10 budget=30\n");
  EXPECT_FALSE(early.check("replenishment_timing").passed);
  EXPECT_EQ(early.check("replenishment_timing").first_violation, TimeNs(95));
  EXPECT_FALSE(
    check_text(head + "105 s REPLENISH amount=7 budget=27\n").check("replenishment_timing").passed);
}

TEST(CheckTrace, LockNesting)
{
  const auto bad = check_text("0 a LOCK lock=middleware\n3 b LOCK lock=middleware\n");
  EXPECT_FALSE(bad.check("lock_nesting").passed);
  EXPECT_EQ(bad.check("lock_nesting").first_violation, TimeNs(3));
  EXPECT_FALSE(check_text("0 a LOCK\n1 b UNLOCK\n").check("lock_nesting").passed);
  EXPECT_TRUE(check_text("0 a LOCK\n1 a UNLOCK\n1 b LOCK\n").check("lock_nesting").passed);
}

TEST(CheckTrace, IdleCpuWithReadyThreadFailsWorkConservation)
{
  const std::string decl = "0 a THREAD policy=SCHED_FIFO priority=50\n";
  const auto bad = check_text(decl + "5 a READY\n10 a DISPATCH prio=50\n");
  EXPECT_FALSE(bad.check("work_conservation").passed);
  EXPECT_EQ(bad.check("work_conservation").first_violation, TimeNs(5));
  EXPECT_TRUE(check_text(decl + "5 a READY\n5 a DISPATCH prio=50\n").all_passed());
}

TEST(CheckTrace, LowerPriorityRunningFailsPriorityOrder)
{
  const std::string decl =
    "0 a THREAD policy=SCHED_FIFO priority=50\n0 b THREAD policy=SCHED_FIFO priority=60\n";
  const auto bad = check_text(decl + "0 a READY\n0 a DISPATCH prio=50\n7 b READY\n9 a BLOCK\n");
  EXPECT_FALSE(bad.check("priority_order").passed);
  EXPECT_EQ(bad.check("priority_order").first_violation, TimeNs(7));
}

TEST(CheckTrace, MessageConservation)
{
  const std::string decl = "0 mw TOPIC topic=t depth=1 worker=t_worker\n";
  EXPECT_FALSE(check_text(decl + "4 executor TAKE topic=t seq=1\n")
    .check("message_conservation").passed);
  EXPECT_FALSE(check_text(decl + "1 mw ARRIVE topic=t seq=1\n2 mw ARRIVE topic=t seq=2\n")
    .check("message_conservation").passed);
  EXPECT_TRUE(check_text(decl +
    "1 mw ARRIVE topic=t seq=1\n2 mw ARRIVE topic=t seq=2\n2 mw DROP_MSG topic=t seq=1\n")
    .all_passed());
}

TEST(CheckTrace, TakeForBusyWorkerFailsReadinessGating)
{
  const auto bad = check_text(
    "0 mw TOPIC topic=t depth=4 worker=t_worker\n"
    "1 mw ARRIVE topic=t seq=1\n1 executor TAKE topic=t seq=1\n"
    "1 executor SIGNAL topic=t seq=1 worker=t_worker\n"
    "2 mw ARRIVE topic=t seq=2\n2 executor TAKE topic=t seq=2\n");
  EXPECT_FALSE(bad.check("readiness_gating").passed);
  EXPECT_EQ(bad.check("readiness_gating").first_violation, TimeNs(2));
}

TEST(CheckTrace, ReportText)
{
  const auto report = check_text("0 a LOCK\n3 b LOCK\n");
  const auto text = report.to_text();
  EXPECT_NE(text.find("budget_window PASS\n"), std::string::npos);
  EXPECT_NE(text.find("lock_nesting FAIL at 3: "), std::string::npos);
}

}  // namespace
