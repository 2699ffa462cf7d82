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

#include <string>
#include <vector>

#include "support.hpp"

namespace
{
using namespace rtexec;
using namespace rtexec::literals;

Scenario one_topic(TimeNs duration, TimeNs period, CallbackSpec cb, SchedParams sched)
{
  Scenario s;
  s.duration = duration;
  s.pings = {PingSpec{"p", "ping", "ping_pong", period, TimeNs()}};
  s.subscriptions = {SubscriptionSpec{"ping", std::move(cb), sched}};
  return s;
}

std::vector<std::string> tags_at(const Trace & trace, TimeNs at)
{
  std::vector<std::string> out;
  for (const auto & r : trace.records()) {
    if (r.time == at) {
      out.push_back(r.thread + " " + r.tag);
    }
  }
  return out;
}

std::vector<TimeNs> times_of(const Trace & trace, std::string_view tag, std::string_view who)
{
  std::vector<TimeNs> out;
  for (const auto & r : trace.records()) {
    if (r.tag == tag && r.thread == who) {
      out.push_back(r.time);
    }
  }
  return out;
}

TEST(Executor, ReadyWorkerGetsMessageTakenAndSignaled)
{
  Simulation sim(one_topic(10_ms, 10_ms, {5_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(50)));
  const auto & trace = sim.run();
  const auto at10 = tags_at(trace, 10_ms);
  const std::vector<std::string> expected_prefix = {
    "mw ARRIVE", "executor READY", "executor DISPATCH", "executor LOCK", "executor TAKE",
    "executor SIGNAL", "ping_worker READY"};
  ASSERT_GE(at10.size(), expected_prefix.size());
  EXPECT_TRUE(std::equal(expected_prefix.begin(), expected_prefix.end(), at10.begin()));
  EXPECT_EQ(sim.executor().subscription("ping").state, SubscriptionState::Busy);
}

TEST(Executor, BusyWorkerLeavesMessageQueued)
{
  Simulation sim(one_topic(20_ms, 10_ms, {25_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(50)));
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kSkipBusy, "executor"), std::vector<TimeNs>{20_ms});
  EXPECT_EQ(sim.executor().queue().size("ping"), 1u);
  EXPECT_EQ(sim.executor().subscription("ping").skipped_busy, 1u);
  EXPECT_EQ(trace.count(tag::kTake), 1u);
}

TEST(Executor, TimeoutWithoutMessagesRefillsWithoutTaking)
{
  Scenario s;
  s.duration = 350_ms;
  s.subscriptions = {SubscriptionSpec{"idle", {1_ms, TimeNs(), std::nullopt}, SchedParams::fifo(50)}};
  Simulation sim(s);
  const auto & trace = sim.run();
  // Each timeout relocks for the (empty) scan, unlocks, then locks the next iteration.
  EXPECT_EQ(times_of(trace, tag::kLock, "executor"),
    (std::vector<TimeNs>{TimeNs(), 100_ms, 100_ms, 200_ms, 200_ms, 300_ms, 300_ms}));
  EXPECT_EQ(times_of(trace, tag::kBlock, "executor"),
    (std::vector<TimeNs>{TimeNs(), 100_ms, 200_ms, 300_ms}));
  EXPECT_EQ(trace.count(tag::kTake), 0u);
}

TEST(Executor, WorkersMirrorRequestedParamsAndStartBlocked)
{
  Scenario s = build_case1(Ratio(3, 10));
  Simulation sim(s);
  const auto & hprt = sim.cpu().thread(sim.executor().subscription("hprt").worker);
  const auto & lpbe = sim.cpu().thread(sim.executor().subscription("lpbe").worker);
  EXPECT_EQ(hprt.params, SchedParams::sporadic(60, 10, 30_ms, 100_ms, 100));
  EXPECT_EQ(hprt.name, "hprt_worker");
  EXPECT_EQ(lpbe.params, SchedParams::fifo(50));
  EXPECT_EQ(hprt.state, ThreadState::Blocked);
  EXPECT_EQ(lpbe.state, ThreadState::Blocked);
  EXPECT_EQ(sim.cpu().thread(sim.executor().executor_thread()).params, SchedParams::fifo(110));
}

TEST(Executor, SubscriptionValidation)
{
  Kernel k;
  CpuScheduler cpu(k);
  Executor ex(k, cpu, ExecutorConfig{});
  const CallbackSpec cb{10_ms, TimeNs(), std::nullopt};
  ex.add_subscription_sched("hprt", cb, SchedParams::sporadic(60, 10, 30_ms, 100_ms, 100));
  EXPECT_THROW(ex.add_subscription_sched("hprt", cb, SchedParams::fifo(50)), DuplicateTopic);
  EXPECT_THROW(
    ex.add_subscription_sched("x", cb, SchedParams::sporadic(60, 10, 200_ms, 100_ms, 1)),
    InvalidParams);
  EXPECT_THROW(
    ex.add_subscription_sched("y", cb, SchedParams::sporadic(60, 60, 20_ms, 100_ms, 1)),
    InvalidParams);
  EXPECT_THROW(ex.add_subscription_sched("bad topic", cb, SchedParams::fifo(1)), InvalidParams);
}

TEST(Executor, UncontendedFifoCallbackTakesBusyTime)
{
  Simulation sim(one_topic(100_ms, 50_ms, {10_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(50)));
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kCbStart, "ping_worker"), (std::vector<TimeNs>{50_ms, 100_ms}));
  EXPECT_EQ(times_of(trace, tag::kCbEnd, "ping_worker"), (std::vector<TimeNs>{60_ms}));
}

TEST(Executor, CallbackOutlivingBudgetFinishesAtLowPriority)
{
  // First callback leaves 3 ms of a 13 ms budget; the second runs 3 ms at
  // priority 60 and 7 ms at priority 10.
  Simulation sim(one_topic(
      30_ms, 10_ms, {10_ms, TimeNs(), "ping_pong"},
      SchedParams::sporadic(60, 10, 13_ms, 100_ms, 100)));
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kExhaust, "ping_worker"), std::vector<TimeNs>{23_ms});
  EXPECT_EQ(times_of(trace, tag::kCbEnd, "ping_worker"), (std::vector<TimeNs>{20_ms, 30_ms}));
  const auto & stats = sim.cpu().thread(sim.executor().subscription("ping").worker).stats;
  EXPECT_EQ(stats.normal_prio_cpu, 13_ms);
  EXPECT_EQ(stats.low_prio_cpu, 7_ms);
}

TEST(Executor, ZeroWorkCallbackIsReadyAtOnce)
{
  Simulation sim(one_topic(15_ms, 10_ms, {TimeNs(), TimeNs(), "ping_pong"}, SchedParams::fifo(50)));
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kCbEnd, "ping_worker"), std::vector<TimeNs>{10_ms});
  EXPECT_EQ(sim.executor().subscription("ping").state, SubscriptionState::Ready);
  EXPECT_EQ(sim.metrics().topic("ping").received, 1u);
  EXPECT_EQ(sim.metrics().topic("ping").max_latency, TimeNs());
}

TEST(Executor, PongReachesThePingNode)
{
  Simulation sim(one_topic(35_ms, 10_ms, {2_ms, 3_ms, "ping_pong"}, SchedParams::fifo(50)));
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kPublish, "ping_worker"),
    (std::vector<TimeNs>{15_ms, 25_ms, 35_ms}));
  EXPECT_EQ(sim.metrics().topic("ping").received, 3u);
  EXPECT_EQ(sim.received_latencies(0), (std::vector<TimeNs>{5_ms, 5_ms, 5_ms}));
}

TEST(Executor, PublishWaitsForLockHeldByExecutor)
{
  // The worker outranks the executor and preempts it while it fills the wait
  // set with the lock held (10 ms); its publish blocks at 11 ms until the
  // executor finishes the remaining 5 ms of fill and unlocks at 16 ms.
  Scenario s = one_topic(20_ms, 10_ms, {1_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(60));
  s.executor_priority = 50;
  s.middleware_costs.fill = 5_ms;
  Simulation sim(s);
  const auto & trace = sim.run();
  EXPECT_EQ(times_of(trace, tag::kBlock, "ping_worker").front(), 11_ms);
  EXPECT_EQ(times_of(trace, tag::kLock, "ping_worker"), std::vector<TimeNs>{16_ms});
  EXPECT_EQ(times_of(trace, tag::kPublish, "ping_worker"), std::vector<TimeNs>{16_ms});
  const auto unlocks = times_of(trace, tag::kUnlock, "executor");
  EXPECT_NE(std::find(unlocks.begin(), unlocks.end(), 16_ms), unlocks.end());
  EXPECT_TRUE(check_trace(trace).check("lock_nesting").passed);
}

TEST(Executor, PublishWithoutSubscriberIsCountedAndDiscarded)
{
  Simulation sim(one_topic(55_ms, 10_ms, {1_ms, TimeNs(), "nowhere"}, SchedParams::fifo(50)));
  sim.run();
  EXPECT_EQ(sim.executor().published("nowhere"), 5u);
  EXPECT_EQ(sim.executor().discarded("nowhere"), 5u);
  EXPECT_EQ(sim.metrics().topic("ping").received, 0u);
}

TEST(Executor, LocalReplyIsDeliveredThroughTheQueue)
{
  Scenario s = one_topic(35_ms, 10_ms, {1_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(50));
  s.subscriptions[0].callback.publishes = "relay";
  s.subscriptions.push_back(
    SubscriptionSpec{"relay", {1_ms, TimeNs(), "ping_pong"}, SchedParams::fifo(40)});
  Simulation sim(s);
  sim.run();
  EXPECT_EQ(sim.metrics().topic("ping").received, 3u);
  EXPECT_EQ(sim.executor().subscription("relay").completed, 3u);
}

TEST(MiddlewareQueue, DropsOldestWhenFull)
{
  MiddlewareQueue q(2);
  q.add_topic("t");
  EXPECT_FALSE(q.push(Message{"t", 1, TimeNs(), TimeNs()}));
  EXPECT_FALSE(q.push(Message{"t", 2, TimeNs(), TimeNs()}));
  const auto dropped = q.push(Message{"t", 3, TimeNs(), TimeNs()});
  ASSERT_TRUE(dropped);
  EXPECT_EQ(dropped->seq, 1u);
  EXPECT_EQ(q.take("t")->seq, 2u);
  EXPECT_EQ(q.counters("t").arrived, 3u);
  EXPECT_EQ(q.counters("t").dropped, 1u);
  EXPECT_EQ(q.counters("t").taken, 1u);
  EXPECT_THROW(MiddlewareQueue(0), InvalidParams);
}

}  // namespace
