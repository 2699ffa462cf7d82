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

#ifndef RTEXEC__EXECUTOR_HPP_
#define RTEXEC__EXECUTOR_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtexec/errors.hpp"
#include "rtexec/sched_core.hpp"
#include "rtexec/sim_kernel.hpp"
#include "rtexec/time.hpp"

namespace rtexec
{

/// Name used for middleware-side trace records (arrivals, drops, declarations).
inline constexpr std::string_view kMiddlewareActor = "mw";

inline bool valid_topic_name(const std::string & topic)
{
  if (topic.empty()) {
    return false;
  }
  for (char c : topic) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
      (c >= '0' && c <= '9') || c == '_' || c == '/';
    if (!ok) {
      return false;
    }
  }
  return true;
}

/// CPU cost of each middleware operation, paid while holding the middleware lock.
struct MiddlewareCosts
{
  TimeNs fill;
  TimeNs wait;
  TimeNs take;
  TimeNs publish;

  bool operator==(const MiddlewareCosts &) const = default;
};

/// What a subscription callback does with each message.
struct CallbackSpec
{
  TimeNs busy_time;   // CPU consumed, preemptible and budget-charged
  TimeNs sleep_time;  // blocked afterwards, no CPU
  std::optional<std::string> publishes;

  bool operator==(const CallbackSpec &) const = default;
};

struct ExecutorConfig
{
  int priority{110};
  TimeNs wait_timeout{TimeNs::from_ms(100)};
  std::size_t queue_depth{16};
  MiddlewareCosts costs;
};

/// Per-topic bounded FIFO standing in for the middleware's receive queues.
class MiddlewareQueue
{
public:
  struct Counters
  {
    std::uint64_t arrived{0};
    std::uint64_t taken{0};
    std::uint64_t dropped{0};
  };

  explicit MiddlewareQueue(std::size_t depth)
  : depth_(depth)
  {
    if (depth == 0) {
      throw InvalidParams("queue_depth", "queue depth must be positive");
    }
  }

  void add_topic(const std::string & topic) {queues_.try_emplace(topic);}
  bool has_topic(const std::string & topic) const {return queues_.count(topic) != 0;}

  /// Enqueue; returns the dropped oldest message when the queue was full.
  std::optional<Message> push(Message msg)
  {
    auto & q = queues_.at(msg.topic);
    ++q.counters.arrived;
    std::optional<Message> dropped;
    if (q.messages.size() >= depth_) {
      dropped = std::move(q.messages.front());
      q.messages.pop_front();
      ++q.counters.dropped;
    }
    q.messages.push_back(std::move(msg));
    return dropped;
  }

  std::optional<Message> take(const std::string & topic)
  {
    auto & q = queues_.at(topic);
    if (q.messages.empty()) {
      return std::nullopt;
    }
    Message m = std::move(q.messages.front());
    q.messages.pop_front();
    ++q.counters.taken;
    return m;
  }

  bool empty(const std::string & topic) const {return queues_.at(topic).messages.empty();}
  std::size_t size(const std::string & topic) const {return queues_.at(topic).messages.size();}
  const Counters & counters(const std::string & topic) const {return queues_.at(topic).counters;}
  std::size_t depth() const {return depth_;}

private:
  struct TopicQueue
  {
    std::deque<Message> messages;
    Counters counters;
  };
  std::size_t depth_;
  std::map<std::string, TopicQueue> queues_;
};

/// The single mutex serializing every middleware access.
/**
 * Ownership is handed directly to the best waiter on release (highest
 * effective priority, then arrival order); the waiter is woken by a
 * LockRelease event at the same instant.
 */
class MiddlewareLock
{
public:
  MiddlewareLock(Kernel & kernel, CpuScheduler & cpu, LockId id)
  : kernel_(kernel), cpu_(cpu), id_(id) {}

  LockId id() const {return id_;}
  std::optional<ThreadId> holder() const {return holder_;}
  std::size_t waiting() const {return waiters_.size();}

  /// True when acquired; otherwise the caller is queued and must block.
  bool acquire(ThreadId who)
  {
    if (holder_ == who) {
      throw InvalidState("middleware lock is not recursive");
    }
    if (!holder_) {
      holder_ = who;
      kernel_.record(cpu_.thread(who).name, tag::kLock, detail());
      return true;
    }
    waiters_.push_back(who);
    return false;
  }

  void release(ThreadId who)
  {
    if (holder_ != who) {
      throw InvalidState("middleware lock released by non-holder");
    }
    kernel_.record(cpu_.thread(who).name, tag::kUnlock, detail());
    holder_.reset();
    if (waiters_.empty()) {
      return;
    }
    auto best = waiters_.begin();
    for (auto it = waiters_.begin(); it != waiters_.end(); ++it) {
      if (cpu_.thread(*it).effective_priority > cpu_.thread(*best).effective_priority) {
        best = it;
      }
    }
    holder_ = *best;
    waiters_.erase(best);
    kernel_.schedule(kernel_.now(), event::LockRelease{id_});
  }

  /// The handed-over owner resumes.
  void on_release_event()
  {
    if (!holder_) {
      throw InvalidState("lock handover without holder");
    }
    kernel_.record(cpu_.thread(*holder_).name, tag::kLock, detail());
    cpu_.make_ready(*holder_);
  }

private:
  std::string detail() const {return "lock=middleware";}

  Kernel & kernel_;
  CpuScheduler & cpu_;
  LockId id_;
  std::optional<ThreadId> holder_;
  std::vector<ThreadId> waiters_;
};

enum class SubscriptionState { Ready, Busy };

struct Subscription
{
  std::string topic;
  CallbackSpec callback;
  SchedParams sched;
  ThreadId worker;
  SubscriptionState state{SubscriptionState::Ready};
  std::optional<Message> msg_slot;
  std::uint64_t skipped_busy{0};
  std::uint64_t completed{0};
};

/// Multi-threaded real-time executor on the simulated CPU.
/**
 * One executor thread polls the middleware and hands each message to the
 * dedicated worker thread of its subscription, but only while that worker is
 * READY. Workers run callbacks under their own scheduling parameters.
 *
 * Wait semantics: the executor blocks (lock released) until a new message
 * arrives on any subscribed topic, a worker turns READY while its topic has
 * queued data, or the timeout elapses. Entering the wait with takeable data
 * (queued message, READY worker) returns immediately. A message whose worker
 * is BUSY stays queued and is reported as SKIP_BUSY.
 */
class Executor
{
public:
  using RemoteSink = std::function<bool (const Message &)>;

  Executor(Kernel & kernel, CpuScheduler & cpu, ExecutorConfig config)
  : kernel_(kernel), cpu_(cpu), config_(config), queue_(config.queue_depth),
    lock_(kernel, cpu, LockId{0})
  {
    if (config_.wait_timeout.is_zero()) {
      throw InvalidParams("wait_timeout", "wait timeout must be positive");
    }
  }

  Executor(const Executor &) = delete;
  Executor & operator=(const Executor &) = delete;

  /// Register a subscription with its own worker scheduling parameters.
  void add_subscription_sched(const std::string & topic, CallbackSpec callback, SchedParams sched)
  {
    if (started_) {
      throw InvalidState("subscriptions must be added before start()");
    }
    if (!valid_topic_name(topic)) {
      throw InvalidParams("topic", "invalid topic name '" + topic + "'");
    }
    if (callback.publishes && !valid_topic_name(*callback.publishes)) {
      throw InvalidParams("publishes", "invalid topic name '" + *callback.publishes + "'");
    }
    for (const auto & s : subs_) {
      if (s.topic == topic) {
        throw DuplicateTopic(topic);
      }
    }
    sched.validate();
    Subscription s;
    s.topic = topic;
    s.callback = std::move(callback);
    s.sched = sched;
    subs_.push_back(std::move(s));
  }

  /// Spawn one worker per subscription plus the executor thread, then start spinning.
  void start()
  {
    if (started_) {
      throw InvalidState("executor already started");
    }
    started_ = true;
    spawn_workers();
    executor_thread_ = cpu_.add_thread(
      "executor", SchedParams::fifo(config_.priority), [this] {executor_step();});
    executor_phase_ = ExecPhase::Lock;
    cpu_.make_ready(executor_thread_);
  }

  /// Peer delivery for topics not subscribed locally; return true when consumed.
  void set_remote_sink(RemoteSink sink) {remote_sink_ = std::move(sink);}

  /// Handle executor-owned events; returns false for other kinds.
  bool handle(const Event & ev)
  {
    if (const auto * a = std::get_if<event::MessageArrival>(&ev.kind)) {
      on_arrival(a->message);
      return true;
    }
    if (const auto * t = std::get_if<event::Timer>(&ev.kind)) {
      on_timer(t->thread);
      return true;
    }
    if (std::get_if<event::LockRelease>(&ev.kind) != nullptr) {
      lock_.on_release_event();
      return true;
    }
    return false;
  }

  /// Middleware arrival on a locally subscribed topic.
  void on_arrival(const Message & msg)
  {
    if (!queue_.has_topic(msg.topic)) {
      ++unrouted_[msg.topic];
      return;
    }
    kernel_.record(kMiddlewareActor, tag::kArrive, describe(msg));
    if (auto dropped = queue_.push(msg)) {
      kernel_.record(kMiddlewareActor, tag::kDropMsg, describe(*dropped));
    }
    wake_executor();
  }

  const std::vector<Subscription> & subscriptions() const {return subs_;}
  const Subscription & subscription(const std::string & topic) const
  {
    for (const auto & s : subs_) {
      if (s.topic == topic) {
        return s;
      }
    }
    throw InvalidParams("topic", "no subscription for " + topic);
  }
  const MiddlewareQueue & queue() const {return queue_;}
  const MiddlewareLock & lock() const {return lock_;}
  ThreadId executor_thread() const {return executor_thread_;}
  const ExecutorConfig & config() const {return config_;}

  std::uint64_t published(const std::string & topic) const
  {
    auto it = published_.find(topic);
    return it == published_.end() ? 0 : it->second;
  }
  std::uint64_t discarded(const std::string & topic) const
  {
    auto it = unrouted_.find(topic);
    return it == unrouted_.end() ? 0 : it->second;
  }

private:
  enum class ExecPhase { Lock, Fill, Wait, Relock, WaitReturn, Scan, Signal, Unlock };
  enum class WorkerPhase { AwaitSignal, AfterBusy, AfterSleep, Publish, Deliver, Finish };

  static std::string describe(const Message & m)
  {
    return "topic=" + m.topic + " seq=" + std::to_string(m.seq);
  }

  void spawn_workers()
  {
    worker_phase_.assign(subs_.size(), WorkerPhase::AwaitSignal);
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      auto & s = subs_[i];
      queue_.add_topic(s.topic);
      s.worker = cpu_.add_thread(s.topic + "_worker", s.sched, [this, i] {worker_step(i);});
      kernel_.record(
        kMiddlewareActor, tag::kTopic,
        "topic=" + s.topic + " depth=" + std::to_string(queue_.depth()) +
        " worker=" + cpu_.thread(s.worker).name);
    }
  }

  bool has_takeable() const
  {
    for (const auto & s : subs_) {
      if (s.state == SubscriptionState::Ready && !queue_.empty(s.topic)) {
        return true;
      }
    }
    return false;
  }

  void wake_executor()
  {
    if (!waiting_) {
      return;
    }
    waiting_ = false;
    if (wait_timer_) {
      kernel_.cancel(*wait_timer_);
      wait_timer_.reset();
    }
    cpu_.make_ready(executor_thread_);
  }

  void on_timer(ThreadId thread)
  {
    if (thread == executor_thread_) {
      wait_timer_.reset();
      waiting_ = false;
      cpu_.make_ready(executor_thread_);
      return;
    }
    // Worker callback sleep ended.
    cpu_.make_ready(thread);
  }

  // One iteration: lock, fill wait set, wait, take from every READY subscription
  // with data and signal its worker, unlock.
  void executor_step()
  {
    const auto self = executor_thread_;
    for (;;) {
      switch (executor_phase_) {
        case ExecPhase::Lock:
          executor_phase_ = ExecPhase::Fill;
          if (!lock_.acquire(self)) {
            cpu_.block(self);
            return;
          }
          continue;
        case ExecPhase::Fill:
          executor_phase_ = ExecPhase::Wait;
          cpu_.consume(self, config_.costs.fill);
          return;
        case ExecPhase::Wait:
          if (has_takeable()) {
            executor_phase_ = ExecPhase::Scan;
            scan_index_ = 0;
            cpu_.consume(self, config_.costs.wait);
            return;
          }
          lock_.release(self);
          waiting_ = true;
          wait_timer_ = kernel_.schedule_after(config_.wait_timeout, event::Timer{self});
          executor_phase_ = ExecPhase::Relock;
          cpu_.block(self);
          return;
        case ExecPhase::Relock:
          executor_phase_ = ExecPhase::WaitReturn;
          if (!lock_.acquire(self)) {
            cpu_.block(self);
            return;
          }
          continue;
        case ExecPhase::WaitReturn:
          executor_phase_ = ExecPhase::Scan;
          scan_index_ = 0;
          cpu_.consume(self, config_.costs.wait);
          return;
        case ExecPhase::Scan:
          while (scan_index_ < subs_.size()) {
            auto & s = subs_[scan_index_];
            if (queue_.empty(s.topic)) {
              ++scan_index_;
              continue;
            }
            if (s.state == SubscriptionState::Busy) {
              ++s.skipped_busy;
              kernel_.record(cpu_.thread(self).name, tag::kSkipBusy, "topic=" + s.topic);
              ++scan_index_;
              continue;
            }
            s.msg_slot = queue_.take(s.topic);
            kernel_.record(cpu_.thread(self).name, tag::kTake, describe(*s.msg_slot));
            executor_phase_ = ExecPhase::Signal;
            cpu_.consume(self, config_.costs.take);
            return;
          }
          executor_phase_ = ExecPhase::Unlock;
          continue;
        case ExecPhase::Signal: {
            auto & s = subs_[scan_index_];
            s.state = SubscriptionState::Busy;
            kernel_.record(
              cpu_.thread(self).name, tag::kSignal,
              describe(*s.msg_slot) + " worker=" + cpu_.thread(s.worker).name);
            cpu_.make_ready(s.worker);
            ++scan_index_;
            executor_phase_ = ExecPhase::Scan;
            continue;
          }
        case ExecPhase::Unlock:
          lock_.release(self);
          executor_phase_ = ExecPhase::Lock;
          continue;
      }
    }
  }

  // Worker loop: wait for a signal, run the callback, publish, turn READY.
  void worker_step(std::size_t index)
  {
    auto & s = subs_[index];
    auto & phase = worker_phase_[index];
    const auto self = s.worker;
    const auto & name = cpu_.thread(self).name;
    for (;;) {
      switch (phase) {
        case WorkerPhase::AwaitSignal:
          if (!s.msg_slot || s.state != SubscriptionState::Busy) {
            throw InvalidState(name + " woke without a message");
          }
          kernel_.record(name, tag::kCbStart, describe(*s.msg_slot));
          phase = WorkerPhase::AfterBusy;
          cpu_.consume(self, s.callback.busy_time);
          return;
        case WorkerPhase::AfterBusy:
          phase = WorkerPhase::AfterSleep;
          if (!s.callback.sleep_time.is_zero()) {
            kernel_.schedule_after(s.callback.sleep_time, event::Timer{self});
            cpu_.block(self);
            return;
          }
          continue;
        case WorkerPhase::AfterSleep:
          if (!s.callback.publishes) {
            phase = WorkerPhase::Finish;
            continue;
          }
          phase = WorkerPhase::Publish;
          if (!lock_.acquire(self)) {
            cpu_.block(self);
            return;
          }
          continue;
        case WorkerPhase::Publish:
          phase = WorkerPhase::Deliver;
          cpu_.consume(self, config_.costs.publish);
          return;
        case WorkerPhase::Deliver:
          publish_reply(self, s);
          lock_.release(self);
          phase = WorkerPhase::Finish;
          continue;
        case WorkerPhase::Finish:
          kernel_.record(name, tag::kCbEnd, describe(*s.msg_slot));
          s.msg_slot.reset();
          s.state = SubscriptionState::Ready;
          ++s.completed;
          phase = WorkerPhase::AwaitSignal;
          if (!queue_.empty(s.topic)) {
            wake_executor();
          }
          cpu_.block(self);
          return;
      }
    }
  }

  // Publishing wrapper used by callbacks; the caller holds the middleware lock.
  void publish_reply(ThreadId self, const Subscription & s)
  {
    const auto & topic = *s.callback.publishes;
    Message reply;
    reply.topic = topic;
    reply.seq = ++published_[topic];
    reply.publish_time = kernel_.now();
    reply.origin_time = s.msg_slot->origin_time;
    kernel_.record(cpu_.thread(self).name, tag::kPublish, describe(reply));
    if (queue_.has_topic(topic)) {
      kernel_.schedule(kernel_.now(), event::MessageArrival{std::move(reply)});
      return;
    }
    if (remote_sink_ && remote_sink_(reply)) {
      return;
    }
    ++unrouted_[topic];
  }

  Kernel & kernel_;
  CpuScheduler & cpu_;
  ExecutorConfig config_;
  MiddlewareQueue queue_;
  MiddlewareLock lock_;
  std::vector<Subscription> subs_;
  std::vector<WorkerPhase> worker_phase_;
  ThreadId executor_thread_;
  ExecPhase executor_phase_{ExecPhase::Lock};
  std::size_t scan_index_{0};
  bool started_{false};
  bool waiting_{false};
  std::optional<EventHandle> wait_timer_;
  RemoteSink remote_sink_;
  std::map<std::string, std::uint64_t> published_;
  std::map<std::string, std::uint64_t> unrouted_;
};

}  // namespace rtexec

#endif  // RTEXEC__EXECUTOR_HPP_
