/*
 * Copyright 2026 The gprs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gprs/task_runtime.hpp"

#include <deque>
#include <iostream>
#include <thread>

namespace gprs::runtime {

namespace {

thread_local const Runtime* tls_runtime = nullptr;
thread_local std::size_t tls_worker = 0;

std::atomic<bool> oversubscription_warned{false};

}  // namespace

std::string format_trace_line(const TraceRecord& r) {
  std::string coords;
  for (int c : r.coords) {
    if (c < 0) break;
    if (!coords.empty()) coords += ':';
    coords += std::to_string(c);
  }
  if (coords.empty()) coords = "-";
  return std::to_string(r.task_id) + "," + r.kind + "," + coords + "," + std::to_string(r.worker) +
         "," + std::to_string(r.t_start_ns) + "," + std::to_string(r.t_end_ns);
}

namespace detail {

bool StateBase::is_ready() const {
  std::lock_guard lock(mutex_);
  return resolved_;
}

bool StateBase::has_failed() const {
  std::lock_guard lock(mutex_);
  return resolved_ && error_ != nullptr;
}

std::exception_ptr StateBase::error() const {
  std::lock_guard lock(mutex_);
  return error_;
}

void StateBase::on_resolved(std::function<void()> fn) {
  {
    std::lock_guard lock(mutex_);
    if (!resolved_) {
      continuations_.push_back(std::move(fn));
      return;
    }
  }
  fn();
}

void StateBase::wait() const {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return resolved_; });
}

void StateBase::set_error(std::exception_ptr e) {
  std::unique_lock lock(mutex_);
  if (resolved_) throw RuntimeStateError("future resolved twice");
  error_ = std::move(e);
  resolve(lock);
}

void StateBase::resolve(std::unique_lock<std::mutex>& lock) {
  resolved_ = true;
  auto continuations = std::move(continuations_);
  continuations_.clear();
  lock.unlock();
  cv_.notify_all();
  for (auto& c : continuations) c();
}

}  // namespace detail

struct Runtime::Worker {
  std::mutex mutex;
  std::deque<std::unique_ptr<Task>> deque;
  std::atomic<std::uint64_t> executed{0};
  std::mutex trace_mutex;
  std::vector<TraceRecord> trace;
};

Runtime::Runtime() = default;

Runtime::Runtime(const PoolConfig& cfg) { start(cfg); }

Runtime::~Runtime() { shutdown(); }

bool Runtime::in_worker() noexcept { return tls_runtime != nullptr; }

void Runtime::check_not_in_worker() const {
  if (in_worker())
    throw RuntimeStateError("blocking wait from inside a task body is not allowed");
}

void Runtime::ensure_running() const {
  if (!running_) throw RuntimeStateError("task submitted to a runtime that is not running");
}

void Runtime::start(const PoolConfig& cfg) {
  if (running_) throw RuntimeStateError("runtime already started");
  if (cfg.worker_count == 0) throw ConfigError("worker_count must be at least 1");

  const unsigned hw = std::thread::hardware_concurrency();
  if (cfg.warn_oversubscription && hw != 0 && cfg.worker_count > hw &&
      !oversubscription_warned.exchange(true)) {
    std::clog << "gprs: warning: " << cfg.worker_count << " workers oversubscribe " << hw
              << " hardware threads\n";
  }

  stopping_ = false;
  queued_ = 0;
  outstanding_ = 0;
  skipped_ = 0;
  trace_ = cfg.trace;
  inject_.clear();
  inject_head_ = 0;
  workers_.clear();
  for (std::size_t i = 0; i < cfg.worker_count; ++i) workers_.push_back(std::make_unique<Worker>());
  started_at_ = std::chrono::steady_clock::now();
  running_ = true;
  threads_.reserve(cfg.worker_count);
  for (std::size_t i = 0; i < cfg.worker_count; ++i)
    threads_.emplace_back([this, i] { worker_loop(i); });
}

RuntimeStats Runtime::shutdown() {
  RuntimeStats stats;
  if (!running_) return stats;
  running_ = false;
  {
    std::lock_guard lock(sleep_mutex_);
    stopping_ = true;
  }
  sleep_cv_.notify_all();
  threads_.clear();  // joins

  stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - started_at_);
  for (const auto& w : workers_) {
    stats.per_worker.push_back(w->executed.load());
    stats.tasks_executed += w->executed.load();
  }
  stats.tasks_skipped = skipped_.load();
  return stats;
}

std::uint64_t Runtime::tasks_executed() const noexcept {
  std::uint64_t total = 0;
  for (const auto& w : workers_) total += w->executed.load();
  return total;
}

std::vector<TraceRecord> Runtime::trace() const {
  std::vector<TraceRecord> out;
  for (const auto& w : workers_) {
    std::lock_guard lock(w->trace_mutex);
    out.insert(out.end(), w->trace.begin(), w->trace.end());
  }
  return out;
}

void Runtime::when_all(std::vector<detail::StateBase*> states, std::function<void()> release) {
  auto remaining = std::make_shared<std::atomic<std::size_t>>(states.size() + 1);
  auto shared_release = std::make_shared<std::function<void()>>(std::move(release));
  auto arrive = [remaining, shared_release] {
    if (remaining->fetch_sub(1) == 1) (*shared_release)();
  };
  for (auto* s : states) s->on_resolved(arrive);
  arrive();
}

void Runtime::schedule(std::unique_ptr<Task> task) {
  if (tls_runtime == this) {
    Worker& w = *workers_[tls_worker];
    std::lock_guard lock(w.mutex);
    w.deque.push_back(std::move(task));
  } else {
    std::lock_guard lock(inject_mutex_);
    inject_.push_back(std::move(task));
  }
  queued_.fetch_add(1);
  {
    std::lock_guard lock(sleep_mutex_);
  }
  sleep_cv_.notify_one();
}

std::unique_ptr<Runtime::Task> Runtime::find_task(std::size_t index) {
  std::unique_ptr<Task> task;
  {
    Worker& own = *workers_[index];
    std::lock_guard lock(own.mutex);
    if (!own.deque.empty()) {
      task = std::move(own.deque.back());
      own.deque.pop_back();
    }
  }
  if (!task) {
    std::lock_guard lock(inject_mutex_);
    if (inject_head_ < inject_.size()) {
      task = std::move(inject_[inject_head_++]);
      if (inject_head_ == inject_.size()) {
        inject_.clear();
        inject_head_ = 0;
      }
    }
  }
  for (std::size_t k = 1; !task && k < workers_.size(); ++k) {
    Worker& victim = *workers_[(index + k) % workers_.size()];
    std::lock_guard lock(victim.mutex);
    if (!victim.deque.empty()) {
      task = std::move(victim.deque.front());
      victim.deque.pop_front();
    }
  }
  if (task) queued_.fetch_sub(1);
  return task;
}

void Runtime::run_task(std::unique_ptr<Task> task, std::size_t index) {
  const auto t0 = std::chrono::steady_clock::now();
  auto t1 = t0;
  const bool executed = task->body(t1);
  Worker& w = *workers_[index];
  if (executed) {
    w.executed.fetch_add(1);
  } else {
    skipped_.fetch_add(1);
  }
  if (executed && trace_) {
    TraceRecord r;
    r.task_id = task->id;
    r.kind = task->label.kind;
    r.coords = task->label.coords;
    r.deps = std::move(task->deps);
    r.worker = index;
    r.t_start_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t0 - started_at_).count();
    r.t_end_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - started_at_).count();
    std::lock_guard lock(w.trace_mutex);
    w.trace.push_back(std::move(r));
  }
  task.reset();
  if (outstanding_.fetch_sub(1) == 1) {
    std::lock_guard lock(idle_mutex_);
    idle_cv_.notify_all();
  }
}

void Runtime::wait_idle() const {
  check_not_in_worker();
  std::unique_lock lock(idle_mutex_);
  idle_cv_.wait(lock, [this] { return outstanding_.load() == 0; });
}

void Runtime::worker_loop(std::size_t index) {
  tls_runtime = this;
  tls_worker = index;
  for (;;) {
    if (auto task = find_task(index)) {
      run_task(std::move(task), index);
      continue;
    }
    std::unique_lock lock(sleep_mutex_);
    sleep_cv_.wait(lock, [this] { return queued_.load() > 0 || stopping_.load(); });
    if (stopping_.load() && queued_.load() == 0) break;
  }
  tls_runtime = nullptr;
}

}  // namespace gprs::runtime
