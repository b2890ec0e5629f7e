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

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "gprs/error.hpp"

/// Futures-based dataflow runtime. A task is submitted together with the
/// futures it reads; it runs on a worker once all of them have resolved and
/// resolves its own future with the value it returns. Graphs are therefore
/// built by composing futures, and cycles cannot be expressed.
namespace gprs::runtime {

struct PoolConfig {
  std::size_t worker_count = 1;
  /// Record a TraceRecord for every executed task.
  bool trace = false;
  /// Print a warning when worker_count exceeds the hardware thread count.
  bool warn_oversubscription = true;
};

/// Label attached to a task for tracing ("potrf", "gemm", ...) plus up to
/// three tile coordinates (-1 when unused).
struct TaskLabel {
  const char* kind = "task";
  std::array<int, 3> coords{-1, -1, -1};
};

inline TaskLabel label(const char* kind, int a = -1, int b = -1, int c = -1) {
  return TaskLabel{kind, {a, b, c}};
}

struct TraceRecord {
  std::uint64_t task_id = 0;
  std::string kind;
  std::array<int, 3> coords{-1, -1, -1};
  /// Producing task ids of the inputs (0 for values that were ready up front).
  std::vector<std::uint64_t> deps;
  std::size_t worker = 0;
  std::int64_t t_start_ns = 0;
  std::int64_t t_end_ns = 0;
};

/// One line per record: task_id, kind, tile_coords, worker, t_start_ns, t_end_ns.
std::string format_trace_line(const TraceRecord& r);

struct RuntimeStats {
  std::uint64_t tasks_executed = 0;
  /// Tasks that never ran because an input future had failed.
  std::uint64_t tasks_skipped = 0;
  std::vector<std::uint64_t> per_worker;
  std::chrono::nanoseconds wall_time{0};
};

class Runtime;

namespace detail {

class StateBase {
 public:
  virtual ~StateBase() = default;

  bool is_ready() const;
  bool has_failed() const;
  std::exception_ptr error() const;
  std::uint64_t producer() const noexcept { return producer_; }
  void set_producer(std::uint64_t id) noexcept { producer_ = id; }

  /// Runs `fn` once the state resolves (immediately if it already has).
  void on_resolved(std::function<void()> fn);
  void wait() const;
  void set_error(std::exception_ptr e);

 protected:
  void resolve(std::unique_lock<std::mutex>& lock);

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  bool resolved_ = false;
  std::exception_ptr error_;

 private:
  std::vector<std::function<void()>> continuations_;
  std::uint64_t producer_ = 0;
};

template <class T>
class State final : public StateBase {
 public:
  void set_value(T v) {
    std::unique_lock lock(mutex_);
    if (resolved_) throw RuntimeStateError("future resolved twice");
    value_.emplace(std::move(v));
    resolve(lock);
  }
  /// Requires a resolved, non-failed state.
  const T& value() const noexcept { return *value_; }

 private:
  std::optional<T> value_;
};

}  // namespace detail

/// Shared handle to a value produced by a task. Copies refer to the same value;
/// a future resolves exactly once.
template <class T>
class Future {
 public:
  using value_type = T;

  Future() = default;

  bool valid() const noexcept { return state_ != nullptr; }
  bool is_ready() const { return state_->is_ready(); }
  bool has_failed() const { return state_->has_failed(); }
  std::uint64_t producer() const noexcept { return state_->producer(); }

  /// Blocks until resolved; rethrows the producing task's error. Must not be
  /// called from inside a task body (Runtime::wait enforces this).
  const T& get() const {
    state_->wait();
    if (auto e = state_->error()) std::rethrow_exception(e);
    return state_->value();
  }

 private:
  template <class U>
  friend class Future;
  friend class Runtime;
  template <class U>
  friend Future<U> make_ready_future(U value);

  explicit Future(std::shared_ptr<detail::State<T>> s) : state_(std::move(s)) {}

  std::shared_ptr<detail::State<T>> state_;
};

template <class T>
Future<T> make_ready_future(T value) {
  auto s = std::make_shared<detail::State<T>>();
  s->set_value(std::move(value));
  return Future<T>(std::move(s));
}

/// Fixed-size work-stealing pool. Each worker owns a deque: it pops its own
/// work LIFO and steals from the others FIFO. Tasks released from inside a
/// worker go to that worker's deque; tasks released from outside go to a
/// shared injection queue.
class Runtime {
 public:
  Runtime();
  explicit Runtime(const PoolConfig& cfg);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Throws RuntimeStateError if already running, ConfigError if worker_count == 0.
  void start(const PoolConfig& cfg);
  /// Joins the workers and returns the accounting of this run. Pending tasks
  /// still execute first. Idempotent; a stopped runtime can be started again.
  RuntimeStats shutdown();

  bool running() const noexcept { return running_; }
  std::size_t worker_count() const noexcept { return workers_.size(); }

  /// Schedules `fn(deps.get()...)` once every dependency resolved. If any
  /// dependency failed, `fn` is not run and the result carries the first
  /// failed dependency's error.
  template <class F, class... Ts>
  auto dataflow(TaskLabel lbl, F&& fn, const Future<Ts>&... deps)
      -> Future<std::invoke_result_t<F&, const Ts&...>>;

  /// Like dataflow, over a homogeneous list of dependencies; `fn` receives
  /// `std::span<const T* const>` in list order.
  template <class F, class T>
  auto dataflow_all(TaskLabel lbl, F&& fn, std::vector<Future<T>> deps)
      -> Future<std::invoke_result_t<F&, std::span<const T* const>>>;

  /// Blocks the calling (non-worker) thread until `f` resolves.
  template <class T>
  const T& wait(const Future<T>& f) const {
    check_not_in_worker();
    return f.get();
  }

  template <class T>
  std::vector<T> wait_all(const std::vector<Future<T>>& fs) const {
    check_not_in_worker();
    std::vector<T> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(f.get());
    return out;
  }

  /// Blocks until every submitted task has either run or been skipped. Tasks
  /// whose inputs can never resolve would block this forever; the library only
  /// builds graphs over futures it produces itself.
  void wait_idle() const;

  /// Tasks executed since start().
  std::uint64_t tasks_executed() const noexcept;
  /// Trace of tasks executed so far. Only meaningful when no task is running.
  std::vector<TraceRecord> trace() const;

  /// True if the calling thread is a worker of any runtime.
  static bool in_worker() noexcept;

 private:
  struct Task {
    std::uint64_t id = 0;
    TaskLabel label;
    std::vector<std::uint64_t> deps;
    /// Returns false if the task was skipped because an input failed. `done`
    /// is stamped before the result is published, so a dependent can never
    /// appear to start before its input finished.
    std::function<bool(std::chrono::steady_clock::time_point& done)> body;
  };
  struct Worker;

  void check_not_in_worker() const;
  void ensure_running() const;
  std::uint64_t next_id() noexcept {
    outstanding_.fetch_add(1);
    return next_task_id_.fetch_add(1) + 1;
  }
  void schedule(std::unique_ptr<Task> task);
  void worker_loop(std::size_t index);
  std::unique_ptr<Task> find_task(std::size_t index);
  void run_task(std::unique_ptr<Task> task, std::size_t index);

  /// Arms a countdown over `states`; `release` is called once after all resolved.
  static void when_all(std::vector<detail::StateBase*> states, std::function<void()> release);

  std::vector<std::unique_ptr<Worker>> workers_;
  std::vector<std::jthread> threads_;
  std::mutex inject_mutex_;
  std::vector<std::unique_ptr<Task>> inject_;  // FIFO via head index
  std::size_t inject_head_ = 0;
  std::mutex sleep_mutex_;
  std::condition_variable sleep_cv_;
  std::atomic<std::size_t> queued_{0};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> next_task_id_{0};
  std::atomic<std::uint64_t> skipped_{0};
  std::atomic<std::uint64_t> outstanding_{0};
  mutable std::mutex idle_mutex_;
  mutable std::condition_variable idle_cv_;
  bool running_ = false;
  bool trace_ = false;
  std::chrono::steady_clock::time_point started_at_;
};

// ---------------------------------------------------------------------------

template <class F, class... Ts>
auto Runtime::dataflow(TaskLabel lbl, F&& fn, const Future<Ts>&... deps)
    -> Future<std::invoke_result_t<F&, const Ts&...>> {
  using R = std::invoke_result_t<F&, const Ts&...>;
  ensure_running();
  auto result = std::make_shared<detail::State<R>>();
  auto task = std::make_unique<Task>();
  task->id = next_id();
  task->label = lbl;
  task->deps = {deps.producer()...};
  result->set_producer(task->id);

  auto inputs = std::make_tuple(deps.state_...);
  task->body = [result, inputs = std::move(inputs),
                fn = std::forward<F>(fn)](std::chrono::steady_clock::time_point& done) mutable {
    std::exception_ptr failed;
    std::apply(
        [&](const auto&... s) {
          ((failed = failed ? failed : s->error()), ...);
        },
        inputs);
    if (failed) {
      result->set_error(failed);
      return false;
    }
    std::optional<R> value;
    try {
      value.emplace(std::apply([&](const auto&... s) { return fn(s->value()...); }, inputs));
    } catch (...) {
      done = std::chrono::steady_clock::now();
      result->set_error(std::current_exception());
      return true;
    }
    done = std::chrono::steady_clock::now();
    result->set_value(std::move(*value));
    return true;
  };

  std::vector<detail::StateBase*> states{deps.state_.get()...};
  auto shared_task = std::make_shared<std::unique_ptr<Task>>(std::move(task));
  when_all(std::move(states), [this, shared_task] { schedule(std::move(*shared_task)); });
  return Future<R>(std::move(result));
}

template <class F, class T>
auto Runtime::dataflow_all(TaskLabel lbl, F&& fn, std::vector<Future<T>> deps)
    -> Future<std::invoke_result_t<F&, std::span<const T* const>>> {
  using R = std::invoke_result_t<F&, std::span<const T* const>>;
  ensure_running();
  auto result = std::make_shared<detail::State<R>>();
  auto task = std::make_unique<Task>();
  task->id = next_id();
  task->label = lbl;
  task->deps.reserve(deps.size());
  std::vector<detail::StateBase*> states;
  states.reserve(deps.size());
  for (const auto& d : deps) {
    task->deps.push_back(d.producer());
    states.push_back(d.state_.get());
  }
  result->set_producer(task->id);

  task->body = [result, deps = std::move(deps),
                fn = std::forward<F>(fn)](std::chrono::steady_clock::time_point& done) mutable {
    std::vector<const T*> values;
    values.reserve(deps.size());
    for (const auto& d : deps) {
      if (auto e = d.state_->error()) {
        result->set_error(e);
        return false;
      }
      values.push_back(&d.state_->value());
    }
    std::optional<R> value;
    try {
      value.emplace(fn(std::span<const T* const>(values)));
    } catch (...) {
      done = std::chrono::steady_clock::now();
      result->set_error(std::current_exception());
      return true;
    }
    done = std::chrono::steady_clock::now();
    result->set_value(std::move(*value));
    return true;
  };

  auto shared_task = std::make_shared<std::unique_ptr<Task>>(std::move(task));
  when_all(std::move(states), [this, shared_task] { schedule(std::move(*shared_task)); });
  return Future<R>(std::move(result));
}

}  // namespace gprs::runtime
