// ivtk/dataflow.h

// Copyright 2026  The ivtk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef IVTK_DATAFLOW_H_
#define IVTK_DATAFLOW_H_

// Producer/consumer machinery for the batched training and extraction passes.
// Loader threads turn batches of utterances into per-utterance statistics,
// compute threads turn those into partial results, and the calling thread
// merges partials.  Queues between the stages are bounded, so at most a fixed
// number of batches is resident at any time.

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace ivtk {

template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(std::max<size_t>(1, capacity)) {}

  // Blocks while full.  Returns false if the queue was closed.
  bool Push(T item) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    high_water_ = std::max(high_water_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  // Blocks while empty.  Returns nullopt once closed and drained.
  std::optional<T> Pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  // Wakes all waiters; pending items can still be popped.
  void Close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  size_t capacity() const { return capacity_; }
  size_t HighWater() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return high_water_;
  }

 private:
  const size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  size_t high_water_ = 0;
  bool closed_ = false;
};

struct DataflowOptions {
  size_t batch_size = 64;   // utterances per batch
  int workers = 1;          // threads per stage
  bool deterministic = true;
  size_t queue_capacity = 2;  // batches per queue
};

struct DataflowStats {
  size_t num_batches = 0;
  size_t max_in_flight = 0;  // most batches loaded but not yet merged
};

// Runs load -> compute -> merge over [0, num_items) split into fixed-size
// batches.  load(begin, end) and compute(loaded) run on worker threads and
// must not touch shared mutable state; merge(batch_index, computed) runs on
// the calling thread.  With deterministic set, merge sees batches in index
// order; batch boundaries never depend on the worker count.  The first
// exception thrown by any stage is rethrown after all threads have stopped.
template <class Loaded, class Computed>
DataflowStats RunDataflow(
    size_t num_items, const DataflowOptions &opts,
    const std::function<Loaded(size_t, size_t)> &load,
    const std::function<Computed(Loaded &&)> &compute,
    const std::function<void(size_t, Computed &&)> &merge) {
  DataflowStats stats;
  const size_t batch = std::max<size_t>(1, opts.batch_size);
  const size_t num_batches = (num_items + batch - 1) / batch;
  stats.num_batches = num_batches;
  if (num_batches == 0) return stats;
  const int workers = std::max(1, opts.workers);
  // Loaders may run at most this many batches ahead of the merger, which
  // bounds the reorder buffer as well as the queues.
  const size_t window = opts.queue_capacity * 2 + 2 * workers;

  BoundedQueue<std::pair<size_t, Loaded>> loaded_queue(opts.queue_capacity);
  BoundedQueue<std::pair<size_t, Computed>> computed_queue(opts.queue_capacity);

  std::mutex state_mutex;
  std::condition_variable window_cv;
  size_t next_to_load = 0;
  size_t merged = 0;
  size_t in_flight = 0;
  bool failed = false;
  std::exception_ptr error;

  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard<std::mutex> lock(state_mutex);
      if (!error) error = e;
      failed = true;
    }
    window_cv.notify_all();
    loaded_queue.Close();
    computed_queue.Close();
  };

  std::vector<std::thread> loaders, computers;
  std::mutex loaders_done_mutex;
  int loaders_running = workers;
  int computers_running = workers;

  for (int w = 0; w < workers; ++w) {
    loaders.emplace_back([&] {
      try {
        for (;;) {
          size_t b;
          {
            std::unique_lock<std::mutex> lock(state_mutex);
            window_cv.wait(lock, [&] {
              return failed || next_to_load >= num_batches ||
                     next_to_load < merged + window;
            });
            if (failed || next_to_load >= num_batches) break;
            b = next_to_load++;
            ++in_flight;
            stats.max_in_flight = std::max(stats.max_in_flight, in_flight);
          }
          size_t begin = b * batch, end = std::min(num_items, begin + batch);
          if (!loaded_queue.Push({b, load(begin, end)})) break;
        }
      } catch (...) {
        fail(std::current_exception());
      }
      std::lock_guard<std::mutex> lock(loaders_done_mutex);
      if (--loaders_running == 0) loaded_queue.Close();
    });
  }
  for (int w = 0; w < workers; ++w) {
    computers.emplace_back([&] {
      try {
        while (auto item = loaded_queue.Pop()) {
          Computed c = compute(std::move(item->second));
          if (!computed_queue.Push({item->first, std::move(c)})) break;
        }
      } catch (...) {
        fail(std::current_exception());
      }
      std::lock_guard<std::mutex> lock(loaders_done_mutex);
      if (--computers_running == 0) computed_queue.Close();
    });
  }

  std::map<size_t, Computed> reorder;
  auto merge_one = [&](size_t b, Computed &&c) {
    merge(b, std::move(c));
    {
      std::lock_guard<std::mutex> lock(state_mutex);
      ++merged;
      --in_flight;
    }
    window_cv.notify_all();
  };
  try {
    size_t next_to_merge = 0;
    while (auto item = computed_queue.Pop()) {
      if (!opts.deterministic) {
        merge_one(item->first, std::move(item->second));
        continue;
      }
      reorder.emplace(item->first, std::move(item->second));
      for (auto it = reorder.find(next_to_merge); it != reorder.end();
           it = reorder.find(next_to_merge)) {
        merge_one(it->first, std::move(it->second));
        reorder.erase(it);
        ++next_to_merge;
      }
    }
  } catch (...) {
    fail(std::current_exception());
  }
  for (auto &t : loaders) t.join();
  for (auto &t : computers) t.join();
  if (error) std::rethrow_exception(error);
  {
    std::lock_guard<std::mutex> lock(state_mutex);
    if (merged != num_batches)
      throw std::logic_error("RunDataflow: not every batch was merged");
  }
  return stats;
}

}  // namespace ivtk

#endif  // IVTK_DATAFLOW_H_
