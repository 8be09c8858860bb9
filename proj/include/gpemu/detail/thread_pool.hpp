#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gpemu::detail {

/// Fixed-size worker pool driving index-range parallel loops.
///
/// parallel_for splits [begin, end) into one chunk per participant (workers
/// plus the calling thread). Chunk boundaries depend only on the range and
/// the participant count, and every chunk writes disjoint outputs, so results
/// are identical regardless of scheduling. Assignment is static: worker t
/// always runs chunk t+1 and the caller runs chunk 0, which keeps the job
/// state handoff a plain mutex-protected publish with no work stealing.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads) {
    if (threads <= 1) return;
    workers_.reserve(threads - 1);
    for (unsigned t = 0; t + 1 < threads; ++t) {
      workers_.emplace_back([this, t] { worker_loop(t); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  /// Number of concurrent lanes a parallel_for uses (workers + caller).
  std::size_t thread_count() const { return workers_.size() + 1; }

  /// Runs fn(chunk_begin, chunk_end) over a fixed partition of [begin, end).
  /// Blocks until every chunk completed. Serial when the pool has no workers
  /// or the range is below min_parallel.
  void parallel_for(std::size_t begin, std::size_t end,
                    const std::function<void(std::size_t, std::size_t)>& fn,
                    std::size_t min_parallel = 128) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    if (workers_.empty() || count < min_parallel) {
      fn(begin, end);
      return;
    }
    const std::size_t lanes = workers_.size() + 1;
    {
      std::lock_guard lk(mu_);
      job_fn_ = &fn;
      job_begin_ = begin;
      job_count_ = count;
      job_lanes_ = lanes;
      pending_.store(static_cast<long>(lanes), std::memory_order_relaxed);
      ++job_id_;
    }
    cv_.notify_all();
    run_lane(0);
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_.load(std::memory_order_acquire) == 0; });
  }

 private:
  void lane_bounds(std::size_t lane, std::size_t& lo, std::size_t& hi) const {
    const std::size_t base = job_count_ / job_lanes_;
    const std::size_t extra = job_count_ % job_lanes_;
    lo = job_begin_ + lane * base + std::min(lane, extra);
    hi = lo + base + (lane < extra ? 1 : 0);
  }

  void run_lane(std::size_t lane) {
    if (lane < job_lanes_) {
      std::size_t lo, hi;
      lane_bounds(lane, lo, hi);
      if (lo < hi) (*job_fn_)(lo, hi);
    }
    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard lk(mu_);
      done_cv_.notify_all();
    }
  }

  void worker_loop(unsigned index) {
    std::uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || job_id_ != seen; });
        if (stop_) return;
        seen = job_id_;
      }
      // Safe to read job state without the lock: the publish happened before
      // job_id_ changed, and a new job cannot be posted until this lane
      // reports done via pending_.
      run_lane(index + 1);
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_ = false;
  std::uint64_t job_id_ = 0;
  const std::function<void(std::size_t, std::size_t)>* job_fn_ = nullptr;
  std::size_t job_begin_ = 0;
  std::size_t job_count_ = 0;
  std::size_t job_lanes_ = 1;
  std::atomic<long> pending_{0};
};

}  // namespace gpemu::detail
