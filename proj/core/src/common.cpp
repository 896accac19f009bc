#include "vcs/common.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace vcs {

namespace {

int env_thread_cap() {
  const char* v = std::getenv("VCS_THREADS");
  if (v == nullptr) return 0;
  int n = std::atoi(v);
  return n < 0 ? 0 : n;
}

std::atomic<int> g_thread_cap{env_thread_cap()};

int effective_threads() {
  int cap = g_thread_cap.load(std::memory_order_relaxed);
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  return cap == 0 ? hw : std::min(cap, hw);
}

// Persistent worker pool. Jobs are contiguous index ranges pulled from an
// atomic cursor, so scheduling never affects what any element computes.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void run(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body,
           int workers) {
    ensure_workers(workers - 1);
    std::int64_t chunks = static_cast<std::int64_t>(workers) * 4;
    chunk_ = (n + chunks - 1) / chunks;
    if (chunk_ < 1) chunk_ = 1;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      body_ = &body;
      total_ = n;
      cursor_.store(0, std::memory_order_relaxed);
      pending_ = static_cast<int>(threads_.size());
      ++generation_;
    }
    cv_.notify_all();
    work();  // the calling thread participates
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    body_ = nullptr;
  }

 private:
  Pool() = default;
  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void ensure_workers(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    while (static_cast<int>(threads_.size()) < n) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      work();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  void work() {
    const auto* body = body_;
    if (body == nullptr) return;
    for (;;) {
      std::int64_t begin = cursor_.fetch_add(chunk_, std::memory_order_relaxed);
      if (begin >= total_) break;
      (*body)(begin, std::min(begin + chunk_, total_));
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> threads_;
  const std::function<void(std::int64_t, std::int64_t)>* body_ = nullptr;
  std::atomic<std::int64_t> cursor_{0};
  std::int64_t total_ = 0;
  std::int64_t chunk_ = 1;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace

void set_thread_cap(int n) { g_thread_cap.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int thread_cap() { return g_thread_cap.load(std::memory_order_relaxed); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  int workers = effective_threads();
  if (workers <= 1 || n < 2048) {
    body(0, n);
    return;
  }
  Pool::instance().run(n, body, workers);
}

}  // namespace vcs
