#include "core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ts {

namespace {

thread_local bool t_in_worker = false;

int env_threads() {
  const char* v = std::getenv("TERRASEG_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 0;
  return static_cast<int>(std::min(n, 64L));
}

int default_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int env = env_threads();
  return env > 0 ? std::min(hw, env) : std::min(hw, 8);
}

class Pool {
 public:
  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(m_);
      stop_ = true;
      ++generation_;
    }
    cv_start_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void set_threads(int n) {
    std::lock_guard<std::mutex> lk(m_);
    configured_ = n < 1 ? default_threads() : std::min(n, 64);
  }

  int threads() {
    std::lock_guard<std::mutex> lk(m_);
    if (configured_ == 0) configured_ = default_threads();
    return configured_;
  }

  void run(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    int workers = threads();
    if (workers <= 1 || n == 1 || t_in_worker) {
      fn(0, n);
      return;
    }
    uint32_t gen;
    int parts = static_cast<int>(std::min<int64_t>(n, int64_t(workers) * 4));
    {
      std::lock_guard<std::mutex> lk(m_);
      while (static_cast<int>(threads_.size()) < workers - 1)
        threads_.emplace_back([this] { worker_main(); });
      gen = ++generation_;
      job_fn_ = &fn;
      job_n_ = n;
      job_parts_ = parts;
      error_ = nullptr;
      remaining_.store(parts, std::memory_order_relaxed);
      // gen in the high half guards stale workers off the ticket counter
      ticket_.store(uint64_t(gen) << 32, std::memory_order_release);
    }
    cv_start_.notify_all();
    work(gen, &fn, n, parts);
    std::unique_lock<std::mutex> lk(m_);
    cv_done_.wait(lk, [&] { return remaining_.load(std::memory_order_acquire) == 0; });
    job_fn_ = nullptr;
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void worker_main() {
    uint32_t seen = 0;
    for (;;) {
      const std::function<void(int64_t, int64_t)>* fn;
      int64_t n;
      int parts;
      uint32_t gen;
      {
        std::unique_lock<std::mutex> lk(m_);
        cv_start_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = gen = generation_;
        fn = job_fn_;
        n = job_n_;
        parts = job_parts_;
      }
      if (fn) work(gen, fn, n, parts);
    }
  }

  void work(uint32_t gen, const std::function<void(int64_t, int64_t)>* fn,
            int64_t n, int parts) {
    bool was = t_in_worker;
    t_in_worker = true;
    for (;;) {
      uint64_t t = ticket_.load(std::memory_order_acquire);
      if ((t >> 32) != gen) break;
      uint32_t part = static_cast<uint32_t>(t);
      if (part >= static_cast<uint32_t>(parts)) break;
      if (!ticket_.compare_exchange_weak(t, t + 1, std::memory_order_acq_rel)) continue;
      int64_t b = n * part / parts;
      int64_t e = n * (part + 1) / parts;
      try {
        if (b < e) (*fn)(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m_);
        if (!error_) error_ = std::current_exception();
      }
      if (remaining_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lk(m_);
        cv_done_.notify_all();
      }
    }
    t_in_worker = was;
  }

  std::mutex m_;
  std::condition_variable cv_start_, cv_done_;
  std::vector<std::thread> threads_;
  uint32_t generation_ = 0;
  int configured_ = 0;
  bool stop_ = false;
  const std::function<void(int64_t, int64_t)>* job_fn_ = nullptr;
  int64_t job_n_ = 0;
  int job_parts_ = 0;
  std::exception_ptr error_;
  std::atomic<uint64_t> ticket_{0};
  std::atomic<int> remaining_{0};
};

Pool& pool() {
  static Pool p;
  return p;
}

}  // namespace

void set_thread_count(int n) { pool().set_threads(n); }

int thread_count() { return pool().threads(); }

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  pool().run(n, fn);
}

}  // namespace ts
