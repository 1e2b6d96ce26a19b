#pragma once

#include <atomic>
#include <complex>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace u1chaos {

inline int default_thread_count() {
  if (const char* env = std::getenv("U1CHAOS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). Work items must write only to their own slots;
// results are then reduced in index order, so the outcome is independent of
// the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 0) {
  if (threads <= 0) threads = default_thread_count();
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const int nthreads = static_cast<int>(std::min<std::size_t>(threads, n));
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Pairwise tree reduction in fixed index order; bit-stable for a given input
// ordering regardless of how the values were produced.
template <typename T>
T tree_sum(std::span<const T> values) {
  if (values.empty()) return T{};
  std::vector<T> level(values.begin(), values.end());
  while (level.size() > 1) {
    std::vector<T> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) up.push_back(level[i] + level[i + 1]);
    if (level.size() % 2 == 1) up.push_back(level.back());
    level.swap(up);
  }
  return level.front();
}

template <typename T>
T tree_sum(const std::vector<T>& values) {
  return tree_sum(std::span<const T>(values.data(), values.size()));
}

struct MeanStdErr {
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
};

inline MeanStdErr mean_stderr(std::span<const double> samples) {
  MeanStdErr out;
  out.n = static_cast<long>(samples.size());
  if (out.n == 0) return out;
  out.mean = tree_sum(samples) / static_cast<double>(out.n);
  if (out.n < 2) return out;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = tree_sum(std::span<const double>(sq)) / static_cast<double>(out.n - 1);
  out.std_error = std::sqrt(var / static_cast<double>(out.n));
  return out;
}

inline MeanStdErr mean_stderr(const std::vector<double>& samples) {
  return mean_stderr(std::span<const double>(samples.data(), samples.size()));
}

}  // namespace u1chaos
