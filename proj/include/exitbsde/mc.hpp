#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace exitbsde {

/// Neumaier compensated sum. Loss paths accumulate many small squares; the
/// compensation keeps chunk totals independent of summation noise.
struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
  void merge(const Neumaier& o) {
    add(o.sum);
    add(o.comp);
  }
};

/// Streaming mean / standard error with compensated first and second moments.
struct MeanAcc {
  Neumaier s1, s2;
  long long n = 0;
  void add(double x) {
    s1.add(x);
    s2.add(x * x);
    ++n;
  }
  void merge(const MeanAcc& o) {
    s1.merge(o.s1);
    s2.merge(o.s2);
    n += o.n;
  }
  double mean() const { return n > 0 ? s1.value() / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (s2.value() - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double stderr_of_mean() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

inline constexpr long long kDefaultChunk = 4096;

/// Deterministic chunked map-reduce over item ids [0, n). Workers claim whole
/// chunks; per-chunk states are merged in chunk order afterwards, so the
/// result does not depend on the worker count.
///
/// State must be default-constructible; Work is void(State&, long long id);
/// Merge is void(State&, const State&).
template <class State, class Work, class Merge>
State run_chunked(long long n, int threads, Work work, Merge merge,
                  long long chunk = kDefaultChunk) {
  if (n <= 0) return State{};
  const long long n_chunks = (n + chunk - 1) / chunk;
  std::vector<State> partials(static_cast<std::size_t>(n_chunks));
  auto run_chunk = [&](long long c) {
    State& st = partials[static_cast<std::size_t>(c)];
    const long long lo = c * chunk;
    const long long hi = std::min(n, lo + chunk);
    for (long long id = lo; id < hi; ++id) work(st, id);
  };
  if (threads <= 1 || n_chunks == 1) {
    for (long long c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<long long> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        if (failed.load(std::memory_order_relaxed)) break;
        const long long c = next.fetch_add(1);
        if (c >= n_chunks) break;
        try {
          run_chunk(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    };
    std::vector<std::thread> pool;
    const int nw = std::min<long long>(threads, n_chunks);
    pool.reserve(static_cast<std::size_t>(nw));
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  State total;
  for (long long c = 0; c < n_chunks; ++c) merge(total, partials[static_cast<std::size_t>(c)]);
  return total;
}

int default_thread_count();

}  // namespace exitbsde
