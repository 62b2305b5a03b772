#include "cavity_bayes/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cavity_bayes {

double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  m.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  CompensatedSum sq;
  for (double x : xs) {
    const double d = x - m.mean;
    sq.add(d * d);
  }
  const double n = static_cast<double>(xs.size());
  const double variance = std::max(sq.value(), 0.0) / (n - 1.0);
  m.std_error = std::sqrt(variance / n);
  return m;
}

unsigned default_worker_count() {
  if (const char* env = std::getenv("CAVITY_BAYES_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
      // Unparseable values fall back to the hardware count.
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

void run_chunks(std::size_t n, unsigned workers, void (*fn)(void*, std::size_t, std::size_t), void* ctx) {
  if (n == 0) return;
  if (workers == 0) workers = default_worker_count();
  const std::size_t w = std::min<std::size_t>(workers, n);
  if (w <= 1) {
    fn(ctx, 0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto guarded = [&](std::size_t b, std::size_t e) {
    try {
      fn(ctx, b, e);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t k = 1; k < w; ++k) {
    const std::size_t b = k * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    threads.emplace_back(guarded, b, e);
  }
  guarded(0, std::min(n, chunk));
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

}  // namespace cavity_bayes
