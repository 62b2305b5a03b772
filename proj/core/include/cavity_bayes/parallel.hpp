#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>

namespace cavity_bayes {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

[[nodiscard]] double compensated_sum(std::span<const double> xs);

/// Mean and standard error of the mean, accumulated in index order.
struct SampleMoments {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};
[[nodiscard]] SampleMoments sample_moments(std::span<const double> xs);

/// Worker count: CAVITY_BAYES_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
[[nodiscard]] unsigned default_worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `workers`
/// threads; workers == 0 selects default_worker_count(). Callers write results
/// by index so the outcome never depends on the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body);

namespace detail {
void run_chunks(std::size_t n, unsigned workers, void (*fn)(void*, std::size_t, std::size_t), void* ctx);
}

template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  auto trampoline = [](void* ctx, std::size_t b, std::size_t e) { (*static_cast<std::remove_reference_t<Body>*>(ctx))(b, e); };
  detail::run_chunks(n, workers, trampoline, static_cast<void*>(&body));
}

}  // namespace cavity_bayes
