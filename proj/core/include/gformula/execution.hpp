#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

namespace gformula {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      compensation_ += (sum_ - t) + x;
    else
      compensation_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct ExecutionOptions {
  unsigned threads = 1;
  // Single-threaded compensated accumulation in input order; results are
  // bit-reproducible regardless of the thread count.
  bool ordered = true;

  bool parallel() const { return threads > 1 && !ordered; }
};

// Runs body(i) for i in [0, count), striding indices over up to `threads`
// workers. Bodies must only write to per-index state.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
}

// Sum of term(i) over [0, count). Ordered mode accumulates sequentially with
// compensation; parallel mode reduces fixed contiguous chunks.
template <class Term>
double reduce_sum(std::size_t count, const ExecutionOptions& opt, Term&& term) {
  if (!opt.parallel() || count < 2) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < count; ++i) acc.add(term(i));
    return acc.value();
  }
  const unsigned chunks = static_cast<unsigned>(std::min<std::size_t>(opt.threads, count));
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, chunks, [&](std::size_t c) {
    const std::size_t begin = count * c / chunks;
    const std::size_t end = count * (c + 1) / chunks;
    CompensatedSum acc;
    for (std::size_t i = begin; i < end; ++i) acc.add(term(i));
    partial[c] = acc.value();
  });
  CompensatedSum total;
  for (double p : partial) total.add(p);
  return total.value();
}

}  // namespace gformula
