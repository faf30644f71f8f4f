#include "gapcount/common.hpp"

#include <exception>
#include <thread>

namespace gapcount {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t total, int threads, const std::function<void(std::size_t)>& body) {
  if (total == 0) return;
  const auto workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(total))));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = total * w / workers;
      const std::size_t hi = total * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gapcount
