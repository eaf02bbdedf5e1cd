#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace csh {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Error taxonomy. Every module throws one of these so the CLI can map
// failures to exit codes without string matching.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct BlowUpError : Error {
  double time;
  BlowUpError(const std::string& what, double t) : Error(what), time(t) {}
};
struct ParseError : Error {
  std::size_t line;
  ParseError(const std::string& what, std::size_t ln) : Error(what), line(ln) {}
};

// Worker count: CSH_THREADS overrides hardware concurrency.
inline unsigned worker_count() {
  if (const char* s = std::getenv("CSH_THREADS")) {
    const long v = std::strtol(s, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

// Static block partition of [0, n). Results must not depend on the number of
// workers, so callers write into disjoint slots and reduce afterwards.
template <class F>
void parallel_for(std::size_t n, F&& body, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// splitmix64: derives independent sub-seeds from (seed, stream) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace csh
