#pragma once

// Minimal dense linear algebra and a deterministic RNG. Distribution helpers
// are hand-rolled on top of mt19937_64 because the std distributions are
// implementation-defined and would break bitwise reproducibility across
// toolchains.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aste {

// Row-major matrix of doubles; cols == 1 makes it a column vector.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// y = A x
inline void matvec(const Matrix& a, const double* x, double* y) {
  for (int r = 0; r < a.rows; ++r) {
    const double* ar = a.row(r);
    double acc = 0.0;
    for (int c = 0; c < a.cols; ++c) acc += ar[c] * x[c];
    y[r] = acc;
  }
}

// y += A x
inline void matvec_add(const Matrix& a, const double* x, double* y) {
  for (int r = 0; r < a.rows; ++r) {
    const double* ar = a.row(r);
    double acc = 0.0;
    for (int c = 0; c < a.cols; ++c) acc += ar[c] * x[c];
    y[r] += acc;
  }
}

// x += A^T y
inline void matvec_transpose_add(const Matrix& a, const double* y, double* x) {
  for (int r = 0; r < a.rows; ++r) {
    const double* ar = a.row(r);
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (int c = 0; c < a.cols; ++c) x[c] += ar[c] * yr;
  }
}

// A += y x^T
inline void outer_add(Matrix& a, const double* y, const double* x) {
  for (int r = 0; r < a.rows; ++r) {
    double* ar = a.row(r);
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (int c = 0; c < a.cols; ++c) ar[c] += yr * x[c];
  }
}

inline double dot(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// splitmix64; used to derive independent seed streams from one master seed.
inline uint64_t mix_seed(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    assert(n > 0);
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v;
    do {
      v = bits();
    } while (v >= limit);
    return v % n;
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

  // Standard normal via Box-Muller; spare value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable log(sum(exp(xs))) over a small span; -inf entries are skipped.
inline double log_sum_exp(const double* xs, int n) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (xs[i] > best) best = xs[i];
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    if (std::isfinite(xs[i])) acc += std::exp(xs[i] - best);
  return best + std::log(acc);
}

}  // namespace aste
