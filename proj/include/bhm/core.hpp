#pragma once

// Shared vocabulary for the bhm library: points in the unit ball, the error
// type, reproducible random streams, quadrature rules and a deterministic
// parallel loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bhm {

/// Off-domain sentinel used by every harmonic evaluator.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr int kMaxDim = 3;

enum class ErrorKind {
  Input,           // malformed arguments or configuration
  Degenerate,      // construction is empty or trivial
  NonConvergence,  // an iterative method hit its iteration limit
  Structural,      // a majorant tree violates contiguity
  Infeasible,      // preconditions of an extension construction fail
  Precondition,    // caller-side invariant (e.g. h >= g) does not hold
  NoWitness,       // requested witness point lies in the contact set
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

/// A point of R^d, 2 <= d <= 3, stored inline.
struct Point {
  int dim = 2;
  std::array<double, kMaxDim> c{0.0, 0.0, 0.0};

  Point() = default;
  Point(double x, double y) : dim(2), c{x, y, 0.0} {}
  Point(double x, double y, double z) : dim(3), c{x, y, z} {}

  static Point zero(int d) {
    require(d >= 2 && d <= kMaxDim, ErrorKind::Input,
            "point dimension must be 2 or 3, got " + std::to_string(d));
    Point p;
    p.dim = d;
    return p;
  }
  /// The point r * e_1.
  static Point on_axis(int d, double r) {
    Point p = zero(d);
    p.c[0] = r;
    return p;
  }

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  double dot(const Point& o) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += c[i] * o.c[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  Point operator+(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
    return r;
  }
  Point operator-(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
    return r;
  }
  Point operator*(double s) const {
    Point r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] *= s;
    return r;
  }
  bool operator==(const Point& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (c[i] != o.c[i]) return false;
    return true;
  }
};

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

inline void require_same_dim(const Point& a, int d, const char* who) {
  require(a.dim == d, ErrorKind::Input,
          std::string(who) + ": dimension mismatch (point has d=" +
              std::to_string(a.dim) + ", expected d=" + std::to_string(d) + ")");
}

/// Radial scale coordinate: ln r for d = 2, r^(2-d) otherwise. Radial
/// harmonic functions are affine in it.
inline double scale_coordinate(double r, int d) {
  return d == 2 ? std::log(r) : std::pow(r, 2.0 - d);
}

// ---------------------------------------------------------------------------
// Random streams

/// Per-(seed, index) random stream. Streams are independent of execution
/// order, so parallel Monte Carlo batches reproduce serial ones exactly.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t index) : engine_(mix(mix(seed) ^ index)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Uniform direction on the unit sphere S^{d-1} (normalized Gaussian).
  Point unit_vector(int d) {
    Point p = Point::zero(d);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (int i = 0; i < d; ++i) {
        p.c[i] = normal();
        n2 += p.c[i] * p.c[i];
      }
    } while (n2 < 1e-300);
    return p * (1.0 / std::sqrt(n2));
  }

 private:
  // splitmix64 finaliser: decorrelates nearby (seed, index) keys
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
inline QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  require(n >= 1, ErrorKind::Input, "gauss_legendre: n must be positive");
  QuadratureRule q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    q.nodes[lo] = mid - half * x;
    q.nodes[hi] = mid + half * x;
    q.weights[lo] = q.weights[hi] = w * half;
  }
  return q;
}

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
inline QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b) {
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule q;
  q.nodes.reserve(static_cast<std::size_t>(panels * order));
  q.weights.reserve(static_cast<std::size_t>(panels * order));
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (std::size_t k = 0; k < ref.nodes.size(); ++k) {
      q.nodes.push_back(lo + 0.5 * h * (ref.nodes[k] + 1.0));
      q.weights.push_back(0.5 * h * ref.weights[k]);
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Parallel loop

inline unsigned& thread_count_setting() {
  static unsigned n = 1;
  return n;
}

/// Number of worker threads used by parallel_for; 0 selects hardware
/// concurrency.
inline void set_thread_count(unsigned n) {
  thread_count_setting() = n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

/// Runs body(i) for i in [0, n) on a static partition. Callers write results
/// into per-index slots and reduce afterwards in index order.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count_setting(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Mean and standard error of a sample.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

inline Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  // shifted by the first sample so that constant samples are reproduced exactly
  double s = 0.0;
  for (double x : xs) s += x - xs[0];
  e.mean = xs[0] + s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - e.mean) * (x - e.mean);
    v /= static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(v / static_cast<double>(xs.size()));
  }
  return e;
}

}  // namespace bhm
