#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

#include "fedhpn/common.hpp"

namespace fedhpn {

using Rng = std::mt19937_64;

// Every random stream in an experiment is derived from
// (master seed, component label, up to two indices). Distinct labels give
// independent, reproducible streams; see README for the label registry.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = fnv1a(&master, sizeof(master));
  h = fnv1a(label, h);
  h = fnv1a(&a, sizeof(a), h);
  h = fnv1a(&b, sizeof(b), h);
  h = fnv1a(&c, sizeof(c), h);
  return h;
}

inline Rng derive_rng(std::uint64_t master, std::string_view label,
                      std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  return Rng(derive_seed(master, label, a, b, c));
}

// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1]; valid as the log argument of Box-Muller.
inline double uniform01_open_low(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// Uniform integer on {lo, ..., hi}.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(std::floor(uniform01(rng) * static_cast<double>(span)));
}

// Box-Muller transform: two independent uniforms to two independent
// standard normals. u1 must lie in (0, 1], u2 in [0, 1).
inline std::pair<double, double> box_muller(double u1, double u2) {
  if (!(u1 > 0.0 && u1 <= 1.0)) throw NumericError("box_muller: u1 outside (0,1]");
  if (!(u2 >= 0.0 && u2 < 1.0)) throw NumericError("box_muller: u2 outside [0,1)");
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

// One standard normal draw; the sine branch of the pair is discarded so
// consumption stays stateless.
inline double normal(Rng& rng) {
  const double u1 = uniform01_open_low(rng);
  const double u2 = uniform01(rng);
  return box_muller(u1, u2).first;
}

// Fills dst with standard normals, consuming Box-Muller pairs in storage
// order. An odd tail discards the final sine value.
template <typename Derived>
void fill_normal(Eigen::DenseBase<Derived>& dst, Rng& rng) {
  auto* data = dst.derived().data();
  const Eigen::Index n = dst.size();
  Eigen::Index i = 0;
  for (; i + 1 < n; i += 2) {
    const double u1 = uniform01_open_low(rng);
    const double u2 = uniform01(rng);
    const auto [g0, g1] = box_muller(u1, u2);
    data[i] = g0;
    data[i + 1] = g1;
  }
  if (i < n) data[i] = normal(rng);
}

// Marsaglia-Tsang gamma sampler (shape k, unit scale), with the standard
// boost for k < 1.
inline double gamma_draw(Rng& rng, double k) {
  if (!(k > 0.0)) throw NumericError("gamma_draw: shape must be positive");
  if (k < 1.0) {
    const double u = uniform01_open_low(rng);
    return gamma_draw(rng, k + 1.0) * std::pow(u, 1.0 / k);
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform01_open_low(rng);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

// Dirichlet(alpha * 1_n) via normalized gamma draws.
inline Eigen::VectorXd dirichlet_draw(Rng& rng, double alpha, int n) {
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = gamma_draw(rng, alpha);
  const double s = g.sum();
  if (!(s > 0.0)) {
    // All-zero draws can underflow at tiny alpha; fall back to a one-hot.
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p[uniform_int(rng, 0, n - 1)] = 1.0;
    return p;
  }
  return g / s;
}

}  // namespace fedhpn
