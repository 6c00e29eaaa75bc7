#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"
#include "vec3.hpp"

namespace graphite {

/// Fruchterman-Reingold annealing configuration (3D).
struct LayoutParams {
  std::size_t max_iterations{2000};
  double cooling_exponent{1.5};
  /// Defaults to 0.1 * volume_side when unset.
  std::optional<double> initial_temperature;
  double volume_side{1.0};
  std::uint64_t rng_seed{0};

  double start_temperature() const { return initial_temperature.value_or(0.1 * volume_side); }

  void validate() const {
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (!(cooling_exponent > 0.0)) throw ValidationError("cooling_exponent must be > 0");
    if (!(start_temperature() > 0.0)) throw ValidationError("initial_temperature must be > 0");
    if (!(volume_side > 0.0)) throw ValidationError("volume_side must be > 0");
  }
};

struct LayoutState {
  std::vector<Vec3> positions;
  std::size_t iteration{0};
  double temperature{0.0};
  double k{0.0};  // ideal edge length
  LayoutParams params;
  Rng rng{0};     // feeds the coincident-vertex jitter
};

/// t(i) = t0 * (1 - i / I)^alpha, reaching exactly 0 at i = I.
inline double temperature_at(std::size_t iteration, const LayoutParams& p) {
  if (iteration >= p.max_iterations) return 0.0;
  const double remaining = 1.0 - static_cast<double>(iteration) / static_cast<double>(p.max_iterations);
  return p.start_temperature() * std::pow(remaining, p.cooling_exponent);
}

inline LayoutState init_layout(const Graph& g, const LayoutParams& p) {
  p.validate();
  const std::size_t n = g.vertex_count();
  if (n == 0) throw ValidationError("cannot lay out an empty graph");

  LayoutState s;
  s.params = p;
  s.rng = Rng(p.rng_seed);
  s.positions.resize(n);
  const double half = 0.5 * p.volume_side;
  for (auto& pos : s.positions) {
    pos.x = s.rng.uniform(-half, half);
    pos.y = s.rng.uniform(-half, half);
    pos.z = s.rng.uniform(-half, half);
  }
  s.k = std::cbrt(p.volume_side * p.volume_side * p.volume_side / static_cast<double>(n));
  s.iteration = 0;
  s.temperature = temperature_at(0, p);
  return s;
}

namespace detail {

inline constexpr double kMinSeparation = 1e-9;

inline Vec3 random_unit(Rng& rng) {
  for (;;) {
    Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double r2 = norm2(v);
    if (r2 > 1e-6 && r2 <= 1.0) return v * (1.0 / std::sqrt(r2));
  }
}

}  // namespace detail

/// One annealing step. Repulsion k^2/d over all pairs, attraction d^2/k
/// along edges, displacement clamped to the current temperature.
inline void layout_step(LayoutState& s, const Graph& g) {
  if (s.iteration >= s.params.max_iterations) {
    throw ValidationError("layout already ran max_iterations steps");
  }
  const std::size_t n = s.positions.size();
  const double k2 = s.k * s.k;
  std::vector<Vec3> disp(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 pi = s.positions[i];
    Vec3 acc = disp[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      Vec3 delta = pi - s.positions[j];
      double d2 = norm2(delta);
      if (d2 < detail::kMinSeparation * detail::kMinSeparation) {
        delta = detail::random_unit(s.rng) * detail::kMinSeparation;
        d2 = detail::kMinSeparation * detail::kMinSeparation;
      }
      // (delta / d) * (k^2 / d)
      const Vec3 f = delta * (k2 / d2);
      acc += f;
      disp[j] -= f;
    }
    disp[i] = acc;
  }

  for (const auto& [u, v] : g.edges()) {
    const Vec3 delta = s.positions[u] - s.positions[v];
    const double d = norm(delta);
    // (delta / d) * (d^2 / k)
    const Vec3 f = delta * (d / s.k);
    disp[u] -= f;
    disp[v] += f;
  }

  const double t = s.temperature;
  for (std::size_t i = 0; i < n; ++i) {
    const double len = norm(disp[i]);
    if (len > t) disp[i] *= t / len;
    s.positions[i] += disp[i];
  }

  ++s.iteration;
  s.temperature = temperature_at(s.iteration, s.params);
}

inline std::vector<Vec3> run_layout(const Graph& g, const LayoutParams& p) {
  LayoutState s = init_layout(g, p);
  while (s.iteration < p.max_iterations) layout_step(s, g);
  return std::move(s.positions);
}

}  // namespace graphite
