#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdscale/chain.hpp"
#include "bdscale/embedding.hpp"
#include "bdscale/numeric.hpp"

namespace bdscale::oracle {

// ============================================================================
// Exact finite-horizon dynamic programming over the state distribution:
// the ground truth every closed form is checked against.
//
// The law of X_i is a dense vector over 0..k+i. Two structural facts make
// the sweep cheap: (a) states >= 1 carry mass only on the parity class of
// k+i, so each step reads one class and writes the other with stride 2;
// (b) the occupied range above the running support top is identically zero,
// so per-class write tops track the true (roughly sqrt(i)-wide) support
// instead of the full k+i.
// ============================================================================

struct DpOptions {
  std::int64_t state_cap = 1'000'000;  // memory guard on k+m
};

struct StateDistribution {
  std::int64_t step = 0;
  std::vector<double> mass;  // dense over states 0..mass.size()-1

  double total() const {
    CompensatedSum acc;
    for (double v : mass) acc.add(v);
    return acc.value();
  }

  double expectation() const {
    CompensatedSum acc;
    for (std::size_t j = 1; j < mass.size(); ++j) {
      acc.add(static_cast<double>(j) * mass[j]);
    }
    return acc.value();
  }

  double absorbed() const { return mass.empty() ? 0.0 : mass[0]; }
};

/// Point mass at state k (the chain's start, X_0 = k a.s.).
inline StateDistribution delta(std::int64_t k) {
  if (k < 0) throw std::invalid_argument("delta: need k >= 0");
  StateDistribution dist;
  dist.mass.assign(static_cast<std::size_t>(k) + 1, 0.0);
  dist.mass[static_cast<std::size_t>(k)] = 1.0;
  return dist;
}

/// One exact DP step: mass'[0] = mass[0] + l_1 mass[1],
/// mass'[j] = r_{j-1} mass[j-1] + l_{j+1} mass[j+1] (absent out of range).
/// Support grows by one state.
inline StateDistribution step_distribution(const ChainSpec& spec,
                                           const StateDistribution& dist) {
  const std::size_t size = dist.mass.size();
  if (size == 0) throw std::invalid_argument("step_distribution: empty mass");
  for (double v : dist.mass) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(
          "step_distribution: mass entries must be nonnegative");
    }
  }
  if (std::abs(dist.total() - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "step_distribution: mass must sum to 1");
  }

  StateDistribution next;
  next.step = dist.step + 1;
  next.mass.assign(size + 1, 0.0);
  next.mass[0] = dist.mass[0];
  if (size > 1) next.mass[0] += spec.probabilities(1).l * dist.mass[1];
  for (std::size_t j = 1; j < size + 1; ++j) {
    double acc = 0.0;
    if (j >= 2 && j - 1 < size) {
      acc += spec.probabilities(static_cast<std::int64_t>(j - 1)).r *
             dist.mass[j - 1];
    }
    if (j + 1 < size) {
      acc += spec.probabilities(static_cast<std::int64_t>(j + 1)).l *
             dist.mass[j + 1];
    }
    next.mass[j] = acc;
  }
  return next;
}

// ============================================================================
// Sweep engine
// ============================================================================

namespace detail {

/// In-place parity-striped DP over a single buffer. The callback runs once
/// per step i = 0..m-1 on the step-i distribution, before the transition.
/// Entries of the opposite parity class hold stale data by design; accessors
/// only ever touch the occupied class and state 0.
class DpSweep {
 public:
  DpSweep(const ChainSpec& spec, std::int64_t k, std::int64_t m,
          const DpOptions& opts)
      : start_(k), horizon_(m) {
    if (k < 1) throw std::invalid_argument("oracle: need start state k >= 1");
    if (m < 0) throw std::invalid_argument("oracle: need horizon m >= 0");
    const std::int64_t states = k + m + 1;
    if (states > opts.state_cap) {
      throw std::length_error(
          "oracle: k + m + 1 = " + std::to_string(states) +
          " states exceeds the state cap " + std::to_string(opts.state_cap));
    }
    // per-state laws once, so the inner loop is pure arithmetic
    left_.assign(static_cast<std::size_t>(states) + 2, 0.0);
    right_.assign(static_cast<std::size_t>(states) + 2, 0.0);
    for (std::int64_t j = 1; j <= states + 1; ++j) {
      const StepLaw law = spec.probabilities(j);
      left_[static_cast<std::size_t>(j)] = law.l;
      right_[static_cast<std::size_t>(j)] = law.r;
    }
    mass_.assign(static_cast<std::size_t>(states) + 2, 0.0);
    mass_[static_cast<std::size_t>(k)] = 1.0;
    top_[class_of(k)] = k;
    top_[1 - class_of(k)] = 0;
  }

  std::int64_t start() const { return start_; }
  std::int64_t step() const { return step_; }
  double absorbed() const { return mass_[0]; }
  std::int64_t occupied_low() const { return occupied_class() == 0 ? 2 : 1; }
  std::int64_t occupied_top() const { return top_[occupied_class()]; }

  double mass_at(std::int64_t j) const {
    if (j == 0) return mass_[0];
    if (j < 0 || class_of(j) != occupied_class() || j > occupied_top())
      return 0.0;
    return mass_[static_cast<std::size_t>(j)];
  }

  /// f(state, mass) over every possibly-occupied state >= 1.
  template <class F>
  void for_each_state(F&& f) const {
    for (std::int64_t j = occupied_low(); j <= occupied_top(); j += 2) {
      f(j, mass_[static_cast<std::size_t>(j)]);
    }
  }

  double expectation() const {
    CompensatedSum acc;
    for_each_state([&acc](std::int64_t j, double v) {
      acc.add(static_cast<double>(j) * v);
    });
    return acc.value();
  }

  double total() const {
    CompensatedSum acc;
    acc.add(mass_[0]);
    for_each_state([&acc](std::int64_t, double v) { acc.add(v); });
    return acc.value();
  }

  /// Materializes the current distribution (dense over 0..k+step).
  StateDistribution snapshot() const {
    StateDistribution dist;
    dist.step = step_;
    dist.mass.assign(static_cast<std::size_t>(start_ + step_) + 1, 0.0);
    dist.mass[0] = mass_[0];
    for_each_state([&dist](std::int64_t j, double v) {
      dist.mass[static_cast<std::size_t>(j)] = v;
    });
    return dist;
  }

  void advance() {
    const int src = occupied_class();
    const int dst = 1 - src;
    const std::int64_t src_top = top_[src];

    // absorption: state 1 feeds 0 when it is in the source class
    if (class_of(1) == src && src_top >= 1) {
      mass_[0] += left_[1] * mass_[1];
    }

    const std::int64_t lo = dst == 0 ? 2 : 1;
    const std::int64_t write_top =
        std::min(start_ + step_ + 1,
                 src_top > 0 ? src_top + 1 : std::int64_t{0});
    for (std::int64_t j = lo; j <= write_top; j += 2) {
      const std::size_t u = static_cast<std::size_t>(j);
      const double from_left = j >= 2 ? right_[u - 1] * mass_[u - 1] : 0.0;
      const double from_right = left_[u + 1] * mass_[u + 1];
      mass_[u] = from_left + from_right;
    }
    // stale entries above the fresh write range must be cleared before the
    // class top can shrink
    for (std::int64_t j = write_top + 2 - (write_top + dst) % 2;
         j <= top_[dst]; j += 2) {
      mass_[static_cast<std::size_t>(j)] = 0.0;
    }
    std::int64_t new_top = write_top;
    while (new_top >= lo && mass_[static_cast<std::size_t>(new_top)] == 0.0) {
      new_top -= 2;
    }
    top_[dst] = std::max<std::int64_t>(new_top, 0);
    ++step_;
  }

 private:
  static int class_of(std::int64_t j) { return static_cast<int>(j & 1); }
  int occupied_class() const { return class_of(start_ + step_); }

  std::int64_t start_;
  std::int64_t horizon_;
  std::int64_t step_ = 0;
  std::vector<double> left_;
  std::vector<double> right_;
  std::vector<double> mass_;
  std::int64_t top_[2] = {0, 0};
};

}  // namespace detail

// ============================================================================
// Oracle operations
// ============================================================================

struct CurvePoint {
  double expectation = 0.0;
  double extinct_mass = 0.0;
};

/// E[X_i] and P(X_i = 0) for i = 0..m, exact DP.
inline std::vector<CurvePoint> curve(const ChainSpec& spec, std::int64_t k,
                                     std::int64_t m,
                                     const DpOptions& opts = {}) {
  detail::DpSweep sweep(spec, k, m, opts);
  std::vector<CurvePoint> points;
  points.reserve(static_cast<std::size_t>(m) + 1);
  for (std::int64_t i = 0; i < m; ++i) {
    points.push_back({sweep.expectation(), sweep.absorbed()});
    sweep.advance();
  }
  points.push_back({sweep.expectation(), sweep.absorbed()});
  return points;
}

/// E[X_i] for i = 0..m.
inline std::vector<double> expectation_curve(const ChainSpec& spec,
                                             std::int64_t k, std::int64_t m,
                                             const DpOptions& opts = {}) {
  std::vector<CurvePoint> points = curve(spec, k, m, opts);
  std::vector<double> result(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    result[i] = points[i].expectation;
  }
  return result;
}

/// P(X_m = 0): the finite-horizon approximant of the extinction
/// probability; nondecreasing in m.
inline double extinction_by_horizon(const ChainSpec& spec, std::int64_t k,
                                    std::int64_t m,
                                    const DpOptions& opts = {}) {
  detail::DpSweep sweep(spec, k, m, opts);
  for (std::int64_t i = 0; i < m; ++i) sweep.advance();
  return sweep.absorbed();
}

struct LocalTimeProfile {
  ChainSpec chain;
  std::int64_t start = 0;    // k
  std::int64_t horizon = 0;  // m
  std::vector<double> values;  // values[n] = E[L^{x_n}_{T_m}], index 0 unused

  double value(std::int64_t n) const {
    if (n < 1 || n >= static_cast<std::int64_t>(values.size())) return 0.0;
    return values[static_cast<std::size_t>(n)];
  }
};

/// Expected Brownian local-time profile at skeleton time T_m. Local time at
/// x_n accrues only during excursions launched from x_n (a step launched
/// elsewhere stops on first touching x_n, accruing none), with per-launch
/// mean green_value(n):
///   E[L^{x_n}_{T_m}] = G_n * sum_{i=0}^{m-1} P(X_i = n).
inline LocalTimeProfile local_time_profile(const ChainSpec& spec,
                                           const ScaleEmbedding& emb,
                                           std::int64_t k, std::int64_t m,
                                           const DpOptions& opts = {}) {
  if (emb.spec() != spec) {
    throw std::invalid_argument(
        "local_time_profile: embedding was built for a different chain");
  }
  detail::DpSweep sweep(spec, k, m, opts);
  const std::size_t states = static_cast<std::size_t>(k + m) + 1;
  std::vector<double> visits(states, 0.0);
  std::vector<double> comp(states, 0.0);  // per-state Neumaier carry
  for (std::int64_t i = 0; i < m; ++i) {
    sweep.for_each_state([&visits, &comp](std::int64_t j, double v) {
      const std::size_t u = static_cast<std::size_t>(j);
      const double s = visits[u];
      const double t = s + v;
      comp[u] += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      visits[u] = t;
    });
    sweep.advance();
  }

  LocalTimeProfile profile{spec, k, m, std::vector<double>(states, 0.0)};
  emb.ensure(k + m);
  for (std::int64_t n = 1; n <= k + m; ++n) {
    const std::size_t u = static_cast<std::size_t>(n);
    const double visit_count = visits[u] + comp[u];
    if (visit_count != 0.0) {
      profile.values[u] = green_value(emb, n) * visit_count;
    }
  }
  return profile;
}

struct MonotonicityReport {
  bool ok = true;
  std::int64_t first_violation = -1;  // smallest n >= k with values[n] <
                                      // values[n+1] - tolerance
  double deficit = 0.0;               // values[n+1] - values[n] there
};

/// Checks values[n] >= values[n+1] - 1e-12 for all n >= k (the profile is
/// nonincreasing past the start state).
inline MonotonicityReport check_monotonicity(const LocalTimeProfile& profile,
                                             std::int64_t k) {
  constexpr double kTolerance = 1e-12;
  const auto size = static_cast<std::int64_t>(profile.values.size());
  for (std::int64_t n = std::max<std::int64_t>(k, 1); n + 1 < size; ++n) {
    const double cur = profile.values[static_cast<std::size_t>(n)];
    const double next = profile.values[static_cast<std::size_t>(n + 1)];
    if (!(cur >= next - kTolerance)) {
      return {false, n, next - cur};
    }
  }
  return {};
}

}  // namespace bdscale::oracle
