#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bdscale/chain.hpp"
#include "bdscale/numeric.hpp"

namespace bdscale {

// ============================================================================
// ScaleEmbedding
//
// Places the chain's states on the real line: t_0 = 1, t_n = t_{n-1} l_n/r_n,
// x_0 = 0, x_{n+1} = x_n + t_n. Brownian motion started on the grid {x_n}
// then visits grid points with exactly the chain's transition law, which is
// what every downstream formula exploits.
//
// t_n is kept both directly (may saturate to 0/inf in double precision; a
// heavily biased walk does so near n ~ 1500) and as log t_n, which never
// saturates. x_n partial sums use compensated summation.
//
// The cache is append-only and chunked: already-computed prefixes can be
// read from any number of threads without locking; growth takes a mutex.
// ============================================================================

/// Transition law of the Brownian skeleton at grid point x_n, derived from
/// the grid geometry and cross-checked against the chain's own (l_n, r_n).
struct SkeletonStep {
  double up_x = 0.0;    ///< destination x_{n+1}
  double down_x = 0.0;  ///< destination x_{n-1}
  double up_p = 0.0;    ///< P(next = x_{n+1}); equals r_n
  double down_p = 0.0;  ///< P(next = x_{n-1}); equals l_n
};

class ScaleEmbedding {
 public:
  explicit ScaleEmbedding(ChainSpec spec) : spec_(std::move(spec)) {}

  ScaleEmbedding(const ScaleEmbedding&) = delete;
  ScaleEmbedding& operator=(const ScaleEmbedding&) = delete;

  ~ScaleEmbedding() {
    for (auto& slot : chunks_) {
      delete[] slot.load(std::memory_order_relaxed);
    }
  }

  const ChainSpec& spec() const { return spec_; }

  /// Scale value t_n in direct form. Saturates to 0 or +inf outside double
  /// range; consumers needing those regimes must switch to log_t.
  double t(std::int64_t n) const { return entry(n).t; }

  /// log t_n, accumulated as sum(log l_i - log r_i); never saturates.
  double log_t(std::int64_t n) const { return entry(n).log_t; }

  /// Grid coordinate x_n = sum_{j<n} t_j.
  double x(std::int64_t n) const { return entry(n).x; }

  /// Slope of the inverse grid map on (x_{n-1}, x_n): phi'_n = 1/t_{n-1}.
  double phi_slope(std::int64_t n) const {
    require_positive(n, "phi_slope");
    return 1.0 / entry(n - 1).t;
  }

  /// t_n / t_{n-1} (= l_n/r_n up to rounding); computed from direct values
  /// when they are in normal range, from log companions otherwise.
  double gap_ratio(std::int64_t n) const {
    require_positive(n, "gap_ratio");
    const Entry prev = entry(n - 1);
    const Entry cur = entry(n);
    if (in_normal_range(prev.t) && in_normal_range(cur.t)) {
      return cur.t / prev.t;
    }
    return std::exp(cur.log_t - prev.log_t);
  }

  /// Law of the embedded chain at grid point x_n, n >= 1: the standard exit
  /// distribution of Brownian motion from (x_{n-1}, x_{n+1}) started at x_n
  /// is (gap ratio based) t_{n-1}/(t_{n-1}+t_n) upward. Cross-checks that
  /// this grid-derived law reproduces (r_n, l_n) to 1e-12; a violation means
  /// the embedding and the chain disagree, which is a hard internal error.
  SkeletonStep skeleton_step(std::int64_t n) const {
    require_positive(n, "skeleton_step");
    const StepLaw law = spec_.probabilities(n);
    const double ratio = gap_ratio(n);
    SkeletonStep step;
    step.up_p = 1.0 / (1.0 + ratio);
    step.down_p = ratio / (1.0 + ratio);
    step.up_x = x(n + 1);
    step.down_x = x(n - 1);
    if (!(std::abs(step.up_p - law.r) <= kSkeletonTolerance) ||
        !(std::abs(step.down_p - law.l) <= kSkeletonTolerance)) {
      std::ostringstream msg;
      msg << "skeleton identity violated at n=" << n << ": grid gives ("
          << step.down_p << ", " << step.up_p << "), chain law is (" << law.l
          << ", " << law.r << ")";
      throw std::logic_error(msg.str());
    }
    return step;
  }

  /// Extends the cache through index n (inclusive). Concurrent readers of
  /// indices < size() are unaffected.
  void ensure(std::int64_t n) const {
    if (n < 0) return;
    if (n < size_.load(std::memory_order_acquire)) return;
    grow_to(n);
  }

  /// Number of cached entries (t_0..t_{size-1}).
  std::int64_t size() const { return size_.load(std::memory_order_acquire); }

  static constexpr double kSkeletonTolerance = 1e-12;

 private:
  struct Entry {
    double t;
    double log_t;
    double x;
  };

  static constexpr std::int64_t kChunkBits = 13;  // 8192 entries per chunk
  static constexpr std::int64_t kChunkSize = std::int64_t{1} << kChunkBits;
  static constexpr std::int64_t kMaxChunks = 4096;

  void require_positive(std::int64_t n, const char* what) const {
    if (n < 1) {
      throw std::domain_error(std::string(what) + ": need n >= 1");
    }
  }

  Entry entry(std::int64_t n) const {
    if (n < 0) throw std::domain_error("scale index must be nonnegative");
    if (n >= size_.load(std::memory_order_acquire)) grow_to(n);
    const Entry* chunk =
        chunks_[static_cast<std::size_t>(n >> kChunkBits)].load(
            std::memory_order_acquire);
    return chunk[n & (kChunkSize - 1)];
  }

  void grow_to(std::int64_t n) const {
    if (n >= kMaxChunks * kChunkSize) {
      throw std::length_error("ScaleEmbedding: index exceeds cache capacity");
    }
    std::lock_guard<std::mutex> lock(grow_mutex_);
    std::int64_t size = size_.load(std::memory_order_relaxed);
    if (n < size) return;  // another thread got here first
    for (std::int64_t i = size; i <= n; ++i) {
      const std::int64_t chunk_index = i >> kChunkBits;
      Entry* chunk = chunks_[static_cast<std::size_t>(chunk_index)].load(
          std::memory_order_relaxed);
      if (chunk == nullptr) {
        chunk = new Entry[static_cast<std::size_t>(kChunkSize)];
        chunks_[static_cast<std::size_t>(chunk_index)].store(
            chunk, std::memory_order_release);
      }
      Entry& e = chunk[i & (kChunkSize - 1)];
      if (i == 0) {
        e.t = 1.0;     // t_0 := 1
        e.log_t = 0.0;
        e.x = 0.0;     // x_0 := 0
        last_t_ = 1.0;
      } else {
        const StepLaw law = spec_.probabilities(i);
        x_acc_.add(last_t_);  // x_i = x_{i-1} + t_{i-1}
        log_acc_.add(std::log(law.l) - std::log(law.r));
        last_t_ *= law.l / law.r;
        e.t = last_t_;
        e.log_t = log_acc_.value();
        e.x = x_acc_.value();
      }
    }
    size_.store(n + 1, std::memory_order_release);
  }

  ChainSpec spec_;
  mutable std::array<std::atomic<Entry*>, kMaxChunks> chunks_{};
  mutable std::atomic<std::int64_t> size_{0};
  mutable std::mutex grow_mutex_;
  // accumulator state, valid under grow_mutex_
  mutable double last_t_ = 1.0;
  mutable CompensatedSum log_acc_;
  mutable CompensatedSum x_acc_;
};

// ============================================================================
// Green value
// ============================================================================

/// Expected Brownian local time at x_n per excursion started at x_n and
/// stopped on exiting (x_{n-1}, x_{n+1}): the interval Green function on the
/// diagonal, G_n = 2 t_{n-1} t_n / (t_{n-1} + t_n). The algebraically equal
/// routes 2 r_n t_n and 2 l_n t_{n-1} are asserted against each other; they
/// also provide the value when the direct t's have saturated.
inline double green_value(const ScaleEmbedding& emb, std::int64_t n) {
  if (n < 1) throw std::domain_error("green_value: need n >= 1");
  const StepLaw law = emb.spec().probabilities(n);
  const double t_prev = emb.t(n - 1);
  const double t_cur = emb.t(n);

  const double via_r = 2.0 * law.r * t_cur;
  const double via_l = 2.0 * law.l * t_prev;
  const bool normal = in_normal_range(t_prev) && in_normal_range(t_cur);
  // harmonic-mean form of 2 t_{n-1} t_n / (t_{n-1} + t_n); the plain product
  // overflows near t ~ 1e154 although G_n itself is representable
  const double value = normal ? 2.0 / (1.0 / t_prev + 1.0 / t_cur) : via_l;

  // In the saturated/denormal band the routes agree only up to the
  // saturation itself; there we just require them to saturate the same way.
  const double scale = std::max(std::abs(via_r), std::abs(via_l));
  const bool same_saturation =
      scale < 1e-300 || std::min(via_r, via_l) > 1e300;
  const bool consistent =
      via_r == via_l || same_saturation ||
      (std::isfinite(scale) && std::abs(via_r - via_l) <= 1e-12 * scale);
  const bool value_consistent =
      !normal || std::abs(value - via_l) <= 1e-12 * scale;
  if (!consistent || !value_consistent) {
    std::ostringstream msg;
    msg << "green value identity violated at n=" << n << ": 2 r t_n=" << via_r
        << ", 2 l t_{n-1}=" << via_l << ", quotient form=" << value;
    throw std::logic_error(msg.str());
  }
  return value;
}

}  // namespace bdscale
