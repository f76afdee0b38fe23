#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bdscale/chain.hpp"
#include "bdscale/embedding.hpp"

namespace bdscale::mc {

// ============================================================================
// Seeded stochastic simulation. Every path draws its randomness from a
// stream derived purely from (seed, path index), and reductions run over
// fixed-size blocks combined in index order, so estimates are bit-identical
// for any worker count.
// ============================================================================

struct SimConfig {
  std::uint64_t seed = 0;
  std::int64_t paths = 10'000;
  std::int64_t horizon = 100'000;
  std::int64_t state_cap = std::int64_t{1} << 40;  // effectively uncapped
  int workers = 1;  // 0 = hardware concurrency

  void validate() const {
    if (paths < 1) throw std::invalid_argument("SimConfig: paths >= 1");
    if (horizon < 0) throw std::invalid_argument("SimConfig: horizon >= 0");
    if (state_cap < 2) throw std::invalid_argument("SimConfig: state_cap >= 2");
    if (workers < 0) throw std::invalid_argument("SimConfig: workers >= 0");
  }
};

struct SimEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;  // 95% normal-approximation interval
  double ci_hi = 0.0;
  std::int64_t paths_used = 0;
  std::int64_t truncated_paths = 0;  // hit state_cap or horizon while alive
};

// ----------------------------------------------------------------------------
// Counter-based randomness
// ----------------------------------------------------------------------------

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// splitmix64 stream whose start state is a hash of (seed, path index):
/// per-path randomness never depends on scheduling.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path_index)
      : state_(detail::mix64(
            seed ^ (0x9E3779B97F4A7C15ull * (path_index + 0x632BE59BD9B4E019ull)))) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return detail::mix64(z);
  }

  /// uniform in [0, 1)
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// standard normal (Box-Muller, spare cached)
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ----------------------------------------------------------------------------
// Path simulation
// ----------------------------------------------------------------------------

enum class PathEnd { Extinct, AliveAtHorizon, CapHit };

struct PathOutcome {
  PathEnd end = PathEnd::AliveAtHorizon;
  std::int64_t step = 0;   // when the walk stopped
  std::int64_t state = 0;  // where it stopped
};

namespace detail {

// inlined per-family laws for the hot loops
inline double left_prob(const ConstantBias& fam, std::int64_t) {
  return 1.0 - fam.right_prob;
}
inline double left_prob(const PaperHarmonic&, std::int64_t n) {
  return static_cast<double>(n) / static_cast<double>(2 * n + 1);
}
inline double left_prob(const Tabular& fam, std::int64_t n) {
  const auto size = static_cast<std::int64_t>(fam.entries.size());
  if (n <= size) return fam.entries[static_cast<std::size_t>(n - 1)].l;
  return fam.tail->probabilities(n).l;
}

template <class Family>
PathOutcome run_path(const Family& fam, std::int64_t k, PathRng& rng,
                     std::int64_t horizon, std::int64_t state_cap) {
  std::int64_t state = k;
  for (std::int64_t step = 1; step <= horizon; ++step) {
    state += rng.next_unit() < left_prob(fam, state) ? -1 : +1;
    if (state == 0) return {PathEnd::Extinct, step, 0};
    if (state >= state_cap) return {PathEnd::CapHit, step, state};
  }
  return {PathEnd::AliveAtHorizon, horizon, state};
}

/// Static block partition + dynamic worker scheduling; block results are
/// combined by the caller in block order, independent of who ran what.
inline constexpr std::int64_t kBlockPaths = 4096;

template <class BlockFn>
void run_blocks(std::int64_t paths, int workers, BlockFn&& fn) {
  const std::int64_t blocks = (paths + kBlockPaths - 1) / kBlockPaths;
  int n_workers = workers == 0
                      ? static_cast<int>(std::thread::hardware_concurrency())
                      : workers;
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(blocks)));

  std::atomic<std::int64_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      const std::int64_t begin = b * kBlockPaths;
      const std::int64_t end = std::min(paths, begin + kBlockPaths);
      fn(static_cast<std::size_t>(b), begin, end);
    }
  };
  if (n_workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

inline SimEstimate finish_binomial(std::int64_t successes, std::int64_t paths,
                                   std::int64_t truncated) {
  const double p = static_cast<double>(successes) / static_cast<double>(paths);
  const double se =
      paths > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(paths)) : 0.0;
  SimEstimate est;
  est.mean = p;
  est.std_error = se;
  est.ci_lo = std::max(0.0, p - 1.96 * se);
  est.ci_hi = std::min(1.0, p + 1.96 * se);
  est.paths_used = paths;
  est.truncated_paths = truncated;
  return est;
}

}  // namespace detail

/// One chain path: left with probability l_n, right with r_n, stopped at 0,
/// at the horizon, or at the state cap. Equivalently, the Brownian skeleton
/// phi(B_{T_m}) sampled directly.
inline PathOutcome simulate_path(const ChainSpec& spec, std::int64_t k,
                                 PathRng& rng, std::int64_t horizon,
                                 std::int64_t state_cap = std::int64_t{1}
                                                          << 40) {
  if (k < 1) throw std::invalid_argument("simulate_path: need k >= 1");
  if (horizon < 0) throw std::invalid_argument("simulate_path: horizon >= 0");
  return spec.visit([&](const auto& fam) {
    return detail::run_path(fam, k, rng, horizon, state_cap);
  });
}

/// Fraction of paths extinct by the horizon, with binomial CI. Paths still
/// alive (or capped) at the horizon are counted in truncated_paths: the
/// estimate is a lower bound whose horizon bias the caller can see.
inline SimEstimate estimate_extinction(const ChainSpec& spec, std::int64_t k,
                                       const SimConfig& config) {
  config.validate();
  if (k < 1) throw std::invalid_argument("estimate_extinction: need k >= 1");

  struct Block {
    std::int64_t extinct = 0;
    std::int64_t truncated = 0;
  };
  const std::int64_t blocks =
      (config.paths + detail::kBlockPaths - 1) / detail::kBlockPaths;
  std::vector<Block> results(static_cast<std::size_t>(blocks));

  spec.visit([&](const auto& fam) {
    detail::run_blocks(
        config.paths, config.workers,
        [&](std::size_t b, std::int64_t begin, std::int64_t end) {
          Block acc;
          for (std::int64_t i = begin; i < end; ++i) {
            PathRng rng(config.seed, static_cast<std::uint64_t>(i));
            const PathOutcome out = detail::run_path(
                fam, k, rng, config.horizon, config.state_cap);
            if (out.end == PathEnd::Extinct) {
              ++acc.extinct;
            } else {
              ++acc.truncated;
            }
          }
          results[b] = acc;
        });
  });

  std::int64_t extinct = 0;
  std::int64_t truncated = 0;
  for (const Block& b : results) {
    extinct += b.extinct;
    truncated += b.truncated;
  }
  return detail::finish_binomial(extinct, config.paths, truncated);
}

/// Sample mean of X_m. Paths absorbed before m contribute 0 (the chain
/// stays at 0); paths that hit the state cap contribute their frozen state
/// and are counted as truncated.
inline SimEstimate estimate_expectation(const ChainSpec& spec, std::int64_t k,
                                        std::int64_t m,
                                        const SimConfig& config) {
  config.validate();
  if (k < 1) throw std::invalid_argument("estimate_expectation: need k >= 1");
  if (m < 0) throw std::invalid_argument("estimate_expectation: need m >= 0");

  struct Block {
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
    std::int64_t truncated = 0;
  };
  const std::int64_t blocks =
      (config.paths + detail::kBlockPaths - 1) / detail::kBlockPaths;
  std::vector<Block> results(static_cast<std::size_t>(blocks));

  spec.visit([&](const auto& fam) {
    detail::run_blocks(
        config.paths, config.workers,
        [&](std::size_t b, std::int64_t begin, std::int64_t end) {
          Block acc;
          for (std::int64_t i = begin; i < end; ++i) {
            PathRng rng(config.seed, static_cast<std::uint64_t>(i));
            const PathOutcome out =
                detail::run_path(fam, k, rng, m, config.state_cap);
            const std::int64_t value =
                out.end == PathEnd::Extinct ? 0 : out.state;
            acc.sum += value;
            acc.sum_sq += value * value;
            if (out.end == PathEnd::CapHit) ++acc.truncated;
          }
          results[b] = acc;
        });
  });

  // fixed-order combination; per-block sums are exact integers
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  std::int64_t truncated = 0;
  for (const Block& b : results) {
    sum += static_cast<long double>(b.sum);
    sum_sq += static_cast<long double>(b.sum_sq);
    truncated += b.truncated;
  }
  const long double n = static_cast<long double>(config.paths);
  const double mean = static_cast<double>(sum / n);
  double se = 0.0;
  if (config.paths > 1) {
    const long double var =
        std::max(0.0L, (sum_sq - sum * sum / n) / (n - 1.0L));
    se = static_cast<double>(std::sqrt(var / n));
  }
  SimEstimate est;
  est.mean = mean;
  est.std_error = se;
  est.ci_lo = mean - 1.96 * se;
  est.ci_hi = mean + 1.96 * se;
  est.paths_used = config.paths;
  est.truncated_paths = truncated;
  return est;
}

// ----------------------------------------------------------------------------
// Brownian band-occupation oracle for the Green value
// ----------------------------------------------------------------------------

struct LocalTimeBmResult {
  SimEstimate local_time;        // estimate of green_value(n)
  double right_exit_fraction = 0.0;  // should match r_n
  double right_exit_std_error = 0.0;
};

/// Discretized Brownian motion from x_n, stopped on exiting
/// (x_{n-1}, x_{n+1}), accumulating (time within eps of x_n) / (2 eps):
/// the local-time definition made literal. Euler steps of sqrt(dt) times a
/// standard normal; bias is O(sqrt(dt)), so this is a 5%-grade oracle for
/// green_value, not an acceptance-grade instrument.
inline LocalTimeBmResult estimate_local_time_bm(const ScaleEmbedding& emb,
                                                std::int64_t n, double dt,
                                                double eps,
                                                std::int64_t paths,
                                                std::uint64_t seed,
                                                int workers = 1) {
  if (n < 1) throw std::invalid_argument("estimate_local_time_bm: n >= 1");
  if (!(dt > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("estimate_local_time_bm: dt, eps > 0");
  }
  if (paths < 1) throw std::invalid_argument("estimate_local_time_bm: paths");

  const double lower = emb.x(n - 1);
  const double center = emb.x(n);
  const double upper = emb.x(n + 1);
  const double sqrt_dt = std::sqrt(dt);
  // hard per-path cap at ~200x the worst-case mean exit time; the exit-time
  // tail is exponential, so this never triggers at realistic parameters
  const double width = upper - lower;
  const std::int64_t max_steps = std::max<std::int64_t>(
      static_cast<std::int64_t>(200.0 * width * width / dt), 1 << 20);

  struct Block {
    std::int64_t band_steps = 0;
    std::int64_t band_steps_sq = 0;
    std::int64_t right_exits = 0;
    std::int64_t truncated = 0;
  };
  const std::int64_t blocks =
      (paths + detail::kBlockPaths - 1) / detail::kBlockPaths;
  std::vector<Block> results(static_cast<std::size_t>(blocks));

  detail::run_blocks(
      paths, workers, [&](std::size_t b, std::int64_t begin, std::int64_t end) {
        Block acc;
        for (std::int64_t i = begin; i < end; ++i) {
          PathRng rng(seed, static_cast<std::uint64_t>(i));
          double pos = center;
          std::int64_t in_band = 0;
          for (std::int64_t s = 0;; ++s) {
            if (std::abs(pos - center) < eps) ++in_band;
            pos += sqrt_dt * rng.next_gaussian();
            if (pos >= upper) {
              ++acc.right_exits;
              break;
            }
            if (pos <= lower) break;
            if (s >= max_steps) {
              ++acc.truncated;
              break;
            }
          }
          acc.band_steps += in_band;
          acc.band_steps_sq += in_band * in_band;
        }
        results[b] = acc;
      });

  long double steps_sum = 0.0L;
  long double steps_sq = 0.0L;
  std::int64_t right = 0;
  std::int64_t truncated = 0;
  for (const Block& b : results) {
    steps_sum += static_cast<long double>(b.band_steps);
    steps_sq += static_cast<long double>(b.band_steps_sq);
    right += b.right_exits;
    truncated += b.truncated;
  }
  const long double n_paths = static_cast<long double>(paths);
  const double per_step = dt / (2.0 * eps);  // each in-band step's local time
  const double mean = static_cast<double>(steps_sum / n_paths) * per_step;
  double se = 0.0;
  if (paths > 1) {
    const long double var = std::max(
        0.0L, (steps_sq - steps_sum * steps_sum / n_paths) / (n_paths - 1.0L));
    se = static_cast<double>(std::sqrt(var / n_paths)) * per_step;
  }

  LocalTimeBmResult result;
  result.local_time.mean = mean;
  result.local_time.std_error = se;
  result.local_time.ci_lo = mean - 1.96 * se;
  result.local_time.ci_hi = mean + 1.96 * se;
  result.local_time.paths_used = paths;
  result.local_time.truncated_paths = truncated;
  result.right_exit_fraction =
      static_cast<double>(right) / static_cast<double>(paths);
  const double p = result.right_exit_fraction;
  result.right_exit_std_error =
      paths > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(paths)) : 0.0;
  return result;
}

}  // namespace bdscale::mc
