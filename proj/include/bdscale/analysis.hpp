#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "bdscale/embedding.hpp"
#include "bdscale/limits.hpp"
#include "bdscale/numeric.hpp"
#include "bdscale/oracle.hpp"

namespace bdscale {

// ============================================================================
// Closed forms: extinction probability, the limit of E[X_m], and the
// local-time identities that tie them to the oracle.
// ============================================================================

/// Extinction probability from start state k:
///   P_k = sum_{j>=k} t_j / sum_{j>=0} t_j,
/// equal to 1 when the series diverge. `exact_one` marks the divergent case,
/// where no numeric error enters at all.
struct ExtinctionResult {
  double value = 1.0;
  bool exact_one = false;
  double error_bound = 0.0;
  LimitVerdict total_series;  // sum_{j>=0} t_j  (= x_inf)
  LimitVerdict tail_series;   // sum_{j>=k} t_j
};

/// Thrown when a closed form cannot be certified because the series verdict
/// is Inconclusive. Carries both series verdicts so the caller can report
/// the failed certificate (or fall back to the finite-horizon oracle).
class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, LimitVerdict total,
                     LimitVerdict tail)
      : std::runtime_error(what),
        total_(std::move(total)),
        tail_(std::move(tail)) {}

  const LimitVerdict& total_series() const { return total_; }
  const LimitVerdict& tail_series() const { return tail_; }

 private:
  LimitVerdict total_;
  LimitVerdict tail_;
};

inline ExtinctionResult extinction_probability(const ScaleEmbedding& emb,
                                               std::int64_t k,
                                               const LimitPolicy& policy = {}) {
  if (k < 0) throw std::invalid_argument("extinction_probability: k >= 0");
  if (k == 0) {
    // already extinct; nothing to certify
    LimitVerdict note = LimitVerdict::no_verdict("not computed: k = 0", 0);
    return {1.0, true, 0.0, note, note};
  }

  LimitVerdict total = sum_t(emb, policy);
  switch (total.kind) {
    case LimitVerdict::Kind::DivergesToInfinity: {
      LimitVerdict tail = LimitVerdict::diverges(
          "tail of a divergent series (differs from the total by the finite "
          "partial sum x_k)",
          total.terms_examined);
      return {1.0, true, 0.0, total, tail};
    }
    case LimitVerdict::Kind::ConvergesTo: {
      const double x_k = emb.x(k);
      const double x_inf = total.value;
      const double tail_value = std::max(x_inf - x_k, 0.0);
      LimitVerdict tail = LimitVerdict::converges_to(
          tail_value, total.error_bound,
          "certified total minus the exact partial sum x_k",
          total.terms_examined);
      double value = tail_value / x_inf;
      value = std::min(std::max(value, 0.0), 1.0);
      // first-order propagation of the series tail bound through the
      // quotient, d/dS [(S - x_k)/S] = x_k / S^2 (evaluated at the reported
      // S < S_true, which only enlarges it), plus a cushion covering the
      // rounding of the quotient and of x_k; the tail bound itself is often
      // exactly tight, so the cushion must dominate the fp noise on its own
      const double bound =
          (x_k / (x_inf * x_inf)) * total.error_bound * (1.0 + 1e-6) +
          8.0 * std::numeric_limits<double>::epsilon() * (value + 1.0);
      return {value, false, bound, total, tail};
    }
    case LimitVerdict::Kind::Inconclusive: {
      LimitVerdict tail = LimitVerdict::no_verdict(
          "tail undecided: " + total.reason, total.terms_examined);
      throw CertificationError(
          "cannot certify the extinction probability: the scale series "
          "verdict is inconclusive (" +
              total.reason +
              "); consider the finite-horizon oracle extinction_by_horizon",
          std::move(total), std::move(tail));
    }
    case LimitVerdict::Kind::ConvergesToZero:
      break;  // impossible: partial sums start at t_0 = 1 and increase
  }
  throw std::logic_error(
      "sum_t returned an impossible verdict for a positive series");
}

// ----------------------------------------------------------------------------
// Limit of E[X_m] (Theorem 2)
// ----------------------------------------------------------------------------

/// lim_m E[X_m] = x_k phi'_inf whenever phi'_inf = lim phi'_n exists in
/// [0, inf]; equivalently x_k / t_inf. Both forms are computed, each from
/// its own certificate sweep, and must agree.
struct LimitExpectation {
  enum class Kind { Finite, Infinite, NoLimit };

  Kind kind = Kind::NoLimit;
  double value = std::numeric_limits<double>::quiet_NaN();
  double error_bound = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
  LimitVerdict t_certificate;
  LimitVerdict phi_certificate;

  bool finite() const { return kind == Kind::Finite; }

  std::string describe() const {
    std::ostringstream out;
    switch (kind) {
      case Kind::Finite:
        out << "finite: " << value << " (error bound " << error_bound << ")";
        break;
      case Kind::Infinite:
        out << "infinite";
        break;
      case Kind::NoLimit:
        out << "no limit established";
        break;
    }
    if (!reason.empty()) out << " [" << reason << "]";
    return out.str();
  }
};

inline LimitExpectation limit_expectation(const ScaleEmbedding& emb,
                                          std::int64_t k,
                                          const LimitPolicy& policy = {}) {
  if (k < 1) throw std::invalid_argument("limit_expectation: need k >= 1");
  LimitVerdict tv = classify_t_limit(emb, policy);
  LimitVerdict pv = classify_phi_limit(emb, policy);
  const double x_k = emb.x(k);

  LimitExpectation result;
  result.t_certificate = tv;
  result.phi_certificate = pv;

  using K = LimitVerdict::Kind;
  if (tv.kind == K::ConvergesTo && tv.value > 0.0) {
    if (pv.kind != K::ConvergesTo) {
      result.kind = LimitExpectation::Kind::NoLimit;
      result.reason =
          "certificate disagreement: t_n stabilized but phi'_n did not (" +
          pv.reason + ")";
      return result;
    }
    // the theorem's two forms, each from its own sweep
    const double via_t = x_k / tv.value;
    const double via_phi = x_k * pv.value;
    if (std::abs(via_t - via_phi) >
        1e-12 * std::max(1.0, std::abs(via_t))) {
      std::ostringstream msg;
      msg << "theorem forms disagree: x_k/t_inf=" << via_t
          << " vs x_k*phi'_inf=" << via_phi;
      throw std::logic_error(msg.str());
    }
    result.kind = LimitExpectation::Kind::Finite;
    result.value = via_phi;
    result.error_bound =
        std::max(x_k * pv.error_bound,
                 x_k * tv.error_bound / (tv.value * tv.value)) +
        4.0 * std::numeric_limits<double>::epsilon() * std::abs(via_phi);
    result.reason = "t_inf in (0, inf): " + tv.reason;
    return result;
  }
  if (tv.kind == K::ConvergesToZero || pv.kind == K::DivergesToInfinity) {
    result.kind = LimitExpectation::Kind::Infinite;
    result.reason = "phi'_inf = +inf (t_inf = 0): " +
                    (tv.kind == K::ConvergesToZero ? tv.reason : pv.reason);
    return result;
  }
  if (tv.kind == K::DivergesToInfinity || pv.kind == K::ConvergesToZero) {
    result.kind = LimitExpectation::Kind::Finite;
    result.value = 0.0;
    result.error_bound = 0.0;
    result.reason = "phi'_inf = 0 (t_inf = +inf): " +
                    (tv.kind == K::DivergesToInfinity ? tv.reason : pv.reason);
    return result;
  }
  result.kind = LimitExpectation::Kind::NoLimit;
  result.reason = "no limit certified for t_n: " + tv.reason;
  return result;
}

// ----------------------------------------------------------------------------
// Local-time closed forms
// ----------------------------------------------------------------------------

/// E[L^{x_n}_inf] = 2 min(x_k, x_n), proved for chains that go extinct
/// almost surely; refused otherwise rather than extrapolated.
inline double expected_local_time_infinity(const ScaleEmbedding& emb,
                                           std::int64_t k, std::int64_t n,
                                           const LimitPolicy& policy = {}) {
  if (k < 1 || n < 1) {
    throw std::invalid_argument("expected_local_time_infinity: k, n >= 1");
  }
  ExtinctionResult extinction = extinction_probability(emb, k, policy);
  if (!extinction.exact_one) {
    std::ostringstream msg;
    msg << "expected_local_time_infinity requires a certified extinct-a.s. "
           "chain; extinction probability from k="
        << k << " is " << extinction.value << " < 1";
    throw std::domain_error(msg.str());
  }
  return 2.0 * std::min(emb.x(k), emb.x(n));
}

/// The expectation identity behind Theorem 2's proof:
///   E[X_m] = k + sum_n (phi'_{n+1} - phi'_n)/2 * E[L^{x_n}_{T_m}],
/// a finite sum because the profile vanishes past k+m. The profile must
/// come from the same chain and start state.
inline double tanaka_expectation(const ScaleEmbedding& emb, std::int64_t k,
                                 const oracle::LocalTimeProfile& profile) {
  if (profile.chain != emb.spec()) {
    throw std::invalid_argument(
        "tanaka_expectation: profile was computed for a different chain");
  }
  if (profile.start != k) {
    throw std::invalid_argument(
        "tanaka_expectation: profile start state differs from k");
  }
  const auto top = static_cast<std::int64_t>(profile.values.size()) - 1;
  emb.ensure(top + 1);
  CompensatedSum acc(static_cast<double>(k));
  for (std::int64_t n = 1; n <= top; ++n) {
    const double value = profile.values[static_cast<std::size_t>(n)];
    if (value == 0.0) continue;
    const double weight = 0.5 * (emb.phi_slope(n + 1) - emb.phi_slope(n));
    acc.add(weight * value);
  }
  return acc.value();
}

}  // namespace bdscale
