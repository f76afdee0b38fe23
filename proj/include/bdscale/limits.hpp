#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdscale/embedding.hpp"
#include "bdscale/numeric.hpp"

namespace bdscale {

// ============================================================================
// Numeric limit classification for the two quantities the closed forms
// depend on: t_inf = lim t_n and x_inf = sum t_j.
//
// The paper assumes these limits exist analytically; here nothing is
// assumed. A verdict is issued only when a certificate fires (trailing
// stabilization, geometric tail bound, threshold crossing, non-vanishing
// terms) or when a built-in family supplies an analytic hint. Otherwise the
// honest answer is Inconclusive, and callers must cope.
// ============================================================================

struct LimitPolicy {
  std::int64_t max_terms = 1'000'000;
  double rel_tol = 1e-12;
  std::int64_t ratio_window = 64;
  double divergence_threshold = 1e15;

  void validate() const {
    if (ratio_window < 2 || max_terms < ratio_window) {
      throw std::invalid_argument(
          "LimitPolicy: need max_terms >= ratio_window >= 2");
    }
    if (!(rel_tol > 0.0) || !(divergence_threshold > 0.0)) {
      throw std::invalid_argument("LimitPolicy: tolerances must be positive");
    }
  }
};

struct LimitVerdict {
  enum class Kind {
    ConvergesTo,
    DivergesToInfinity,
    ConvergesToZero,
    Inconclusive,
  };

  Kind kind = Kind::Inconclusive;
  double value = std::numeric_limits<double>::quiet_NaN();
  double error_bound = std::numeric_limits<double>::quiet_NaN();
  std::string reason;  // always set; names the certificate (or its absence)
  std::int64_t terms_examined = 0;

  bool converged() const { return kind == Kind::ConvergesTo; }
  bool diverged() const { return kind == Kind::DivergesToInfinity; }
  bool inconclusive() const { return kind == Kind::Inconclusive; }

  static LimitVerdict converges_to(double v, double bound, std::string why,
                                   std::int64_t terms) {
    return {Kind::ConvergesTo, v, bound, std::move(why), terms};
  }
  static LimitVerdict diverges(std::string why, std::int64_t terms) {
    return {Kind::DivergesToInfinity,
            std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN(), std::move(why), terms};
  }
  static LimitVerdict to_zero(std::string why, std::int64_t terms) {
    return {Kind::ConvergesToZero, std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN(), std::move(why), terms};
  }
  static LimitVerdict no_verdict(std::string why, std::int64_t terms) {
    return {Kind::Inconclusive, std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN(), std::move(why), terms};
  }

  std::string describe() const {
    std::ostringstream out;
    switch (kind) {
      case Kind::ConvergesTo:
        out << "converges to " << value << " (error bound " << error_bound
            << ")";
        break;
      case Kind::DivergesToInfinity:
        out << "diverges to +infinity";
        break;
      case Kind::ConvergesToZero:
        out << "converges to 0";
        break;
      case Kind::Inconclusive:
        out << "inconclusive";
        break;
    }
    out << " [" << reason << "; " << terms_examined << " terms]";
    return out.str();
  }
};

namespace detail {

// saturation thresholds for the direct form of t_n
inline const double kLogUnderflow = std::log(1e-300);
inline const double kLogOverflow = std::log(1e300);

/// Fixed-capacity ring over the trailing `ratio_window` values.
class TrailingWindow {
 public:
  explicit TrailingWindow(std::int64_t capacity)
      : cap_(static_cast<std::size_t>(capacity)) {
    buf_.reserve(cap_);
  }

  void push(double v) {
    if (buf_.size() < cap_) {
      buf_.push_back(v);
    } else {
      buf_[head_] = v;
      head_ = (head_ + 1) % cap_;
    }
  }

  bool full() const { return buf_.size() == cap_; }
  double min() const { return *std::min_element(buf_.begin(), buf_.end()); }
  double max() const { return *std::max_element(buf_.begin(), buf_.end()); }

 private:
  std::size_t cap_;
  std::size_t head_ = 0;
  std::vector<double> buf_;
};

}  // namespace detail

// ----------------------------------------------------------------------------
// classify_t_limit: does t_n approach a limit, and which one?
// ----------------------------------------------------------------------------

namespace detail {

/// Shared stabilization sweep over t_n or its reciprocal. Certificates, in
/// the order they can fire:
///  - log value below log(1e-300) with a nonincreasing trailing window
///    => ConvergesToZero (the direct form is about to saturate anyway);
///  - symmetrically above log(1e300) => DivergesToInfinity;
///  - trailing-window relative fluctuation below rel_tol => ConvergesTo.
/// If the sweep exhausts max_terms, an analytic family hint may still decide
/// the kind; otherwise Inconclusive.
inline LimitVerdict classify_sequence(const ScaleEmbedding& emb,
                                      const LimitPolicy& policy,
                                      bool reciprocal) {
  policy.validate();
  const std::int64_t window = policy.ratio_window;
  TrailingWindow values(window);
  TrailingWindow increments(window);
  const char* name = reciprocal ? "log phi'_n" : "log t_n";

  double prev_log = 0.0;
  for (std::int64_t n = 0; n < policy.max_terms; ++n) {
    const double value = reciprocal ? 1.0 / emb.t(n) : emb.t(n);
    const double log_value = reciprocal ? -emb.log_t(n) : emb.log_t(n);
    values.push(value);
    if (n > 0) increments.push(log_value - prev_log);
    prev_log = log_value;

    if (increments.full()) {
      if (log_value < kLogUnderflow && increments.max() <= 0.0) {
        return LimitVerdict::to_zero(
            std::string(name) + " crossed the underflow threshold with a "
                                "nonincreasing trailing window",
            n + 1);
      }
      if (log_value > kLogOverflow && increments.min() >= 0.0) {
        return LimitVerdict::diverges(
            std::string(name) + " crossed the overflow threshold with a "
                                "nondecreasing trailing window",
            n + 1);
      }
    }
    if (values.full() && in_normal_range(value)) {
      const double spread = values.max() - values.min();
      if (spread <= policy.rel_tol * value) {
        return LimitVerdict::converges_to(
            value, spread, "trailing-window stabilization", n + 1);
      }
    }
  }

  TLimitHint hint = emb.spec().t_limit_hint();
  if (reciprocal && hint != TLimitHint::None) {
    hint = hint == TLimitHint::ConvergesToZero ? TLimitHint::DivergesToInfinity
                                               : TLimitHint::ConvergesToZero;
  }
  switch (hint) {
    case TLimitHint::ConvergesToZero:
      return LimitVerdict::to_zero(
          "analytic family hint (numeric certificates inconclusive within "
          "max_terms)",
          policy.max_terms);
    case TLimitHint::DivergesToInfinity:
      return LimitVerdict::diverges(
          "analytic family hint (numeric certificates inconclusive within "
          "max_terms)",
          policy.max_terms);
    case TLimitHint::None:
      break;
  }
  return LimitVerdict::no_verdict(
      std::string("no certificate fired within max_terms: trailing window "
                  "never stabilized below rel_tol and ") +
          name + " stayed inside saturation thresholds",
      policy.max_terms);
}

}  // namespace detail

/// Does t_n approach a limit, and which one?
inline LimitVerdict classify_t_limit(const ScaleEmbedding& emb,
                                     const LimitPolicy& policy = {}) {
  return detail::classify_sequence(emb, policy, /*reciprocal=*/false);
}

/// Same machinery run independently on the reciprocal sequence
/// phi'_{n+1} = 1/t_n; limit_expectation uses it to check the theorem's two
/// stated forms against each other.
inline LimitVerdict classify_phi_limit(const ScaleEmbedding& emb,
                                       const LimitPolicy& policy = {}) {
  return detail::classify_sequence(emb, policy, /*reciprocal=*/true);
}

// ----------------------------------------------------------------------------
// sum_t: partial sums of t_j, i.e. the grid limit x_inf
// ----------------------------------------------------------------------------

/// Certificates:
///  - geometric tail: all trailing gap ratios <= rho < 1 bounds the
///    remainder by t_N rho/(1-rho); fires once that is below
///    rel_tol * partial_sum => ConvergesTo(partial, tail bound);
///  - partial sum exceeding divergence_threshold => DivergesToInfinity;
///  - at sweep end, trailing ratios all >= 1 - rel_tol mean the terms are
///    not vanishing => DivergesToInfinity.
/// Slowly divergent series (harmonic-like) defeat all three; the family
/// hint decides those, and Tabular chains without a hint get Inconclusive.
inline LimitVerdict sum_t(const ScaleEmbedding& emb,
                          const LimitPolicy& policy = {}) {
  policy.validate();
  const std::int64_t window = policy.ratio_window;
  detail::TrailingWindow ratios(window);
  CompensatedSum partial;

  double prev_t = 0.0;
  double prev_log = 0.0;
  for (std::int64_t n = 0; n < policy.max_terms; ++n) {
    const double t = emb.t(n);
    const double log_t = emb.log_t(n);
    partial.add(t);
    if (n > 0) {
      const double ratio = (in_normal_range(prev_t) && in_normal_range(t))
                               ? t / prev_t
                               : std::exp(log_t - prev_log);
      ratios.push(ratio);
    }
    prev_t = t;
    prev_log = log_t;

    const double sum = partial.value();
    if (sum > policy.divergence_threshold) {
      return LimitVerdict::diverges(
          "partial sum exceeded the divergence threshold", n + 1);
    }
    if (ratios.full()) {
      const double rho = ratios.max();
      if (rho < 1.0) {
        const double tail_bound = t * rho / (1.0 - rho);
        if (tail_bound <= policy.rel_tol * sum) {
          // include the compensated-summation error in the reported bound
          const double fp_slack =
              8.0 * std::numeric_limits<double>::epsilon() * sum;
          return LimitVerdict::converges_to(sum, tail_bound + fp_slack,
                                            "geometric tail bound", n + 1);
        }
      }
    }
  }

  if (ratios.full() && ratios.min() >= 1.0 - policy.rel_tol && prev_t > 0.0) {
    return LimitVerdict::diverges(
        "terms non-vanishing: every trailing gap ratio >= 1 - rel_tol",
        policy.max_terms);
  }
  if (emb.spec().sum_hint() == SumHint::Diverges) {
    return LimitVerdict::diverges(
        "analytic family hint: series diverges by comparison (numeric "
        "certificates inconclusive within max_terms)",
        policy.max_terms);
  }
  return LimitVerdict::no_verdict(
      "no certificate fired within max_terms: trailing ratios neither "
      "certify a geometric tail (< 1) nor non-vanishing terms (>= 1), and "
      "the partial sum stayed below the divergence threshold",
      policy.max_terms);
}

}  // namespace bdscale
