#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdscale/analysis.hpp"
#include "bdscale/embedding.hpp"
#include "bdscale/limits.hpp"
#include "bdscale/montecarlo.hpp"
#include "bdscale/oracle.hpp"

namespace bdscale::io {

/// 17 significant digits: enough to round-trip any 64-bit float.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ----------------------------------------------------------------------------
// CSV
// ----------------------------------------------------------------------------

inline void write_curve_csv(std::ostream& os,
                            const std::vector<oracle::CurvePoint>& points) {
  os << "m,expectation,extinct_mass\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << i << ',' << format_real(points[i].expectation) << ','
       << format_real(points[i].extinct_mass) << '\n';
  }
}

inline void write_profile_csv(std::ostream& os,
                              const oracle::LocalTimeProfile& profile,
                              const ScaleEmbedding& emb) {
  os << "n,x_n,expected_local_time\n";
  for (std::size_t n = 1; n < profile.values.size(); ++n) {
    os << n << ',' << format_real(emb.x(static_cast<std::int64_t>(n))) << ','
       << format_real(profile.values[n]) << '\n';
  }
}

/// One skeleton path in both coordinates (state index and grid position).
struct EmbedPoint {
  std::int64_t step = 0;
  std::int64_t state = 0;
  double x = 0.0;
};

inline void write_embed_csv(std::ostream& os,
                            const std::vector<EmbedPoint>& path) {
  os << "step,n,x_n\n";
  for (const EmbedPoint& p : path) {
    os << p.step << ',' << p.state << ',' << format_real(p.x) << '\n';
  }
}

/// Plain chain path dump: one row per step.
inline void write_path_csv(std::ostream& os,
                           const std::vector<std::int64_t>& states) {
  os << "step,state\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    os << i << ',' << states[i] << '\n';
  }
}

// ----------------------------------------------------------------------------
// JSON report pieces
// ----------------------------------------------------------------------------

using json = nlohmann::json;

inline const char* kind_name(LimitVerdict::Kind kind) {
  switch (kind) {
    case LimitVerdict::Kind::ConvergesTo: return "converges_to";
    case LimitVerdict::Kind::DivergesToInfinity: return "diverges_to_infinity";
    case LimitVerdict::Kind::ConvergesToZero: return "converges_to_zero";
    case LimitVerdict::Kind::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline json to_json(const LimitVerdict& verdict) {
  json j{{"kind", kind_name(verdict.kind)},
         {"reason", verdict.reason},
         {"terms_examined", verdict.terms_examined}};
  if (verdict.kind == LimitVerdict::Kind::ConvergesTo) {
    j["value"] = verdict.value;
    j["error_bound"] = verdict.error_bound;
  }
  return j;
}

inline json to_json(const LimitPolicy& policy) {
  return json{{"max_terms", policy.max_terms},
              {"rel_tol", policy.rel_tol},
              {"ratio_window", policy.ratio_window},
              {"divergence_threshold", policy.divergence_threshold}};
}

inline json to_json(const ExtinctionResult& result) {
  return json{{"value", result.value},
              {"exact_one", result.exact_one},
              {"error_bound", result.error_bound},
              {"total_series", to_json(result.total_series)},
              {"tail_series", to_json(result.tail_series)}};
}

inline json to_json(const LimitExpectation& result) {
  json j{{"reason", result.reason},
         {"t_certificate", to_json(result.t_certificate)},
         {"phi_certificate", to_json(result.phi_certificate)}};
  switch (result.kind) {
    case LimitExpectation::Kind::Finite:
      j["kind"] = "finite";
      j["value"] = result.value;
      j["error_bound"] = result.error_bound;
      break;
    case LimitExpectation::Kind::Infinite:
      j["kind"] = "infinite";
      break;
    case LimitExpectation::Kind::NoLimit:
      j["kind"] = "no_limit";
      break;
  }
  return j;
}

inline json to_json(const mc::SimEstimate& est) {
  return json{{"mean", est.mean},
              {"std_error", est.std_error},
              {"ci95", json::array({est.ci_lo, est.ci_hi})},
              {"paths_used", est.paths_used},
              {"truncated_paths", est.truncated_paths}};
}

inline json to_json(const mc::SimConfig& config) {
  return json{{"seed", config.seed},
              {"paths", config.paths},
              {"horizon", config.horizon},
              {"state_cap", config.state_cap},
              {"workers", config.workers}};
}

}  // namespace bdscale::io
