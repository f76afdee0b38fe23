#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bdscale/analysis.hpp"
#include "bdscale/chain.hpp"
#include "bdscale/embedding.hpp"
#include "bdscale/oracle.hpp"

using bdscale::ChainSpec;
using bdscale::LimitPolicy;
using bdscale::ScaleEmbedding;
using Kind = bdscale::LimitExpectation::Kind;

namespace {

// The tail is never reached with max_terms below the table size; tail_p
// picks which analytic hint is absent (p > 1/2: no sum hint; p = 1/2: no
// t-limit hint).
ChainSpec hintless_oscillator(double tail_p) {
  std::vector<bdscale::StepLaw> entries;
  for (int i = 0; i < 256; ++i) {
    entries.push_back(i % 2 == 0 ? bdscale::StepLaw{0.55, 0.45}
                                 : bdscale::StepLaw{0.45, 0.55});
  }
  return ChainSpec::tabular(std::move(entries),
                            ChainSpec::constant_bias(tail_p));
}

}  // namespace

// ----------------------------------------------------------------------------
// Extinction probability
// ----------------------------------------------------------------------------

TEST_CASE("recurrent families go extinct with probability exactly one") {
  ScaleEmbedding fair(ChainSpec::constant_bias(0.5));
  for (std::int64_t k : {1, 2, 7}) {
    const auto result = bdscale::extinction_probability(fair, k);
    CHECK(result.value == 1.0);
    CHECK(result.exact_one);
    CHECK(result.error_bound == 0.0);
    CHECK(result.total_series.diverged());
    CHECK(result.tail_series.diverged());
  }

  ScaleEmbedding harmonic(ChainSpec::paper_harmonic());
  const auto result = bdscale::extinction_probability(harmonic, 1);
  CHECK(result.value == 1.0);
  CHECK(result.exact_one);
}

TEST_CASE("transient extinction matches the geometric closed form") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  for (std::int64_t k : {1, 2, 3}) {
    const auto result = bdscale::extinction_probability(emb, k);
    const double closed_form = std::pow(2.0 / 3.0, static_cast<double>(k));
    CHECK_FALSE(result.exact_one);
    CHECK(std::abs(result.value - closed_form) <= result.error_bound);
    CHECK(result.value >= 0.0);
    CHECK(result.value <= 1.0);
    CHECK(result.total_series.converged());
    CHECK(result.tail_series.converged());
  }
}

TEST_CASE("transient extinction agrees with the finite-horizon oracle") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  const auto spec = ChainSpec::constant_bias(0.6);
  for (std::int64_t k : {1, 2, 3}) {
    const double closed = bdscale::extinction_probability(emb, k).value;
    const double horizon = bdscale::oracle::extinction_by_horizon(spec, k, 5000);
    CHECK(std::abs(closed - horizon) <= 1e-3);
  }
}

TEST_CASE("extinction edge cases") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  const auto degenerate = bdscale::extinction_probability(emb, 0);
  CHECK(degenerate.value == 1.0);
  CHECK(degenerate.exact_one);
  CHECK_THROWS_AS(bdscale::extinction_probability(emb, -1),
                  std::invalid_argument);
}

TEST_CASE("uncertifiable series raise a certification error with verdicts") {
  ScaleEmbedding emb(hintless_oscillator(0.6));
  LimitPolicy policy;
  policy.max_terms = 128;
  policy.ratio_window = 8;
  try {
    bdscale::extinction_probability(emb, 1, policy);
    FAIL("expected CertificationError");
  } catch (const bdscale::CertificationError& e) {
    CHECK(e.total_series().inconclusive());
    CHECK(e.tail_series().inconclusive());
    CHECK(std::string(e.what()).find("inconclusive") != std::string::npos);
  }
}

// ----------------------------------------------------------------------------
// Limit of E[X_m]
// ----------------------------------------------------------------------------

TEST_CASE("martingale case: the limit is the start state exactly") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.5));
  for (std::int64_t k : {1, 3, 5}) {
    const auto result = bdscale::limit_expectation(emb, k);
    REQUIRE(result.kind == Kind::Finite);
    CHECK(result.value == static_cast<double>(k));
  }
}

TEST_CASE("the paper's family has extinction 1 but infinite limit") {
  ScaleEmbedding emb(ChainSpec::paper_harmonic());
  const auto result = bdscale::limit_expectation(emb, 2);
  CHECK(result.kind == Kind::Infinite);
  // and extinction is still certain: the counterintuitive pairing
  CHECK(bdscale::extinction_probability(emb, 2).value == 1.0);
}

TEST_CASE("transient families also have infinite limits") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  CHECK(bdscale::limit_expectation(emb, 1).kind == Kind::Infinite);
}

TEST_CASE("downward drift sends the limit to zero") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.4));
  const auto result = bdscale::limit_expectation(emb, 3);
  REQUIRE(result.kind == Kind::Finite);
  CHECK(result.value == 0.0);
  CHECK(result.error_bound == 0.0);
  // the DP expectation at a long horizon confirms collapse
  const double late =
      bdscale::oracle::expectation_curve(ChainSpec::constant_bias(0.4), 3, 5000)
          .back();
  CHECK(late < 1e-2);
}

TEST_CASE("form equivalence: value times t_inf recovers x_k") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.5));
  for (std::int64_t k = 1; k <= 5; ++k) {
    const auto result = bdscale::limit_expectation(emb, k);
    REQUIRE(result.kind == Kind::Finite);
    const double t_inf = result.t_certificate.value;
    CHECK(std::abs(result.value * t_inf - emb.x(k)) <= 1e-12 * emb.x(k));
  }
}

TEST_CASE("no limit without a certificate") {
  ScaleEmbedding emb(hintless_oscillator(0.5));
  LimitPolicy policy;
  policy.max_terms = 128;
  policy.ratio_window = 8;
  const auto result = bdscale::limit_expectation(emb, 1, policy);
  CHECK(result.kind == Kind::NoLimit);
  CHECK_FALSE(result.reason.empty());
  CHECK_THROWS_AS(bdscale::limit_expectation(emb, 0), std::invalid_argument);
}

// ----------------------------------------------------------------------------
// Local-time closed forms
// ----------------------------------------------------------------------------

TEST_CASE("infinite-horizon local time is twice the clipped grid position") {
  ScaleEmbedding fair(ChainSpec::constant_bias(0.5));
  CHECK(bdscale::expected_local_time_infinity(fair, 3, 3) == 6.0);
  CHECK(bdscale::expected_local_time_infinity(fair, 2, 5) == 4.0);
  CHECK(bdscale::expected_local_time_infinity(fair, 5, 2) == 4.0);

  ScaleEmbedding harmonic(ChainSpec::paper_harmonic());
  CHECK(bdscale::expected_local_time_infinity(harmonic, 2, 1) ==
        Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("the infinite-horizon formula refuses transient chains") {
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  CHECK_THROWS_AS(bdscale::expected_local_time_infinity(emb, 2, 3),
                  std::domain_error);
  ScaleEmbedding fair(ChainSpec::constant_bias(0.5));
  CHECK_THROWS_AS(bdscale::expected_local_time_infinity(fair, 0, 3),
                  std::invalid_argument);
}

TEST_CASE("profile values grow toward the infinite-horizon formula") {
  const auto spec = ChainSpec::constant_bias(0.5);
  ScaleEmbedding emb(ChainSpec::constant_bias(0.5));
  const auto early = bdscale::oracle::local_time_profile(spec, emb, 2, 1000);
  const auto late = bdscale::oracle::local_time_profile(spec, emb, 2, 4000);
  const double limit = bdscale::expected_local_time_infinity(emb, 2, 2);
  CHECK(early.value(2) < late.value(2));
  CHECK(late.value(2) < limit);
  CHECK(limit - late.value(2) < limit - early.value(2));
}

// ----------------------------------------------------------------------------
// Tanaka expectation identity
// ----------------------------------------------------------------------------

TEST_CASE("symmetric chains collapse the identity to the start state") {
  const auto spec = ChainSpec::constant_bias(0.5);
  ScaleEmbedding emb(ChainSpec::constant_bias(0.5));
  for (std::int64_t k : {1, 2, 4}) {
    const auto profile = bdscale::oracle::local_time_profile(spec, emb, k, 60);
    // phi' is constant, so every weight vanishes
    CHECK(bdscale::tanaka_expectation(emb, k, profile) ==
          static_cast<double>(k));
  }
}

TEST_CASE("the identity reproduces the DP expectation exactly") {
  struct Case {
    ChainSpec spec;
    std::int64_t k;
    std::int64_t m;
  };
  const Case cases[] = {
      {ChainSpec::constant_bias(0.6), 2, 50},
      {ChainSpec::paper_harmonic(), 1, 100},
      {ChainSpec::constant_bias(0.4), 3, 120},
  };
  for (const auto& c : cases) {
    ScaleEmbedding emb(c.spec);
    const auto profile =
        bdscale::oracle::local_time_profile(c.spec, emb, c.k, c.m);
    const double via_identity = bdscale::tanaka_expectation(emb, c.k, profile);
    const double via_dp =
        bdscale::oracle::expectation_curve(c.spec, c.k, c.m).back();
    CHECK(std::abs(via_identity - via_dp) <= 1e-10);
  }
}

TEST_CASE("profiles from a different chain or start are rejected") {
  const auto spec = ChainSpec::constant_bias(0.6);
  ScaleEmbedding emb(ChainSpec::constant_bias(0.6));
  const auto profile = bdscale::oracle::local_time_profile(spec, emb, 2, 20);

  ScaleEmbedding other(ChainSpec::constant_bias(0.5));
  CHECK_THROWS_AS(bdscale::tanaka_expectation(other, 2, profile),
                  std::invalid_argument);
  CHECK_THROWS_AS(bdscale::tanaka_expectation(emb, 3, profile),
                  std::invalid_argument);
}
