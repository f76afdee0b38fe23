#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>
#include <string>

#include "bdscale/io.hpp"

using bdscale::io::format_real;

TEST_CASE("reals round-trip through 17 significant digits") {
  for (double v : {1.0 / 3.0, 0.1, 4.0 / 9.0, 3.0, 1e-300, 2.2250738585072014e-308,
                   1.7976931348623157e308, 0.0, -12345.678901234567,
                   5e-324}) {
    const std::string s = format_real(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("curve CSV layout") {
  std::ostringstream os;
  bdscale::io::write_curve_csv(os, {{2.0, 0.0}, {2.25, 0.125}});
  CHECK(os.str() == "m,expectation,extinct_mass\n0,2,0\n1,2.25,0.125\n");
}

TEST_CASE("profile CSV layout") {
  bdscale::ScaleEmbedding emb(bdscale::ChainSpec::constant_bias(0.5));
  bdscale::oracle::LocalTimeProfile profile{
      bdscale::ChainSpec::constant_bias(0.5), 1, 2, {0.0, 1.0, 0.25}};
  std::ostringstream os;
  bdscale::io::write_profile_csv(os, profile, emb);
  CHECK(os.str() == "n,x_n,expected_local_time\n1,1,1\n2,2,0.25\n");
}

TEST_CASE("embed CSV layout") {
  std::ostringstream os;
  bdscale::io::write_embed_csv(os, {{0, 1, 1.0}, {1, 2, 2.5}});
  CHECK(os.str() == "step,n,x_n\n0,1,1\n1,2,2.5\n");
}

TEST_CASE("path CSV layout") {
  std::ostringstream os;
  bdscale::io::write_path_csv(os, {3, 4, 3, 2});
  CHECK(os.str() == "step,state\n0,3\n1,4\n2,3\n3,2\n");
}

TEST_CASE("verdict JSON carries values only when they exist") {
  const auto conv = bdscale::LimitVerdict::converges_to(3.0, 2e-12, "tail", 69);
  auto j = bdscale::io::to_json(conv);
  CHECK(j["kind"] == "converges_to");
  CHECK(j["value"] == 3.0);
  CHECK(j["error_bound"] == 2e-12);
  CHECK(j["terms_examined"] == 69);

  const auto div = bdscale::LimitVerdict::diverges("threshold", 86);
  auto jd = bdscale::io::to_json(div);
  CHECK(jd["kind"] == "diverges_to_infinity");
  CHECK_FALSE(jd.contains("value"));
}

TEST_CASE("emitted JSON re-renders to identical bytes") {
  // an analyze-like report with awkward doubles throughout
  bdscale::ScaleEmbedding emb(bdscale::ChainSpec::constant_bias(0.6));
  const auto extinction = bdscale::extinction_probability(emb, 2);
  const auto expectation = bdscale::limit_expectation(emb, 2);
  bdscale::io::json report{
      {"chain", "constant:p=0.6"},
      {"k", 2},
      {"policy", bdscale::io::to_json(bdscale::LimitPolicy{})},
      {"extinction", bdscale::io::to_json(extinction)},
      {"limit_expectation", bdscale::io::to_json(expectation)},
  };
  const std::string once = report.dump(2);
  const std::string twice = bdscale::io::json::parse(once).dump(2);
  CHECK(once == twice);
  // and the parsed numbers are the originals, not approximations
  const auto parsed = bdscale::io::json::parse(once);
  CHECK(parsed["extinction"]["value"].get<double>() == extinction.value);
  CHECK(parsed["extinction"]["error_bound"].get<double>() ==
        extinction.error_bound);
}

TEST_CASE("estimate JSON echoes every field") {
  bdscale::mc::SimEstimate est;
  est.mean = 0.25;
  est.std_error = 0.01;
  est.ci_lo = 0.2304;
  est.ci_hi = 0.2696;
  est.paths_used = 1000;
  est.truncated_paths = 7;
  auto j = bdscale::io::to_json(est);
  CHECK(j["mean"] == 0.25);
  CHECK(j["ci95"][0] == 0.2304);
  CHECK(j["ci95"][1] == 0.2696);
  CHECK(j["paths_used"] == 1000);
  CHECK(j["truncated_paths"] == 7);

  bdscale::mc::SimConfig config;
  config.seed = 99;
  config.paths = 123;
  auto jc = bdscale::io::to_json(config);
  CHECK(jc["seed"] == 99);
  CHECK(jc["paths"] == 123);
}
