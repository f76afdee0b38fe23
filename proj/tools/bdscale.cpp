// bdscale command-line front end: parse a chain spec, run the closed-form
// analyses, the DP oracle, or seeded simulation, and emit human-readable
// summaries plus machine-readable CSV/JSON.
//
// Exit codes: 0 success, 1 usage/parse error, 2 inconclusive certificate,
// 3 verification failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdscale/analysis.hpp"
#include "bdscale/chain.hpp"
#include "bdscale/embedding.hpp"
#include "bdscale/io.hpp"
#include "bdscale/limits.hpp"
#include "bdscale/montecarlo.hpp"
#include "bdscale/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitVerifyFailed = 3;

struct OutputTarget {
  std::string path;  // empty = stdout

  // writes and reports where the bytes went
  int write(const std::string& payload) const {
    if (path.empty()) {
      std::cout << payload;
      return kExitOk;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot open output file '" << path << "'\n";
      return kExitUsage;
    }
    out << payload;
    return kExitOk;
  }
};

bdscale::ChainSpec parse_chain_or_exit(const std::string& text) {
  return bdscale::ChainSpec::parse(text);  // throws; caught in main
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

int run_analyze(const std::string& chain_text, std::int64_t k,
                const bdscale::LimitPolicy& policy, bool as_json,
                const OutputTarget& out) {
  using bdscale::LimitVerdict;
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);
  bdscale::ScaleEmbedding emb(spec);

  const LimitVerdict t_limit = bdscale::classify_t_limit(emb, policy);
  const LimitVerdict x_limit = bdscale::sum_t(emb, policy);
  const bdscale::LimitExpectation expectation =
      bdscale::limit_expectation(emb, k, policy);

  bool inconclusive = t_limit.inconclusive() || x_limit.inconclusive() ||
                      expectation.kind == bdscale::LimitExpectation::Kind::NoLimit;

  std::optional<bdscale::ExtinctionResult> extinction;
  std::string extinction_error;
  try {
    extinction = bdscale::extinction_probability(emb, k, policy);
  } catch (const bdscale::CertificationError& e) {
    extinction_error = e.what();
    inconclusive = true;
  }

  std::ostringstream body;
  if (as_json) {
    bdscale::io::json j{{"chain", spec.text()},
                        {"k", k},
                        {"policy", bdscale::io::to_json(policy)},
                        {"t_limit", bdscale::io::to_json(t_limit)},
                        {"x_limit", bdscale::io::to_json(x_limit)},
                        {"limit_expectation", bdscale::io::to_json(expectation)}};
    if (extinction) {
      j["extinction"] = bdscale::io::to_json(*extinction);
    } else {
      j["extinction"] = bdscale::io::json{{"error", extinction_error}};
    }
    body << j.dump(2) << '\n';
  } else {
    body << "chain: " << spec.text() << "\n";
    body << "k: " << k << "\n";
    body << "t_n limit: " << t_limit.describe() << "\n";
    body << "x_infinity: " << x_limit.describe() << "\n";
    if (extinction) {
      body << "extinction probability: "
           << bdscale::io::format_real(extinction->value);
      if (extinction->exact_one) {
        body << " (exact: scale series diverges)";
      } else {
        body << " (error bound "
             << bdscale::io::format_real(extinction->error_bound) << ")";
      }
      body << "\n";
    } else {
      body << "extinction probability: CANNOT CERTIFY\n  " << extinction_error
           << "\n";
    }
    body << "limit of E[X_m]: " << expectation.describe() << "\n";
    if (inconclusive) {
      body << "warning: at least one certificate is inconclusive (exit 2)\n";
    }
  }

  const int rc = out.write(body.str());
  if (rc != kExitOk) return rc;
  return inconclusive ? kExitInconclusive : kExitOk;
}

// ---------------------------------------------------------------------------
// curve / profile
// ---------------------------------------------------------------------------

int run_curve(const std::string& chain_text, std::int64_t k, std::int64_t m,
              std::int64_t state_cap, const OutputTarget& out) {
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);
  bdscale::oracle::DpOptions opts;
  if (state_cap > 0) opts.state_cap = state_cap;
  const auto points = bdscale::oracle::curve(spec, k, m, opts);
  std::ostringstream body;
  bdscale::io::write_curve_csv(body, points);
  return out.write(body.str());
}

int run_profile(const std::string& chain_text, std::int64_t k, std::int64_t m,
                std::int64_t state_cap, const OutputTarget& out) {
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);
  bdscale::ScaleEmbedding emb(spec);
  bdscale::oracle::DpOptions opts;
  if (state_cap > 0) opts.state_cap = state_cap;
  const auto profile = bdscale::oracle::local_time_profile(spec, emb, k, m, opts);
  std::ostringstream body;
  bdscale::io::write_profile_csv(body, profile, emb);
  return out.write(body.str());
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const std::string& chain_text, std::int64_t k,
                 const bdscale::mc::SimConfig& config,
                 std::optional<std::int64_t> m,
                 std::optional<std::int64_t> dump_path,
                 const std::string& path_out, bool as_json,
                 const OutputTarget& out) {
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);

  const bdscale::mc::SimEstimate extinct =
      bdscale::mc::estimate_extinction(spec, k, config);
  std::optional<bdscale::mc::SimEstimate> expectation;
  if (m) {
    expectation = bdscale::mc::estimate_expectation(spec, k, *m, config);
  }

  if (dump_path) {
    bdscale::mc::PathRng rng(config.seed,
                             static_cast<std::uint64_t>(*dump_path));
    std::vector<std::int64_t> states{k};
    std::int64_t state = k;
    for (std::int64_t step = 1; step <= config.horizon && state > 0; ++step) {
      const auto law = spec.probabilities(state);
      state += rng.next_unit() < law.l ? -1 : +1;
      states.push_back(state);
      if (state >= config.state_cap) break;
    }
    std::ostringstream csv;
    bdscale::io::write_path_csv(csv, states);
    OutputTarget path_target{path_out};
    const int rc = path_target.write(csv.str());
    if (rc != kExitOk) return rc;
  }

  std::ostringstream body;
  if (as_json) {
    bdscale::io::json j{{"chain", spec.text()},
                        {"k", k},
                        {"config", bdscale::io::to_json(config)},
                        {"extinction", bdscale::io::to_json(extinct)}};
    if (expectation) {
      j["expectation"] = bdscale::io::to_json(*expectation);
      j["m"] = *m;
    }
    body << j.dump(2) << '\n';
  } else {
    body << "chain: " << spec.text() << "\n";
    body << "k: " << k << "  paths: " << config.paths
         << "  horizon: " << config.horizon << "  seed: " << config.seed
         << "\n";
    body << "extinct by horizon: " << bdscale::io::format_real(extinct.mean)
         << " +- " << bdscale::io::format_real(extinct.std_error) << "  (ci95 ["
         << bdscale::io::format_real(extinct.ci_lo) << ", "
         << bdscale::io::format_real(extinct.ci_hi) << "], truncated "
         << extinct.truncated_paths << ")\n";
    if (expectation) {
      body << "E[X_" << *m << "]: "
           << bdscale::io::format_real(expectation->mean) << " +- "
           << bdscale::io::format_real(expectation->std_error) << "  (ci95 ["
           << bdscale::io::format_real(expectation->ci_lo) << ", "
           << bdscale::io::format_real(expectation->ci_hi) << "])\n";
    }
  }
  return out.write(body.str());
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

int run_embed(const std::string& chain_text, std::int64_t k,
              std::int64_t steps, std::uint64_t seed,
              const OutputTarget& out) {
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);
  bdscale::ScaleEmbedding emb(spec);
  bdscale::mc::PathRng rng(seed, 0);

  std::vector<bdscale::io::EmbedPoint> path;
  std::int64_t state = k;
  path.push_back({0, state, emb.x(state)});
  for (std::int64_t step = 1; step <= steps && state > 0; ++step) {
    const auto law = spec.probabilities(state);
    state += rng.next_unit() < law.l ? -1 : +1;
    path.push_back({step, state, emb.x(state)});
  }
  std::ostringstream body;
  bdscale::io::write_embed_csv(body, path);
  return out.write(body.str());
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int run_verify(const std::string& chain_text, std::int64_t k, std::int64_t m,
               std::int64_t state_cap, const OutputTarget& out) {
  bdscale::ChainSpec spec = parse_chain_or_exit(chain_text);
  bdscale::ScaleEmbedding emb(spec);
  bdscale::oracle::DpOptions opts;
  if (state_cap > 0) opts.state_cap = state_cap;

  std::ostringstream body;
  bool all_ok = true;
  auto report = [&body, &all_ok](bool ok, const std::string& name,
                                 const std::string& detail) {
    body << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
    if (!ok) all_ok = false;
  };

  // skeleton identity over the grid prefix
  {
    const std::int64_t sweep_top = std::min<std::int64_t>(10'000, k + m + 1);
    double worst = 0.0;
    std::int64_t worst_n = 1;
    emb.ensure(sweep_top + 1);
    for (std::int64_t n = 1; n <= sweep_top; ++n) {
      const auto step = emb.skeleton_step(n);
      const auto law = spec.probabilities(n);
      const double dev = std::max(std::abs(step.up_p - law.r),
                                  std::abs(step.down_p - law.l));
      if (dev > worst) {
        worst = dev;
        worst_n = n;
      }
    }
    std::ostringstream detail;
    detail << "grid-derived law vs (l_n, r_n), n <= " << sweep_top
           << ": worst |dev| = " << worst << " at n = " << worst_n
           << " (tolerance 1e-12)";
    report(worst <= 1e-12, "skeleton identity", detail.str());
  }

  // mass conservation + absorbed monotonicity along the DP
  {
    bdscale::oracle::detail::DpSweep sweep(spec, k, m, opts);
    double worst = 0.0;
    std::int64_t worst_step = 0;
    double prev_absorbed = 0.0;
    bool monotone = true;
    std::int64_t bad_step = -1;
    for (std::int64_t i = 0; i <= m; ++i) {
      const double dev = std::abs(sweep.total() - 1.0);
      if (dev > worst) {
        worst = dev;
        worst_step = i;
      }
      if (sweep.absorbed() < prev_absorbed && monotone) {
        monotone = false;
        bad_step = i;
      }
      prev_absorbed = sweep.absorbed();
      if (i < m) sweep.advance();
    }
    std::ostringstream detail;
    detail << "max |total - 1| = " << worst << " at step " << worst_step
           << " (tolerance 1e-12)";
    report(worst <= 1e-12, "mass conservation", detail.str());
    std::ostringstream detail2;
    if (monotone) {
      detail2 << "absorbed mass nondecreasing over " << m << " steps";
    } else {
      detail2 << "absorbed mass decreased at step " << bad_step;
    }
    report(monotone, "absorption monotonicity", detail2.str());
  }

  // Tanaka-identity equality against the DP expectation
  {
    const auto profile = bdscale::oracle::local_time_profile(spec, emb, k, m, opts);
    const double via_tanaka = bdscale::tanaka_expectation(emb, k, profile);
    const double via_dp = bdscale::oracle::expectation_curve(spec, k, m, opts).back();
    const double diff = std::abs(via_tanaka - via_dp);
    std::ostringstream detail;
    detail << "k + sum (phi'_{n+1}-phi'_n)/2 E[L^{x_n}] = "
           << bdscale::io::format_real(via_tanaka) << " vs DP E[X_" << m
           << "] = " << bdscale::io::format_real(via_dp) << ", |diff| = "
           << diff << " (tolerance 1e-10)";
    report(diff <= 1e-10, "expectation identity", detail.str());

    const auto mono = bdscale::oracle::check_monotonicity(profile, k);
    std::ostringstream detail2;
    if (mono.ok) {
      detail2 << "E[L^{x_n}] nonincreasing for n >= " << k;
    } else {
      detail2 << "violated at n = " << mono.first_violation
              << " (next exceeds by " << mono.deficit << ")";
    }
    report(mono.ok, "local-time monotonicity", detail2.str());
  }

  body << (all_ok ? "verify: all checks passed\n"
                  : "verify: AT LEAST ONE CHECK FAILED\n");
  const int rc = out.write(body.str());
  if (rc != kExitOk) return rc;
  return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "birth-death chains through their Brownian scale embedding: extinction "
      "probabilities, expectation limits, local-time profiles, and the "
      "oracles that verify them"};
  app.require_subcommand(1);

  std::string chain_text;
  std::int64_t k = 1;
  std::int64_t m = 100;
  std::int64_t steps = 100;
  std::int64_t state_cap = 0;  // 0 = module default
  std::uint64_t seed = 0;
  bool as_json = false;
  std::string out_path;
  bdscale::LimitPolicy policy;
  bdscale::mc::SimConfig sim;
  std::optional<std::int64_t> sim_m;
  std::optional<std::int64_t> dump_path;
  std::string path_out;

  auto add_chain = [&chain_text](CLI::App* cmd) {
    cmd->add_option("--chain", chain_text,
                    "chain spec: constant:p=P | paper-harmonic | "
                    "table:FILE,tail=SPEC")
        ->required();
  };
  auto add_k = [&k](CLI::App* cmd) {
    cmd->add_option("--k", k, "start state (k >= 1)")->required();
  };
  auto add_out = [&out_path](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "write output to FILE instead of stdout");
  };

  CLI::App* analyze = app.add_subcommand(
      "analyze", "closed-form verdicts: t/x limits, extinction, lim E[X_m]");
  add_chain(analyze);
  add_k(analyze);
  add_out(analyze);
  analyze->add_flag("--json", as_json, "emit a JSON report");
  analyze->add_option("--max-terms", policy.max_terms, "certificate sweep cap");
  analyze->add_option("--rel-tol", policy.rel_tol, "certificate tolerance");
  analyze->add_option("--ratio-window", policy.ratio_window,
                      "trailing window width");

  CLI::App* curve = app.add_subcommand(
      "curve", "exact DP curve: m,expectation,extinct_mass CSV");
  add_chain(curve);
  add_k(curve);
  add_out(curve);
  curve->add_option("--m", m, "horizon")->required();
  curve->add_option("--state-cap", state_cap, "DP state cap override");

  CLI::App* profile = app.add_subcommand(
      "profile", "expected local-time profile: n,x_n,expected_local_time CSV");
  add_chain(profile);
  add_k(profile);
  add_out(profile);
  profile->add_option("--m", m, "horizon")->required();
  profile->add_option("--state-cap", state_cap, "DP state cap override");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "seeded Monte Carlo estimates (extinction, optional E[X_m])");
  add_chain(simulate);
  add_k(simulate);
  add_out(simulate);
  simulate->add_option("--seed", sim.seed, "RNG seed (required: no silent entropy)")
      ->required();
  simulate->add_option("--paths", sim.paths, "number of paths");
  simulate->add_option("--horizon", sim.horizon, "steps per path");
  simulate->add_option("--m", sim_m, "also estimate E[X_m]");
  simulate->add_option("--workers", sim.workers, "worker threads (0 = auto)");
  simulate->add_option("--state-cap", sim.state_cap, "stop paths at this state");
  simulate->add_flag("--json", as_json, "emit a JSON report");
  simulate->add_option("--dump-path", dump_path,
                       "dump one path's trajectory (by path index)");
  simulate->add_option("--path-out", path_out,
                       "file for the dumped path CSV (default stdout)");

  CLI::App* verify = app.add_subcommand(
      "verify", "identity suite: skeleton law, mass conservation, "
                "expectation identity, local-time monotonicity");
  add_chain(verify);
  add_k(verify);
  add_out(verify);
  verify->add_option("--m", m, "horizon")->required();
  verify->add_option("--state-cap", state_cap, "DP state cap override");

  CLI::App* embed = app.add_subcommand(
      "embed", "one seeded skeleton path in chain and grid coordinates");
  add_chain(embed);
  add_k(embed);
  add_out(embed);
  embed->add_option("--steps", steps, "number of skeleton steps")->required();
  embed->add_option("--seed", seed, "RNG seed (required: no silent entropy)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const OutputTarget out{out_path};
  try {
    if (app.got_subcommand(analyze)) {
      return run_analyze(chain_text, k, policy, as_json, out);
    }
    if (app.got_subcommand(curve)) {
      return run_curve(chain_text, k, m, state_cap, out);
    }
    if (app.got_subcommand(profile)) {
      return run_profile(chain_text, k, m, state_cap, out);
    }
    if (app.got_subcommand(simulate)) {
      return run_simulate(chain_text, k, sim, sim_m, dump_path, path_out,
                          as_json, out);
    }
    if (app.got_subcommand(verify)) {
      return run_verify(chain_text, k, m, state_cap, out);
    }
    if (app.got_subcommand(embed)) {
      return run_embed(chain_text, k, steps, seed, out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitVerifyFailed;
  }
  return kExitUsage;
}
