#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <gmp.h>
#include <mpfr.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lyapunov/errors.hpp"
#include "lyapunov/exactpadic.hpp"
#include "lyapunov/io.hpp"
#include "lyapunov/lyap.hpp"
#include "lyapunov/map_spec.hpp"
#include "lyapunov/periodic.hpp"
#include "lyapunov/potential.hpp"

namespace lyapunov::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kVerifyFailure = 1, kUsageError = 2, kNumericFailure = 3 };

struct RunConfig {
  std::string command;
  std::string map;
  unsigned precision_bits = kDefaultPrecisionBits;
  int n = 1;
  int n_max = 6;
  std::string mode = "full";
  std::size_t samples = 100000;
  std::size_t burn_in = 100;
  std::uint64_t seed = 1;
  std::uint64_t p = 2;
  std::string format = "csv";
  std::string out;
  std::optional<double> reference;
  std::optional<double> green_tol;
  std::size_t root_cap = kDefaultCoefficientCap;
  int degree_cap = kDefaultExactDegreeCap;
  int points = 100;
};

inline nlohmann::ordered_json config_echo(const RunConfig& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["command"] = c.command;
  j["map"] = c.map;
  j["precision_bits"] = c.precision_bits;
  if (c.command == "estimate") {
    j["n"] = c.n;
    j["mode"] = c.mode;
  } else {
    j["n_max"] = c.n_max;
  }
  if (c.command == "estimate" || c.command == "samples") {
    j["samples"] = c.samples;
    j["burn_in"] = c.burn_in;
    j["seed"] = c.seed;
  }
  if (c.command == "padic") j["p"] = c.p;
  if (c.command == "verify") {
    j["seed"] = c.seed;
    j["points"] = c.points;
  }
  if (c.reference) j["reference"] = *c.reference;
  if (c.green_tol) j["green_tol"] = *c.green_tol;
  j["root_cap"] = c.root_cap;
  j["degree_cap"] = c.degree_cap;
  return j;
}

inline nlohmann::ordered_json versions() {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["lyapunov"] = kToolVersion;
  j["boost"] = BOOST_VERSION;
  j["mpfr"] = mpfr_get_version();
  j["gmp"] = gmp_version;
  return j;
}

namespace detail {

inline Real green_tolerance(const RunConfig& c) {
  if (!c.green_tol) return default_green_tolerance();
  if (!(*c.green_tol > 0)) throw Error(ErrorCode::InvalidArgument, "--green-tol must be positive");
  return Real(*c.green_tol);
}

inline PeriodicOptions periodic_options(const RunConfig& c) {
  PeriodicOptions o;
  o.root_cap = c.root_cap;
  return o;
}

inline void require_level(int n, const char* flag) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " must be at least 1");
}

inline io::Table run_estimate(const RunConfig& c, const HomogeneousLift& F) {
  require_level(c.n, "--n");
  const EstimatorMode mode = parse_mode(c.mode);
  LyapunovEstimate e;
  if (is_periodic_mode(mode)) {
    PeriodicAtlas atlas(F, periodic_options(c));
    e = estimator(atlas, c.n, mode);
  } else if (mode == EstimatorMode::green_critical) {
    e = lyapunov_green_critical(F, green_tolerance(c));
  } else {
    e = lyapunov_monte_carlo(F, c.samples, c.burn_in, c.seed);
  }
  return io::estimate_table(e);
}

inline io::Table run_rates(const RunConfig& c, const HomogeneousLift& F) {
  require_level(c.n_max, "--n-max");
  LyapunovEstimate ref;
  if (c.reference) {
    ref.mode = EstimatorMode::green_critical;
    ref.value = Real(*c.reference);
  } else {
    ref = lyapunov_green_critical(F, green_tolerance(c));
  }
  PeriodicAtlas atlas(F, periodic_options(c));
  io::Table t = io::rates_table(rate_table(atlas, c.n_max, ref));
  if (c.reference) t.meta["reference_mode"] = "user";
  return t;
}

inline io::Table run_padic(const RunConfig& c, const MapSpec& spec) {
  require_level(c.n_max, "--n-max");
  const PAdicContext ctx(c.p);
  const ExactRationalMap f = to_exact_map(spec);
  std::vector<PAdicRow> rows;
  for (int n = 1; n <= c.n_max; ++n) rows.push_back(padic_estimator(f, n, ctx, c.degree_cap));
  return io::padic_table(rows);
}

inline io::Table run_samples(const RunConfig& c, const HomogeneousLift& F) {
  return io::samples_table(sample_equilibrium(F, c.samples, c.burn_in, c.seed));
}

/// Seeded points in the square |Re|, |Im| <= 2.
inline std::vector<ProjectivePoint> test_points(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<ProjectivePoint> pts;
  for (int k = 0; k < count; ++k) {
    const double re = u(rng);
    const double im = u(rng);
    pts.push_back(ProjectivePoint::affine(Scalar(Real(re), Real(im))));
  }
  return pts;
}

struct VerifyOutcome {
  io::Table table;
  std::vector<std::string> failures;
};

/// The invariant suite: one row per check, with the measured value and the
/// threshold it must stay under.
inline VerifyOutcome run_verify(const RunConfig& c, const MapSpec& spec, const HomogeneousLift& F) {
  require_level(c.n_max, "--n-max");
  VerifyOutcome out;
  out.table.columns = {"check", "n", "value", "threshold", "pass"};
  auto record = [&](const std::string& check, std::optional<int> n, const Real& value, double threshold, bool pass) {
    out.table.rows.push_back({io::cell(check), n ? io::cell(*n) : io::Cell(), io::cell(value), io::Cell(threshold),
                              io::cell(pass)});
    if (!pass) {
      out.failures.push_back(check + (n ? " at n=" + std::to_string(*n) : std::string()) + ": " +
                             io::format_double(to_double(value)) + " exceeds " + io::format_double(threshold));
    }
  };

  PeriodicAtlas atlas(F, periodic_options(c));
  const int d = atlas.degree();
  for (int n = 1; n <= c.n_max; ++n) {
    const auto& recs = atlas.flagged(n);
    const long expected = static_cast<long>(power_count(d, n)) + 1;
    const long found = total_multiplicity(recs);
    record("fixed_point_count", n, Real(std::labs(found - expected)), 0.5, found == expected);
    const Real mobius = mobius_check(atlas, n);
    record("mobius", n, mobius, 1e-9, mobius < 1e-9);

    bool all_repelling = true;
    for (const auto& r : recs) {
      if (!r.superattracting() && r.classification != Classification::repelling) all_repelling = false;
    }
    if (all_repelling) {
      const auto full = estimator(atlas, n, EstimatorMode::full);
      const auto rep = estimator(atlas, n, EstimatorMode::repelling);
      const Real gap = boost::multiprecision::abs(full.value - rep.value);
      record("repelling_equals_full", n, gap, 0.0,
             gap == 0 && full.excluded == rep.excluded && full.excluded_count == rep.excluded_count);
    }
  }

  const Real tol = c.green_tol ? green_tolerance(c) : Real(1e-8);
  const GreenEvaluator G(F);
  const LyapunovEstimate L = lyapunov_green_critical(G, tol);
  Real worst_formula = 0;
  Real worst_functional = 0;
  for (const auto& z : test_points(c.seed, c.points)) {
    worst_functional = boost::multiprecision::max(worst_functional,
                                                  boost::multiprecision::abs(functional_equation_residual(G, z, tol)));
    worst_formula = boost::multiprecision::max(worst_formula, multiplier_formula_residual(G, L.value, z, tol));
  }
  record("functional_equation", std::nullopt, worst_functional, 3 * to_double(tol), worst_functional < 3 * tol);
  record("multiplier_formula", std::nullopt, worst_formula, 1e-6, worst_formula < 1e-6);

  if (spec.is_rational()) {
    const ExactRationalMap f = to_exact_map(spec);
    for (int n = 1; n <= std::min(c.n_max, 6); ++n) {
      if (static_cast<long>(power_count(d, n)) > c.degree_cap) break;
      const ExactMultiplierProduct prod = multiplier_product(f, n, c.degree_cap);
      const Real gap =
          boost::multiprecision::abs(archimedean_crosscheck(prod, d) - estimator(atlas, n, EstimatorMode::full).value);
      record("route_equivalence", n, gap, 1e-6, gap < 1e-6);
      int superattracting = 0;
      for (const auto& r : atlas.raw(n)) {
        if (r.superattracting()) superattracting += r.multiplicity;
      }
      record("deflation_count", n, Real(std::abs(prod.deflated_count - superattracting)), 0.5,
             prod.deflated_count == superattracting);
    }
  }
  return out;
}

inline void emit(const RunConfig& c, const io::Table& t, std::ostream& os) {
  if (c.format == "json") {
    io::write_json(os, t);
  } else {
    io::write_csv(os, t);
  }
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lyapunov exponents of rational maps", "lyapunov"};
  app.require_subcommand(1);
  RunConfig c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--map", c.map, "rational map in z, e.g. \"z^2 - 2\" or \"(z^2+1)/(2*z)\"")->required();
    sub->add_option("--precision-bits", c.precision_bits, "working precision in bits")
        ->check(CLI::Range(kMinPrecisionBits, 1u << 16));
    sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out, "output file (default: standard output)");
    sub->add_option("--root-cap", c.root_cap, "largest d^n the periodic solver accepts");
    sub->add_option("--degree-cap", c.degree_cap, "largest d^n the exact path accepts");
  };
  auto sampling = [&](CLI::App* sub) {
    sub->add_option("--samples", c.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    sub->add_option("--burn-in", c.burn_in, "discarded initial backward steps");
    sub->add_option("--seed", c.seed, "random seed");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "one Lyapunov estimate");
  common(estimate);
  sampling(estimate);
  estimate->add_option("--n", c.n, "period level");
  estimate->add_option("--mode", c.mode, "full | exact_period | repelling | repelling_exact | green_critical | monte_carlo");
  estimate->add_option("--green-tol", c.green_tol, "truncation tolerance of the Green series");

  CLI::App* rates = app.add_subcommand("rates", "periodic estimates and scaled errors for n = 1..n-max");
  common(rates);
  rates->add_option("--n-max", c.n_max, "largest period level");
  rates->add_option("--reference", c.reference, "reference value (default: green_critical)");
  rates->add_option("--green-tol", c.green_tol, "truncation tolerance of the Green series");

  CLI::App* padic = app.add_subcommand("padic", "exact p-adic estimates for n = 1..n-max");
  common(padic);
  padic->add_option("--p", c.p, "prime")->required();
  padic->add_option("--n-max", c.n_max, "largest period level");

  CLI::App* samples = app.add_subcommand("samples", "equilibrium-measure samples");
  common(samples);
  sampling(samples);

  CLI::App* verify = app.add_subcommand("verify", "invariant suite; exit 1 if any check fails");
  common(verify);
  verify->add_option("--n-max", c.n_max, "largest period level");
  verify->add_option("--seed", c.seed, "seed for the random test points");
  verify->add_option("--points", c.points, "number of random test points")->check(CLI::PositiveNumber);
  verify->add_option("--green-tol", c.green_tol, "truncation tolerance of the Green series (default 1e-8)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }
  c.command = app.get_subcommands().front()->get_name();

  auto fail = [&](ErrorCode code, const std::string& message, int status) {
    if (c.format == "json") {
      nlohmann::ordered_json j;
      j["error"]["code"] = std::string(code_name(code));
      j["error"]["message"] = message;
      out << j.dump(2) << '\n';
    }
    err << "error: " << message << '\n';
    return status;
  };

  try {
    set_precision_bits(c.precision_bits);
    const MapSpec spec = parse_map_spec(c.map);
    const HomogeneousLift F = to_lift(spec);

    io::Table table;
    std::vector<std::string> failures;
    if (c.command == "estimate") {
      table = detail::run_estimate(c, F);
    } else if (c.command == "rates") {
      table = detail::run_rates(c, F);
    } else if (c.command == "padic") {
      table = detail::run_padic(c, spec);
    } else if (c.command == "samples") {
      table = detail::run_samples(c, F);
    } else {
      auto outcome = detail::run_verify(c, spec, F);
      table = std::move(outcome.table);
      failures = std::move(outcome.failures);
    }
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    meta["config"] = config_echo(c);
    meta["versions"] = versions();
    for (auto& [k, v] : table.meta.items()) meta[k] = v;
    table.meta = std::move(meta);

    if (c.out.empty()) {
      detail::emit(c, table, out);
    } else {
      std::ofstream file(c.out, std::ios::binary);
      if (!file) return fail(ErrorCode::InvalidArgument, "cannot open output file '" + c.out + "'", kUsageError);
      detail::emit(c, table, file);
    }
    for (const auto& f : failures) err << "FAILED " << f << '\n';
    return failures.empty() ? kSuccess : kVerifyFailure;
  } catch (const Error& e) {
    return fail(e.code(), e.what(), is_numeric_failure(e.code()) ? kNumericFailure : kUsageError);
  }
}

}  // namespace lyapunov::cli
