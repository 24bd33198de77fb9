// mts: generate, certify, decompose, and search marginal tracial states.
// Exit codes: 0 success, 1 certificate inconsistency, 2 usage, 3 I/O,
// 4 descent budget exhausted.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mts/mts.hpp"

namespace {

using mts::CMat;
using mts::CVec;
using mts::Index;
using mts::StateElement;
using mts::Tolerances;
using json = mts::json;

void add_tolerance_flags(CLI::App* cmd, Tolerances& tols) {
  cmd->add_option("--tol", tols.tol, "marginality and consistency tolerance")
      ->capture_default_str();
  cmd->add_option("--rank-tol", tols.rank_tol, "relative eigenvalue cutoff for ranks")
      ->capture_default_str();
  cmd->add_option("--angle-tol", tols.angle_tol, "principal angle cutoff for intersections")
      ->capture_default_str();
  cmd->add_option("--null-tol", tols.null_tol, "relative singular value cutoff for kernels")
      ->capture_default_str();
}

json gen_metadata(const std::string& provenance, std::uint64_t seed, const Tolerances& tols) {
  return json{{"provenance", provenance},
              {"seed", seed},
              {"tolerances", mts::tolerances_to_json(tols)}};
}

int write_state(const std::string& path, const StateElement<double>& s, const json& metadata) {
  try {
    mts::save_state(path, s, metadata);
  } catch (const std::exception& err) {
    std::cerr << "mts gen: " << err.what() << '\n';
    return 3;
  }
  std::cerr << "gen: wrote " << path << " (n=" << s.n << ")\n";
  return 0;
}

int run_check(const std::string& path, const Tolerances& tols) {
  StateElement<double> state;
  try {
    state = mts::load_state(path);
  } catch (const std::exception& err) {
    std::cerr << "mts check: " << err.what() << '\n';
    return 3;
  }
  const mts::Certificate<double> cert = mts::certify(state, tols);
  const json doc = mts::make_document("certificate", cert.n,
                                      mts::certificate_to_json(cert, &state.h),
                                      json{{"source", path}});
  std::cout << doc.dump(2) << '\n';
  std::cerr << "check: rank=" << cert.rank << " marginal=" << (cert.marginal ? "yes" : "no")
            << " extremal=" << (cert.extremal() ? "yes" : "no")
            << " pure=" << (cert.pure ? (*cert.pure ? "yes" : "no") : "n/a")
            << " consistent=" << (cert.consistent ? "yes" : "no") << '\n';
  return cert.consistent ? 0 : 1;
}

int run_descend(const std::string& in_path, const std::string& out_path,
                const std::string& trace_path, const Tolerances& tols, int max_steps) {
  StateElement<double> state;
  try {
    state = mts::load_state(in_path);
  } catch (const std::exception& err) {
    std::cerr << "mts descend: " << err.what() << '\n';
    return 3;
  }
  mts::DescentTrace<double> trace;
  try {
    trace = mts::descend(state, tols, max_steps);
  } catch (const std::exception& err) {
    std::cerr << "mts descend: " << err.what() << '\n';
    return 2;
  }
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    std::cerr << "descend: step " << (i + 1) << " rank " << s.rank_before << " -> "
              << s.rank_after << " (t=" << s.step_size
              << ", sign=" << (s.direction_sign < 0 ? '-' : '+') << ")\n";
  }
  std::cerr << "descend: terminal rank " << trace.terminal_certificate.rank
            << (trace.reached_extremal ? ", extremal" : ", not extremal") << '\n';
  try {
    if (!out_path.empty())
      mts::save_state(out_path, trace.terminal,
                      json{{"provenance", "descend " + in_path}});
    if (!trace_path.empty())
      mts::save_document(trace_path,
                         mts::make_document("trace", state.n,
                                            mts::descent_trace_to_json(trace),
                                            json{{"provenance", "descend " + in_path}}));
  } catch (const std::exception& err) {
    std::cerr << "mts descend: " << err.what() << '\n';
    return 3;
  }
  return trace.failure == "max_steps" ? 4 : 0;
}

int run_hunt(Index n, std::uint64_t trials, std::uint64_t seed, int jobs, int probe_samples,
             int max_steps, const std::string& out_path, Tolerances tols) {
  if (max_steps > 0) tols.descent_max_steps = max_steps;
  std::cerr << "hunt: n=" << n << " trials=" << trials << " seed=" << seed << " jobs=" << jobs
            << '\n';
  const mts::HuntReport<double> report =
      mts::hunt<double>(n, trials, seed, tols, jobs, probe_samples);
  try {
    mts::save_document(out_path,
                       mts::make_document("report", n, mts::hunt_report_to_json(report),
                                          json{{"provenance", "hunt"}}));
  } catch (const std::exception& err) {
    std::cerr << "mts hunt: " << err.what() << '\n';
    return 3;
  }
  std::cerr << "hunt: pure=" << report.pure_count
            << " candidates=" << report.candidates.size()
            << " failures=" << report.failure_count << " max_probe=" << report.max_probe
            << '\n';
  return 0;
}

int run_schmidt(const std::string& path) {
  CVec<double> xi;
  mts::SchmidtDecomposition<double> sd;
  bool maximal = false;
  double residual = 0;
  try {
    xi = mts::load_vector(path);
    sd = mts::schmidt_decompose(xi);
    maximal = mts::is_maximally_entangled(xi);
    residual = (sd.reconstruct() - xi).norm();
  } catch (const std::exception& err) {
    std::cerr << "mts schmidt: " << err.what() << '\n';
    return 3;
  }
  json data = mts::schmidt_to_json(sd);
  data["maximally_entangled"] = maximal;
  data["reconstruction_residual"] = residual;
  const json doc = mts::make_document("schmidt", sd.n, std::move(data),
                                      json{{"source", path}});
  std::cout << doc.dump(2) << '\n';
  std::cerr << "schmidt: rank=" << sd.schmidt_rank
            << " maximally_entangled=" << (maximal ? "yes" : "no") << '\n';
  return 0;
}

int run_probe(const std::string& path, int samples, std::uint64_t seed,
              const Tolerances& tols) {
  StateElement<double> state;
  try {
    state = mts::load_state(path);
  } catch (const std::exception& err) {
    std::cerr << "mts probe: " << err.what() << '\n';
    return 3;
  }
  double max_value = 0, min_value = 0;
  bool all_positive = true, all_marginal = true;
  int used = 0, marginal_reports = 0;
  Index rank = 0;
  const auto record = [&](const mts::ProbeResult<double>& result) {
    if (used == 0 || result.value < min_value) min_value = result.value;
    max_value = std::max(max_value, result.value);
    all_positive = all_positive && result.projected_positive;
    if (result.projected_marginal.has_value()) {
      ++marginal_reports;
      all_marginal = all_marginal && *result.projected_marginal;
    }
    ++used;
  };
  try {
    mts::detail::require_extremal(state, tols, "probe");
    const mts::RangeProjection<double> rp =
        mts::range_projection(state.h, tols.rank_tol);
    rank = rp.rank;
    if (rp.rank == 1) {
      record(mts::probe_restriction(state, state.h, tols, true));
    } else {
      mts::RandomStream<double> rng(mts::derive_seed(seed, 0x70726f6265ULL));
      for (int s = 0; s < samples; ++s) {
        CMat<double> c = rng.psd_matrix(rp.rank);
        const double tr = c.trace().real();
        if (tr <= 0) continue;
        c *= double(state.n * state.n) / tr;
        const CMat<double> k = rp.basis * c * rp.basis.adjoint();
        record(mts::probe_restriction(state, k, tols, true));
      }
    }
  } catch (const std::invalid_argument& err) {
    std::cerr << "mts probe: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "mts probe: " << err.what() << '\n';
    return 2;
  }
  const json doc = mts::make_document(
      "probe", state.n,
      json{{"rank", rank},
           {"samples", used},
           {"seed", seed},
           {"max_value", max_value},
           {"min_value", min_value},
           {"all_projected_positive", all_positive},
           {"marginal_reports", marginal_reports},
           {"all_projected_marginal", all_marginal}},
      json{{"source", path}});
  std::cout << doc.dump(2) << '\n';
  std::cerr << "probe: rank=" << rank << " max_value=" << max_value << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marginal tracial state toolkit"};
  app.require_subcommand(1);

  Tolerances tols;

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a state file");
  gen->require_subcommand(1);
  Index gen_n = 2;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  std::string gen_method = "mixture";
  std::string gen_vector_out;
  int gen_k = 2;

  auto* gen_tau = gen->add_subcommand("tau", "the tracial state");
  gen_tau->add_option("--n", gen_n, "factor dimension")->required()->check(CLI::PositiveNumber);
  gen_tau->add_option("--out", gen_out, "output state file")->required();

  auto* gen_pure = gen->add_subcommand("pure", "rank-one state from a random unitary");
  gen_pure->add_option("--n", gen_n, "factor dimension")->required()->check(CLI::PositiveNumber);
  gen_pure->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen_pure->add_option("--out", gen_out, "output state file")->required();
  gen_pure->add_option("--vector-out", gen_vector_out, "also write the coefficient vector");

  auto* gen_mix = gen->add_subcommand("mix", "random convex mixture of rank-one states");
  gen_mix->add_option("--n", gen_n, "factor dimension")->required()->check(CLI::PositiveNumber);
  gen_mix->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen_mix->add_option("--k", gen_k, "number of components")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_mix->add_option("--out", gen_out, "output state file")->required();

  auto* gen_sample = gen->add_subcommand("sample", "random marginal tracial state");
  gen_sample->add_option("--n", gen_n, "factor dimension")
      ->required()
      ->check(CLI::PositiveNumber);
  gen_sample->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen_sample->add_option("--method", gen_method, "mixture or project_shrink")
      ->capture_default_str()
      ->check(CLI::IsMember({"mixture", "project_shrink"}));
  gen_sample->add_option("--out", gen_out, "output state file")->required();

  // check -----------------------------------------------------------------
  auto* check = app.add_subcommand("check", "certify a state file");
  std::string check_path;
  check->add_option("state", check_path, "state file to certify")->required();
  add_tolerance_flags(check, tols);

  // descend ---------------------------------------------------------------
  auto* desc = app.add_subcommand("descend", "descend to an extreme point");
  std::string desc_in, desc_out, desc_trace;
  int desc_max_steps = 0;
  desc->add_option("state", desc_in, "starting state file")->required();
  desc->add_option("--out", desc_out, "terminal state file");
  desc->add_option("--trace", desc_trace, "descent trace file");
  desc->add_option("--max-steps", desc_max_steps, "step budget (default: tolerance preset)");
  add_tolerance_flags(desc, tols);

  // hunt ------------------------------------------------------------------
  auto* hunt = app.add_subcommand("hunt", "randomized search for non-pure extreme points");
  Index hunt_n = 2;
  std::uint64_t hunt_trials = 100, hunt_seed = 0;
  int hunt_jobs = 1, hunt_probe_samples = 1000, hunt_max_steps = 0;
  std::string hunt_out;
  hunt->add_option("--n", hunt_n, "factor dimension")->required()->check(CLI::PositiveNumber);
  hunt->add_option("--trials", hunt_trials, "number of trials")
      ->required()
      ->check(CLI::PositiveNumber);
  hunt->add_option("--seed", hunt_seed, "master seed")->capture_default_str();
  hunt->add_option("--jobs", hunt_jobs, "worker threads")
      ->envname("MTS_JOBS")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  hunt->add_option("--probe-samples", hunt_probe_samples,
                   "restriction probes per non-rank-one terminal")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  hunt->add_option("--max-steps", hunt_max_steps, "descent step budget");
  hunt->add_option("--out", hunt_out, "report file")->required();
  add_tolerance_flags(hunt, tols);

  // schmidt ---------------------------------------------------------------
  auto* schmidt = app.add_subcommand("schmidt", "Schmidt decomposition of a vector file");
  std::string schmidt_path;
  schmidt->add_option("vector", schmidt_path, "vector file")->required();

  // probe -----------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "restriction probe on an extremal state");
  std::string probe_path;
  int probe_samples = 1000;
  std::uint64_t probe_seed = 0;
  probe->add_option("--state", probe_path, "extremal state file")->required();
  probe->add_option("--samples", probe_samples, "number of probes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  probe->add_option("--seed", probe_seed, "random seed")->capture_default_str();
  add_tolerance_flags(probe, tols);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_tau->parsed())
      return write_state(gen_out, mts::tracial_state<double>(gen_n),
                         gen_metadata("gen tau", 0, tols));
    if (gen_pure->parsed()) {
      mts::RandomStream<double> rng(mts::mix_seed(gen_seed));
      const CMat<double> lambda = rng.haar_unitary(gen_n);
      const StateElement<double> state = mts::pure_state_from_unitary(lambda);
      if (!gen_vector_out.empty()) {
        try {
          mts::save_vector(gen_vector_out, gen_n, mts::vector_from_unitary(lambda),
                           gen_metadata("gen pure", gen_seed, tols));
        } catch (const std::exception& err) {
          std::cerr << "mts gen: " << err.what() << '\n';
          return 3;
        }
      }
      return write_state(gen_out, state, gen_metadata("gen pure", gen_seed, tols));
    }
    if (gen_mix->parsed()) {
      mts::RandomStream<double> rng(mts::mix_seed(gen_seed));
      std::vector<StateElement<double>> parts;
      for (int i = 0; i < gen_k; ++i)
        parts.push_back(mts::pure_state_from_unitary<double>(rng.haar_unitary(gen_n)));
      const StateElement<double> state = mts::mix(parts, rng.simplex_weights(gen_k));
      return write_state(gen_out, state, gen_metadata("gen mix", gen_seed, tols));
    }
    if (gen_sample->parsed()) {
      const StateElement<double> state = mts::sample_marginal_tracial<double>(
          gen_n, gen_seed, mts::sample_method_from_string(gen_method), tols.rank_tol);
      return write_state(gen_out, state, gen_metadata("gen sample " + gen_method, gen_seed, tols));
    }
    if (check->parsed()) return run_check(check_path, tols);
    if (desc->parsed())
      return run_descend(desc_in, desc_out, desc_trace, tols, desc_max_steps);
    if (hunt->parsed())
      return run_hunt(hunt_n, hunt_trials, hunt_seed, hunt_jobs, hunt_probe_samples,
                      hunt_max_steps, hunt_out, tols);
    if (schmidt->parsed()) return run_schmidt(schmidt_path);
    if (probe->parsed()) return run_probe(probe_path, probe_samples, probe_seed, tols);
  } catch (const std::invalid_argument& err) {
    std::cerr << "mts: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "mts: " << err.what() << '\n';
    return 2;
  }
  return 2;
}
