// Acceptance gate: one line per criterion, PASS or FAIL, nonzero exit when
// anything fails. Criteria 1 and 8 drive the installed binary through
// MTS_BIN; everything else exercises the library directly.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "mts/mts.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mts;

namespace {

struct Criterion {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) detail.str(what);
      ok = false;
    }
  }
};

struct CliResult {
  int exit_code = -1;
  double seconds = 0;
};

fs::path work_dir;

std::string path_of(const std::string& name) { return (work_dir / name).string(); }

CliResult run_cli(const std::string& args) {
  CliResult result;
  const char* bin = std::getenv("MTS_BIN");
  if (!bin) return result;
  const std::string cmd = std::string(bin) + " " + args + " >" + path_of("cli_out.txt") +
                          " 2>" + path_of("cli_err.txt");
  const auto t0 = std::chrono::steady_clock::now();
  const int raw = std::system(cmd.c_str());
  const auto t1 = std::chrono::steady_clock::now();
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.seconds = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// extremal ranks observed anywhere in the run, for the dimension bound
std::vector<std::pair<Index, Index>> extremal_ranks;

void record_extremal(Index n, Index rank) { extremal_ranks.emplace_back(n, rank); }

void record_hunt_ranks(const json& report_data, Index n) {
  for (const auto& [key, value] : report_data.at("rank_histogram").items()) {
    (void)value;
    record_extremal(n, static_cast<Index>(std::stoll(key)));
  }
}

// ---------------------------------------------------------------------------

Criterion criterion_1_small_dim_search() {
  Criterion c;
  const std::string out = path_of("hunt_n2.json");
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const CliResult run =
      run_cli("hunt --n 2 --trials 200 --seed 1 --jobs " + std::to_string(hw) + " --out " + out);
  c.expect(run.exit_code == 0, "hunt exited with code " + std::to_string(run.exit_code));
  c.expect(run.seconds < 60.0, "hunt took " + std::to_string(run.seconds) + " s");
  if (!c.ok) return c;

  const json data = json::parse(slurp(out)).at("data");
  c.expect(data.at("trials") == 200, "trial count mismatch");
  c.expect(data.at("failure_count") == 0,
           "failures: " + data.at("failures").dump());
  c.expect(data.at("pure_count") == 200,
           "pure_count = " + data.at("pure_count").dump());
  c.expect(data.at("inconsistent_count") == 0, "inconsistent trials");
  c.expect(data.at("rank_histogram").contains("1") &&
               data.at("rank_histogram").at("1") == 200,
           "rank histogram " + data.at("rank_histogram").dump());
  record_hunt_ranks(data, 2);
  c.detail << "200/200 rank-one pure terminals, " << run.seconds << " s";
  return c;
}

Criterion criterion_2_rank_one_pipeline() {
  Criterion c;
  double worst_marginal = 0, worst_coeff = 0;
  for (const Index n : {2, 3, 4}) {
    for (int rep = 0; rep < 50 && c.ok; ++rep) {
      RandomStream<double> rng(derive_seed(0xA2, static_cast<std::uint64_t>(n * 1000 + rep)));
      const CMat<double> lambda = rng.haar_unitary(n);
      const StateElement<double> s = pure_state_from_unitary(lambda);
      const auto rep_m = check_marginal(s, 1e-10);
      worst_marginal = std::max({worst_marginal, rep_m.p_residual, rep_m.q_residual});
      c.expect(rep_m.p_residual < 1e-10 && rep_m.q_residual < 1e-10,
               "marginal residual above 1e-10 at n=" + std::to_string(n));
      c.expect(extremal_by_intersection(s).extremal,
               "intersection route not extremal at n=" + std::to_string(n));
      c.expect(extremal_by_block_kernel(s).extremal,
               "block route not extremal at n=" + std::to_string(n));
      const auto sd = schmidt_decompose(vector_from_unitary(lambda));
      const double flat = 1.0 / std::sqrt(double(n));
      for (Index k = 0; k < n; ++k)
        worst_coeff = std::max(worst_coeff, std::abs(sd.coefficients(k) - flat));
      c.expect(worst_coeff < 1e-10, "Schmidt coefficient off 1/sqrt(n) at n=" + std::to_string(n));
      if (c.ok) record_extremal(n, 1);
    }
  }
  c.detail << "150 unitaries, worst marginal residual " << worst_marginal
           << ", worst coefficient deviation " << worst_coeff;
  return c;
}

Criterion criterion_3_route_agreement() {
  Criterion c;
  int certified = 0;
  for (const Index n : {2, 3}) {
    for (int rep = 0; rep < 100 && c.ok; ++rep) {
      const SampleMethod method =
          rep % 2 == 0 ? SampleMethod::mixture : SampleMethod::project_shrink;
      const StateElement<double> s = sample_marginal_tracial<double>(
          n, derive_seed(0xA3, static_cast<std::uint64_t>(n * 1000 + rep)), method);
      const Certificate<double> cert = certify(s);
      c.expect(cert.marginal, "sampled state failed marginality at n=" + std::to_string(n));
      c.expect(cert.extremal_intersection.has_value() &&
                   cert.extremal_block_kernel.has_value(),
               "missing verdict at n=" + std::to_string(n));
      if (!c.ok) break;
      c.expect(*cert.extremal_intersection == *cert.extremal_block_kernel,
               "route disagreement at n=" + std::to_string(n) + " rep " + std::to_string(rep));
      c.expect(*cert.intersection_dim == *cert.block_kernel_dim,
               "defect dimension disagreement at n=" + std::to_string(n));
      c.expect(cert.consistent, "inconsistent certificate at n=" + std::to_string(n));
      if (cert.extremal()) record_extremal(n, cert.rank);
      ++certified;
    }
  }
  c.detail << certified << " certificates, identical verdicts on both routes";
  return c;
}

Criterion criterion_4_structural_identities() {
  Criterion c;
  double worst = 0;
  const auto track = [&](double r) { worst = std::max(worst, r); return r; };
  for (const Index n : {2, 3}) {
    const Index m = n * n;
    const CMat<double> id = CMat<double>::Identity(m, m);
    const CMat<double> idf = CMat<double>::Identity(n, n);
    for (int rep = 0; rep < 50; ++rep) {
      RandomStream<double> rng(derive_seed(0xA4, static_cast<std::uint64_t>(n * 1000 + rep)));
      CMat<double> x = rng.gaussian_matrix(m, m);
      x /= hs_norm(x);
      CMat<double> y = rng.gaussian_matrix(m, m);
      y /= hs_norm(y);

      // projection identities for (P-Q)^2
      const CMat<double> px = proj_one_sided(x, n);
      c.expect(track(hs_norm(CMat<double>(proj_one_sided(px, n) - px))) < 1e-12,
               "idempotency residual above 1e-12");
      c.expect(track(std::abs(hs_inner(px, y) - hs_inner(x, proj_one_sided(y, n)))) < 1e-12,
               "self-adjointness residual above 1e-12");

      // conditional expectation properties
      c.expect(track(hs_norm(CMat<double>(cond_exp_first(id, n) - id))) < 1e-12,
               "unit preservation failed");
      CMat<double> w = rng.psd_matrix(m);
      w /= hs_norm(w);
      Eigen::SelfAdjointEigenSolver<CMat<double>> pos(cond_exp_first(w, n));
      c.expect(pos.eigenvalues().minCoeff() > -1e-12, "positivity failed");

      const CMat<double> a = Eigen::kroneckerProduct(
          CMat<double>(rng.gaussian_matrix(n, n) / std::sqrt(double(n))), idf);
      const CMat<double> b = Eigen::kroneckerProduct(
          CMat<double>(rng.gaussian_matrix(n, n) / std::sqrt(double(n))), idf);
      c.expect(track(hs_norm(CMat<double>(cond_exp_first(CMat<double>(a * x * b), n) -
                                          a * cond_exp_first(x, n) * b))) < 1e-12,
               "bimodule identity residual above 1e-12");

      const CMat<double> k = Eigen::kroneckerProduct(
          idf, CMat<double>(rng.gaussian_matrix(n, n) / std::sqrt(double(n))));
      c.expect(track(hs_norm(CMat<double>(cond_exp_first(CMat<double>(x * k), n) -
                                          cond_exp_first(CMat<double>(k * x), n)))) < 1e-12,
               "commutant trade residual above 1e-12");

      c.expect(hs_norm(cond_exp_first(CMat<double>(x.adjoint() * x), n)) > 1e-8,
               "faithfulness failed on a nonzero input");
      c.expect(track(std::abs(normalized_trace(cond_exp_first(x, n)) - normalized_trace(x))) <
                   1e-12,
               "trace preservation residual above 1e-12");
      c.expect(track(hs_norm(CMat<double>(cond_exp_first(CMat<double>(x.adjoint()), n) -
                                          cond_exp_first(x, n).adjoint()))) < 1e-12,
               "adjoint compatibility residual above 1e-12");
      c.expect(operator_norm(cond_exp_first(x, n)) <= operator_norm(x) + 1e-12,
               "operator norm contraction failed");
      c.expect(trace_norm(cond_exp_first(x, n)) <= trace_norm(x) + 1e-12,
               "trace norm contraction failed");
    }
  }
  for (const Index n : {2, 3, 4}) {
    const auto one_sided = one_sided_basis<double>(n);
    const auto correlated = correlated_basis<double>(n);
    c.expect(1 + one_sided.size() + correlated.size() == n * n * n * n,
             "orthonormal decomposition is not n^4 elements at n=" + std::to_string(n));
    c.expect(one_sided.gram_defect() < 1e-12 && correlated.gram_defect() < 1e-12,
             "component bases are not orthonormal at n=" + std::to_string(n));
  }
  c.detail << "identities on 100 random inputs, worst residual " << worst
           << ", decomposition sizes check out for n=2,3,4";
  return c;
}

Criterion criterion_5_dimension_bounds() {
  Criterion c;
  for (const auto& [n, rank] : extremal_ranks) {
    c.expect(rank < n * n, "extremal rank " + std::to_string(rank) + " not below n^2");
    c.expect(rank * rank <= 2 * n * n - 1,
             "extremal rank " + std::to_string(rank) + " breaks rank^2 <= 2n^2-1");
  }
  for (const Index n : {2, 3, 4}) {
    const Certificate<double> cert = certify(tracial_state<double>(n));
    const Index expected = (n * n - 1) * (n * n - 1);
    c.expect(cert.marginal, "tracial state not marginal at n=" + std::to_string(n));
    c.expect(!cert.extremal(), "tracial state extremal at n=" + std::to_string(n));
    c.expect(cert.intersection_dim.has_value() && *cert.intersection_dim == expected,
             "tracial intersection dimension is not (n^2-1)^2 at n=" + std::to_string(n));
  }
  c.detail << extremal_ranks.size()
           << " extremal verdicts within the rank bounds; tracial defect is (n^2-1)^2 for n=2,3,4";
  return c;
}

Criterion criterion_6_descent_soundness() {
  Criterion c;
  int descents = 0, total_steps = 0;
  for (const Index n : {2, 3}) {
    for (int rep = 0; rep < 50 && c.ok; ++rep) {
      const SampleMethod method =
          rep % 2 == 0 ? SampleMethod::mixture : SampleMethod::project_shrink;
      const StateElement<double> start = sample_marginal_tracial<double>(
          n, derive_seed(0xA6, static_cast<std::uint64_t>(n * 1000 + rep)), method);
      const DescentTrace<double> trace = descend(start);
      c.expect(trace.failure.empty(), "descent ran out of budget at n=" + std::to_string(n));
      c.expect(static_cast<Index>(trace.steps.size()) <= n * n,
               "more than n^2 steps at n=" + std::to_string(n));
      for (const auto& step : trace.steps) {
        c.expect(step.marginal_residual <= 1e-9, "marginality above 1e-9 after a step");
        c.expect(step.rank_after < step.rank_before, "rank did not strictly decrease");
      }
      c.expect(trace.terminal_certificate.extremal_intersection.value_or(false) &&
                   trace.terminal_certificate.extremal_block_kernel.value_or(false),
               "terminal not extremal by both tests at n=" + std::to_string(n));
      if (c.ok) record_extremal(n, trace.terminal_certificate.rank);
      ++descents;
      total_steps += static_cast<int>(trace.steps.size());
    }
  }
  c.detail << descents << " descents, " << total_steps
           << " total steps, every terminal extremal by both routes";
  return c;
}

Criterion criterion_7_square_root_oracle() {
  Criterion c;
  double worst = 0;
  int count = 0;
  const Index dims[] = {4, 9, 16};
  for (int rep = 0; rep < 100; ++rep) {
    const Index dim = dims[rep % 3];
    RandomStream<double> rng(derive_seed(0xA7, static_cast<std::uint64_t>(rep)));
    const CMat<double> g = rng.psd_matrix(dim);
    const CMat<double> iterative = sqrt_sznagy(g);
    const CMat<double> spectral = sqrt_spectral(g);
    const double diff = hs_norm(CMat<double>(iterative - spectral));
    worst = std::max(worst, diff);
    c.expect(diff < 1e-8, "square roots diverge by " + std::to_string(diff));
    ++count;
  }
  c.detail << count << " random positive matrices over dims 4, 9, 16, worst gap " << worst;
  return c;
}

Criterion criterion_8_search_determinism() {
  Criterion c;
  const std::string solo = path_of("hunt_n3_solo.json");
  const std::string pooled = path_of("hunt_n3_pooled.json");
  const CliResult first =
      run_cli("hunt --n 3 --trials 1000 --seed 2026 --jobs 8 --out " + pooled);
  c.expect(first.exit_code == 0, "jobs=8 hunt exited with " + std::to_string(first.exit_code));
  const CliResult second =
      run_cli("hunt --n 3 --trials 1000 --seed 2026 --jobs 1 --out " + solo);
  c.expect(second.exit_code == 0, "jobs=1 hunt exited with " + std::to_string(second.exit_code));
  if (!c.ok) return c;
  const std::string a = slurp(solo), b = slurp(pooled);
  c.expect(!a.empty() && a == b, "reports differ between jobs=1 and jobs=8");
  if (!c.ok) return c;

  const json data = json::parse(a).at("data");
  c.expect(data.at("trials") == 1000, "trial count mismatch");
  const auto& candidates = data.at("candidates");
  c.expect(candidates.size() == data.at("nonpure_extremal_count").get<std::size_t>(),
           "candidate list does not match the non-pure extremal count");
  const double base_tol = data.at("tolerances").at("tol").get<double>();
  const SubspaceBasis<double> one_sided = one_sided_basis<double>(3);
  for (const auto& cand : candidates) {
    c.expect(cand.contains("terminal") && cand.contains("certificate") &&
                 cand.contains("recheck"),
             "candidate missing audit fields");
    const double recheck_tol =
        cand.at("recheck").at("tolerances").at("tol").get<double>();
    c.expect(std::abs(recheck_tol - base_tol / 10) < 1e-18,
             "recheck did not run at tolerances/10");
    c.expect(!cand.at("certificate").at("state").is_null(),
             "candidate certificate does not embed its state");
    if (!c.ok) break;

    // structural audit: at an extremal state the compressed images R x R of
    // the identity and the one-sided basis must fill the whole corner
    const StateElement<double> terminal = state_data_from_json(3, cand.at("terminal"));
    const RangeProjection<double> rp = range_projection(terminal.h, 1e-9);
    CMat<double> cols(81, 1 + one_sided.size());
    cols.col(0) = Eigen::Map<const CVec<double>>(rp.projector.data(), 81);
    for (Index j = 0; j < one_sided.size(); ++j) {
      const CMat<double> y =
          rp.projector * one_sided.vectors[static_cast<std::size_t>(j)] * rp.projector;
      cols.col(1 + j) = Eigen::Map<const CVec<double>>(y.data(), 81);
    }
    c.expect(oracle::rank_of(cols, 1e-8) == rp.rank * rp.rank,
             "candidate corner is not filled by the compressed one-sided images");
  }
  c.expect(data.contains("max_probe"), "max probe value missing");
  const Index succeeded = 1000 - data.at("failure_count").get<Index>();
  if (succeeded > 0)
    c.expect(data.at("max_probe").get<double>() >= 1.0 - 1e-9,
             "max probe below the guaranteed floor of one");
  record_hunt_ranks(data, 3);
  c.detail << "byte-identical reports (jobs 1 vs 8), " << candidates.size()
           << " candidates, max probe " << data.at("max_probe").dump() << ", "
           << data.at("failure_count").dump() << " failures, " << first.seconds << " + "
           << second.seconds << " s";
  return c;
}

Criterion criterion_9_schmidt_round_trip() {
  Criterion c;
  double worst_rec = 0, worst_inv = 0, worst_solve = 0;
  for (const Index n : {2, 3, 4}) {
    for (int rep = 0; rep < 200 && c.ok; ++rep) {
      RandomStream<double> rng(derive_seed(0xA9, static_cast<std::uint64_t>(n * 1000 + rep)));
      const CVec<double> xi = rng.unit_vector(n * n);
      const auto sd = schmidt_decompose(xi);
      worst_rec = std::max(worst_rec, (sd.reconstruct() - xi).norm());
      c.expect(worst_rec < 1e-10, "reconstruction residual above 1e-10");

      const CVec<double> rotated =
          Eigen::kroneckerProduct(rng.haar_unitary(n), rng.haar_unitary(n)) * xi;
      const auto sd_rot = schmidt_decompose(rotated);
      worst_inv = std::max(worst_inv, (sd.coefficients - sd_rot.coefficients).norm());
      c.expect(worst_inv < 1e-10, "coefficients moved under local unitaries");

      if (rep < 50) {
        const CVec<double> entangled = vector_from_unitary(rng.haar_unitary(n));
        const CMat<double> phi = rng.gaussian_matrix(n, n);
        const CVec<double> target =
            Eigen::kroneckerProduct(phi, CMat<double>::Identity(n, n)) * entangled;
        const CMat<double> solved = solve_local_operator(entangled, target);
        worst_solve = std::max(worst_solve, (solved - phi).norm());
        c.expect(worst_solve < 1e-10, "local operator solve residual above 1e-10");
      }
    }
  }
  c.detail << "600 vectors, worst reconstruction " << worst_rec << ", worst invariance "
           << worst_inv << ", worst solve " << worst_solve;
  return c;
}

}  // namespace

int main() {
  work_dir = fs::temp_directory_path() /
             ("mts_acceptance_" + std::to_string(static_cast<unsigned long>(::getpid())));
  fs::create_directories(work_dir);

  struct Entry {
    const char* label;
    Criterion (*fn)();
  };
  // criterion 5 consumes the extremal ranks the others record, so it runs last
  Criterion results[9];
  const Entry entries[] = {
      {"small-dimension search lands on rank-one pure states", criterion_1_small_dim_search},
      {"rank-one pipeline: marginality, extremality, flat Schmidt spectrum",
       criterion_2_rank_one_pipeline},
      {"both extremality routes agree on random states", criterion_3_route_agreement},
      {"structural identities of the conditional expectations", criterion_4_structural_identities},
      {"extremal rank bounds and the tracial defect dimension", criterion_5_dimension_bounds},
      {"descent is marginality-preserving, rank-reducing, terminating",
       criterion_6_descent_soundness},
      {"iterative square root matches the spectral oracle", criterion_7_square_root_oracle},
      {"search reports are deterministic and candidates auditable",
       criterion_8_search_determinism},
      {"Schmidt analysis round-trips and respects local unitaries",
       criterion_9_schmidt_round_trip},
  };
  const int order[] = {0, 1, 2, 3, 5, 6, 7, 8, 4};
  for (const int i : order) results[i] = entries[i].fn();

  int failures = 0;
  for (int i = 0; i < 9; ++i) {
    const bool ok = results[i].ok;
    failures += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << (i + 1) << "/9  " << entries[i].label
              << ": " << results[i].detail.str() << '\n';
  }

  if (failures == 0) {
    std::error_code ec;
    fs::remove_all(work_dir, ec);
  } else {
    std::cout << "artifacts kept in " << work_dir.string() << '\n';
  }
  return failures;
}
