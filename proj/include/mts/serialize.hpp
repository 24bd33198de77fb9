#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mts/core.hpp"
#include "mts/descent.hpp"
#include "mts/extremality.hpp"
#include "mts/marginal.hpp"
#include "mts/schmidt.hpp"

// On-disk format: every file is a single JSON document
//   { "format_version": "1", "kind": ..., "n": ..., "data": ..., "metadata": ... }
// with complex entries encoded as [re, im] pairs and matrices flattened
// row-major. Kinds: "state", "vector", "certificate", "trace", "report",
// "schmidt", "probe".

namespace mts {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "1";

inline json matrix_to_json(const CMat<double>& a) {
  json entries = json::array();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      entries.push_back(json::array({a(i, j).real(), a(i, j).imag()}));
  return json{{"dim", a.rows()}, {"entries", std::move(entries)}};
}

inline CMat<double> matrix_from_json(const json& j) {
  const Index dim = j.at("dim").get<Index>();
  const auto& entries = j.at("entries");
  if (dim <= 0 || static_cast<Index>(entries.size()) != dim * dim)
    throw std::invalid_argument("matrix_from_json: entry count does not match dim");
  CMat<double> a(dim, dim);
  Index pos = 0;
  for (Index i = 0; i < dim; ++i)
    for (Index j2 = 0; j2 < dim; ++j2, ++pos)
      a(i, j2) = Complex<double>(entries[pos].at(0).get<double>(),
                                 entries[pos].at(1).get<double>());
  return a;
}

inline json vector_to_json(const CVec<double>& v) {
  json entries = json::array();
  for (Index i = 0; i < v.size(); ++i)
    entries.push_back(json::array({v(i).real(), v(i).imag()}));
  return json{{"dim", v.size()}, {"entries", std::move(entries)}};
}

inline CVec<double> vector_from_json(const json& j) {
  const Index dim = j.at("dim").get<Index>();
  const auto& entries = j.at("entries");
  if (dim <= 0 || static_cast<Index>(entries.size()) != dim)
    throw std::invalid_argument("vector_from_json: entry count does not match dim");
  CVec<double> v(dim);
  for (Index i = 0; i < dim; ++i)
    v(i) = Complex<double>(entries[i].at(0).get<double>(), entries[i].at(1).get<double>());
  return v;
}

inline json tolerances_to_json(const Tolerances& t) {
  return json{{"tol", t.tol},
              {"rank_tol", t.rank_tol},
              {"angle_tol", t.angle_tol},
              {"null_tol", t.null_tol},
              {"sqrt_tol", t.sqrt_tol},
              {"sqrt_max_iters", t.sqrt_max_iters},
              {"descent_max_steps", t.descent_max_steps}};
}

inline Tolerances tolerances_from_json(const json& j) {
  Tolerances t;
  t.tol = j.value("tol", t.tol);
  t.rank_tol = j.value("rank_tol", t.rank_tol);
  t.angle_tol = j.value("angle_tol", t.angle_tol);
  t.null_tol = j.value("null_tol", t.null_tol);
  t.sqrt_tol = j.value("sqrt_tol", t.sqrt_tol);
  t.sqrt_max_iters = j.value("sqrt_max_iters", t.sqrt_max_iters);
  t.descent_max_steps = j.value("descent_max_steps", t.descent_max_steps);
  return t;
}

inline json state_data_to_json(const StateElement<double>& s) {
  return json{{"h", matrix_to_json(s.h)}, {"rank_tol", s.rank_tol}};
}

inline StateElement<double> state_data_from_json(Index n, const json& j) {
  StateElement<double> s;
  s.n = n;
  s.h = matrix_from_json(j.at("h"));
  s.rank_tol = j.value("rank_tol", 1e-9);
  s.validate();
  return s;
}

inline json certificate_to_json(const Certificate<double>& c,
                                const CMat<double>* certified = nullptr) {
  const auto opt_bool = [](const std::optional<bool>& v) {
    return v ? json(*v) : json(nullptr);
  };
  const auto opt_index = [](const std::optional<Index>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json out{{"n", c.n},
           {"rank", c.rank},
           {"marginal", c.marginal},
           {"extremal_intersection", opt_bool(c.extremal_intersection)},
           {"extremal_block_kernel", opt_bool(c.extremal_block_kernel)},
           {"pure", opt_bool(c.pure)},
           {"intersection_dim", opt_index(c.intersection_dim)},
           {"block_kernel_dim", opt_index(c.block_kernel_dim)},
           {"purity_conditions", json(c.purity_conditions)},
           {"residuals", json(c.residuals)},
           {"tolerances", json(c.tolerances)},
           {"consistent", c.consistent}};
  out["witness"] = c.witness ? matrix_to_json(*c.witness) : json(nullptr);
  out["state"] = certified ? matrix_to_json(*certified) : json(nullptr);
  return out;
}

inline Certificate<double> certificate_from_json(const json& j) {
  Certificate<double> c;
  c.n = j.at("n").get<Index>();
  c.rank = j.at("rank").get<Index>();
  c.marginal = j.at("marginal").get<bool>();
  if (!j.at("extremal_intersection").is_null())
    c.extremal_intersection = j.at("extremal_intersection").get<bool>();
  if (!j.at("extremal_block_kernel").is_null())
    c.extremal_block_kernel = j.at("extremal_block_kernel").get<bool>();
  if (!j.at("pure").is_null()) c.pure = j.at("pure").get<bool>();
  if (!j.at("intersection_dim").is_null())
    c.intersection_dim = j.at("intersection_dim").get<Index>();
  if (!j.at("block_kernel_dim").is_null())
    c.block_kernel_dim = j.at("block_kernel_dim").get<Index>();
  if (j.contains("purity_conditions"))
    c.purity_conditions = j.at("purity_conditions").get<std::map<std::string, bool>>();
  c.residuals = j.at("residuals").get<std::map<std::string, double>>();
  c.tolerances = j.at("tolerances").get<std::map<std::string, double>>();
  c.consistent = j.at("consistent").get<bool>();
  if (!j.at("witness").is_null()) c.witness = matrix_from_json(j.at("witness"));
  return c;
}

inline json descent_trace_to_json(const DescentTrace<double>& t) {
  json steps = json::array();
  for (const auto& s : t.steps)
    steps.push_back(json{{"rank_before", s.rank_before},
                         {"rank_after", s.rank_after},
                         {"step_size", s.step_size},
                         {"direction_sign", s.direction_sign},
                         {"marginal_residual", s.marginal_residual}});
  return json{{"steps", std::move(steps)},
              {"terminal", state_data_to_json(t.terminal)},
              {"certificate", certificate_to_json(t.terminal_certificate, &t.terminal.h)},
              {"reached_extremal", t.reached_extremal},
              {"failure", t.failure}};
}

inline json hunt_report_to_json(const HuntReport<double>& r) {
  json ranks = json::object();
  for (const auto& [rank, count] : r.rank_histogram) ranks[std::to_string(rank)] = count;
  json steps = json::object();
  for (const auto& [len, count] : r.steps_histogram) steps[std::to_string(len)] = count;
  json candidates = json::array();
  for (const auto& c : r.candidates)
    candidates.push_back(
        json{{"trial", c.trial},
             {"terminal", state_data_to_json(c.terminal)},
             {"certificate", certificate_to_json(c.certificate, &c.terminal.h)},
             {"recheck", certificate_to_json(c.recheck, &c.terminal.h)},
             {"probe_max", c.probe_max}});
  json failures = json::array();
  for (const auto& f : r.failures)
    failures.push_back(json{{"trial", f.trial}, {"message", f.message}});
  return json{{"n", r.n},
              {"trials", r.trials},
              {"seed", r.seed},
              {"probe_samples", r.probe_samples},
              {"tolerances", tolerances_to_json(r.tolerances)},
              {"pure_count", r.pure_count},
              {"nonpure_extremal_count", r.nonpure_extremal_count},
              {"failure_count", r.failure_count},
              {"inconsistent_count", r.inconsistent_count},
              {"max_probe", r.max_probe},
              {"rank_histogram", std::move(ranks)},
              {"steps_histogram", std::move(steps)},
              {"candidates", std::move(candidates)},
              {"failures", std::move(failures)}};
}

inline HuntReport<double> hunt_report_from_json(const json& j) {
  HuntReport<double> r;
  r.n = j.at("n").get<Index>();
  r.trials = j.at("trials").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.probe_samples = j.at("probe_samples").get<int>();
  r.tolerances = tolerances_from_json(j.at("tolerances"));
  r.pure_count = j.at("pure_count").get<Index>();
  r.nonpure_extremal_count = j.at("nonpure_extremal_count").get<Index>();
  r.failure_count = j.at("failure_count").get<Index>();
  r.inconsistent_count = j.at("inconsistent_count").get<Index>();
  r.max_probe = j.at("max_probe").get<double>();
  for (const auto& [key, value] : j.at("rank_histogram").items())
    r.rank_histogram[static_cast<Index>(std::stoll(key))] = value.get<Index>();
  for (const auto& [key, value] : j.at("steps_histogram").items())
    r.steps_histogram[std::stoi(key)] = value.get<Index>();
  for (const auto& c : j.at("candidates")) {
    HuntCandidate<double> cand;
    cand.trial = c.at("trial").get<std::uint64_t>();
    cand.terminal = state_data_from_json(r.n, c.at("terminal"));
    cand.certificate = certificate_from_json(c.at("certificate"));
    cand.recheck = certificate_from_json(c.at("recheck"));
    cand.probe_max = c.at("probe_max").get<double>();
    r.candidates.push_back(std::move(cand));
  }
  for (const auto& f : j.at("failures"))
    r.failures.push_back({f.at("trial").get<std::uint64_t>(), f.at("message").get<std::string>()});
  return r;
}

inline json schmidt_to_json(const SchmidtDecomposition<double>& sd) {
  json coeff = json::array();
  for (Index i = 0; i < sd.coefficients.size(); ++i) coeff.push_back(sd.coefficients(i));
  return json{{"n", sd.n},
              {"coefficients", std::move(coeff)},
              {"left_basis", matrix_to_json(sd.left_basis)},
              {"right_basis", matrix_to_json(sd.right_basis)},
              {"schmidt_rank", sd.schmidt_rank}};
}

// --- document container -----------------------------------------------------

inline json make_document(const std::string& kind, Index n, json data, json metadata) {
  return json{{"format_version", kFormatVersion},
              {"kind", kind},
              {"n", n},
              {"data", std::move(data)},
              {"metadata", std::move(metadata)}};
}

inline void save_document(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("invalid JSON in " + path + ": " + err.what());
  }
  if (!doc.is_object() || doc.value("format_version", "") != kFormatVersion)
    throw std::runtime_error("unsupported document format in " + path);
  return doc;
}

inline json expect_kind(const json& doc, const std::string& kind, const std::string& path) {
  if (doc.value("kind", "") != kind)
    throw std::runtime_error(path + ": expected kind \"" + kind + "\", found \"" +
                             doc.value("kind", "") + "\"");
  return doc.at("data");
}

inline void save_state(const std::string& path, const StateElement<double>& s, json metadata) {
  save_document(path, make_document("state", s.n, state_data_to_json(s), std::move(metadata)));
}

inline StateElement<double> load_state(const std::string& path) {
  const json doc = load_document(path);
  const json data = expect_kind(doc, "state", path);
  return state_data_from_json(doc.at("n").get<Index>(), data);
}

inline void save_vector(const std::string& path, Index n, const CVec<double>& xi, json metadata) {
  save_document(path, make_document("vector", n, json{{"xi", vector_to_json(xi)}},
                                    std::move(metadata)));
}

inline CVec<double> load_vector(const std::string& path) {
  const json doc = load_document(path);
  const json data = expect_kind(doc, "vector", path);
  const CVec<double> xi = vector_from_json(data.at("xi"));
  const Index n = doc.at("n").get<Index>();
  if (xi.size() != n * n)
    throw std::runtime_error(path + ": vector length does not match n");
  return xi;
}

}  // namespace mts
