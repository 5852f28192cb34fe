#include "cylgeo/io.hpp"

#include "cylgeo/error.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

namespace cylgeo {

namespace {

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

// Non-finite reals become strings so documents stay valid JSON.
Json real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return number(j.at(key), path + "." + key);
}

Vec vec_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Mat mat_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const int rows = static_cast<int>(j.size());
  Mat m;
  for (int i = 0; i < rows; ++i) {
    const Vec row = vec_from_json(j[i], path + "[" + std::to_string(i) + "]");
    if (i == 0) m.resize(rows, row.size());
    if (row.size() != m.cols()) fail(path, "rows have different lengths");
    m.row(i) = row.transpose();
  }
  return m;
}

Json claims_to_json(const HypothesisClaims& c) {
  return Json{{"h1", c.h1}, {"h2", c.h2}, {"h3", c.h3}};
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json profile_to_json(const Profile& p) {
  Json params = Json::object();
  switch (p.kind()) {
    case ProfileKind::constant:
      params["value"] = p.constant_value();
      break;
    case ProfileKind::gaussian:
    case ProfileKind::bump_pair:
      params["center"] = p.center();
      params["width"] = p.width();
      break;
    case ProfileKind::odd_decay:
      break;
    case ProfileKind::poly_gaussian:
      params["coeffs"] = p.coeffs();
      params["center"] = p.center();
      params["width"] = p.width();
      break;
    case ProfileKind::custom:
      params["name"] = p.name();
      break;
  }
  return Json{{"kind", to_string(p.kind())}, {"params", params}};
}

Profile profile_from_json(const Json& j, const std::string& path) {
  const Json& kind_json = field(j, "kind", path);
  if (!kind_json.is_string()) fail(path + ".kind", "expected a string");
  ProfileKind kind;
  try {
    kind = profile_kind_from_string(kind_json.get<std::string>());
  } catch (const Error& e) {
    fail(path + ".kind", e.what());
  }
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  const std::string pp = path + ".params";
  if (!params.is_object()) fail(pp, "expected an object");
  try {
    switch (kind) {
      case ProfileKind::constant:
        return Profile::constant(number(field(params, "value", pp), pp + ".value"));
      case ProfileKind::gaussian:
        return Profile::gaussian(number_or(params, "center", 0.0, pp),
                                 number_or(params, "width", 1.0, pp));
      case ProfileKind::odd_decay:
        return Profile::odd_decay();
      case ProfileKind::bump_pair:
        return Profile::bump_pair(number_or(params, "center", 1.0, pp),
                                  number_or(params, "width", 1.0, pp));
      case ProfileKind::poly_gaussian: {
        const Vec c = vec_from_json(field(params, "coeffs", pp), pp + ".coeffs");
        return Profile::poly_gaussian(std::vector<double>(c.begin(), c.end()),
                                      number_or(params, "center", 0.0, pp),
                                      number_or(params, "width", 1.0, pp));
      }
      case ProfileKind::custom:
        break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(pp, e.what());
  }
  fail(path + ".kind", "custom profiles cannot be loaded from JSON");
}

Json form_to_json(const PerturbationForm& form) {
  Json terms = Json::array();
  for (const auto& t : form.terms()) {
    terms.push_back(Json{{"profile", profile_to_json(t.profile)}, {"block", mat_to_json(t.block)}});
  }
  return Json{{"n", form.n()}, {"terms", terms}, {"claims", claims_to_json(form.claims)}};
}

PerturbationForm form_from_json(const Json& j, int n, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("n")) {
    const int declared = static_cast<int>(number(j.at("n"), path + ".n"));
    if (n >= 0 && declared != n) fail(path + ".n", "does not match the manifold dimension");
    n = declared;
  }
  std::optional<PerturbationForm> form;
  if (j.contains("builtin")) {
    const Json& b = j.at("builtin");
    if (!b.is_string()) fail(path + ".builtin", "expected a string");
    if (n < 1) fail(path + ".n", "dimension required for builtin forms");
    const std::string name = b.get<std::string>();
    try {
      if (name == "zero") {
        form = PerturbationForm(n);
      } else if (name == "odd_decay_anisotropic") {
        form = builtin::odd_decay_anisotropic(n);
      } else if (name == "isotropic") {
        form = builtin::isotropic(n, profile_from_json(field(j, "profile", path), path + ".profile"));
      } else if (name == "diagonal") {
        const Vec diag = vec_from_json(field(j, "sphere_diag", path), path + ".sphere_diag");
        if (diag.size() != n + 1) fail(path + ".sphere_diag", "expected N+1 entries");
        form = builtin::diagonal(n, profile_from_json(field(j, "profile", path), path + ".profile"),
                                 diag, number_or(j, "radial", 0.0, path));
      } else {
        fail(path + ".builtin", "unknown builtin '" + name + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(path, e.what());
    }
  } else {
    const Json& terms = field(j, "terms", path);
    if (!terms.is_array()) fail(path + ".terms", "expected an array");
    if (n < 0) {
      if (terms.empty()) fail(path + ".n", "dimension required for an empty term list");
      const Json& first = field(terms[0], "block", path + ".terms[0]");
      if (!first.is_array() || first.size() < 3) fail(path + ".terms[0].block", "block too small");
      n = static_cast<int>(first.size()) - 2;
    }
    if (n < 1) fail(path + ".n", "N must be >= 1");
    form = PerturbationForm(n);
    for (size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = path + ".terms[" + std::to_string(i) + "]";
      const Profile profile = profile_from_json(field(terms[i], "profile", tp), tp + ".profile");
      const Mat block = mat_from_json(field(terms[i], "block", tp), tp + ".block");
      try {
        form->add_term(profile, block);
      } catch (const Error& e) {
        fail(tp + ".block", e.what());
      }
    }
  }
  if (j.contains("claims")) {
    const Json& c = j.at("claims");
    if (!c.is_object()) fail(path + ".claims", "expected an object");
    form->claims.h1 = c.value("h1", form->claims.h1);
    form->claims.h2 = c.value("h2", form->claims.h2);
    form->claims.h3 = c.value("h3", form->claims.h3);
  }
  return *form;
}

Json loop_to_json(const DiscreteLoop& loop) {
  return Json{{"r", vec_to_json(loop.r_values())}, {"x", mat_to_json(loop.x_values())}};
}

DiscreteLoop loop_from_json(const Json& j) {
  const Vec r = vec_from_json(field(j, "r", "loop"), "loop.r");
  const Mat x = mat_from_json(field(j, "x", "loop"), "loop.x");
  if (x.rows() != r.size()) fail("loop.x", "row count differs from the length of r");
  return DiscreteLoop(r, x);
}

void write_loop_csv(std::ostream& os, const DiscreteLoop& loop) {
  os << "k,t,r";
  for (int i = 0; i <= loop.n(); ++i) os << ",x" << i;
  os << '\n';
  for (int k = 0; k < loop.nodes(); ++k) {
    os << k << ',' << format_real(static_cast<double>(k) / loop.nodes()) << ','
       << format_real(loop.r(k));
    for (int i = 0; i <= loop.n(); ++i) os << ',' << format_real(loop.x(k)(i));
    os << '\n';
  }
}

Json circle_param_to_json(const CircleParam& c) {
  return Json{{"r", c.r}, {"p", vec_to_json(c.p)}, {"q", vec_to_json(c.q)}};
}

CircleParam circle_param_from_json(const Json& j) {
  CircleParam c{number(field(j, "r", "circle"), "circle.r"),
                vec_from_json(field(j, "p", "circle"), "circle.p"),
                vec_from_json(field(j, "q", "circle"), "circle.q")};
  c.validate();
  return c;
}

Json spectrum_to_json(const SpectrumSummary& s, bool with_eigenvalues) {
  Json j{{"kernel_dim", s.kernel_dim},
         {"morse_index", s.morse_index},
         {"positive", s.positive},
         {"threshold", real(s.threshold)},
         {"gap_ratio", real(s.gap_ratio)},
         {"reliable", s.reliable},
         {"size", s.eigenvalues.size()}};
  if (s.eigenvalues.size() > 0) {
    j["smallest"] = s.eigenvalues(0);
    j["largest"] = s.eigenvalues(s.eigenvalues.size() - 1);
  }
  if (with_eigenvalues) j["eigenvalues"] = vec_to_json(s.eigenvalues);
  return j;
}

void write_spectrum_csv(std::ostream& os, const SpectrumSummary& s) {
  os << "index,eigenvalue\n";
  for (int i = 0; i < s.eigenvalues.size(); ++i) os << i << ',' << format_real(s.eigenvalues(i)) << '\n';
}

Json certificate_to_json(const GeodesicCertificate& c) {
  return Json{{"energy", c.energy},
              {"residual", c.residual},
              {"eps", c.eps},
              {"trivial", c.trivial},
              {"in_bracket", c.in_bracket},
              {"descent_steps", c.descent_steps},
              {"newton_steps", c.newton_steps},
              {"deflated", c.deflated},
              {"spectrum", spectrum_to_json(c.spectrum)},
              {"o2_normal_form",
               Json{{"shift", c.normal_form.shift},
                    {"reflect", c.normal_form.reflect},
                    {"mean_r", c.normal_form.mean_r},
                    {"moment", mat_to_json(c.normal_form.moment)}}},
              {"loop", loop_to_json(c.loop)}};
}

Json orbits_to_json(const std::vector<OrbitClass>& orbits) {
  Json a = Json::array();
  for (const auto& o : orbits) {
    a.push_back(Json{{"members", o.members},
                     {"alignment_distance", o.alignment_distance},
                     {"representative", certificate_to_json(o.representative)}});
  }
  return a;
}

Json reduction_report_to_json(const ReductionReport& r) {
  Json points = Json::array();
  for (const auto& cp : r.critical_points) {
    points.push_back(Json{{"param", circle_param_to_json(cp.param)},
                          {"gamma", cp.value},
                          {"grad_norm", cp.grad_norm},
                          {"kind", to_string(cp.kind)},
                          {"hessian_eigenvalues", vec_to_json(cp.hessian_eigenvalues)}});
  }
  Json expansion = Json::array();
  for (const auto& e : r.expansion_residuals) {
    expansion.push_back(Json{{"eps", e.eps}, {"max_residual", e.max_residual}});
  }
  return Json{{"gamma_identically_zero", r.gamma_identically_zero},
              {"predicted_count", r.predicted_count},
              {"flat_points", r.flat_points},
              {"critical_points", points},
              {"expansion_residuals", expansion}};
}

Json cylinder_report_to_json(const CylinderDegreeReport& r) {
  return Json{{"radius", r.radius},
              {"d_minus", r.d_minus.empty() ? 0.0 : r.d_minus.front()},
              {"d_plus", r.d_plus.empty() ? 0.0 : r.d_plus.front()},
              {"tau_samples", r.tau.size()},
              {"product_nonzero", r.product_nonzero},
              {"sign_change", r.sign_change},
              {"degree", r.degree},
              {"tau_consistent", r.tau_consistent},
              {"inconclusive", r.inconclusive},
              {"warning", r.warning}};
}

Json experiment_report_to_json(const ExperimentReport& r) {
  Json candidates = Json::array();
  for (const auto& c : r.candidates) {
    Json j{{"gamma_index", c.gamma_index},
           {"w_norm", c.w_norm},
           {"w_residual", c.w_residual},
           {"w_iterations", c.w_iterations},
           {"phi", c.phi},
           {"status", c.status}};
    if (!c.error.empty()) j["error"] = c.error;
    if (c.certificate) {
      j["energy"] = c.certificate->energy;
      j["residual"] = c.certificate->residual;
    }
    candidates.push_back(j);
  }
  Json j{{"n", r.n},
         {"eps", r.eps},
         {"nodes", r.nodes},
         {"h1", r.h1},
         {"h2", r.h2},
         {"status", r.status},
         {"count", r.count},
         {"target", r.target},
         {"dedup_tol", r.dedup_tol},
         {"min_pairwise_distance", real(r.min_pairwise_distance)},
         {"reduction", reduction_report_to_json(r.reduction)},
         {"candidates", candidates}};
  if (r.cylinder) j["cylinder"] = cylinder_report_to_json(*r.cylinder);
  return j;
}

void write_gamma_csv(std::ostream& os, const std::vector<GammaSlice>& slices) {
  os << "r,gamma_min,gamma_max\n";
  for (const auto& s : slices) {
    os << format_real(s.r) << ',' << format_real(s.gamma_min) << ',' << format_real(s.gamma_max)
       << '\n';
  }
}

}  // namespace cylgeo
