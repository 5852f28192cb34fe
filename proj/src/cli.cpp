#include "cylgeo/cli.hpp"

#include "cylgeo/error.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace cylgeo {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config." + path + ": " + msg);
}

const Json* member(const Json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
  }
}

double get_real(const Json& j, const std::string& key, double fallback, const std::string& path) {
  const Json* v = member(j, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + key, "expected a number");
  return v->get<double>();
}

long long get_int(const Json& j, const std::string& key, long long fallback, const std::string& path) {
  const Json* v = member(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + key, "expected an integer");
  return v->get<long long>();
}

std::vector<double> get_reals(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

Json reals(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

// Tracks files written into the run directory.
class OutputDir {
 public:
  OutputDir(const std::string& root, std::vector<std::string>& written)
      : root_(root), written_(written) {
    fs::create_directories(root_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(root_ / name, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + (root_ / name).string() + " for writing");
    written_.push_back(name);
    return os;
  }

  void json(const std::string& name, const Json& j) { open(name) << j.dump(2) << '\n'; }

 private:
  fs::path root_;
  std::vector<std::string>& written_;
};

SearchConfig search_config(const ExperimentConfig& c) {
  SearchConfig s;
  s.starts = c.starts;
  s.seed = c.seed;
  s.r_max = c.r_max;
  s.quad_nodes = c.quad_nodes;
  s.grad_tol = c.grad_tol;
  s.threads = c.threads;
  return s;
}

WOptions w_options(const ExperimentConfig& c) {
  WOptions w;
  w.eps_max = c.eps_max;
  return w;
}

Json gamma_scan(const ExperimentConfig& c, OutputDir& out) {
  const auto form = c.form();
  const auto report = find_gamma_critical_points(form, search_config(c));
  {
    auto os = out.open("gamma.csv");
    write_gamma_csv(os, report.gamma_samples);
  }
  out.json("critical_points.json", reduction_report_to_json(report));
  return Json{{"gamma_identically_zero", report.gamma_identically_zero},
              {"critical_points", report.critical_points.size()},
              {"predicted_count", report.predicted_count},
              {"flat_points", report.flat_points}};
}

Json find(const ExperimentConfig& c, OutputDir& out) {
  const auto form = c.form();
  MultiplicityConfig mc;
  mc.search = search_config(c);
  mc.nodes = c.nodes;
  mc.w = w_options(c);
  mc.refine.tol = c.grad_tol;
  mc.dedup_tol = c.dedup_tol;
  mc.cylinder_radius = c.cylinder_radius;
  mc.threads = c.threads;
  const auto report = multiplicity_experiment(form, c.eps(), mc);

  out.json("critical_points.json", reduction_report_to_json(report.reduction));
  Json certs = Json::array();
  for (const auto& cand : report.candidates) {
    Json j{{"gamma_index", cand.gamma_index}, {"status", cand.status}};
    if (!cand.error.empty()) j["error"] = cand.error;
    if (cand.certificate) j["certificate"] = certificate_to_json(*cand.certificate);
    certs.push_back(j);
  }
  out.json("certificates.json", certs);
  out.json("orbits.json", orbits_to_json(report.orbits));

  Json summary = experiment_report_to_json(report);
  summary.erase("reduction");
  summary["bound"] = form.n() == 1 ? "1" : (report.h2 ? "2N" : "N");
  out.json("summary.json", summary);
  return Json{{"status", report.status}, {"count", report.count}, {"target", report.target}};
}

Json verify(const ExperimentConfig& c, OutputDir& out) {
  const auto form = c.form();
  const auto params = sample_circle_params(c.n, c.verify_samples, c.verify_r_range, c.seed);
  const double b = circle_energy(c.nodes);
  const double eps = c.eps();
  std::vector<double> phi_dev, w_norms;
  {
    auto os = out.open("decay.csv");
    os << "r,phi_minus_b,w_norm\n";
    for (double r : c.decay_r) {
      CircleParam p = params.front();
      p.r = r;
      const auto w = compute_w(p, form, eps, c.nodes, w_options(c));
      const double dev = energy(corrected_loop(p, w, c.nodes), form, eps) - b;
      phi_dev.push_back(std::abs(dev));
      w_norms.push_back(w.w.l2_norm());
      os << format_real(r) << ',' << format_real(dev) << ',' << format_real(w_norms.back())
         << '\n';
    }
  }
  const auto res = expansion_residuals(form, params, c.eps_list, c.nodes, w_options(c));
  const double slope = loglog_slope(res);
  {
    auto os = out.open("verify.csv");
    os << "eps,max_residual,slope\n";
    for (const auto& r : res) {
      os << format_real(r.eps) << ',' << format_real(r.max_residual) << ',' << format_real(slope)
         << '\n';
    }
  }
  bool monotone = true;
  for (size_t i = 1; i < phi_dev.size(); ++i) {
    monotone = monotone && phi_dev[i] <= phi_dev[i - 1] && w_norms[i] <= w_norms[i - 1];
  }
  Json summary{{"slope", std::isfinite(slope) ? Json(slope) : Json(nullptr)},
               {"decay_monotone", monotone},
               {"decay_eps", eps}};
  out.json("summary.json", summary);
  return summary;
}

Json spectrum_cmd(const ExperimentConfig& c, OutputDir& out) {
  const auto form = c.form();
  const CircleParam param = c.circle ? *c.circle : standard_circle(c.n);
  const auto loop = great_circle(param, c.nodes);
  const auto s = spectrum(loop, form, c.eps(), c.kernel_tol);
  {
    auto os = out.open("spectrum.csv");
    write_spectrum_csv(os, s);
  }
  Json summary{{"circle", circle_param_to_json(param)},
               {"eps", c.eps()},
               {"residual", residual_norm(loop, form, c.eps())},
               {"spectrum", spectrum_to_json(s)}};
  try {
    const auto nd = nondegeneracy_check(loop);
    summary["sphere_kernel_dim"] = nd.kernel_dim;
    summary["sphere_nondegenerate"] = nd.nondegenerate;
  } catch (const NotCritical&) {
    summary["sphere_kernel_dim"] = nullptr;
  }
  out.json("summary.json", summary);
  return summary;
}

using Runner = Json (*)(const ExperimentConfig&, OutputDir&);

Runner runner_for(const std::string& name) {
  if (name == "gamma-scan") return gamma_scan;
  if (name == "find") return find;
  if (name == "verify") return verify;
  if (name == "spectrum") return spectrum_cmd;
  throw InvalidArgument("unknown command '" + name + "'");
}

CommandResult run_direct(const std::string& name, const ExperimentConfig& c) {
  CommandResult result;
  OutputDir out(c.output, result.files);
  result.summary = runner_for(name)(c, out);
  return result;
}

}  // namespace

PerturbationForm ExperimentConfig::form() const { return form_from_json(perturbation, n); }

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  check_keys(j, "", {"manifold", "perturbation", "eps", "eps_list", "discretization", "search",
                     "tolerances", "output", "verify", "cylinder", "circle", "threads", "w"});
  if (const Json* m = member(j, "manifold")) {
    check_keys(*m, "manifold", {"N"});
    c.n = static_cast<int>(get_int(*m, "N", c.n, "manifold."));
  }
  if (c.n < 1) fail("manifold.N", "must be >= 1");
  if (const Json* p = member(j, "perturbation")) c.perturbation = *p;
  if (member(j, "eps") && member(j, "eps_list")) fail("eps", "give either eps or eps_list");
  if (const Json* e = member(j, "eps")) {
    if (!e->is_number()) fail("eps", "expected a number");
    c.eps_list = {e->get<double>()};
  }
  if (const Json* e = member(j, "eps_list")) {
    c.eps_list = get_reals(*e, "config.eps_list");
    c.eps_is_list = true;
  }
  if (const Json* d = member(j, "discretization")) {
    check_keys(*d, "discretization", {"M", "M_q"});
    c.nodes = static_cast<int>(get_int(*d, "M", c.nodes, "discretization."));
    c.quad_nodes = static_cast<int>(get_int(*d, "M_q", c.quad_nodes, "discretization."));
  }
  if (c.nodes < DiscreteLoop::kMinNodes) fail("discretization.M", "must be >= 8");
  if (c.quad_nodes < 3) fail("discretization.M_q", "must be >= 3");
  if (const Json* s = member(j, "search")) {
    check_keys(*s, "search", {"starts", "seed", "R_max"});
    c.starts = static_cast<int>(get_int(*s, "starts", c.starts, "search."));
    const long long seed = get_int(*s, "seed", static_cast<long long>(c.seed), "search.");
    if (seed < 0) fail("search.seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.r_max = get_real(*s, "R_max", c.r_max, "search.");
  }
  if (c.starts < 1) fail("search.starts", "must be >= 1");
  if (!(c.r_max > 0.0)) fail("search.R_max", "must be positive");
  if (const Json* t = member(j, "tolerances")) {
    check_keys(*t, "tolerances", {"grad_tol", "kernel_tol", "dedup_tol"});
    c.grad_tol = get_real(*t, "grad_tol", c.grad_tol, "tolerances.");
    c.kernel_tol = get_real(*t, "kernel_tol", c.kernel_tol, "tolerances.");
    c.dedup_tol = get_real(*t, "dedup_tol", default_dedup_tolerance(c.nodes), "tolerances.");
    if (!(c.dedup_tol > 0.0)) fail("tolerances.dedup_tol", "must be positive");
  }
  if (c.dedup_tol <= 0.0) c.dedup_tol = default_dedup_tolerance(c.nodes);
  if (!(c.grad_tol > 0.0)) fail("tolerances.grad_tol", "must be positive");
  if (!(c.kernel_tol > 0.0)) fail("tolerances.kernel_tol", "must be positive");
  if (const Json* w = member(j, "w")) {
    check_keys(*w, "w", {"eps_max"});
    c.eps_max = get_real(*w, "eps_max", c.eps_max, "w.");
  }
  if (const Json* v = member(j, "verify")) {
    check_keys(*v, "verify", {"samples", "r_range", "decay_r"});
    c.verify_samples = static_cast<int>(get_int(*v, "samples", c.verify_samples, "verify."));
    c.verify_r_range = get_real(*v, "r_range", c.verify_r_range, "verify.");
    if (const Json* d = member(*v, "decay_r")) c.decay_r = get_reals(*d, "config.verify.decay_r");
  }
  if (c.verify_samples < 1) fail("verify.samples", "must be >= 1");
  if (const Json* cy = member(j, "cylinder")) {
    check_keys(*cy, "cylinder", {"R"});
    c.cylinder_radius = get_real(*cy, "R", c.cylinder_radius, "cylinder.");
  }
  if (!(c.cylinder_radius > 0.0)) fail("cylinder.R", "must be positive");
  if (const Json* ci = member(j, "circle")) {
    try {
      c.circle = circle_param_from_json(*ci);
    } catch (const Error& e) {
      fail("circle", e.what());
    }
    if (c.circle->n() != c.n) fail("circle", "dimension does not match manifold.N");
  }
  if (const Json* o = member(j, "output")) {
    if (!o->is_string()) fail("output", "expected a string");
    c.output = o->get<std::string>();
  }
  c.threads = static_cast<int>(get_int(j, "threads", c.threads, ""));
  if (c.threads < 1) fail("threads", "must be >= 1");
  // validate the perturbation eagerly so errors carry the field path
  try {
    c.form();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.") + e.what());
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j{{"manifold", Json{{"N", c.n}}},
         {"perturbation", c.perturbation}};
  if (c.eps_is_list) {
    j["eps_list"] = reals(c.eps_list);
  } else {
    j["eps"] = c.eps();
  }
  j["discretization"] = Json{{"M", c.nodes}, {"M_q", c.quad_nodes}};
  j["search"] = Json{{"starts", c.starts}, {"seed", c.seed}, {"R_max", c.r_max}};
  j["tolerances"] = Json{{"grad_tol", c.grad_tol},
                         {"kernel_tol", c.kernel_tol},
                         {"dedup_tol", c.dedup_tol > 0 ? c.dedup_tol : default_dedup_tolerance(c.nodes)}};
  j["w"] = Json{{"eps_max", c.eps_max}};
  j["verify"] = Json{{"samples", c.verify_samples}, {"r_range", c.verify_r_range}, {"decay_r", reals(c.decay_r)}};
  j["cylinder"] = Json{{"R", c.cylinder_radius}};
  if (c.circle) j["circle"] = circle_param_to_json(*c.circle);
  j["output"] = c.output;
  j["threads"] = c.threads;
  return j;
}

CommandResult cmd_gamma_scan(const ExperimentConfig& c) { return run_direct("gamma-scan", c); }
CommandResult cmd_find(const ExperimentConfig& c) { return run_direct("find", c); }
CommandResult cmd_verify(const ExperimentConfig& c) { return run_direct("verify", c); }
CommandResult cmd_spectrum(const ExperimentConfig& c) { return run_direct("spectrum", c); }

int run_command(const std::string& name, const ExperimentConfig& config) {
  const Runner runner = runner_for(name);
  std::vector<std::string> written;
  OutputDir out(config.output, written);
  Json manifest{{"command", name}, {"complete", false}};
  int code = 0;
  Json summary;
  try {
    summary = runner(config, out);
    manifest["complete"] = true;
  } catch (const std::exception& e) {
    manifest["error"] = e.what();
    std::cerr << "cylgeo " << name << ": " << e.what() << '\n';
    code = 1;
  }
  manifest["files"] = written;
  if (!summary.is_null()) manifest["summary"] = summary;
  manifest["config"] = config_to_json(config);
  std::vector<std::string> ignored;
  OutputDir(config.output, ignored).json("MANIFEST.json", manifest);
  return code;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Closed geodesics on perturbed cylinders R x S^N"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides config.output)");
  app.add_option("--seed", seed, "random seed (overrides config.search.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  for (const char* name : {"gamma-scan", "find", "verify", "spectrum"}) app.add_subcommand(name);
  app.get_subcommand("gamma-scan")->description("Gamma over an r-grid and its critical points");
  app.get_subcommand("find")->description("certify geodesics through the reduction pipeline");
  app.get_subcommand("verify")->description("expansion order and decay audit");
  app.get_subcommand("spectrum")->description("second-variation spectrum at a great circle");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig config;
  try {
    Json j = Json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      try {
        j = Json::parse(is);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
    }
    config = config_from_json(j);
  } catch (const ConfigError& e) {
    std::cerr << "cylgeo: " << e.what() << '\n';
    return 2;
  }
  if (!out_dir.empty()) config.output = out_dir;
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  return run_command(app.get_subcommands().front()->get_name(), config);
}

}  // namespace cylgeo
