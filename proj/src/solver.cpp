#include "cylgeo/solver.hpp"

#include "cylgeo/error.hpp"
#include "cylgeo/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace cylgeo {

namespace {

double reference_energy(const DiscreteLoop& loop, const RefineOptions& options) {
  return std::isnan(options.bracket_center) ? circle_energy(loop.nodes())
                                            : options.bracket_center;
}

}  // namespace

GeodesicCertificate refine(const DiscreteLoop& initial, const PerturbationForm& form, double eps,
                           const RefineOptions& options) {
  if (form.n() != initial.n()) throw InvalidArgument("refine: dimension mismatch");
  DiscreteLoop current = initial;
  std::vector<double> trace;
  double value = energy(current, form, eps);
  // initial step of the order of the inverse stiffness of the edge terms
  double t = 1.0 / initial.nodes();
  int descent_steps = 0;
  std::vector<double> descent_energies{value};
  for (;;) {
    const Vec g = gradient(current, form, eps).coords();
    const double res = g.norm();
    trace.push_back(res);
    if (res <= options.switch_tol || res <= options.tol) break;
    if (descent_steps >= options.max_descent_steps) {
      throw DivergenceError("refine: gradient descent did not reach the Newton switch", res,
                            trace);
    }
    bool accepted = false;
    while (t > 1e-16) {
      DiscreteLoop trial = retract(current, -t * g);
      const double trial_value = energy(trial, form, eps);
      if (trial_value <= value - options.armijo * t * res * res) {
        current = std::move(trial);
        value = trial_value;
        accepted = true;
        break;
      }
      t *= options.shrink;
    }
    if (!accepted) throw DivergenceError("refine: line search failed", res, trace);
    t *= 2.0;
    ++descent_steps;
    descent_energies.push_back(value);
  }

  int newton_steps = 0;
  int deflated = 0;
  for (;;) {
    const double res = residual_norm(current, form, eps);
    if (res <= options.tol) break;
    if (newton_steps >= options.max_newton_steps) {
      throw DivergenceError("refine: Newton did not converge", res, trace);
    }
    const LoopChart chart(current);
    const Vec zero = Vec::Zero(current.shape().tangent_size());
    const Vec g = chart.gradient(zero, form, eps);
    Eigen::SelfAdjointEigenSolver<Mat> es(chart.hessian(zero, form, eps));
    const Vec& lam = es.eigenvalues();
    const Mat& u = es.eigenvectors();
    Vec coeff = u.transpose() * g;
    deflated = 0;
    for (int i = 0; i < lam.size(); ++i) {
      if (std::abs(lam(i)) <= options.deflation) {
        coeff(i) = 0.0;
        ++deflated;
      } else {
        coeff(i) /= -lam(i);
      }
    }
    const Vec step = u * coeff;
    bool accepted = false;
    for (double s = 1.0; s >= 1e-4; s *= options.shrink) {
      DiscreteLoop trial = chart.point(s * step);
      const double trial_res = residual_norm(trial, form, eps);
      if (trial_res < (1.0 - options.armijo * s) * res) {
        current = std::move(trial);
        trace.push_back(trial_res);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw DivergenceError("refine: Newton step rejected", res, trace);
    ++newton_steps;
  }

  const double b = reference_energy(current, options);
  const double e = energy(current, form, eps);
  GeodesicCertificate cert{current,
                           e,
                           residual_norm(current, form, eps),
                           eps,
                           options.compute_spectrum ? spectrum(current, form, eps)
                                                    : SpectrumSummary{},
                           o2_normal_form(current),
                           e <= 0.1 * b,
                           std::abs(e - b) <= options.bracket_width,
                           descent_steps,
                           newton_steps,
                           deflated,
                           std::move(descent_energies)};
  return cert;
}

std::vector<GeodesicCertificate> continuation(const CircleParam& param,
                                              const PerturbationForm& form,
                                              const std::vector<double>& eps_list, int nodes,
                                              const RefineOptions& options) {
  if (!std::is_sorted(eps_list.begin(), eps_list.end())) {
    throw InvalidArgument("continuation: eps_list must be ascending");
  }
  std::vector<GeodesicCertificate> branch;
  DiscreteLoop current = great_circle(param, nodes);
  for (double eps : eps_list) {
    try {
      branch.push_back(refine(current, form, eps, options));
    } catch (const Error&) {
      break;
    }
    current = branch.back().loop;
  }
  return branch;
}

double branch_lipschitz(const std::vector<GeodesicCertificate>& branch) {
  double c = 0.0;
  for (size_t i = 1; i < branch.size(); ++i) {
    const double de = std::abs(branch[i].eps - branch[i - 1].eps);
    if (de > 0.0) c = std::max(c, std::abs(branch[i].energy - branch[i - 1].energy) / de);
  }
  return c;
}

ExperimentReport multiplicity_experiment(const PerturbationForm& form, double eps,
                                         const MultiplicityConfig& config) {
  ExperimentReport report;
  report.n = form.n();
  report.eps = eps;
  report.nodes = config.nodes;
  report.dedup_tol = config.dedup_tol > 0.0 ? config.dedup_tol
                                            : default_dedup_tolerance(config.nodes);
  report.h1 = check_h1(form, config.search.r_max, 16).passes;
  report.h2 = check_h2(form, config.search.r_max).passes;
  report.target = form.n() == 1 ? 1 : (report.h2 ? 2 * form.n() : form.n());

  SearchConfig search = config.search;
  search.threads = std::max(search.threads, config.threads);
  report.reduction = find_gamma_critical_points(form, search);
  if (form.n() == 1) report.cylinder = degree_check_cylinder(form, config.cylinder_radius);
  if (report.reduction.gamma_identically_zero ||
      (report.reduction.critical_points.empty() && report.reduction.flat_points > 0)) {
    report.status = "degenerate";
    return report;
  }

  const auto& points = report.reduction.critical_points;
  report.candidates.resize(points.size());
  detail::parallel_for(static_cast<int>(points.size()), config.threads, [&](int i) {
    CandidateRecord& rec = report.candidates[i];
    rec.gamma_index = i;
    try {
      const auto w = compute_w(points[i].param, form, eps, config.nodes, config.w);
      rec.w_norm = w.w.l2_norm();
      rec.w_residual = w.residual;
      rec.w_iterations = w.iterations;
      const DiscreteLoop start = corrected_loop(points[i].param, w, config.nodes);
      rec.phi = energy(start, form, eps);
      rec.certificate = refine(start, form, eps, config.refine);
      rec.status = rec.certificate->trivial ? "trivial" : "certified";
    } catch (const Error& e) {
      rec.status = "failed";
      rec.error = e.what();
    }
  });

  std::vector<GeodesicCertificate> certs;
  for (const auto& rec : report.candidates) {
    if (rec.certificate && !rec.certificate->trivial) certs.push_back(*rec.certificate);
  }
  report.orbits = dedup(std::move(certs), report.dedup_tol);
  report.count = static_cast<int>(report.orbits.size());
  report.min_pairwise_distance = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < report.orbits.size(); ++i) {
    for (size_t j = i + 1; j < report.orbits.size(); ++j) {
      report.min_pairwise_distance =
          std::min(report.min_pairwise_distance,
                   align(report.orbits[i].representative.loop, report.orbits[j].representative.loop)
                       .distance);
    }
  }
  if (report.orbits.size() < 2) report.min_pairwise_distance = 0.0;
  report.status = report.count >= report.target ? "ok" : "below_target";
  return report;
}

}  // namespace cylgeo
