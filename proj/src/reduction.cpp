#include "cylgeo/reduction.hpp"

#include "cylgeo/error.hpp"
#include "cylgeo/parallel.hpp"
#include "cylgeo/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace cylgeo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStiefelTol = 1e-10;

// Orthonormal basis of span(p, q)^perp, (N+1) x (N-1).
Mat plane_complement(const Vec& p, const Vec& q) {
  const int dim = static_cast<int>(p.size());
  Mat y(dim, 2);
  y << p, q;
  Eigen::HouseholderQR<Mat> qr(y);
  const Mat full = qr.householderQ() * Mat::Identity(dim, dim);
  return full.rightCols(dim - 2);
}

Mat plane_projector(const CircleParam& c) { return c.p * c.p.transpose() + c.q * c.q.transpose(); }

bool lexicographic_less(const CircleParam& a, const CircleParam& b) {
  if (a.r != b.r) return a.r < b.r;
  for (int i = 0; i < a.p.size(); ++i) {
    if (a.p(i) != b.p(i)) return a.p(i) < b.p(i);
  }
  for (int i = 0; i < a.q.size(); ++i) {
    if (a.q(i) != b.q(i)) return a.q(i) < b.q(i);
  }
  return false;
}

}  // namespace

void CircleParam::validate() const {
  if (p.size() != q.size() || p.size() < 2) {
    throw InvalidArgument("circle parameter: p and q must share a dimension >= 2");
  }
  const double dp = std::abs(p.norm() - 1.0);
  const double dq = std::abs(q.norm() - 1.0);
  const double pq = std::abs(p.dot(q));
  if (dp > kStiefelTol || dq > kStiefelTol || pq > kStiefelTol) {
    throw ConstraintViolation("circle parameter violates the Stiefel constraint (|p|-1 = " +
                              std::to_string(dp) + ", |q|-1 = " + std::to_string(dq) +
                              ", p.q = " + std::to_string(pq) + ")");
  }
  if (!std::isfinite(r)) throw InvalidArgument("circle parameter: r is not finite");
}

CircleParam standard_circle(int n, double r) {
  return {r, Vec::Unit(n + 1, 0), Vec::Unit(n + 1, 1)};
}

CircleParam canonical_phase(const CircleParam& param) {
  param.validate();
  const int dim = static_cast<int>(param.p.size());
  int best = 0;
  double best_norm = -1.0;
  for (int i = 0; i < dim; ++i) {
    const double w = param.p(i) * param.p(i) + param.q(i) * param.q(i);
    if (w > best_norm + 1e-12) {
      best_norm = w;
      best = i;
    }
  }
  const double a = param.p(best);
  const double b = param.q(best);
  const double len = std::sqrt(a * a + b * b);
  CircleParam out{param.r, (a * param.p + b * param.q) / len, (-b * param.p + a * param.q) / len};
  int lead = 0;
  for (int i = 1; i < dim; ++i) {
    if (std::abs(out.q(i)) > std::abs(out.q(lead)) + 1e-12) lead = i;
  }
  if (out.q(lead) < 0) out.q = -out.q;
  return out;
}

DiscreteLoop great_circle(const CircleParam& param, int nodes) {
  param.validate();
  Vec r = Vec::Constant(nodes, param.r);
  Mat x(nodes, param.p.size());
  for (int k = 0; k < nodes; ++k) {
    const double theta = 2.0 * kPi * k / nodes;
    x.row(k) = (param.p * std::cos(theta) + param.q * std::sin(theta)).transpose();
  }
  return DiscreteLoop(r, x);
}

std::vector<LoopTangent> tangent_basis(const CircleParam& param, int nodes) {
  const DiscreteLoop z = great_circle(param, nodes);
  const int n = param.n();
  const int d = n + 2;
  const Mat comp = plane_complement(param.p, param.q);
  std::vector<Vec> raw;
  Vec shift = Vec::Zero(z.shape().size());
  for (int k = 0; k < nodes; ++k) shift(k * d) = 1.0;
  raw.push_back(shift);
  Vec phase = Vec::Zero(z.shape().size());
  for (int k = 0; k < nodes; ++k) {
    const double theta = 2.0 * kPi * k / nodes;
    phase.segment(k * d + 1, n + 1) = -param.p * std::sin(theta) + param.q * std::cos(theta);
  }
  raw.push_back(phase);
  for (int j = 0; j < n - 1; ++j) {
    Vec tilt_p = Vec::Zero(z.shape().size());
    Vec tilt_q = Vec::Zero(z.shape().size());
    for (int k = 0; k < nodes; ++k) {
      const double theta = 2.0 * kPi * k / nodes;
      tilt_p.segment(k * d + 1, n + 1) = comp.col(j) * std::cos(theta);
      tilt_q.segment(k * d + 1, n + 1) = comp.col(j) * std::sin(theta);
    }
    raw.push_back(tilt_p);
    raw.push_back(tilt_q);
  }
  // modified Gram-Schmidt in the discrete L2 product, two passes
  const double m = static_cast<double>(nodes);
  std::vector<LoopTangent> basis;
  std::vector<Vec> done;
  for (auto& v : raw) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : done) v -= (u.dot(v) / m) * u;
    }
    v /= std::sqrt(v.squaredNorm() / m);
    done.push_back(v);
  }
  for (auto& v : done) basis.emplace_back(z, v);
  return basis;
}

double circle_energy(int nodes) {
  const double s = std::sin(kPi / nodes);
  return 2.0 * nodes * nodes * s * s;
}

// Trapezoid sums of sin^2, sin cos, cos^2 over the quadrature nodes; the
// quadratic integrands of Gamma and its gradient are combinations of these.
struct TrigMoments {
  double ss = 0.0, sc = 0.0, cc = 0.0;
};

TrigMoments trig_moments(int quad_nodes) {
  TrigMoments m;
  for (int j = 0; j < quad_nodes; ++j) {
    const double theta = 2.0 * kPi * j / quad_nodes;
    const double sn = std::sin(theta), cs = std::cos(theta);
    m.ss += sn * sn;
    m.sc += sn * cs;
    m.cc += cs * cs;
  }
  m.ss /= quad_nodes;
  m.sc /= quad_nodes;
  m.cc /= quad_nodes;
  return m;
}

double gamma(const CircleParam& param, const PerturbationForm& form, int quad_nodes) {
  param.validate();
  if (quad_nodes < 3) throw InvalidArgument("gamma: need at least 3 quadrature nodes");
  if (form.n() != param.n()) throw InvalidArgument("gamma: dimension mismatch");
  if (form.empty()) return 0.0;
  const int k = form.n() + 1;
  const Mat s = form.field(param.r).bottomRightCorner(k, k);
  const TrigMoments m = trig_moments(quad_nodes);
  // (1/2) mean_j |2 pi (-p sin + q cos)|_S^2
  const double pp = param.p.dot(s * param.p), pq = param.p.dot(s * param.q),
               qq = param.q.dot(s * param.q);
  return 2.0 * kPi * kPi * (m.ss * pp - 2.0 * m.sc * pq + m.cc * qq);
}

double gamma_discrete(const CircleParam& param, const PerturbationForm& form, int nodes) {
  return energy_parts(great_circle(param, nodes), form).perturbation;
}

double GammaGradient::norm() const {
  return std::sqrt(dr * dr + dp.squaredNorm() + dq.squaredNorm());
}

GammaGradient gamma_grad(const CircleParam& param, const PerturbationForm& form,
                         int quad_nodes) {
  param.validate();
  if (form.n() != param.n()) throw InvalidArgument("gamma_grad: dimension mismatch");
  const int k = form.n() + 1;
  GammaGradient out{0.0, Vec::Zero(k), Vec::Zero(k)};
  if (form.empty()) return out;
  if (!form.has_derivatives()) {
    throw UnsupportedDerivative("gamma_grad: form contains a profile without analytic derivative");
  }
  if (quad_nodes < 3) throw InvalidArgument("gamma_grad: need at least 3 quadrature nodes");
  const Mat s = form.field(param.r).bottomRightCorner(k, k);
  const Mat ds = form.field_derivative(param.r).bottomRightCorner(k, k);
  const TrigMoments m = trig_moments(quad_nodes);
  const double c = 4.0 * kPi * kPi;
  out.dr = 0.5 * c *
           (m.ss * param.p.dot(ds * param.p) - 2.0 * m.sc * param.p.dot(ds * param.q) +
            m.cc * param.q.dot(ds * param.q));
  const Vec sp = s * param.p, sq = s * param.q;
  const Vec gp = c * (m.ss * sp - m.sc * sq);
  const Vec gq = c * (-m.sc * sp + m.cc * sq);
  // Stiefel projection G - Y sym(Y^T G)
  Mat y(k, 2), g(k, 2);
  y << param.p, param.q;
  g << gp, gq;
  const Mat yg = y.transpose() * g;
  const Mat proj = g - y * (0.5 * (yg + yg.transpose()));
  out.dp = proj.col(0);
  out.dq = proj.col(1);
  return out;
}

StiefelChart::StiefelChart(CircleParam base) : base_(std::move(base)) {
  base_.validate();
  complement_ = plane_complement(base_.p, base_.q);
}

CircleParam StiefelChart::point(const Vec& xi) const {
  if (xi.size() != dim()) throw InvalidArgument("stiefel chart: coordinate size mismatch");
  const int m = base_.n() - 1;
  Vec p = base_.p + complement_ * xi.segment(1, m);
  p.normalize();
  Vec q = base_.q + complement_ * xi.segment(1 + m, m);
  q -= p * p.dot(q);
  q.normalize();
  return {base_.r + xi(0), p, q};
}

Vec StiefelChart::gradient(const PerturbationForm& form, int quad_nodes) const {
  const auto g = gamma_grad(base_, form, quad_nodes);
  const int m = base_.n() - 1;
  Vec out(dim());
  out(0) = g.dr;
  out.segment(1, m) = complement_.transpose() * g.dp;
  out.segment(1 + m, m) = complement_.transpose() * g.dq;
  return out;
}

Mat StiefelChart::hessian(const PerturbationForm& form, int quad_nodes, double step) const {
  const int n = dim();
  auto value = [&](const Vec& xi) { return gamma(point(xi), form, quad_nodes); };
  const double center = value(Vec::Zero(n));
  Mat h(n, n);
  for (int i = 0; i < n; ++i) {
    Vec ei = Vec::Zero(n);
    ei(i) = step;
    h(i, i) = (value(ei) - 2.0 * center + value(-ei)) / (step * step);
    for (int j = 0; j < i; ++j) {
      Vec ej = Vec::Zero(n);
      ej(j) = step;
      const double v = (value(ei + ej) - value(ei - ej) - value(-ei + ej) + value(-ei - ej)) /
                       (4.0 * step * step);
      h(i, j) = h(j, i) = v;
    }
  }
  return h;
}

std::string to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::minimum: return "min";
    case CriticalKind::maximum: return "max";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

double circle_param_distance(const CircleParam& a, const CircleParam& b) {
  return std::abs(a.r - b.r) + (plane_projector(a) - plane_projector(b)).norm();
}

std::vector<GammaSlice> gamma_slices(const PerturbationForm& form, double r_max, int count,
                                     int samples, std::uint64_t seed, int quad_nodes) {
  if (count < 2) throw InvalidArgument("gamma_slices: need at least two grid points");
  const auto params = sample_circle_params(form.n(), samples, 0.0, seed);
  std::vector<GammaSlice> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    // symmetric grid: r_{count-1-i} = -r_i exactly
    const double r = r_max * (2.0 * i - (count - 1)) / (count - 1);
    GammaSlice slice{r, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
    for (auto c : params) {
      c.r = r;
      const double g = gamma(c, form, quad_nodes);
      slice.gamma_min = std::min(slice.gamma_min, g);
      slice.gamma_max = std::max(slice.gamma_max, g);
    }
    out.push_back(slice);
  }
  return out;
}

namespace {

// Damped Newton on the horizontal gradient with merit |g|; converges to any
// nondegenerate critical point, saddles included.
std::optional<CircleParam> newton_polish(CircleParam current, const PerturbationForm& form,
                                         const SearchConfig& cfg) {
  Vec g = StiefelChart(current).gradient(form, cfg.quad_nodes);
  for (int it = 0; it < cfg.newton_iterations; ++it) {
    if (g.norm() <= cfg.grad_tol) return current;
    const StiefelChart chart(current);
    const Mat h = chart.hessian(form, cfg.quad_nodes);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Vec& lam = es.eigenvalues();
    const double cut = 1e-10 * std::max(1e-300, lam.cwiseAbs().maxCoeff());
    Vec step = Vec::Zero(chart.dim());
    for (int i = 0; i < lam.size(); ++i) {
      if (std::abs(lam(i)) > cut) {
        step -= (es.eigenvectors().col(i).dot(g) / lam(i)) * es.eigenvectors().col(i);
      }
    }
    const double len = step.norm();
    if (!(len > 0.0) || !std::isfinite(len)) return std::nullopt;
    if (len > 1.0) step /= len;
    bool accepted = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      const CircleParam trial = chart.point(t * step);
      const Vec trial_g = StiefelChart(trial).gradient(form, cfg.quad_nodes);
      if (trial_g.norm() <= (1.0 - 1e-4 * t) * g.norm()) {
        current = trial;
        g = trial_g;
        accepted = true;
        break;
      }
    }
    if (!accepted) return std::nullopt;
    if (std::abs(current.r) > 2.0 * cfg.r_max) return std::nullopt;
  }
  if (g.norm() <= cfg.grad_tol) return current;
  return std::nullopt;
}

// Projected gradient ascent (sign = +1) or descent (sign = -1) with Armijo
// backtracking, followed by Newton polishing.
std::optional<CircleParam> monotone_search(CircleParam current, double sign,
                                           const PerturbationForm& form,
                                           const SearchConfig& cfg) {
  double t = 1.0;
  double value = gamma(current, form, cfg.quad_nodes);
  for (int it = 0; it < cfg.ascent_iterations; ++it) {
    const StiefelChart chart(current);
    const Vec g = chart.gradient(form, cfg.quad_nodes);
    const double gg = g.squaredNorm();
    if (std::sqrt(gg) <= cfg.grad_tol) break;
    bool accepted = false;
    while (t > 1e-14) {
      const CircleParam trial = chart.point(sign * t * g);
      const double trial_value = gamma(trial, form, cfg.quad_nodes);
      if (sign * (trial_value - value) >= 1e-4 * t * gg) {
        current = trial;
        value = trial_value;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    t *= 2.0;
    if (std::abs(current.r) > cfg.r_max + 1.0) return std::nullopt;
  }
  return newton_polish(current, form, cfg);
}

// Eigenvector following toward a critical point of Morse index `index`: uphill
// Newton-like steps along the `index` lowest Hessian modes, downhill along the
// rest, inside a trust radius.  Finishes with Newton polishing.
std::optional<CircleParam> mode_following(CircleParam current, int index,
                                          const PerturbationForm& form,
                                          const SearchConfig& cfg) {
  for (int it = 0; it < cfg.newton_iterations; ++it) {
    const StiefelChart chart(current);
    const Vec g = chart.gradient(form, cfg.quad_nodes);
    if (g.norm() <= 1e-6) break;
    Eigen::SelfAdjointEigenSolver<Mat> es(chart.hessian(form, cfg.quad_nodes));
    const Vec& lam = es.eigenvalues();
    const double floor = std::max(1e-8, 1e-3 * lam.cwiseAbs().maxCoeff());
    Vec step = Vec::Zero(chart.dim());
    for (int i = 0; i < lam.size(); ++i) {
      const double gi = es.eigenvectors().col(i).dot(g);
      const double scale = std::max(std::abs(lam(i)), floor);
      step += (i < index ? gi : -gi) / scale * es.eigenvectors().col(i);
    }
    const double len = step.norm();
    if (!std::isfinite(len)) return std::nullopt;
    if (len > 0.3) step *= 0.3 / len;
    current = chart.point(step);
    if (std::abs(current.r) > cfg.r_max + 1.0) return std::nullopt;
  }
  return newton_polish(current, form, cfg);
}

}  // namespace

ReductionReport find_gamma_critical_points(const PerturbationForm& form,
                                           const SearchConfig& cfg) {
  if (cfg.starts < 1) throw InvalidArgument("search: starts must be >= 1");
  ReductionReport report;
  report.gamma_samples =
      gamma_slices(form, cfg.r_max, cfg.slice_count, cfg.slice_samples, cfg.seed, cfg.quad_nodes);
  double max_abs = 0.0;
  for (const auto& s : report.gamma_samples) {
    max_abs = std::max({max_abs, std::abs(s.gamma_min), std::abs(s.gamma_max)});
  }
  report.gamma_identically_zero = max_abs <= 1e-15;
  if (report.gamma_identically_zero) return report;

  // starts: seeded orthonormal frames on a uniform r-grid over the active
  // range, i.e. where some slice of |Gamma| exceeds 1e-3 of its maximum
  const auto& slices = report.gamma_samples;
  const double step = slices.size() > 1 ? slices[1].r - slices[0].r : 0.0;
  double lo = cfg.r_max, hi = -cfg.r_max;
  for (const auto& s : slices) {
    if (std::max(std::abs(s.gamma_min), std::abs(s.gamma_max)) >= 1e-3 * max_abs) {
      lo = std::min(lo, s.r - step);
      hi = std::max(hi, s.r + step);
    }
  }
  lo = std::max(lo, -cfg.r_max);
  hi = std::min(hi, cfg.r_max);
  auto frames = sample_circle_params(form.n(), cfg.starts, 0.0, cfg.seed + 1);
  for (int i = 0; i < cfg.starts; ++i) frames[i].r = lo + (i + 0.5) * ((hi - lo) / cfg.starts);

  const int dim = StiefelChart(frames.front()).dim();
  std::vector<std::vector<std::optional<CircleParam>>> found(cfg.starts);
  detail::parallel_for(cfg.starts, cfg.threads, [&](int i) {
    found[i].push_back(monotone_search(frames[i], +1.0, form, cfg));
    found[i].push_back(monotone_search(frames[i], -1.0, form, cfg));
    found[i].push_back(newton_polish(frames[i], form, cfg));
    for (int index = 1; index < dim; ++index) {
      found[i].push_back(mode_following(frames[i], index, form, cfg));
    }
  });

  std::vector<GammaCriticalPoint> accepted;
  for (const auto& slots : found) {
    for (const auto& candidate : slots) {
      if (!candidate || std::abs(candidate->r) > cfg.r_max) continue;
      const CircleParam param = canonical_phase(*candidate);
      bool duplicate = false;
      for (const auto& a : accepted) {
        if (circle_param_distance(a.param, param) <= cfg.dedup_tol) {
          duplicate = true;
          break;
        }
      }
      const StiefelChart chart(param);
      const Mat h = chart.hessian(form, cfg.quad_nodes);
      Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
      const Vec lam = es.eigenvalues();
      if (lam.cwiseAbs().maxCoeff() <= cfg.hessian_tol) {
        ++report.flat_points;
        continue;
      }
      if (duplicate) continue;
      GammaCriticalPoint cp;
      cp.param = param;
      cp.value = gamma(param, form, cfg.quad_nodes);
      cp.grad_norm = chart.gradient(form, cfg.quad_nodes).norm();
      cp.hessian_eigenvalues = lam;
      if (lam.cwiseAbs().minCoeff() <= cfg.hessian_tol) {
        cp.kind = CriticalKind::degenerate;
      } else if (lam.minCoeff() > 0.0) {
        cp.kind = CriticalKind::minimum;
      } else if (lam.maxCoeff() < 0.0) {
        cp.kind = CriticalKind::maximum;
      } else {
        cp.kind = CriticalKind::saddle;
      }
      accepted.push_back(std::move(cp));
    }
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const GammaCriticalPoint& a, const GammaCriticalPoint& b) {
              if (a.value != b.value) return a.value < b.value;
              return lexicographic_less(a.param, b.param);
            });
  report.critical_points = std::move(accepted);
  report.predicted_count = static_cast<int>(
      std::count_if(report.critical_points.begin(), report.critical_points.end(),
                    [](const auto& cp) { return cp.kind != CriticalKind::degenerate; }));
  return report;
}

WCorrection compute_w(const CircleParam& param, const PerturbationForm& form, double eps,
                      int nodes, const WOptions& options) {
  if (std::abs(eps) > options.eps_max) {
    throw InvalidArgument("compute_w: |eps| = " + std::to_string(std::abs(eps)) +
                          " exceeds eps_max = " + std::to_string(options.eps_max));
  }
  const DiscreteLoop z = great_circle(param, nodes);
  const LoopChart chart(z);
  const auto basis = tangent_basis(param, nodes);
  const int size = z.shape().tangent_size();
  const int k = static_cast<int>(basis.size());
  const double m = static_cast<double>(nodes);
  Mat b(size, k);
  for (int i = 0; i < k; ++i) b.col(i) = chart.project(basis[i].coords());

  Vec c = Vec::Zero(size);
  Vec grad = chart.gradient(c, form, eps);
  Vec alpha = b.transpose() * grad / m;

  auto projected_residual = [&](const Vec& g) { return (g - b * (b.transpose() * g / m)).norm(); };
  auto constraint = [&](const Vec& cc) {
    return k == 0 ? 0.0 : (b.transpose() * cc / m).cwiseAbs().maxCoeff();
  };

  auto bordered = [&](const Mat& h) {
    Mat kkt = Mat::Zero(size + k, size + k);
    kkt.topLeftCorner(size, size) = h;
    kkt.topRightCorner(size, k) = -b;
    kkt.bottomLeftCorner(k, size) = -b.transpose();
    return kkt;
  };

  std::optional<Eigen::PartialPivLU<Mat>> frozen;
  if (options.backend == WBackend::contraction) {
    frozen.emplace(bordered(chart.hessian(c, form, 0.0)));
    if (frozen->rcond() < 1e-14) throw DegeneracyError("compute_w: bordered E_0 Hessian is singular");
  }

  WCorrection out{LoopTangent::zero(z), alpha, 0, projected_residual(grad), constraint(c)};
  std::vector<double> trace{out.residual};
  for (int it = 0; it < options.max_iterations; ++it) {
    if (out.residual <= options.tol && out.constraint <= 1e-12) break;
    Vec rhs(size + k);
    rhs.head(size) = -(grad - b * alpha);
    rhs.tail(k) = b.transpose() * c;
    Vec delta;
    if (frozen) {
      delta = frozen->solve(rhs);
    } else {
      Eigen::PartialPivLU<Mat> lu(bordered(chart.hessian(c, form, eps)));
      if (lu.rcond() < 1e-14) throw DegeneracyError("compute_w: bordered Hessian is singular");
      delta = lu.solve(rhs);
    }
    c += delta.head(size);
    alpha += delta.tail(k);
    grad = chart.gradient(c, form, eps);
    out.iterations = it + 1;
    out.residual = projected_residual(grad);
    out.constraint = constraint(c);
    trace.push_back(out.residual);
    if (!std::isfinite(out.residual) || out.residual > 1e6 * (trace.front() + 1.0)) {
      throw DivergenceError("compute_w: iteration diverged", out.residual, trace);
    }
  }
  if (out.residual > options.tol || out.constraint > 1e-12) {
    throw DivergenceError("compute_w: no convergence within " +
                              std::to_string(options.max_iterations) + " iterations",
                          out.residual, trace);
  }
  out.w = LoopTangent(z, chart.lift(c));
  out.alpha = alpha;
  return out;
}

DiscreteLoop corrected_loop(const CircleParam& param, const WCorrection& w, int nodes) {
  if (w.w.coords().isZero(0.0)) return great_circle(param, nodes);
  return retract(great_circle(param, nodes), w.w.coords());
}

double phi(const CircleParam& param, const PerturbationForm& form, double eps, int nodes,
           const WOptions& options) {
  const auto w = compute_w(param, form, eps, nodes, options);
  return energy(corrected_loop(param, w, nodes), form, eps);
}

std::vector<ExpansionResidual> expansion_residuals(const PerturbationForm& form,
                                                   const std::vector<CircleParam>& params,
                                                   const std::vector<double>& eps_list,
                                                   int nodes, const WOptions& options) {
  std::vector<ExpansionResidual> out;
  for (double eps : eps_list) {
    ExpansionResidual row{eps, 0.0};
    for (const auto& c : params) {
      const DiscreteLoop z = great_circle(c, nodes);
      const EnergyParts base = energy_parts(z, form);
      const auto w = compute_w(c, form, eps, nodes, options);
      const EnergyParts moved = energy_parts(corrected_loop(c, w, nodes), form);
      const double residual = (moved.unperturbed() - base.unperturbed()) +
                              eps * (moved.perturbation - base.perturbation);
      row.max_residual = std::max(row.max_residual, std::abs(residual));
    }
    out.push_back(row);
  }
  return out;
}

double loglog_slope(const std::vector<ExpansionResidual>& residuals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : residuals) {
    if (!(r.eps > 0.0) || !(r.max_residual > 0.0)) continue;
    const double x = std::log(r.eps), y = std::log(r.max_residual);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<CircleParam> sample_circle_params(int n, int count, double r_range,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CircleParam> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec p = rng.unit_vector(n + 1);
    Vec q = rng.normal_vector(n + 1);
    q -= p * p.dot(q);
    while (q.norm() < 1e-6) {
      q = rng.normal_vector(n + 1);
      q -= p * p.dot(q);
    }
    q.normalize();
    const double r = r_range > 0.0 ? rng.uniform(-r_range, r_range) : 0.0;
    out.push_back({r, p, q});
  }
  return out;
}

}  // namespace cylgeo
