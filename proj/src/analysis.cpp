#include "cylgeo/analysis.hpp"

#include "cylgeo/error.hpp"
#include "cylgeo/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cylgeo {

SpectrumSummary summarize_spectrum(const Vec& eigenvalues, double rel_tol) {
  SpectrumSummary s;
  s.eigenvalues = eigenvalues;
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  if (s.eigenvalues.size() == 0) return s;
  const double scale = s.eigenvalues.cwiseAbs().maxCoeff();
  s.threshold = rel_tol * scale;
  double kernel_max = 0.0;
  double outside_min = std::numeric_limits<double>::infinity();
  for (double lam : s.eigenvalues) {
    const double a = std::abs(lam);
    if (a <= s.threshold) {
      ++s.kernel_dim;
      kernel_max = std::max(kernel_max, a);
    } else {
      outside_min = std::min(outside_min, a);
      if (lam < 0.0) {
        ++s.morse_index;
      } else {
        ++s.positive;
      }
    }
  }
  if (s.kernel_dim == 0) {
    s.gap_ratio = s.threshold > 0.0 ? outside_min / s.threshold
                                    : std::numeric_limits<double>::infinity();
  } else if (kernel_max == 0.0) {
    s.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    s.gap_ratio = outside_min / kernel_max;
  }
  s.reliable = s.gap_ratio >= 10.0;
  return s;
}

SpectrumSummary spectrum(const DiscreteLoop& loop, const PerturbationForm& form, double eps,
                         double rel_tol) {
  const Mat h = tangent_hessian(loop, form, eps);
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return summarize_spectrum(static_cast<double>(loop.nodes()) * es.eigenvalues(), rel_tol);
}

double rms_distance(const DiscreteLoop& a, const DiscreteLoop& b) {
  if (!(a.shape() == b.shape())) throw InvalidArgument("rms_distance: loop shapes differ");
  return std::sqrt((a.coords() - b.coords()).squaredNorm() / a.nodes());
}

Alignment align(const DiscreteLoop& a, const DiscreteLoop& b) {
  if (!(a.shape() == b.shape())) {
    throw InvalidArgument("align: loops must have equal node count and dimension");
  }
  const int m = a.nodes();
  const int d = a.shape().stride();
  Alignment best{0, false, std::numeric_limits<double>::infinity()};
  for (int reflect = 0; reflect < 2; ++reflect) {
    for (int shift = 0; shift < m; ++shift) {
      double sum = 0.0;
      for (int k = 0; k < m; ++k) {
        const int src = ((reflect ? -k : k) + shift) % m;
        const int idx = src < 0 ? src + m : src;
        sum += (a.coords().segment(idx * d, d) - b.coords().segment(k * d, d)).squaredNorm();
      }
      const double dist = std::sqrt(sum / m);
      if (dist < best.distance) best = {shift, reflect == 1, dist};
    }
  }
  return best;
}

O2NormalForm o2_normal_form(const DiscreteLoop& loop) {
  const int m = loop.nodes();
  const int dim = loop.n() + 1;
  O2NormalForm out;
  int anchor = 0;
  for (int k = 1; k < m; ++k) {
    if (loop.x(k)(0) > loop.x(anchor)(0) + 1e-12) anchor = k;
  }
  // orientation: compare the two neighbours of the anchor lexicographically
  const int next = (anchor + 1) % m;
  const int prev = (anchor + m - 1) % m;
  int sign = 0;
  for (int i = 1; i < dim && sign == 0; ++i) {
    const double diff = loop.x(next)(i) - loop.x(prev)(i);
    if (std::abs(diff) > 1e-12) sign = diff > 0 ? 1 : -1;
  }
  if (sign == 0) {
    const double diff = loop.r(next) - loop.r(prev);
    if (std::abs(diff) > 1e-12) sign = diff > 0 ? 1 : -1;
  }
  out.shift = anchor;
  out.reflect = sign < 0;
  out.mean_r = loop.r_values().mean();
  const Mat x = loop.x_values();
  out.moment = x.transpose() * x / m;
  return out;
}

DiscreteLoop o2_representative(const DiscreteLoop& loop, const O2NormalForm& form) {
  return o2_act(loop, form.shift, form.reflect);
}

double default_dedup_tolerance(int nodes) { return 1e-4 * std::sqrt(static_cast<double>(nodes)); }

namespace {

bool certificate_less(const GeodesicCertificate& a, const GeodesicCertificate& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  const Vec& x = a.loop.coords();
  const Vec& y = b.loop.coords();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace

std::vector<OrbitClass> dedup(std::vector<GeodesicCertificate> certs, double tol) {
  std::stable_sort(certs.begin(), certs.end(), certificate_less);
  std::vector<OrbitClass> classes;
  for (auto& cert : certs) {
    const double tau = tol > 0.0 ? tol : default_dedup_tolerance(cert.loop.nodes());
    bool merged = false;
    for (auto& cls : classes) {
      if (!(cls.representative.loop.shape() == cert.loop.shape())) continue;
      const double dist = align(cls.representative.loop, cert.loop).distance;
      if (dist <= tau) {
        ++cls.members;
        cls.alignment_distance = std::max(cls.alignment_distance, dist);
        merged = true;
        break;
      }
    }
    if (!merged) classes.push_back({std::move(cert), 1, 0.0});
  }
  return classes;
}

NondegeneracyReport nondegeneracy_check(const DiscreteLoop& loop, double critical_tol) {
  const DiscreteLoop sphere(Vec::Zero(loop.nodes()), loop.x_values());
  const PerturbationForm none(loop.n());
  const double res = residual_norm(sphere, none, 0.0);
  if (res > critical_tol) {
    throw NotCritical("nondegeneracy_check: sphere component is not critical (residual " +
                      std::to_string(res) + ")");
  }
  const Mat h = tangent_hessian(sphere, none, 0.0);
  // drop the r coordinate of every node; at eps = 0 it decouples from the sphere
  const int stride = loop.n() + 1;
  std::vector<int> keep;
  for (int i = 0; i < h.rows(); ++i) {
    if (i % stride != 0) keep.push_back(i);
  }
  const Mat hs = h(keep, keep);
  Eigen::SelfAdjointEigenSolver<Mat> es(hs, Eigen::EigenvaluesOnly);
  NondegeneracyReport out;
  out.spectrum = summarize_spectrum(static_cast<double>(loop.nodes()) * es.eigenvalues());
  out.kernel_dim = out.spectrum.kernel_dim;
  out.nondegenerate = out.kernel_dim == 1;
  return out;
}

CylinderDegreeReport degree_check_cylinder(const PerturbationForm& form, double radius,
                                           int tau_samples) {
  if (form.n() != 1) throw InvalidArgument("degree_check_cylinder: requires N = 1");
  if (!(radius > 0.0)) throw InvalidArgument("degree_check_cylinder: radius must be positive");
  if (tau_samples < 1) throw InvalidArgument("degree_check_cylinder: need tau samples");
  CylinderDegreeReport out;
  out.radius = radius;
  constexpr double kFlat = 1e-12;
  bool all_nonzero = true, all_negative = true;
  for (int i = 0; i < tau_samples; ++i) {
    const double tau = 2.0 * std::numbers::pi * i / tau_samples;
    const Vec p = (Vec(2) << std::cos(tau), std::sin(tau)).finished();
    const Vec q = (Vec(2) << -std::sin(tau), std::cos(tau)).finished();
    const double dm = gamma_grad({-radius, p, q}, form).dr;
    const double dp = gamma_grad({radius, p, q}, form).dr;
    out.tau.push_back(tau);
    out.d_minus.push_back(dm);
    out.d_plus.push_back(dp);
    if (std::abs(dm) <= kFlat || std::abs(dp) <= kFlat) all_nonzero = false;
    if (!(dm * dp < 0.0)) all_negative = false;
  }
  const auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  const double scale = std::max(std::abs(out.d_minus.front()), std::abs(out.d_plus.front()));
  out.tau_consistent = spread(out.d_minus) <= 1e-10 * std::max(1.0, scale) &&
                       spread(out.d_plus) <= 1e-10 * std::max(1.0, scale);
  out.inconclusive = !all_nonzero;
  out.product_nonzero = all_nonzero;
  out.sign_change = all_nonzero && all_negative;
  if (all_nonzero) {
    const auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
    out.degree = (sgn(out.d_plus.front()) - sgn(out.d_minus.front())) / 2;
  }
  if (out.inconclusive) {
    out.warning = "dGamma/dr is numerically zero at +-R; the test is inconclusive";
  } else if (!out.tau_consistent) {
    out.warning = "dGamma/dr varies with tau";
  }
  return out;
}

}  // namespace cylgeo
