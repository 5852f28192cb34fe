#include "cylgeo/metric.hpp"

#include "cylgeo/error.hpp"
#include "cylgeo/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cylgeo {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kTangentTol = 1e-10;
constexpr double kSymmetryTol = 1e-12;

struct GaussJet {
  double f, df, ddf;
};

GaussJet gaussian_jet(double s, double center, double width) {
  const double u = (s - center) / width;
  const double f = std::exp(-u * u);
  return {f, -2.0 * u / width * f, (4.0 * u * u - 2.0) / (width * width) * f};
}

void validate_point(const AmbientPoint& pt) {
  if (std::abs(pt.xi.norm() - 1.0) > kUnitTol) {
    throw ConstraintViolation("ambient point: |xi| deviates from 1 by " +
                              std::to_string(std::abs(pt.xi.norm() - 1.0)));
  }
}

void validate_tangent(const AmbientPoint& pt, const TangentVector& v) {
  if (v.eta.size() != pt.xi.size()) {
    throw InvalidArgument("tangent vector has wrong dimension");
  }
  const double dot = pt.xi.dot(v.eta);
  if (std::abs(dot) > kTangentTol) {
    throw ConstraintViolation("tangent vector: xi . eta = " + std::to_string(dot));
  }
}

Vec stack(const TangentVector& v) {
  Vec out(v.eta.size() + 1);
  out(0) = v.rho;
  out.tail(v.eta.size()) = v.eta;
  return out;
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::gaussian: return "gaussian";
    case ProfileKind::odd_decay: return "odd_decay";
    case ProfileKind::bump_pair: return "bump_pair";
    case ProfileKind::poly_gaussian: return "poly_gaussian";
    case ProfileKind::custom: return "custom";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  for (auto kind : {ProfileKind::constant, ProfileKind::gaussian, ProfileKind::odd_decay,
                    ProfileKind::bump_pair, ProfileKind::poly_gaussian}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown profile kind '" + name + "'");
}

Profile Profile::constant(double value) {
  Profile p;
  p.kind_ = ProfileKind::constant;
  p.constant_ = value;
  return p;
}

Profile Profile::gaussian(double center, double width) {
  if (!(width > 0.0)) throw InvalidArgument("gaussian profile: width must be positive");
  Profile p;
  p.kind_ = ProfileKind::gaussian;
  p.center_ = center;
  p.width_ = width;
  return p;
}

Profile Profile::odd_decay() {
  Profile p;
  p.kind_ = ProfileKind::odd_decay;
  return p;
}

Profile Profile::bump_pair(double center, double width) {
  if (!(width > 0.0)) throw InvalidArgument("bump_pair profile: width must be positive");
  Profile p;
  p.kind_ = ProfileKind::bump_pair;
  p.center_ = center;
  p.width_ = width;
  return p;
}

Profile Profile::poly_gaussian(std::vector<double> coeffs, double center, double width) {
  if (!(width > 0.0)) throw InvalidArgument("poly_gaussian profile: width must be positive");
  Profile p;
  p.kind_ = ProfileKind::poly_gaussian;
  p.coeffs_ = std::move(coeffs);
  p.center_ = center;
  p.width_ = width;
  return p;
}

Profile Profile::custom(std::string name, std::function<double(double)> fn) {
  if (!fn) throw InvalidArgument("custom profile: empty function");
  Profile p;
  p.kind_ = ProfileKind::custom;
  p.name_ = std::move(name);
  p.fn_ = std::move(fn);
  return p;
}

Profile::Jet Profile::jet(double s) const {
  switch (kind_) {
    case ProfileKind::constant:
      return {constant_, 0.0, 0.0};
    case ProfileKind::gaussian: {
      const auto g = gaussian_jet(s, center_, width_);
      return {g.f, g.df, g.ddf};
    }
    case ProfileKind::odd_decay: {
      const double t = std::tanh(s);
      const double dt = 1.0 - t * t;
      const double ddt = -2.0 * t * dt;
      const double g = 1.0 / (1.0 + s * s);
      const double dg = -2.0 * s * g * g;
      const double ddg = (6.0 * s * s - 2.0) * g * g * g;
      return {t * g, dt * g + t * dg, ddt * g + 2.0 * dt * dg + t * ddg};
    }
    case ProfileKind::bump_pair: {
      const auto a = gaussian_jet(s, center_, width_);
      const auto b = gaussian_jet(s, -center_, width_);
      return {a.f - b.f, a.df - b.df, a.ddf - b.ddf};
    }
    case ProfileKind::poly_gaussian: {
      // Horner for P, P', P''
      double p = 0.0, dp = 0.0, ddp = 0.0;
      for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        ddp = ddp * s + 2.0 * dp;
        dp = dp * s + p;
        p = p * s + *it;
      }
      const auto g = gaussian_jet(s, center_, width_);
      return {p * g.f, dp * g.f + p * g.df, ddp * g.f + 2.0 * dp * g.df + p * g.ddf};
    }
    case ProfileKind::custom:
      break;
  }
  throw UnsupportedDerivative("profile '" + name_ + "' has no analytic derivative");
}

double Profile::value(double s) const {
  if (kind_ == ProfileKind::custom) return fn_(s);
  return jet(s).f;
}

double Profile::derivative(double s) const { return jet(s).df; }

double Profile::second_derivative(double s) const { return jet(s).ddf; }

PerturbationForm::PerturbationForm(int n) : n_(n) {
  if (n < 1) throw InvalidArgument("perturbation form: N must be >= 1");
}

void PerturbationForm::add_term(Profile profile, Mat block) {
  if (block.rows() != ambient_dim() || block.cols() != ambient_dim()) {
    throw InvalidArgument("perturbation block must be " + std::to_string(ambient_dim()) + "x" +
                          std::to_string(ambient_dim()));
  }
  if ((block - block.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw InvalidArgument("perturbation block is not symmetric");
  }
  if (!block.allFinite()) throw InvalidArgument("perturbation block has non-finite entries");
  terms_.push_back({std::move(profile), std::move(block)});
}

bool PerturbationForm::has_derivatives() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const PerturbationTerm& t) { return t.profile.has_derivatives(); });
}

Mat PerturbationForm::field(double s) const {
  Mat out = Mat::Zero(ambient_dim(), ambient_dim());
  for (const auto& t : terms_) out += t.profile.value(s) * t.block;
  return out;
}

Mat PerturbationForm::field_derivative(double s) const {
  Mat out = Mat::Zero(ambient_dim(), ambient_dim());
  for (const auto& t : terms_) out += t.profile.derivative(s) * t.block;
  return out;
}

Mat PerturbationForm::field_second_derivative(double s) const {
  Mat out = Mat::Zero(ambient_dim(), ambient_dim());
  for (const auto& t : terms_) out += t.profile.second_derivative(s) * t.block;
  return out;
}

double PerturbationForm::block_scale() const {
  double scale = 0.0;
  for (const auto& t : terms_) {
    Eigen::SelfAdjointEigenSolver<Mat> es(t.block, Eigen::EigenvaluesOnly);
    scale += es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return scale;
}

namespace builtin {

PerturbationForm isotropic(int n, Profile profile) {
  PerturbationForm form(n);
  form.add_term(std::move(profile), Mat::Identity(n + 2, n + 2));
  return form;
}

PerturbationForm diagonal(int n, Profile profile, const Vec& sphere_diag, double radial) {
  if (sphere_diag.size() != n + 1) {
    throw InvalidArgument("diagonal form: need N+1 sphere eigenvalues");
  }
  Vec diag(n + 2);
  diag(0) = radial;
  diag.tail(n + 1) = sphere_diag;
  PerturbationForm form(n);
  form.add_term(std::move(profile), diag.asDiagonal().toDenseMatrix());
  return form;
}

PerturbationForm odd_decay_anisotropic(int n) {
  Vec sphere(n + 1);
  for (int i = 0; i <= n; ++i) sphere(i) = n + 1 - i;
  auto form = diagonal(n, Profile::odd_decay(), sphere, 1.0);
  form.claims.h1 = true;
  form.claims.h2 = true;
  return form;
}

}  // namespace builtin

double eval_g0(const AmbientPoint& pt, const TangentVector& v, const TangentVector& w) {
  validate_point(pt);
  validate_tangent(pt, v);
  validate_tangent(pt, w);
  return v.rho * w.rho + v.eta.dot(w.eta);
}

double eval_h(const AmbientPoint& pt, const TangentVector& v, const TangentVector& w,
              const PerturbationForm& form) {
  validate_point(pt);
  validate_tangent(pt, v);
  validate_tangent(pt, w);
  if (pt.xi.size() != form.n() + 1) throw InvalidArgument("eval_h: dimension mismatch");
  if (form.empty()) return 0.0;
  const Vec a = stack(v);
  const Vec b = stack(w);
  // Symmetric blocks: evaluate through the symmetrized product so that
  // swapping v and w is bit-for-bit identical.
  const Mat field = form.field(pt.s);
  return 0.5 * (a.dot(field * b) + b.dot(field * a));
}

DecayReport check_h1(const PerturbationForm& form, double radius, int samples,
                     double rel_threshold, std::uint64_t seed) {
  if (!(radius > 0.0) || samples < 1) throw InvalidArgument("check_h1: radius > 0, samples >= 1");
  DecayReport report;
  report.radius = radius;
  report.scale = form.block_scale();
  report.threshold = rel_threshold * report.scale;
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    // The separable field does not depend on xi; the sample is kept so the
    // report is the sup over (s, xi) as stated.
    const Vec xi = rng.unit_vector(form.n() + 1);
    (void)xi;
    for (double s : {radius, -radius}) {
      Eigen::SelfAdjointEigenSolver<Mat> es(form.field(s), Eigen::EigenvaluesOnly);
      report.sup_norm = std::max(report.sup_norm, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  report.passes = report.sup_norm <= report.threshold;
  return report;
}

DefinitenessReport check_h2(const PerturbationForm& form, double radius, int samples,
                            std::uint64_t seed) {
  if (!(radius > 0.0) || samples < 1) throw InvalidArgument("check_h2: radius > 0, samples >= 1");
  DefinitenessReport report;
  report.radius = radius;
  const int k = form.n() + 1;
  auto sphere_eigs = [&](double s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(form.field(s).bottomRightCorner(k, k),
                                          Eigen::EigenvaluesOnly);
    return Vec(es.eigenvalues());
  };
  report.min_eig_plus = report.min_eig_minus = std::numeric_limits<double>::infinity();
  report.max_eig_plus = report.max_eig_minus = -std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    (void)rng.unit_vector(k);
    const Vec plus = sphere_eigs(radius);
    const Vec minus = sphere_eigs(-radius);
    report.min_eig_plus = std::min(report.min_eig_plus, plus.minCoeff());
    report.max_eig_plus = std::max(report.max_eig_plus, plus.maxCoeff());
    report.min_eig_minus = std::min(report.min_eig_minus, minus.minCoeff());
    report.max_eig_minus = std::max(report.max_eig_minus, minus.maxCoeff());
  }
  report.positive_at_plus = report.min_eig_plus > 0.0;
  report.negative_at_minus = report.max_eig_minus < 0.0;
  report.passes = report.positive_at_plus && report.negative_at_minus;
  return report;
}

}  // namespace cylgeo
