#pragma once

// Geometry of M = R x S^N: the product metric g0 and the perturbation field h.
//
// Ambient coordinates on R^{N+2} are ordered (s, xi_0, ..., xi_N); tangent
// vectors are (rho, eta) with eta orthogonal to xi.  The perturbation is a sum
// of separable terms profile(s) * B with B a constant symmetric matrix, so h
// restricted to the tangent bundle is h(s, xi)[v, w] = sum_t phi_t(s) v^T B_t w.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cylgeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ProfileKind { constant, gaussian, odd_decay, bump_pair, poly_gaussian, custom };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

/// Scalar function of the R-coordinate.  Every kind except `custom` carries
/// closed-form first and second derivatives.
class Profile {
 public:
  static Profile constant(double value);
  /// exp(-(s - center)^2 / width^2)
  static Profile gaussian(double center, double width);
  /// tanh(s) / (1 + s^2)
  static Profile odd_decay();
  /// gaussian(s; +center, width) - gaussian(s; -center, width)
  static Profile bump_pair(double center, double width);
  /// (c_0 + c_1 s + ... ) * gaussian(s; center, width)
  static Profile poly_gaussian(std::vector<double> coeffs, double center, double width);
  /// Arbitrary user function; values only.
  static Profile custom(std::string name, std::function<double(double)> fn);

  ProfileKind kind() const { return kind_; }
  bool has_derivatives() const { return kind_ != ProfileKind::custom; }

  double value(double s) const;
  double derivative(double s) const;
  double second_derivative(double s) const;

  double center() const { return center_; }
  double width() const { return width_; }
  double constant_value() const { return constant_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::string& name() const { return name_; }

 private:
  Profile() = default;

  // value, first and second derivative at s
  struct Jet {
    double f, df, ddf;
  };
  Jet jet(double s) const;

  ProfileKind kind_ = ProfileKind::constant;
  double constant_ = 0.0;
  double center_ = 0.0;
  double width_ = 1.0;
  std::vector<double> coeffs_;
  std::string name_;
  std::function<double(double)> fn_;
};

struct PerturbationTerm {
  Profile profile;
  Mat block;  // (N+2) x (N+2), symmetric, R-direction first
};

struct HypothesisClaims {
  bool h1 = false;
  bool h2 = false;
  bool h3 = false;
};

class PerturbationForm {
 public:
  /// Zero form on R x S^n.
  explicit PerturbationForm(int n);

  /// Appends a term.  Throws InvalidArgument for a wrong-sized or asymmetric block.
  void add_term(Profile profile, Mat block);

  int n() const { return n_; }
  int ambient_dim() const { return n_ + 2; }
  bool empty() const { return terms_.empty(); }
  bool has_derivatives() const;
  const std::vector<PerturbationTerm>& terms() const { return terms_; }

  /// sum_t phi_t(s) B_t and its first two s-derivatives.
  Mat field(double s) const;
  Mat field_derivative(double s) const;
  Mat field_second_derivative(double s) const;

  /// Sum of spectral norms of the blocks; the natural scale for decay checks.
  double block_scale() const;

  HypothesisClaims claims;

 private:
  int n_;
  std::vector<PerturbationTerm> terms_;
};

namespace builtin {

/// profile * identity on all of R^{N+2}.
PerturbationForm isotropic(int n, Profile profile);

/// profile * diag(radial, sphere_diag...).  sphere_diag has N+1 entries.
PerturbationForm diagonal(int n, Profile profile, const Vec& sphere_diag, double radial = 0.0);

/// odd_decay * diag(1, N+1, N, ..., 1): decays, positive definite for s -> +inf and
/// negative definite for s -> -inf, with distinct sphere eigenvalues.
PerturbationForm odd_decay_anisotropic(int n);

}  // namespace builtin

struct AmbientPoint {
  double s = 0.0;
  Vec xi;
};

struct TangentVector {
  double rho = 0.0;
  Vec eta;
};

/// rho_v rho_w + eta_v . eta_w.  Throws ConstraintViolation for |xi| != 1 or
/// non-tangent vectors.
double eval_g0(const AmbientPoint& pt, const TangentVector& v, const TangentVector& w);

double eval_h(const AmbientPoint& pt, const TangentVector& v, const TangentVector& w,
              const PerturbationForm& form);

struct DecayReport {
  double radius = 0.0;
  double sup_norm = 0.0;  // max over sampled xi and s = +-radius of ||field||_2
  double scale = 0.0;
  double threshold = 0.0;
  bool passes = false;
};

/// Decay certificate for hypothesis (h1) at finite radius: passes iff the
/// sampled sup-norm is at most rel_threshold * block_scale().
DecayReport check_h1(const PerturbationForm& form, double radius, int samples,
                     double rel_threshold = 1e-2, std::uint64_t seed = 7);

struct DefinitenessReport {
  double radius = 0.0;
  double min_eig_plus = 0.0, max_eig_plus = 0.0;
  double min_eig_minus = 0.0, max_eig_minus = 0.0;
  bool positive_at_plus = false;
  bool negative_at_minus = false;
  bool passes = false;
};

/// Sign-definiteness of the S^N block (lower-right (N+1)x(N+1)) at s = +radius
/// (positive) and s = -radius (negative), over sampled points xi.
DefinitenessReport check_h2(const PerturbationForm& form, double radius, int samples = 64,
                            std::uint64_t seed = 7);

}  // namespace cylgeo
