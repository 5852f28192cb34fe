#pragma once

// Finite-dimensional reduction around the critical manifold
//   Z = { (r, z_{p,q}) : r in R, (p, q) orthonormal },  z_{p,q}(t) = p cos 2 pi t + q sin 2 pi t
// of the unperturbed energy: the reduced functional Gamma = G|_Z, the
// correction w(z, eps) orthogonal to T_z Z that solves the projected
// equation, and the reduced energy Phi_eps(z) = E_eps(z + w(z, eps)).

#include "cylgeo/loop.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cylgeo {

struct CircleParam {
  double r = 0.0;
  Vec p;
  Vec q;

  int n() const { return static_cast<int>(p.size()) - 1; }
  /// Throws ConstraintViolation unless |p| = |q| = 1 and p . q = 0 within 1e-10.
  void validate() const;
};

/// (r, e_0, e_1) on R x S^n.
CircleParam standard_circle(int n, double r = 0.0);

/// Rotates (p, q) inside their span to a canonical phase and orientation, so
/// that all members of one O(2)-orbit map to the same parameter.
CircleParam canonical_phase(const CircleParam& param);

/// r_k = r, x_k = p cos(2 pi k / M) + q sin(2 pi k / M).
DiscreteLoop great_circle(const CircleParam& param, int nodes);

/// L2-orthonormal basis of T_z Z at the discrete great circle: r-translation,
/// phase, and the 2(N-1) rotations of the (p, q)-plane toward its complement.
std::vector<LoopTangent> tangent_basis(const CircleParam& param, int nodes);

/// Discrete E_0 of a great circle with M nodes: 2 M^2 sin^2(pi / M).
double circle_energy(int nodes);

/// Gamma(r, p, q) = (1/2) int h(r, z)[(0, z'), (0, z')] dt with the analytic
/// velocity, trapezoidal rule with quad_nodes points.
double gamma(const CircleParam& param, const PerturbationForm& form, int quad_nodes = 128);

/// G restricted to the discrete great circle with M nodes (chord velocities);
/// the first-order coefficient of the discrete reduced energy.
double gamma_discrete(const CircleParam& param, const PerturbationForm& form, int nodes);

struct GammaGradient {
  double dr = 0.0;
  Vec dp;  // projected onto the Stiefel tangent space at (p, q)
  Vec dq;

  double norm() const;
};

/// Throws UnsupportedDerivative for forms with custom profiles.
GammaGradient gamma_grad(const CircleParam& param, const PerturbationForm& form,
                         int quad_nodes = 128);

/// Horizontal chart of Z at a base point: coordinates (dr, a, b) with
/// a, b in R^{N-1} move p and q toward the orthogonal complement of their
/// plane.  The in-plane rotation, along which Gamma is constant, is omitted.
class StiefelChart {
 public:
  explicit StiefelChart(CircleParam base);

  int dim() const { return 1 + 2 * (base_.n() - 1); }
  const CircleParam& base() const { return base_; }
  const Mat& complement() const { return complement_; }

  CircleParam point(const Vec& xi) const;
  /// Chart gradient at xi = 0 (analytic).
  Vec gradient(const PerturbationForm& form, int quad_nodes) const;
  /// Chart Hessian at xi = 0 by central second differences of Gamma.
  Mat hessian(const PerturbationForm& form, int quad_nodes, double step = 1e-3) const;

 private:
  CircleParam base_;
  Mat complement_;  // (N+1) x (N-1), orthonormal, orthogonal to p and q
};

enum class CriticalKind { minimum, maximum, saddle, degenerate };

std::string to_string(CriticalKind kind);

struct GammaCriticalPoint {
  CircleParam param;
  double value = 0.0;
  double grad_norm = 0.0;
  Vec hessian_eigenvalues;  // horizontal chart, ascending
  CriticalKind kind = CriticalKind::degenerate;
};

struct GammaSlice {
  double r = 0.0;
  double gamma_min = 0.0;
  double gamma_max = 0.0;
};

struct ExpansionResidual {
  double eps = 0.0;
  double max_residual = 0.0;
};

struct ReductionReport {
  std::vector<GammaSlice> gamma_samples;
  std::vector<GammaCriticalPoint> critical_points;  // sorted by (value, parameters)
  int predicted_count = 0;        // nondegenerate critical orbits
  int flat_points = 0;            // converged starts where Gamma is flat to tolerance
  bool gamma_identically_zero = false;
  std::vector<ExpansionResidual> expansion_residuals;
};

struct SearchConfig {
  int starts = 64;
  std::uint64_t seed = 1;
  double r_max = 20.0;
  int quad_nodes = 128;
  double grad_tol = 1e-9;
  double hessian_tol = 1e-7;
  double dedup_tol = 1e-5;
  int ascent_iterations = 400;
  int newton_iterations = 60;
  int slice_count = 81;
  int slice_samples = 32;
  int threads = 1;
};

/// Multistart search for critical points of Gamma on [-r_max, r_max] x V_2.
/// Starts are spread over the r-range where Gamma is not flat.  Every start
/// runs projected ascent, projected descent, damped Newton on the horizontal
/// gradient and eigenvector following for each intermediate Morse index (the
/// latter two reach saddles); converged points are classified by the
/// horizontal Hessian and deduplicated modulo O(2).
ReductionReport find_gamma_critical_points(const PerturbationForm& form,
                                           const SearchConfig& config = {});

/// Distance between circle parameters modulo O(2): |r1 - r2| + ||P1 - P2||_F
/// with P the orthogonal projector onto span(p, q).
double circle_param_distance(const CircleParam& a, const CircleParam& b);

/// Gamma over an r-grid (min and max over seeded (p, q) samples).
std::vector<GammaSlice> gamma_slices(const PerturbationForm& form, double r_max, int count,
                                     int samples, std::uint64_t seed, int quad_nodes = 128);

enum class WBackend { newton, contraction };

struct WOptions {
  double eps_max = 0.05;
  double tol = 1e-9;
  int max_iterations = 50;
  WBackend backend = WBackend::newton;
};

struct WCorrection {
  LoopTangent w;
  Vec alpha;  // multipliers of the tangent basis
  int iterations = 0;
  double residual = 0.0;  // |projected E_eps'(z + w)|, l2 in frame coordinates
  double constraint = 0.0; // max_i |<w, v_i>_L2|
};

/// Solves for (w, alpha): w orthogonal to T_z Z and E_eps'(z (+) w) - sum alpha_i v_i = 0,
/// where z (+) w is the normalization retraction.  Throws InvalidArgument when
/// |eps| > eps_max, DegeneracyError for a singular bordered system and
/// DivergenceError when the iteration does not converge.
WCorrection compute_w(const CircleParam& param, const PerturbationForm& form, double eps,
                      int nodes, const WOptions& options = {});

/// z (+) w as a loop.
DiscreteLoop corrected_loop(const CircleParam& param, const WCorrection& w, int nodes);

/// Phi_eps(z) = E_eps(z (+) w(z, eps)).
double phi(const CircleParam& param, const PerturbationForm& form, double eps, int nodes,
           const WOptions& options = {});

/// max over the sampled parameters of |Phi_eps - b - eps Gamma| for each eps,
/// with Gamma taken on the discrete circle.
std::vector<ExpansionResidual> expansion_residuals(const PerturbationForm& form,
                                                   const std::vector<CircleParam>& params,
                                                   const std::vector<double>& eps_list,
                                                   int nodes, const WOptions& options = {});

/// Least-squares slope of log(residual) against log(eps).
double loglog_slope(const std::vector<ExpansionResidual>& residuals);

/// Seeded random circle parameters with r uniform in [-r_range, r_range].
std::vector<CircleParam> sample_circle_params(int n, int count, double r_range,
                                              std::uint64_t seed);

}  // namespace cylgeo
