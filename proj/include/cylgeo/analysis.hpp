#pragma once

// Second-variation spectra, the O(2) quotient of loops, nondegeneracy of
// closed geodesics of the sphere factor, and the degree test on the cylinder.

#include "cylgeo/loop.hpp"

#include <string>
#include <vector>

namespace cylgeo {

struct SpectrumSummary {
  Vec eigenvalues;  // ascending
  int kernel_dim = 0;
  int morse_index = 0;
  int positive = 0;
  double threshold = 0.0;  // absolute cut, |lambda| <= threshold counts as kernel
  double gap_ratio = 0.0;  // smallest |lambda| outside the kernel / largest inside
  bool reliable = false;   // gap_ratio >= 10
};

/// Partitions eigenvalues with the relative cut |lambda| <= rel_tol * max|lambda|.
SpectrumSummary summarize_spectrum(const Vec& eigenvalues, double rel_tol = 1e-7);

/// Spectrum of the Hessian of E_eps in node-tangent coordinates, scaled by M so
/// the values are those of the discrete L2 operator.
SpectrumSummary spectrum(const DiscreteLoop& loop, const PerturbationForm& form, double eps,
                         double rel_tol = 1e-7);

struct Alignment {
  int shift = 0;
  bool reflect = false;
  double distance = 0.0;
};

/// RMS node distance between loops (r and sphere components jointly).
double rms_distance(const DiscreteLoop& a, const DiscreteLoop& b);

/// Minimizes rms_distance(o2_act(a, shift, reflect), b) over all shifts and
/// both orientations; ties go to the smallest shift, unreflected first.
Alignment align(const DiscreteLoop& a, const DiscreteLoop& b);

/// Canonical representative data of an O(2)-orbit.
struct O2NormalForm {
  int shift = 0;        // o2_act(loop, shift, reflect) is the representative
  bool reflect = false;
  double mean_r = 0.0;  // O(2)-invariant
  Mat moment;           // (1/M) sum_k x_k x_k^T, O(2)-invariant
};

/// The representative starts at the node with the largest first sphere
/// coordinate and runs so that the second sphere coordinate increases from
/// node 0 to node 1 (N >= 1 guarantees this coordinate exists).
O2NormalForm o2_normal_form(const DiscreteLoop& loop);
DiscreteLoop o2_representative(const DiscreteLoop& loop, const O2NormalForm& form);

struct GeodesicCertificate {
  DiscreteLoop loop;
  double energy = 0.0;
  double residual = 0.0;
  double eps = 0.0;
  SpectrumSummary spectrum;
  O2NormalForm normal_form;
  bool trivial = false;     // energy <= 0.1 * b
  bool in_bracket = true;   // energy within the configured sanity bracket
  int descent_steps = 0;
  int newton_steps = 0;
  int deflated = 0;         // near-kernel dimension removed in the last Newton step
  std::vector<double> descent_energies;  // energy after each accepted descent step
};

struct OrbitClass {
  GeodesicCertificate representative;
  int members = 0;
  double alignment_distance = 0.0;  // largest member distance to the representative
};

/// Default tolerance 1e-4 * sqrt(M).
double default_dedup_tolerance(int nodes);

/// Greedy clustering by align distance.  Inputs are first sorted by energy and
/// then lexicographically by node data; tol <= 0 selects the default.
std::vector<OrbitClass> dedup(std::vector<GeodesicCertificate> certs, double tol = 0.0);

struct NondegeneracyReport {
  int kernel_dim = 0;
  bool nondegenerate = false;  // kernel_dim == 1
  SpectrumSummary spectrum;
};

/// Spectrum of the sphere-only energy at the sphere component of `loop`.
/// Throws NotCritical when that component is not a critical point.
NondegeneracyReport nondegeneracy_check(const DiscreteLoop& loop, double critical_tol = 1e-8);

struct CylinderDegreeReport {
  double radius = 0.0;
  std::vector<double> tau;
  std::vector<double> d_minus;  // dGamma/dr at -R for each tau
  std::vector<double> d_plus;   // dGamma/dr at +R
  bool product_nonzero = false; // dGamma/dr(-R) * dGamma/dr(R) != 0 for all tau
  bool sign_change = false;     // the product is negative for all tau
  int degree = 0;               // (sign d_plus - sign d_minus) / 2
  bool tau_consistent = true;   // sampled values agree across tau
  bool inconclusive = false;    // derivative numerically zero at +-R
  std::string warning;
};

/// Requires N = 1 and analytic profiles.
CylinderDegreeReport degree_check_cylinder(const PerturbationForm& form, double radius,
                                           int tau_samples = 16);

}  // namespace cylgeo
