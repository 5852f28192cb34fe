#pragma once

// Refinement of candidate loops to critical points of the full discrete
// energy, continuation in eps, and the multiplicity pipeline.

#include "cylgeo/analysis.hpp"
#include "cylgeo/reduction.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cylgeo {

struct RefineOptions {
  double tol = 1e-9;            // certification residual
  double switch_tol = 1e-2;     // gradient descent until the residual drops below this
  int max_descent_steps = 20000;
  int max_newton_steps = 40;
  double deflation = 1e-7;      // |lambda| of the l2 tangent Hessian treated as kernel
  double armijo = 1e-4;
  double shrink = 0.5;
  /// Sanity bracket [b - width, b + width]; b defaults to the discrete
  /// great-circle energy when NaN.
  double bracket_center = std::numeric_limits<double>::quiet_NaN();
  double bracket_width = 1.0;
  bool compute_spectrum = true;
};

/// Gradient descent with Armijo backtracking, then Newton with a pseudo-solve
/// that deflates the numerical near-kernel.  Throws DivergenceError (with the
/// residual trace) when either phase exhausts its iterations.
GeodesicCertificate refine(const DiscreteLoop& initial, const PerturbationForm& form, double eps,
                           const RefineOptions& options = {});

/// Warm-started refinement along eps_list (ascending from 0) starting at the
/// great circle; stops at the first failure and returns the prefix.
std::vector<GeodesicCertificate> continuation(const CircleParam& param,
                                              const PerturbationForm& form,
                                              const std::vector<double>& eps_list, int nodes,
                                              const RefineOptions& options = {});

/// max_i |E_{i+1} - E_i| / |eps_{i+1} - eps_i| along a branch (0 for < 2 entries).
double branch_lipschitz(const std::vector<GeodesicCertificate>& branch);

struct MultiplicityConfig {
  SearchConfig search;
  int nodes = 256;
  WOptions w;
  RefineOptions refine;
  double dedup_tol = 0.0;        // <= 0: 1e-4 sqrt(M)
  double cylinder_radius = 1.0;  // R of the degree test when N = 1
  int threads = 1;
};

struct CandidateRecord {
  int gamma_index = 0;  // into reduction.critical_points
  double w_norm = 0.0;
  double w_residual = 0.0;
  int w_iterations = 0;
  double phi = 0.0;
  std::string status;  // certified | trivial | failed
  std::string error;
  std::optional<GeodesicCertificate> certificate;
};

struct ExperimentReport {
  int n = 0;
  double eps = 0.0;
  int nodes = 0;
  bool h1 = false;
  bool h2 = false;
  ReductionReport reduction;
  std::optional<CylinderDegreeReport> cylinder;
  std::vector<CandidateRecord> candidates;
  std::vector<OrbitClass> orbits;  // nontrivial certificates modulo O(2)
  int count = 0;
  int target = 0;                  // 1 on the cylinder, 2N under (h2), N otherwise
  double dedup_tol = 0.0;
  double min_pairwise_distance = 0.0;
  std::string status;              // ok | below_target | degenerate
};

/// Gamma critical points -> compute_w -> refine -> dedup.  Never throws for
/// per-candidate failures; they are recorded in the report.
ExperimentReport multiplicity_experiment(const PerturbationForm& form, double eps,
                                         const MultiplicityConfig& config = {});

}  // namespace cylgeo
