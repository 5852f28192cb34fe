#pragma once

// Discrete loop space: closed curves in R x S^N sampled at M equispaced nodes
// t_k = k / M, indices taken mod M.
//
// Node data is stored flat, node-major, with stride N+2: (r_k, x_k[0..N]).
// The energy uses the forward difference d_k = u_{k+1} - u_k (velocity M d_k)
// and the Riemann sum over edges:
//
//   E_eps = sum_k (M/2) d_k^T (I + eps * (S(r_k) + S(r_{k+1})) / 2) d_k
//
// with S(s) the perturbation field.  Averaging the field over the two ends of
// an edge makes the discrete energy invariant under index reversal.
//
// Gradients are Euclidean partial derivatives with respect to node
// coordinates (plain l2 pairing); sphere blocks are projected onto x_k^perp.
// Discrete L2 inner products carry the extra factor 1/M.

#include "cylgeo/metric.hpp"

#include <vector>

namespace cylgeo {

struct LoopShape {
  int nodes = 0;  // M
  int n = 0;      // sphere S^n

  int stride() const { return n + 2; }
  int tangent_stride() const { return n + 1; }
  int size() const { return nodes * stride(); }
  int tangent_size() const { return nodes * tangent_stride(); }
  bool operator==(const LoopShape&) const = default;
};

class DiscreteLoop {
 public:
  static constexpr int kMinNodes = 8;

  /// r has M entries, x is M x (N+1) with unit rows.  Throws ConstraintViolation
  /// when a row deviates from the unit sphere by more than 1e-10 and
  /// InvalidArgument when M < 8.
  DiscreteLoop(const Vec& r, const Mat& x);

  /// From flat node-major coordinates.
  static DiscreteLoop from_coords(LoopShape shape, Vec coords);

  const LoopShape& shape() const { return shape_; }
  int nodes() const { return shape_.nodes; }
  int n() const { return shape_.n; }
  const Vec& coords() const { return coords_; }

  double r(int k) const { return coords_(k * shape_.stride()); }
  auto x(int k) const { return coords_.segment(k * shape_.stride() + 1, shape_.n + 1); }
  auto node(int k) const { return coords_.segment(k * shape_.stride(), shape_.stride()); }

  Vec r_values() const;
  Mat x_values() const;

 private:
  DiscreteLoop(LoopShape shape, Vec coords);
  void validate() const;

  LoopShape shape_;
  Vec coords_;
};

/// Element of T_u Lambda in ambient node coordinates (same layout as the loop).
/// Tangency x_k . dx_k = 0 is checked against a base loop on construction.
class LoopTangent {
 public:
  LoopTangent(const DiscreteLoop& base, Vec coords);
  static LoopTangent zero(const DiscreteLoop& base);

  const LoopShape& shape() const { return shape_; }
  const Vec& coords() const { return coords_; }
  double dr(int k) const { return coords_(k * shape_.stride()); }
  auto dx(int k) const { return coords_.segment(k * shape_.stride() + 1, shape_.n + 1); }

  /// (1/M) sum_k (dr_k a_k + dx_k . b_k)
  double l2_dot(const LoopTangent& other) const;
  double l2_norm() const;

 private:
  LoopShape shape_;
  Vec coords_;
};

struct EnergyParts {
  double l0 = 0.0;           // (1/2) int |r'|^2
  double sphere = 0.0;       // (1/2) int |x'|^2
  double perturbation = 0.0; // G = (1/2) int h[u', u']

  double unperturbed() const { return l0 + sphere; }
  double total(double eps) const { return unperturbed() + eps * perturbation; }
};

EnergyParts energy_parts(const DiscreteLoop& loop, const PerturbationForm& form);

/// E_0 + eps * G.
double energy(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// Unprojected partial derivatives of the energy (flat, loop layout).
Vec euclidean_gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// Unprojected second partial derivatives, dense size M(N+2).
Mat euclidean_hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// Riemannian gradient on the product of spheres: partial derivatives with
/// each sphere block multiplied by (I - x_k x_k^T).
LoopTangent gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// Riemannian Hessian in ambient coordinates, dense size M(N+2):
/// P (d^2 E) P - blockdiag((x_k . g_k) P_k).  Normal directions are in its kernel.
Mat hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// l2 norm of the Riemannian gradient.
double residual_norm(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// u(+-t + theta): out_k = in_{(+-k + shift) mod M}.
DiscreteLoop o2_act(const DiscreteLoop& loop, int shift, bool reflect);

/// r + step_r, x_k <- (x_k + step_x_k) / |x_k + step_x_k|.
DiscreteLoop retract(const DiscreteLoop& loop, const Vec& ambient_step);

/// Orthonormal frame of T_{x_k} S^N lifted to a (N+2) x (N+1) block
/// [[1, 0], [0, U_k]].  Deterministic (Householder of x_k).
Mat node_frame(const Eigen::Ref<const Vec>& x);

/// Coordinate chart of the loop space around a base loop: tangent coordinates
/// c (size M(N+1), one frame per node) map to retract(base, F c).  Gradient
/// and Hessian of c -> E(chart(c)) are exact, including the curvature of the
/// normalization retraction.  At c = 0 they are the Riemannian gradient and
/// Hessian in frame coordinates.
class LoopChart {
 public:
  explicit LoopChart(DiscreteLoop base);

  const DiscreteLoop& base() const { return base_; }
  const LoopShape& shape() const { return base_.shape(); }
  const std::vector<Mat>& frames() const { return frames_; }

  /// Ambient coordinates F c of tangent coordinates c.
  Vec lift(const Vec& c) const;
  /// F^T v for an ambient vector v.
  Vec project(const Vec& v) const;
  DiscreteLoop point(const Vec& c) const;

  Vec gradient(const Vec& c, const PerturbationForm& form, double eps) const;
  Mat hessian(const Vec& c, const PerturbationForm& form, double eps) const;

 private:
  DiscreteLoop base_;
  std::vector<Mat> frames_;
};

/// Riemannian gradient / Hessian in node-frame coordinates, sizes M(N+1).
Vec tangent_gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps);
Mat tangent_hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps);

/// Constant loop r = c, x = xi.
DiscreteLoop constant_loop(int nodes, double r, const Vec& xi);

/// Samples t -> (r(t), x(t)) at t_k = k/M and normalizes x.
template <class RFn, class XFn>
DiscreteLoop sample_loop(int nodes, int n, RFn&& r_of_t, XFn&& x_of_t) {
  Vec r(nodes);
  Mat x(nodes, n + 1);
  for (int k = 0; k < nodes; ++k) {
    const double t = static_cast<double>(k) / nodes;
    r(k) = r_of_t(t);
    Vec xk = x_of_t(t);
    x.row(k) = (xk / xk.norm()).transpose();
  }
  return DiscreteLoop(r, x);
}

}  // namespace cylgeo
