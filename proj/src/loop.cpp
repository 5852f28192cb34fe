#include "cylgeo/loop.hpp"

#include "cylgeo/error.hpp"

#include <cmath>
#include <string>

namespace cylgeo {

namespace {

constexpr double kUnitTol = 1e-10;
constexpr double kTangentTol = 1e-10;

// Neumaier summation; keeps energies reproducible to an ulp or two
// regardless of the order in which edges are visited.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Per-node field values S(r_k) and derivatives, computed once per evaluation.
struct FieldCache {
  std::vector<Mat> s, ds, dds;
  bool active = false;

  FieldCache(const DiscreteLoop& loop, const PerturbationForm& form, double eps, int order) {
    if (form.n() != loop.n()) throw InvalidArgument("perturbation form and loop differ in N");
    active = eps != 0.0 && !form.empty();
    if (!active) return;
    const int m = loop.nodes();
    s.resize(m);
    if (order >= 1) ds.resize(m);
    if (order >= 2) dds.resize(m);
    for (int k = 0; k < m; ++k) {
      const double r = loop.r(k);
      s[k] = form.field(r);
      if (order >= 1) ds[k] = form.field_derivative(r);
      if (order >= 2) dds[k] = form.field_second_derivative(r);
    }
  }
};

int next(int k, int m) { return k + 1 == m ? 0 : k + 1; }

Vec edge_delta(const DiscreteLoop& loop, int k) {
  return loop.node(next(k, loop.nodes())) - loop.node(k);
}

// Hessian of one edge energy with respect to (u_a, u_b), size 2d x 2d.
Mat edge_hessian(const DiscreteLoop& loop, const FieldCache& cache, double eps, int a) {
  const int m = loop.nodes();
  const int d = loop.shape().stride();
  const int b = next(a, m);
  const double scale = static_cast<double>(m);
  Mat stiffness = scale * Mat::Identity(d, d);
  Mat he = Mat::Zero(2 * d, 2 * d);
  if (cache.active) {
    const Vec delta = edge_delta(loop, a);
    stiffness += scale * eps * 0.5 * (cache.s[a] + cache.s[b]);
    // coupling of r_a, r_b with the edge through the field
    const Vec ca = scale * eps * 0.5 * (cache.ds[a] * delta);
    const Vec cb = scale * eps * 0.5 * (cache.ds[b] * delta);
    // D^T c e_r^T with D = [-I, I]
    he.block(0, 0, d, 1) -= ca;
    he.block(d, 0, d, 1) += ca;
    he.block(0, d, d, 1) -= cb;
    he.block(d, d, d, 1) += cb;
    he.block(0, 0, 1, d) -= ca.transpose();
    he.block(0, d, 1, d) += ca.transpose();
    he.block(d, 0, 1, d) -= cb.transpose();
    he.block(d, d, 1, d) += cb.transpose();
    he(0, 0) += 0.25 * scale * eps * delta.dot(cache.dds[a] * delta);
    he(d, d) += 0.25 * scale * eps * delta.dot(cache.dds[b] * delta);
  }
  he.topLeftCorner(d, d) += stiffness;
  he.bottomRightCorner(d, d) += stiffness;
  he.topRightCorner(d, d) -= stiffness;
  he.bottomLeftCorner(d, d) -= stiffness;
  return he;
}

// sum over edges of L^T He L scattered into a dense matrix whose node blocks
// have the column count of the lifts.
Mat assemble_hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps,
                     const std::vector<Mat>& lifts) {
  const int m = loop.nodes();
  const int d = loop.shape().stride();
  const int w = static_cast<int>(lifts.front().cols());
  const FieldCache cache(loop, form, eps, 2);
  Mat out = Mat::Zero(m * w, m * w);
  Mat lift = Mat::Zero(2 * d, 2 * w);
  for (int a = 0; a < m; ++a) {
    const int b = next(a, m);
    const Mat he = edge_hessian(loop, cache, eps, a);
    lift.topLeftCorner(d, w) = lifts[a];
    lift.bottomRightCorner(d, w) = lifts[b];
    const Mat local = lift.transpose() * he * lift;
    const int ia = a * w;
    const int ib = b * w;
    out.block(ia, ia, w, w) += local.topLeftCorner(w, w);
    out.block(ib, ib, w, w) += local.bottomRightCorner(w, w);
    out.block(ia, ib, w, w) += local.topRightCorner(w, w);
    out.block(ib, ia, w, w) += local.bottomLeftCorner(w, w);
  }
  return out;
}

Mat ambient_projector(const Eigen::Ref<const Vec>& x) {
  const int d = static_cast<int>(x.size()) + 1;
  Mat p = Mat::Identity(d, d);
  p.bottomRightCorner(d - 1, d - 1) -= x * x.transpose();
  return p;
}

}  // namespace

DiscreteLoop::DiscreteLoop(const Vec& r, const Mat& x) {
  if (r.size() != x.rows()) throw InvalidArgument("loop: r and x differ in node count");
  if (x.cols() < 2) throw InvalidArgument("loop: sphere coordinates need N+1 >= 2 columns");
  shape_ = {static_cast<int>(r.size()), static_cast<int>(x.cols()) - 1};
  coords_.resize(shape_.size());
  for (int k = 0; k < shape_.nodes; ++k) {
    coords_(k * shape_.stride()) = r(k);
    coords_.segment(k * shape_.stride() + 1, shape_.n + 1) = x.row(k).transpose();
  }
  validate();
}

DiscreteLoop::DiscreteLoop(LoopShape shape, Vec coords)
    : shape_(shape), coords_(std::move(coords)) {
  validate();
}

DiscreteLoop DiscreteLoop::from_coords(LoopShape shape, Vec coords) {
  if (coords.size() != shape.size()) throw InvalidArgument("loop: coordinate vector size mismatch");
  return DiscreteLoop(shape, std::move(coords));
}

void DiscreteLoop::validate() const {
  if (shape_.nodes < kMinNodes) {
    throw InvalidArgument("loop: need at least " + std::to_string(kMinNodes) + " nodes, got " +
                          std::to_string(shape_.nodes));
  }
  if (shape_.n < 1) throw InvalidArgument("loop: N must be >= 1");
  if (!coords_.allFinite()) throw InvalidArgument("loop: non-finite coordinates");
  for (int k = 0; k < shape_.nodes; ++k) {
    const double dev = std::abs(x(k).norm() - 1.0);
    if (dev > kUnitTol) {
      throw ConstraintViolation("loop: node " + std::to_string(k) + " is off the unit sphere by " +
                                std::to_string(dev));
    }
  }
}

Vec DiscreteLoop::r_values() const {
  Vec out(nodes());
  for (int k = 0; k < nodes(); ++k) out(k) = r(k);
  return out;
}

Mat DiscreteLoop::x_values() const {
  Mat out(nodes(), n() + 1);
  for (int k = 0; k < nodes(); ++k) out.row(k) = x(k).transpose();
  return out;
}

LoopTangent::LoopTangent(const DiscreteLoop& base, Vec coords)
    : shape_(base.shape()), coords_(std::move(coords)) {
  if (coords_.size() != shape_.size()) throw InvalidArgument("tangent: size mismatch");
  for (int k = 0; k < shape_.nodes; ++k) {
    const double dot = base.x(k).dot(dx(k));
    if (std::abs(dot) > kTangentTol * std::max(1.0, dx(k).norm())) {
      throw ConstraintViolation("tangent: x_k . dx_k = " + std::to_string(dot) + " at node " +
                                std::to_string(k));
    }
  }
}

LoopTangent LoopTangent::zero(const DiscreteLoop& base) {
  return LoopTangent(base, Vec::Zero(base.shape().size()));
}

double LoopTangent::l2_dot(const LoopTangent& other) const {
  if (!(shape_ == other.shape_)) throw InvalidArgument("tangent: shape mismatch");
  return coords_.dot(other.coords_) / shape_.nodes;
}

double LoopTangent::l2_norm() const { return std::sqrt(l2_dot(*this)); }

EnergyParts energy_parts(const DiscreteLoop& loop, const PerturbationForm& form) {
  const int m = loop.nodes();
  const double half_m = 0.5 * m;
  const FieldCache cache(loop, form, 1.0, 0);
  CompensatedSum l0, sphere, pert;
  for (int k = 0; k < m; ++k) {
    const Vec delta = edge_delta(loop, k);
    l0.add(half_m * delta(0) * delta(0));
    sphere.add(half_m * delta.tail(delta.size() - 1).squaredNorm());
    if (cache.active) {
      const Mat avg = 0.5 * (cache.s[k] + cache.s[next(k, m)]);
      pert.add(half_m * delta.dot(avg * delta));
    }
  }
  return {l0.value(), sphere.value(), pert.value()};
}

double energy(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const EnergyParts parts = energy_parts(loop, form);
  return parts.total(eps);
}

Vec euclidean_gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const int m = loop.nodes();
  const int d = loop.shape().stride();
  const double scale = static_cast<double>(m);
  const FieldCache cache(loop, form, eps, 1);
  Vec g = Vec::Zero(loop.shape().size());
  for (int a = 0; a < m; ++a) {
    const int b = next(a, m);
    const Vec delta = edge_delta(loop, a);
    Vec flux = scale * delta;
    if (cache.active) {
      flux += scale * eps * 0.5 * ((cache.s[a] + cache.s[b]) * delta);
      g(a * d) += 0.25 * scale * eps * delta.dot(cache.ds[a] * delta);
      g(b * d) += 0.25 * scale * eps * delta.dot(cache.ds[b] * delta);
    }
    g.segment(a * d, d) -= flux;
    g.segment(b * d, d) += flux;
  }
  return g;
}

Mat euclidean_hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const int d = loop.shape().stride();
  return assemble_hessian(loop, form, eps, std::vector<Mat>(loop.nodes(), Mat::Identity(d, d)));
}

LoopTangent gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  Vec g = euclidean_gradient(loop, form, eps);
  const int d = loop.shape().stride();
  for (int k = 0; k < loop.nodes(); ++k) {
    auto gx = g.segment(k * d + 1, d - 1);
    const auto x = loop.x(k);
    gx -= x * x.dot(gx);
  }
  return LoopTangent(loop, std::move(g));
}

Mat hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const int m = loop.nodes();
  const int d = loop.shape().stride();
  std::vector<Mat> projectors(m);
  for (int k = 0; k < m; ++k) projectors[k] = ambient_projector(loop.x(k));
  Mat h = assemble_hessian(loop, form, eps, projectors);
  const Vec g = euclidean_gradient(loop, form, eps);
  for (int k = 0; k < m; ++k) {
    const double normal = loop.x(k).dot(g.segment(k * d + 1, d - 1));
    h.block(k * d + 1, k * d + 1, d - 1, d - 1) -= normal * projectors[k].bottomRightCorner(d - 1, d - 1);
  }
  return h;
}

double residual_norm(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  return gradient(loop, form, eps).coords().norm();
}

DiscreteLoop o2_act(const DiscreteLoop& loop, int shift, bool reflect) {
  const int m = loop.nodes();
  if (shift < 0 || shift >= m) throw InvalidArgument("o2_act: shift must lie in [0, M)");
  const int d = loop.shape().stride();
  Vec out(loop.shape().size());
  for (int k = 0; k < m; ++k) {
    const int src = ((reflect ? -k : k) + shift + m) % m;
    out.segment(k * d, d) = loop.node(src);
  }
  return DiscreteLoop::from_coords(loop.shape(), std::move(out));
}

DiscreteLoop retract(const DiscreteLoop& loop, const Vec& ambient_step) {
  if (ambient_step.size() != loop.shape().size()) throw InvalidArgument("retract: size mismatch");
  const int d = loop.shape().stride();
  Vec out = loop.coords() + ambient_step;
  for (int k = 0; k < loop.nodes(); ++k) {
    auto x = out.segment(k * d + 1, d - 1);
    x /= x.norm();
  }
  return DiscreteLoop::from_coords(loop.shape(), std::move(out));
}

Mat node_frame(const Eigen::Ref<const Vec>& x) {
  const int k = static_cast<int>(x.size());
  const Mat column = x;
  Eigen::HouseholderQR<Mat> qr(column);
  const Mat q = qr.householderQ() * Mat::Identity(k, k);
  Mat frame = Mat::Zero(k + 1, k);
  frame(0, 0) = 1.0;
  frame.bottomRightCorner(k, k - 1) = q.rightCols(k - 1);
  return frame;
}

LoopChart::LoopChart(DiscreteLoop base) : base_(std::move(base)) {
  frames_.reserve(base_.nodes());
  for (int k = 0; k < base_.nodes(); ++k) frames_.push_back(node_frame(base_.x(k)));
}

Vec LoopChart::lift(const Vec& c) const {
  const auto& s = shape();
  if (c.size() != s.tangent_size()) throw InvalidArgument("chart: coordinate size mismatch");
  Vec out(s.size());
  for (int k = 0; k < s.nodes; ++k) {
    out.segment(k * s.stride(), s.stride()) =
        frames_[k] * c.segment(k * s.tangent_stride(), s.tangent_stride());
  }
  return out;
}

Vec LoopChart::project(const Vec& v) const {
  const auto& s = shape();
  if (v.size() != s.size()) throw InvalidArgument("chart: ambient size mismatch");
  Vec out(s.tangent_size());
  for (int k = 0; k < s.nodes; ++k) {
    out.segment(k * s.tangent_stride(), s.tangent_stride()) =
        frames_[k].transpose() * v.segment(k * s.stride(), s.stride());
  }
  return out;
}

DiscreteLoop LoopChart::point(const Vec& c) const { return retract(base_, lift(c)); }

namespace {

// Differential of the chart at c, one (N+2) x (N+1) block per node:
// the R row passes through, the sphere rows are (I - y^ y^T) U / |y|.
struct ChartJet {
  DiscreteLoop point;
  std::vector<Mat> lifts;
  std::vector<double> radius;
};

ChartJet chart_jet(const LoopChart& chart, const Vec& c) {
  const auto& s = chart.shape();
  const Vec step = chart.lift(c);
  const Vec raw = chart.base().coords() + step;
  ChartJet jet{chart.point(c), {}, {}};
  jet.lifts.reserve(s.nodes);
  jet.radius.reserve(s.nodes);
  for (int k = 0; k < s.nodes; ++k) {
    const double rho = raw.segment(k * s.stride() + 1, s.n + 1).norm();
    const auto yhat = jet.point.x(k);
    Mat lift = chart.frames()[k];
    Mat proj = Mat::Identity(s.n + 1, s.n + 1) - yhat * yhat.transpose();
    lift.bottomRows(s.n + 1) = proj * lift.bottomRows(s.n + 1) / rho;
    jet.lifts.push_back(std::move(lift));
    jet.radius.push_back(rho);
  }
  return jet;
}

}  // namespace

Vec LoopChart::gradient(const Vec& c, const PerturbationForm& form, double eps) const {
  const auto& s = shape();
  const ChartJet jet = chart_jet(*this, c);
  const Vec g = euclidean_gradient(jet.point, form, eps);
  Vec out(s.tangent_size());
  for (int k = 0; k < s.nodes; ++k) {
    out.segment(k * s.tangent_stride(), s.tangent_stride()) =
        jet.lifts[k].transpose() * g.segment(k * s.stride(), s.stride());
  }
  return out;
}

Mat LoopChart::hessian(const Vec& c, const PerturbationForm& form, double eps) const {
  const auto& s = shape();
  const ChartJet jet = chart_jet(*this, c);
  Mat h = assemble_hessian(jet.point, form, eps, jet.lifts);
  const Vec g = euclidean_gradient(jet.point, form, eps);
  const int dim = s.n + 1;
  for (int k = 0; k < s.nodes; ++k) {
    // g . D^2 n[a, b] for the normalization n(y) = y / |y|
    const Vec gx = g.segment(k * s.stride() + 1, dim);
    const auto yhat = jet.point.x(k);
    const double gy = gx.dot(yhat);
    const double inv_r2 = 1.0 / (jet.radius[k] * jet.radius[k]);
    Mat curv = -inv_r2 * (yhat * gx.transpose() + gx * yhat.transpose() +
                          gy * Mat::Identity(dim, dim) - 3.0 * gy * yhat * yhat.transpose());
    const Mat u = frames_[k].bottomRightCorner(dim, s.n);
    h.block(k * s.tangent_stride() + 1, k * s.tangent_stride() + 1, s.n, s.n) +=
        u.transpose() * curv * u;
  }
  return h;
}

Vec tangent_gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const LoopChart chart(loop);
  return chart.project(euclidean_gradient(loop, form, eps));
}

Mat tangent_hessian(const DiscreteLoop& loop, const PerturbationForm& form, double eps) {
  const LoopChart chart(loop);
  return chart.hessian(Vec::Zero(loop.shape().tangent_size()), form, eps);
}

DiscreteLoop constant_loop(int nodes, double r, const Vec& xi) {
  Mat x(nodes, xi.size());
  for (int k = 0; k < nodes; ++k) x.row(k) = xi.transpose();
  return DiscreteLoop(Vec::Constant(nodes, r), x);
}

}  // namespace cylgeo
