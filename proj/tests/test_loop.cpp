#include "cylgeo/error.hpp"
#include "cylgeo/loop.hpp"
#include "cylgeo/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace cylgeo;

namespace {

constexpr double kPi = std::numbers::pi;

DiscreteLoop circle(int m, int n, double r = 0.0, int winding = 1) {
  return sample_loop(
      m, n, [r](double) { return r; },
      [n, winding](double t) {
        Vec x = Vec::Zero(n + 1);
        x(0) = std::cos(2 * kPi * winding * t);
        x(1) = std::sin(2 * kPi * winding * t);
        return x;
      });
}

// A loop near a great circle with independent per-node noise.
DiscreteLoop random_loop(Rng& rng, int m, int n) {
  const Vec p = rng.unit_vector(n + 1);
  Vec q = rng.normal_vector(n + 1);
  q -= p * p.dot(q);
  q.normalize();
  Vec r(m);
  Mat x(m, n + 1);
  const double r0 = rng.uniform(-2, 2);
  for (int k = 0; k < m; ++k) {
    const double t = 2 * kPi * k / m;
    r(k) = r0 + 0.5 * std::sin(t) + 0.1 * rng.normal();
    Vec xk = p * std::cos(t) + q * std::sin(t) + 0.3 * rng.normal_vector(n + 1);
    x.row(k) = xk.normalized().transpose();
  }
  return DiscreteLoop(r, x);
}

// Direct transcription of the discrete energy on raw coordinates; kept
// independent of the library so finite differences of it are an oracle.
double reference_energy(const Vec& c, int m, int n, const PerturbationForm& form, double eps) {
  const int d = n + 2;
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    const int j = (k + 1) % m;
    const Vec delta = c.segment(j * d, d) - c.segment(k * d, d);
    Mat a = Mat::Identity(d, d);
    if (eps != 0.0) {
      Mat sk = Mat::Zero(d, d), sj = Mat::Zero(d, d);
      for (const auto& term : form.terms()) {
        sk += term.profile.value(c(k * d)) * term.block;
        sj += term.profile.value(c(j * d)) * term.block;
      }
      a += eps * 0.5 * (sk + sj);
    }
    total += 0.5 * m * delta.dot(a * delta);
  }
  return total;
}

Vec fd_gradient(const DiscreteLoop& loop, const PerturbationForm& form, double eps, double h) {
  Vec c = loop.coords();
  Vec g(c.size());
  for (int i = 0; i < c.size(); ++i) {
    const double keep = c(i);
    c(i) = keep + h;
    const double up = reference_energy(c, loop.nodes(), loop.n(), form, eps);
    c(i) = keep - h;
    const double down = reference_energy(c, loop.nodes(), loop.n(), form, eps);
    c(i) = keep;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

Vec project_sphere_blocks(const DiscreteLoop& loop, Vec g) {
  const int d = loop.shape().stride();
  for (int k = 0; k < loop.nodes(); ++k) {
    auto gx = g.segment(k * d + 1, d - 1);
    gx -= loop.x(k) * loop.x(k).dot(gx);
  }
  return g;
}

}  // namespace

TEST(Loop, RejectsInvalidLoops) {
  EXPECT_THROW(circle(7, 2), InvalidArgument);
  Mat x = circle(8, 2).x_values();
  x(3, 0) *= 1.001;
  EXPECT_THROW(DiscreteLoop(Vec::Zero(8), x), ConstraintViolation);
  const auto c = circle(8, 2);
  Vec bad = Vec::Zero(c.shape().size());
  bad(1) = 1.0;  // dx_0 along x_0 = e_0
  EXPECT_THROW(LoopTangent(c, bad), ConstraintViolation);
}

TEST(Loop, GreatCircleEnergy) {
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto loop = circle(256, 2);
  const double e0 = energy(loop, form, 0.0);
  // chord length 2 sin(pi/M) per edge: E0 = 2 M^2 sin^2(pi/M)
  const double exact_discrete = 2.0 * 256 * 256 * std::pow(std::sin(kPi / 256), 2);
  EXPECT_NEAR(e0, exact_discrete, 1e-11);
  EXPECT_NEAR(e0, 2 * kPi * kPi, 0.01);
}

TEST(Loop, ConstantLoopHasZeroEnergy) {
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto loop = constant_loop(16, 0.7, Vec::Unit(3, 1));
  for (double eps : {0.0, 0.1, -2.0}) EXPECT_EQ(energy(loop, form, eps), 0.0);
  EXPECT_EQ(gradient(loop, PerturbationForm(2), 0.0).coords().norm(), 0.0);
}

TEST(Loop, UnperturbedEnergyIgnoresForm) {
  Rng rng(5);
  const auto loop = random_loop(rng, 32, 2);
  const double e0 = energy(loop, PerturbationForm(2), 0.0);
  EXPECT_EQ(energy(loop, builtin::odd_decay_anisotropic(2), 0.0), e0);
  EXPECT_EQ(energy(loop, builtin::isotropic(2, Profile::constant(3.0)), 0.0), e0);
}

TEST(Loop, EnergySplitsIntoNonnegativeParts) {
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto loop = random_loop(rng, 24, 3);
    const auto parts = energy_parts(loop, PerturbationForm(3));
    EXPECT_GE(parts.l0, 0.0);
    EXPECT_GE(parts.sphere, 0.0);
    EXPECT_NEAR(energy(loop, PerturbationForm(3), 0.0), parts.l0 + parts.sphere, 1e-12);
  }
}

TEST(Loop, GreatCircleIsCritical) {
  for (int n : {1, 2, 3}) {
    const auto loop = circle(256, n, 0.4);
    EXPECT_LE(residual_norm(loop, builtin::odd_decay_anisotropic(n), 0.0), 1e-10);
  }
}

TEST(Loop, GradientMatchesFiniteDifferences) {
  Rng rng(2024);
  const auto form = builtin::odd_decay_anisotropic(2);
  PerturbationForm mixed(2);
  Mat b = rng.normal_vector(16).reshaped(4, 4);
  mixed.add_term(Profile::gaussian(0.5, 1.5), b + b.transpose());
  mixed.add_term(Profile::odd_decay(), Mat::Identity(4, 4));
  for (int trial = 0; trial < 50; ++trial) {
    const auto& f = trial % 2 == 0 ? form : mixed;
    const auto loop = random_loop(rng, 16, 2);
    const double eps = 0.3;
    const Vec fd = fd_gradient(loop, f, eps, 1e-6);
    const Vec analytic = euclidean_gradient(loop, f, eps);
    EXPECT_LE((analytic - fd).norm(), 1e-5 * fd.norm()) << "trial " << trial;
    const Vec riemannian = gradient(loop, f, eps).coords();
    const Vec fd_riem = project_sphere_blocks(loop, fd);
    EXPECT_LE((riemannian - fd_riem).norm(), 1e-5 * fd_riem.norm()) << "trial " << trial;
  }
}

TEST(Loop, EuclideanHessianMatchesGradientDifferences) {
  // Differentiate the reference energy twice along random ambient directions.
  Rng rng(77);
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto loop = random_loop(rng, 12, 2);
  const Mat h = euclidean_hessian(loop, form, 0.4);
  EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = rng.normal_vector(loop.shape().size());
    const Vec w = rng.normal_vector(loop.shape().size());
    const double step = 1e-4;
    auto e = [&](double a, double b) {
      return reference_energy(loop.coords() + a * v + b * w, 12, 2, form, 0.4);
    };
    const double fd = (e(step, step) - e(step, -step) - e(-step, step) + e(-step, -step)) /
                      (4 * step * step);
    const double exact = v.dot(h * w);
    EXPECT_NEAR(exact, fd, 1e-4 * std::max(1.0, std::abs(exact)));
  }
}

TEST(Loop, ChartHessianMatchesGradientDifferences) {
  Rng rng(99);
  const auto form = builtin::odd_decay_anisotropic(2);
  for (int trial = 0; trial < 4; ++trial) {
    const auto loop = random_loop(rng, 16, 2);
    const LoopChart chart(loop);
    const int size = loop.shape().tangent_size();
    // at the base point and at an offset point
    for (double offset : {0.0, 0.05}) {
      const Vec c0 = offset * rng.normal_vector(size);
      const Mat h = chart.hessian(c0, form, 0.25);
      EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      const Vec v = rng.normal_vector(size);
      const double step = 1e-6;
      const Vec fd = (chart.gradient(c0 + step * v, form, 0.25) -
                      chart.gradient(c0 - step * v, form, 0.25)) /
                     (2 * step);
      EXPECT_LE((h * v - fd).norm(), 1e-4 * fd.norm());
    }
  }
}

TEST(Loop, AmbientHessianProperties) {
  Rng rng(8);
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto loop = random_loop(rng, 16, 2);
  const Mat h = hessian(loop, form, 0.2);
  EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  // normal directions are in the kernel; frame coordinates reproduce the tangent Hessian
  const int d = loop.shape().stride();
  Vec normal = Vec::Zero(loop.shape().size());
  for (int k = 0; k < loop.nodes(); ++k) normal.segment(k * d + 1, d - 1) = loop.x(k);
  EXPECT_LE((h * normal).norm(), 1e-10 * h.norm());
  const LoopChart chart(loop);
  Mat frame = Mat::Zero(loop.shape().size(), loop.shape().tangent_size());
  for (int k = 0; k < loop.nodes(); ++k) {
    frame.block(k * d, k * (d - 1), d, d - 1) = chart.frames()[k];
  }
  const Mat th = tangent_hessian(loop, form, 0.2);
  EXPECT_LE((frame.transpose() * h * frame - th).cwiseAbs().maxCoeff(), 1e-9);
}

// The second variation at a great circle, integrated over normal Fourier
// modes, is 2 pi^2 (k^2 - 1) for fields normalized to mean square 1/2.
TEST(Loop, SecondVariationAtNormalModes) {
  const int m = 256;
  const auto loop = circle(m, 2);
  const Mat h = hessian(loop, PerturbationForm(2), 0.0);
  for (int k = 0; k <= 3; ++k) {
    Vec field = Vec::Zero(loop.shape().size());
    Vec amplitude(m);
    for (int j = 0; j < m; ++j) {
      amplitude(j) = k == 0 ? 1.0 / std::sqrt(2.0) : std::sin(2 * kPi * k * j / m);
      field(j * 4 + 3) = amplitude(j);  // e_2 is normal to the (e_0, e_1) plane
    }
    const double value = field.dot(h * field);
    const double expected = 2 * kPi * kPi * (k * k - 1);
    // exact discrete oracle: M (2 - 2cos(2 pi k/M)) sum a^2 - M (2 - 2 cos(2 pi / M)) sum a^2
    const double discrete = m * (2 - 2 * std::cos(2 * kPi * k / m)) * amplitude.squaredNorm() -
                            m * (2 - 2 * std::cos(2 * kPi / m)) * amplitude.squaredNorm();
    EXPECT_NEAR(value, discrete, 1e-9 * std::max(1.0, std::abs(discrete)));
    if (k == 1) {
      EXPECT_NEAR(value, 0.0, 1e-9);
    } else {
      EXPECT_NEAR(value, expected, 0.02 * std::abs(expected)) << "k=" << k;
    }
  }
}

TEST(Loop, PhaseDirectionIsInHessianKernel) {
  const int m = 128;
  const auto loop = circle(m, 2, 0.3);
  const Mat h = hessian(loop, builtin::isotropic(2, Profile::odd_decay()), 0.0);
  Vec phase = Vec::Zero(loop.shape().size());
  for (int k = 0; k < m; ++k) {
    phase(k * 4 + 1) = -loop.x(k)(1);
    phase(k * 4 + 2) = loop.x(k)(0);
  }
  EXPECT_LE((h * phase).norm(), 1e-8);
}

TEST(Loop, O2ActionExamples) {
  Rng rng(12);
  const auto loop = random_loop(rng, 20, 2);
  EXPECT_EQ(o2_act(loop, 0, false).coords(), loop.coords());
  EXPECT_EQ(o2_act(o2_act(loop, 0, true), 0, true).coords(), loop.coords());
  EXPECT_THROW(o2_act(loop, 20, false), InvalidArgument);
  EXPECT_THROW(o2_act(loop, -1, false), InvalidArgument);
}

TEST(Loop, EnergyIsO2Invariant) {
  Rng rng(13);
  const auto form = builtin::odd_decay_anisotropic(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto loop = random_loop(rng, 32, 2);
    const double e = energy(loop, form, 0.7);
    for (int shift = 0; shift < 32; ++shift) {
      for (bool reflect : {false, true}) {
        const double moved = energy(o2_act(loop, shift, reflect), form, 0.7);
        EXPECT_LE(std::abs(moved - e), 1e-14 * std::abs(e));
      }
    }
  }
}

TEST(Loop, DoubleTraversalQuadruplesEnergy) {
  Rng rng(14);
  const auto loop = random_loop(rng, 32, 2);
  Vec r(64);
  Mat x(64, 3);
  for (int k = 0; k < 64; ++k) {
    r(k) = loop.r(k % 32);
    x.row(k) = loop.x(k % 32).transpose();
  }
  const double e = energy(loop, PerturbationForm(2), 0.0);
  EXPECT_NEAR(energy(DiscreteLoop(r, x), PerturbationForm(2), 0.0), 4 * e, 1e-6 * 4 * e);
}

TEST(Loop, TangentInnerProduct) {
  const auto loop = circle(16, 2);
  Vec c = Vec::Zero(loop.shape().size());
  for (int k = 0; k < 16; ++k) c(k * 4) = 2.0;
  const LoopTangent t(loop, c);
  EXPECT_DOUBLE_EQ(t.l2_norm(), 2.0);
}
