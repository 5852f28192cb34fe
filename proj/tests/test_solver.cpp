#include "cylgeo/error.hpp"
#include "cylgeo/random.hpp"
#include "cylgeo/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace cylgeo;

namespace {

constexpr double kPi = std::numbers::pi;

// Distance from a loop to the nearest great circle at the same r-level: the
// best-fit plane of the sphere nodes gives (p, q), then align over shifts.
double distance_to_great_circles(const DiscreteLoop& loop) {
  const Mat x = loop.x_values();
  Eigen::SelfAdjointEigenSolver<Mat> es(x.transpose() * x);
  const int dim = static_cast<int>(x.cols());
  Vec p = es.eigenvectors().col(dim - 1);
  Vec q = es.eigenvectors().col(dim - 2);
  q -= p * p.dot(q);
  q.normalize();
  const CircleParam c{loop.r_values().mean(), p, q};
  return align(great_circle(c, loop.nodes()), loop).distance;
}

}  // namespace

TEST(Solver, GreatCircleIsAlreadyCritical) {
  const auto cert = refine(great_circle(standard_circle(2), 64), PerturbationForm(2), 0.0);
  EXPECT_EQ(cert.newton_steps, 0);
  EXPECT_EQ(cert.descent_steps, 0);
  EXPECT_NEAR(cert.energy, 2 * kPi * kPi, 0.05);
  EXPECT_LE(cert.residual, 1e-9);
  EXPECT_FALSE(cert.trivial);
  EXPECT_TRUE(cert.in_bracket);
  EXPECT_EQ(cert.spectrum.kernel_dim, 4);
}

TEST(Solver, RefinedReducedPointMatchesPhi) {
  const auto form = builtin::odd_decay_anisotropic(2);
  SearchConfig cfg;
  cfg.starts = 32;
  const auto report = find_gamma_critical_points(form, cfg);
  ASSERT_FALSE(report.critical_points.empty());
  const auto& param = report.critical_points.back().param;
  const int m = 64;
  const double eps = 0.02;
  const auto w = compute_w(param, form, eps, m);
  const auto cert = refine(corrected_loop(param, w, m), form, eps);
  EXPECT_LE(cert.residual, 1e-9);
  EXPECT_NEAR(cert.energy, phi(param, form, eps, m), 1e-6);
  // fresh recomputation matches the stored residual
  EXPECT_NEAR(residual_norm(cert.loop, form, eps), cert.residual, 1e-12);
}

TEST(Solver, NearConstantLoopIsTrivial) {
  Rng rng(8);
  const int m = 32;
  Vec r(m);
  Mat x(m, 3);
  for (int k = 0; k < m; ++k) {
    r(k) = 0.3 + 0.01 * rng.normal();
    x.row(k) = (Vec::Unit(3, 0) + 0.01 * rng.normal_vector(3)).normalized().transpose();
  }
  const auto cert = refine(DiscreteLoop(r, x), builtin::odd_decay_anisotropic(2), 0.02);
  EXPECT_TRUE(cert.trivial);
  EXPECT_LE(cert.energy, 1e-12);
  EXPECT_LE(cert.residual, 1e-9);
  EXPECT_EQ(cert.spectrum.morse_index, 0);
}

TEST(Solver, DescentIsMonotone) {
  // a tilted, wobbly loop far from critical: the descent phase must run
  const int m = 32;
  const auto start = sample_loop(
      m, 2, [](double t) { return 0.2 * std::sin(2 * kPi * t); },
      [](double t) {
        return Vec((Vec(3) << std::cos(2 * kPi * t), std::sin(2 * kPi * t), 0.4 * std::sin(6 * kPi * t))
                       .finished()
                       .normalized());
      });
  const auto form = builtin::odd_decay_anisotropic(2);
  const double initial = energy(start, form, 0.01);
  const auto cert = refine(start, form, 0.01);
  EXPECT_GT(cert.descent_steps, 0);
  ASSERT_EQ(static_cast<int>(cert.descent_energies.size()), cert.descent_steps + 1);
  EXPECT_EQ(cert.descent_energies.front(), initial);
  for (size_t i = 1; i < cert.descent_energies.size(); ++i) {
    EXPECT_LT(cert.descent_energies[i], cert.descent_energies[i - 1]);
  }
  EXPECT_LE(cert.residual, 1e-9);
}

TEST(Solver, DivergenceCarriesTrace) {
  const auto start = sample_loop(
      32, 2, [](double) { return 0.0; },
      [](double t) {
        return Vec((Vec(3) << std::cos(2 * kPi * t), std::sin(2 * kPi * t), 0.5 * std::sin(6 * kPi * t))
                       .finished()
                       .normalized());
      });
  RefineOptions opts;
  opts.max_descent_steps = 1;
  opts.switch_tol = 1e-12;
  try {
    refine(start, PerturbationForm(2), 0.0, opts);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
    EXPECT_GE(e.trace().size(), 1u);
  }
}

TEST(Solver, ContinuationExamples) {
  const auto c = standard_circle(2, 0.5);
  const auto unperturbed = continuation(c, builtin::odd_decay_anisotropic(2), {0.0}, 64);
  ASSERT_EQ(unperturbed.size(), 1u);
  EXPECT_EQ(unperturbed[0].loop.coords(), great_circle(c, 64).coords());

  const auto zero = continuation(c, PerturbationForm(2), {0.0, 0.1, 0.5}, 64);
  ASSERT_EQ(zero.size(), 3u);
  for (const auto& cert : zero) {
    EXPECT_EQ(cert.loop.coords(), zero[0].loop.coords());
    EXPECT_EQ(cert.energy, zero[0].energy);
  }
  EXPECT_EQ(branch_lipschitz(zero), 0.0);
  EXPECT_THROW(continuation(c, PerturbationForm(2), {0.1, 0.0}, 64), InvalidArgument);
}

TEST(Solver, ContinuationBranchIsContinuousAndApproachesCircles) {
  const auto form = builtin::odd_decay_anisotropic(2);
  SearchConfig cfg;
  cfg.starts = 32;
  const auto report = find_gamma_critical_points(form, cfg);
  ASSERT_FALSE(report.critical_points.empty());
  const auto& param = report.critical_points.back().param;
  const auto branch = continuation(param, form, {0.0, 0.01, 0.02, 0.04}, 64);
  ASSERT_EQ(branch.size(), 4u);
  const double lip = branch_lipschitz(branch);
  EXPECT_GT(lip, 0.0);
  EXPECT_LT(lip, 100.0);
  for (size_t i = 1; i < branch.size(); ++i) {
    EXPECT_LE(std::abs(branch[i].energy - branch[i - 1].energy),
              lip * std::abs(branch[i].eps - branch[i - 1].eps) * (1 + 1e-12));
  }
  // distance to the family of great circles shrinks linearly with eps
  const double d1 = distance_to_great_circles(branch[1].loop);
  const double d2 = distance_to_great_circles(branch[2].loop);
  const double d4 = distance_to_great_circles(branch[3].loop);
  EXPECT_LE(d1, 1.0 * 0.01);
  EXPECT_LE(d2, 1.0 * 0.02);
  EXPECT_NEAR(d4 / d2, 2.0, 0.3);
}

TEST(Solver, ResidualIsReproducible) {
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto param = sample_circle_params(2, 1, 1.0, 2).front();
  const auto w = compute_w(param, form, 0.01, 64);
  const auto start = corrected_loop(param, w, 64);
  const auto a = refine(start, form, 0.01);
  const auto b = refine(start, form, 0.01);
  EXPECT_EQ(a.loop.coords(), b.loop.coords());
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(Solver, MultiplicityOnSphereTwo) {
  MultiplicityConfig cfg;
  cfg.nodes = 64;
  cfg.search.starts = 32;
  const auto report = multiplicity_experiment(builtin::odd_decay_anisotropic(2), 0.02, cfg);
  EXPECT_TRUE(report.h1);
  EXPECT_TRUE(report.h2);
  EXPECT_EQ(report.target, 4);
  EXPECT_GE(report.count, 4);
  EXPECT_EQ(report.status, "ok");
  EXPECT_GE(report.min_pairwise_distance, 10 * report.dedup_tol);
  for (const auto& orbit : report.orbits) {
    EXPECT_LE(orbit.representative.residual, 1e-9);
    EXPECT_FALSE(orbit.representative.trivial);
  }
}

TEST(Solver, MultiplicityZeroFormIsDegenerate) {
  MultiplicityConfig cfg;
  cfg.nodes = 32;
  cfg.search.starts = 4;
  const auto report = multiplicity_experiment(PerturbationForm(2), 0.02, cfg);
  EXPECT_EQ(report.status, "degenerate");
  EXPECT_EQ(report.count, 0);
  EXPECT_TRUE(report.reduction.gamma_identically_zero);
}

TEST(Solver, MultiplicityOnCylinder) {
  MultiplicityConfig cfg;
  cfg.nodes = 64;
  cfg.search.starts = 8;
  const auto form = builtin::isotropic(1, Profile::gaussian(0.0, 1.0));
  const auto report = multiplicity_experiment(form, 0.02, cfg);
  ASSERT_TRUE(report.cylinder.has_value());
  EXPECT_TRUE(report.cylinder->sign_change);
  EXPECT_EQ(report.target, 1);
  EXPECT_GE(report.count, 1);
  ASSERT_FALSE(report.orbits.empty());
  EXPECT_NEAR(report.orbits.front().representative.normal_form.mean_r, 0.0, 0.1);
}

TEST(Solver, MultiplicityIsThreadIndependent) {
  MultiplicityConfig cfg;
  cfg.nodes = 32;
  cfg.search.starts = 16;
  const auto form = builtin::odd_decay_anisotropic(2);
  const auto a = multiplicity_experiment(form, 0.02, cfg);
  cfg.threads = 2;
  const auto b = multiplicity_experiment(form, 0.02, cfg);
  ASSERT_EQ(a.orbits.size(), b.orbits.size());
  for (size_t i = 0; i < a.orbits.size(); ++i) {
    EXPECT_EQ(a.orbits[i].representative.loop.coords(), b.orbits[i].representative.loop.coords());
  }
}
