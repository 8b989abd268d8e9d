#include "msopt/objectives.hpp"
#include "msopt/optim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace msopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<Vector> random_points(std::size_t count, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) {
    Vector p(dim);
    for (Eigen::Index j = 0; j < dim; ++j) p(j) = n(rng);
    out.push_back(p);
  }
  return out;
}

TrackingObjective random_tracking(std::uint64_t seed) {
  const std::size_t horizon = 6, nu = 2, ny = 3;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vector> ref;
  for (std::size_t k = 0; k <= horizon; ++k) ref.push_back(vec({n(rng), n(rng), n(rng)}));
  Matrix g(3, 3), h(2, 2);
  for (Eigen::Index i = 0; i < 9; ++i) g.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < 4; ++i) h.data()[i] = n(rng);
  return TrackingObjective(ref, g * g.transpose(), h * h.transpose() + Matrix::Identity(2, 2), horizon, nu, ny);
}

}  // namespace

TEST(Brockett, IdentityPoint) {
  const Matrix a = random_symmetric(3, 1);
  const BrockettObjective f(a);
  const Matrix q = Vector(vec({1, 2, 3})).asDiagonal();
  const Vector x = flatten(Matrix::Identity(3, 3));
  EXPECT_NEAR(f.value(x), (a * q).trace(), 1e-14);
  EXPECT_LE((f.gradient(x) - flatten(2.0 * a * q)).norm(), 1e-14);
}

TEST(Brockett, ZeroA) {
  const BrockettObjective f(Matrix::Zero(3, 3));
  const Vector x = random_points(1, 9, 2)[0];
  EXPECT_EQ(f.value(x), 0.0);
  EXPECT_EQ(f.gradient(x).norm(), 0.0);
  EXPECT_EQ(brockett_optimum(f), 0.0);
}

TEST(Brockett, GradientCheck) {
  const BrockettObjective f(random_symmetric(4, 3));
  EXPECT_LE(grad_check(f, random_points(50, 16, 4)), 1e-6);
  const auto [v, g] = f.value_grad(random_points(1, 16, 5)[0]);
  EXPECT_NEAR(v, f.value(random_points(1, 16, 5)[0]), 1e-13);
  EXPECT_LE((g - f.gradient(random_points(1, 16, 5)[0])).norm(), 1e-13);
}

TEST(Brockett, OptimumTwoByTwo) {
  const Matrix a = Vector(vec({1, 2})).asDiagonal();
  EXPECT_NEAR(brockett_optimum(BrockettObjective(a)), 4.0, 1e-14);
  // Enumerate signed permutations of O(2).
  const BrockettObjective f(a);
  double best = 1e300;
  for (const Vector& x : {vec({1, 0, 0, 1}), vec({0, 1, 1, 0}), vec({-1, 0, 0, 1}), vec({0, -1, 1, 0})})
    best = std::min(best, f.value(x));
  EXPECT_NEAR(best, 4.0, 1e-14);
}

TEST(Brockett, OptimumMatchesSearchOnO3) {
  const BrockettObjective f(random_symmetric(3, 6));
  const Manifold m = Manifold::orthogonal(3);
  const auto samples = m.sample_uniform(100000, 7);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < samples.size(); ++i) ranked.emplace_back(f.value(samples[i]), i);
  std::partial_sort(ranked.begin(), ranked.begin() + 5, ranked.end());
  double best = ranked[0].first;
  for (int k = 0; k < 5; ++k) {
    const RunRecord rec = riemannian_gd_baseline(m, f, samples[ranked[k].second], 0.02, 20000, 1e-10);
    best = std::min(best, rec.rows.back().objective);
  }
  EXPECT_NEAR(best, brockett_optimum(f), 1e-3);
}

TEST(Brockett, OptimumLowerBoundsHaarSamples) {
  const BrockettObjective f(random_symmetric(4, 8));
  const double opt = brockett_optimum(f);
  for (const Vector& x : Manifold::orthogonal(4).sample_uniform(10000, 9)) EXPECT_GE(f.value(x) - opt, -1e-9);
}

TEST(Brockett, SignInvariance) {
  const BrockettObjective f(random_symmetric(4, 10));
  std::mt19937_64 rng(11);
  for (const Vector& x : random_points(20, 16, 12)) {
    Vector signs(4);
    for (int i = 0; i < 4; ++i) signs(i) = (rng() & 1) ? 1.0 : -1.0;
    const Matrix xd = unflatten(x, 4, 4) * signs.asDiagonal();
    EXPECT_NEAR(f.value(flatten(xd)), f.value(x), 1e-12);
  }
}

TEST(Brockett, Rejections) {
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  EXPECT_THROW(BrockettObjective{asym}, InvalidArgument);
  EXPECT_THROW(BrockettObjective(Matrix::Identity(2, 2)).value(Vector::Zero(3)), InvalidArgument);
  Matrix full_q(2, 2);
  full_q << 1, 0.5, 0.5, 2;
  EXPECT_THROW(brockett_optimum(BrockettObjective(Matrix::Identity(2, 2), full_q)), InvalidArgument);
}

TEST(Tracking, PerfectTrackingIsZero) {
  const TrackingObjective f = random_tracking(1);
  Vector z = Vector::Zero(static_cast<Eigen::Index>(f.dim()));
  for (std::size_t k = 0; k <= f.horizon(); ++k) z.segment(f.output_offset(k), 3) = f.reference()[k];
  EXPECT_NEAR(f.value(z), 0.0, 1e-15);
  EXPECT_LE(f.gradient(z).norm(), 1e-15);
}

TEST(Tracking, ScalarExample) {
  const TrackingObjective f({vec({0.5}), vec({-1.0})}, Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1, 1, 1);
  EXPECT_EQ(f.dim(), 3u);
  EXPECT_NEAR(f.value(vec({2.0, 0.5, 2.0})), 13.0, 1e-15);
}

TEST(Tracking, GradientCheckAndNonNegativity) {
  const TrackingObjective f = random_tracking(2);
  const auto pts = random_points(50, static_cast<Eigen::Index>(f.dim()), 3);
  EXPECT_LE(grad_check(f, pts), 1e-6);
  for (const Vector& z : pts) EXPECT_GT(f.value(z), 0.0);
}

TEST(Tracking, Layout) {
  const TrackingObjective f = random_tracking(4);
  EXPECT_EQ(f.dim(), 6u * 2 + 7u * 3);
  EXPECT_EQ(f.input_offset(1), 2);
  EXPECT_EQ(f.output_offset(0), 12);
  EXPECT_THROW(f.value(Vector::Zero(5)), InvalidArgument);
}

TEST(Tracking, Rejections) {
  const std::vector<Vector> ref(3, vec({0.0}));
  EXPECT_THROW(TrackingObjective(ref, -Matrix::Identity(1, 1), Matrix::Identity(1, 1), 2, 1, 1), InvalidArgument);
  EXPECT_THROW(TrackingObjective(ref, Matrix::Identity(1, 1), Matrix::Zero(1, 1), 2, 1, 1), InvalidArgument);
  EXPECT_THROW(TrackingObjective(ref, Matrix::Identity(1, 1), Matrix::Identity(1, 1), 3, 1, 1), InvalidArgument);
}

TEST(Linear, ValueGradientAndCheck) {
  const LinearObjective f(vec({1, -2, 0.5}));
  EXPECT_NEAR(f.value(vec({1, 1, 2})), 0.0, 1e-15);
  EXPECT_LE(grad_check(f, random_points(20, 3, 5)), 1e-10);
  EXPECT_THROW(LinearObjective(Vector::Zero(3)), InvalidArgument);
}

TEST(Rescaled, ChainRule) {
  auto inner = std::make_shared<TrackingObjective>(random_tracking(6));
  const auto d = static_cast<Eigen::Index>(inner->dim());
  const Vector offset = random_points(1, d, 7)[0];
  const Vector scale = random_points(1, d, 8)[0].cwiseAbs().array() + 0.5;
  const RescaledObjective g(inner, offset, scale);
  const Vector z = random_points(1, d, 9)[0];
  EXPECT_NEAR(g.value(z), inner->value(offset + scale.cwiseProduct(z)), 1e-12);
  EXPECT_LE(grad_check(g, random_points(50, d, 10)), 1e-6);
  EXPECT_LE((g.from_original(g.to_original(z)) - z).norm(), 1e-13);
}

TEST(Reference, Shapes) {
  for (ReferenceShape s : {ReferenceShape::sinusoid, ReferenceShape::circle_arc, ReferenceShape::figure_eight}) {
    EXPECT_EQ(parse_reference_shape(to_string(s)), s);
    const auto planar = make_reference(s, 20, 0.05, 3, true);
    ASSERT_EQ(planar.size(), 21u);
    for (const Vector& r : planar) {
      EXPECT_EQ(r.size(), 3);
      EXPECT_EQ(r(2), 0.0);
      EXPECT_TRUE(all_finite(r));
    }
    const auto angular = make_reference(s, 20, 0.1, 2, false);
    for (const Vector& r : angular) EXPECT_EQ(r(1), 0.0);
  }
  EXPECT_THROW(parse_reference_shape("spiral"), InvalidArgument);
}

TEST(Reference, CircleArcRadius) {
  for (const Vector& r : make_reference(ReferenceShape::circle_arc, 20, 0.05, 3, true)) {
    EXPECT_NEAR((r.head(2) - vec({0.0, 0.5})).norm(), 0.5, 1e-12);
  }
}

TEST(Reference, CsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "msopt_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ref.csv";
  std::ofstream(path) << "0,1\n0.5,0.25\n";
  const auto ref = load_reference_csv(path, 2);
  ASSERT_EQ(ref.size(), 2u);
  EXPECT_EQ(ref[1], vec({0.5, 0.25}));
  EXPECT_THROW(load_reference_csv(path, 3), InvalidArgument);
}
