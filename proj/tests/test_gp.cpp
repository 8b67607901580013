#include <doctest.h>

#include <numeric>

#include "lrr/gp.hpp"
#include "support.hpp"

using namespace lrr;

namespace {

// Posterior mean from an explicit dense solve on standardized targets.
Vector dense_oracle(const Matrix& x, const Matrix& y, const KernelFunction& k, const Vector& mu) {
  const Vector mean = y.colwise().mean().transpose();
  Vector scale(y.cols());
  for (Index l = 0; l < y.cols(); ++l) scale(l) = std::sqrt((y.col(l).array() - mean(l)).square().mean());
  const Matrix yt = (y.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  Matrix kk(x.rows(), x.rows());
  Vector ks(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    ks(i) = kernel_eval(k, x.row(i).transpose(), mu);
    for (Index j = 0; j < x.rows(); ++j) kk(i, j) = kernel_eval(k, x.row(i).transpose(), x.row(j).transpose());
  }
  const Vector latent = (ks.transpose() * kk.fullPivLu().solve(yt)).transpose();
  return mean + latent.cwiseProduct(scale);
}

}  // namespace

TEST_CASE("two-point linear kernel") {
  Matrix x(2, 2);
  x << 1, 2, 3, 1;
  Matrix y(2, 1);
  y << 4, -1;
  GpOptions raw;
  raw.standardize_targets = false;
  const auto m = gp_fit(x, y, KernelFunction::linear(), raw);
  Matrix inverse(2, 2);
  inverse << 10, -5, -5, 5;
  inverse /= 25.0;
  const Vector dual = inverse * y;
  CHECK((m.dual.col(0) - dual).norm() < 1e-10 * dual.norm());
  Vector mu(2);
  mu << 0.5, -1.0;
  Vector ks(2);
  ks << x.row(0).dot(mu), x.row(1).dot(mu);
  CHECK(gp_predict(m, mu).mean(0) == doctest::Approx(ks.dot(dual)).epsilon(1e-10));
}

TEST_CASE("posterior mean interpolates the training data") {
  const Matrix x = test::random_unit(12, 3, 1);
  const Matrix y = test::random_matrix(12, 4, 2);
  const auto m = gp_fit(x, y, KernelFunction::polynomial(1.0, 1.15, 6));
  for (Index i = 0; i < 12; ++i) {
    const Vector pred = gp_predict(m, x.row(i).transpose()).mean;
    CHECK((pred - y.row(i).transpose()).norm() < 1e-6 * y.row(i).norm());
  }

  const Matrix one_x = x.topRows(1), one_y = y.topRows(1);
  const auto single = gp_fit(one_x, one_y, KernelFunction::polynomial(1.0, 1.15, 6));
  CHECK((gp_predict(single, one_x.row(0).transpose()).mean - one_y.row(0).transpose()).norm() < 1e-10);
}

TEST_CASE("posterior mean matches a dense solve") {
  const Matrix x = test::random_unit(5, 2, 3);
  const Matrix y = test::random_matrix(5, 3, 4);
  const auto k = KernelFunction::polynomial(0.8, 1.0, 3);
  const auto m = gp_fit(x, y, k);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector mu = test::random_unit(2, 1, 10 + s).col(0);
    const Vector oracle = dense_oracle(x, y, k, mu);
    CHECK((gp_predict(m, mu).mean - oracle).norm() < 1e-8 * oracle.norm());
  }
}

TEST_CASE("posterior variance") {
  const Matrix x = test::random_unit(8, 2, 5);
  const Matrix y = test::random_matrix(8, 2, 6);
  const auto k = KernelFunction::rbf(2.0);
  const auto m = gp_fit(x, y, k);
  for (Index i = 0; i < 8; ++i) {
    const auto p = gp_predict(m, x.row(i).transpose(), true);
    CHECK(p.variance.size() == 2);
    CHECK(p.variance.maxCoeff() < 1e-8 * m.target_scale.squaredNorm());
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = gp_predict(m, test::random_unit(2, 1, 40 + s).col(0), true);
    CHECK(p.variance.minCoeff() >= 0.0);
  }
  const auto far = gp_predict(m, Vector::Constant(2, 50.0), true);
  CHECK(far.variance(0) == doctest::Approx(m.target_scale(0) * m.target_scale(0)).epsilon(1e-10));
}

TEST_CASE("batch prediction is bit-identical to single prediction") {
  const Matrix x = test::random_unit(20, 4, 7);
  const Matrix y = test::random_matrix(20, 10, 8);
  const auto m = gp_fit(x, y, KernelFunction::polynomial(1.0, 1.15, 6));
  const Matrix mus = test::random_unit(15, 4, 9);
  const Matrix batch = gp_predict_batch(m, mus);
  for (Index b = 0; b < 15; ++b) CHECK(batch.row(b).transpose() == gp_predict(m, mus.row(b).transpose()).mean);
  CHECK_THROWS_AS(gp_predict(m, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(gp_predict_batch(m, Matrix::Zero(2, 5)), Error);
}

TEST_CASE("training order does not matter") {
  const Matrix x = test::random_unit(10, 3, 11);
  const Matrix y = test::random_matrix(10, 2, 12);
  std::vector<Index> perm(10);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 gen(3);
  std::shuffle(perm.begin(), perm.end(), gen);
  const Matrix xp = x(perm, Eigen::all), yp = y(perm, Eigen::all);
  const auto k = KernelFunction::polynomial(1.0, 1.15, 4);
  const auto a = gp_fit(x, y, k), b = gp_fit(xp, yp, k);
  const Vector mu = test::random_unit(3, 1, 13).col(0);
  const Vector pa = gp_predict(a, mu).mean, pb = gp_predict(b, mu).mean;
  CHECK((pa - pb).norm() < 1e-9 * pa.norm());
}

TEST_CASE("targets scale through") {
  const Matrix x = test::random_unit(10, 2, 14);
  const Matrix y = test::random_matrix(10, 3, 15);
  const auto k = KernelFunction::polynomial(1.0, 1.0, 3);
  const Vector mu = test::random_unit(2, 1, 16).col(0);
  const Vector base = gp_predict(gp_fit(x, y, k), mu).mean;
  const Vector scaled = gp_predict(gp_fit(x, Matrix(y * 1e4), k), mu).mean;
  CHECK((scaled - 1e4 * base).norm() < 1e-9 * scaled.norm());

  Matrix constant = y;
  constant.col(1).setConstant(2.5);
  CHECK(gp_predict(gp_fit(x, constant, k), mu).mean(1) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("input validation") {
  Matrix x = test::random_unit(4, 2, 17);
  x.row(3) = x.row(1);
  try {
    gp_fit(x, test::random_matrix(4, 1, 1), KernelFunction::linear());
    FAIL("expected duplicate rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateParameters);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
  const Matrix ok = test::random_unit(4, 2, 18);
  CHECK_THROWS_AS(gp_fit(ok, test::random_matrix(3, 1, 1), KernelFunction::linear()), Error);
  Matrix bad = test::random_matrix(4, 1, 1);
  bad(2, 0) = std::nan("");
  CHECK_THROWS_AS(gp_fit(ok, bad, KernelFunction::linear()), Error);

  // An indefinite "kernel" cannot be rescued by a small jitter.
  try {
    gp_fit(ok, test::random_matrix(4, 1, 2), KernelFunction::polynomial(1.0, -5.0, 1));
    FAIL("expected a fit error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Fit);
  }
  const auto m = gp_fit(test::random_unit(6, 2, 19), test::random_matrix(6, 1, 3), KernelFunction::linear());
  CHECK(m.jitter > 0.0);
}

TEST_CASE("grid search ranks the generating kernel first") {
  const Matrix x = test::random_unit(40, 2, 20);
  Matrix y(40, 1);
  for (Index i = 0; i < 40; ++i) y(i, 0) = 1.0 + 2.0 * x(i, 0) * x(i, 1) + x(i, 0) * x(i, 0);
  const auto ranked = gp_grid_search(x, y, {KernelFunction::linear(), KernelFunction::polynomial(1.0, 1.0, 2)}, 5, 1);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].kernel == KernelFunction::polynomial(1.0, 1.0, 2));
  CHECK(ranked[0].mean_score > 0.999);
  CHECK(ranked[0].mean_score >= ranked[1].mean_score);
  CHECK_THROWS_AS(gp_grid_search(x, y, {}, 5, 1), Error);
  CHECK_THROWS_AS(gp_grid_search(x, y, {KernelFunction::linear()}, 1, 1), Error);
}
