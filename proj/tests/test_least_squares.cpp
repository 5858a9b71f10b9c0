#include <doctest.h>

#include <algorithm>
#include <random>

#include "photospin/fit_models.hpp"
#include "photospin/least_squares.hpp"

using namespace photospin;

namespace {

template <typename Model>
void check_jacobian(const Model& model, const Eigen::VectorXd& p) {
  const Eigen::MatrixXd ad = autodiff_jacobian(model, p);
  const Eigen::MatrixXd fd =
      finite_difference_jacobian([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(model(x)); }, p);
  REQUIRE(ad.rows() == fd.rows());
  const double scale = ad.cwiseAbs().maxCoeff();
  CHECK((ad - fd).cwiseAbs().maxCoeff() < 1e-6 * scale);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  double d = 0.0;
  const double n = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

struct Redundant {
  std::vector<double> x;
  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    VectorX<S> out(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<Eigen::Index>(i)) = (p(0) + p(1)) * S(x[i]);
    return out;
  }
};

}  // namespace

TEST_CASE("automatic and finite-difference Jacobians agree on every model") {
  std::vector<double> t;
  for (int i = -50; i <= 50; ++i) t.push_back(i * 1.3 + 0.2);
  check_jacobian(G2Model{t, false}, Eigen::Vector4d(4.0, 60.0, 2.0, 0.3));
  Eigen::VectorXd pv(5);
  pv << 4.0, 60.0, 2.0, 0.3, 0.8;
  check_jacobian(G2Model{t, true}, pv);
  check_jacobian(SaturationModel{{1, 5, 10, 50, 100, 300}}, Eigen::Vector2d(7800.0, 44.0));
  check_jacobian(LineModel{{0, 1, 2, 3}}, Eigen::Vector2d(1.0, 2.0));
  std::vector<double> f;
  for (double x = 15; x <= 90; x += 0.5) f.push_back(x);
  Eigen::VectorXd pl(6);
  pl << 72.0, 10.0, 3.0, 36.0, 5.0, 1.0;
  check_jacobian(LorentzianSumModel{f, 2}, pl);
  check_jacobian(PowerSaturationModel{{0.05, 0.1, 0.3, 0.5, 1.0}, 1}, Eigen::Vector2d(3.5, 0.59));
  check_jacobian(PowerSaturationModel{{0.05, 0.1, 0.3, 0.5, 1.0}, 2}, Eigen::Vector2d(1.2, 0.6));
}

TEST_CASE("straight line matches the closed-form normal equations") {
  const std::vector<double> x = {0, 1, 2, 3, 4, 5};
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 1.1, 2.9, 5.2, 7.1, 8.8, 11.2).finished();
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(6, 0.2);
  const auto fit = least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}}, y, s);
  Eigen::MatrixXd a(6, 2);
  for (int i = 0; i < 6; ++i) a.row(i) << 1.0 / 0.2, x[static_cast<std::size_t>(i)] / 0.2;
  const Eigen::Vector2d ref = (a.transpose() * a).ldlt().solve(a.transpose() * (y / 0.2));
  const Eigen::Matrix2d cov = (a.transpose() * a).inverse();
  CHECK(fit["b"].value == doctest::Approx(ref(0)).epsilon(1e-10));
  CHECK(fit["m"].value == doctest::Approx(ref(1)).epsilon(1e-10));
  CHECK(fit.covariance(0, 1) == doctest::Approx(cov(0, 1)).epsilon(1e-8));
  CHECK(fit["m"].uncertainty == doctest::Approx(std::sqrt(cov(1, 1))).epsilon(1e-8));
  CHECK(fit.converged);
  CHECK(fit.dof == 4);
}

TEST_CASE("unweighted fits scale the covariance by the reduced chi-square") {
  const std::vector<double> x = {0, 1, 2, 3, 4, 5};
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 1.1, 2.9, 5.2, 7.1, 8.8, 11.2).finished();
  const auto a = least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}}, y, {});
  FitOptions abs;
  abs.absolute_sigma = true;
  const auto b = least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}}, y, {}, abs);
  CHECK(a.covariance(1, 1) == doctest::Approx(b.covariance(1, 1) * a.residual_norm / a.dof));
}

TEST_CASE("finite-difference mode reaches the same optimum") {
  const std::vector<double> I = {2, 5, 10, 20, 40, 80, 160, 320};
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) y(i) = 7800.0 * I[i] / (44.0 + I[i]) * (1.0 + 0.01 * std::sin(i));
  FitOptions fd;
  fd.jacobian = JacobianMode::finite_difference;
  const auto a = least_squares(SaturationModel{I}, Eigen::Vector2d(5000, 20), {{"S", ""}, {"I0", ""}}, y, {});
  const auto b = least_squares(SaturationModel{I}, Eigen::Vector2d(5000, 20), {{"S", ""}, {"I0", ""}}, y, {}, fd);
  CHECK(a["I0"].value == doctest::Approx(b["I0"].value).epsilon(1e-7));
  CHECK(a["I0"].uncertainty == doctest::Approx(b["I0"].uncertainty).epsilon(1e-4));
}

TEST_CASE("redundant parameters are reported as rank deficient") {
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 1, 2, 3, 4).finished();
  try {
    least_squares(Redundant{{1, 2, 3, 4}}, Eigen::Vector2d(0.3, 0.2), {{"a", ""}, {"b", ""}}, y, {});
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK((e.direction() == "a" || e.direction() == "b"));
  }
  FitOptions warn;
  warn.singular_is_warning = true;
  const auto fit =
      least_squares(Redundant{{1, 2, 3, 4}}, Eigen::Vector2d(0.3, 0.2), {{"a", ""}, {"b", ""}}, y, {}, warn);
  CHECK(std::isinf(fit["a"].uncertainty));
  CHECK(!fit.warnings.empty());
  CHECK(fit["a"].value + fit["b"].value == doctest::Approx(1.0));
}

TEST_CASE("delta-method reparametrization") {
  const std::vector<double> x = {0, 1, 2, 3, 4, 5};
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y(i) = 2.0 + 0.5 * i + 0.05 * std::cos(3.0 * i);
  const auto fit = least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}}, y, {});
  const auto ext = reparametrize(
      fit, [](const auto& p) {
        using std::exp;
        auto q = p;
        q(1) = exp(p(1));
        return q;
      },
      {{"b", ""}, {"exp_m", ""}});
  CHECK(ext["exp_m"].value == doctest::Approx(std::exp(fit["m"].value)));
  CHECK(ext["exp_m"].uncertainty == doctest::Approx(std::exp(fit["m"].value) * fit["m"].uncertainty));
  const auto ratio = propagate(fit, "ratio", "", [](const auto& p) { return p(0) / p(1); });
  const double b = fit["b"].value, m = fit["m"].value;
  const Eigen::Vector2d g(1.0 / m, -b / (m * m));
  CHECK(ratio.uncertainty == doctest::Approx(std::sqrt(g.dot(fit.covariance * g))));
}

TEST_CASE("uncertainties are calibrated: z-scores pass a KS test") {
  const std::vector<double> I = {2, 5, 10, 20, 40, 80, 160, 320, 500};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> z_s, z_i;
  for (int r = 0; r < 200; ++r) {
    Eigen::VectorXd y(9), s(9);
    for (int i = 0; i < 9; ++i) {
      const double truth = 7800.0 * I[static_cast<std::size_t>(i)] / (44.0 + I[static_cast<std::size_t>(i)]);
      s(i) = 0.03 * truth;
      y(i) = truth + s(i) * noise(rng);
    }
    const auto fit = least_squares(SaturationModel{I}, Eigen::Vector2d(6000, 30), {{"S", ""}, {"I0", ""}}, y, s);
    z_s.push_back((fit["S"].value - 7800.0) / fit["S"].uncertainty);
    z_i.push_back((fit["I0"].value - 44.0) / fit["I0"].uncertainty);
  }
  const double critical = 1.358 / std::sqrt(200.0);
  CHECK(ks_statistic(z_s) < critical);
  CHECK(ks_statistic(z_i) < critical);
}

TEST_CASE("bad inputs raise") {
  const std::vector<double> x = {0, 1, 2};
  const Eigen::Vector3d y(1, 2, 3);
  CHECK_THROWS_AS(least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}}, y, {}), DomainError);
  CHECK_THROWS_AS(least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}}, y,
                                Eigen::Vector3d(1, 0, 1)),
                  DomainError);
  CHECK_THROWS_AS(least_squares(LineModel{x}, Eigen::Vector2d(0, 0), {{"b", ""}, {"m", ""}},
                                Eigen::Vector3d(1, NAN, 3), {}),
                  DomainError);
}
