#pragma once

// Weighted nonlinear least squares: a damped Gauss-Newton (Levenberg-
// Marquardt) engine with covariance-based uncertainties.
//
// Models are function objects with a templated call operator
//
//   template <typename S>
//   Eigen::Matrix<S, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<S, Eigen::Dynamic, 1>& p) const;
//
// returning the prediction at every data point. The Jacobian is taken by
// forward-mode automatic differentiation unless finite differences are
// requested.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unsupported/Eigen/AutoDiff>
#include <vector>

#include "photospin/errors.hpp"

namespace photospin {

/// Forward-mode dual number used for model Jacobians; up to 16 parameters
/// without heap allocation.
using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 16, 1>>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct ParameterSpec {
  std::string name;
  std::string unit;
};

struct Estimate {
  std::string name;
  std::string unit;
  double value = 0.0;
  double uncertainty = 0.0;
};

struct FitResult {
  std::vector<Estimate> parameters;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  ///< weighted sum of squared residuals
  bool converged = false;
  int iterations = 0;
  int dof = 0;
  std::vector<Estimate> derived;  ///< quantities computed from the parameters
  std::vector<std::string> warnings;
  std::string uncertainty_model = "covariance (local quadratic)";

  /// Looks up a parameter, then a derived quantity. Throws std::out_of_range.
  const Estimate& operator[](std::string_view name) const;
  bool has(std::string_view name) const;
  Eigen::VectorXd values() const;
};

enum class JacobianMode { automatic, finite_difference };

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;  ///< on |dp| / (|p| + tol)
  double cost_tolerance = 1e-12;  ///< on relative decrease of the cost
  /// True: sigma are absolute errors. False: covariance is scaled by the
  /// reduced chi^2. Unset: true when sigma were supplied.
  std::optional<bool> absolute_sigma;
  JacobianMode jacobian = JacobianMode::automatic;
  std::vector<Eigen::VectorXd> extra_starts;  ///< multi-start points
  /// Report a singular optimum as a warning (infinite uncertainty along the
  /// null direction) instead of throwing RankDeficiencyError.
  bool singular_is_warning = false;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Central finite-difference Jacobian.
Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& f, const Eigen::VectorXd& p);

/// Minimizes |r(p)|^2. `jacobian` may be empty, in which case finite
/// differences are used. Throws RankDeficiencyError when the normal
/// equations at the optimum are singular.
FitResult minimize(const ResidualFunction& residuals, const JacobianFunction& jacobian,
                   const Eigen::VectorXd& p0, const std::vector<ParameterSpec>& specs,
                   const FitOptions& options, bool absolute_sigma);

/// Jacobian of a templated vector function by forward-mode AD.
template <typename Function>
Eigen::MatrixXd autodiff_jacobian(const Function& f, const Eigen::VectorXd& p) {
  const Eigen::Index n = p.size();
  if (n > 16) throw DomainError("automatic Jacobian supports at most 16 parameters");
  VectorX<Dual> x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i).value() = p(i);
    x(i).derivatives() = Eigen::VectorXd::Unit(n, i);
  }
  const VectorX<Dual> y = f(x);
  Eigen::MatrixXd jac(y.size(), n);
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    if (y(r).derivatives().size() == 0) {
      jac.row(r).setZero();
    } else {
      jac.row(r) = y(r).derivatives().transpose();
    }
  }
  return jac;
}

/// Fits `model` to `data` with per-point `sigma` (empty: unit weights).
template <typename Model>
FitResult least_squares(const Model& model, const Eigen::VectorXd& p0,
                        const std::vector<ParameterSpec>& specs, const Eigen::VectorXd& data,
                        const Eigen::VectorXd& sigma, const FitOptions& options = {}) {
  const bool weighted = sigma.size() > 0;
  if (weighted && sigma.size() != data.size()) throw DomainError("sigma and data lengths differ");
  if (!data.allFinite() || (weighted && !sigma.allFinite())) {
    throw DomainError("fit data and weights must be finite");
  }
  if (weighted && (sigma.array() <= 0.0).any()) throw DomainError("sigma must be positive");
  const Eigen::VectorXd w = weighted ? Eigen::VectorXd(sigma.cwiseInverse())
                                     : Eigen::VectorXd::Ones(data.size());

  ResidualFunction residuals = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd pred = model(VectorX<double>(p));
    return (pred - data).cwiseProduct(w);
  };
  JacobianFunction jacobian;
  if (options.jacobian == JacobianMode::automatic) {
    jacobian = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd {
      return w.asDiagonal() * autodiff_jacobian(model, p);
    };
  }
  return minimize(residuals, jacobian, p0, specs, options, options.absolute_sigma.value_or(weighted));
}

namespace detail {

/// J C J^T where non-finite entries of C mark unidentified parameters; any
/// output that depends on one of them gets infinite variance.
inline Eigen::MatrixXd transform_covariance(const Eigen::MatrixXd& jac, const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd finite = cov;
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (!std::isfinite(cov(i, i))) bad.push_back(i);
  }
  for (Eigen::Index i : bad) {
    finite.row(i).setZero();
    finite.col(i).setZero();
  }
  Eigen::MatrixXd out = jac * finite * jac.transpose();
  out = 0.5 * (out + out.transpose()).eval();
  const double inf = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < jac.rows(); ++r) {
    for (Eigen::Index i : bad) {
      if (jac(r, i) != 0.0) {
        out.row(r).setConstant(inf);
        out.col(r).setConstant(inf);
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Maps a result from internal to external parameters with the delta
/// method: values T(p), covariance J C J^T. `to_external` has the same
/// templated signature as a model.
template <typename Transform>
FitResult reparametrize(const FitResult& internal, const Transform& to_external,
                        const std::vector<ParameterSpec>& specs) {
  const Eigen::VectorXd p = internal.values();
  const Eigen::VectorXd q = to_external(VectorX<double>(p));
  const Eigen::MatrixXd jac = autodiff_jacobian(to_external, p);
  FitResult out = internal;
  out.covariance = detail::transform_covariance(jac, internal.covariance);
  out.parameters.clear();
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double var = out.covariance(i, i);
    out.parameters.push_back({specs.at(static_cast<std::size_t>(i)).name,
                              specs.at(static_cast<std::size_t>(i)).unit, q(i),
                              std::sqrt(std::max(var, 0.0))});
  }
  return out;
}

/// Delta-method estimate of a scalar function of the fitted parameters.
template <typename Function>
Estimate propagate(const FitResult& fit, std::string name, std::string unit, const Function& f) {
  const Eigen::VectorXd p = fit.values();
  auto wrapped = [&](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    VectorX<S> y(1);
    y(0) = f(x);
    return y;
  };
  const double value = wrapped(VectorX<double>(p))(0);
  const Eigen::MatrixXd jac = autodiff_jacobian(wrapped, p);
  const double var = detail::transform_covariance(jac, fit.covariance)(0, 0);
  return {std::move(name), std::move(unit), value, std::sqrt(std::max(var, 0.0))};
}

}  // namespace photospin
