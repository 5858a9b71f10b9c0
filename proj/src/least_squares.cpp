#include "photospin/least_squares.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace photospin {

const Estimate& FitResult::operator[](std::string_view name) const {
  for (const auto& e : parameters)
    if (e.name == name) return e;
  for (const auto& e : derived)
    if (e.name == name) return e;
  throw std::out_of_range("no fit quantity named '" + std::string(name) + "'");
}

bool FitResult::has(std::string_view name) const {
  for (const auto& e : parameters)
    if (e.name == name) return true;
  for (const auto& e : derived)
    if (e.name == name) return true;
  return false;
}

Eigen::VectorXd FitResult::values() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(parameters.size()));
  for (std::size_t i = 0; i < parameters.size(); ++i) v(static_cast<Eigen::Index>(i)) = parameters[i].value;
  return v;
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& f, const Eigen::VectorXd& p) {
  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::MatrixXd jac;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = h0 * std::max(std::abs(p(i)), 1.0);
    Eigen::VectorXd lo = p, hi = p;
    lo(i) -= h;
    hi(i) += h;
    const Eigen::VectorXd d = (f(hi) - f(lo)) / (2.0 * h);
    if (jac.size() == 0) jac.resize(d.size(), p.size());
    jac.col(i) = d;
  }
  return jac;
}

namespace {

struct Trial {
  Eigen::VectorXd p;
  Eigen::VectorXd r;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

double safe_cost(const ResidualFunction& f, const Eigen::VectorXd& p, Eigen::VectorXd& r) {
  try {
    r = f(p);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  if (!r.allFinite()) return std::numeric_limits<double>::infinity();
  return r.squaredNorm();
}

Trial levenberg_marquardt(const ResidualFunction& f, const JacobianFunction& jac_fn,
                          Eigen::VectorXd p, const FitOptions& opt) {
  Trial t;
  t.p = p;
  t.cost = safe_cost(f, p, t.r);
  if (!std::isfinite(t.cost)) return t;

  double lambda = 1e-3;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    t.iterations = it;
    const Eigen::MatrixXd jac = jac_fn ? jac_fn(t.p) : finite_difference_jacobian(f, t.p);
    if (!jac.allFinite()) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * t.r;
    Eigen::VectorXd scale = jtj.diagonal();
    const double floor = std::max(scale.maxCoeff() * 1e-12, 1e-300);
    scale = scale.cwiseMax(floor);

    bool accepted = false;
    Eigen::VectorXd step;
    Eigen::VectorXd r_new;
    double cost_new = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * scale;
      step = damped.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      cost_new = safe_cost(f, t.p + step, r_new);
      if (cost_new <= t.cost) {
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at any damping: a stationary point.
      t.converged = true;
      return t;
    }
    const double decrease = t.cost - cost_new;
    const double step_rel = step.norm() / (t.p.norm() + opt.step_tolerance);
    t.p += step;
    t.r = r_new;
    t.cost = cost_new;
    lambda = std::max(lambda / 3.0, 1e-15);
    if (step_rel < opt.step_tolerance || decrease <= opt.cost_tolerance * cost_new ||
        cost_new < 1e-300) {
      t.converged = true;
      return t;
    }
  }
  return t;
}

}  // namespace

FitResult minimize(const ResidualFunction& residuals, const JacobianFunction& jacobian,
                   const Eigen::VectorXd& p0, const std::vector<ParameterSpec>& specs,
                   const FitOptions& options, bool absolute_sigma) {
  if (static_cast<std::size_t>(p0.size()) != specs.size()) {
    throw DomainError("parameter specification does not match the initial guess");
  }
  if (!p0.allFinite()) throw DomainError("initial guess must be finite");

  Trial best = levenberg_marquardt(residuals, jacobian, p0, options);
  for (const auto& start : options.extra_starts) {
    if (start.size() != p0.size()) throw DomainError("multi-start point has the wrong size");
    Trial t = levenberg_marquardt(residuals, jacobian, start, options);
    if (t.cost < best.cost) best = std::move(t);
  }
  if (!std::isfinite(best.cost)) {
    throw DomainError("model could not be evaluated at any starting point");
  }

  const Eigen::MatrixXd jac = jacobian ? jacobian(best.p) : finite_difference_jacobian(residuals, best.p);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const Eigen::Index n = jtj.rows();
  const auto m = static_cast<Eigen::Index>(best.r.size());

  // Singularity test on the correlation-scaled normal matrix.
  Eigen::VectorXd d = jtj.diagonal();
  std::vector<Eigen::Index> unidentified;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d(i) > 0.0)) {
      if (!options.singular_is_warning) {
        throw RankDeficiencyError("parameter '" + specs[static_cast<std::size_t>(i)].name +
                                      "' does not influence the model",
                                  specs[static_cast<std::size_t>(i)].name);
      }
      unidentified.push_back(i);
      d(i) = 1.0;
    }
  }
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = s.asDiagonal() * jtj * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(n - 1);
  const bool singular = m < n || !(lmin > 1e-13 * lmax);
  if (singular) {
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    if (!options.singular_is_warning) {
      throw RankDeficiencyError(
          "normal equations are singular; unidentifiable direction dominated by '" +
              specs[static_cast<std::size_t>(worst)].name + "'",
          specs[static_cast<std::size_t>(worst)].name);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (eig.eigenvalues()(k) > 1e-13 * lmax) break;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(eig.eigenvectors()(i, k)) > 0.1) unidentified.push_back(i);
      }
    }
  }
  Eigen::VectorXd inv_eigs = eig.eigenvalues();
  for (Eigen::Index k = 0; k < n; ++k) {
    inv_eigs(k) = inv_eigs(k) > 1e-13 * lmax ? 1.0 / inv_eigs(k) : 0.0;
  }

  FitResult out;
  out.covariance = s.asDiagonal() * (eig.eigenvectors() * inv_eigs.asDiagonal() *
                                     eig.eigenvectors().transpose()) *
                   s.asDiagonal();
  out.dof = static_cast<int>(m - n);
  if (!absolute_sigma && out.dof > 0) out.covariance *= best.cost / out.dof;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.residual_norm = best.cost;
  out.converged = best.converged;
  out.iterations = best.iterations;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& sp = specs[static_cast<std::size_t>(i)];
    out.parameters.push_back({sp.name, sp.unit, best.p(i), std::sqrt(std::max(out.covariance(i, i), 0.0))});
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (Eigen::Index i : unidentified) {
    out.covariance.row(i).setConstant(inf);
    out.covariance.col(i).setConstant(inf);
    out.parameters[static_cast<std::size_t>(i)].uncertainty = inf;
  }
  if (!unidentified.empty()) {
    out.warnings.push_back("singular normal equations: some parameters are not identified");
  }
  if (!out.converged) out.warnings.push_back("iteration cap reached; best point returned");
  return out;
}

}  // namespace photospin
