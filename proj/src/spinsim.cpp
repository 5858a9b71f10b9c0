#include "photospin/spinsim.hpp"

#include <algorithm>
#include <atomic>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace photospin {

namespace {

using cd = std::complex<double>;

Liouvillian left(const Matrix4c& a) {  // rho -> a rho
  Liouvillian out = Liouvillian::Zero();
  for (int c = 0; c < 4; ++c) out.block<4, 4>(4 * c, 4 * c) = a;
  return out;
}

Liouvillian right(const Matrix4c& b) {  // rho -> rho b
  Liouvillian out = Liouvillian::Zero();
  for (int c = 0; c < 4; ++c) {
    for (int cp = 0; cp < 4; ++cp) {
      out.block<4, 4>(4 * c, 4 * cp) = b(cp, c) * Matrix4c::Identity();
    }
  }
  return out;
}

Liouvillian sandwich(const Matrix4c& a, const Matrix4c& b) {  // rho -> a rho b
  Liouvillian out;
  for (int c = 0; c < 4; ++c) {
    for (int cp = 0; cp < 4; ++cp) out.block<4, 4>(4 * c, 4 * cp) = b(cp, c) * a;
  }
  return out;
}

Liouvillian commutator(const Matrix4c& h) {
  constexpr cd i2pi(0.0, 2.0 * std::numbers::pi);
  return -i2pi * (left(h) - right(h));
}

void check_invariants(const Matrix4c& rho, double t, InvariantReport& report,
                      const InvariantTolerance& tol) {
  const double trace_dev = std::abs(rho.trace() - cd(1.0, 0.0));
  const double herm_dev = (rho - rho.adjoint()).norm();
  const Matrix4c hermitian = 0.5 * (rho + rho.adjoint());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix4c>(hermitian, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  report.max_trace_deviation = std::max(report.max_trace_deviation, trace_dev);
  report.max_hermiticity_deviation = std::max(report.max_hermiticity_deviation, herm_dev);
  report.min_eigenvalue = std::min(report.min_eigenvalue, min_eig);
  ++report.accepted_steps;
  if (!(trace_dev <= tol.trace) || !(herm_dev <= tol.hermiticity) || !(min_eig >= tol.min_eigenvalue)) {
    throw IntegrationError("density matrix invariant violated at t = " + std::to_string(t) +
                           " us (trace dev " + std::to_string(trace_dev) + ", hermiticity dev " +
                           std::to_string(herm_dev) + ", min eigenvalue " + std::to_string(min_eig) +
                           "); retry with a smaller integration tolerance");
  }
}

}  // namespace

SpinOperators spin_operators() {
  SpinOperators s;
  const double r3 = std::sqrt(3.0) / 2.0;
  Matrix4c plus = Matrix4c::Zero();  // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>
  plus(0, 1) = 2.0 * r3;
  plus(1, 2) = 2.0;
  plus(2, 3) = 2.0 * r3;
  const Matrix4c minus = plus.adjoint();
  s.Sx = 0.5 * (plus + minus);
  s.Sy = cd(0.0, -0.5) * (plus - minus);
  s.Sz = Eigen::Vector4cd(1.5, 0.5, -0.5, -1.5).asDiagonal();
  return s;
}

void DriveConfig::validate() const {
  if (!(Omega1 >= 0.0) || !std::isfinite(Omega1)) throw ConfigurationError("Omega1 must be >= 0");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigurationError("drive frequency must be >= 0");
  if (!std::isfinite(D)) throw ConfigurationError("D must be finite");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigurationError("duration must be > 0");
}

DissipatorSet DissipatorSet::build(double alpha_per_ms, double beta_per_us, double delta_per_ms) {
  if (!(alpha_per_ms >= 0.0) || !(beta_per_us >= 0.0) || !(delta_per_ms >= 0.0)) {
    throw ConfigurationError("dissipator rates must be nonnegative");
  }
  DissipatorSet d;
  d.alpha = alpha_per_ms;
  d.beta = beta_per_us;
  d.delta = delta_per_ms;
  const double alpha = alpha_per_ms * 1e-3;
  const double delta = delta_per_ms * 1e-3;
  const double gamma = 0.75 * alpha;

  Matrix4c la = Matrix4c::Zero();
  la(0, 1) = la(1, 0) = la(2, 3) = la(3, 2) = std::sqrt(gamma);
  la(1, 2) = la(2, 1) = std::sqrt(alpha);
  d.operators[0] = std::sqrt(2.0) * la;
  d.operators[1] = std::sqrt(2.0 * beta_per_us) * spin_operators().Sz;

  const double sd = std::sqrt(delta);
  const std::array<std::array<int, 2>, 4> single = {{{1, 0}, {1, 3}, {2, 0}, {2, 3}}};
  for (std::size_t k = 0; k < single.size(); ++k) {
    Matrix4c l = Matrix4c::Zero();
    l(single[k][0], single[k][1]) = sd;
    d.operators[2 + k] = l;
  }
  Matrix4c l5 = Matrix4c::Zero();
  l5(1, 2) = l5(2, 1) = sd;
  d.operators[6] = l5;
  return d;
}

Matrix4c hamiltonian(double t_us, const DriveConfig& cfg) {
  const auto s = spin_operators();
  Matrix4c h = cfg.D * (s.Sz * s.Sz - 1.25 * Matrix4c::Identity());
  if (cfg.Omega1 != 0.0) {
    h += cfg.Omega1 * std::cos(2.0 * std::numbers::pi * cfg.omega * t_us) * (s.Sx + s.Sz);
  }
  return h;
}

template <DissipatorOrdering Ordering>
LiouvillianParts liouvillian(const DriveConfig& cfg, const DissipatorSet& diss) {
  const auto s = spin_operators();
  LiouvillianParts parts;
  parts.static_part = commutator(cfg.D * (s.Sz * s.Sz - 1.25 * Matrix4c::Identity()));
  for (const Matrix4c& op : diss.operators) {
    const Matrix4c jump = Ordering == DissipatorOrdering::canonical ? op : Matrix4c(op.adjoint());
    const Matrix4c jj = jump.adjoint() * jump;
    parts.static_part += sandwich(jump, jump.adjoint()) - 0.5 * (left(jj) + right(jj));
  }
  parts.drive = commutator(cfg.Omega1 * (s.Sx + s.Sz));
  return parts;
}

DensityVector vectorize(const Matrix4c& rho) {
  return Eigen::Map<const DensityVector>(rho.data());
}

Matrix4c unvectorize(const DensityVector& v) {
  return Eigen::Map<const Matrix4c>(v.data());
}

template <DissipatorOrdering Ordering>
Matrix4c steady_state(double D, const DissipatorSet& diss) {
  DriveConfig cfg;
  cfg.D = D;
  const Liouvillian l = liouvillian<Ordering>(cfg, diss).static_part;
  Eigen::JacobiSVD<Liouvillian> svd(l, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(14) > 1e-10 * sv(0))) {
    throw DegeneracyError("undriven steady state is not unique; enable relaxation or pumping");
  }
  Matrix4c rho = unvectorize(svd.matrixV().col(15));
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

void InvariantReport::merge(const InvariantReport& other) {
  if (other.accepted_steps == 0) return;
  if (accepted_steps == 0) {
    *this = other;
    return;
  }
  max_trace_deviation = std::max(max_trace_deviation, other.max_trace_deviation);
  max_hermiticity_deviation = std::max(max_hermiticity_deviation, other.max_hermiticity_deviation);
  min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
  accepted_steps += other.accepted_steps;
}

template <DissipatorOrdering Ordering>
Evolution evolve(const Matrix4c& rho0, const DriveConfig& cfg, const DissipatorSet& diss,
                 const EvolveOptions& options) {
  namespace odeint = boost::numeric::odeint;
  // Real form [Re vec(rho); Im vec(rho)] keeps the inner loop free of complex
  // multiplications.
  using State = std::array<double, 32>;
  using RealGenerator = Eigen::Matrix<double, 32, 32>;
  using RealVector = Eigen::Matrix<double, 32, 1>;
  cfg.validate();
  if (!(options.abs_tol > 0.0) || !(options.rel_tol > 0.0)) {
    throw ConfigurationError("integration tolerances must be positive");
  }

  const LiouvillianParts parts = liouvillian<Ordering>(cfg, diss);
  auto realify = [](const Liouvillian& l) {
    RealGenerator r;
    r << l.real(), -l.imag(), l.imag(), l.real();
    return r;
  };
  const RealGenerator static_part = realify(parts.static_part);
  const RealGenerator drive = realify(parts.drive);
  const double two_pi_omega = 2.0 * std::numbers::pi * cfg.omega;
  auto rhs = [&](const State& x, State& dxdt, double t) {
    const Eigen::Map<const RealVector> v(x.data());
    Eigen::Map<RealVector> out(dxdt.data());
    out.noalias() = static_part * v;
    if (cfg.Omega1 != 0.0) out.noalias() += std::cos(two_pi_omega * t) * (drive * v);
  };
  auto to_matrix = [](const State& s) {
    Matrix4c rho;
    for (int k = 0; k < 16; ++k) rho.data()[k] = cd(s[static_cast<std::size_t>(k)], s[static_cast<std::size_t>(k + 16)]);
    return rho;
  };

  double max_dt = options.max_dt;
  if (!(max_dt > 0.0)) {
    const double fastest = std::max(cfg.omega, cfg.Omega1);
    max_dt = fastest > 0.0 ? 1.0 / (20.0 * fastest) : cfg.duration / 100.0;
  }
  max_dt = std::min(max_dt, cfg.duration);

  Evolution ev;
  ev.invariants.min_eigenvalue = std::numeric_limits<double>::infinity();
  State x;
  for (int k = 0; k < 16; ++k) {
    x[static_cast<std::size_t>(k)] = rho0.data()[k].real();
    x[static_cast<std::size_t>(k + 16)] = rho0.data()[k].imag();
  }
  double last_t = 0.0;
  Eigen::Vector4d last_pop = rho0.diagonal().real();
  Eigen::Vector4d integral = Eigen::Vector4d::Zero();
  auto observer = [&](const State& s, double t) {
    const Matrix4c rho = to_matrix(s);
    check_invariants(rho, t, ev.invariants, options.tolerance);
    const Eigen::Vector4d pop = rho.diagonal().real();
    integral += 0.5 * (t - last_t) * (pop + last_pop);
    last_t = t;
    last_pop = pop;
    if (options.record_trajectory) {
      ev.times.push_back(t);
      ev.states.push_back(rho);
    }
  };

  auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, max_dt,
                                         odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, rhs, x, 0.0, cfg.duration, std::min(max_dt, 1e-3), observer);
  ev.final_state = to_matrix(x);
  ev.mean_populations = integral / cfg.duration;
  return ev;
}

template LiouvillianParts liouvillian<DissipatorOrdering::canonical>(const DriveConfig&, const DissipatorSet&);
template LiouvillianParts liouvillian<DissipatorOrdering::adjoint_jump>(const DriveConfig&, const DissipatorSet&);
template Matrix4c steady_state<DissipatorOrdering::canonical>(double, const DissipatorSet&);
template Matrix4c steady_state<DissipatorOrdering::adjoint_jump>(double, const DissipatorSet&);
template Evolution evolve<DissipatorOrdering::canonical>(const Matrix4c&, const DriveConfig&,
                                                         const DissipatorSet&, const EvolveOptions&);
template Evolution evolve<DissipatorOrdering::adjoint_jump>(const Matrix4c&, const DriveConfig&,
                                                       const DissipatorSet&, const EvolveOptions&);

std::vector<double> frequency_grid(double start_mhz, double stop_mhz, double step_mhz) {
  if (!(step_mhz > 0.0) || !(stop_mhz >= start_mhz)) throw ConfigurationError("invalid frequency grid");
  const auto n = static_cast<std::size_t>(std::floor((stop_mhz - start_mhz) / step_mhz + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start_mhz + static_cast<double>(i) * step_mhz;
  return out;
}

namespace {

template <DissipatorOrdering Ordering>
SimulatedSpectrum sweep_impl(const std::vector<double>& freqs, const DriveConfig& cfg,
                             const DissipatorSet& diss, const SweepOptions& options) {
  cfg.validate();
  const Matrix4c rho_ss = steady_state<Ordering>(cfg.D, diss);
  const double half_ss = rho_ss(1, 1).real() + rho_ss(2, 2).real();

  SimulatedSpectrum out;
  out.spectrum.frequency_mhz = freqs;
  out.spectrum.contrast_percent.assign(freqs.size(), 0.0);
  out.invariants.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<InvariantReport> reports(freqs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < freqs.size(); i = next++) {
      try {
        DriveConfig c = cfg;
        c.omega = freqs[i];
        const Evolution ev = evolve<Ordering>(rho_ss, c, diss, options.evolve);
        const double half = options.observable == ContrastObservable::final_half_population
                                ? ev.final_state(1, 1).real() + ev.final_state(2, 2).real()
                                : ev.mean_populations(1) + ev.mean_populations(2);
        out.spectrum.contrast_percent[i] = -100.0 * (half - half_ss);
        reports[i] = ev.invariants;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = freqs.size();
      }
    }
  };
  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(freqs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : reports) out.invariants.merge(r);
  if (options.normalize) {
    double peak = 0.0;
    for (double v : out.spectrum.contrast_percent) peak = std::max(peak, std::abs(v));
    if (peak > 1e-9) {
      out.normalization = 100.0 / peak;
      for (double& v : out.spectrum.contrast_percent) v *= out.normalization;
    }
  }
  return out;
}

}  // namespace

SimulatedSpectrum odmr_sweep(const std::vector<double>& freqs_mhz, const DriveConfig& cfg,
                             const DissipatorSet& diss, const SweepOptions& options) {
  if (freqs_mhz.empty()) throw ConfigurationError("frequency grid is empty");
  for (double f : freqs_mhz) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigurationError("frequencies must be >= 0");
  }
  SimulatedSpectrum s = options.ordering == DissipatorOrdering::canonical
                            ? sweep_impl<DissipatorOrdering::canonical>(freqs_mhz, cfg, diss, options)
                            : sweep_impl<DissipatorOrdering::adjoint_jump>(freqs_mhz, cfg, diss, options);
  return s;
}

LinewidthScan linewidth_scan(const std::vector<double>& omega1_mhz, const DriveConfig& cfg,
                             const DissipatorSet& diss, const LinewidthScanOptions& options) {
  if (omega1_mhz.empty()) throw ConfigurationError("coupling grid is empty");
  const std::vector<double> freqs =
      options.freqs_mhz.empty() ? frequency_grid(15.0, 90.0, 0.5) : options.freqs_mhz;
  const double two_d = 2.0 * std::abs(cfg.D);
  const std::array<double, 3> expected = {two_d, two_d / 2.0, two_d / 3.0};

  LinewidthScan scan;
  scan.invariants.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::array<std::vector<PowerPoint>, 2> widths;
  for (double omega1 : omega1_mhz) {
    DriveConfig c = cfg;
    c.Omega1 = omega1;
    SimulatedSpectrum spec = odmr_sweep(freqs, c, diss, options.sweep);
    scan.invariants.merge(spec.invariants);

    LinewidthRow row;
    row.Omega1 = omega1;
    try {
      row.spectrum_fit = fit_lorentzians(spec.spectrum, 3, {expected[0], expected[1], expected[2]});
      for (int k = 0; k < 3; ++k) {
        const std::string n = std::to_string(k + 1);
        const auto& center = row.spectrum_fit["center_" + n];
        const auto& fwhm = row.spectrum_fit["fwhm_" + n];
        const auto& amplitude = row.spectrum_fit["amplitude_" + n];
        const double window = std::max(2.0, 0.1 * expected[static_cast<std::size_t>(k)]);
        row.resolved[static_cast<std::size_t>(k)] =
            std::isfinite(center.uncertainty) && std::isfinite(fwhm.uncertainty) &&
            fwhm.uncertainty < 0.5 * fwhm.value && amplitude.value > 3.0 * amplitude.uncertainty &&
            std::abs(center.value - expected[static_cast<std::size_t>(k)]) < window;
      }
    } catch (const Error& e) {
      row.spectrum_fit.warnings.push_back(std::string("spectrum fit failed: ") + e.what());
    }
    for (int k = 0; k < 2; ++k) {
      if (row.resolved[static_cast<std::size_t>(k)]) {
        widths[static_cast<std::size_t>(k)].push_back(
            {omega1, row.spectrum_fit["fwhm_" + std::to_string(k + 1)].value, 0.0});
      }
    }
    scan.rows.push_back(std::move(row));
    scan.spectra.push_back(std::move(spec));
  }

  auto line = [](const std::vector<PowerPoint>& pts, const char* label) {
    if (pts.size() < 3) {
      FitResult empty;
      empty.warnings.push_back(std::string("fewer than 3 resolved ") + label + " widths; no line fit");
      return empty;
    }
    return fit_linewidth_vs_coupling(pts);
  };
  scan.one_photon = line(widths[0], "1-photon");
  scan.two_photon = line(widths[1], "2-photon");
  return scan;
}

}  // namespace photospin
