#pragma once

// Spin-3/2 Lindblad master equation under a linearly polarized RF drive,
// without the rotating-wave approximation.
//
// Units: frequencies in MHz, times in us. The coherent part is
// -2 pi i [H, rho] with H in MHz; dissipator rates enter in us^-1.
// Basis order is m = 3/2, 1/2, -1/2, -3/2.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "photospin/errors.hpp"
#include "photospin/fit_models.hpp"

namespace photospin {

using Matrix4c = Eigen::Matrix4cd;
using Liouvillian = Eigen::Matrix<std::complex<double>, 16, 16>;
using DensityVector = Eigen::Matrix<std::complex<double>, 16, 1>;

struct SpinOperators {
  Matrix4c Sx, Sy, Sz;
};

SpinOperators spin_operators();

struct DriveConfig {
  double Omega1 = 0.0;     ///< RF coupling, MHz
  double omega = 0.0;      ///< drive frequency, MHz
  double D = 35.0;         ///< half zero-field splitting, MHz
  double duration = 1.5;   ///< integration window, us

  void validate() const;
};

/// Which side of rho the jump operators act on. `canonical` is
/// L rho L^+ - {L^+ L, rho}/2. `adjoint_jump` swaps the roles of L and L^+,
/// i.e. jump operator L^+, which keeps the trace but reverses the pumping
/// direction of the non-Hermitian operators.
enum class DissipatorOrdering { canonical, adjoint_jump };

struct DissipatorSet {
  double alpha = 7.0;    ///< spin-lattice rate, ms^-1
  double beta = 2.5;     ///< dephasing rate, us^-1
  double delta = 185.0;  ///< optical pumping rate, ms^-1
  /// L_alpha, L_beta, L_delta1 .. L_delta5, in us^-1/2.
  std::array<Matrix4c, 7> operators;

  static DissipatorSet build(double alpha_per_ms, double beta_per_us, double delta_per_ms);
  /// All operators zero.
  static DissipatorSet none() { return build(0.0, 0.0, 0.0); }
};

/// D (Sz^2 - 5/4) + Omega1 cos(2 pi omega t) (Sx + Sz), in MHz.
Matrix4c hamiltonian(double t_us, const DriveConfig& cfg);

template <DissipatorOrdering Ordering = DissipatorOrdering::canonical>
Matrix4c lindblad_rhs(const Matrix4c& rho, double t_us, const DriveConfig& cfg,
                      const DissipatorSet& diss) {
  constexpr std::complex<double> i2pi(0.0, 2.0 * 3.14159265358979323846);
  const Matrix4c h = hamiltonian(t_us, cfg);
  Matrix4c out = -i2pi * (h * rho - rho * h);
  for (const Matrix4c& op : diss.operators) {
    Matrix4c jump;
    if constexpr (Ordering == DissipatorOrdering::canonical) {
      jump = op;
    } else {
      jump = op.adjoint();
    }
    const Matrix4c jj = jump.adjoint() * jump;
    out += jump * rho * jump.adjoint() - 0.5 * (jj * rho + rho * jj);
  }
  return out;
}

/// Superoperator pieces on column-major vec(rho): the generator at time t is
/// static + cos(2 pi omega t) drive.
struct LiouvillianParts {
  Liouvillian static_part;
  Liouvillian drive;
};

template <DissipatorOrdering Ordering = DissipatorOrdering::canonical>
LiouvillianParts liouvillian(const DriveConfig& cfg, const DissipatorSet& diss);

DensityVector vectorize(const Matrix4c& rho);
Matrix4c unvectorize(const DensityVector& v);

/// Null space of the time-independent generator (drive off), normalized to
/// unit trace. Throws DegeneracyError when it is not one-dimensional.
template <DissipatorOrdering Ordering = DissipatorOrdering::canonical>
Matrix4c steady_state(double D, const DissipatorSet& diss);

struct InvariantReport {
  double max_trace_deviation = 0.0;
  double max_hermiticity_deviation = 0.0;
  double min_eigenvalue = 0.0;
  long accepted_steps = 0;

  void merge(const InvariantReport& other);
};

struct InvariantTolerance {
  double trace = 1e-8;
  double hermiticity = 1e-9;
  double min_eigenvalue = -1e-7;
};

struct EvolveOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-9;
  double max_dt = 0.0;  ///< us; 0 means 1 / (20 max(omega, Omega1))
  bool record_trajectory = false;
  InvariantTolerance tolerance;
};

struct Evolution {
  Matrix4c final_state;
  std::vector<double> times;
  std::vector<Matrix4c> states;  ///< only with record_trajectory
  /// Time averages over the window of the diagonal populations.
  Eigen::Vector4d mean_populations = Eigen::Vector4d::Zero();
  InvariantReport invariants;
};

/// Integrates from rho0 over [0, cfg.duration] with adaptive Dormand-Prince
/// steps. Checks the density-matrix invariants at every accepted step and
/// throws IntegrationError on a breach.
template <DissipatorOrdering Ordering = DissipatorOrdering::canonical>
Evolution evolve(const Matrix4c& rho0, const DriveConfig& cfg, const DissipatorSet& diss,
                 const EvolveOptions& options = {});

/// Contrast proxy averaged over the window or read at its end. The end
/// value carries a residual micromotion that beats against the grid step.
/// Either way it is -100 times the change of the |+-1/2> population with
/// respect to the undriven steady state.
enum class ContrastObservable { final_half_population, mean_half_population };

struct SweepOptions {
  ContrastObservable observable = ContrastObservable::mean_half_population;
  bool normalize = true;  ///< scale so the largest |contrast| is 100
  DissipatorOrdering ordering = DissipatorOrdering::canonical;
  EvolveOptions evolve;
  unsigned jobs = 0;  ///< 0: hardware concurrency
};

struct SimulatedSpectrum {
  OdmrSpectrum spectrum;
  double normalization = 1.0;  ///< raw = stored / normalization
  InvariantReport invariants;
};

/// Uniform grid from `start` to `stop` inclusive.
std::vector<double> frequency_grid(double start_mhz, double stop_mhz, double step_mhz);

/// One integration per frequency starting from the undriven steady state.
/// `cfg.omega` is ignored.
SimulatedSpectrum odmr_sweep(const std::vector<double>& freqs_mhz, const DriveConfig& cfg,
                             const DissipatorSet& diss, const SweepOptions& options = {});

struct LinewidthRow {
  double Omega1 = 0.0;
  FitResult spectrum_fit;            ///< three-Lorentzian decomposition
  std::array<bool, 3> resolved{};    ///< per peak, 1-, 2-, 3-photon
};

struct LinewidthScanOptions {
  std::vector<double> freqs_mhz;  ///< empty: 15 to 90 MHz in 0.5 MHz steps
  SweepOptions sweep;
};

struct LinewidthScan {
  std::vector<LinewidthRow> rows;
  std::vector<SimulatedSpectrum> spectra;
  FitResult one_photon;  ///< LW = LW0 + a1 Omega1
  FitResult two_photon;
  InvariantReport invariants;
};

/// Sweeps every coupling, decomposes each spectrum into Lorentzians seeded
/// at 2D, D and 2D/3, and fits the 1- and 2-photon widths linearly in
/// Omega1. A peak counts as resolved when its center lies within
/// max(2 MHz, 10%) of the expected position, its amplitude exceeds three
/// standard errors and its width is known to better than 50%. Unresolved
/// points are left out of the line fits.
LinewidthScan linewidth_scan(const std::vector<double>& omega1_mhz, const DriveConfig& cfg,
                             const DissipatorSet& diss, const LinewidthScanOptions& options = {});

}  // namespace photospin
