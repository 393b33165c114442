#pragma once

// Fixed-step transient analysis of netlists containing Josephson junctions.
//
// The circuit is solved in nodal form with trapezoidal companion models for
// L and C. Each junction carries its gauge-invariant phase as a state:
//   phi[n+1] = phi[n] + (pi dt / Phi0) (v[n+1] + v[n]),  i = I_c sin(phi[n+1]).
// Every port is driven by a Thevenin source behind its reference impedance.
// A tone of available power P (into Z0) has EMF peak amplitude sqrt(8 Z0 P).
//
// Waves use power normalization: a = Vs / (2 sqrt(Z0)) is incident and
// b = (2 V - Vs) / (2 sqrt(Z0)) leaves the port. Spectral amplitudes are peak
// phasors in sqrt(W), so a tone of amplitude B carries |B|^2 / 2 watts.

#include "dtwpa/netlist.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dtwpa {

struct Tone {
  int port = 0;  // 0-based port index
  double frequency_hz = 0.0;
  double power_dbm = -120.0;
  double phase_rad = 0.0;
};

struct DriveConfig {
  std::vector<Tone> tones;
  double ramp_time = 0.0;  // raised-cosine ramp applied to every tone

  /// Thevenin EMF of every port at time t.
  void source_voltages(double t, std::span<const double> z0, std::span<double> out) const;
};

/// EMF peak amplitude delivering `power_dbm` into a matched load.
double tone_emf_amplitude(double power_dbm, double z0);

struct SimConfig {
  double dt = 1e-12;
  double t_end = 0.0;
  double settle_time = 0.0;  // analysis window is [settle_time, t_end)
  double newton_tol = 1e-10;  // relative step size at convergence
  int max_newton_iters = 50;
  std::vector<int> recorded_nodes;
  std::vector<int> recorded_junctions;  // indices in junction order
  /// |dphi/dt| above this aborts with ErrorCode::junction_runaway. Zero picks
  /// (pi / 4) / dt, which also keeps sampled phases free of 2 pi jumps.
  double max_phase_rate = 0.0;
  /// Enforce >= 40 samples per period of every tone and settle >= 5 ramp.
  bool enforce_resolution = true;

  long steps() const;
  long settle_steps() const;
  long window_samples() const { return steps() - settle_steps(); }
  double window() const { return static_cast<double>(window_samples()) * dt; }
};

inline constexpr int min_points_per_period = 40;
inline constexpr double min_settle_ramps = 5.0;

/// Time step with >= 40 points per period of `f_max` that divides `window`
/// into an integer number of steps.
double choose_dt(double f_max, double window);

/// Shortest window >= `min_window` on which every frequency (rounded to whole
/// Hz) completes an integer number of cycles.
double commensurate_window(std::span<const double> freqs, double min_window);

struct TransientResult {
  double dt = 0.0;
  double settle_time = 0.0;
  long settle_index = 0;
  Eigen::VectorXd time;
  Eigen::MatrixXd port_voltage;    // samples x ports
  Eigen::MatrixXd port_current;    // into the network
  Eigen::MatrixXd source_voltage;  // Thevenin EMF
  std::vector<double> port_z0;
  std::vector<int> recorded_nodes;
  Eigen::MatrixXd node_voltage;  // samples x recorded nodes
  std::vector<int> recorded_junctions;
  Eigen::MatrixXd junction_phase;  // samples x recorded junctions
  Eigen::VectorXd max_abs_phase;   // per junction over the whole run
  std::vector<std::string> warnings;
  long newton_iterations = 0;
  long factorizations = 0;

  long samples() const { return static_cast<long>(time.size()); }
  long window_samples() const { return samples() - 1 - settle_index; }
};

/// Runs the transient. Throws ErrorCode::newton_nonconvergence (with step and
/// residual) or ErrorCode::junction_runaway. Junctions whose |phi| exceeds
/// pi/2 are reported through `warnings` rather than failing.
TransientResult simulate_transient(const Netlist& netlist, const DriveConfig& drives,
                                   const SimConfig& cfg);

enum class Window { rectangular, hann };
enum class Wave { incident, outgoing };

/// Peak complex amplitude X of x(t) = Re(X e^{j 2 pi f t}) over the samples,
/// with phase referenced to t = 0. A rectangular window requires f to complete
/// an integer number of cycles over the record (ErrorCode::non_commensurate).
std::complex<double> tone_amplitude(std::span<const double> samples, double t0, double dt,
                                    double f, Window window = Window::rectangular);

/// Wave amplitude at a port over the post-settle window.
std::complex<double> extract_tone(const TransientResult& result, int port, double f,
                                  Wave wave = Wave::outgoing, Window window = Window::rectangular);

/// Wave time series at a port over the whole record.
Eigen::VectorXd port_wave(const TransientResult& result, int port, Wave wave);

struct SpectralResult {
  int port = 0;
  std::vector<double> frequencies;
  std::vector<std::complex<double>> amplitudes;  // peak phasors, sqrt(W)
};

SpectralResult extract_spectrum(const TransientResult& result, int port,
                                std::span<const double> freqs, Wave wave = Wave::outgoing,
                                Window window = Window::rectangular);

/// |G_i - (G_s - 1)| / G_s for photon-flux gains of signal and idler.
double photon_flux_check(double signal_gain, double idler_conversion);

struct GainPoint {
  double frequency_hz = 0.0;
  double s21_db = 0.0;
  double s43_db = 0.0;  // NaN when not measured
  double idler_frequency_hz = 0.0;
  double idler_conversion_db = 0.0;  // port-4 idler flux over port-1 signal flux; NaN pump off
  double flux_residual = 0.0;        // Manley-Rowe residual over all ports; NaN pump off
};

struct GainOptions {
  int signal_port = 0;
  int signal_out_port = 1;
  int high_in_port = 2;
  int high_out_port = 3;
  bool measure_s43 = true;
  unsigned threads = 1;
};

/// One probe tone at a time on the signal input (and, for S43, on the
/// high-band input), with the pump tones of `pump` applied alongside. Gains
/// are b_out / a_in, i.e. referenced to an ideal thru. When pumped, one
/// extra pump-only run is made and its outgoing waves are subtracted at the
/// probe and idler frequencies before any ratio is formed.
std::vector<GainPoint> pumped_gain_profile(const Netlist& device, const DriveConfig& pump,
                                           std::span<const double> signal_freqs,
                                           double signal_power_dbm, const SimConfig& cfg,
                                           const GainOptions& options = {});

enum class P1dbStatus { bracketed, unbracketed_below, absent };

struct CompressionResult {
  std::vector<double> input_power_dbm;
  std::vector<double> gain_db;
  double small_signal_gain_db = 0.0;
  std::optional<double> p1db_dbm;
  P1dbStatus status = P1dbStatus::absent;
};

/// Locates the input power where gain first falls to G_ss - 1 dB, by linear
/// interpolation between bracketing samples. G_ss defaults to the first
/// point. When the first point is already at or below G_ss - 1 dB, or the
/// curve falls by more than 0.1 dB over the first interval (the small-signal
/// plateau was not reached), P_1dB is reported at the first power and flagged
/// unbracketed_below.
CompressionResult find_p1db(std::span<const double> powers_dbm, std::span<const double> gains_db,
                            std::optional<double> small_signal_gain_db = std::nullopt);

/// Raw record, little-endian:
///   char[8] "DTWPATS1", uint32 ports, uint32 nodes, uint64 samples, float64 dt,
///   then per sample float64 t, ports x (V, I, Vs), nodes x V.
std::string timeseries_binary(const TransientResult& result);

CompressionResult compression_sweep(const Netlist& device, const DriveConfig& pump,
                                    double signal_hz, std::span<const double> powers_dbm,
                                    const SimConfig& cfg, const GainOptions& options = {});

}  // namespace dtwpa
