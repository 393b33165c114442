#pragma once

// Noise and power calibration: shot-noise tunnel junction (SNTJ) source
// model, chain added-noise fits, TWPA/remaining-chain decomposition and
// input-line attenuation.
//
// Noise is in quanta (units of h f per unit bandwidth) at the bin frequency
// unless a unit tag says otherwise.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dtwpa {

struct SntjParams {
  double temperature = 0.014;  // K; 0 is the zero-temperature limit
  double frequency_hz = 7.74e9;
  // Power transmission of the SNTJ-to-device path (1 = lossless). A lossy
  // path at `temperature` mixes in (1 - eta) of its own thermal noise.
  double path_transmission = 1.0;

  void validate() const;
};

/// N_in = 1/4 sum_{+-} ((eV +- hf) / hf) coth((eV +- hf) / (2 k T)).
double sntj_input_noise(const SntjParams& p, double bias_volt);
/// Zero-temperature two-branch form 1/4 sum_{+-} |eV +- hf| / hf.
double sntj_input_noise_asymptotic(const SntjParams& p, double bias_volt);

/// 1/2 coth(h f / (2 k T)): thermal occupation plus vacuum, in quanta.
double thermal_quanta(double temperature, double frequency_hz);

double psd_to_quanta(double psd_w_per_hz, double frequency_hz);
double quanta_to_psd(double quanta, double frequency_hz);

enum class NoiseUnit { quanta, linear };

struct NoiseSweep {
  double frequency_hz = 0.0;
  std::vector<double> n_in;   // quanta
  std::vector<double> n_out;  // quanta, or arbitrary linear units
  NoiseUnit unit = NoiseUnit::quanta;
};

struct ChainFit {
  double frequency_hz = 0.0;
  double g_tot = 0.0;  // out-units per input quantum
  double n_add = 0.0;  // quanta
  double g_tot_err = 0.0;
  double n_add_err = 0.0;
  NoiseUnit unit = NoiseUnit::quanta;
  std::size_t points = 0;
  std::vector<std::string> warnings;
};

/// OLS of N_out = G_tot (N_in + N_add). Throws ErrorCode::insufficient_points
/// (< 3 samples), ErrorCode::ill_conditioned_fit (no N_in spread) and
/// ErrorCode::unphysical_gain (slope <= 0). N_add <= 0 is kept and warned.
ChainFit fit_chain_noise(const NoiseSweep& sweep);

enum class SntjKernel { full, asymptotic };

/// Same fit with N_in generated from SNTJ bias voltages.
ChainFit fit_chain_noise_bias(const SntjParams& p, std::span<const double> bias_volt,
                              std::span<const double> n_out, NoiseUnit unit = NoiseUnit::quanta,
                              SntjKernel kernel = SntjKernel::full);

/// N_add = (G - 1) / (2 G) + N_ex; requires G >= 1.
double quantum_limit_correction(double g_twpa, double n_ex);

struct GainNoisePoint {
  double g_twpa = 1.0;  // linear power gain
  double n_add = 0.0;   // quanta
  double n_add_err = 0.0;
};

/// Builds a point from a gain in dB (conversion is exact to rounding).
GainNoisePoint gain_noise_point_db(double g_twpa_db, double n_add, double n_add_err = 0.0);

enum class Exclusion {
  none,
  // Mask points whose gain exceeds the gain at the N_add minimum. Among tied
  // minima the largest gain is used, so ties stay in the fit.
  above_noise_minimum,
  manual,
};

struct DecomposeOptions {
  Exclusion exclusion = Exclusion::above_noise_minimum;
  std::vector<bool> manual_mask;  // true = excluded, input order
  bool weighted = false;          // weight by 1 / n_add_err^2
};

struct ChainDecomposition {
  double n_twpa = 0.0;
  double n_rem = 0.0;
  double n_twpa_err = 0.0;
  double n_rem_err = 0.0;
  std::vector<bool> excluded;  // input order
  std::size_t retained = 0;
  std::vector<std::string> warnings;
};

/// Least squares of N_add = N_TWPA + N_rem / G_TWPA over retained points.
/// Unweighted fits scale errors by the residual variance. Weighted fits take
/// n_add_err as absolute standard errors. Input order does not affect the
/// result. Throws ErrorCode::insufficient_points when fewer than 3 distinct
/// gains remain.
ChainDecomposition decompose_twpa_noise(std::span<const GainNoisePoint> points,
                                        const DecomposeOptions& options = {});

/// G = S_out / S_in.
double output_gain(double s_out, double s_in);
/// A = (P_out / P_VNA) (S_in / S_out). Values above 1 are returned unchanged;
/// calibrate_attenuation flags them.
double input_attenuation(double p_out_w, double p_vna_w, double s_in, double s_out);

struct AttenuationRow {
  double frequency_hz;
  double p_vna_w;
  double p_out_w;
  double s_in;
  double s_out;
};

struct AttenuationCal {
  std::vector<double> frequency_hz;
  std::vector<double> attenuation;  // linear power ratio
  std::vector<bool> inconsistent;   // A > 1
  std::vector<std::string> warnings;
};

AttenuationCal calibrate_attenuation(std::span<const AttenuationRow> rows);

/// P_source - attenuation, in dBm; attenuation must be >= 0 dB.
double power_at_device(double p_source_dbm, double attenuation_db);

/// 1/2 coth(h f_i / (2 k T)) contributed by the terminated idler port.
double idler_port_contribution(double temperature, double idler_hz);

// Synthetic scenarios modeled on the measured device. Deterministic for a
// given seed.

struct GainNoiseScenario {
  double frequency_hz = 7.74e9;
  double n_twpa = 1.17;
  double n_rem = 16.6;  // 1.17 + 16.6 / G gives 2.0 quanta at 13 dB
  std::vector<double> gains_db{4.0, 5.5, 7.0, 8.5, 10.0, 11.0, 12.0, 13.0};
  // Beyond the optimum the measured noise rises again; modeled by adding
  // these excesses at the listed gains.
  std::vector<double> high_power_gains_db{14.0, 15.0};
  std::vector<double> high_power_excess{0.6, 1.5};
  double relative_noise = 0.03;  // per-point N_add scatter and quoted error
};

std::vector<GainNoisePoint> synthesize_gain_noise(const GainNoiseScenario& s, std::uint64_t seed);

struct YFactorScenario {
  double f_start_hz = 6.0e9;
  double f_stop_hz = 8.0e9;
  int bins = 21;
  double temperature = 0.014;
  double max_bias_volt = 200e-6;
  int bias_points = 41;
  double g_tot_db = 95.0;
  double g_twpa_db = 13.0;
  double g_twpa_ripple_db = 1.5;  // sinusoidal gain ripple across the band
  double ripple_period_hz = 0.7e9;
  double n_twpa = 1.17;
  double n_rem = 16.6;
  double relative_noise = 0.01;  // multiplicative scatter on N_out
};

struct YFactorBin {
  double frequency_hz;
  double g_twpa;
  std::vector<double> bias_volt;
  std::vector<double> n_out;
};

std::vector<YFactorBin> synthesize_yfactor(const YFactorScenario& s, std::uint64_t seed);

}  // namespace dtwpa
