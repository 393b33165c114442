#include "dtwpa/noisecal.hpp"

#include "dtwpa/constants.hpp"
#include "dtwpa/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dtwpa {
namespace {

// x coth(x / (2 k T)), continuous through x = 0 and at T = 0.
double x_coth(double x, double temperature) {
  if (temperature == 0.0) return std::abs(x);
  const double kt2 = 2.0 * phys::boltzmann * temperature;
  const double y = x / kt2;
  if (std::abs(y) < 1e-6) return kt2 * (1.0 + y * y / 3.0);
  return x / std::tanh(y);
}

struct LineFit {
  double intercept, slope;
  double var_intercept, var_slope, cov;
};

// y = a + b x. With weights w the covariance is (X^T W X)^-1 (absolute
// errors); without, it is scaled by the residual variance.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w = {}) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n), sw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sw[i] = w.empty() ? 1.0 : std::sqrt(w[i]);
    a(i, 0) = sw[i];
    a(i, 1) = sw[i] * x[i];
    b[i] = sw[i] * y[i];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Vector2d beta = qr.solve(b);
  const Eigen::Matrix2d ata_inv = (a.transpose() * a).inverse();
  double scale = 1.0;
  if (w.empty()) {
    const double ssr = (a * beta - b).squaredNorm();
    scale = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
  }
  const Eigen::Matrix2d cov = scale * ata_inv;
  return {beta[0], beta[1], cov(0, 0), cov(1, 1), cov(0, 1)};
}

}  // namespace

void SntjParams::validate() const {
  require(std::isfinite(temperature) && temperature >= 0.0, "SNTJ temperature must be >= 0");
  require(std::isfinite(frequency_hz) && frequency_hz > 0.0, "SNTJ frequency must be > 0");
  require(path_transmission > 0.0 && path_transmission <= 1.0,
          "path transmission must lie in (0, 1]");
}

double sntj_input_noise(const SntjParams& p, double v) {
  p.validate();
  const double hf = phys::planck * p.frequency_hz;
  const double ev = phys::elementary_charge * v;
  const double n =
      0.25 * (x_coth(ev + hf, p.temperature) + x_coth(ev - hf, p.temperature)) / hf;
  if (p.path_transmission == 1.0) return n;
  return p.path_transmission * n +
         (1.0 - p.path_transmission) * thermal_quanta(p.temperature, p.frequency_hz);
}

double sntj_input_noise_asymptotic(const SntjParams& p, double v) {
  p.validate();
  const double hf = phys::planck * p.frequency_hz;
  const double ev = phys::elementary_charge * v;
  const double n = 0.25 * (std::abs(ev + hf) + std::abs(ev - hf)) / hf;
  if (p.path_transmission == 1.0) return n;
  return p.path_transmission * n + (1.0 - p.path_transmission) * 0.5;
}

double thermal_quanta(double temperature, double f) {
  require(temperature >= 0.0 && f > 0.0, "T must be >= 0 and f > 0");
  if (temperature == 0.0) return 0.5;
  return 0.5 / std::tanh(phys::planck * f / (2.0 * phys::boltzmann * temperature));
}

double psd_to_quanta(double psd, double f) {
  require(f > 0.0, "frequency must be > 0");
  return psd / (phys::planck * f);
}

double quanta_to_psd(double n, double f) {
  require(f > 0.0, "frequency must be > 0");
  return n * phys::planck * f;
}

ChainFit fit_chain_noise(const NoiseSweep& sweep) {
  const auto& x = sweep.n_in;
  const auto& y = sweep.n_out;
  require(x.size() == y.size(), "N_in and N_out lengths differ");
  if (x.size() < 3) {
    throw Error(ErrorCode::insufficient_points, "chain fit needs >= 3 samples");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "noise samples must be finite");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi - *lo > 1e-9 * std::max(std::abs(*hi), std::abs(*lo)))) {
    throw Error(ErrorCode::ill_conditioned_fit, "N_in has no spread");
  }
  const LineFit lf = fit_line(x, y);
  if (!(lf.slope > 0.0)) {
    throw Error(ErrorCode::unphysical_gain, "fitted G_tot = " + std::to_string(lf.slope));
  }
  ChainFit out;
  out.frequency_hz = sweep.frequency_hz;
  out.unit = sweep.unit;
  out.points = x.size();
  out.g_tot = lf.slope;
  out.n_add = lf.intercept / lf.slope;
  out.g_tot_err = std::sqrt(lf.var_slope);
  // Delta method for a / b.
  const double b = lf.slope, a = lf.intercept;
  const double var = lf.var_intercept / (b * b) + a * a * lf.var_slope / (b * b * b * b) -
                     2.0 * a * lf.cov / (b * b * b);
  out.n_add_err = std::sqrt(std::max(var, 0.0));
  if (!(out.n_add > 0.0)) {
    out.warnings.push_back("fitted N_add <= 0: a chain cannot subtract noise");
  }
  return out;
}

ChainFit fit_chain_noise_bias(const SntjParams& p, std::span<const double> bias,
                              std::span<const double> n_out, NoiseUnit unit, SntjKernel kernel) {
  NoiseSweep s;
  s.frequency_hz = p.frequency_hz;
  s.unit = unit;
  for (double v : bias) {
    s.n_in.push_back(kernel == SntjKernel::full ? sntj_input_noise(p, v)
                                                : sntj_input_noise_asymptotic(p, v));
  }
  s.n_out.assign(n_out.begin(), n_out.end());
  return fit_chain_noise(s);
}

double quantum_limit_correction(double g, double n_ex) {
  require(g >= 1.0, "G_TWPA must be >= 1");
  return (g - 1.0) / (2.0 * g) + n_ex;
}

GainNoisePoint gain_noise_point_db(double g_db, double n_add, double n_add_err) {
  return {phys::db_to_power_ratio(g_db), n_add, n_add_err};
}

ChainDecomposition decompose_twpa_noise(std::span<const GainNoisePoint> pts,
                                        const DecomposeOptions& opt) {
  for (const auto& p : pts) {
    require(std::isfinite(p.g_twpa) && p.g_twpa > 0.0, "G_TWPA must be > 0");
    require(std::isfinite(p.n_add), "N_add must be finite");
    if (opt.weighted) require(p.n_add_err > 0.0, "weighted fit needs positive N_add errors");
  }
  ChainDecomposition out;
  out.excluded.assign(pts.size(), false);
  switch (opt.exclusion) {
    case Exclusion::none: break;
    case Exclusion::manual:
      require(opt.manual_mask.size() == pts.size(), "manual mask length differs from points");
      out.excluded = opt.manual_mask;
      break;
    case Exclusion::above_noise_minimum: {
      if (pts.empty()) break;
      double n_min = pts[0].n_add;
      for (const auto& p : pts) n_min = std::min(n_min, p.n_add);
      double g_star = 0.0;
      for (const auto& p : pts) {
        if (p.n_add == n_min) g_star = std::max(g_star, p.g_twpa);
      }
      for (std::size_t i = 0; i < pts.size(); ++i) out.excluded[i] = pts[i].g_twpa > g_star;
      break;
    }
  }

  // Canonical order so that the result is independent of the input order.
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!out.excluded[i]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].g_twpa != pts[b].g_twpa) return pts[a].g_twpa < pts[b].g_twpa;
    if (pts[a].n_add != pts[b].n_add) return pts[a].n_add < pts[b].n_add;
    return pts[a].n_add_err < pts[b].n_add_err;
  });
  std::vector<double> x, y, w;
  for (std::size_t i : idx) {
    x.push_back(1.0 / pts[i].g_twpa);
    y.push_back(pts[i].n_add);
    if (opt.weighted) w.push_back(1.0 / (pts[i].n_add_err * pts[i].n_add_err));
  }
  std::vector<double> distinct = x;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw Error(ErrorCode::insufficient_points,
                std::to_string(distinct.size()) + " distinct gains retained, need >= 3");
  }
  const LineFit lf = fit_line(x, y, w);
  out.retained = idx.size();
  out.n_twpa = lf.intercept;
  out.n_rem = lf.slope;
  out.n_twpa_err = std::sqrt(std::max(lf.var_intercept, 0.0));
  out.n_rem_err = std::sqrt(std::max(lf.var_slope, 0.0));
  if (out.n_twpa < 0.0) out.warnings.push_back("fitted N_TWPA is negative");
  if (out.n_rem < 0.0) out.warnings.push_back("fitted N_rem is negative");
  return out;
}

double output_gain(double s_out, double s_in) {
  require(s_in > 0.0 && s_out >= 0.0, "S_in must be > 0 and S_out >= 0");
  return s_out / s_in;
}

double input_attenuation(double p_out, double p_vna, double s_in, double s_out) {
  require(p_out > 0.0 && p_vna > 0.0 && s_in > 0.0 && s_out > 0.0,
          "attenuation inputs must be positive");
  return (p_out / p_vna) * (s_in / s_out);
}

AttenuationCal calibrate_attenuation(std::span<const AttenuationRow> rows) {
  AttenuationCal cal;
  for (const auto& r : rows) {
    const double a = input_attenuation(r.p_out_w, r.p_vna_w, r.s_in, r.s_out);
    cal.frequency_hz.push_back(r.frequency_hz);
    cal.attenuation.push_back(a);
    cal.inconsistent.push_back(a > 1.0);
    if (a > 1.0) {
      cal.warnings.push_back("A > 1 at " + std::to_string(r.frequency_hz) +
                             " Hz: gain on an attenuating line");
    }
  }
  return cal;
}

double power_at_device(double p_source_dbm, double attenuation_db) {
  require(attenuation_db >= 0.0, "attenuation must be >= 0 dB");
  return p_source_dbm - attenuation_db;
}

double idler_port_contribution(double temperature, double idler_hz) {
  return thermal_quanta(temperature, idler_hz);
}

std::vector<GainNoisePoint> synthesize_gain_noise(const GainNoiseScenario& s, std::uint64_t seed) {
  require(s.high_power_gains_db.size() == s.high_power_excess.size(),
          "high-power gains and excesses differ in length");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<GainNoisePoint> pts;
  auto add = [&](double g_db, double extra) {
    const double g = phys::db_to_power_ratio(g_db);
    const double truth = s.n_twpa + s.n_rem / g + extra;
    const double err = s.relative_noise * truth;
    pts.push_back({g, truth + err * gauss(rng), err});
  };
  for (double g : s.gains_db) add(g, 0.0);
  for (std::size_t i = 0; i < s.high_power_gains_db.size(); ++i) {
    add(s.high_power_gains_db[i], s.high_power_excess[i]);
  }
  return pts;
}

std::vector<YFactorBin> synthesize_yfactor(const YFactorScenario& s, std::uint64_t seed) {
  require(s.bins >= 1 && s.bias_points >= 3, "need >= 1 bin and >= 3 bias points");
  require(s.f_stop_hz >= s.f_start_hz && s.f_start_hz > 0.0, "bad frequency range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double g_tot = phys::db_to_power_ratio(s.g_tot_db);
  std::vector<YFactorBin> bins;
  for (int k = 0; k < s.bins; ++k) {
    const double f = s.bins == 1 ? s.f_start_hz
                                 : s.f_start_hz + (s.f_stop_hz - s.f_start_hz) * k / (s.bins - 1);
    const double g_db =
        s.g_twpa_db + s.g_twpa_ripple_db * std::sin(2.0 * phys::pi * (f - s.f_start_hz) /
                                                    s.ripple_period_hz);
    const double g = phys::db_to_power_ratio(g_db);
    // The intercept form: quantum-limited part plus excess, then the rest of
    // the chain referred to the input.
    const double n_add = quantum_limit_correction(g, s.n_twpa - 0.5) + (s.n_rem + 0.5) / g;
    YFactorBin bin{f, g, {}, {}};
    const SntjParams p{s.temperature, f, 1.0};
    for (int i = 0; i < s.bias_points; ++i) {
      const double v = -s.max_bias_volt + 2.0 * s.max_bias_volt * i / (s.bias_points - 1);
      const double n_out = g_tot * (sntj_input_noise(p, v) + n_add);
      bin.bias_volt.push_back(v);
      bin.n_out.push_back(n_out * (1.0 + s.relative_noise * gauss(rng)));
    }
    bins.push_back(std::move(bin));
  }
  return bins;
}

}  // namespace dtwpa
