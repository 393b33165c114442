#include <doctest.h>

#include "dtwpa/constants.hpp"
#include "dtwpa/error.hpp"
#include "dtwpa/noisecal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace dtwpa;

TEST_SUITE("noisecal") {

TEST_CASE("SNTJ reference values") {
  const SntjParams p{0.014, 7.74e9, 1.0};
  CHECK(sntj_input_noise(p, 50e-6) == doctest::Approx(0.7810043710499112886).epsilon(1e-13));
  const SntjParams cold{0.0, 7.74e9, 1.0};
  CHECK(sntj_input_noise(cold, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sntj_input_noise({1e-6, 7.74e9, 1.0}, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  // Shot-noise asymptote e|V| / (2 h f).
  const double v = 5e-3;
  const double asym = phys::elementary_charge * v / (2 * phys::planck * 7.74e9);
  CHECK(sntj_input_noise(p, v) / asym == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sntj_input_noise_asymptotic(cold, v) == doctest::Approx(asym).epsilon(1e-12));
  CHECK(sntj_input_noise_asymptotic(cold, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("SNTJ evenness, monotonicity and lower bound") {
  for (double t : {0.0, 0.014, 0.05, 0.3}) {
    const SntjParams p{t, 7.74e9, 1.0};
    double prev = -1.0;
    for (double v = 0.0; v <= 300e-6; v += 2e-6) {
      const double n = sntj_input_noise(p, v);
      CHECK(n == doctest::Approx(sntj_input_noise(p, -v)).epsilon(1e-14));
      CHECK(n >= 0.5 - 1e-15);
      CHECK(n >= prev - 1e-15);
      prev = n;
    }
  }
}

TEST_CASE("lossy SNTJ path mixes in thermal noise") {
  const SntjParams p{0.014, 7.74e9, 0.8};
  const SntjParams ideal{0.014, 7.74e9, 1.0};
  const double expect = 0.8 * sntj_input_noise(ideal, 80e-6) + 0.2 * thermal_quanta(0.014, 7.74e9);
  CHECK(sntj_input_noise(p, 80e-6) == doctest::Approx(expect).epsilon(1e-13));
  SntjParams bad = p;
  bad.path_transmission = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("thermal quanta and unit conversion") {
  CHECK(thermal_quanta(300.0, 11e9) == doctest::Approx(568.27157727973732).epsilon(1e-12));
  CHECK(thermal_quanta(0.014, 11e9) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(idler_port_contribution(0.0, 11e9) == 0.5);
  const double psd = quanta_to_psd(2.0, 7.74e9);
  CHECK(psd == doctest::Approx(2.0 * phys::planck * 7.74e9));
  CHECK(psd_to_quanta(psd, 7.74e9) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("noiseless chain fit is exact") {
  const double g = 3.2e9, n_add = 2.05;
  NoiseSweep s;
  s.frequency_hz = 7e9;
  for (int i = 0; i < 21; ++i) {
    s.n_in.push_back(0.5 + 0.4 * i);
    s.n_out.push_back(g * (s.n_in.back() + n_add));
  }
  const auto f = fit_chain_noise(s);
  CHECK(std::abs(f.g_tot / g - 1.0) <= 1e-10);
  CHECK(std::abs(f.n_add - n_add) <= 1e-10);
  CHECK(f.points == 21);
  CHECK(f.warnings.empty());
}

TEST_CASE("chain fit errors and warnings") {
  NoiseSweep s;
  s.n_in = {1.0, 2.0};
  s.n_out = {1.0, 2.0};
  try {
    fit_chain_noise(s);
    FAIL("expected insufficient_points");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_points);
  }
  s.n_in = {1.0, 1.0, 1.0};
  s.n_out = {1.0, 2.0, 3.0};
  try {
    fit_chain_noise(s);
    FAIL("expected ill_conditioned_fit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ill_conditioned_fit);
  }
  s.n_in = {1.0, 2.0, 3.0};
  s.n_out = {3.0, 2.0, 1.0};
  try {
    fit_chain_noise(s);
    FAIL("expected unphysical_gain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unphysical_gain);
  }
  s.n_out = {0.5, 1.5, 2.5};  // intercept below zero
  const auto f = fit_chain_noise(s);
  CHECK(f.n_add < 0.0);
  CHECK(!f.warnings.empty());
}

TEST_CASE("chain fit is invariant under sample reordering") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  NoiseSweep s;
  for (int i = 0; i < 30; ++i) {
    s.n_in.push_back(0.5 + 0.3 * i);
    s.n_out.push_back(100.0 * (s.n_in.back() + 1.9) * (1.0 + 0.01 * gauss(rng)));
  }
  const auto a = fit_chain_noise(s);
  std::vector<std::size_t> idx(s.n_in.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  NoiseSweep t;
  for (auto i : idx) {
    t.n_in.push_back(s.n_in[i]);
    t.n_out.push_back(s.n_out[i]);
  }
  const auto b = fit_chain_noise(t);
  CHECK(b.n_add == doctest::Approx(a.n_add).epsilon(1e-12));
  CHECK(b.g_tot == doctest::Approx(a.g_tot).epsilon(1e-12));
  CHECK(b.n_add_err == doctest::Approx(a.n_add_err).epsilon(1e-9));
}

TEST_CASE("bias-voltage fit reproduces the generator") {
  const SntjParams p{0.014, 7.74e9, 1.0};
  std::vector<double> v, n;
  for (int i = -20; i <= 20; ++i) {
    v.push_back(i * 10e-6);
    n.push_back(1e9 * (sntj_input_noise(p, v.back()) + 2.0));
  }
  const auto f = fit_chain_noise_bias(p, v, n);
  CHECK(f.n_add == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.g_tot == doctest::Approx(1e9).epsilon(1e-10));
  const auto fa = fit_chain_noise_bias(p, v, n, NoiseUnit::quanta, SntjKernel::asymptotic);
  CHECK(std::abs(fa.n_add - 2.0) > 1e-6);  // kernel mismatch is visible
}

TEST_CASE("quantum-limit correction") {
  CHECK(quantum_limit_correction(1.0, 0.0) == 0.0);
  CHECK(quantum_limit_correction(1.0, 0.3) == 0.3);
  CHECK(quantum_limit_correction(1e300, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(quantum_limit_correction(phys::db_to_power_ratio(13.0), 0.0) ==
        doctest::Approx(0.47494063831863638575).epsilon(1e-14));
  double prev = -1.0;
  for (double g = 1.0; g < 1e4; g *= 1.1) {
    const double v = quantum_limit_correction(g, 0.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(quantum_limit_correction(0.5, 0.0), Error);
}

TEST_CASE("decomposition recovers noiseless parameters") {
  std::vector<GainNoisePoint> pts;
  for (double g : {3.0, 6.0, 9.0, 12.0, 15.0}) pts.push_back(gain_noise_point_db(g, 1.17 + 16.6 / phys::db_to_power_ratio(g), 0.01));
  const auto d = decompose_twpa_noise(pts, {Exclusion::none, {}, false});
  CHECK(d.n_twpa == doctest::Approx(1.17).epsilon(1e-12));
  CHECK(d.n_rem == doctest::Approx(16.6).epsilon(1e-12));
  CHECK(d.retained == 5);
}

TEST_CASE("default exclusion masks points above the noise minimum") {
  std::vector<GainNoisePoint> pts{gain_noise_point_db(5, 6.0), gain_noise_point_db(8, 4.0),
                                  gain_noise_point_db(11, 2.5), gain_noise_point_db(13, 2.0),
                                  gain_noise_point_db(14, 2.4), gain_noise_point_db(15, 3.1)};
  const auto d = decompose_twpa_noise(pts);
  CHECK(d.excluded == std::vector<bool>{false, false, false, false, true, true});
  CHECK(d.retained == 4);
  // A tie at the minimum keeps both tied points.
  pts[4].n_add = 2.0;
  const auto t = decompose_twpa_noise(pts);
  CHECK(t.excluded == std::vector<bool>{false, false, false, false, false, true});
}

TEST_CASE("decomposition is invariant under input order") {
  auto pts = synthesize_gain_noise({}, 11);
  const auto a = decompose_twpa_noise(pts);
  std::reverse(pts.begin(), pts.end());
  const auto b = decompose_twpa_noise(pts);
  CHECK(a.n_twpa == b.n_twpa);
  CHECK(a.n_rem == b.n_rem);
  CHECK(a.n_twpa_err == b.n_twpa_err);
  const auto w1 = decompose_twpa_noise(pts, {Exclusion::above_noise_minimum, {}, true});
  std::rotate(pts.begin(), pts.begin() + 3, pts.end());
  const auto w2 = decompose_twpa_noise(pts, {Exclusion::above_noise_minimum, {}, true});
  CHECK(w1.n_twpa == w2.n_twpa);
}

TEST_CASE("decomposition errors") {
  // The minimum sits at the second point, so only two gains survive.
  std::vector<GainNoisePoint> pts{gain_noise_point_db(5, 6.0), gain_noise_point_db(8, 2.0),
                                  gain_noise_point_db(11, 3.0), gain_noise_point_db(13, 3.5)};
  try {
    decompose_twpa_noise(pts);
    FAIL("expected insufficient_points");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_points);
  }
  CHECK_THROWS_AS(decompose_twpa_noise(pts, {Exclusion::manual, {true}, false}), Error);
  CHECK_THROWS_AS(decompose_twpa_noise(pts, {Exclusion::none, {}, true}), Error);  // zero errors
}

TEST_CASE("synthetic scenarios are deterministic") {
  const auto a = synthesize_gain_noise({}, 3), b = synthesize_gain_noise({}, 3);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].n_add == b[i].n_add);
  const auto c = synthesize_gain_noise({}, 4);
  CHECK(c[0].n_add != a[0].n_add);
  const auto y1 = synthesize_yfactor({}, 9), y2 = synthesize_yfactor({}, 9);
  CHECK(y1.size() == 21);
  CHECK(y1[5].n_out == y2[5].n_out);
}

TEST_CASE("attenuation calibration closes exactly") {
  std::vector<AttenuationRow> rows;
  for (int k = 0; k < 20; ++k) {
    const double f = 4e9 + 0.25e9 * k;
    const double a = std::pow(10.0, -(60.0 + 0.3 * k) / 10.0);
    const double g = std::pow(10.0, (85.0 + 0.7 * std::sin(k)) / 10.0);
    const double s_in = quanta_to_psd(0.5 + 0.05 * k, f);
    const double p_vna = 1e-7 * (1.0 + k);
    rows.push_back({f, p_vna, a * g * p_vna, s_in, g * s_in});
    CHECK(output_gain(g * s_in, s_in) == doctest::Approx(g).epsilon(1e-14));
  }
  const auto cal = calibrate_attenuation(rows);
  for (int k = 0; k < 20; ++k) {
    const double a = std::pow(10.0, -(60.0 + 0.3 * k) / 10.0);
    CHECK(std::abs(cal.attenuation[k] / a - 1.0) <= 1e-12);
    CHECK(!cal.inconsistent[k]);
  }
  CHECK(cal.warnings.empty());
  rows[3].p_out_w *= 1e8;  // gain on the input line
  const auto bad = calibrate_attenuation(rows);
  CHECK(bad.inconsistent[3]);
  CHECK(!bad.warnings.empty());
}

TEST_CASE("pump power at the device") {
  CHECK(power_at_device(-15.8, 61.0) == doctest::Approx(-76.8).epsilon(1e-14));
  CHECK_THROWS_AS(power_at_device(-15.8, -3.0), Error);
}

}
