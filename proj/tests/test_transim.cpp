#include <doctest.h>

#include "dtwpa/error.hpp"
#include "dtwpa/filtsynth.hpp"
#include "dtwpa/rfnet.hpp"
#include "dtwpa/transim.hpp"
#include "dtwpa/twpa.hpp"

#include <cmath>
#include <cstring>

using namespace dtwpa;

namespace {

// Port 1 and port 2 joined by one series junction.
Netlist single_junction(double ic = 5e-6) {
  Netlist net;
  const int a = net.add_node("a"), b = net.add_node("b");
  net.add_josephson(a, b, ic, "B1");
  net.add_capacitor(a, 0, 10e-15);
  net.add_capacitor(b, 0, 10e-15);
  net.add_port(a, 50.0);
  net.add_port(b, 50.0);
  return net;
}

SimConfig sim_for(double f_max, double window, double settle) {
  SimConfig cfg;
  cfg.dt = window / std::ceil(window * f_max * 200.0);
  cfg.settle_time = std::round(settle / cfg.dt) * cfg.dt;
  cfg.t_end = cfg.settle_time + window;
  return cfg;
}

std::complex<double> s_transient(const Netlist& net, double f, int in, int out, double dbm = -120.0,
                                 double phase = 0.0) {
  DriveConfig d;
  d.ramp_time = 1e-9;
  d.tones.push_back({in, f, dbm, phase});
  const auto cfg = sim_for(f, commensurate_window(std::vector<double>{f}, 10e-9), 5e-9);
  const auto r = simulate_transient(net, d, cfg);
  return extract_tone(r, out, f) / extract_tone(r, in, f, Wave::incident);
}

}  // namespace

TEST_SUITE("transim") {

TEST_CASE("available power convention") {
  CHECK(tone_emf_amplitude(-67.0, 50.0) == doctest::Approx(std::sqrt(8 * 50 * 1e-3 * std::pow(10, -6.7))));
  DriveConfig d;
  d.ramp_time = 1e-9;
  d.tones.push_back({1, 1e9, -60.0, 0.0});
  double v[2];
  const double z0[2] = {50.0, 50.0};
  d.source_voltages(0.0, z0, v);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 0.0);
  d.source_voltages(3e-9, z0, v);
  CHECK(v[1] == doctest::Approx(tone_emf_amplitude(-60.0, 50.0)));
  d.source_voltages(0.5e-9, z0, v);
  CHECK(std::abs(v[1]) < tone_emf_amplitude(-60.0, 50.0));
}

TEST_CASE("window and step helpers") {
  const std::vector<double> f{6e9, 8.5e9, 11e9};
  CHECK(commensurate_window(f, 20e-9) == doctest::Approx(20e-9).epsilon(1e-12));
  CHECK(commensurate_window(f, 19e-9) == doctest::Approx(20e-9).epsilon(1e-12));
  const std::vector<double> g{6.1e9, 8.5e9};
  CHECK(commensurate_window(g, 11e-9) == doctest::Approx(20e-9).epsilon(1e-12));
  const double dt = choose_dt(12e9, 20e-9);
  CHECK(dt * 12e9 * min_points_per_period <= 1.0 + 1e-12);
  CHECK(20e-9 / dt == doctest::Approx(std::round(20e-9 / dt)).epsilon(1e-12));
}

TEST_CASE("two-tone extraction on a commensurate grid") {
  const double dt = 1e-12, t0 = 3.7e-9;
  const int m = 20000;
  std::vector<double> x(m);
  const std::complex<double> a1 = std::polar(0.7, 0.3), a2 = std::polar(1e-3, -2.1);
  for (int k = 0; k < m; ++k) {
    const double t = t0 + k * dt;
    x[k] = 0.25 + std::real(a1 * std::exp(std::complex<double>(0, 2 * M_PI * 6e9 * t))) +
           std::real(a2 * std::exp(std::complex<double>(0, 2 * M_PI * 11e9 * t)));
  }
  CHECK(std::abs(tone_amplitude(x, t0, dt, 6e9) - a1) < 1e-10);
  CHECK(std::abs(tone_amplitude(x, t0, dt, 11e9) - a2) < 1e-10);
  CHECK(std::abs(tone_amplitude(x, t0, dt, 0.0) - 0.25) < 1e-10);
  CHECK(std::abs(tone_amplitude(x, t0, dt, 8.5e9)) < 1e-10);
}

TEST_CASE("non-commensurate tones need a taper") {
  const double dt = 1e-12;
  const int m = 10000;
  std::vector<double> x(m);
  const double f = 5.03e9;  // 50.3 cycles
  for (int k = 0; k < m; ++k) x[k] = std::cos(2 * M_PI * f * k * dt);
  try {
    tone_amplitude(x, 0.0, dt, f);
    FAIL("expected non_commensurate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_commensurate);
  }
  const auto h = tone_amplitude(x, 0.0, dt, f, Window::hann);
  CHECK(std::abs(h - 1.0) < 1e-3);
}

TEST_CASE("zero drive gives an exactly zero response") {
  TwpaDesign d;
  d.n_cells = 12;
  SimConfig cfg;
  cfg.dt = 1e-12;
  cfg.t_end = 2e-9;
  const auto r = simulate_transient(build_twpa_netlist(d), {}, cfg);
  CHECK(r.port_voltage.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.port_current.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.max_abs_phase.maxCoeff() == 0.0);
}

TEST_CASE("linear ladder matches nodal analysis and conserves energy") {
  FilterSpec spec;
  const auto lp = synthesize_lowpass(spec, chebyshev_prototype(5, 0.1, Termination::singly));
  const Netlist net = ladder_netlist(lp);
  for (double f : {3e9, 6.5e9, 9e9}) {
    const auto s21 = s_transient(net, f, 0, 1);
    const auto s11 = s_transient(net, f, 0, 0);
    const auto ref = nport_sparams_at(net, f);
    CHECK(std::abs(20 * std::log10(std::abs(s21)) - 20 * std::log10(std::abs(ref(1, 0)))) < 0.01);
    CHECK(std::norm(s11) + std::norm(s21) == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("weakly driven junction behaves as L_J0") {
  const Netlist net = single_junction();
  for (double f : {2e9, 7e9}) {
    const auto s = s_transient(net, f, 0, 1);
    const auto ref = nport_sparams_at(net, f);  // junction as its linear inductance
    CHECK(std::abs(s - ref(1, 0)) < 2e-3);
  }
}

TEST_CASE("overdriven junction slips phase and is flagged") {
  // Past I_c the junction switches; with the rate guard lifted the run
  // continues and the excursion shows up on the warning channel.
  const Netlist net = single_junction();
  const auto weak = s_transient(net, 1e9, 0, 1);
  DriveConfig d;
  d.ramp_time = 1e-9;
  d.tones.push_back({0, 1e9, -62.0, 0.0});
  SimConfig cfg;
  cfg.dt = 1e-12;
  cfg.settle_time = 5e-9;
  cfg.t_end = 15e-9;
  CHECK_THROWS_AS(simulate_transient(net, d, cfg), Error);
  cfg.max_phase_rate = 1e20;
  const auto r = simulate_transient(net, d, cfg);
  CHECK(r.max_abs_phase[0] > M_PI / 2);
  REQUIRE(!r.warnings.empty());
  CHECK(r.warnings[0].find("B1") != std::string::npos);
  const auto strong = extract_tone(r, 1, 1e9) / extract_tone(r, 0, 1e9, Wave::incident);
  CHECK(std::abs(strong) < std::abs(weak) - 0.01);
}

TEST_CASE("runaway and Newton failures") {
  const Netlist net = single_junction();
  DriveConfig d;
  d.tones.push_back({0, 1e9, -58.0, 0.0});
  d.ramp_time = 0.2e-9;
  SimConfig cfg = sim_for(1e9, 2e-9, 1e-9);
  cfg.max_phase_rate = 1.0;
  try {
    simulate_transient(net, d, cfg);
    FAIL("expected junction_runaway");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::junction_runaway);
    CHECK(std::string(e.what()).find("B1") != std::string::npos);
  }
  cfg.max_phase_rate = 0.0;
  cfg.max_newton_iters = 1;
  cfg.newton_tol = 1e-15;
  try {
    simulate_transient(net, d, cfg);
    FAIL("expected newton_nonconvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::newton_nonconvergence);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("configuration checks") {
  const Netlist net = single_junction();
  DriveConfig d;
  d.tones.push_back({0, 10e9, -100.0, 0.0});
  d.ramp_time = 1e-9;
  SimConfig cfg;
  cfg.dt = 5e-12;  // 20 points per period
  cfg.settle_time = 5e-9;
  cfg.t_end = 10e-9;
  CHECK_THROWS_AS(simulate_transient(net, d, cfg), Error);
  cfg.dt = 1e-12;
  cfg.settle_time = 2e-9;  // < 5 ramps
  CHECK_THROWS_AS(simulate_transient(net, d, cfg), Error);
  cfg.enforce_resolution = false;
  CHECK_NOTHROW(simulate_transient(net, d, cfg));
  d.tones[0].port = 7;
  CHECK_THROWS_AS(simulate_transient(net, d, cfg), Error);
}

TEST_CASE("identical configurations give bit-identical records") {
  TwpaDesign td;
  td.n_cells = 30;
  const Netlist net = build_twpa_netlist(td);
  DriveConfig d;
  d.ramp_time = 0.5e-9;
  d.tones.push_back({0, 8.5e9, -70.0, 0.0});
  d.tones.push_back({0, 6e9, -100.0, 0.0});
  const auto cfg = sim_for(11e9, 2e-9, 2.5e-9);
  const auto a = simulate_transient(net, d, cfg), b = simulate_transient(net, d, cfg);
  CHECK(a.port_voltage == b.port_voltage);
  CHECK(a.port_current == b.port_current);
  CHECK(timeseries_binary(a) == timeseries_binary(b));
}

TEST_CASE("time-series dump layout") {
  const Netlist net = single_junction();
  DriveConfig d;
  d.tones.push_back({0, 1e9, -100.0, 0.0});
  SimConfig cfg;
  cfg.dt = 1e-11;
  cfg.t_end = 1e-9;
  cfg.recorded_nodes = {1};
  cfg.recorded_junctions = {0};
  const auto r = simulate_transient(net, d, cfg);
  const auto bin = timeseries_binary(r);
  const std::size_t rec = 8 + 2 * 24 + 8;
  REQUIRE(bin.size() == 32 + static_cast<std::size_t>(r.samples()) * rec);
  CHECK(bin.substr(0, 8) == "DTWPATS1");
  std::uint32_t ports, nodes;
  std::uint64_t samples;
  double dt, v;
  std::memcpy(&ports, bin.data() + 8, 4);
  std::memcpy(&nodes, bin.data() + 12, 4);
  std::memcpy(&samples, bin.data() + 16, 8);
  std::memcpy(&dt, bin.data() + 24, 8);
  CHECK(ports == 2);
  CHECK(nodes == 1);
  CHECK(samples == static_cast<std::uint64_t>(r.samples()));
  CHECK(dt == 1e-11);
  const long k = r.samples() / 2;
  std::memcpy(&v, bin.data() + 32 + k * rec + 8, 8);
  CHECK(v == r.port_voltage(k, 0));
  std::memcpy(&v, bin.data() + 32 + k * rec + 8 + 2 * 24, 8);
  CHECK(v == r.node_voltage(k, 0));
  CHECK(r.junction_phase.cols() == 1);
}

TEST_CASE("photon-flux bookkeeping") {
  CHECK(photon_flux_check(1.0, 0.0) == 0.0);
  CHECK(photon_flux_check(20.0, 19.0) == doctest::Approx(0.0));
  CHECK(photon_flux_check(20.0, 17.0) == doctest::Approx(0.1));
}

TEST_CASE("P1dB interpolation against a saturating-gain model") {
  const double g0_db = 20.0, psat_dbm = -100.0;
  std::vector<double> p, g;
  for (double x = -130.0; x <= -90.0; x += 1.0) {
    p.push_back(x);
    g.push_back(g0_db - 10 * std::log10(1.0 + std::pow(10.0, (x - psat_dbm) / 10.0)));
  }
  const auto r = find_p1db(p, g, g0_db);
  const double expect = psat_dbm + 10 * std::log10(std::pow(10.0, 0.1) - 1.0);
  REQUIRE(r.p1db_dbm.has_value());
  CHECK(r.status == P1dbStatus::bracketed);
  CHECK(std::abs(*r.p1db_dbm - expect) < 0.1);
  const auto r2 = find_p1db(p, g);
  CHECK(std::abs(*r2.p1db_dbm - expect) < 0.1);

  const std::vector<double> flat(p.size(), 12.0);
  const auto f = find_p1db(p, flat);
  CHECK(f.status == P1dbStatus::absent);
  CHECK(!f.p1db_dbm.has_value());

  std::vector<double> falling;
  for (std::size_t i = 0; i < p.size(); ++i) falling.push_back(15.0 - 0.5 * static_cast<double>(i));
  const auto u = find_p1db(p, falling);
  CHECK(u.status == P1dbStatus::unbracketed_below);
  CHECK(*u.p1db_dbm <= p.front());
}

}

TEST_SUITE("transim_pumped") {

// A 600-cell line pumped hard enough for a few dB of gain.
struct Pumped {
  Netlist dev;
  DriveConfig pump;
  SimConfig cfg;
  Pumped(double dt) {
    TwpaDesign td;
    td.n_cells = 600;
    const Netlist dip = synthesize_diplexer({});
    dev = assemble_device(build_twpa_netlist(td), dip, dip);
    pump.ramp_time = 2e-9;
    pump.tones.push_back({device_port::high_in, 8.5e9, -66.0, 0.0});
    cfg.dt = dt;
    cfg.settle_time = 10e-9;
    cfg.t_end = 20e-9;
  }
  std::vector<double> gain(std::vector<double> fs) const {
    GainOptions opt;
    opt.measure_s43 = false;
    std::vector<double> g;
    for (const auto& p : pumped_gain_profile(dev, pump, fs, -110.0, cfg, opt)) g.push_back(p.s21_db);
    return g;
  }
  // Same measurement with the probe phase shifted.
  double gain_with_phase(double fs, double phase) const {
    DriveConfig d = pump;
    d.tones.push_back({device_port::low_in, fs, -110.0, phase});
    const auto r = simulate_transient(dev, d, cfg), r0 = simulate_transient(dev, pump, cfg);
    const auto b = extract_tone(r, device_port::low_out, fs) - extract_tone(r0, device_port::low_out, fs);
    return 20 * std::log10(std::abs(b / extract_tone(r, device_port::low_in, fs, Wave::incident)));
  }
};

TEST_CASE("pumped gain is insensitive to the signal phase") {
  const Pumped p(1e-12);
  const double g0 = p.gain({6.5e9})[0], g1 = p.gain_with_phase(6.5e9, M_PI / 2);
  MESSAGE("gain " << g0 << " dB");
  CHECK(g0 > 1.0);
  CHECK(std::abs(g0 - g1) < 0.01);
}

TEST_CASE("halving dt moves the pumped gain by < 0.05 dB") {
  const double g1 = Pumped(0.5e-12).gain({6.5e9})[0], g2 = Pumped(0.25e-12).gain({6.5e9})[0];
  MESSAGE("gain " << g1 << " / " << g2 << " dB");
  CHECK(std::abs(g1 - g2) < 0.05);
}

}
