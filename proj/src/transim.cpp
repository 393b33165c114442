#include "dtwpa/transim.hpp"

#include "dtwpa/constants.hpp"
#include "dtwpa/error.hpp"
#include "dtwpa/parallel.hpp"
#include "dtwpa/twpa.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace dtwpa {

double tone_emf_amplitude(double power_dbm, double z0) {
  require(z0 > 0.0, "port impedance must be > 0");
  return std::sqrt(8.0 * z0 * phys::dbm_to_watt(power_dbm));
}

void DriveConfig::source_voltages(double t, std::span<const double> z0,
                                  std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  double env = 1.0;
  if (ramp_time > 0.0 && t < ramp_time) env = 0.5 * (1.0 - std::cos(phys::pi * t / ramp_time));
  for (const auto& tone : tones) {
    const double amp = tone_emf_amplitude(tone.power_dbm, z0[tone.port]);
    out[tone.port] += env * amp * std::cos(2.0 * phys::pi * tone.frequency_hz * t + tone.phase_rad);
  }
}

long SimConfig::steps() const { return std::lround(t_end / dt); }
long SimConfig::settle_steps() const { return std::lround(settle_time / dt); }

double choose_dt(double f_max, double window) {
  require(f_max > 0.0 && window > 0.0, "f_max and window must be > 0");
  const double n = std::ceil(window * f_max * min_points_per_period);
  return window / n;
}

double commensurate_window(std::span<const double> freqs, double min_window) {
  require(!freqs.empty() && min_window > 0.0, "need frequencies and a positive window");
  long long g = 0;
  for (double f : freqs) {
    require(f >= 1.0, "frequencies must be >= 1 Hz");
    g = std::gcd(g, std::llround(f));
  }
  const double base = 1.0 / static_cast<double>(g);
  return std::ceil(min_window / base * (1.0 - 1e-12)) * base;
}

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

using SpMat = Eigen::SparseMatrix<double>;

struct Branch {
  int a;  // unknown index or -1 for ground
  int b;
  double g;
};

struct Junction {
  int a;
  int b;
  double ic;
  // value-array offsets of the (a,a), (b,b), (a,b), (b,a) entries, -1 if absent
  Eigen::Index paa = -1, pbb = -1, pab = -1, pba = -1;
};

double diff(const Eigen::VectorXd& v, int a, int b) {
  return (a >= 0 ? v[a] : 0.0) - (b >= 0 ? v[b] : 0.0);
}

Eigen::Index value_offset(const SpMat& m, int row, int col) {
  const auto* outer = m.outerIndexPtr();
  const auto* inner = m.innerIndexPtr();
  for (auto k = outer[col]; k < outer[col + 1]; ++k) {
    if (inner[k] == row) return k;
  }
  return -1;
}

void validate_config(const Netlist& net, const DriveConfig& drives, const SimConfig& cfg) {
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), "dt must be > 0");
  require(cfg.t_end > 0.0 && cfg.steps() >= 1, "t_end must cover at least one step");
  require(cfg.settle_time >= 0.0 && cfg.settle_steps() < cfg.steps(),
          "settle_time must lie inside [0, t_end)");
  require(cfg.newton_tol > 0.0 && cfg.max_newton_iters >= 1, "bad Newton settings");
  require(drives.ramp_time >= 0.0, "ramp_time must be >= 0");
  const int p = static_cast<int>(net.port_count());
  for (const auto& tone : drives.tones) {
    require(tone.port >= 0 && tone.port < p, "tone port index out of range");
    require(tone.frequency_hz > 0.0, "tone frequency must be > 0");
    require(std::isfinite(tone.power_dbm), "tone power must be finite");
    if (cfg.enforce_resolution) {
      require(cfg.dt * tone.frequency_hz * min_points_per_period <= 1.0 + 1e-9,
              "dt must give at least 40 points per period of every tone");
    }
  }
  if (cfg.enforce_resolution) {
    require(cfg.settle_time >= min_settle_ramps * drives.ramp_time * (1.0 - 1e-12),
            "settle_time must be at least 5 ramp times");
  }
  for (int n : cfg.recorded_nodes) {
    require(n >= 0 && n < static_cast<int>(net.node_count()), "recorded node out of range");
  }
  for (int j : cfg.recorded_junctions) {
    require(j >= 0 && j < static_cast<int>(net.junction_count()), "recorded junction out of range");
  }
}

}  // namespace

TransientResult simulate_transient(const Netlist& net, const DriveConfig& drives,
                                   const SimConfig& cfg) {
  net.validate();
  validate_config(net, drives, cfg);

  const int n = static_cast<int>(net.node_count()) - 1;
  const int p = static_cast<int>(net.port_count());
  const double dt = cfg.dt;
  const double kappa = phys::pi * dt / phys::flux_quantum;
  const double rate_limit = cfg.max_phase_rate > 0.0 ? cfg.max_phase_rate : 0.25 * phys::pi / dt;

  // Companion conductances. Capacitor loss is ignored in the time domain.
  std::vector<Branch> caps, inds;
  std::vector<Junction> jjs;
  std::vector<std::string> jj_names;
  std::vector<Eigen::Triplet<double>> trip;
  auto stamp = [&](int a, int b, double g) {
    if (a >= 0) trip.emplace_back(a, a, g);
    if (b >= 0) trip.emplace_back(b, b, g);
    if (a >= 0 && b >= 0) {
      trip.emplace_back(a, b, -g);
      trip.emplace_back(b, a, -g);
    }
  };
  for (const auto& e : net.elements()) {
    const int a = e.n1 - 1, b = e.n2 - 1;
    switch (e.kind) {
      case ElementKind::resistor: stamp(a, b, 1.0 / e.value); break;
      case ElementKind::capacitor:
        caps.push_back({a, b, 2.0 * e.value / dt});
        stamp(a, b, caps.back().g);
        break;
      case ElementKind::inductor:
        inds.push_back({a, b, dt / (2.0 * e.value)});
        stamp(a, b, inds.back().g);
        break;
      case ElementKind::josephson:
        jjs.push_back({a, b, e.value});
        jj_names.push_back(e.name);
        stamp(a, b, 0.0);  // reserve the pattern
        break;
    }
  }
  std::vector<double> z0(p);
  for (int q = 0; q < p; ++q) {
    z0[q] = net.ports()[q].z0;
    trip.emplace_back(net.ports()[q].node - 1, net.ports()[q].node - 1, 1.0 / z0[q]);
  }
  SpMat glin(n, n);
  glin.setFromTriplets(trip.begin(), trip.end());
  glin.makeCompressed();
  for (auto& j : jjs) {
    if (j.a >= 0) j.paa = value_offset(glin, j.a, j.a);
    if (j.b >= 0) j.pbb = value_offset(glin, j.b, j.b);
    if (j.a >= 0 && j.b >= 0) {
      j.pab = value_offset(glin, j.a, j.b);
      j.pba = value_offset(glin, j.b, j.a);
    }
  }

  SpMat jac = glin;
  Eigen::SimplicialLDLT<SpMat> solver;
  solver.analyzePattern(jac);

  const long steps = cfg.steps();
  TransientResult res;
  res.dt = dt;
  res.settle_index = cfg.settle_steps();
  res.settle_time = static_cast<double>(res.settle_index) * dt;
  res.time.resize(steps + 1);
  res.port_voltage.setZero(steps + 1, p);
  res.port_current.setZero(steps + 1, p);
  res.source_voltage.setZero(steps + 1, p);
  res.port_z0 = z0;
  res.recorded_nodes = cfg.recorded_nodes;
  res.node_voltage.setZero(steps + 1, static_cast<Eigen::Index>(cfg.recorded_nodes.size()));
  res.recorded_junctions = cfg.recorded_junctions;
  res.junction_phase.setZero(steps + 1, static_cast<Eigen::Index>(cfg.recorded_junctions.size()));
  res.max_abs_phase.setZero(static_cast<Eigen::Index>(jjs.size()));

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n), v_prev = v, v_prev2 = v, v_new(n), rhs(n),
                  resid(n), delta(n);
  std::vector<double> ic_cap(caps.size(), 0.0), il_ind(inds.size(), 0.0);
  std::vector<double> phi(jjs.size(), 0.0), vd_old(jjs.size(), 0.0), cos_fact(jjs.size(), 2.0);
  std::vector<char> warned(jjs.size(), 0);
  std::vector<double> vs(p, 0.0);

  auto record = [&](long k, double t) {
    res.time[k] = t;
    for (int q = 0; q < p; ++q) {
      const double vp = v[net.ports()[q].node - 1];
      res.port_voltage(k, q) = vp;
      res.source_voltage(k, q) = vs[q];
      res.port_current(k, q) = (vs[q] - vp) / z0[q];
    }
    for (std::size_t i = 0; i < cfg.recorded_nodes.size(); ++i) {
      const int node = cfg.recorded_nodes[i];
      res.node_voltage(k, static_cast<Eigen::Index>(i)) = node == 0 ? 0.0 : v[node - 1];
    }
    for (std::size_t i = 0; i < cfg.recorded_junctions.size(); ++i) {
      res.junction_phase(k, static_cast<Eigen::Index>(i)) = phi[cfg.recorded_junctions[i]];
    }
  };

  auto factorize = [&](const Eigen::VectorXd& at) {
    std::copy(glin.valuePtr(), glin.valuePtr() + glin.nonZeros(), jac.valuePtr());
    for (std::size_t i = 0; i < jjs.size(); ++i) {
      const auto& j = jjs[i];
      const double c = std::cos(phi[i] + kappa * (diff(at, j.a, j.b) + vd_old[i]));
      const double g = j.ic * kappa * c;
      if (j.paa >= 0) jac.valuePtr()[j.paa] += g;
      if (j.pbb >= 0) jac.valuePtr()[j.pbb] += g;
      if (j.pab >= 0) jac.valuePtr()[j.pab] -= g;
      if (j.pba >= 0) jac.valuePtr()[j.pba] -= g;
      cos_fact[i] = c;
    }
    solver.factorize(jac);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_matrix, "transient Jacobian could not be factorized");
    }
    ++res.factorizations;
  };

  drives.source_voltages(0.0, z0, vs);
  record(0, 0.0);
  factorize(v);

  double src_scale = 0.0;
  for (const auto& tone : drives.tones) {
    src_scale = std::max(src_scale, tone_emf_amplitude(tone.power_dbm, z0[tone.port]));
  }
  const double v_floor = std::max(src_scale * 1e-6, std::numeric_limits<double>::min());

  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    drives.source_voltages(t, z0, vs);

    // Constant part of the nodal equations for this step.
    rhs.setZero();
    for (std::size_t i = 0; i < caps.size(); ++i) {
      const auto& c = caps[i];
      const double hist = c.g * diff(v, c.a, c.b) + ic_cap[i];
      if (c.a >= 0) rhs[c.a] += hist;
      if (c.b >= 0) rhs[c.b] -= hist;
    }
    for (std::size_t i = 0; i < inds.size(); ++i) {
      const auto& l = inds[i];
      const double hist = il_ind[i] + l.g * diff(v, l.a, l.b);
      if (l.a >= 0) rhs[l.a] -= hist;
      if (l.b >= 0) rhs[l.b] += hist;
    }
    for (int q = 0; q < p; ++q) rhs[net.ports()[q].node - 1] += vs[q] / z0[q];
    for (std::size_t i = 0; i < jjs.size(); ++i) vd_old[i] = diff(v, jjs[i].a, jjs[i].b);

    // Quadratic extrapolation once enough history exists.
    if (k >= 3) {
      v_new = 3.0 * (v - v_prev) + v_prev2;
    } else if (k == 2) {
      v_new = 2.0 * v - v_prev;
    } else {
      v_new = v;
    }
    bool converged = false;
    double last = std::numeric_limits<double>::infinity();
    double res_norm = 0.0;
    int it = 0;
    for (; it < cfg.max_newton_iters; ++it) {
      resid.noalias() = glin * v_new;
      resid -= rhs;
      for (std::size_t i = 0; i < jjs.size(); ++i) {
        const auto& j = jjs[i];
        const double cur = j.ic * std::sin(phi[i] + kappa * (diff(v_new, j.a, j.b) + vd_old[i]));
        if (j.a >= 0) resid[j.a] += cur;
        if (j.b >= 0) resid[j.b] -= cur;
      }
      res_norm = resid.lpNorm<Eigen::Infinity>();
      delta = solver.solve(-resid);
      v_new += delta;
      const double step = delta.lpNorm<Eigen::Infinity>();
      const double scale = std::max(v_new.lpNorm<Eigen::Infinity>(), v_floor);
      if (!std::isfinite(step)) break;
      // Linear networks are solved exactly by one step. Otherwise the chord
      // error is bounded by step * rho / (1 - rho) once rho is measured.
      const double rho = it >= 1 ? step / last : 1.0;
      const double err = rho < 1.0 ? step * std::min(1.0, rho / (1.0 - rho)) : step;
      if (jjs.empty() || err <= cfg.newton_tol * scale) {
        converged = true;
        ++it;
        break;
      }
      // Chord iteration: refresh the Jacobian only when contraction is slow.
      if (!jjs.empty() && it >= 1 && step > 0.5 * last) factorize(v_new);
      last = step;
    }
    res.newton_iterations += it;
    if (!converged) {
      throw Error(ErrorCode::newton_nonconvergence,
                  "step " + std::to_string(k) + " (t = " + sci(t) + " s), residual " +
                      sci(res_norm) + " A");
    }
    // The next step starts from a fresh linearization if this one needed work.
    if (!jjs.empty() && it > 4) factorize(v_new);

    // Advance states.
    for (std::size_t i = 0; i < caps.size(); ++i) {
      const auto& c = caps[i];
      ic_cap[i] = c.g * (diff(v_new, c.a, c.b) - diff(v, c.a, c.b)) - ic_cap[i];
    }
    for (std::size_t i = 0; i < inds.size(); ++i) {
      const auto& l = inds[i];
      il_ind[i] += l.g * (diff(v_new, l.a, l.b) + diff(v, l.a, l.b));
    }
    for (std::size_t i = 0; i < jjs.size(); ++i) {
      const double dphi = kappa * (diff(v_new, jjs[i].a, jjs[i].b) + vd_old[i]);
      if (std::abs(dphi) / dt > rate_limit) {
        throw Error(ErrorCode::junction_runaway,
                    "junction " + jj_names[i] + " at step " + std::to_string(k) +
                        ": |dphi/dt| = " + sci(std::abs(dphi) / dt) + " rad/s");
      }
      phi[i] += dphi;
      const double a = std::abs(phi[i]);
      if (a > res.max_abs_phase[static_cast<Eigen::Index>(i)]) {
        res.max_abs_phase[static_cast<Eigen::Index>(i)] = a;
      }
      if (a > 0.5 * phys::pi && !warned[i]) {
        warned[i] = 1;
        res.warnings.push_back("junction " + jj_names[i] + " exceeded |phi| = pi/2 at step " +
                               std::to_string(k));
      }
    }
    v_prev2 = v_prev;
    v_prev = v;
    v = v_new;
    record(k, t);
  }
  return res;
}

std::complex<double> tone_amplitude(std::span<const double> x, double t0, double dt, double f,
                                    Window window) {
  require(!x.empty() && dt > 0.0 && f >= 0.0, "tone extraction needs samples, dt > 0, f >= 0");
  const auto m = static_cast<double>(x.size());
  if (window == Window::rectangular) {
    const double cycles = f * m * dt;
    if (std::abs(cycles - std::round(cycles)) > 1e-6 * std::max(1.0, cycles)) {
      throw Error(ErrorCode::non_commensurate,
                  std::to_string(f) + " Hz completes " + std::to_string(cycles) +
                      " cycles over the window; use a Hann window");
    }
  }
  const double w = 2.0 * phys::pi * f;
  std::complex<double> acc = 0.0;
  double wsum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double wk = 1.0;
    if (window == Window::hann) {
      wk = 0.5 * (1.0 - std::cos(2.0 * phys::pi * static_cast<double>(k) / m));
    }
    const double t = t0 + static_cast<double>(k) * dt;
    acc += wk * x[k] * std::complex<double>(std::cos(w * t), -std::sin(w * t));
    wsum += wk;
  }
  // A DC component is returned as its mean, not doubled.
  return (f == 0.0 ? 1.0 : 2.0) * acc / wsum;
}

Eigen::VectorXd port_wave(const TransientResult& r, int port, Wave wave) {
  require(port >= 0 && port < r.port_voltage.cols(), "port index out of range");
  const double norm = 2.0 * std::sqrt(r.port_z0[port]);
  if (wave == Wave::incident) return r.source_voltage.col(port) / norm;
  return (2.0 * r.port_voltage.col(port) - r.source_voltage.col(port)) / norm;
}

std::complex<double> extract_tone(const TransientResult& r, int port, double f, Wave wave,
                                  Window window) {
  const Eigen::VectorXd w = port_wave(r, port, wave);
  const long m = r.window_samples();
  require(m >= 1, "empty analysis window");
  return tone_amplitude(std::span<const double>(w.data() + r.settle_index, static_cast<std::size_t>(m)),
                        r.time[r.settle_index], r.dt, f, window);
}

SpectralResult extract_spectrum(const TransientResult& r, int port, std::span<const double> freqs,
                                Wave wave, Window window) {
  SpectralResult out;
  out.port = port;
  out.frequencies.assign(freqs.begin(), freqs.end());
  const Eigen::VectorXd w = port_wave(r, port, wave);
  const std::span<const double> seg(w.data() + r.settle_index,
                                    static_cast<std::size_t>(r.window_samples()));
  for (double f : freqs) {
    out.amplitudes.push_back(tone_amplitude(seg, r.time[r.settle_index], r.dt, f, window));
  }
  return out;
}

double photon_flux_check(double gs, double gi) {
  require(gs > 0.0 && gi >= 0.0, "gains must be positive");
  return std::abs(gi - (gs - 1.0)) / gs;
}

namespace {

double db20(std::complex<double> x) { return 20.0 * std::log10(std::abs(x)); }

double pump_frequency(const DriveConfig& pump) {
  double f = 0.0;
  for (const auto& t : pump.tones) f = std::max(f, t.frequency_hz);
  return f;
}

}  // namespace

std::vector<GainPoint> pumped_gain_profile(const Netlist& device, const DriveConfig& pump,
                                           std::span<const double> signal_freqs,
                                           double signal_power_dbm, const SimConfig& cfg,
                                           const GainOptions& opt) {
  const int ports = static_cast<int>(device.port_count());
  require(ports >= 2, "device needs at least two ports");
  require(opt.signal_port < ports && opt.signal_out_port < ports, "signal port out of range");
  const bool s43 = opt.measure_s43 && opt.high_in_port < ports && opt.high_out_port < ports;
  const double fp = pump_frequency(pump);
  const bool pumped = !pump.tones.empty();

  // Pump-only reference. Its outgoing waves (ramp transients, resonator
  // ringing leaking into the bins) are subtracted from every probed run.
  std::optional<TransientResult> ref;
  if (pumped) ref = simulate_transient(device, pump, cfg);
  auto outgoing = [&](const TransientResult& r, int port, double f) {
    auto b = extract_tone(r, port, f, Wave::outgoing);
    if (ref) b -= extract_tone(*ref, port, f, Wave::outgoing);
    return b;
  };

  std::vector<GainPoint> out(signal_freqs.size());
  parallel_for(signal_freqs.size(), opt.threads, [&](std::size_t k) {
    const double fs = signal_freqs[k];
    GainPoint g;
    g.frequency_hz = fs;
    g.s43_db = std::numeric_limits<double>::quiet_NaN();
    g.idler_conversion_db = std::numeric_limits<double>::quiet_NaN();
    g.flux_residual = std::numeric_limits<double>::quiet_NaN();

    DriveConfig d = pump;
    d.tones.push_back({opt.signal_port, fs, signal_power_dbm, 0.0});
    const auto r = simulate_transient(device, d, cfg);
    const auto a1 = extract_tone(r, opt.signal_port, fs, Wave::incident);
    const auto b2 = outgoing(r, opt.signal_out_port, fs);
    g.s21_db = db20(b2 / a1);
    if (pumped && 2.0 * fp > fs) {
      g.idler_frequency_hz = idler_frequency(fp, fs);
      const double fi = g.idler_frequency_hz;
      const double flux_in = std::norm(a1) / fs;
      if (ports > opt.high_out_port) {
        const auto bi = outgoing(r, opt.high_out_port, fi);
        g.idler_conversion_db = 10.0 * std::log10((std::norm(bi) / fi) / flux_in);
      }
      // Manley-Rowe holds for the total flux leaving the lossless device.
      double gs_tot = 0.0, gi_tot = 0.0;
      for (int q = 0; q < ports; ++q) {
        gs_tot += std::norm(outgoing(r, q, fs)) / fs / flux_in;
        gi_tot += std::norm(outgoing(r, q, fi)) / fi / flux_in;
      }
      g.flux_residual = photon_flux_check(gs_tot, gi_tot);
    }
    if (s43) {
      DriveConfig d2 = pump;
      d2.tones.push_back({opt.high_in_port, fs, signal_power_dbm, 0.0});
      const auto r2 = simulate_transient(device, d2, cfg);
      g.s43_db = db20(outgoing(r2, opt.high_out_port, fs) /
                      extract_tone(r2, opt.high_in_port, fs, Wave::incident));
    }
    out[k] = g;
  });
  return out;
}

CompressionResult find_p1db(std::span<const double> p, std::span<const double> g,
                            std::optional<double> gss) {
  require(p.size() == g.size() && p.size() >= 2, "need >= 2 (power, gain) points");
  for (std::size_t i = 1; i < p.size(); ++i) require(p[i] > p[i - 1], "powers must increase");
  CompressionResult r;
  r.input_power_dbm.assign(p.begin(), p.end());
  r.gain_db.assign(g.begin(), g.end());
  r.small_signal_gain_db = gss.value_or(g[0]);
  const double target = r.small_signal_gain_db - 1.0;
  if (g[0] <= target || (!gss && g[0] - g[1] > 0.1)) {
    r.p1db_dbm = p[0];
    r.status = P1dbStatus::unbracketed_below;
    return r;
  }
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (g[i] <= target) {
      const double t = (g[i - 1] - target) / (g[i - 1] - g[i]);
      r.p1db_dbm = p[i - 1] + t * (p[i] - p[i - 1]);
      r.status = P1dbStatus::bracketed;
      return r;
    }
  }
  r.status = P1dbStatus::absent;
  return r;
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

}  // namespace

std::string timeseries_binary(const TransientResult& r) {
  const auto ports = static_cast<std::uint32_t>(r.port_voltage.cols());
  const auto nodes = static_cast<std::uint32_t>(r.node_voltage.cols());
  std::string out("DTWPATS1");
  put_le(out, ports);
  put_le(out, nodes);
  put_le(out, static_cast<std::uint64_t>(r.samples()));
  put_le(out, r.dt);
  for (long k = 0; k < r.samples(); ++k) {
    put_le(out, r.time[k]);
    for (std::uint32_t q = 0; q < ports; ++q) {
      put_le(out, r.port_voltage(k, q));
      put_le(out, r.port_current(k, q));
      put_le(out, r.source_voltage(k, q));
    }
    for (std::uint32_t q = 0; q < nodes; ++q) put_le(out, r.node_voltage(k, q));
  }
  return out;
}

CompressionResult compression_sweep(const Netlist& device, const DriveConfig& pump,
                                    double signal_hz, std::span<const double> powers,
                                    const SimConfig& cfg, const GainOptions& opt) {
  std::optional<TransientResult> ref;
  if (!pump.tones.empty()) ref = simulate_transient(device, pump, cfg);
  std::vector<double> gains(powers.size());
  parallel_for(powers.size(), opt.threads, [&](std::size_t k) {
    DriveConfig d = pump;
    d.tones.push_back({opt.signal_port, signal_hz, powers[k], 0.0});
    const auto r = simulate_transient(device, d, cfg);
    auto b = extract_tone(r, opt.signal_out_port, signal_hz, Wave::outgoing);
    if (ref) b -= extract_tone(*ref, opt.signal_out_port, signal_hz, Wave::outgoing);
    gains[k] = db20(b / extract_tone(r, opt.signal_port, signal_hz, Wave::incident));
  });
  return find_p1db(powers, gains);
}

}  // namespace dtwpa
