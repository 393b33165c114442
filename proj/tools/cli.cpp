#include "cli.hpp"

#include "dtwpa/constants.hpp"
#include "dtwpa/csv.hpp"
#include "dtwpa/error.hpp"
#include "dtwpa/filtsynth.hpp"
#include "dtwpa/noisecal.hpp"
#include "dtwpa/rfnet.hpp"
#include "dtwpa/touchstone.hpp"
#include "dtwpa/transim.hpp"
#include "dtwpa/twpa.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>

namespace dtwpa::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  json manifest = json::object();
  fs::path base_dir = ".";
  fs::path out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool verbose = false;
  std::ostream* log = nullptr;
  std::vector<std::string> written;

  void note(const std::string& msg) const {
    if (verbose) *log << msg << '\n';
  }
  fs::path input(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  }
  void write(const std::string& name, const std::string& text) {
    const fs::path p = out_dir / name;
    fs::create_directories(p.parent_path());
    write_text_file(p.string(), text);
    written.push_back(name);
    note("wrote " + p.string());
  }
  void write_json(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }
};

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, what + ": " + e.what());
  }
}

// A manifest section is either an inline object or a path to a JSON file.
json section(const Context& ctx, const json& parent, const std::string& key, bool required) {
  if (!parent.contains(key) || parent.at(key).is_null()) {
    if (required) throw Error(ErrorCode::invalid_argument, "manifest needs '" + key + "'");
    return json();
  }
  const json& v = parent.at(key);
  if (v.is_string()) {
    const auto p = ctx.input(v.get<std::string>());
    return parse_json_text(read_text_file(p.string()), p.string());
  }
  if (!v.is_object()) throw Error(ErrorCode::parse_error, "'" + key + "' must be an object or path");
  return v;
}

template <typename T>
T get_or(const json& doc, const std::string& key, T fallback) {
  if (doc.is_null() || !doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, "'" + key + "': " + e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- diplexer

struct DiplexerJob {
  FilterSpec spec;
  double f_start = 1e9, f_stop = 16e9;
  std::size_t points = 1000;
};

DiplexerJob parse_diplexer(const Context& ctx, const json& m) {
  DiplexerJob job;
  const json f = section(ctx, m, "filter", false);
  if (!f.is_null()) job.spec = filter_spec_from_json(f);
  job.spec.validate();
  const json s = m.contains("sweep") ? m.at("sweep") : json();
  job.f_start = get_or(s, "f_start_hz", job.f_start);
  job.f_stop = get_or(s, "f_stop_hz", job.f_stop);
  job.points = get_or<std::size_t>(s, "points", job.points);
  require(job.f_start > 0.0 && job.f_stop > job.f_start && job.points >= 2,
          "sweep needs 0 < f_start_hz < f_stop_hz and points >= 2");
  return job;
}

json run_diplexer(Context& ctx, const DiplexerJob& job, const std::string& prefix = "") {
  const auto g = chebyshev_prototype(job.spec.order, job.spec.ripple_db, job.spec.termination);
  FilterSpec lp = job.spec, hp = job.spec;
  lp.kind = FilterKind::low_pass;
  hp.kind = FilterKind::high_pass;
  const auto lpf = synthesize_lowpass(lp, g);
  const auto hpf = synthesize_highpass(hp, g);
  const Netlist net = diplexer_netlist(lpf, hpf, job.spec.z0);
  const auto freqs = linear_grid(job.f_start, job.f_stop, job.points);
  const auto sweep = nport_sparams(net, freqs, {ctx.threads});

  double worst_unitarity = 0.0;
  for (const auto& s : sweep.s) worst_unitarity = std::max(worst_unitarity, unitarity_error(s));

  json summary{{"filter", to_json(job.spec)},
               {"prototype_g", g.g},
               {"cutoff_low_hz", lpf.cutoff_hz},
               {"cutoff_high_hz", hpf.cutoff_hz},
               {"element_count", lpf.elements.size() + hpf.elements.size()},
               {"max_unitarity_error", worst_unitarity}};
  try {
    const double fx = crossover_frequency(sweep, 1, 2, 0);
    const auto s = nport_sparams_at(net, fx);
    summary["crossover_hz"] = fx;
    summary["s11_db_at_crossover"] = 20.0 * std::log10(std::abs(s(0, 0)));
    summary["s21_db_at_crossover"] = 20.0 * std::log10(std::abs(s(1, 0)));
    summary["s31_db_at_crossover"] = 20.0 * std::log10(std::abs(s(2, 0)));
    summary["s22_db_at_crossover"] = 20.0 * std::log10(std::abs(s(1, 1)));
    summary["s33_db_at_crossover"] = 20.0 * std::log10(std::abs(s(2, 2)));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_crossover) throw;
    summary["crossover_hz"] = nullptr;
    summary["warnings"] = json::array({e.what()});
  }
  ctx.write(prefix + "components.csv", component_report_csv(lpf, hpf));
  ctx.write_json(prefix + "diplexer_netlist.json", to_json(net));
  ctx.write(prefix + "sparams.csv", sparams_csv(sweep));
  ctx.write(prefix + "diplexer.s3p", write_touchstone(sweep, job.spec.z0));
  ctx.write_json(prefix + "summary.json", summary);
  return summary;
}

// -------------------------------------------------------------------- gain

enum class GainMode { pump_off, pump_on, both };

struct GainJob {
  FilterSpec filter;
  TwpaDesign twpa;
  GainMode mode = GainMode::both;
  std::optional<Tone> pump;
  std::vector<double> signal_freqs;
  double signal_dbm = -110.0;
  bool measure_s43 = true;
  double dt = 0.0, settle = 0.0, window = 0.0, ramp = 0.0;
  double points_per_period = 80.0;
  double newton_tol = 1e-10;
  int max_iters = 50;
  std::optional<double> compression_hz;
  std::vector<double> compression_dbm;
  bool dump = false;
};

std::vector<double> frequency_list(const json& s) {
  std::vector<double> f;
  if (s.contains("frequencies_hz")) {
    f = get_or(s, "frequencies_hz", f);
  } else if (s.contains("start_hz")) {
    const double a = get_or(s, "start_hz", 0.0), b = get_or(s, "stop_hz", 0.0),
                 d = get_or(s, "step_hz", 0.0);
    require(a > 0.0 && b >= a && d > 0.0, "signal grid needs 0 < start_hz <= stop_hz, step_hz > 0");
    const auto n = static_cast<long>(std::floor((b - a) / d + 1e-9));
    for (long k = 0; k <= n; ++k) f.push_back(a + static_cast<double>(k) * d);
  }
  require(!f.empty(), "signal needs 'frequencies_hz' or a start_hz/stop_hz/step_hz grid");
  for (std::size_t k = 0; k < f.size(); ++k) {
    require(f[k] > 0.0 && (k == 0 || f[k] > f[k - 1]), "signal frequencies must increase");
  }
  return f;
}

GainJob parse_gain(const Context& ctx, const json& m) {
  GainJob job;
  const json f = section(ctx, m, "filter", false);
  if (!f.is_null()) job.filter = filter_spec_from_json(f);
  job.filter.validate();
  const json t = section(ctx, m, "twpa", false);
  if (!t.is_null()) job.twpa = twpa_design_from_json(t);
  job.twpa.validate();

  const auto mode = get_or<std::string>(m, "mode", "both");
  if (mode == "both") {
    job.mode = GainMode::both;
  } else if (mode == "pump_on") {
    job.mode = GainMode::pump_on;
  } else if (mode == "pump_off") {
    job.mode = GainMode::pump_off;
  } else {
    throw Error(ErrorCode::invalid_argument, "mode must be pump_off, pump_on or both");
  }
  if (m.contains("pump") && !m.at("pump").is_null()) {
    const json& p = m.at("pump");
    require(p.contains("frequency_hz") && p.contains("power_dbm"),
            "pump needs frequency_hz and power_dbm");
    Tone tone;
    tone.frequency_hz = get_or(p, "frequency_hz", 0.0);
    tone.power_dbm = get_or(p, "power_dbm", 0.0);
    tone.port = get_or(p, "port", 3) - 1;
    tone.phase_rad = get_or(p, "phase_rad", 0.0);
    require(tone.frequency_hz > 0.0, "pump frequency must be > 0");
    require(tone.port >= 0 && tone.port < 4, "pump port must be 1..4");
    job.pump = tone;
  }
  if (job.mode != GainMode::pump_off && !job.pump) {
    throw Error(ErrorCode::invalid_argument, "pump-on mode needs a pump tone in the manifest");
  }
  const json s = m.contains("signal") ? m.at("signal") : json();
  require(!s.is_null(), "manifest needs 'signal'");
  job.signal_freqs = frequency_list(s);
  job.signal_dbm = get_or(s, "power_dbm", job.signal_dbm);
  job.measure_s43 = get_or(m, "measure_s43", job.measure_s43);

  const json sim = m.contains("sim") ? m.at("sim") : json();
  job.dt = get_or(sim, "dt_s", 0.0);
  job.settle = get_or(sim, "settle_time_s", 0.0);
  job.window = get_or(sim, "window_s", 0.0);
  job.ramp = get_or(sim, "ramp_time_s", 0.0);
  job.points_per_period = get_or(sim, "points_per_period", job.points_per_period);
  job.newton_tol = get_or(sim, "newton_tol", job.newton_tol);
  job.max_iters = get_or(sim, "max_newton_iters", job.max_iters);
  require(job.dt >= 0.0 && job.settle >= 0.0 && job.window >= 0.0 && job.ramp >= 0.0,
          "sim times must be >= 0");
  require(job.points_per_period >= min_points_per_period, "points_per_period must be >= 40");

  if (m.contains("compression") && !m.at("compression").is_null()) {
    const json& c = m.at("compression");
    job.compression_hz = get_or(c, "signal_hz", 0.0);
    job.compression_dbm = get_or(c, "powers_dbm", std::vector<double>{});
    require(*job.compression_hz > 0.0 && job.compression_dbm.size() >= 2,
            "compression needs signal_hz and >= 2 powers_dbm");
    require(job.pump.has_value(), "compression needs a pump tone");
  }
  job.dump = get_or(m, "dump_timeseries", false);
  return job;
}

// Fills in defaults: ramp of 50 pump periods, settle of 5 ramps, a window of
// at least 200 periods of the lowest signal on a commensurate grid, and dt
// from points_per_period at the highest tone or idler.
SimConfig sim_config(const GainJob& job, double& ramp) {
  std::vector<double> tones = job.signal_freqs;
  double f_hi = job.signal_freqs.back();
  if (job.pump) {
    tones.push_back(job.pump->frequency_hz);
    for (double fs : job.signal_freqs) {
      const double fi = 2.0 * job.pump->frequency_hz - fs;
      if (fi > 0.0) tones.push_back(fi);
      f_hi = std::max({f_hi, fi, job.pump->frequency_hz});
    }
  }
  if (job.compression_hz) tones.push_back(*job.compression_hz);
  const double f_ref = job.pump ? job.pump->frequency_hz : job.signal_freqs.front();
  ramp = job.ramp > 0.0 ? job.ramp : 50.0 / f_ref;
  const double window =
      job.window > 0.0 ? job.window : commensurate_window(tones, 200.0 / job.signal_freqs.front());
  SimConfig cfg;
  cfg.dt = job.dt > 0.0 ? job.dt : window / std::ceil(window * f_hi * job.points_per_period);
  cfg.settle_time = job.settle > 0.0 ? job.settle : min_settle_ramps * ramp;
  cfg.settle_time = std::ceil(cfg.settle_time / cfg.dt - 1e-9) * cfg.dt;
  cfg.t_end = cfg.settle_time + std::round(window / cfg.dt) * cfg.dt;
  cfg.newton_tol = job.newton_tol;
  cfg.max_newton_iters = job.max_iters;
  return cfg;
}

std::string gain_csv(const std::vector<GainPoint>& pts) {
  CsvTable t;
  t.header = {"f_hz", "gain_db", "s43_db", "idler_hz", "idler_conversion_db", "flux_residual"};
  for (const auto& p : pts) {
    t.rows.push_back({p.frequency_hz, p.s21_db, p.s43_db, p.idler_frequency_hz,
                      p.idler_conversion_db, p.flux_residual});
  }
  return format_csv(t);
}

json gain_stats(const std::vector<GainPoint>& pts) {
  double peak = -1e300, avg = 0.0, worst_res = 0.0;
  for (const auto& p : pts) {
    peak = std::max(peak, p.s21_db);
    avg += p.s21_db / static_cast<double>(pts.size());
    if (std::isfinite(p.flux_residual)) worst_res = std::max(worst_res, p.flux_residual);
  }
  return {{"peak_gain_db", peak}, {"mean_gain_db", avg}, {"max_flux_residual", worst_res}};
}

json run_gain(Context& ctx, const GainJob& job, const std::string& prefix = "") {
  const Netlist dip = synthesize_diplexer(job.filter);
  const Netlist dev = assemble_device(build_twpa_netlist(job.twpa), dip, dip);
  double ramp = 0.0;
  const SimConfig cfg = sim_config(job, ramp);
  ctx.note("dt " + fmt("%.4g", cfg.dt) + " s, settle " + fmt("%.4g", cfg.settle_time) +
           " s, t_end " + fmt("%.4g", cfg.t_end) + " s");
  GainOptions opt;
  opt.measure_s43 = job.measure_s43;
  opt.threads = ctx.threads;

  json summary{{"twpa", to_json(job.twpa)},
               {"filter", to_json(job.filter)},
               {"sim",
                {{"dt_s", cfg.dt},
                 {"settle_time_s", cfg.settle_time},
                 {"t_end_s", cfg.t_end},
                 {"ramp_time_s", ramp},
                 {"window_s", cfg.window()}}},
               {"signal_power_dbm", job.signal_dbm}};
  if (job.mode != GainMode::pump_on) {
    DriveConfig off;
    off.ramp_time = ramp;
    const auto pts = pumped_gain_profile(dev, off, job.signal_freqs, job.signal_dbm, cfg, opt);
    ctx.write(prefix + "gain_pump_off.csv", gain_csv(pts));
    summary["pump_off"] = gain_stats(pts);
  }
  if (job.mode != GainMode::pump_off) {
    DriveConfig on;
    on.ramp_time = ramp;
    on.tones.push_back(*job.pump);
    const auto pts = pumped_gain_profile(dev, on, job.signal_freqs, job.signal_dbm, cfg, opt);
    ctx.write(prefix + "gain_pump_on.csv", gain_csv(pts));
    summary["pump_on"] = gain_stats(pts);
    summary["pump"] = {{"frequency_hz", job.pump->frequency_hz},
                       {"power_dbm", job.pump->power_dbm},
                       {"port", job.pump->port + 1}};
    if (job.dump) {
      DriveConfig d = on;
      d.tones.push_back({0, job.signal_freqs.front(), job.signal_dbm, 0.0});
      ctx.write(prefix + "timeseries.bin", timeseries_binary(simulate_transient(dev, d, cfg)));
    }
  }
  if (job.compression_hz) {
    DriveConfig on;
    on.ramp_time = ramp;
    on.tones.push_back(*job.pump);
    const auto c =
        compression_sweep(dev, on, *job.compression_hz, job.compression_dbm, cfg, opt);
    CsvTable t;
    t.header = {"p_in_dbm", "gain_db"};
    for (std::size_t k = 0; k < c.gain_db.size(); ++k) {
      t.rows.push_back({c.input_power_dbm[k], c.gain_db[k]});
    }
    ctx.write(prefix + "compression.csv", format_csv(t));
    static const char* names[] = {"bracketed", "unbracketed_below", "absent"};
    summary["compression"] = {{"signal_hz", *job.compression_hz},
                              {"small_signal_gain_db", c.small_signal_gain_db},
                              {"p1db_dbm", c.p1db_dbm ? json(*c.p1db_dbm) : json(nullptr)},
                              {"status", names[static_cast<int>(c.status)]}};
  }
  ctx.write_json(prefix + "summary.json", summary);
  return summary;
}

// --------------------------------------------------------------- noise fit

struct NoiseJob {
  std::optional<CsvTable> sweeps;
  NoiseUnit unit = NoiseUnit::quanta;
  std::optional<SntjParams> sntj;  // set when sweeps are given as bias voltages
  SntjKernel kernel = SntjKernel::full;
  std::optional<CsvTable> decomposition;
  DecomposeOptions decompose;
  double decomposition_hz = 7.74e9;
  bool synthetic_yfactor = false;
  bool synthetic_gain_noise = false;
};

NoiseJob parse_noise(const Context& ctx, const json& m) {
  NoiseJob job;
  if (m.contains("sweeps")) {
    const json& s = m.at("sweeps");
    job.sweeps = read_csv(ctx.input(get_or<std::string>(s, "csv", "")).string());
    const auto unit = get_or<std::string>(s, "unit", "quanta");
    require(unit == "quanta" || unit == "linear", "sweeps.unit must be quanta or linear");
    job.unit = unit == "quanta" ? NoiseUnit::quanta : NoiseUnit::linear;
    job.sweeps->index("f_hz");
    job.sweeps->index("n_out");
    if (job.sweeps->has("bias_v")) {
      const json sn = s.contains("sntj") ? s.at("sntj") : json();
      SntjParams p;
      p.temperature = get_or(sn, "temperature_k", p.temperature);
      p.path_transmission = get_or(sn, "path_transmission", p.path_transmission);
      p.validate();
      job.sntj = p;
      const auto k = get_or<std::string>(sn, "kernel", "full");
      require(k == "full" || k == "asymptotic", "sntj.kernel must be full or asymptotic");
      job.kernel = k == "full" ? SntjKernel::full : SntjKernel::asymptotic;
    } else {
      job.sweeps->index("n_in_quanta");
    }
  }
  if (m.contains("decomposition")) {
    const json& d = m.at("decomposition");
    job.decomposition = read_csv(ctx.input(get_or<std::string>(d, "csv", "")).string());
    job.decomposition->index("g_twpa_db");
    job.decomposition->index("n_add_quanta");
    const auto ex = get_or<std::string>(d, "exclusion", "above_noise_minimum");
    if (ex == "above_noise_minimum") {
      job.decompose.exclusion = Exclusion::above_noise_minimum;
    } else if (ex == "none") {
      job.decompose.exclusion = Exclusion::none;
    } else if (ex == "manual") {
      job.decompose.exclusion = Exclusion::manual;
      job.decompose.manual_mask = get_or(d, "mask", std::vector<bool>{});
      require(job.decompose.manual_mask.size() == job.decomposition->rows.size(),
              "manual mask length must equal the number of rows");
    } else {
      throw Error(ErrorCode::invalid_argument, "unknown exclusion rule '" + ex + "'");
    }
    job.decompose.weighted = get_or(d, "weighted", false);
    if (job.decompose.weighted) job.decomposition->index("n_add_err");
    job.decomposition_hz = get_or(d, "frequency_hz", job.decomposition_hz);
  }
  const json syn = m.contains("synthetic") ? m.at("synthetic") : json();
  job.synthetic_yfactor = get_or(syn, "yfactor", false);
  job.synthetic_gain_noise = get_or(syn, "gain_noise", false);
  require(job.sweeps || job.decomposition || job.synthetic_yfactor || job.synthetic_gain_noise,
          "noise-fit manifest needs sweeps, decomposition or synthetic data");
  return job;
}

json run_noise(Context& ctx, const NoiseJob& job, const std::string& prefix = "") {
  json summary = json::object();
  json warnings = json::array();

  std::vector<ChainFit> fits;
  if (job.sweeps) {
    // Group rows by frequency bin, keeping first-appearance order.
    const auto& t = *job.sweeps;
    const auto fk = t.index("f_hz"), ok = t.index("n_out");
    std::vector<double> order;
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> bins;
    const auto xk = job.sntj ? t.index("bias_v") : t.index("n_in_quanta");
    for (const auto& r : t.rows) {
      if (!bins.count(r[fk])) order.push_back(r[fk]);
      bins[r[fk]].first.push_back(r[xk]);
      bins[r[fk]].second.push_back(r[ok]);
    }
    for (double f : order) {
      const auto& [x, y] = bins[f];
      if (job.sntj) {
        SntjParams p = *job.sntj;
        p.frequency_hz = f;
        fits.push_back(fit_chain_noise_bias(p, x, y, job.unit, job.kernel));
      } else {
        fits.push_back(fit_chain_noise({f, x, y, job.unit}));
      }
    }
  }
  if (job.synthetic_yfactor) {
    const auto bins = synthesize_yfactor({}, ctx.seed);
    CsvTable raw;
    raw.header = {"f_hz", "bias_v", "n_out"};
    for (const auto& b : bins) {
      for (std::size_t i = 0; i < b.bias_volt.size(); ++i) {
        raw.rows.push_back({b.frequency_hz, b.bias_volt[i], b.n_out[i]});
      }
      fits.push_back(fit_chain_noise_bias({0.014, b.frequency_hz, 1.0}, b.bias_volt, b.n_out));
    }
    ctx.write(prefix + "synthetic_yfactor.csv", format_csv(raw));
  }
  if (!fits.empty()) {
    CsvTable t;
    t.header = {"f_hz", "g_tot", "g_tot_err", "n_add_quanta", "n_add_err"};
    double sum = 0.0;
    std::size_t in_band = 0;
    for (const auto& f : fits) {
      t.rows.push_back({f.frequency_hz, f.g_tot, f.g_tot_err, f.n_add, f.n_add_err});
      for (const auto& w : f.warnings) warnings.push_back(fmt("%.6g Hz: ", f.frequency_hz) + w);
      if (f.frequency_hz >= 6e9 && f.frequency_hz <= 8e9) {
        sum += f.n_add;
        ++in_band;
      }
    }
    ctx.write(prefix + "chain_fit.csv", format_csv(t));
    summary["chain_fit"] = {{"bins", fits.size()},
                            {"unit", fits.front().unit == NoiseUnit::quanta ? "quanta" : "linear"},
                            {"mean_n_add_6_8ghz",
                             in_band ? json(sum / static_cast<double>(in_band)) : json(nullptr)}};
  }

  std::vector<GainNoisePoint> pts;
  DecomposeOptions dopt = job.decompose;
  double f_dec = job.decomposition_hz;
  if (job.decomposition) {
    const auto& t = *job.decomposition;
    const auto gk = t.index("g_twpa_db"), nk = t.index("n_add_quanta");
    const bool has_err = t.has("n_add_err");
    for (const auto& r : t.rows) {
      pts.push_back(gain_noise_point_db(r[gk], r[nk], has_err ? r[t.index("n_add_err")] : 0.0));
    }
  } else if (job.synthetic_gain_noise) {
    const GainNoiseScenario sc;
    pts = synthesize_gain_noise(sc, ctx.seed);
    f_dec = sc.frequency_hz;
  }
  if (!pts.empty()) {
    const auto d = decompose_twpa_noise(pts, dopt);
    CsvTable t;
    t.header = {"g_twpa_db", "n_add_quanta", "n_add_err", "excluded"};
    json mask = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.rows.push_back({phys::power_ratio_to_db(pts[i].g_twpa), pts[i].n_add, pts[i].n_add_err,
                        d.excluded[i] ? 1.0 : 0.0});
      mask.push_back(static_cast<bool>(d.excluded[i]));
    }
    ctx.write(prefix + "decomposition.csv", format_csv(t));
    for (const auto& w : d.warnings) warnings.push_back(w);
    summary["decomposition"] = {{"frequency_hz", f_dec},
                                {"n_twpa_quanta", d.n_twpa},
                                {"n_twpa_err", d.n_twpa_err},
                                {"n_rem_quanta", d.n_rem},
                                {"n_rem_err", d.n_rem_err},
                                {"retained", d.retained},
                                {"excluded_mask", mask},
                                {"weighted", dopt.weighted}};
  }
  summary["warnings"] = warnings;
  ctx.write_json(prefix + "summary.json", summary);
  return summary;
}

// --------------------------------------------------------------- calibrate

struct CalJob {
  std::vector<AttenuationRow> rows;
  bool synthetic = false;
  std::optional<double> pump_source_dbm, pump_attenuation_db;
};

std::vector<AttenuationRow> synthetic_attenuation_rows() {
  // A(f) falls linearly in dB from -68 dB at 4 GHz to -72 dB at 9 GHz behind
  // a 90 dB readout chain; the SNTJ sits at 14 mK and 100 uV bias.
  std::vector<AttenuationRow> rows;
  const double g = phys::db_to_power_ratio(90.0);
  for (int k = 0; k <= 20; ++k) {
    const double f = 4e9 + 0.25e9 * k;
    const double a = phys::db_to_power_ratio(-68.0 - 4.0 * (f - 4e9) / 5e9);
    const double s_in = quanta_to_psd(sntj_input_noise({0.014, f, 1.0}, 100e-6), f);
    const double p_vna = 1e-6;
    rows.push_back({f, p_vna, a * g * p_vna, s_in, g * s_in});
  }
  return rows;
}

CalJob parse_calibrate(const Context& ctx, const json& m) {
  CalJob job;
  if (m.contains("table")) {
    const auto t = read_csv(ctx.input(get_or<std::string>(m.at("table"), "csv", "")).string());
    const auto f = t.index("f_hz"), pv = t.index("p_vna_w"), po = t.index("p_out_w"),
               si = t.index("s_in"), so = t.index("s_out");
    for (const auto& r : t.rows) job.rows.push_back({r[f], r[pv], r[po], r[si], r[so]});
    for (const auto& r : job.rows) {
      require(r.p_vna_w > 0.0 && r.p_out_w > 0.0 && r.s_in > 0.0 && r.s_out > 0.0,
              "calibration table values must be positive");
    }
  }
  job.synthetic = get_or(m, "synthetic", false);
  if (m.contains("pump")) {
    job.pump_source_dbm = get_or(m.at("pump"), "source_dbm", 0.0);
    job.pump_attenuation_db = get_or(m.at("pump"), "attenuation_db", 0.0);
    require(*job.pump_attenuation_db >= 0.0, "pump attenuation must be >= 0 dB");
  }
  require(!job.rows.empty() || job.synthetic || job.pump_source_dbm,
          "calibrate manifest needs a table, synthetic data or a pump report");
  return job;
}

json run_calibrate(Context& ctx, const CalJob& job, const std::string& prefix = "") {
  json summary = json::object();
  json warnings = json::array();
  std::vector<AttenuationRow> rows = job.rows;
  if (job.synthetic) {
    const auto syn = synthetic_attenuation_rows();
    rows.insert(rows.end(), syn.begin(), syn.end());
  }
  if (!rows.empty()) {
    const auto cal = calibrate_attenuation(rows);
    CsvTable t;
    t.header = {"f_hz", "attenuation", "attenuation_db", "inconsistent"};
    for (std::size_t k = 0; k < cal.attenuation.size(); ++k) {
      t.rows.push_back({cal.frequency_hz[k], cal.attenuation[k],
                        phys::power_ratio_to_db(cal.attenuation[k]),
                        cal.inconsistent[k] ? 1.0 : 0.0});
    }
    ctx.write(prefix + "attenuation.csv", format_csv(t));
    for (const auto& w : cal.warnings) warnings.push_back(w);
    summary["points"] = cal.attenuation.size();
  }
  if (job.pump_source_dbm) {
    summary["pump"] = {
        {"source_dbm", *job.pump_source_dbm},
        {"attenuation_db", *job.pump_attenuation_db},
        {"at_device_dbm", power_at_device(*job.pump_source_dbm, *job.pump_attenuation_db)}};
  }
  summary["warnings"] = warnings;
  ctx.write_json(prefix + "summary.json", summary);
  return summary;
}

// ------------------------------------------------------------- paper-repro

json default_gain_manifest() {
  return {{"mode", "both"},
          {"pump", {{"frequency_hz", 8.5e9}, {"power_dbm", -66.5}, {"port", 3}}},
          {"signal", {{"start_hz", 4.5e9}, {"stop_hz", 7.5e9}, {"step_hz", 0.5e9}}},
          {"measure_s43", true},
          {"sim", {{"dt_s", 1e-12}, {"settle_time_s", 10e-9}, {"window_s", 20e-9},
                   {"ramp_time_s", 2e-9}}}};
}

// ----------------------------------------------------------------- driver

Context make_context(const std::string& manifest_arg, const std::string& out, std::uint64_t seed,
                     unsigned threads, bool verbose, std::ostream& log, bool manifest_required) {
  Context ctx;
  ctx.seed = seed;
  ctx.threads = std::max(1u, threads);
  ctx.verbose = verbose;
  ctx.log = &log;
  if (manifest_arg.empty()) {
    require(!manifest_required, "--manifest is required");
  } else if (manifest_arg.front() == '{') {
    ctx.manifest = parse_json_text(manifest_arg, "inline manifest");
  } else {
    const fs::path p(manifest_arg);
    ctx.manifest = parse_json_text(read_text_file(p.string()), p.string());
    ctx.base_dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  }
  require(ctx.manifest.is_object(), "manifest must be a JSON object");
  require(!out.empty(), "--out is required");
  ctx.out_dir = out;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec || !fs::is_directory(ctx.out_dir)) {
    throw Error(ErrorCode::io_error, "cannot create output directory '" + out + "'");
  }
  return ctx;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diplexed TWPA design and analysis toolkit", "dtwpa"};
  app.require_subcommand(1);
  std::string manifest, out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool verbose = false;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"synth-diplexer", "Synthesize the diplexer and sweep its S-parameters"},
                      {"gain", "Transient gain profile of the assembled device"},
                      {"noise-fit", "Chain added-noise fits and TWPA noise decomposition"},
                      {"calibrate", "Input-line attenuation and pump-power report"},
                      {"paper-repro", "Run every workflow with the reference settings"}};
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--manifest", manifest, "JSON manifest path or inline JSON object");
    sc->add_option("--out", out_dir, "Output directory")->required();
    sc->add_option("--seed", seed, "Seed for synthetic data");
    sc->add_option("--threads", threads, "Worker threads for sweeps");
    sc->add_flag("--verbose", verbose, "Progress messages on stdout");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  const bool repro = cmd == "paper-repro";

  // Stage 1: validate everything before computing.
  Context ctx;
  std::function<json(Context&)> job;
  try {
    ctx = make_context(manifest, out_dir, seed, threads, verbose, out, !repro);
    if (cmd == "synth-diplexer") {
      auto j = parse_diplexer(ctx, ctx.manifest);
      job = [j](Context& c) { return run_diplexer(c, j); };
    } else if (cmd == "gain") {
      auto j = parse_gain(ctx, ctx.manifest);
      job = [j](Context& c) { return run_gain(c, j); };
    } else if (cmd == "noise-fit") {
      auto j = parse_noise(ctx, ctx.manifest);
      job = [j](Context& c) { return run_noise(c, j); };
    } else if (cmd == "calibrate") {
      auto j = parse_calibrate(ctx, ctx.manifest);
      job = [j](Context& c) { return run_calibrate(c, j); };
    } else {
      const json& m = ctx.manifest;
      auto dj = parse_diplexer(ctx, m.contains("synth") ? m.at("synth") : json::object());
      auto nj = parse_noise(ctx, {{"synthetic", {{"yfactor", true}, {"gain_noise", true}}}});
      auto cj = parse_calibrate(
          ctx, {{"synthetic", true}, {"pump", {{"source_dbm", -15.8}, {"attenuation_db", 61.0}}}});
      const bool skip_gain = get_or(m, "skip_gain", false);
      std::optional<GainJob> gj;
      if (!skip_gain) gj = parse_gain(ctx, m.contains("gain") ? m.at("gain") : default_gain_manifest());
      job = [dj, nj, cj, gj](Context& c) {
        json s;
        s["synth_diplexer"] = run_diplexer(c, dj, "synth/");
        s["noise_fit"] = run_noise(c, nj, "noise/");
        s["calibrate"] = run_calibrate(c, cj, "calibrate/");
        if (gj) s["gain"] = run_gain(c, *gj, "gain/");
        c.write_json("summary.json", s);
        return s;
      };
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  // Stage 2: compute and write.
  try {
    job(ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (verbose) out << cmd << ": " << ctx.written.size() << " files written\n";
  return 0;
}

}  // namespace dtwpa::cli
