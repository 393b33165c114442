#include "dtwpa/twpa.hpp"

#include "dtwpa/constants.hpp"
#include "dtwpa/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dtwpa {

void TwpaDesign::validate() const {
  require(n_cells >= 1, "n_cells must be >= 1");
  require(std::isfinite(critical_current) && critical_current > 0.0, "I_c must be > 0");
  require(std::isfinite(line_impedance) && line_impedance > 0.0, "Z_line must be > 0");
  require(loss_tangent >= 0.0, "loss tangent must be >= 0");
  require(std::isfinite(junction_capacitance) && junction_capacitance >= 0.0, "C_J must be >= 0");
  if (rpm) {
    require(rpm->resonance_hz > 0.0, "f_r must be > 0");
    require(rpm->impedance > 0.0, "Z_rpm must be > 0");
    require(rpm->period_cells >= 1 && rpm->period_cells <= n_cells,
            "1 <= period_cells <= n_cells");
    require(rpm->coupling_fraction > 0.0, "coupling_fraction must be > 0");
  }
}

double junction_linear_inductance(double critical_current) {
  require(critical_current > 0.0, "I_c must be > 0");
  return phys::flux_quantum / (2.0 * phys::pi * critical_current);
}

double cell_shunt_capacitance(double inductance, double line_impedance) {
  require(inductance > 0.0 && line_impedance > 0.0, "inductance and impedance must be > 0");
  return inductance / (line_impedance * line_impedance);
}

RpmValues rpm_resonator_values(double resonance_hz, double impedance) {
  require(resonance_hz > 0.0 && impedance > 0.0, "f_r and Z_rpm must be > 0");
  const double w = 2.0 * phys::pi * resonance_hz;
  return {impedance / w, 1.0 / (impedance * w)};
}

double idler_frequency(double pump_hz, double signal_hz) {
  require(pump_hz > 0.0 && signal_hz > 0.0, "pump and signal frequencies must be > 0");
  const double fi = 2.0 * pump_hz - signal_hz;
  if (!(fi > 0.0)) throw Error(ErrorCode::nonphysical, "idler frequency 2 f_p - f_s <= 0");
  return fi;
}

Netlist build_twpa_netlist(const TwpaDesign& design) {
  design.validate();
  const double lj = junction_linear_inductance(design.critical_current);
  const double c0 = cell_shunt_capacitance(lj, design.line_impedance);
  std::optional<RpmValues> rv;
  double cc = 0.0;
  if (design.rpm) {
    rv = rpm_resonator_values(design.rpm->resonance_hz, design.rpm->impedance);
    cc = design.rpm->coupling_fraction * rv->capacitance;
  }

  Netlist net;
  int prev = net.add_node("n0");
  const int first = prev;
  for (int i = 1; i <= design.n_cells; ++i) {
    const std::string tag = std::to_string(i);
    const int node = net.add_node("n" + tag);
    net.add_josephson(prev, node, design.critical_current, "B" + tag);
    if (design.junction_capacitance > 0.0) {
      net.add_capacitor(prev, node, design.junction_capacitance, "CJ" + tag);
    }
    net.add_capacitor(node, Netlist::ground, c0, "C" + tag);
    if (design.rpm && i % design.rpm->period_cells == 0) {
      const int r = net.add_node("r" + tag);
      net.add_capacitor(node, r, cc, "Cc" + tag);
      net.add_inductor(r, Netlist::ground, rv->inductance, "Lr" + tag);
      net.add_capacitor(r, Netlist::ground, rv->capacitance, "Cr" + tag);
    }
    prev = node;
  }
  net.add_port(first, design.line_impedance, "in");
  net.add_port(prev, design.line_impedance, "out");
  net.loss_tangent = design.loss_tangent;
  return net;
}

Netlist linearized(const Netlist& netlist) {
  Netlist out = netlist;
  for (auto& e : out.elements()) {
    if (e.kind == ElementKind::josephson) {
      e.value = junction_linear_inductance(e.value);
      e.kind = ElementKind::inductor;
    }
  }
  return out;
}

Netlist make_thru(double z0) {
  Netlist net;
  const int t = net.add_node("t");
  net.add_port(t, z0, "in");
  net.add_port(t, z0, "out");
  return net;
}

Netlist assemble_device(const Netlist& twpa, const Netlist& diplexer_in,
                        const Netlist& diplexer_out) {
  if (twpa.port_count() != 2) {
    throw Error(ErrorCode::port_count_mismatch, "line must be a two-port");
  }
  if (diplexer_in.port_count() != 3 || diplexer_out.port_count() != 3) {
    throw Error(ErrorCode::port_count_mismatch, "each diplexer must be a three-port");
  }
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::abs(b); };
  if (!same(diplexer_in.ports()[0].z0, twpa.ports()[0].z0) ||
      !same(diplexer_out.ports()[0].z0, twpa.ports()[1].z0)) {
    throw Error(ErrorCode::inconsistent_design,
                "diplexer common-port impedance differs from the line's port impedance");
  }
  Netlist dev;
  const auto line_map = merge_into(dev, twpa, "twpa.");
  const int line_in = line_map[twpa.ports()[0].node];
  const int line_out = line_map[twpa.ports()[1].node];
  const auto in_map = merge_into(dev, diplexer_in, "din.", {{diplexer_in.ports()[0].node, line_in}});
  const auto out_map =
      merge_into(dev, diplexer_out, "dout.", {{diplexer_out.ports()[0].node, line_out}});
  dev.add_port(in_map[diplexer_in.ports()[1].node], diplexer_in.ports()[1].z0, "low_in");
  dev.add_port(out_map[diplexer_out.ports()[1].node], diplexer_out.ports()[1].z0, "low_out");
  dev.add_port(in_map[diplexer_in.ports()[2].node], diplexer_in.ports()[2].z0, "high_in");
  dev.add_port(out_map[diplexer_out.ports()[2].node], diplexer_out.ports()[2].z0, "high_out");
  dev.loss_tangent = std::max({twpa.loss_tangent, diplexer_in.loss_tangent,
                               diplexer_out.loss_tangent});
  return dev;
}

Netlist synthesize_diplexer(const FilterSpec& spec) {
  const auto g = chebyshev_prototype(spec.order, spec.ripple_db, spec.termination);
  FilterSpec lp = spec, hp = spec;
  lp.kind = FilterKind::low_pass;
  hp.kind = FilterKind::high_pass;
  return diplexer_netlist(synthesize_lowpass(lp, g), synthesize_highpass(hp, g), spec.z0);
}

Abcd<double> unit_cell_abcd(const TwpaDesign& design, double f, bool with_rpm) {
  const double lj = junction_linear_inductance(design.critical_current);
  const double c0 = cell_shunt_capacitance(lj, design.line_impedance);
  const std::complex<double> jw(0.0, 2.0 * phys::pi * f);
  std::complex<double> y = jw * c0;
  if (with_rpm && design.rpm) {
    const auto rv = rpm_resonator_values(design.rpm->resonance_hz, design.rpm->impedance);
    const double cc = design.rpm->coupling_fraction * rv.capacitance;
    const std::complex<double> tank = 1.0 / (1.0 / (jw * rv.inductance) + jw * rv.capacitance);
    y += 1.0 / (1.0 / (jw * cc) + tank);
  }
  Abcd<double> series = Abcd<double>::Identity();
  series(0, 1) = 1.0 / (1.0 / (jw * lj) + jw * design.junction_capacitance);
  Abcd<double> shunt = Abcd<double>::Identity();
  shunt(1, 0) = y;
  return series * shunt;
}

Abcd<double> supercell_abcd(const TwpaDesign& design, double f) {
  const int period = design.rpm ? design.rpm->period_cells : 1;
  Abcd<double> m = Abcd<double>::Identity();
  for (int i = 1; i <= period; ++i) m = m * unit_cell_abcd(design, f, i == period);
  return m;
}

std::complex<double> bloch_phase(const TwpaDesign& design, double f) {
  const int period = design.rpm ? design.rpm->period_cells : 1;
  return bloch_phase_per_cell(supercell_abcd(design, f)) / static_cast<double>(period);
}

std::vector<Band> stopbands(const TwpaDesign& design, double f_lo, double f_hi, double df) {
  require(f_hi > f_lo && f_lo > 0.0 && df > 0.0, "bad stopband search range");
  // Lossless cells: a stopband is where |(A + D) / 2| > 1.
  auto excess = [&](double f) {
    const auto m = supercell_abcd(design, f);
    return std::abs(0.5 * (m(0, 0) + m(1, 1)).real()) - 1.0;
  };
  auto refine = [&](double a, double b) {
    const bool a_in = excess(a) > 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a + b);
      ((excess(mid) > 0.0) == a_in ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };
  std::vector<Band> bands;
  double prev_f = f_lo;
  bool prev_in = excess(f_lo) > 0.0;
  double start = prev_in ? f_lo : 0.0;
  const auto steps = static_cast<long>(std::ceil((f_hi - f_lo) / df));
  for (long k = 1; k <= steps; ++k) {
    const double f = std::min(f_hi, f_lo + static_cast<double>(k) * df);
    const bool in = excess(f) > 0.0;
    if (in && !prev_in) start = refine(prev_f, f);
    if (!in && prev_in) bands.push_back({start, refine(prev_f, f)});
    prev_in = in;
    prev_f = f;
  }
  if (prev_in) bands.push_back({start, f_hi});
  return bands;
}

TwpaDesign twpa_design_from_json(const nlohmann::json& doc) {
  TwpaDesign d;
  try {
    d.n_cells = doc.value("n_cells", d.n_cells);
    d.critical_current = doc.value("ic_amp", d.critical_current);
    d.line_impedance = doc.value("z_line_ohm", d.line_impedance);
    d.loss_tangent = doc.value("loss_tangent", d.loss_tangent);
    d.junction_capacitance = doc.value("cj_farad", d.junction_capacitance);
    if (doc.contains("rpm")) {
      const auto& r = doc.at("rpm");
      if (r.is_null()) {
        d.rpm.reset();
      } else {
        RpmDesign rpm;
        rpm.resonance_hz = r.value("f_r_hz", rpm.resonance_hz);
        rpm.impedance = r.value("z_rpm_ohm", rpm.impedance);
        rpm.period_cells = r.value("period_cells", rpm.period_cells);
        rpm.coupling_fraction = r.value("coupling_fraction", rpm.coupling_fraction);
        d.rpm = rpm;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("TWPA design document: ") + e.what());
  }
  d.validate();
  return d;
}

nlohmann::json to_json(const TwpaDesign& design) {
  nlohmann::json doc{{"n_cells", design.n_cells},
                     {"ic_amp", design.critical_current},
                     {"z_line_ohm", design.line_impedance},
                     {"loss_tangent", design.loss_tangent},
                     {"cj_farad", design.junction_capacitance}};
  if (design.rpm) {
    doc["rpm"] = {{"f_r_hz", design.rpm->resonance_hz},
                  {"z_rpm_ohm", design.rpm->impedance},
                  {"period_cells", design.rpm->period_cells},
                  {"coupling_fraction", design.rpm->coupling_fraction}};
  } else {
    doc["rpm"] = nullptr;
  }
  return doc;
}

}  // namespace dtwpa
