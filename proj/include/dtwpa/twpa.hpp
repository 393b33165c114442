#pragma once

// Josephson traveling-wave line with resonant phase matching, and its
// composition with two diplexers into the four-port device.
//
// Unit cell: series junction from node i-1 to node i (with its own capacitance
// C_J in parallel when nonzero), shunt capacitor from node i to ground. Every `period_cells`-th cell also carries the RPM branch:
// a coupling capacitor from node i to a resonator node, which is tied to ground
// through a parallel L_r || C_r tank.

#include "dtwpa/filtsynth.hpp"
#include "dtwpa/netlist.hpp"
#include "dtwpa/rfnet.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace dtwpa {

struct RpmDesign {
  double resonance_hz = 8.7e9;
  double impedance = 15.0;
  int period_cells = 3;
  double coupling_fraction = 0.01;  // C_coupling / C_r
};

struct TwpaDesign {
  int n_cells = 1500;
  double critical_current = 5e-6;
  double line_impedance = 50.0;
  std::optional<RpmDesign> rpm = RpmDesign{};
  double loss_tangent = 0.0;
  // Plasma frequency 1/(2 pi sqrt(L_J0 C_J)) ~ 62 GHz at the defaults. Zero
  // gives the bare sin(phi) element.
  double junction_capacitance = 100e-15;

  void validate() const;
};

struct RpmValues {
  double inductance;
  double capacitance;
};

/// L_J0 = Phi0 / (2 pi I_c).
double junction_linear_inductance(double critical_current);
/// C = L / Z^2.
double cell_shunt_capacitance(double inductance, double line_impedance);
/// L_r = Z / (2 pi f_r), C_r = 1 / (Z 2 pi f_r).
RpmValues rpm_resonator_values(double resonance_hz, double impedance);
/// f_i = 2 f_p - f_s; throws ErrorCode::nonphysical when f_i <= 0.
double idler_frequency(double pump_hz, double signal_hz);

/// Two-port line, port 1 at the input end, both ports at the line impedance.
Netlist build_twpa_netlist(const TwpaDesign& design);

/// Every junction replaced by its small-signal inductance L_J0.
Netlist linearized(const Netlist& netlist);

/// Zero-length two-port (both ports on one node).
Netlist make_thru(double z0);

/// Four-port device: 1 low-band in, 2 low-band out, 3 high-band in,
/// 4 high-band out. The diplexers' common ports are joined to the line's
/// input and output. Throws ErrorCode::port_count_mismatch unless the line
/// has 2 ports and each diplexer has 3.
Netlist assemble_device(const Netlist& twpa, const Netlist& diplexer_in,
                        const Netlist& diplexer_out);

namespace device_port {
inline constexpr int low_in = 0;
inline constexpr int low_out = 1;
inline constexpr int high_in = 2;
inline constexpr int high_out = 3;
}  // namespace device_port

/// Diplexer synthesized from a low-pass design spec (both arms).
Netlist synthesize_diplexer(const FilterSpec& spec);

/// ABCD of one plain cell (with_rpm = false) or one RPM-loaded cell.
Abcd<double> unit_cell_abcd(const TwpaDesign& design, double f, bool with_rpm);
/// ABCD of one RPM period: (period_cells - 1) plain cells then a loaded cell.
Abcd<double> supercell_abcd(const TwpaDesign& design, double f);
/// Bloch phase per cell (supercell phase divided by period_cells).
std::complex<double> bloch_phase(const TwpaDesign& design, double f);

struct Band {
  double lo;
  double hi;
};

/// Frequency ranges in [f_lo, f_hi] where the supercell Bloch phase has a
/// non-negligible imaginary part, located on a grid with step `df` and then
/// refined by bisection.
std::vector<Band> stopbands(const TwpaDesign& design, double f_lo, double f_hi, double df);

TwpaDesign twpa_design_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TwpaDesign& design);

}  // namespace dtwpa
