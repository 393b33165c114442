#pragma once

// Chebyshev-I ladder synthesis and contiguous-band diplexer assembly.
//
// Prototype values g_1..g_n are normalized to a unit resistive termination
// (g_0 = 1) and unit cutoff. For singly-terminated prototypes g_1 sits next to
// the resistive termination and g_n next to the ideal (zero-impedance) source;
// in a diplexer the ideal-source end is the common junction, so g_n is the
// element attached to the common node and g_1 feeds the arm's output port.

#include "dtwpa/netlist.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace dtwpa {

enum class FilterKind { low_pass, high_pass };
enum class Termination { singly, doubly };

struct FilterSpec {
  int order = 5;
  double ripple_db = 0.1;
  double crossover_hz = 8e9;
  double z0 = 50.0;
  FilterKind kind = FilterKind::low_pass;
  Termination termination = Termination::singly;

  void validate() const;
};

struct PrototypeCoefficients {
  std::vector<double> g;
};

struct LadderElement {
  int index;  // 1-based prototype index
  Orientation orientation;
  ElementKind element;  // inductor or capacitor
  double value;         // henry or farad
};

struct LadderElements {
  FilterKind kind;
  double z0;
  double crossover_hz;
  double cutoff_hz;
  std::vector<LadderElement> elements;  // ordered by index, 1..n
};

/// Chebyshev-I prototype. Singly-terminated values come from numeric synthesis
/// of the all-pole transfer function (continued-fraction expansion of the
/// driving-point admittance); doubly-terminated values use the closed-form
/// recurrence. Throws ErrorCode::prototype_unavailable outside the supported
/// order range.
PrototypeCoefficients chebyshev_prototype(int order, double ripple_db, Termination termination);

inline constexpr int max_singly_terminated_order = 15;

/// k_n = cosh(acosh(1/sqrt(eps)) / n), eps = 10^(L_ar/10) - 1. Requires
/// 0 < ripple <= 10 log10(2) dB so that k_n >= 1.
double cutoff_scale_factor(int order, double ripple_db);

/// Series element at prototype index k when (n - k) is even, so the element at
/// the common node is always series.
Orientation ladder_orientation(int order, int index);

LadderElements synthesize_lowpass(const FilterSpec& spec, const PrototypeCoefficients& g);
LadderElements synthesize_highpass(const FilterSpec& spec, const PrototypeCoefficients& g);

/// Recovers the prototype from element values by inverting the scaling.
PrototypeCoefficients recover_prototype(const LadderElements& ladder);

/// Two-port netlist of a single arm: port 1 at the common (ideal-source) end,
/// port 2 at the terminated end.
Netlist ladder_netlist(const LadderElements& ladder);

/// Parallel-connected diplexer. Port 1 common, port 2 low-pass output, port 3
/// high-pass output. An empty high-pass arm yields the 2-port low-pass filter.
/// Throws ErrorCode::inconsistent_design when the arms disagree on Z0 or f_cx.
Netlist diplexer_netlist(const LadderElements& lpf, const LadderElements& hpf, double z0);

/// Design document: {"n", "ripple_db", "crossover_hz", "z0_ohm", "termination"?}.
FilterSpec filter_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FilterSpec& spec);

/// Component report rows: index, arm, orientation, element, value_SI.
std::string component_report_csv(const LadderElements& lpf, const LadderElements& hpf);

}  // namespace dtwpa
