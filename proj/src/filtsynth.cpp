#include "dtwpa/filtsynth.hpp"

#include "dtwpa/error.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace dtwpa {
namespace {

using Poly = std::vector<long double>;  // ascending powers of s

Poly trim(Poly p) {
  while (p.size() > 1 && p.back() == 0.0L) p.pop_back();
  return p;
}

int degree(const Poly& p) { return static_cast<int>(trim(p).size()) - 1; }

double ripple_epsilon_sq(double ripple_db) { return std::pow(10.0, ripple_db / 10.0) - 1.0; }

// Denominator of the all-pole Chebyshev response, normalized to D(0) = 1 so
// that the ladder's DC transfer (inductors shorted) is unity.
Poly chebyshev_denominator(int n, double ripple_db) {
  const long double eps = std::sqrt(static_cast<long double>(ripple_epsilon_sq(ripple_db)));
  const long double a = std::asinh(1.0L / eps) / n;
  std::vector<std::complex<long double>> coeffs{1.0L};
  for (int k = 1; k <= n; ++k) {
    const long double theta = (2.0L * k - 1.0L) * std::numbers::pi_v<long double> / (2.0L * n);
    const std::complex<long double> pole(-std::sinh(a) * std::sin(theta),
                                         std::cosh(a) * std::cos(theta));
    std::vector<std::complex<long double>> next(coeffs.size() + 1);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i + 1] += coeffs[i];
      next[i] -= pole * coeffs[i];
    }
    coeffs = std::move(next);
  }
  Poly d(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) d[i] = coeffs[i].real();
  const long double d0 = d[0];
  for (auto& c : d) c /= d0;
  return d;
}

// Continued-fraction (Cauer I) expansion of num/den where deg num = deg den + 1.
// Each quotient must be a pure c*s term with c > 0.
std::vector<double> cauer_expansion(Poly num, Poly den, int n) {
  std::vector<double> g;
  g.reserve(n);
  for (int k = 0; k < n; ++k) {
    num = trim(num);
    den = trim(den);
    const int dn = degree(num);
    const int dd = degree(den);
    if (dn != dd + 1 || den[dd] == 0.0L) {
      throw Error(ErrorCode::prototype_unavailable,
                  "continued-fraction expansion broke down at element " + std::to_string(k + 1));
    }
    const long double c = num[dn] / den[dd];
    // remainder = num - c*s*den
    Poly rem = num;
    for (int i = 0; i <= dd; ++i) rem[i + 1] -= c * den[i];
    rem[dn] = 0.0L;
    const long double scale = std::abs(num[dn]) + 1.0L;
    for (auto& r : rem) {
      if (std::abs(r) < 1e-15L * scale) r = 0.0L;
    }
    if (!(c > 0.0L) || !std::isfinite(static_cast<double>(c))) {
      throw Error(ErrorCode::prototype_unavailable,
                  "non-positive element in continued-fraction expansion");
    }
    g.push_back(static_cast<double>(c));
    num = std::move(den);
    den = std::move(rem);
  }
  return g;
}

PrototypeCoefficients singly_terminated(int n, double ripple_db) {
  const Poly d = chebyshev_denominator(n, ripple_db);
  Poly even(d.size(), 0.0L), odd(d.size(), 0.0L);
  for (std::size_t i = 0; i < d.size(); ++i) (i % 2 == 0 ? even : odd)[i] = d[i];
  // Admittance at the terminated port with the ideal source shorted is
  // even/odd; expand whichever of it or its reciprocal is improper.
  const bool odd_order = n % 2 == 1;
  return {odd_order ? cauer_expansion(odd, even, n) : cauer_expansion(even, odd, n)};
}

PrototypeCoefficients doubly_terminated(int n, double ripple_db) {
  const double beta = std::log(1.0 / std::tanh(ripple_db * std::numbers::ln10 / 40.0));
  const double gamma = std::sinh(beta / (2.0 * n));
  auto a = [n](int k) { return std::sin((2.0 * k - 1.0) * std::numbers::pi / (2.0 * n)); };
  auto b = [n, gamma](int k) {
    const double s = std::sin(k * std::numbers::pi / n);
    return gamma * gamma + s * s;
  };
  std::vector<double> g(n);
  g[0] = 2.0 * a(1) / gamma;
  for (int k = 2; k <= n; ++k) g[k - 1] = 4.0 * a(k - 1) * a(k) / (b(k - 1) * g[k - 2]);
  return {g};
}

void check_prototype(const PrototypeCoefficients& g, int n) {
  require(static_cast<int>(g.g.size()) == n, "prototype length does not match filter order");
  for (double v : g.g) require(std::isfinite(v) && v > 0.0, "prototype values must be positive");
}

LadderElements scaled_ladder(const FilterSpec& spec, const PrototypeCoefficients& g,
                             FilterKind kind) {
  spec.validate();
  require(spec.kind == kind, kind == FilterKind::low_pass
                                 ? "synthesize_lowpass requires a low-pass spec"
                                 : "synthesize_highpass requires a high-pass spec");
  check_prototype(g, spec.order);
  const double kn = cutoff_scale_factor(spec.order, spec.ripple_db);
  LadderElements out;
  out.kind = kind;
  out.z0 = spec.z0;
  out.crossover_hz = spec.crossover_hz;
  out.cutoff_hz = kind == FilterKind::low_pass ? spec.crossover_hz / kn : spec.crossover_hz * kn;
  const double wc = 2.0 * std::numbers::pi * out.cutoff_hz;
  for (int k = 1; k <= spec.order; ++k) {
    const double gk = g.g[k - 1];
    const Orientation o = ladder_orientation(spec.order, k);
    LadderElement e{k, o, ElementKind::inductor, 0.0};
    if (kind == FilterKind::low_pass) {
      e.element = o == Orientation::series ? ElementKind::inductor : ElementKind::capacitor;
      e.value = o == Orientation::series ? gk * spec.z0 / wc : gk / (spec.z0 * wc);
    } else {
      e.element = o == Orientation::series ? ElementKind::capacitor : ElementKind::inductor;
      e.value = o == Orientation::series ? 1.0 / (gk * spec.z0 * wc) : spec.z0 / (gk * wc);
    }
    out.elements.push_back(e);
  }
  return out;
}

}  // namespace

void FilterSpec::validate() const {
  require(order >= 1, "filter order must be >= 1");
  require(std::isfinite(ripple_db) && ripple_db > 0.0, "ripple must be > 0 dB");
  require(std::isfinite(crossover_hz) && crossover_hz > 0.0, "crossover frequency must be > 0");
  require(std::isfinite(z0) && z0 > 0.0, "reference impedance must be > 0");
}

PrototypeCoefficients chebyshev_prototype(int order, double ripple_db, Termination termination) {
  require(order >= 1, "filter order must be >= 1");
  require(std::isfinite(ripple_db) && ripple_db > 0.0, "ripple must be > 0 dB");
  if (termination == Termination::doubly) return doubly_terminated(order, ripple_db);
  if (order > max_singly_terminated_order) {
    throw Error(ErrorCode::prototype_unavailable,
                "singly-terminated synthesis supports order <= " +
                    std::to_string(max_singly_terminated_order));
  }
  return singly_terminated(order, ripple_db);
}

double cutoff_scale_factor(int order, double ripple_db) {
  require(order >= 1, "filter order must be >= 1");
  const double eps_sq = ripple_epsilon_sq(ripple_db);
  require(ripple_db > 0.0 && eps_sq <= 1.0 + 1e-15,
          "cutoff scaling needs 0 < ripple <= 10*log10(2) dB");
  const double x = std::sqrt(1.0 / std::min(eps_sq, 1.0));
  return std::cosh(std::acosh(x) / order);
}

Orientation ladder_orientation(int order, int index) {
  return (order - index) % 2 == 0 ? Orientation::series : Orientation::shunt;
}

LadderElements synthesize_lowpass(const FilterSpec& spec, const PrototypeCoefficients& g) {
  return scaled_ladder(spec, g, FilterKind::low_pass);
}

LadderElements synthesize_highpass(const FilterSpec& spec, const PrototypeCoefficients& g) {
  return scaled_ladder(spec, g, FilterKind::high_pass);
}

PrototypeCoefficients recover_prototype(const LadderElements& ladder) {
  const double wc = 2.0 * std::numbers::pi * ladder.cutoff_hz;
  PrototypeCoefficients g;
  for (const auto& e : ladder.elements) {
    const bool series = e.orientation == Orientation::series;
    if (ladder.kind == FilterKind::low_pass) {
      g.g.push_back(series ? e.value * wc / ladder.z0 : e.value * ladder.z0 * wc);
    } else {
      g.g.push_back(series ? 1.0 / (e.value * ladder.z0 * wc) : ladder.z0 / (e.value * wc));
    }
  }
  return g;
}

Netlist ladder_netlist(const LadderElements& ladder) {
  require(!ladder.elements.empty(), "ladder has no elements");
  Netlist net;
  int node = net.add_node("in");
  const int in = node;
  const char prefix_series = ladder.kind == FilterKind::low_pass ? 'L' : 'C';
  const char prefix_shunt = ladder.kind == FilterKind::low_pass ? 'C' : 'L';
  // Find the series element closest to the output; its far node is "out".
  int last_series = -1;
  for (const auto& e : ladder.elements) {
    if (e.orientation == Orientation::series && (last_series < 0 || e.index < last_series)) {
      last_series = e.index;
    }
  }
  for (auto it = ladder.elements.rbegin(); it != ladder.elements.rend(); ++it) {
    const auto& e = *it;
    if (e.orientation == Orientation::series) {
      const int next = net.add_node(e.index == last_series ? "out" : "n" + std::to_string(e.index));
      net.add_element(e.element, e.value, node, next, prefix_series + std::to_string(e.index));
      node = next;
    } else {
      net.add_element(e.element, e.value, node, Netlist::ground,
                      prefix_shunt + std::to_string(e.index));
    }
  }
  net.add_port(in, ladder.z0, "common");
  net.add_port(node, ladder.z0, "out");
  return net;
}

Netlist diplexer_netlist(const LadderElements& lpf, const LadderElements& hpf, double z0) {
  require(lpf.kind == FilterKind::low_pass && !lpf.elements.empty(),
          "diplexer needs a non-empty low-pass arm", ErrorCode::inconsistent_design);
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); };
  if (!same(lpf.z0, z0)) throw Error(ErrorCode::inconsistent_design, "low-pass arm Z0 differs");
  const bool has_hpf = !hpf.elements.empty();
  if (has_hpf) {
    if (hpf.kind != FilterKind::high_pass) {
      throw Error(ErrorCode::inconsistent_design, "second arm must be high-pass");
    }
    if (!same(hpf.z0, z0)) throw Error(ErrorCode::inconsistent_design, "high-pass arm Z0 differs");
    if (!same(hpf.crossover_hz, lpf.crossover_hz)) {
      throw Error(ErrorCode::inconsistent_design, "arms designed for different crossovers");
    }
  }
  Netlist net;
  const int common = net.add_node("common");
  net.add_port(common, z0, "common");

  const Netlist lp = ladder_netlist(lpf);
  const auto lp_map = merge_into(net, lp, "lp.", {{lp.ports()[0].node, common}});
  net.add_port(lp_map[lp.ports()[1].node], z0, "low");
  if (has_hpf) {
    const Netlist hp = ladder_netlist(hpf);
    const auto hp_map = merge_into(net, hp, "hp.", {{hp.ports()[0].node, common}});
    net.add_port(hp_map[hp.ports()[1].node], z0, "high");
  }
  return net;
}

FilterSpec filter_spec_from_json(const nlohmann::json& doc) {
  FilterSpec spec;
  try {
    spec.order = doc.at("n").get<int>();
    spec.ripple_db = doc.at("ripple_db").get<double>();
    spec.crossover_hz = doc.at("crossover_hz").get<double>();
    spec.z0 = doc.at("z0_ohm").get<double>();
    const auto term = doc.value("termination", std::string("singly"));
    if (term == "singly") {
      spec.termination = Termination::singly;
    } else if (term == "doubly") {
      spec.termination = Termination::doubly;
    } else {
      throw Error(ErrorCode::parse_error, "termination must be 'singly' or 'doubly'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("filter design document: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const FilterSpec& spec) {
  return {{"n", spec.order},
          {"ripple_db", spec.ripple_db},
          {"crossover_hz", spec.crossover_hz},
          {"z0_ohm", spec.z0},
          {"termination", spec.termination == Termination::singly ? "singly" : "doubly"}};
}

std::string component_report_csv(const LadderElements& lpf, const LadderElements& hpf) {
  std::ostringstream os;
  os << "index,arm,orientation,element,value_SI\n";
  auto rows = [&os](const LadderElements& ladder, const char* arm) {
    for (const auto& e : ladder.elements) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9e", e.value);
      os << e.index << ',' << arm << ','
         << (e.orientation == Orientation::series ? "series" : "shunt") << ','
         << to_string(e.element) << ',' << buf << '\n';
    }
  };
  rows(lpf, "low");
  rows(hpf, "high");
  return os.str();
}

}  // namespace dtwpa
