#pragma once

// Linear frequency-domain network analysis: two-port ABCD algebra, nodal
// N-port scattering parameters, crossover search and Bloch dispersion.

#include "dtwpa/constants.hpp"
#include "dtwpa/error.hpp"
#include "dtwpa/filtsynth.hpp"
#include "dtwpa/netlist.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace dtwpa {

template <typename Scalar = double>
using Abcd = Eigen::Matrix<std::complex<Scalar>, 2, 2>;

/// Impedance (series) or admittance (shunt) of a lumped element at f. A
/// Josephson junction is represented by its small-signal inductance.
template <typename Scalar>
std::complex<Scalar> element_immittance(ElementKind kind, Scalar value, Orientation orientation,
                                        Scalar f) {
  const std::complex<Scalar> jw(0, 2 * static_cast<Scalar>(phys::pi) * f);
  auto inductance = [&]() -> Scalar {
    return kind == ElementKind::josephson
               ? static_cast<Scalar>(phys::flux_quantum) / (2 * static_cast<Scalar>(phys::pi) * value)
               : value;
  };
  std::complex<Scalar> z;
  switch (kind) {
    case ElementKind::resistor: z = value; break;
    case ElementKind::capacitor: z = Scalar(1) / (jw * value); break;
    case ElementKind::inductor:
    case ElementKind::josephson: z = jw * inductance(); break;
  }
  return orientation == Orientation::series ? z : Scalar(1) / z;
}

/// Series impedance Z gives [[1, Z], [0, 1]]; shunt admittance Y gives
/// [[1, 0], [Y, 1]]. A zero-valued series inductor is the identity.
template <typename Scalar = double>
Abcd<Scalar> element_abcd(ElementKind kind, Scalar value, Orientation orientation, Scalar f) {
  require(f > 0, "frequency must be positive");
  Abcd<Scalar> m = Abcd<Scalar>::Identity();
  if (orientation == Orientation::series) {
    if ((kind == ElementKind::inductor || kind == ElementKind::resistor) && value == 0) return m;
    m(0, 1) = element_immittance(kind, value, orientation, f);
  } else {
    if (kind == ElementKind::capacitor && value == 0) return m;
    m(1, 0) = element_immittance(kind, value, orientation, f);
  }
  return m;
}

/// Ordered product chain[0] * chain[1] * ... .
template <typename Scalar = double>
Abcd<Scalar> cascade(std::span<const Abcd<Scalar>> chain) {
  require(!chain.empty(), "cascade needs at least one two-port");
  Abcd<Scalar> m = chain.front();
  for (std::size_t i = 1; i < chain.size(); ++i) m = m * chain[i];
  return m;
}

template <typename Scalar = double>
Abcd<Scalar> cascade(const std::vector<Abcd<Scalar>>& chain) {
  return cascade<Scalar>(std::span<const Abcd<Scalar>>(chain));
}

/// Two-port S matrix of an ABCD block between equal real references z0.
template <typename Scalar = double>
Eigen::Matrix<std::complex<Scalar>, 2, 2> abcd_to_s(const Abcd<Scalar>& m, Scalar z0) {
  const auto a = m(0, 0), b = m(0, 1) / z0, c = m(1, 0) * z0, d = m(1, 1);
  const auto den = a + b + c + d;
  Eigen::Matrix<std::complex<Scalar>, 2, 2> s;
  s(0, 0) = (a + b - c - d) / den;
  s(0, 1) = Scalar(2) * (a * d - m(0, 1) * m(1, 0)) / den;
  s(1, 0) = Scalar(2) / den;
  s(1, 1) = (-a + b - c + d) / den;
  return s;
}

/// ABCD of a synthesized arm from the common end to the terminated end.
Abcd<double> ladder_abcd(const LadderElements& ladder, double f);

struct SParamSweep {
  std::vector<double> frequencies;  // Hz, strictly increasing
  std::vector<Eigen::MatrixXcd> s;  // one P x P matrix per frequency

  std::size_t size() const { return frequencies.size(); }
  std::size_t port_count() const { return s.empty() ? 0 : static_cast<std::size_t>(s.front().rows()); }
  /// Magnitude of S(out, in) in dB at sample k (0-based port indices).
  double db(std::size_t k, int out, int in) const;
};

struct SweepOptions {
  unsigned threads = 1;
};

/// Nodal admittance analysis with every port terminated in its reference
/// impedance. Throws ErrorCode::singular_matrix naming the frequency at which
/// the admittance matrix cannot be solved.
SParamSweep nport_sparams(const Netlist& netlist, std::span<const double> freqs,
                          const SweepOptions& options = {});

Eigen::MatrixXcd nport_sparams_at(const Netlist& netlist, double f);

/// Linear grid of `points` frequencies covering [f_start, f_stop].
std::vector<double> linear_grid(double f_start, double f_stop, std::size_t points);

/// Frequency where |S(port_low, common)| = |S(port_high, common)|; first
/// crossing of the sweep, linearly interpolated in magnitude difference.
/// Throws ErrorCode::no_crossover if the sweep never brackets one.
double crossover_frequency(const SParamSweep& sweep, int port_low, int port_high,
                           int port_common = 0);

/// Complex Bloch phase per cell from cos k = (A + D) / 2.
///
/// Branch cut: principal arccos, then negated if needed so that Im k >= 0
/// (a forward wave e^{-jkz} that decays), and Re k is wrapped into [0, 2 pi).
/// In a lossless passband the result is real in [0, pi]; in a stopband Re k
/// sits on 0 or pi and Im k > 0.
std::complex<double> bloch_phase_per_cell(const Abcd<double>& cell);

/// max over entries of |S^H S - I|.
double unitarity_error(const Eigen::MatrixXcd& s);
/// max over entries of |S - S^T|.
double reciprocity_error(const Eigen::MatrixXcd& s);

/// CSV: f_hz, then S<i><j>_re, S<i><j>_im in row-major order (1-based names).
std::string sparams_csv(const SParamSweep& sweep);

}  // namespace dtwpa
