#include "dtwpa/rfnet.hpp"

#include "dtwpa/parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dtwpa {
namespace {

using cplx = std::complex<double>;

// Below this many unknowns the dense LU with a condition estimate is used.
constexpr int dense_limit = 160;
constexpr double singular_rcond = 1e-12;

cplx branch_admittance(const Element& e, double f, double loss_tangent) {
  const double w = 2.0 * phys::pi * f;
  switch (e.kind) {
    case ElementKind::resistor: return 1.0 / e.value;
    case ElementKind::capacitor: return cplx(w * e.value * loss_tangent, w * e.value);
    case ElementKind::inductor: return 1.0 / cplx(0.0, w * e.value);
    case ElementKind::josephson:
      return 1.0 / cplx(0.0, w * phys::flux_quantum / (2.0 * phys::pi * e.value));
  }
  return 0.0;
}

std::string freq_label(double f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g Hz", f);
  return buf;
}

}  // namespace

Abcd<double> ladder_abcd(const LadderElements& ladder, double f) {
  std::vector<Abcd<double>> chain;
  chain.reserve(ladder.elements.size());
  for (auto it = ladder.elements.rbegin(); it != ladder.elements.rend(); ++it) {
    chain.push_back(element_abcd<double>(it->element, it->value, it->orientation, f));
  }
  return cascade<double>(chain);
}

double SParamSweep::db(std::size_t k, int out, int in) const {
  return 20.0 * std::log10(std::abs(s.at(k)(out, in)));
}

Eigen::MatrixXcd nport_sparams_at(const Netlist& netlist, double f) {
  require(f > 0.0 && std::isfinite(f), "frequencies must be positive");
  const int n = static_cast<int>(netlist.node_count()) - 1;  // ground dropped
  const int p = static_cast<int>(netlist.port_count());

  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(n, p);
  for (int q = 0; q < p; ++q) rhs(netlist.ports()[q].node - 1, q) = 1.0;

  Eigen::MatrixXcd x;
  if (n <= dense_limit) {
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& e : netlist.elements()) {
      const cplx g = branch_admittance(e, f, netlist.loss_tangent);
      const int a = e.n1 - 1, b = e.n2 - 1;
      if (a >= 0) y(a, a) += g;
      if (b >= 0) y(b, b) += g;
      if (a >= 0 && b >= 0) {
        y(a, b) -= g;
        y(b, a) -= g;
      }
    }
    for (const auto& port : netlist.ports()) y(port.node - 1, port.node - 1) += 1.0 / port.z0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y);
    const double rc = lu.rcond();
    // A zero pivot can make the estimate itself non-finite.
    if (!(rc >= singular_rcond) || !std::isfinite(rc)) {
      throw Error(ErrorCode::singular_matrix, "at " + freq_label(f) + " (rcond " +
                                                  std::to_string(rc) + ")");
    }
    x = lu.solve(rhs);
    if (!x.allFinite()) throw Error(ErrorCode::singular_matrix, "at " + freq_label(f));
  } else {
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(4 * netlist.elements().size() + p);
    for (const auto& e : netlist.elements()) {
      const cplx g = branch_admittance(e, f, netlist.loss_tangent);
      const int a = e.n1 - 1, b = e.n2 - 1;
      if (a >= 0) trip.emplace_back(a, a, g);
      if (b >= 0) trip.emplace_back(b, b, g);
      if (a >= 0 && b >= 0) {
        trip.emplace_back(a, b, -g);
        trip.emplace_back(b, a, -g);
      }
    }
    for (const auto& port : netlist.ports()) {
      trip.emplace_back(port.node - 1, port.node - 1, 1.0 / port.z0);
    }
    Eigen::SparseMatrix<cplx> y(n, n);
    y.setFromTriplets(trip.begin(), trip.end());
    y.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(y);
    if (lu.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_matrix, "at " + freq_label(f) + " (" + lu.lastErrorMessage() + ")");
    }
    x = lu.solve(rhs);
    // SparseLU offers no condition estimate; reject solutions that do not
    // reproduce the right-hand side.
    const Eigen::SparseMatrix<double> mag = y.cwiseAbs();
    const Eigen::VectorXd row_sums = mag * Eigen::VectorXd::Ones(n);
    const double scale = row_sums.maxCoeff() * x.cwiseAbs().maxCoeff();
    const double residual = (y * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || !(residual <= 1e-9 * std::max(scale, 1.0))) {
      throw Error(ErrorCode::singular_matrix, "at " + freq_label(f));
    }
  }

  Eigen::MatrixXcd s(p, p);
  for (int i = 0; i < p; ++i) {
    const auto& out = netlist.ports()[i];
    for (int j = 0; j < p; ++j) {
      const auto& in = netlist.ports()[j];
      s(i, j) = 2.0 * x(out.node - 1, j) / std::sqrt(out.z0 * in.z0) - (i == j ? 1.0 : 0.0);
    }
  }
  return s;
}

SParamSweep nport_sparams(const Netlist& netlist, std::span<const double> freqs,
                          const SweepOptions& options) {
  netlist.validate();
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    require(freqs[k] > 0.0, "frequencies must be positive");
    require(k == 0 || freqs[k] > freqs[k - 1], "frequencies must be strictly increasing");
  }
  SParamSweep out;
  out.frequencies.assign(freqs.begin(), freqs.end());
  out.s.resize(freqs.size());
  parallel_for(freqs.size(), options.threads,
               [&](std::size_t k) { out.s[k] = nport_sparams_at(netlist, freqs[k]); });
  return out;
}

std::vector<double> linear_grid(double f_start, double f_stop, std::size_t points) {
  require(points >= 2 && f_stop > f_start, "grid needs >= 2 points and f_stop > f_start");
  std::vector<double> f(points);
  for (std::size_t i = 0; i < points; ++i) {
    f[i] = f_start + (f_stop - f_start) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return f;
}

double crossover_frequency(const SParamSweep& sweep, int port_low, int port_high,
                           int port_common) {
  const int p = static_cast<int>(sweep.port_count());
  require(port_low >= 0 && port_low < p && port_high >= 0 && port_high < p && port_common >= 0 &&
              port_common < p,
          "crossover port index out of range");
  auto diff = [&](std::size_t k) {
    return std::abs(sweep.s[k](port_low, port_common)) -
           std::abs(sweep.s[k](port_high, port_common));
  };
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    const double d0 = diff(k - 1), d1 = diff(k);
    if (d0 == 0.0) return sweep.frequencies[k - 1];
    if ((d0 > 0.0) != (d1 > 0.0) || d1 == 0.0) {
      const double t = d0 / (d0 - d1);
      return sweep.frequencies[k - 1] + t * (sweep.frequencies[k] - sweep.frequencies[k - 1]);
    }
  }
  throw Error(ErrorCode::no_crossover, "|S" + std::to_string(port_low + 1) +
                                           std::to_string(port_common + 1) + "| and |S" +
                                           std::to_string(port_high + 1) +
                                           std::to_string(port_common + 1) +
                                           "| never cross in the sweep");
}

std::complex<double> bloch_phase_per_cell(const Abcd<double>& cell) {
  const cplx half_trace = 0.5 * (cell(0, 0) + cell(1, 1));
  cplx k = std::acos(half_trace);
  if (k.imag() < 0.0) k = -k;
  if (k.real() < 0.0) k += 2.0 * phys::pi;  // cos is 2*pi periodic
  return k;
}

double unitarity_error(const Eigen::MatrixXcd& s) {
  const Eigen::MatrixXcd e = s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols());
  return e.cwiseAbs().maxCoeff();
}

double reciprocity_error(const Eigen::MatrixXcd& s) {
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

std::string sparams_csv(const SParamSweep& sweep) {
  std::ostringstream os;
  const int p = static_cast<int>(sweep.port_count());
  os << "f_hz";
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      os << ",S" << i + 1 << j + 1 << "_re,S" << i + 1 << j + 1 << "_im";
    }
  }
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g", sweep.frequencies[k]);
    os << buf;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        const cplx v = sweep.s[k](i, j);
        std::snprintf(buf, sizeof buf, ",%.12e,%.12e", v.real(), v.imag());
        os << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dtwpa
