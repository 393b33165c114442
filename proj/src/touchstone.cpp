#include "dtwpa/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dtwpa {
namespace {

// Column order of entry `idx` within one frequency record.
std::pair<int, int> entry_position(int idx, int ports) {
  if (ports == 2) {
    static constexpr int rows[] = {0, 1, 0, 1};
    static constexpr int cols[] = {0, 0, 1, 1};
    return {rows[idx], cols[idx]};
  }
  return {idx / ports, idx % ports};
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

}  // namespace

std::string write_touchstone(const SParamSweep& sweep, double z0) {
  std::ostringstream os;
  const int p = static_cast<int>(sweep.port_count());
  os << "! " << p << "-port S-parameters\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "# Hz S RI R %g\n", z0);
  os << buf;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g", sweep.frequencies[k]);
    os << buf;
    const int entries = p * p;
    for (int idx = 0; idx < entries; ++idx) {
      if (p > 2 && idx > 0 && idx % 4 == 0) os << "\n";
      const auto [r, c] = entry_position(idx, p);
      const auto v = sweep.s[k](r, c);
      std::snprintf(buf, sizeof buf, " %.12e %.12e", v.real(), v.imag());
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

SParamSweep read_touchstone(const std::string& text, int ports) {
  require(ports >= 1, "touchstone port count must be >= 1");
  double unit = 1e9;  // Touchstone default is GHz
  std::string format = "MA";
  std::vector<double> numbers;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
    std::istringstream ls(line);
    std::string tok;
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos &&
        line[line.find_first_not_of(" \t\r")] == '#') {
      ls >> tok;  // '#'
      while (ls >> tok) {
        const std::string t = upper(tok);
        if (t == "HZ") unit = 1.0;
        else if (t == "KHZ") unit = 1e3;
        else if (t == "MHZ") unit = 1e6;
        else if (t == "GHZ") unit = 1e9;
        else if (t == "RI" || t == "MA" || t == "DB") format = t;
        else if (t == "S" || t == "R") continue;
        else {
          char* end = nullptr;
          std::strtod(tok.c_str(), &end);  // reference impedance value
          if (end == tok.c_str()) {
            throw Error(ErrorCode::parse_error, "unsupported touchstone option '" + tok + "'");
          }
        }
      }
      continue;
    }
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw Error(ErrorCode::parse_error, "bad touchstone number '" + tok + "'");
      }
      numbers.push_back(v);
    }
  }
  const std::size_t record = 1 + 2 * static_cast<std::size_t>(ports) * ports;
  if (numbers.empty() || numbers.size() % record != 0) {
    throw Error(ErrorCode::parse_error, "touchstone data length does not match port count");
  }
  SParamSweep sweep;
  for (std::size_t at = 0; at < numbers.size(); at += record) {
    sweep.frequencies.push_back(numbers[at] * unit);
    Eigen::MatrixXcd s(ports, ports);
    for (int idx = 0; idx < ports * ports; ++idx) {
      const double a = numbers[at + 1 + 2 * idx], b = numbers[at + 2 + 2 * idx];
      std::complex<double> v;
      if (format == "RI") {
        v = {a, b};
      } else {
        const double mag = format == "DB" ? std::pow(10.0, a / 20.0) : a;
        v = std::polar(mag, b * phys::pi / 180.0);
      }
      const auto [r, c] = entry_position(idx, ports);
      s(r, c) = v;
    }
    sweep.s.push_back(std::move(s));
  }
  return sweep;
}

}  // namespace dtwpa
