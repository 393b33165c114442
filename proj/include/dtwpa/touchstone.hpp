#pragma once

#include "dtwpa/rfnet.hpp"

#include <string>

namespace dtwpa {

/// Touchstone v1 text ("# Hz S RI R <z0>"). Two-port data uses the
/// S11 S21 S12 S22 column order; larger networks are written row by row,
/// four entries per line.
std::string write_touchstone(const SParamSweep& sweep, double z0);

/// Parses Touchstone v1 data with RI, MA or DB formats and Hz/kHz/MHz/GHz
/// units. `ports` comes from the file extension (.s<N>p) of the source.
SParamSweep read_touchstone(const std::string& text, int ports);

}  // namespace dtwpa
