#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hplk/heun.hpp"
#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

namespace hplk {

inline constexpr const char* kCsvHeader = "# hplk-csv v1";
inline constexpr char kPortraitMagic[5] = {'H', 'P', 'L', 'K', '1'};

// shortest round-trip decimal form
std::string format_double(double x);

// {"direction", "anchor", "first_index", "exponent", "normalization", "truncation_error", "coeffs": [[re, im], ...]}
std::string series_to_json(const SeriesSolution& s, int indent = -1);
SeriesSolution series_from_json(const std::string& text);

// header comment, column line "B,A,rho,uncertainty,locked", one row per cell in row-major order
void write_portrait_csv(std::ostream& os, const Portrait& p);
// "HPLK1", uint32 nb, uint32 na, float64 b_lo b_hi a_lo a_hi omega, rho[na*nb], uncertainty[na*nb]
void write_portrait_binary(std::ostream& os, const Portrait& p);
Portrait read_portrait_binary(std::istream& is);
std::string portrait_to_json(const Portrait& p, int indent = -1);

// header comment, column line "A,B,equation,sign,residual", curves separated by "# curve i"
void write_curves_csv(std::ostream& os, const std::vector<Curve>& curves);
std::string curves_to_json(const std::vector<Curve>& curves, int indent = -1);

}  // namespace hplk
