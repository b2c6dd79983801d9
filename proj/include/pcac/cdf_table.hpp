#pragma once

#include <cstdint>
#include <vector>

#include "pcac/factorized_density.hpp"

namespace pcac {

/// Frequency table of one channel for the range coder. Symbols 0..S-1 map to
/// integers z_min..z_max; symbol S is the escape (coded value follows as a
/// raw 32-bit two's-complement integer). `cum` has S+2 entries: cum[0] = 0,
/// strictly increasing, cum[S+1] = 65536.
struct ChannelCdf {
  long long z_min = 0;
  long long z_max = 0;
  std::vector<std::uint32_t> cum;

  std::size_t symbol_count() const { return cum.size() - 1; }  // incl. escape
  std::size_t escape_symbol() const { return cum.size() - 2; }
  bool in_support(long long v) const { return v >= z_min && v <= z_max; }
  std::size_t symbol_of(long long v) const { return static_cast<std::size_t>(v - z_min); }
  std::uint32_t freq(std::size_t sym) const { return cum[sym + 1] - cum[sym]; }
};

struct CdfTableSet {
  std::vector<ChannelCdf> channels;
};

/// Quantizes each channel's density into 16-bit cumulative frequencies. The
/// support covers all integers whose left/right tail mass exceeds tail_mass,
/// widened by one bin on each side; every in-support symbol and the escape
/// get frequency >= 1, and totals are exactly 2^16. Deterministic in ψ, so
/// encoder and decoder rebuild identical tables.
CdfTableSet build_cdf_tables(const FactorizedDensity& density, double tail_mass);

inline CdfTableSet build_cdf_tables(const FactorizedDensity& density) {
  return build_cdf_tables(density, density.tail_mass());
}

}  // namespace pcac
