#include "pcac/cdf_table.hpp"

#include <algorithm>
#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

constexpr long long kSearchBound = 1ll << 40;
constexpr std::uint32_t kTotal = 1u << 16;
constexpr std::size_t kMaxSupport = 60000;  // leaves ample frequency headroom

// Largest v with c(v - 1/2) <= tail_mass (left tail cut).
long long find_left(const FactorizedDensity& d, std::size_t ch, double tail_mass) {
  long long lo = -kSearchBound, hi = kSearchBound;
  if (d.cdf(ch, static_cast<double>(lo) - 0.5) > tail_mass) return lo;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (d.cdf(ch, static_cast<double>(mid) - 0.5) <= tail_mass ? lo : hi) = mid;
  }
  return lo;
}

// Smallest v with 1 - c(v + 1/2) <= tail_mass (right tail cut).
long long find_right(const FactorizedDensity& d, std::size_t ch, double tail_mass) {
  long long lo = -kSearchBound, hi = kSearchBound;
  if (1.0 - d.cdf(ch, static_cast<double>(hi) + 0.5) > tail_mass) return hi;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (1.0 - d.cdf(ch, static_cast<double>(mid) + 0.5) <= tail_mass ? hi : lo) = mid;
  }
  return hi;
}

long long find_median(const FactorizedDensity& d, std::size_t ch) {
  long long lo = -kSearchBound, hi = kSearchBound;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (d.cdf(ch, static_cast<double>(mid)) < 0.5 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

CdfTableSet build_cdf_tables(const FactorizedDensity& density, double tail_mass) {
  CdfTableSet set;
  set.channels.resize(density.channels());

  for (std::size_t ch = 0; ch < density.channels(); ++ch) {
    ChannelCdf& table = set.channels[ch];
    // One widening bin on each side gives narrow densities a {-1, 0, 1}
    // neighborhood and costs at most two minimum-frequency slots.
    table.z_min = find_left(density, ch, tail_mass) - 1;
    table.z_max = std::max(find_right(density, ch, tail_mass) + 1, table.z_min);

    if (static_cast<std::size_t>(table.z_max - table.z_min) + 1 > kMaxSupport) {
      const long long median = find_median(density, ch);
      const long long half = static_cast<long long>(kMaxSupport) / 2;
      table.z_min = std::max(table.z_min, median - half);
      table.z_max = std::min(table.z_max, median + half);
    }
    const std::size_t support = static_cast<std::size_t>(table.z_max - table.z_min) + 1;

    // c at every half-integer boundary of the support.
    std::vector<double> boundary(support + 1);
    for (std::size_t i = 0; i <= support; ++i) {
      boundary[i] = density.cdf(ch, static_cast<double>(table.z_min + static_cast<long long>(i)) - 0.5);
    }
    const double mass = boundary[support] - boundary[0];
    if (!(mass > 0.5)) {
      throw NumericError("build_cdf_tables: channel " + std::to_string(ch) +
                         " keeps only " + std::to_string(mass) + " probability in support");
    }

    // 16-bit frequencies: round, floor at 1, then push the rounding drift
    // into the largest slot so the total is exactly 2^16.
    std::vector<std::uint64_t> freq(support + 1);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < support; ++i) {
      const double p = boundary[i + 1] - boundary[i];
      freq[i] = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::llround(p * static_cast<double>(kTotal))));
      total += freq[i];
    }
    const double p_escape = std::max(1.0 - mass, 0.0);
    freq[support] = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(p_escape * static_cast<double>(kTotal))));
    total += freq[support];

    while (total != kTotal) {
      const std::size_t top =
          static_cast<std::size_t>(std::max_element(freq.begin(), freq.end()) - freq.begin());
      if (total > kTotal) {
        const std::uint64_t cut = std::min<std::uint64_t>(total - kTotal, freq[top] - 1);
        freq[top] -= cut;
        total -= cut;
      } else {
        freq[top] += kTotal - total;
        total = kTotal;
      }
    }

    table.cum.resize(support + 2);
    table.cum[0] = 0;
    for (std::size_t i = 0; i <= support; ++i) {
      table.cum[i + 1] = table.cum[i] + static_cast<std::uint32_t>(freq[i]);
    }
  }
  return set;
}

}  // namespace pcac
