#include <cstdint>
#include <random>

#include "doctest.h"
#include "pcac/errors.hpp"
#include "pcac/range_coder.hpp"

using namespace pcac;

namespace {

// A hand-built table over [z_min, z_max] from explicit frequencies; the last
// entry is the escape slot. Frequencies must total 65536.
ChannelCdf make_table(long long z_min, const std::vector<std::uint32_t>& freqs) {
  ChannelCdf t;
  t.z_min = z_min;
  t.z_max = z_min + static_cast<long long>(freqs.size()) - 2;
  t.cum.resize(freqs.size() + 1);
  t.cum[0] = 0;
  for (std::size_t i = 0; i < freqs.size(); ++i) t.cum[i + 1] = t.cum[i] + freqs[i];
  REQUIRE(t.cum.back() == 65536);
  return t;
}

CdfTableSet random_table_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_channels(1, 4);
  std::uniform_int_distribution<int> support(1, 24);
  std::uniform_int_distribution<long long> origin(-20, 20);
  CdfTableSet set;
  const int k = n_channels(rng);
  for (int ch = 0; ch < k; ++ch) {
    const int s = support(rng);
    std::vector<std::uint32_t> freqs(s + 1, 1);  // escape included
    // Distribute the remaining mass with random emphasis.
    std::uint32_t left = 65536 - static_cast<std::uint32_t>(s + 1);
    std::uniform_int_distribution<std::size_t> slot(0, s);
    for (int chunk = 0; chunk < 8; ++chunk) {
      const std::uint32_t take = chunk == 7 ? left : rng() % (left + 1);
      freqs[slot(rng)] += take;
      left -= take;
    }
    set.channels.push_back(make_table(origin(rng), freqs));
  }
  return set;
}

}  // namespace

TEST_CASE("empty stream encodes to a flush-only payload") {
  SymbolStream empty;
  CdfTableSet tables;
  tables.channels.push_back(make_table(0, {65535, 1}));
  const auto bytes = range_encode(empty, tables);
  CHECK(bytes.size() <= 8);
  const SymbolStream back = range_decode(bytes.data(), bytes.size(), tables, 0);
  CHECK(back.symbols.empty());
}

TEST_CASE("uniform 256-entry table codes close to 8 bits per symbol") {
  // 256 in-support symbols at frequency 255 plus a 256-frequency escape:
  // -log2(255/65536) = 8.0056 bits per symbol.
  std::vector<std::uint32_t> freqs(257, 255);
  freqs[256] = 65536 - 256 * 255;
  CdfTableSet tables;
  tables.channels.push_back(make_table(0, freqs));

  std::mt19937_64 rng(1);
  SymbolStream stream;
  for (int i = 0; i < 1000; ++i) stream.symbols.push_back(rng() % 256);
  const auto bytes = range_encode(stream, tables);
  CHECK(bytes.size() >= 990);
  CHECK(bytes.size() <= 1010);
  const SymbolStream back = range_decode(bytes.data(), bytes.size(), tables, 1000);
  CHECK(back.symbols == stream.symbols);
}

TEST_CASE("a near-certain symbol stream collapses to almost nothing") {
  CdfTableSet tables;
  tables.channels.push_back(make_table(-1, {1, 65533, 1, 1}));  // p(0) ~ 1
  SymbolStream stream;
  stream.symbols.assign(1000, 0);
  const auto bytes = range_encode(stream, tables);
  CHECK(bytes.size() <= 16);
  const SymbolStream back = range_decode(bytes.data(), bytes.size(), tables, 1000);
  CHECK(back.symbols == stream.symbols);
}

TEST_CASE("escape symbols round-trip raw values including negatives") {
  CdfTableSet tables;
  tables.channels.push_back(make_table(0, {65534, 1, 1}));
  for (const long long v : {-1ll, -123456789ll, 2147483647ll, -2147483648ll, 1000000ll}) {
    SymbolStream stream;
    stream.symbols.push_back(v);
    const auto bytes = range_encode(stream, tables);
    const SymbolStream back = range_decode(bytes.data(), bytes.size(), tables, 1);
    REQUIRE(back.symbols.size() == 1);
    CHECK(back.symbols[0] == v);
  }
}

TEST_CASE("out-of-range escape values are rejected") {
  CdfTableSet tables;
  tables.channels.push_back(make_table(0, {65534, 1, 1}));
  SymbolStream stream;
  stream.symbols.push_back(1ll << 40);
  CHECK_THROWS_AS(range_encode(stream, tables), NumericError);
}

TEST_CASE("round-trip and optimality over 10000 random streams") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10000; ++trial) {
    const CdfTableSet tables = random_table_set(rng);
    std::uniform_int_distribution<int> len(0, 40);
    std::uniform_int_distribution<long long> wild(-1000, 1000);
    SymbolStream stream;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      const ChannelCdf& t = tables.channels[i % tables.channels.size()];
      if (rng() % 8 == 0) {
        stream.symbols.push_back(wild(rng));  // frequently out of support
      } else {
        stream.symbols.push_back(t.z_min + static_cast<long long>(
            rng() % static_cast<unsigned long long>(t.z_max - t.z_min + 1)));
      }
    }

    const auto bytes = range_encode(stream, tables);
    const SymbolStream back = range_decode(bytes.data(), bytes.size(), tables, stream.symbols.size());
    REQUIRE(back.symbols == stream.symbols);

    // Payload within 32 bits of the ideal table-based code length.
    const double ideal = table_code_bits(stream, tables);
    CHECK(8.0 * static_cast<double>(bytes.size()) <= ideal + 32.0);

    // Determinism: encoding again yields identical bytes.
    CHECK(range_encode(stream, tables) == bytes);
  }
}

TEST_CASE("truncated payloads are reported, trailing garbage is ignored") {
  std::mt19937_64 rng(3);
  CdfTableSet tables;
  std::vector<std::uint32_t> freqs(65, 1023);  // 64 symbols + escape
  freqs[64] = 65536 - 64 * 1023;
  tables.channels.push_back(make_table(0, freqs));

  SymbolStream stream;
  for (int i = 0; i < 200; ++i) stream.symbols.push_back(rng() % 64);
  const auto bytes = range_encode(stream, tables);
  REQUIRE(bytes.size() > 40);

  CHECK_THROWS_AS(range_decode(bytes.data(), bytes.size() / 2, tables, 200), FormatError);

  auto padded = bytes;
  padded.insert(padded.end(), {0xDE, 0xAD, 0xBE, 0xEF, 0x42});
  const SymbolStream back = range_decode(padded.data(), padded.size(), tables, 200);
  CHECK(back.symbols == stream.symbols);
}
