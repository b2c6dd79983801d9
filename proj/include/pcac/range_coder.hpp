#pragma once

#include <cstdint>
#include <vector>

#include "pcac/cdf_table.hpp"

namespace pcac {

/// Byte-oriented range coder over 16-bit frequency tables (total 2^16).
/// 64-bit range, renormalized a byte at a time once it drops below 2^56;
/// carries are resolved through a cached byte plus a run of pending 0xFF
/// bytes. The flush rounds the interval base up to a 48-bit boundary and
/// emits at most three further bytes, so the whole-stream overhead stays
/// below four bytes. The byte format is specified in docs/FORMATS.md.
class RangeEncoder {
 public:
  /// Narrows the interval to [cum, cum+freq) / 2^16. Requires freq >= 1 and
  /// cum + freq <= 2^16. The topmost slot absorbs the division remainder.
  void encode(std::uint32_t cum, std::uint32_t freq);
  /// A 16-bit value at uniform probability (used for escape payloads).
  void encode_raw16(std::uint32_t value);
  /// Flushes and returns the payload. The encoder is spent afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  unsigned __int128 low_ = 0;
  std::uint64_t range_ = ~0ull;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ff_ = 0;
  bool started_ = false;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  /// Starts decoding `size` payload bytes. Reading may legitimately run up
  /// to eight zero-fed bytes past the payload (the code window lead);
  /// anything beyond that is reported as truncation via FormatError.
  RangeDecoder(const std::uint8_t* data, std::size_t size);

  /// Current 16-bit target; the caller looks up the symbol whose cumulative
  /// interval contains it, then calls consume with that symbol's entry.
  std::uint32_t decode_target() const;
  void consume(std::uint32_t cum, std::uint32_t freq);
  std::uint32_t decode_raw16();

 private:
  std::uint8_t next_byte();

  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
  std::size_t pos_ = 0;
  std::size_t past_end_ = 0;
  std::uint64_t code_ = 0;
  std::uint64_t range_ = ~0ull;
};

/// Latent symbols in canonical channel-major order: symbol i belongs to
/// channel i mod table-count. Out-of-support values ride the escape slot.
struct SymbolStream {
  std::vector<long long> symbols;
};

std::vector<std::uint8_t> range_encode(const SymbolStream& stream, const CdfTableSet& tables);
SymbolStream range_decode(const std::uint8_t* data, std::size_t size, const CdfTableSet& tables,
                          std::size_t symbol_count);

/// Ideal table-based code length: Σ -log2(freq / 2^16) plus 32 raw bits per
/// escape. The measured payload stays within 32 bits of this.
double table_code_bits(const SymbolStream& stream, const CdfTableSet& tables);

}  // namespace pcac
