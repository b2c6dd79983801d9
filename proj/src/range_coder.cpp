#include "pcac/range_coder.hpp"

#include <algorithm>
#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

namespace {
constexpr std::uint64_t kTopThreshold = 1ull << 56;  // renormalize below this
constexpr std::uint32_t kTotal = 1u << 16;
}  // namespace

void RangeEncoder::shift_low() {
  const std::uint64_t lo64 = static_cast<std::uint64_t>(low_);
  if (lo64 < 0xFF00000000000000ull || (low_ >> 64) != 0) {
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 64);
    if (started_) out_.push_back(static_cast<std::uint8_t>(cache_ + carry));
    for (; pending_ff_ > 0; --pending_ff_) {
      out_.push_back(static_cast<std::uint8_t>(0xFF + carry));
    }
    cache_ = static_cast<std::uint8_t>(lo64 >> 56);
    started_ = true;
  } else {
    ++pending_ff_;
  }
  low_ = static_cast<unsigned __int128>(lo64 << 8);
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq) {
  if (freq == 0 || cum + freq > kTotal) throw DataError("RangeEncoder: bad frequency interval");
  const std::uint64_t r = range_ >> 16;
  low_ += static_cast<unsigned __int128>(r) * cum;
  // The top slot takes the division remainder so the full interval is used.
  range_ = (cum + freq == kTotal) ? range_ - r * cum : r * freq;
  while (range_ < kTopThreshold) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_raw16(std::uint32_t value) {
  if (value >= kTotal) throw DataError("RangeEncoder: raw value exceeds 16 bits");
  encode(value, 1);
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  // Round low up to a 48-bit boundary: the interval is at least 2^56 wide,
  // so the rounded value still lies inside it, and its trailing 48 bits are
  // zero — the decoder's zero padding reproduces them for free.
  constexpr unsigned __int128 grid = static_cast<unsigned __int128>(1) << 48;
  low_ = (low_ + grid - 1) & ~(grid - 1);
  shift_low();
  shift_low();
  if (started_) out_.push_back(cache_);
  for (; pending_ff_ > 0; --pending_ff_) out_.push_back(0xFF);
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const std::uint8_t* data, std::size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < size_) return data_[pos_++];
  if (++past_end_ > 8) {
    throw FormatError("range decoder: payload truncated (read past byte " +
                      std::to_string(size_) + ")");
  }
  return 0;
}

std::uint32_t RangeDecoder::decode_target() const {
  const std::uint64_t r = range_ >> 16;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(code_ / r, kTotal - 1));
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq) {
  const std::uint64_t r = range_ >> 16;
  code_ -= r * cum;
  range_ = (cum + freq == kTotal) ? range_ - r * cum : r * freq;
  while (range_ < kTopThreshold) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::uint32_t RangeDecoder::decode_raw16() {
  const std::uint32_t value = decode_target();
  consume(value, 1);
  return value;
}

namespace {

const ChannelCdf& table_for(const CdfTableSet& tables, std::size_t index) {
  if (tables.channels.empty()) throw DataError("range coder: empty table set");
  return tables.channels[index % tables.channels.size()];
}

}  // namespace

std::vector<std::uint8_t> range_encode(const SymbolStream& stream, const CdfTableSet& tables) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < stream.symbols.size(); ++i) {
    const ChannelCdf& t = table_for(tables, i);
    const long long v = stream.symbols[i];
    if (t.in_support(v)) {
      const std::size_t sym = t.symbol_of(v);
      enc.encode(t.cum[sym], t.freq(sym));
    } else {
      if (v < INT32_MIN || v > INT32_MAX) {
        throw NumericError("range_encode: symbol " + std::to_string(v) +
                           " outside 32-bit escape range");
      }
      const std::size_t esc = t.escape_symbol();
      enc.encode(t.cum[esc], t.freq(esc));
      const std::uint32_t raw = static_cast<std::uint32_t>(static_cast<std::int32_t>(v));
      enc.encode_raw16(raw >> 16);
      enc.encode_raw16(raw & 0xFFFF);
    }
  }
  return enc.finish();
}

SymbolStream range_decode(const std::uint8_t* data, std::size_t size, const CdfTableSet& tables,
                          std::size_t symbol_count) {
  RangeDecoder dec(data, size);
  SymbolStream out;
  out.symbols.reserve(symbol_count);
  for (std::size_t i = 0; i < symbol_count; ++i) {
    const ChannelCdf& t = table_for(tables, i);
    const std::uint32_t target = dec.decode_target();
    // cum is strictly increasing: binary search for the containing interval.
    const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), target);
    const std::size_t sym = static_cast<std::size_t>(it - t.cum.begin()) - 1;
    dec.consume(t.cum[sym], t.freq(sym));
    if (sym == t.escape_symbol()) {
      const std::uint32_t hi = dec.decode_raw16();
      const std::uint32_t lo = dec.decode_raw16();
      out.symbols.push_back(static_cast<std::int32_t>((hi << 16) | lo));
    } else {
      out.symbols.push_back(t.z_min + static_cast<long long>(sym));
    }
  }
  return out;
}

double table_code_bits(const SymbolStream& stream, const CdfTableSet& tables) {
  double bits = 0.0;
  for (std::size_t i = 0; i < stream.symbols.size(); ++i) {
    const ChannelCdf& t = table_for(tables, i);
    const long long v = stream.symbols[i];
    if (t.in_support(v)) {
      const std::size_t sym = t.symbol_of(v);
      bits -= std::log2(static_cast<double>(t.freq(sym)) / kTotal);
    } else {
      bits -= std::log2(static_cast<double>(t.freq(t.escape_symbol())) / kTotal);
      bits += 32.0;
    }
  }
  return bits;
}

}  // namespace pcac
