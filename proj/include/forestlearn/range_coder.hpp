#pragma once

// Byte-oriented range coder over 64-bit state. The encoder keeps its output
// in memory, so a carry out of `low` is propagated straight into the bytes
// already written; the decoder tracks (code - low) and never sees a carry.
//
// Renormalization keeps range >= 2^56, so a symbol with frequency f out of
// total T costs log2(T/f) bits plus a relative truncation loss below
// T / 2^56. The flush writes the shortest byte string that identifies a
// point inside the final interval and trailing zero bytes are dropped; the
// decoder reads zeros past the end of its buffer.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace forestlearn {

class RangeEncoder {
 public:
  static constexpr std::uint64_t kTop = std::uint64_t{1} << 56;
  static constexpr std::uint64_t kMaxTotal = std::uint64_t{1} << 40;

  // Codes the interval [cum, cum + freq) out of total.
  void encode(std::uint64_t cum, std::uint64_t freq, std::uint64_t total) {
    if (freq == 0 || total == 0 || cum + freq > total || total > kMaxTotal)
      throw std::invalid_argument("range coder: invalid frequency triple");
    const std::uint64_t r = range_ / total;
    const std::uint64_t before = low_;
    low_ += r * cum;
    if (low_ < before) carry();
    range_ = r * freq;
    while (range_ < kTop) {
      out_.push_back(static_cast<std::uint8_t>(low_ >> 56));
      low_ <<= 8;
      range_ <<= 8;
    }
    ideal_bits_ += std::log2(static_cast<double>(total)) - std::log2(static_cast<double>(freq));
  }

  void encode_bit(bool bit, std::uint64_t freq_zero, std::uint64_t total) {
    if (bit)
      encode(freq_zero, total - freq_zero, total);
    else
      encode(0, freq_zero, total);
  }

  // Terminates the stream and returns the bytes. The encoder is spent.
  std::vector<std::uint8_t> finish() {
    // Largest s (multiple of 8) such that a multiple of 2^s lies in
    // [low, low + range - 1]; emit that point's bytes above bit s.
    const unsigned __int128 lo = low_;
    const unsigned __int128 hi = lo + range_ - 1;
    for (int s = 64; s >= 0; s -= 8) {
      const unsigned __int128 step = static_cast<unsigned __int128>(1) << s;
      const unsigned __int128 v = (lo + step - 1) / step * step;
      if (v > hi) continue;
      if (v >> 64) carry();
      const auto point = static_cast<std::uint64_t>(v);
      for (int b = 56; b >= s; b -= 8) out_.push_back(static_cast<std::uint8_t>(point >> b));
      break;
    }
    while (!out_.empty() && out_.back() == 0) out_.pop_back();
    return std::move(out_);
  }

  // Sum of log2(total/freq) over every coded symbol.
  double ideal_bits() const noexcept { return ideal_bits_; }

 private:
  void carry() {
    for (auto it = out_.rbegin(); it != out_.rend(); ++it)
      if (++*it != 0) return;
    throw std::logic_error("range coder: carry past the start of the stream");
  }

  std::uint64_t low_ = 0;
  std::uint64_t range_ = ~std::uint64_t{0};
  std::vector<std::uint8_t> out_;
  double ideal_bits_ = 0.0;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
    for (int k = 0; k < 8; ++k) code_ = (code_ << 8) | next_byte();
  }

  // Value in [0, total) locating the next symbol; follow with consume().
  std::uint64_t peek(std::uint64_t total) {
    if (total == 0 || total > RangeEncoder::kMaxTotal) throw std::invalid_argument("range coder: invalid total");
    step_ = range_ / total;
    const std::uint64_t v = code_ / step_;
    return v < total ? v : total - 1;
  }

  void consume(std::uint64_t cum, std::uint64_t freq) {
    code_ -= step_ * cum;
    range_ = step_ * freq;
    if (code_ >= range_) throw std::runtime_error("range coder: stream is inconsistent");
    while (range_ < RangeEncoder::kTop) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

  bool decode_bit(std::uint64_t freq_zero, std::uint64_t total) {
    const bool bit = peek(total) >= freq_zero;
    if (bit)
      consume(freq_zero, total - freq_zero);
    else
      consume(0, freq_zero);
    return bit;
  }

  // Bytes requested beyond the end of the input (zeros were supplied).
  std::size_t overrun() const noexcept { return overrun_; }

 private:
  std::uint64_t next_byte() {
    if (pos_ < in_.size()) return in_[pos_++];
    ++overrun_;
    return 0;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::size_t overrun_ = 0;
  std::uint64_t code_ = 0;
  std::uint64_t range_ = ~std::uint64_t{0};
  std::uint64_t step_ = 1;
};

}  // namespace forestlearn
