#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "color/binary_io.hpp"
#include "color/random.hpp"

namespace color {

// Approximate membership over 64-bit keys: partial-key cuckoo hashing with
// 4-slot buckets and up to 16-bit fingerprints. No false negatives for
// inserted keys; false positives at most about 2 * 4 / 2^bits.
class CuckooFilter {
 public:
  static constexpr std::size_t kSlots = 4;
  static constexpr std::size_t kMaxKicks = 500;

  CuckooFilter() : CuckooFilter(0, 12) {}

  CuckooFilter(std::size_t capacity, unsigned fingerprint_bits, std::uint64_t salt = 0)
      : bits_(fingerprint_bits), salt_(salt) {
    if (bits_ < 2 || bits_ > 16) throw std::invalid_argument("fingerprint bits must be in [2, 16]");
    const auto want = std::max<std::size_t>(1, (capacity * 100 / 95 + kSlots - 1) / kSlots);
    buckets_ = std::bit_ceil(want);
    slots_.assign(buckets_ * kSlots, 0);
  }

  // Smallest fingerprint width keeping the false-positive rate of one filter
  // at or below `fpr`.
  static unsigned bits_for(double fpr) {
    if (!(fpr > 0 && fpr < 1)) throw std::invalid_argument("false-positive rate must be in (0, 1)");
    const auto b = static_cast<unsigned>(std::ceil(std::log2(2.0 * kSlots / fpr)));
    return std::clamp(b, 2u, 16u);
  }

  double false_positive_bound() const {
    return std::min(1.0, 2.0 * kSlots / std::ldexp(1.0, static_cast<int>(bits_)));
  }

  void insert(std::uint64_t key) {
    auto [i1, fp] = locate(key);
    if (put(i1, fp) || put(alt(i1, fp), fp)) {
      ++size_;
      return;
    }
    Rng rng(mix64(salt_, key));
    std::size_t i = rng.uniform_index(2) ? alt(i1, fp) : i1;
    for (std::size_t kick = 0; kick < kMaxKicks; ++kick) {
      const auto s = static_cast<std::size_t>(rng.uniform_index(kSlots));
      std::swap(fp, slots_[i * kSlots + s]);
      i = alt(i, fp);
      if (put(i, fp)) {
        ++size_;
        return;
      }
    }
    // Kick chain exhausted: park the last victim so no key is lost.
    evicted_.push_back({i, fp});
    ++size_;
  }

  bool contains(std::uint64_t key) const {
    const auto [i1, fp] = locate(key);
    if (has(i1, fp) || has(alt(i1, fp), fp)) return true;
    for (const auto& e : evicted_) {
      if (e.fingerprint == fp && (e.bucket == i1 || e.bucket == alt(i1, fp))) return true;
    }
    return false;
  }

  bool erase(std::uint64_t key) {
    const auto [i1, fp] = locate(key);
    for (auto b : {i1, alt(i1, fp)}) {
      for (std::size_t s = 0; s < kSlots; ++s) {
        if (slots_[b * kSlots + s] == fp) {
          slots_[b * kSlots + s] = 0;
          --size_;
          return true;
        }
      }
    }
    for (auto it = evicted_.begin(); it != evicted_.end(); ++it) {
      if (it->fingerprint == fp && (it->bucket == i1 || it->bucket == alt(i1, fp))) {
        evicted_.erase(it);
        --size_;
        return true;
      }
    }
    return false;
  }

  std::size_t size() const noexcept { return size_; }
  unsigned fingerprint_bits() const noexcept { return bits_; }
  std::size_t bucket_count() const noexcept { return buckets_; }
  std::size_t memory_bytes() const noexcept { return slots_.size() * sizeof(std::uint16_t); }
  friend bool operator==(const CuckooFilter&, const CuckooFilter&) = default;

  void write(ByteWriter& w) const {
    w.u32(bits_);
    w.u64(salt_);
    w.u64(buckets_);
    w.u64(size_);
    for (auto s : slots_) {
      w.u8(static_cast<std::uint8_t>(s & 0xff));
      w.u8(static_cast<std::uint8_t>(s >> 8));
    }
    w.u64(evicted_.size());
    for (const auto& e : evicted_) {
      w.u64(e.bucket);
      w.u32(e.fingerprint);
    }
  }

  static CuckooFilter read(ByteReader& r) {
    CuckooFilter f;
    f.bits_ = r.u32();
    if (f.bits_ < 2 || f.bits_ > 16) throw FormatError("bad cuckoo filter fingerprint width");
    f.salt_ = r.u64();
    f.buckets_ = r.count(2 * kSlots);
    if (f.buckets_ == 0 || !std::has_single_bit(f.buckets_)) throw FormatError("bad cuckoo filter bucket count");
    f.size_ = r.u64();
    f.slots_.resize(f.buckets_ * kSlots);
    for (auto& s : f.slots_) {
      const auto lo = r.u8();
      s = static_cast<std::uint16_t>(lo | (std::uint16_t{r.u8()} << 8));
    }
    const auto n = r.count(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      Evicted e;
      e.bucket = r.u64();
      e.fingerprint = static_cast<std::uint16_t>(r.u32());
      f.evicted_.push_back(e);
    }
    return f;
  }

 private:
  struct Evicted {
    std::size_t bucket;
    std::uint16_t fingerprint;
    friend bool operator==(const Evicted&, const Evicted&) = default;
  };

  std::pair<std::size_t, std::uint16_t> locate(std::uint64_t key) const {
    const auto h = mix64(key, salt_);
    const auto fmask = (std::uint64_t{1} << bits_) - 1;
    auto fp = static_cast<std::uint16_t>((h >> 32) & fmask);
    if (fp == 0) fp = 1;  // 0 marks an empty slot
    return {static_cast<std::size_t>(h) & (buckets_ - 1), fp};
  }
  std::size_t alt(std::size_t i, std::uint16_t fp) const {
    return (i ^ static_cast<std::size_t>(mix64(fp))) & (buckets_ - 1);
  }
  bool put(std::size_t b, std::uint16_t fp) {
    for (std::size_t s = 0; s < kSlots; ++s) {
      if (slots_[b * kSlots + s] == 0) {
        slots_[b * kSlots + s] = fp;
        return true;
      }
    }
    return false;
  }
  bool has(std::size_t b, std::uint16_t fp) const {
    for (std::size_t s = 0; s < kSlots; ++s) {
      if (slots_[b * kSlots + s] == fp) return true;
    }
    return false;
  }

  unsigned bits_;
  std::uint64_t salt_;
  std::size_t buckets_ = 1;
  std::size_t size_ = 0;
  std::vector<std::uint16_t> slots_;
  std::vector<Evicted> evicted_;  // victims of a failed kick chain
};

}  // namespace color
