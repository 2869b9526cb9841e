#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace robsub {

using Element = std::size_t;

// Fixed-width bitset over the indices 0..ground_size-1 of a ground set.
class Subset {
 public:
  Subset() = default;
  explicit Subset(std::size_t ground_size)
      : ground_size_(ground_size), words_((ground_size + 63) / 64, 0) {}

  static Subset full(std::size_t ground_size);
  static Subset of(std::size_t ground_size, std::initializer_list<Element> elements);
  static Subset of(std::size_t ground_size, const std::vector<Element>& elements);
  // Low bits of `mask` become the members; ground_size must be <= 64.
  static Subset from_mask(std::size_t ground_size, std::uint64_t mask);

  std::size_t ground_size() const { return ground_size_; }

  bool contains(Element e) const {
    return e < ground_size_ && ((words_[e >> 6] >> (e & 63)) & 1U) != 0;
  }
  void insert(Element e);
  void erase(Element e);
  Subset with(Element e) const {
    Subset out = *this;
    out.insert(e);
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool empty() const { return size() == 0; }

  bool is_subset_of(const Subset& other) const;
  std::vector<Element> elements() const;
  std::vector<Element> complement_elements() const;

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        const int b = std::countr_zero(bits);
        fn(static_cast<Element>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  std::size_t hash() const;

  friend bool operator==(const Subset& a, const Subset& b) {
    return a.ground_size_ == b.ground_size_ && a.words_ == b.words_;
  }

 private:
  std::size_t ground_size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct SubsetHash {
  std::size_t operator()(const Subset& s) const { return s.hash(); }
};

}  // namespace robsub
