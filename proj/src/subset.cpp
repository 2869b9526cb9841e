#include "robsub/subset.hpp"

#include "robsub/errors.hpp"

namespace robsub {

Subset Subset::full(std::size_t ground_size) {
  Subset s(ground_size);
  for (Element e = 0; e < ground_size; ++e) s.insert(e);
  return s;
}

Subset Subset::of(std::size_t ground_size, std::initializer_list<Element> elements) {
  Subset s(ground_size);
  for (auto e : elements) s.insert(e);
  return s;
}

Subset Subset::of(std::size_t ground_size, const std::vector<Element>& elements) {
  Subset s(ground_size);
  for (auto e : elements) s.insert(e);
  return s;
}

Subset Subset::from_mask(std::size_t ground_size, std::uint64_t mask) {
  if (ground_size > 64) throw DomainError("from_mask: ground set wider than 64");
  Subset s(ground_size);
  if (ground_size > 0) {
    const std::uint64_t keep = ground_size == 64 ? ~0ULL : ((1ULL << ground_size) - 1);
    s.words_[0] = mask & keep;
  }
  return s;
}

void Subset::insert(Element e) {
  if (e >= ground_size_) throw DomainError("subset element outside ground set");
  words_[e >> 6] |= (1ULL << (e & 63));
}

void Subset::erase(Element e) {
  if (e >= ground_size_) throw DomainError("subset element outside ground set");
  words_[e >> 6] &= ~(1ULL << (e & 63));
}

bool Subset::is_subset_of(const Subset& other) const {
  if (ground_size_ != other.ground_size_) return false;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & ~other.words_[w]) != 0) return false;
  }
  return true;
}

std::vector<Element> Subset::elements() const {
  std::vector<Element> out;
  out.reserve(size());
  for_each([&](Element e) { out.push_back(e); });
  return out;
}

std::vector<Element> Subset::complement_elements() const {
  std::vector<Element> out;
  out.reserve(ground_size_ - size());
  for (Element e = 0; e < ground_size_; ++e) {
    if (!contains(e)) out.push_back(e);
  }
  return out;
}

std::size_t Subset::hash() const {
  // FNV-1a over the words.
  std::uint64_t h = 1469598103934665603ULL ^ ground_size_;
  for (auto w : words_) {
    h ^= w;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace robsub
