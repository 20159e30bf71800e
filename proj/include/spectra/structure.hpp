#pragma once

// Finite fragments of (omega, <, f): an interval of positions plus the
// function values rebased to it. The order forces position k -> position k
// as the only order bijection, so isomorphism is value-vector equality.

#include <cstdint>
#include <vector>

namespace spectra {

struct Interval {
  uint64_t lo = 0;
  uint64_t hi = 0;  // inclusive

  uint64_t size() const { return hi - lo + 1; }
  bool contains(uint64_t x) const { return lo <= x && x <= hi; }
  bool operator==(const Interval&) const = default;
};

struct FiniteStructure {
  std::vector<uint64_t> fvals;  // fvals[k] = image of the k-th element

  FiniteStructure() = default;
  explicit FiniteStructure(std::vector<uint64_t> v) : fvals(std::move(v)) {}

  uint64_t size() const { return fvals.size(); }

  // All values land inside the structure itself.
  bool is_function_closed() const {
    for (uint64_t v : fvals)
      if (v >= fvals.size()) return false;
    return true;
  }

  bool operator==(const FiniteStructure&) const = default;
};

inline bool structures_isomorphic(const FiniteStructure& a, const FiniteStructure& b) {
  return a.fvals == b.fvals;
}

}  // namespace spectra
