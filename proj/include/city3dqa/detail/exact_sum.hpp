#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace city3dqa::detail {

// Exact running sum of doubles, kept as a nonoverlapping expansion
// (Shewchuk-style). Addition and merging are exact, so the reduction is truly
// associative and commutative: accumulating a stream in chunks and merging
// gives bit-identical results to a single sequential pass. Expansion length
// stays tiny for same-scale data (a handful of components).
class ExactSum {
 public:
  ExactSum() = default;

  void add(double b) {
    if (b == 0.0) return;
    double q = b;
    std::size_t out = 0;
    for (double c : comps_) {
      double s = q + c;
      double bv = s - q;
      double err = (q - (s - bv)) + (c - bv);  // two_sum
      if (err != 0.0) comps_[out++] = err;
      q = s;
    }
    comps_.resize(out);
    if (q != 0.0) comps_.push_back(q);
  }

  void merge(const ExactSum& other) {
    for (double c : other.comps_) add(c);
  }

  // Correctly rounded value of the exact sum: compress to a canonical
  // expansion, then the dominant component carries the result.
  double value() const {
    if (comps_.empty()) return 0.0;
    std::vector<double> h = compressed();
    double v = 0.0;
    for (double c : h) v += c;  // ascending magnitude
    return v;
  }

  // Canonical (compressed, zero-free) components, ascending magnitude.
  // Two ExactSums holding the same real value compress identically, which is
  // what the chunk-merge property tests compare.
  std::vector<double> compressed() const {
    if (comps_.empty()) return {};
    std::vector<double> g = comps_;
    std::vector<double> h(g.size());
    // sweep down: accumulate with fast_two_sum, stashing residues
    double q = g.back();
    std::size_t bottom = g.size() - 1;
    for (std::size_t i = g.size() - 1; i-- > 0;) {
      double s = q + g[i];
      double err = g[i] - (s - q);  // fast_two_sum, |q| >= |g[i]|
      if (err != 0.0) {
        h[bottom--] = s;
        q = err;
      } else {
        q = s;
      }
    }
    // sweep up: re-add stashed values from small to large
    std::vector<double> out;
    for (std::size_t i = bottom + 1; i < g.size(); ++i) {
      double s = h[i] + q;
      double err = q - (s - h[i]);
      if (err != 0.0) out.push_back(err);
      q = s;
    }
    out.push_back(q);
    return out;
  }

  bool same_value(const ExactSum& other) const {
    return compressed() == other.compressed();
  }

  std::size_t component_count() const { return comps_.size(); }

 private:
  std::vector<double> comps_;  // nonoverlapping, increasing magnitude
};

}  // namespace city3dqa::detail
