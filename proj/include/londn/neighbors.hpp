// Image distances, k-nearest-neighbor selection and neighbor-matching accuracy.
#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "londn/image.hpp"
#include "londn/parallel.hpp"

namespace londn {

enum class Metric { L1, L2, NCC };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::L1: return "l1";
    case Metric::L2: return "l2";
    case Metric::NCC: return "ncc";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "l1") return Metric::L1;
  if (t == "l2") return Metric::L2;
  if (t == "ncc") return Metric::NCC;
  throw std::invalid_argument("unknown metric '" + s + "' (expected l1, l2 or ncc)");
}

/// L1 = sum |a_i - b_i|, L2 = ||a - b||_2, NCC = 1 - |a^H b| / (||a|| ||b||).
inline double distance(const ComplexImage& a, const ComplexImage& b, Metric metric) {
  a.require_same(b);
  switch (metric) {
    case Metric::L1: {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
      return s;
    }
    case Metric::L2: {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[k]);
      return std::sqrt(s);
    }
    case Metric::NCC: {
      const double na = norm_sq(a), nb = norm_sq(b);
      if (na == 0.0 || nb == 0.0) throw std::invalid_argument("NCC distance undefined for a zero image");
      const double ncc = std::abs(inner(a, b)) / std::sqrt(na * nb);
      return std::clamp(1.0 - ncc, 0.0, 1.0);
    }
  }
  throw std::invalid_argument("unknown metric");
}

struct NeighborSet {
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t k() const { return indices.size(); }
};

/// The k gallery entries closest to `query`, nearest first; ties go to the
/// lower gallery index.
inline NeighborSet knn(const ComplexImage& query, const std::vector<ComplexImage>& gallery,
                       std::size_t k, Metric metric, std::size_t jobs = 1) {
  if (k < 1 || k > gallery.size())
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(gallery.size()) + "]");
  std::vector<double> d(gallery.size());
  parallel_for(gallery.size(), jobs, [&](std::size_t i) { d[i] = distance(query, gallery[i], metric); });
  std::vector<std::size_t> idx(gallery.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
  NeighborSet out;
  for (std::size_t i = 0; i < k; ++i) {
    out.indices.push_back(idx[i]);
    out.distances.push_back(d[idx[i]]);
  }
  return out;
}

/// Neighbor-matching accuracy in percent: 100 * mean_r |found_r & oracle_r| / k.
inline double nma(const std::vector<NeighborSet>& found, const std::vector<NeighborSet>& oracle,
                  std::size_t k) {
  if (found.size() != oracle.size()) throw std::invalid_argument("nma: list lengths differ");
  if (found.empty()) throw std::invalid_argument("nma: empty test set");
  double acc = 0.0;
  for (std::size_t r = 0; r < found.size(); ++r) {
    if (found[r].k() != k || oracle[r].k() != k) throw std::invalid_argument("nma: neighbor count differs from k");
    std::vector<std::size_t> a = found[r].indices, b = oracle[r].indices;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    acc += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return 100.0 * acc / static_cast<double>(found.size());
}

}  // namespace londn
