// Independent reference implementations the tests check the library against.
// Everything here is deliberately written from the definitions, not from the
// library code paths it verifies.
#ifndef CASNER_TESTS_ORACLES_HPP
#define CASNER_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "casner/extraction.hpp"
#include "casner/types.hpp"

namespace casner::oracles {

// --- LCS alignment -----------------------------------------------------------
// Memoized top-down LCS length, a different formulation from the library's
// bottom-up table.

inline std::size_t lcs_length_reference(const std::u32string& a,
                                        const std::u32string& b) {
  std::vector<std::vector<int>> memo(a.size() + 1,
                                     std::vector<int>(b.size() + 1, -1));
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> int {
    if (i == 0 || j == 0) return 0;
    int& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i - 1] == b[j - 1]) return m = self(self, i - 1, j - 1) + 1;
    return m = std::max(self(self, i - 1, j), self(self, i, j - 1));
  };
  return static_cast<std::size_t>(rec(rec, a.size(), b.size()));
}

// --- Result fusion -----------------------------------------------------------

// Direct reading of the union/length-first rule: keep a span iff no other
// extracted span dominates it.
inline std::vector<EntitySpan> fuse_reference(
    const std::vector<std::vector<EntitySpan>>& rounds) {
  std::vector<EntitySpan> pool;
  for (const auto& r : rounds) pool.insert(pool.end(), r.begin(), r.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::vector<EntitySpan> kept;
  for (const auto& e : pool) {
    bool dominated = false;
    for (const auto& f : pool)
      if (dominates(f, e)) {
        dominated = true;
        break;
      }
    if (!dominated) kept.push_back(e);
  }
  return kept;
}

// Exhaustive oracle for small pools: the unique largest subset that is
// overlap-free and contains no dominated span.
inline std::vector<EntitySpan> fuse_exhaustive(
    const std::vector<std::vector<EntitySpan>>& rounds) {
  std::vector<EntitySpan> pool;
  for (const auto& r : rounds) pool.insert(pool.end(), r.begin(), r.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const std::size_t n = pool.size();
  std::vector<EntitySpan> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
    std::vector<EntitySpan> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t(1) << i)) subset.push_back(pool[i]);
    bool valid = true;
    for (std::size_t i = 0; i < subset.size() && valid; ++i) {
      for (const auto& f : pool)
        if (dominates(f, subset[i])) {
          valid = false;
          break;
        }
      for (std::size_t j = i + 1; j < subset.size() && valid; ++j)
        if (spans_overlap(subset[i], subset[j])) valid = false;
    }
    if (valid && subset.size() > best.size()) best = subset;
  }
  return best;
}

// --- Distribution metrics ----------------------------------------------------

inline std::vector<double> proportions_of(const std::vector<std::uint64_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  std::vector<double> p;
  for (auto c : counts) p.push_back(static_cast<double>(c) / total);
  return p;
}

// Direct summation of the normalized-entropy definition.
inline double entropy_reference(const std::vector<std::uint64_t>& counts) {
  const auto p = proportions_of(counts);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h += v * std::log2(v);
  return -h / std::log2(static_cast<double>(counts.size()));
}

// Gini as the mean absolute difference: G = sum_ij |x_i - x_j| / (2 n^2 mu).
inline double gini_mad_reference(const std::vector<std::uint64_t>& counts) {
  const std::size_t n = counts.size();
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double mu = total / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      acc += std::fabs(static_cast<double>(counts[i]) -
                       static_cast<double>(counts[j]));
  return acc / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mu);
}

// Population standard deviation over mean, straight from the definition.
inline double cv_reference(const std::vector<std::uint64_t>& counts) {
  const std::size_t n = counts.size();
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double mu = total / static_cast<double>(n);
  double var = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - mu;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(n)) / mu;
}

// Mean cosine over ordered pairs divided by the ordered-pair count; equals
// the unordered-pair mean by symmetry but walks a different loop.
inline double cohesion_reference(const std::vector<std::vector<double>>& vecs) {
  const std::size_t n = vecs.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = 0, na = 0, nb = 0;
      for (std::size_t k = 0; k < vecs[i].size(); ++k) {
        dot += vecs[i][k] * vecs[j][k];
        na += vecs[i][k] * vecs[i][k];
        nb += vecs[j][k] * vecs[j][k];
      }
      acc += dot / (std::sqrt(na) * std::sqrt(nb));
    }
  return acc / static_cast<double>(n * (n - 1));
}

// Stratified quota, straight from the formula s_i = min(floor(S/m), n_i).
inline std::uint64_t stratified_quota_reference(std::uint64_t total_size,
                                                std::uint64_t categories,
                                                std::uint64_t available) {
  return std::min(total_size / categories, available);
}

}  // namespace casner::oracles

#endif  // CASNER_TESTS_ORACLES_HPP
