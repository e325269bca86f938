#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library; everything is written from the defining formulas
// with plain loops so it can be checked by eye.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues
/// ascending and the matching eigenvectors as columns.
inline std::pair<std::vector<double>, Mat> jacobi_eigen(Mat a) {
  const std::size_t n = a.size();
  Mat v = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });
  std::vector<double> values(n);
  Mat vectors = zeros(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) vectors[i][j] = v[i][order[j]];
  }
  return {values, vectors};
}

/// Direct evaluation of the row activation on a row whose entry `skip` is
/// excluded (pass skip >= x.size() to exclude nothing).
inline std::vector<double> activation(const std::vector<double>& x, double P, std::size_t skip = SIZE_MAX) {
  const std::size_t n = x.size();
  double xmin = std::numeric_limits<double>::infinity();
  double pos_sum = 0;
  bool any_pos = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip) continue;
    xmin = std::min(xmin, x[i]);
    if (x[i] > 0) {
      pos_sum += x[i];
      any_pos = true;
    }
  }
  std::vector<double> out(n, 0.0);
  const double denom = P * (pos_sum - xmin);
  if (!any_pos || std::abs(denom) < 1e-12) {
    // Two passes: largest nonzero entry, else the first zero.
    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == skip || x[i] == 0.0) continue;
      if (best == SIZE_MAX || x[i] > x[best]) best = i;
    }
    for (std::size_t i = 0; i < n && best == SIZE_MAX; ++i) {
      if (i != skip) best = i;
    }
    if (best != SIZE_MAX) out[best] = 1.0;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip || !(x[i] > 0)) continue;
    out[i] = std::max(0.0, (P * x[i] - xmin) / denom);
  }
  return out;
}

struct Pairs {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Enumerates all unordered sample pairs.
inline Pairs pair_enumeration(const std::vector<int>& pred, const std::vector<int>& truth) {
  Pairs p;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = i + 1; j < pred.size(); ++j) {
      const bool same_pred = pred[i] == pred[j];
      const bool same_truth = truth[i] == truth[j];
      if (same_pred && same_truth) ++p.tp;
      else if (same_pred) ++p.fp;
      else if (same_truth) ++p.fn;
      else ++p.tn;
    }
  }
  return p;
}

/// NMI from a contingency table, natural logs, geometric-mean normalisation.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const double n = static_cast<double>(pred.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> a, b;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    joint[{pred[i], truth[i]}] += 1;
    a[pred[i]] += 1;
    b[truth[i]] += 1;
  }
  double ha = 0, hb = 0, mi = 0;
  for (const auto& [_, c] : a) ha -= c / n * std::log(c / n);
  for (const auto& [_, c] : b) hb -= c / n * std::log(c / n);
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (a[key.first] * b[key.second]));
  if (ha <= 0 || hb <= 0) return 0.0;
  return mi / std::sqrt(ha * hb);
}

inline double purity(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < pred.size(); ++i) ++table[pred[i]][truth[i]];
  int total = 0;
  for (const auto& [_, row] : table) {
    int best = 0;
    for (const auto& [__, c] : row) best = std::max(best, c);
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(pred.size());
}

/// Breadth-first component count over edges (S_ij + S_ji)/2 > threshold.
inline int component_count(const Mat& s, double threshold = 1e-12) {
  const std::size_t n = s.size();
  std::vector<bool> seen(n, false);
  int count = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++count;
    std::vector<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const std::size_t u = queue.back();
      queue.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && (s[u][v] + s[v][u]) / 2 > threshold) {
          seen[v] = true;
          queue.push_back(v);
        }
      }
    }
  }
  return count;
}

/// Random nonnegative graph on n nodes with exactly c components. Each
/// component gets a random spanning tree (edge weights in [0.1, 1]) plus
/// random extra edges; the matrix is generally asymmetric.
inline Mat random_component_graph(std::size_t n, std::size_t c, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  // First c entries seed the groups, the rest join a random group.
  std::vector<std::vector<std::size_t>> groups(c);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = i < c ? i : std::uniform_int_distribution<std::size_t>(0, c - 1)(gen);
    groups[g].push_back(perm[i]);
  }
  Mat s = zeros(n, n);
  for (const auto& g : groups) {
    for (std::size_t i = 1; i < g.size(); ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(gen);
      if (coin(gen) < 0.5) s[g[i]][g[j]] = weight(gen);
      else s[g[j]][g[i]] = weight(gen);
    }
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j)
        if (i != j && coin(gen) < 0.15) s[g[i]][g[j]] = weight(gen);
  }
  return s;
}

}  // namespace oracle
