#ifndef EGOSOCIAL_TESTS_ORACLES_HPP
#define EGOSOCIAL_TESTS_ORACLES_HPP

// Reference computations kept independent of the library: plain loops and
// std::vector, no Eigen solvers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

// Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Mat a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Least-squares quadratic d = a h^2 + b h + c from the normal equations.
inline std::array<double, 3> quadratic_fit(const std::vector<std::pair<double, double>>& pts) {
  Mat ata = zeros(3, 3);
  std::vector<double> atb(3, 0.0);
  for (auto [h, d] : pts) {
    const double row[3] = {h * h, h, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
      atb[i] += row[i] * d;
    }
  }
  const auto x = solve(ata, atb);
  return {x[0], x[1], x[2]};
}

// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues descending;
// vectors[k] is the k-th eigenvector.
struct Eigen {
  std::vector<double> values;
  Mat vectors;
};

inline Eigen jacobi(Mat a, int sweeps = 100) {
  const std::size_t n = a.size();
  Mat v = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
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
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigen out;
  for (auto k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(col);
  }
  return out;
}

// Sample covariance (n - 1) of row vectors.
inline Mat covariance(const Mat& rows) {
  const std::size_t n = rows.size(), d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) mean[k] += r[k] / static_cast<double>(n);
  Mat c = zeros(d, d);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
  return c;
}

inline double median_by_sort(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// delta(R, T) by explicit double loops over face examples.
inline double delta(const Mat& r, const Mat& t) {
  double mu_r = 1.0;
  if (r.size() > 1) {
    std::vector<double> within;
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r.size(); ++j)
        if (i < j) within.push_back(dot(r[i], r[j]));
    mu_r = median_by_sort(within);
  }
  std::vector<double> cross;
  for (const auto& a : r)
    for (const auto& b : t) cross.push_back(dot(a, b));
  return std::abs(mu_r - median_by_sort(cross));
}

// Naive agglomerative clustering: cluster distances recomputed from the
// original pairwise matrix at every step. Clusters are named by their
// smallest member; ties go to the smallest (a, b) pair.
enum class Link { Single, Average, Complete };

inline std::vector<std::vector<std::size_t>> agglomerate(const Mat& d, double cutoff, Link link) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < d.size(); ++i) clusters.push_back({i});
  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (auto i : a)
      for (auto j : b) {
        lo = std::min(lo, d[i][j]);
        hi = std::max(hi, d[i][j]);
        sum += d[i][j];
      }
    if (link == Link::Single) return lo;
    if (link == Link::Complete) return hi;
    return sum / static_cast<double>(a.size() * b.size());
  };
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double v = linkage(clusters[a], clusters[b]);
        if (v < best) {
          best = v;
          ba = a;
          bb = b;
        }
      }
    if (best > cutoff) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    std::sort(clusters.begin(), clusters.end());
  }
  return clusters;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion count(const std::vector<int>& predicted, const std::vector<int>& truth) {
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] && truth[i]) ++c.tp;
    else if (predicted[i]) ++c.fp;
    else if (truth[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

}  // namespace oracle

#endif
