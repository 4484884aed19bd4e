#include "loadshape/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace loadshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kComplexityFloor = 1e-12;

void check_dtw_inputs(std::span<const double> p, std::span<const double> q,
                      std::optional<std::size_t> band) {
  if (p.empty() || q.empty()) {
    throw std::invalid_argument("dtw: empty series");
  }
  if (band) {
    const std::size_t diff =
        p.size() > q.size() ? p.size() - q.size() : q.size() - p.size();
    if (*band < diff) {
      throw std::invalid_argument("dtw: band narrower than length difference");
    }
  }
}

inline double sq(double x) { return x * x; }

// Sum of squared consecutive differences; empty sum (length < 2) is 0.
double complexity_sq(std::span<const double> a) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    s += sq(a[i] - a[i + 1]);
  }
  return s;
}

}  // namespace

double euclidean(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("euclidean: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += sq(p[i] - q[i]);
  }
  return std::sqrt(s);
}

double dtw(std::span<const double> p, std::span<const double> q,
           std::optional<std::size_t> band) {
  check_dtw_inputs(p, q, band);
  const std::size_t n = p.size();
  const std::size_t m = q.size();
  const std::size_t w = band.value_or(std::max(n, m));

  // Two rolling rows over the column index, padded with one leading cell.
  std::vector<double> prev(m + 1, kInf);
  std::vector<double> cur(m + 1, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    const std::size_t jlo = i > w ? i - w : 0;
    const std::size_t jhi = std::min(m - 1, i + w);
    for (std::size_t j = jlo; j <= jhi; ++j) {
      const double cost = sq(p[i] - q[j]);
      if (i == 0 && j == 0) {
        cur[1] = cost;
        continue;
      }
      const double best =
          std::min({prev[j], prev[j + 1], cur[j]});  // diag, up, left
      cur[j + 1] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double complexity_estimate(std::span<const double> a) {
  if (a.size() < 2) {
    throw std::invalid_argument("complexity_estimate: need length >= 2");
  }
  return std::sqrt(complexity_sq(a));
}

double cidtw(std::span<const double> p, std::span<const double> q,
             std::optional<std::size_t> band) {
  const double base = dtw(p, q, band);
  const double ce_p = std::max(std::sqrt(complexity_sq(p)), kComplexityFloor);
  const double ce_q = std::max(std::sqrt(complexity_sq(q)), kComplexityFloor);
  const double factor = std::max(ce_p, ce_q) / std::min(ce_p, ce_q);
  return base * factor;
}

WarpPath dtw_path(std::span<const double> p, std::span<const double> q,
                  std::optional<std::size_t> band) {
  check_dtw_inputs(p, q, band);
  const std::size_t n = p.size();
  const std::size_t m = q.size();
  const std::size_t w = band.value_or(std::max(n, m));

  std::vector<double> d(n * m, kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t jlo = i > w ? i - w : 0;
    const std::size_t jhi = std::min(m - 1, i + w);
    for (std::size_t j = jlo; j <= jhi; ++j) {
      const double cost = sq(p[i] - q[j]);
      if (i == 0 && j == 0) {
        at(i, j) = cost;
      } else {
        const double diag = (i > 0 && j > 0) ? at(i - 1, j - 1) : kInf;
        const double up = i > 0 ? at(i - 1, j) : kInf;
        const double left = j > 0 ? at(i, j - 1) : kInf;
        at(i, j) = cost + std::min({diag, up, left});
      }
    }
  }

  WarpPath path;
  path.cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  path.steps.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double diag = (i > 0 && j > 0) ? at(i - 1, j - 1) : kInf;
    const double up = i > 0 ? at(i - 1, j) : kInf;
    const double left = j > 0 ? at(i, j - 1) : kInf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    path.steps.emplace_back(i, j);
  }
  std::reverse(path.steps.begin(), path.steps.end());
  return path;
}

}  // namespace loadshape
