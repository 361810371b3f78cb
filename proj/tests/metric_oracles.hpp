#pragma once

// Brute-force saliency metrics on nested std::vector grids. Written as
// straight loops, one pixel at a time, without Eigen.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline double mean_of(const Grid& g) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : g) {
    for (double v : row) {
      s += v;
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

inline double mae(const Grid& p, const Grid& g) {
  double s = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    for (std::size_t c = 0; c < p[r].size(); ++c) s += std::fabs(p[r][c] - g[r][c]);
  }
  return s / static_cast<double>(p.size() * p[0].size());
}

inline double f_measure_mean(const Grid& p, const Grid& g) {
  double acc = 0.0;
  for (int t = 0; t <= 255; ++t) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t r = 0; r < p.size(); ++r) {
      for (std::size_t c = 0; c < p[r].size(); ++c) {
        const bool on = p[r][c] >= t / 255.0;
        const bool truth = g[r][c] > 0.5;
        tp += on && truth;
        fp += on && !truth;
        fn += !on && truth;
      }
    }
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double den = 0.3 * prec + rec;
    acc += den > 0 ? 1.3 * prec * rec / den : 0.0;
  }
  return acc / 256.0;
}

inline double e_measure_mean(const Grid& p, const Grid& g) {
  const std::size_t rows = p.size(), cols = p[0].size();
  const double n = static_cast<double>(rows * cols);
  const double gm = mean_of(g);
  double acc = 0.0;
  for (int t = 0; t <= 255; ++t) {
    Grid bin(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) bin[r][c] = p[r][c] >= t / 255.0 ? 1.0 : 0.0;
    }
    double score = 0.0;
    if (gm == 0.0 || gm == 1.0) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) score += 1.0 - std::fabs(bin[r][c] - g[r][c]);
      }
    } else {
      const double bm = mean_of(bin);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double a = bin[r][c] - bm, b = g[r][c] - gm;
          const double xi = 2.0 * a * b / (a * a + b * b);
          score += (xi + 1.0) * (xi + 1.0) / 4.0;
        }
      }
    }
    acc += score / n;
  }
  return acc / 256.0;
}

namespace detail {

constexpr double kEps = 2.220446049250313e-16;

inline double object(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  const double m = s / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double sd = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
  return 2.0 * m / (m * m + 1.0 + sd + kEps);
}

// Rows [r0, r1) × cols [c0, c1).
inline double ssim(const Grid& p, const Grid& g, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  if (r1 <= r0 || c1 <= c0) return 0.0;
  const double n = static_cast<double>((r1 - r0) * (c1 - c0));
  double x = 0.0, y = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      x += p[r][c];
      y += g[r][c];
    }
  }
  x /= n;
  y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      sxx += (p[r][c] - x) * (p[r][c] - x);
      syy += (g[r][c] - y) * (g[r][c] - y);
      sxy += (p[r][c] - x) * (g[r][c] - y);
    }
  }
  sxx /= n - 1 + kEps;
  syy /= n - 1 + kEps;
  sxy /= n - 1 + kEps;
  const double alpha = 4 * x * y * sxy;
  const double beta = (x * x + y * y) * (sxx + syy);
  if (alpha != 0) return alpha / (beta + kEps);
  if (beta == 0) return 1.0;
  return 0.0;
}

}  // namespace detail

inline double s_measure(const Grid& p, const Grid& g) {
  const std::size_t rows = p.size(), cols = p[0].size();
  const double y_mean = mean_of(g);
  if (y_mean == 0.0) return std::fmax(0.0, 1.0 - mean_of(p));
  if (y_mean == 1.0) return std::fmin(1.0, mean_of(p));

  std::vector<double> fg, bg;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (g[r][c] > 0.5) {
        fg.push_back(p[r][c]);
      } else {
        bg.push_back(1.0 - p[r][c]);
      }
    }
  }
  const double so = y_mean * detail::object(fg) + (1.0 - y_mean) * detail::object(bg);

  double total = 0.0, wx = 0.0, wy = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      total += g[r][c];
      wx += g[r][c] * (c + 1);
      wy += g[r][c] * (r + 1);
    }
  }
  const std::size_t X = static_cast<std::size_t>(std::round(wx / total));
  const std::size_t Y = static_cast<std::size_t>(std::round(wy / total));
  const double area = static_cast<double>(rows * cols);
  const double w1 = X * Y / area, w2 = (cols - X) * Y / area, w3 = X * (rows - Y) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  const double sr = w1 * detail::ssim(p, g, 0, Y, 0, X) + w2 * detail::ssim(p, g, 0, Y, X, cols) +
                    w3 * detail::ssim(p, g, Y, rows, 0, X) + w4 * detail::ssim(p, g, Y, rows, X, cols);
  double s = 0.5 * so + 0.5 * sr;
  if (s < 0) s = 0;
  if (s > 1) s = 1;
  return s;
}

}  // namespace oracle
