#include "kernels.hpp"

#include <algorithm>
#include <cstring>

namespace lft::kernels {

namespace {

constexpr Index kTileRows = 4;
constexpr Index kDepthBlock = 256;

// Four independent lanes; element-wise ops keep each lane's additions in order.
using Lanes = double __attribute__((vector_size(32)));
constexpr Index kLanes = 4;

Lanes load(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

void store(double* p, Lanes v) { std::memcpy(p, &v, sizeof v); }

// kRows × (kVecs·4) outputs held in registers over products p0..p1−1. The
// first depth block starts from zero; later blocks resume from the stored
// partial sum, which is the same sequence of additions.
template <Index kRows, Index kVecs>
void gemm_tile(const double* a, const double* b, double* c, Index k, Index n, Index i, Index j, Index p0, Index p1) {
  Lanes acc[kRows][kVecs];
  for (Index r = 0; r < kRows; ++r) {
    for (Index v = 0; v < kVecs; ++v) acc[r][v] = p0 == 0 ? Lanes{} : load(c + (i + r) * n + j + v * kLanes);
  }
  for (Index p = p0; p < p1; ++p) {
    const double* bp = b + p * n + j;
    Lanes bv[kVecs];
    for (Index v = 0; v < kVecs; ++v) bv[v] = load(bp + v * kLanes);
    for (Index r = 0; r < kRows; ++r) {
      const double av = a[(i + r) * k + p];
      for (Index v = 0; v < kVecs; ++v) acc[r][v] += av * bv[v];
    }
  }
  for (Index r = 0; r < kRows; ++r) {
    for (Index v = 0; v < kVecs; ++v) store(c + (i + r) * n + j + v * kLanes, acc[r][v]);
  }
}

template <Index kRows>
void gemm_column_tail(const double* a, const double* b, double* c, Index k, Index n, Index i, Index j, Index p0, Index p1) {
  double acc[kRows];
  for (Index r = 0; r < kRows; ++r) acc[r] = p0 == 0 ? 0.0 : c[(i + r) * n + j];
  for (Index p = p0; p < p1; ++p) {
    const double bv = b[p * n + j];
    for (Index r = 0; r < kRows; ++r) acc[r] += a[(i + r) * k + p] * bv;
  }
  for (Index r = 0; r < kRows; ++r) c[(i + r) * n + j] = acc[r];
}

template <Index kRows>
void gemm_row_block(const double* a, const double* b, double* c, Index k, Index n, Index i, Index p0, Index p1) {
  Index j = 0;
  for (; j + 3 * kLanes <= n; j += 3 * kLanes) gemm_tile<kRows, 3>(a, b, c, k, n, i, j, p0, p1);
  for (; j + kLanes <= n; j += kLanes) gemm_tile<kRows, 1>(a, b, c, k, n, i, j, p0, p1);
  for (; j < n; ++j) gemm_column_tail<kRows>(a, b, c, k, n, i, j, p0, p1);
}

}  // namespace

void gemm(const double* a, const double* b, double* c, Index m, Index k, Index n) {
  if (k == 0) {
    std::fill(c, c + m * n, 0.0);
    return;
  }
  // Tiling only changes which outputs are in flight together; every output
  // still takes its k products in increasing p.
  for (Index p0 = 0; p0 < k; p0 += kDepthBlock) {
    const Index p1 = std::min(k, p0 + kDepthBlock);
    Index i = 0;
    for (; i + kTileRows <= m; i += kTileRows) gemm_row_block<kTileRows>(a, b, c, k, n, i, p0, p1);
    for (; i < m; ++i) gemm_row_block<1>(a, b, c, k, n, i, p0, p1);
  }
}

void transpose(const double* in, double* out, Index rows, Index cols) {
  constexpr Index kTile = 32;
  for (Index r0 = 0; r0 < rows; r0 += kTile) {
    const Index r1 = std::min(rows, r0 + kTile);
    for (Index c0 = 0; c0 < cols; c0 += kTile) {
      const Index c1 = std::min(cols, c0 + kTile);
      for (Index r = r0; r < r1; ++r) {
        for (Index cc = c0; cc < c1; ++cc) out[cc * rows + r] = in[r * cols + cc];
      }
    }
  }
}

void im2col(const double* x, const ConvGeometry& g, double* col) {
  const Index positions = g.positions();
  for (Index ci = 0; ci < g.in_channels; ++ci) {
    const double* plane = x + ci * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx) {
        double* row = col + ((ci * g.kernel + ky) * g.kernel + kx) * positions;
        for (Index oy = 0; oy < g.out_height; ++oy) {
          const Index iy = oy * g.stride + ky - g.pad;
          double* out = row + oy * g.out_width;
          if (iy < 0 || iy >= g.height) {
            std::fill(out, out + g.out_width, 0.0);
            continue;
          }
          const double* src = plane + iy * g.width;
          for (Index ox = 0; ox < g.out_width; ++ox) {
            const Index ix = ox * g.stride + kx - g.pad;
            out[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* x) {
  const Index positions = g.positions();
  for (Index ci = 0; ci < g.in_channels; ++ci) {
    double* plane = x + ci * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx) {
        const double* row = col + ((ci * g.kernel + ky) * g.kernel + kx) * positions;
        for (Index oy = 0; oy < g.out_height; ++oy) {
          const Index iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.height) continue;
          double* dst = plane + iy * g.width;
          const double* in = row + oy * g.out_width;
          for (Index ox = 0; ox < g.out_width; ++ox) {
            const Index ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.width) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace lft::kernels
