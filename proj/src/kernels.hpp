#pragma once

// Scalar kernels behind the tensor ops. Every reduction runs in a fixed,
// documented order so results are reproducible bit-for-bit and can be
// compared against plain loops.

#include "lfsod/tensor.hpp"

namespace lft::kernels {

/// c[m×n] = a[m×k] · b[k×n]. Each c(i,j) starts at 0.0 and adds
/// a(i,p)·b(p,j) for p = 0, 1, …, k−1 in that order.
void gemm(const double* a, const double* b, double* c, Index m, Index k, Index n);

/// out[cols×rows] = transpose of in[rows×cols].
void transpose(const double* in, double* out, Index rows, Index cols);

struct ConvGeometry {
  Index in_channels, height, width;
  Index kernel, stride, pad;
  Index out_height, out_width;

  Index patch_size() const { return in_channels * kernel * kernel; }
  Index positions() const { return out_height * out_width; }
};

/// Column buffer [(ci·k + ky)·k + kx] × [oy·ow + ox]; padded taps are 0.
void im2col(const double* x, const ConvGeometry& g, double* col);

/// Adds a column buffer back onto an image gradient (adjoint of im2col).
void col2im_add(const double* col, const ConvGeometry& g, double* x);

}  // namespace lft::kernels
