#pragma once

// Dense-layer batch kernels. Each kernel has a serial reference and an OpenMP
// version. The OpenMP versions split work only across independent outputs and
// keep every reduction in the serial index order, so both produce bit-identical
// results for any thread count.

#include <span>
#include <vector>

#include "sslcal/matrix.hpp"

namespace sslcal::kernels {

/// Work (multiply-adds) below which the OpenMP kernels stay on one thread.
inline constexpr std::size_t kParallelMinWork = 1 << 15;

namespace serial {

/// out = in * W^T + bias. `in` is n x fan_in, `weight` is fan_out x fan_in.
void affine_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);

/// dW = dout^T * in, db = column sums of dout, din = dout * W (skipped when din is null).
void affine_backward(const Matrix& in, const Matrix& weight, const Matrix& dout, Matrix& dweight,
                     std::vector<double>& dbias, Matrix* din);

}  // namespace serial

namespace omp {

void affine_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);

void affine_backward(const Matrix& in, const Matrix& weight, const Matrix& dout, Matrix& dweight,
                     std::vector<double>& dbias, Matrix* din);

}  // namespace omp

}  // namespace sslcal::kernels
