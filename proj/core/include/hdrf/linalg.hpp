#pragma once

#include <cstddef>
#include <span>

namespace hdrf {

enum class Precision { kFloat64, kFloat32 };

// Arithmetic precision of the dense matrix products behind convolution and
// attention. Storage stays float64 either way. Process-wide; set it before
// building a graph, not while one is being evaluated.
void set_compute_precision(Precision precision);
Precision compute_precision();

// C (m x n) = alpha * op(A) * op(B) + beta * C, all row-major.
// op(A) is m x k, op(B) is k x n.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, std::span<const double> a, std::span<const double> b,
          double beta, std::span<double> c);

}  // namespace hdrf
