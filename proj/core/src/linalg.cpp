#include "hdrf/linalg.hpp"

#include <Eigen/Core>
#include <atomic>
#include <vector>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

std::atomic<Precision> g_precision{Precision::kFloat64};

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar, typename MapA, typename MapB, typename MapC>
void product(bool trans_a, bool trans_b, Scalar alpha, const MapA& a, const MapB& b,
             MapC& c) {
  if (!trans_a && !trans_b) {
    c.noalias() += alpha * a * b;
  } else if (trans_a && !trans_b) {
    c.noalias() += alpha * a.transpose() * b;
  } else if (!trans_a && trans_b) {
    c.noalias() += alpha * a * b.transpose();
  } else {
    c.noalias() += alpha * a.transpose() * b.transpose();
  }
}

}  // namespace

void set_compute_precision(Precision precision) { g_precision = precision; }
Precision compute_precision() { return g_precision; }

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, std::span<const double> a, std::span<const double> b,
          double beta, std::span<double> c) {
  if (a.size() != m * k || b.size() != k * n || c.size() != m * n) {
    throw ContractViolation("gemm: operand sizes do not match dimensions");
  }
  const auto a_rows = static_cast<Eigen::Index>(trans_a ? k : m);
  const auto a_cols = static_cast<Eigen::Index>(trans_a ? m : k);
  const auto b_rows = static_cast<Eigen::Index>(trans_b ? n : k);
  const auto b_cols = static_cast<Eigen::Index>(trans_b ? k : n);
  const auto rows = static_cast<Eigen::Index>(m);
  const auto cols = static_cast<Eigen::Index>(n);

  if (g_precision.load() == Precision::kFloat64) {
    Eigen::Map<const RowMat<double>> ma(a.data(), a_rows, a_cols);
    Eigen::Map<const RowMat<double>> mb(b.data(), b_rows, b_cols);
    Eigen::Map<RowMat<double>> mc(c.data(), rows, cols);
    if (beta == 0.0) {
      mc.setZero();
    } else if (beta != 1.0) {
      mc *= beta;
    }
    product<double>(trans_a, trans_b, alpha, ma, mb, mc);
    return;
  }

  Eigen::Map<const RowMat<double>> ma(a.data(), a_rows, a_cols);
  Eigen::Map<const RowMat<double>> mb(b.data(), b_rows, b_cols);
  const RowMat<float> fa = ma.cast<float>();
  const RowMat<float> fb = mb.cast<float>();
  RowMat<float> fc = RowMat<float>::Zero(rows, cols);
  product<float>(trans_a, trans_b, static_cast<float>(alpha), fa, fb, fc);
  Eigen::Map<RowMat<double>> mc(c.data(), rows, cols);
  if (beta == 0.0) {
    mc = fc.cast<double>();
  } else {
    mc = beta * mc + fc.cast<double>();
  }
}

}  // namespace hdrf
