#pragma once

#include <cstddef>
#include <vector>

#include "hdrf/tensor.hpp"

// Element-wise and structural differentiable operators. Binary element-wise
// ops require identical shapes; there is no implicit broadcasting.
namespace hdrf {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// scale * a + shift
Tensor affine(const Tensor& a, double scale, double shift = 0.0);

Tensor relu(const Tensor& a);
// 1 / (1 + exp(-steepness * a))
Tensor sigmoid(const Tensor& a, double steepness = 1.0);
Tensor abs(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Softmax over the last axis.
Tensor softmax(const Tensor& a);

// Concatenation along axis 0 (channels for C x H x W maps).
Tensor concat(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& a, std::size_t begin, std::size_t count);

// mean(|a - b|)
Tensor l1_distance(const Tensor& a, const Tensor& b);

}  // namespace hdrf
