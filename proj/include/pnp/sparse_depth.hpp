// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "pnp/tensor.hpp"

namespace pnp {

/// Sparse depth observation: values == mask * dense depth, mask in {0, 1}.
struct SparseDepth {
  Tensor values;  // 1 x 1 x H x W, metres, zero where invalid
  Tensor mask;    // 1 x 1 x H x W

  std::size_t count() const;
  static SparseDepth from_mask(const Tensor& depth, Tensor mask);
};

}  // namespace pnp
