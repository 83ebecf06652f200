#pragma once

#include "fcp/featuremap.hpp"
#include "fcp/mask.hpp"
#include "fcp/ops.hpp"

namespace fcp {

/// Conventional pseudo-mask: each query pixel takes the maximum cosine
/// similarity against the support foreground pixels, rescaled from [-1, 1]
/// to [0, 1] via (x + 1) / 2. Purely numeric; nothing upstream is learnable.
Mask conventional_pseudo_mask(const FeatureMap& f_query, const FeatureMap& f_support,
                              const Mask& m_support);

/// Attention-based mask on the graph: per-pixel max over the N token maps
/// (rows of weights), then max-normalized so the peak is 1. Input N x (H*W),
/// output 1 x (H*W).
Tensor attention_mask(const Tensor& weights);

/// Max-normalize a numeric soft mask; all-zero input stays all-zero.
Mask normalize_mask(const Mask& m);

}  // namespace fcp
