#pragma once

#include <vector>

#include "fcp/prototypes.hpp"

namespace fcp {

struct LossConfig {
    Scalar lambda_ortho = 0.05;
    Scalar lambda_guide = 0.5;
    Scalar eps = 1e-7;  // clamp for log arguments
    // The diversity penalty runs over steps 1..T-1 by default; setting this
    // folds step T in as well (and averages over T instead of T-1).
    bool ortho_includes_final_step = false;

    void validate() const;
};

/// Mean binary cross-entropy; pred is clamped to [eps, 1-eps] before logs.
Tensor bce_loss(const Tensor& pred, const Tensor& gt, Scalar eps = 1e-7);

/// 1 - 2*sum(g*p) / (sum(g^2) + sum(p^2)); both-empty inputs give 0.
Tensor dice_loss(const Tensor& pred, const Tensor& gt);

/// Mean over the provided attention masks of BCE + dice against the query
/// ground truth.
Tensor guide_loss(const std::vector<Tensor>& attention_masks, const Tensor& m_q,
                  Scalar eps = 1e-7);

/// BCE + dice between prediction and ground truth.
Tensor prompt_loss(const Tensor& m_pred, const Tensor& m_q, Scalar eps = 1e-7);

/// Diversity penalty: per step and side, the sum of cosine similarities over
/// ordered token pairs i != j, averaged over the included steps. Attention
/// maps are nonnegative so every term is >= 0. An empty query_records list
/// restricts the penalty to the support side (pixel-matching variant).
Tensor ortho_loss(const std::vector<AttentionRecord>& support_records,
                  const std::vector<AttentionRecord>& query_records, int steps,
                  bool include_final_step = false);

Tensor total_loss(const Tensor& prompt, const Tensor& guide, const Tensor& ortho,
                  const LossConfig& cfg);

}  // namespace fcp
