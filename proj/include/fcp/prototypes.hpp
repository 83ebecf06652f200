#pragma once

#include <vector>

#include "fcp/featuremap.hpp"
#include "fcp/mask.hpp"
#include "fcp/ops.hpp"
#include "fcp/rng.hpp"

namespace fcp {

enum class Side { Support, Query };

/// C x C query/key/value projection weights for one attention step.
struct ProjectionTriple {
    Tensor wq, wk, wv;
};

/// Attention weights captured at one aggregation step; rows are tokens,
/// columns are pixels, each row sums to 1 over the unmasked positions.
struct AttentionRecord {
    int step = 0;  // 1-based
    Side side = Side::Support;
    Tensor weights;  // N x (H*W)
};

/// All learnable state for prototype construction: token banks, per-step
/// projection triples for each side, and the two guiding convolutions
/// (segment-identity family and class-identity family), each mapping the
/// (2C+1)-channel concat features | mask | pooled back to C channels.
struct ProtoParams {
    int tokens = 8;
    int channels = 64;
    int steps = 3;

    Tensor support_tokens;  // N x C
    Tensor query_tokens;    // N x C
    std::vector<ProjectionTriple> support_proj;  // one triple per step
    std::vector<ProjectionTriple> query_proj;
    Tensor conv_sam_weight, conv_sam_bias;            // C x (2C+1), C x 1
    Tensor conv_backbone_weight, conv_backbone_bias;  // C x (2C+1), C x 1
};

/// Gaussian query/key/value projections scaled so that scaled dot-product
/// logits have O(1) spread at initialization (see make_projection_triple's
/// definition for the sizing argument).
ProjectionTriple make_projection_triple(int channels, Rng& rng);

/// Tokens ~ N(0, 1/C); projections via make_projection_triple; guiding
/// convolutions uniform within +-sqrt(1/fan_in); biases zero.
ProtoParams make_proto_params(int tokens, int channels, int steps, Rng& rng);

/// Masked average of the feature columns, broadcast back to every pixel.
/// The mask participates in the graph so soft attention masks backpropagate.
Tensor mask_average_pool_expand(const Tensor& features, const Tensor& mask);

/// conv1x1 over concat(features, mask, pooled): the guiding step that mixes
/// a feature map with its foreground evidence. pooled must already be
/// expanded to all pixels.
Tensor guide_features(const Tensor& features, const Tensor& mask, const Tensor& pooled,
                      const Tensor& conv_weight, const Tensor& conv_bias);

struct StepResult {
    Tensor tokens;  // N x C
    AttentionRecord record;
};

/// One cross-attention aggregation step: tokens attend over pixels with
/// scaled dot-product weights restricted to the mask's foreground; weights
/// are exactly zero elsewhere. key_map and value_map may differ (key drives
/// the weights, value is what gets aggregated).
StepResult masked_cross_attention_step(const Tensor& tokens, const Tensor& key_map,
                                       const Tensor& value_map, const Matrix& mask_row,
                                       const ProjectionTriple& proj, int step, Side side);

/// Unmasked variant: weights normalized over all pixels.
StepResult cross_attention_step(const Tensor& tokens, const Tensor& key_map,
                                const Tensor& value_map, const ProjectionTriple& proj,
                                int step, Side side);

struct SupportPrototypes {
    Tensor tokens;  // N x C
    std::vector<AttentionRecord> records;  // one per step, 1..T
};

/// Support side: guide the segment-identity features with the ground-truth
/// mask, run T-1 masked aggregation steps over them, then one final masked
/// step that keys on the same map but aggregates the guided class-identity
/// features.
SupportPrototypes build_support_prototypes(const FeatureMap& g_s, const FeatureMap& f_s,
                                           const Mask& m_s, const ProtoParams& params, int steps);

struct QueryPrototypes {
    Tensor tokens;                          // N x C
    std::vector<AttentionRecord> records;   // one per step, 1..T
    std::vector<Tensor> attention_masks;    // steps 1..T-1, each 1 x (H*W), peak 1
    Mask pseudo;                            // similarity-based starting mask
};

/// Query side: start from the similarity pseudo-mask, guide the
/// segment-identity features (pooling from the support), run T-1 unmasked
/// steps recording attention masks, guide the class-identity features with
/// the last attention mask (or the pseudo-mask when conventional_guide is
/// set), and finish with one unmasked step over them.
QueryPrototypes build_query_prototypes(const FeatureMap& g_q, const FeatureMap& f_q,
                                       const FeatureMap& g_s, const FeatureMap& f_s,
                                       const Mask& m_s, const ProtoParams& params, int steps,
                                       bool conventional_guide = false);

/// Query side with the support-derived inputs precomputed: pseudo is the
/// starting mask, pooled_g / pooled_f the expanded support pools for the two
/// families. Lets multi-shot callers combine supports before building.
QueryPrototypes build_query_prototypes_from(const FeatureMap& g_q, const FeatureMap& f_q,
                                            const Mask& pseudo, const Tensor& pooled_g,
                                            const Tensor& pooled_f, const ProtoParams& params,
                                            int steps, bool conventional_guide);

}  // namespace fcp
