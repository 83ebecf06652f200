#include "fcp/prototypes.hpp"

#include <cmath>

#include "fcp/errors.hpp"
#include "fcp/pseudomask.hpp"

namespace fcp {

namespace {

Matrix uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = bound * (2.0 * uniform_double(rng) - 1.0);
    return m;
}

Matrix gaussian_matrix(Index rows, Index cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = stddev * normal_double(rng);
    return m;
}

// Projection scales.  Tokens start near unit row norm (N(0, 1/C) entries)
// and guided feature columns near half that, so with the conservative
// sqrt(1/C) scale every scaled dot-product logit would have spread ~1e-2:
// all softmaxes near-uniform, every token the same weighted average, and the
// losses sitting on a saddle (identical attention maps are a stationary
// point of the orthogonality penalty) that small learning rates never leave.
// A logit spread of roughly |token| * |key| * std^2 makes the query/key
// scale below target O(1) spread; the value scale keeps aggregated token
// row norms near 1.
constexpr double kQueryKeyInitStd = 1.6;
constexpr double kValueInitGain = 1.7;  // entry std = gain / sqrt(C)

void check_map(const Tensor& map, int channels, const char* what) {
    if (map.rows() != channels)
        throw DimensionError(std::string(what) + ": channel count mismatch");
}

}  // namespace

ProjectionTriple make_projection_triple(int channels, Rng& rng) {
    if (channels < 1) throw ConfigError("make_projection_triple: non-positive channels");
    double value_std = kValueInitGain / std::sqrt(static_cast<double>(channels));
    ProjectionTriple t;
    t.wq = Tensor::variable(gaussian_matrix(channels, channels, kQueryKeyInitStd, rng));
    t.wk = Tensor::variable(gaussian_matrix(channels, channels, kQueryKeyInitStd, rng));
    t.wv = Tensor::variable(gaussian_matrix(channels, channels, value_std, rng));
    return t;
}

ProtoParams make_proto_params(int tokens, int channels, int steps, Rng& rng) {
    if (tokens < 1 || channels < 1 || steps < 1)
        throw ConfigError("make_proto_params: non-positive dimensions");
    ProtoParams p;
    p.tokens = tokens;
    p.channels = channels;
    p.steps = steps;

    double token_std = 1.0 / std::sqrt(static_cast<double>(channels));
    p.support_tokens = Tensor::variable(gaussian_matrix(tokens, channels, token_std, rng));
    p.query_tokens = Tensor::variable(gaussian_matrix(tokens, channels, token_std, rng));
    for (int t = 0; t < steps; ++t) p.support_proj.push_back(make_projection_triple(channels, rng));
    for (int t = 0; t < steps; ++t) p.query_proj.push_back(make_projection_triple(channels, rng));

    double conv_bound = std::sqrt(1.0 / (2 * channels + 1));
    p.conv_sam_weight = Tensor::variable(uniform_matrix(channels, 2 * channels + 1, conv_bound, rng));
    p.conv_sam_bias = Tensor::variable(Matrix::Zero(channels, 1));
    p.conv_backbone_weight =
        Tensor::variable(uniform_matrix(channels, 2 * channels + 1, conv_bound, rng));
    p.conv_backbone_bias = Tensor::variable(Matrix::Zero(channels, 1));
    return p;
}

Tensor mask_average_pool_expand(const Tensor& features, const Tensor& mask) {
    if (mask.rows() != 1 || mask.cols() != features.cols())
        throw DimensionError("mask_average_pool_expand: mask must be 1 x pixel-count");
    if (mask.value().minCoeff() < 0.0)
        throw ContractError("mask_average_pool_expand: negative mask values");
    double total = mask.value().sum();
    if (total <= 0.0)
        throw DegenerateEpisodeError("mask_average_pool_expand: mask has no support");

    Tensor weighted = matmul(features, transpose(mask));       // C x 1
    Tensor pooled = div(weighted, broadcast_scalar(sum(mask), features.rows(), 1));
    return broadcast_cols(pooled, features.cols());
}

Tensor guide_features(const Tensor& features, const Tensor& mask, const Tensor& pooled,
                      const Tensor& conv_weight, const Tensor& conv_bias) {
    if (mask.rows() != 1 || mask.cols() != features.cols())
        throw DimensionError("guide_features: mask must be 1 x pixel-count");
    if (pooled.rows() != features.rows() || pooled.cols() != features.cols())
        throw DimensionError("guide_features: pooled map shape mismatch");
    Tensor stacked = concat_rows({features, mask, pooled});
    return conv1x1(stacked, conv_weight, conv_bias);
}

namespace {

StepResult attention_step(const Tensor& tokens, const Tensor& key_map, const Tensor& value_map,
                          const Matrix* mask_row, const ProjectionTriple& proj, int step,
                          Side side) {
    Index channels = tokens.cols();
    check_map(key_map, static_cast<int>(channels), "attention step key map");
    check_map(value_map, static_cast<int>(channels), "attention step value map");
    if (key_map.cols() != value_map.cols())
        throw DimensionError("attention step: key/value pixel counts differ");

    Tensor q = matmul(tokens, proj.wq);                      // N x C
    Tensor k = matmul(transpose(proj.wk), key_map);          // C x P
    Tensor logits = matmul(q, k);                            // N x P
    double scale = std::sqrt(static_cast<double>(channels));
    Tensor weights = mask_row ? masked_scaled_softmax(logits, *mask_row, scale)
                              : scaled_softmax(logits, scale);
    Tensor out = matmul(matmul(weights, transpose(value_map)), proj.wv);

    StepResult result;
    result.tokens = out;
    result.record = AttentionRecord{step, side, weights};
    return result;
}

}  // namespace

StepResult masked_cross_attention_step(const Tensor& tokens, const Tensor& key_map,
                                       const Tensor& value_map, const Matrix& mask_row,
                                       const ProjectionTriple& proj, int step, Side side) {
    if (mask_row.rows() != 1)
        throw DimensionError("masked_cross_attention_step: mask must be a single row");
    for (Index i = 0; i < mask_row.cols(); ++i) {
        double v = mask_row(0, i);
        if (v != 0.0 && v != 1.0)
            throw ContractError("masked_cross_attention_step: mask must be binary");
    }
    return attention_step(tokens, key_map, value_map, &mask_row, proj, step, side);
}

StepResult cross_attention_step(const Tensor& tokens, const Tensor& key_map,
                                const Tensor& value_map, const ProjectionTriple& proj,
                                int step, Side side) {
    return attention_step(tokens, key_map, value_map, nullptr, proj, step, side);
}

SupportPrototypes build_support_prototypes(const FeatureMap& g_s, const FeatureMap& f_s,
                                           const Mask& m_s, const ProtoParams& params,
                                           int steps) {
    if (steps < 1) throw ConfigError("build_support_prototypes: steps must be >= 1");
    if (static_cast<std::size_t>(steps) > params.support_proj.size())
        throw ConfigError("build_support_prototypes: not enough projection triples");
    if (m_s.empty_foreground())
        throw DegenerateEpisodeError("build_support_prototypes: empty support mask");

    Tensor g = Tensor::constant(g_s.values);
    Tensor f = Tensor::constant(f_s.values);
    Tensor m = m_s.as_row_tensor();
    Matrix mask_row = m.value();

    Tensor g_bar = guide_features(g, m, mask_average_pool_expand(g, m),
                                  params.conv_sam_weight, params.conv_sam_bias);

    SupportPrototypes result;
    Tensor tokens = params.support_tokens;
    for (int t = 1; t < steps; ++t) {
        StepResult s = masked_cross_attention_step(tokens, g_bar, g_bar, mask_row,
                                                   params.support_proj[static_cast<std::size_t>(t - 1)],
                                                   t, Side::Support);
        tokens = s.tokens;
        result.records.push_back(std::move(s.record));
    }

    Tensor f_bar = guide_features(f, m, mask_average_pool_expand(f, m),
                                  params.conv_backbone_weight, params.conv_backbone_bias);
    StepResult last = masked_cross_attention_step(tokens, g_bar, f_bar, mask_row,
                                                  params.support_proj[static_cast<std::size_t>(steps - 1)],
                                                  steps, Side::Support);
    result.tokens = last.tokens;
    result.records.push_back(std::move(last.record));
    return result;
}

QueryPrototypes build_query_prototypes_from(const FeatureMap& g_q, const FeatureMap& f_q,
                                            const Mask& pseudo, const Tensor& pooled_g,
                                            const Tensor& pooled_f, const ProtoParams& params,
                                            int steps, bool conventional_guide) {
    if (steps < 2) throw ConfigError("build_query_prototypes: steps must be >= 2");
    if (static_cast<std::size_t>(steps) > params.query_proj.size())
        throw ConfigError("build_query_prototypes: not enough projection triples");
    if (pseudo.height != g_q.height || pseudo.width != g_q.width)
        throw DimensionError("build_query_prototypes: pseudo-mask shape mismatch");

    Tensor g = Tensor::constant(g_q.values);
    Tensor f = Tensor::constant(f_q.values);
    Tensor pseudo_row = pseudo.as_row_tensor();

    Tensor g_bar = guide_features(g, pseudo_row, pooled_g,
                                  params.conv_sam_weight, params.conv_sam_bias);

    QueryPrototypes result;
    result.pseudo = pseudo;
    Tensor tokens = params.query_tokens;
    for (int t = 1; t < steps; ++t) {
        StepResult s = cross_attention_step(tokens, g_bar, g_bar,
                                            params.query_proj[static_cast<std::size_t>(t - 1)],
                                            t, Side::Query);
        tokens = s.tokens;
        result.attention_masks.push_back(attention_mask(s.record.weights));
        result.records.push_back(std::move(s.record));
    }

    Tensor guide_mask = conventional_guide ? pseudo_row : result.attention_masks.back();
    Tensor f_bar = guide_features(f, guide_mask, pooled_f,
                                  params.conv_backbone_weight, params.conv_backbone_bias);
    StepResult last = cross_attention_step(tokens, g_bar, f_bar,
                                           params.query_proj[static_cast<std::size_t>(steps - 1)],
                                           steps, Side::Query);
    result.tokens = last.tokens;
    result.records.push_back(std::move(last.record));
    return result;
}

QueryPrototypes build_query_prototypes(const FeatureMap& g_q, const FeatureMap& f_q,
                                       const FeatureMap& g_s, const FeatureMap& f_s,
                                       const Mask& m_s, const ProtoParams& params, int steps,
                                       bool conventional_guide) {
    if (m_s.empty_foreground())
        throw DegenerateEpisodeError("build_query_prototypes: empty support mask");
    Mask pseudo = conventional_pseudo_mask(f_q, f_s, m_s);

    Tensor g_s_t = Tensor::constant(g_s.values);
    Tensor f_s_t = Tensor::constant(f_s.values);
    Tensor m = m_s.as_row_tensor();
    Tensor pooled_g = mask_average_pool_expand(g_s_t, m);
    Tensor pooled_f = mask_average_pool_expand(f_s_t, m);
    return build_query_prototypes_from(g_q, f_q, pseudo, pooled_g, pooled_f, params, steps,
                                       conventional_guide);
}

}  // namespace fcp
