#include "fcp/decoder.hpp"

#include <cmath>

#include "fcp/errors.hpp"

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

// Sized like the attention projections in make_projection_triple: prompt
// tokens and pixel features have near-unit row norms, and this scale gives
// the similarity maps O(1) spread at initialization instead of leaving the
// decoder head to distinguish pixels through noise of order 1e-2.
constexpr double kSimProjInitStd = 0.75;

}  // namespace

MatcherParams make_matcher_params(int channels, Rng& rng) {
    if (channels < 1) throw ConfigError("make_matcher_params: non-positive channels");
    MatcherParams p;
    p.proj = make_projection_triple(channels, rng);
    return p;
}

Tensor generate_vrp(const Tensor& support_prototypes, const Tensor& query_prototypes,
                    const MatcherParams& params) {
    if (support_prototypes.cols() != query_prototypes.cols())
        throw DimensionError("generate_vrp: channel dims differ");
    Index channels = support_prototypes.cols();
    Tensor q = matmul(support_prototypes, params.proj.wq);
    Tensor k = matmul(query_prototypes, params.proj.wk);
    Tensor logits = matmul(q, transpose(k));  // N x N_q
    Tensor weights = scaled_softmax(logits, std::sqrt(static_cast<double>(channels)));
    return matmul(weights, matmul(query_prototypes, params.proj.wv));
}

DecoderParams make_decoder_params(int tokens, int channels, int hidden, Rng& rng) {
    if (tokens < 1 || channels < 1 || hidden < 1)
        throw ConfigError("make_decoder_params: non-positive dimensions");
    DecoderParams p;
    p.tokens = tokens;
    p.channels = channels;
    p.hidden = hidden;
    p.prompt_proj = Tensor::variable(gaussian_matrix(channels, channels, kSimProjInitStd, rng));
    p.pixel_proj = Tensor::variable(gaussian_matrix(channels, channels, kSimProjInitStd, rng));
    p.w1 = Tensor::variable(uniform_matrix(hidden, tokens, std::sqrt(1.0 / tokens), rng));
    p.b1 = Tensor::variable(Matrix::Zero(hidden, 1));
    p.w2 = Tensor::variable(uniform_matrix(1, hidden, std::sqrt(1.0 / hidden), rng));
    p.b2 = Tensor::variable(Matrix::Zero(1, 1));
    return p;
}

Tensor decode_mask(const Tensor& vrp, const Tensor& g_q, const DecoderParams& params,
                   int shots) {
    if (shots < 1) throw ConfigError("decode_mask: shots must be >= 1");
    if (vrp.rows() != static_cast<Index>(shots) * params.tokens)
        throw DimensionError("decode_mask: vrp row count must be shots * tokens");
    if (vrp.cols() != params.channels || g_q.rows() != params.channels)
        throw DimensionError("decode_mask: channel mismatch");

    Tensor prompts = matmul(vrp, params.prompt_proj);            // (shots*N) x C
    Tensor pixels = matmul(transpose(params.pixel_proj), g_q);   // C x P
    double scale = 1.0 / std::sqrt(static_cast<double>(params.channels));
    Tensor sims = mul_scalar(matmul(prompts, pixels), scale);    // (shots*N) x P

    if (shots > 1) {
        // Average the per-shot similarity blocks so the head keeps N inputs.
        Matrix avg = Matrix::Zero(params.tokens, vrp.rows());
        for (int s = 0; s < shots; ++s)
            for (int n = 0; n < params.tokens; ++n)
                avg(n, static_cast<Index>(s) * params.tokens + n) = 1.0 / shots;
        sims = matmul(Tensor::constant(avg), sims);
    }

    Tensor hidden = relu(conv1x1(sims, params.w1, params.b1));
    Tensor logits = conv1x1(hidden, params.w2, params.b2);
    return sigmoid(logits);  // 1 x P
}

}  // namespace fcp
