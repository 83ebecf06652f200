#pragma once

#include "fcp/prototypes.hpp"

namespace fcp {

/// Projection triple for prototype-to-prototype matching.
struct MatcherParams {
    ProjectionTriple proj;
};

MatcherParams make_matcher_params(int channels, Rng& rng);

/// Match support prototypes against query prototypes: support rows act as
/// attention queries over the query prototype set, producing one reference
/// token per support prototype.
Tensor generate_vrp(const Tensor& support_prototypes, const Tensor& query_prototypes,
                    const MatcherParams& params);

/// Similarity head turning reference tokens plus the query segment-identity
/// features into a soft mask: project both sides, scaled dot products give an
/// N x P similarity stack, then a two-layer 1x1 conv head and a sigmoid.
struct DecoderParams {
    int tokens = 8;
    int channels = 64;
    int hidden = 16;
    Tensor prompt_proj;  // C x C
    Tensor pixel_proj;   // C x C
    Tensor w1, b1;       // hidden x N, hidden x 1
    Tensor w2, b2;       // 1 x hidden, 1 x 1
};

DecoderParams make_decoder_params(int tokens, int channels, int hidden, Rng& rng);

/// vrp may carry shots * N rows (multi-shot prototypes concatenated); the
/// similarity stack is then averaged across shots before the conv head so
/// the head always sees N channels. Output is 1 x P with values in (0, 1).
Tensor decode_mask(const Tensor& vrp, const Tensor& g_q, const DecoderParams& params,
                   int shots = 1);

}  // namespace fcp
