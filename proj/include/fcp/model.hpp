#pragma once

#include "fcp/decoder.hpp"
#include "fcp/episode.hpp"
#include "fcp/losses.hpp"
#include "fcp/optim.hpp"
#include "fcp/prototypes.hpp"

namespace fcp {

/// Which pipeline the forward pass runs:
///  - Full: query prototypes built with the attention-based guide mask.
///  - ConventionalGuide: query prototypes built with the similarity
///    pseudo-mask as the class-family guide.
///  - PrototypePixel: no query prototypes; support prototypes attend over
///    guided query pixels directly.
enum class PipelineVariant { Full, ConventionalGuide, PrototypePixel };

PipelineVariant parse_variant(const std::string& name);
std::string variant_name(PipelineVariant v);

struct ModelConfig {
    int tokens = 8;
    int channels = 64;
    int steps = 3;
    int decoder_hidden = 16;

    void validate() const;
};

struct ForwardResult {
    Tensor pred;  // 1 x P soft mask
    SupportPrototypes support;  // per-shot records concatenated in shot order
    QueryPrototypes query;      // empty records when has_query_side is false
    bool has_query_side = false;
    Mask pseudo;                // similarity pseudo-mask (max across shots)
};

struct LossBreakdown {
    Tensor total, prompt, guide, ortho;
};

class FcpModel {
public:
    FcpModel(const ModelConfig& cfg, Rng& rng);

    const ModelConfig& config() const { return config_; }
    const ProtoParams& proto() const { return proto_; }
    const MatcherParams& matcher() const { return matcher_; }
    const DecoderParams& decoder() const { return decoder_; }

    /// Stable declaration-order list backing optimizer state and checkpoints.
    std::vector<Parameter*> parameters();
    Parameter* find_parameter(const std::string& name);

    ForwardResult forward(const Episode& episode,
                          PipelineVariant variant = PipelineVariant::Full) const;

    LossBreakdown episode_loss(const ForwardResult& fr, const Mask& query_mask,
                               const LossConfig& cfg) const;

private:
    ModelConfig config_;
    ProtoParams proto_;
    MatcherParams matcher_;
    DecoderParams decoder_;
    std::vector<Parameter> params_;
};

}  // namespace fcp
