#include "fcp/model.hpp"

#include "fcp/errors.hpp"
#include "fcp/pseudomask.hpp"

namespace fcp {

PipelineVariant parse_variant(const std::string& name) {
    if (name == "full") return PipelineVariant::Full;
    if (name == "conventional-guide") return PipelineVariant::ConventionalGuide;
    if (name == "prototype-pixel") return PipelineVariant::PrototypePixel;
    throw ConfigError("unknown pipeline variant: " + name);
}

std::string variant_name(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::Full: return "full";
        case PipelineVariant::ConventionalGuide: return "conventional-guide";
        case PipelineVariant::PrototypePixel: return "prototype-pixel";
    }
    throw ContractError("variant_name: unhandled variant");
}

void ModelConfig::validate() const {
    if (tokens < 1) throw ConfigError("ModelConfig: tokens must be >= 1");
    if (channels < 1) throw ConfigError("ModelConfig: channels must be >= 1");
    if (steps < 2) throw ConfigError("ModelConfig: steps must be >= 2");
    if (decoder_hidden < 1) throw ConfigError("ModelConfig: decoder hidden must be >= 1");
}

FcpModel::FcpModel(const ModelConfig& cfg, Rng& rng) : config_(cfg) {
    cfg.validate();
    proto_ = make_proto_params(cfg.tokens, cfg.channels, cfg.steps, rng);
    matcher_ = make_matcher_params(cfg.channels, rng);
    decoder_ = make_decoder_params(cfg.tokens, cfg.channels, cfg.decoder_hidden, rng);

    params_.emplace_back("support_tokens", proto_.support_tokens);
    params_.emplace_back("query_tokens", proto_.query_tokens);
    for (int t = 0; t < cfg.steps; ++t) {
        const auto& triple = proto_.support_proj[static_cast<std::size_t>(t)];
        std::string base = "support_proj" + std::to_string(t + 1);
        params_.emplace_back(base + "_wq", triple.wq);
        params_.emplace_back(base + "_wk", triple.wk);
        params_.emplace_back(base + "_wv", triple.wv);
    }
    for (int t = 0; t < cfg.steps; ++t) {
        const auto& triple = proto_.query_proj[static_cast<std::size_t>(t)];
        std::string base = "query_proj" + std::to_string(t + 1);
        params_.emplace_back(base + "_wq", triple.wq);
        params_.emplace_back(base + "_wk", triple.wk);
        params_.emplace_back(base + "_wv", triple.wv);
    }
    params_.emplace_back("conv_sam_weight", proto_.conv_sam_weight);
    params_.emplace_back("conv_sam_bias", proto_.conv_sam_bias);
    params_.emplace_back("conv_backbone_weight", proto_.conv_backbone_weight);
    params_.emplace_back("conv_backbone_bias", proto_.conv_backbone_bias);
    params_.emplace_back("matcher_wq", matcher_.proj.wq);
    params_.emplace_back("matcher_wk", matcher_.proj.wk);
    params_.emplace_back("matcher_wv", matcher_.proj.wv);
    params_.emplace_back("decoder_prompt_proj", decoder_.prompt_proj);
    params_.emplace_back("decoder_pixel_proj", decoder_.pixel_proj);
    params_.emplace_back("decoder_w1", decoder_.w1);
    params_.emplace_back("decoder_b1", decoder_.b1);
    params_.emplace_back("decoder_w2", decoder_.w2);
    params_.emplace_back("decoder_b2", decoder_.b2);
}

std::vector<Parameter*> FcpModel::parameters() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
}

Parameter* FcpModel::find_parameter(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

namespace {

Mask shotwise_max_pseudo(const FeatureMap& f_q, const std::vector<Shot>& support) {
    Mask combined = conventional_pseudo_mask(f_q, support[0].backbone, support[0].mask);
    for (std::size_t k = 1; k < support.size(); ++k) {
        Mask m = conventional_pseudo_mask(f_q, support[k].backbone, support[k].mask);
        combined.values = combined.values.cwiseMax(m.values);
    }
    return combined;
}

Tensor mean_support_pool(const std::vector<Shot>& support, bool backbone_family) {
    Tensor total;
    for (const Shot& s : support) {
        const FeatureMap& fm = backbone_family ? s.backbone : s.sam;
        Tensor pooled =
            mask_average_pool_expand(Tensor::constant(fm.values), s.mask.as_row_tensor());
        total = total.defined() ? add(total, pooled) : pooled;
    }
    return mul_scalar(total, 1.0 / static_cast<Scalar>(support.size()));
}

}  // namespace

ForwardResult FcpModel::forward(const Episode& episode, PipelineVariant variant) const {
    if (episode.support.empty()) throw ContractError("forward: episode has no support shots");
    int steps = config_.steps;

    ForwardResult fr;
    Tensor support_tokens;
    for (const Shot& s : episode.support) {
        SupportPrototypes sp = build_support_prototypes(s.sam, s.backbone, s.mask, proto_, steps);
        support_tokens = support_tokens.defined()
                             ? concat_rows({support_tokens, sp.tokens})
                             : sp.tokens;
        for (auto& rec : sp.records) fr.support.records.push_back(std::move(rec));
    }
    fr.support.tokens = support_tokens;

    fr.pseudo = shotwise_max_pseudo(episode.query.backbone, episode.support);
    Tensor pooled_g = mean_support_pool(episode.support, false);
    Tensor pooled_f = mean_support_pool(episode.support, true);
    Tensor g_q = Tensor::constant(episode.query.sam.values);

    Tensor vrp;
    if (variant == PipelineVariant::PrototypePixel) {
        // Support prototypes attend straight over the guided query pixels.
        Tensor g_bar_q = guide_features(g_q, fr.pseudo.as_row_tensor(), pooled_g,
                                        proto_.conv_sam_weight, proto_.conv_sam_bias);
        vrp = generate_vrp(support_tokens, transpose(g_bar_q), matcher_);
    } else {
        fr.query = build_query_prototypes_from(episode.query.sam, episode.query.backbone,
                                               fr.pseudo, pooled_g, pooled_f, proto_, steps,
                                               variant == PipelineVariant::ConventionalGuide);
        fr.has_query_side = true;
        vrp = generate_vrp(support_tokens, fr.query.tokens, matcher_);
    }

    fr.pred = decode_mask(vrp, g_q, decoder_, static_cast<int>(episode.support.size()));
    return fr;
}

LossBreakdown FcpModel::episode_loss(const ForwardResult& fr, const Mask& query_mask,
                                     const LossConfig& cfg) const {
    cfg.validate();
    Tensor gt = query_mask.as_row_tensor();

    LossBreakdown lb;
    lb.prompt = prompt_loss(fr.pred, gt, cfg.eps);
    if (fr.has_query_side) {
        lb.guide = guide_loss(fr.query.attention_masks, gt, cfg.eps);
        lb.ortho = ortho_loss(fr.support.records, fr.query.records, config_.steps,
                              cfg.ortho_includes_final_step);
    } else {
        lb.guide = Tensor::scalar_constant(0.0);
        lb.ortho = ortho_loss(fr.support.records, {}, config_.steps,
                              cfg.ortho_includes_final_step);
    }
    lb.total = total_loss(lb.prompt, lb.guide, lb.ortho, cfg);
    return lb;
}

}  // namespace fcp
