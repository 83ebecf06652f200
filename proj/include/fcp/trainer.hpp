#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcp/config.hpp"
#include "fcp/gradcheck.hpp"
#include "fcp/model.hpp"

namespace fcp {

/// Finite-difference check of the total training loss on one sampled episode
/// against every parameter group of a freshly initialized model.
GradCheckReport check_pipeline_gradients(const RunConfig& cfg, const GradCheckOptions& opts);

struct TrainOptions {
    std::string metrics_path;     // JSON-lines loss log; empty disables
    std::string checkpoint_path;  // empty disables saving
    bool quiet = true;            // progress lines on stderr when false
};

struct TrainResult {
    RunConfig config;
    std::unique_ptr<FcpModel> model;
    double first_window_loss = 0.0;  // mean total loss, first 100 steps
    double last_window_loss = 0.0;   // mean total loss, last 100 steps
};

/// Fresh model + AdamW with cosine annealing over base-phase episodes.
/// Deterministic in (config, seed). Throws TrainingError on non-finite loss.
TrainResult train(const RunConfig& cfg, const TrainOptions& opts = {});

void save_checkpoint(const std::string& path, const RunConfig& cfg, FcpModel& model);

struct Checkpoint {
    RunConfig config;
    std::unique_ptr<FcpModel> model;
};

Checkpoint load_checkpoint(const std::string& path);

struct EvalRecord {
    int episode = 0;
    int class_id = -1;
    MaskMetrics prediction;                        // binarized prediction vs GT
    MaskMetrics conventional;                      // similarity pseudo-mask vs GT
    std::optional<MaskMetrics> attention;          // last attention mask vs GT
};

struct EvalReport {
    double mean_iou = 0.0;
    double mean_conventional_iou = 0.0;
    double mean_attention_iou = 0.0;  // over episodes that have one
    std::vector<EvalRecord> records;
};

struct EvalOptions {
    int episodes = 1000;
    int shots = 1;
    double threshold = 0.5;
    std::uint64_t seed = 1;           // evaluation episode stream
    std::string mask_dir;             // writes the first few predictions as PGM
    int masks_to_write = 0;
    std::string records_path;         // JSON-lines per-episode records; empty disables
};

/// Novel-phase evaluation; every sampled class is asserted to be novel.
EvalReport evaluate(FcpModel& model, const RunConfig& cfg, const EvalOptions& opts);

/// Same episode stream, but the mask comes from an arbitrary predictor
/// (pseudo-mask metrics are skipped). Used to sanity-check the protocol.
using Predictor = std::function<Mask(const Episode&)>;
EvalReport evaluate_with(const Predictor& predictor, const RunConfig& cfg,
                         const EvalOptions& opts);

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double miou = 0.0;
    double conventional_miou = 0.0;
    double attention_miou = 0.0;
};

struct AblationTable {
    std::vector<AblationRow> rows;
    std::string csv() const;
    /// Mean prediction mIoU across the seeds of one variant.
    double mean_miou(const std::string& variant) const;
};

/// Derives a RunConfig from the base for a named variant: "full",
/// "conventional-guide", "prototype-pixel", "loss-prompt-only",
/// "loss-no-ortho", "loss-no-guide", "loss-full", or "steps-<n>".
RunConfig make_ablation_config(const RunConfig& base, const std::string& variant);

/// Trains and evaluates every variant over seeds_per_variant shared seeds
/// (base.seed, base.seed + 1, ...). Writes csv_path when nonempty.
AblationTable run_ablation(const RunConfig& base, const std::vector<std::string>& variants,
                           int seeds_per_variant = 3, const std::string& csv_path = "",
                           bool quiet = true);

}  // namespace fcp
