#pragma once

#include <string>

#include "fcp/losses.hpp"
#include "fcp/model.hpp"
#include "fcp/synthetic.hpp"

namespace fcp {

/// Everything a training or evaluation run needs, loadable from a UTF-8
/// file of `key = value` lines with `#` comments.
struct RunConfig {
    DatasetConfig dataset;  // channels mirrors the model channel count

    int tokens = 8;
    int steps = 3;
    int decoder_hidden = 16;

    double lr = 2e-4;
    double weight_decay = 1e-4;
    std::int64_t train_steps = 2000;
    int batch_episodes = 1;

    double lambda_ortho = 0.05;
    double lambda_guide = 0.5;
    double loss_eps = 1e-7;
    bool ortho_includes_final_step = false;

    std::uint64_t seed = 0;
    int eval_episodes = 1000;
    int shots = 1;
    std::string variant = "full";
    std::string out_dir = "runs";

    void validate() const;
    ModelConfig model_config() const;
    LossConfig loss_config() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace fcp
