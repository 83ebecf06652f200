#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fcp/episode.hpp"
#include "fcp/errors.hpp"
#include "fcp/gradcheck.hpp"
#include "fcp/io.hpp"
#include "fcp/ops.hpp"
#include "fcp/pseudomask.hpp"
#include "fcp/trainer.hpp"

namespace {

using nlohmann::json;

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed) {
    fcp::RunConfig cfg = fcp::load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    std::filesystem::create_directories(cfg.out_dir);

    fcp::TrainOptions opts;
    opts.metrics_path = cfg.out_dir + "/metrics.jsonl";
    opts.checkpoint_path = cfg.out_dir + "/checkpoint.fcpc";
    opts.quiet = false;
    fcp::TrainResult result = fcp::train(cfg, opts);

    json summary = {{"steps", cfg.train_steps},
                    {"seed", cfg.seed},
                    {"first_window_loss", result.first_window_loss},
                    {"last_window_loss", result.last_window_loss},
                    {"checkpoint", opts.checkpoint_path},
                    {"metrics", opts.metrics_path}};
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, std::optional<int> episodes,
             std::optional<int> shots) {
    fcp::Checkpoint ck = fcp::load_checkpoint(checkpoint_path);
    fcp::EvalOptions opts;
    opts.episodes = episodes.value_or(ck.config.eval_episodes);
    opts.shots = shots.value_or(ck.config.shots);
    opts.seed = ck.config.seed + 7919;
    opts.records_path = ck.config.out_dir + "/eval_records.jsonl";
    opts.mask_dir = ck.config.out_dir + "/masks";
    opts.masks_to_write = 8;
    fcp::EvalReport report = fcp::evaluate(*ck.model, ck.config, opts);

    json summary = {{"episodes", opts.episodes},
                    {"shots", opts.shots},
                    {"miou", report.mean_iou},
                    {"conventional_pseudo_miou", report.mean_conventional_iou},
                    {"attention_pseudo_miou", report.mean_attention_iou},
                    {"records", opts.records_path}};
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_gradcheck(double tol) {
    fcp::RunConfig cfg;
    cfg.dataset.base_classes = 3;
    cfg.dataset.novel_classes = 2;
    cfg.dataset.channels = 6;
    cfg.dataset.height = 5;
    cfg.dataset.width = 5;
    cfg.tokens = 3;
    cfg.steps = 3;
    cfg.decoder_hidden = 4;

    fcp::GradCheckOptions opts;
    opts.tol = tol;
    opts.samples_per_param = 6;
    fcp::GradCheckReport report = fcp::check_pipeline_gradients(cfg, opts);

    json summary = {{"pass", report.pass},
                    {"checked", report.checked},
                    {"max_rel_error", report.max_rel_error},
                    {"worst_param", report.worst.param},
                    {"worst_coord", report.worst.coord},
                    {"worst_analytic", report.worst.analytic},
                    {"worst_numeric", report.worst.numeric}};
    std::cout << summary.dump() << "\n";
    return report.pass ? 0 : 1;
}

int cmd_pseudomask_compare(const std::string& checkpoint_path, std::optional<int> episodes) {
    fcp::Checkpoint ck = fcp::load_checkpoint(checkpoint_path);
    fcp::EvalOptions opts;
    opts.episodes = episodes.value_or(ck.config.eval_episodes);
    opts.shots = ck.config.shots;
    opts.seed = ck.config.seed + 7919;
    fcp::EvalReport report = fcp::evaluate(*ck.model, ck.config, opts);

    for (const auto& rec : report.records) {
        json line = {{"episode", rec.episode},
                     {"class", rec.class_id},
                     {"conventional",
                      {{"iou", rec.conventional.iou},
                       {"precision", rec.conventional.precision},
                       {"recall", rec.conventional.recall}}}};
        if (rec.attention)
            line["attention"] = {{"iou", rec.attention->iou},
                                 {"precision", rec.attention->precision},
                                 {"recall", rec.attention->recall}};
        std::cout << line.dump() << "\n";
    }
    json summary = {{"summary", true},
                    {"episodes", opts.episodes},
                    {"conventional_miou", report.mean_conventional_iou},
                    {"attention_miou", report.mean_attention_iou}};
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_ablation(const std::string& config_path, const std::string& variant_list) {
    fcp::RunConfig base = fcp::load_run_config(config_path);
    std::vector<std::string> variants;
    std::string item;
    std::istringstream in(variant_list);
    while (std::getline(in, item, ','))
        if (!item.empty()) variants.push_back(item);

    std::string csv_path = base.out_dir + "/ablation.csv";
    fcp::AblationTable table = fcp::run_ablation(base, variants, 3, csv_path, false);
    std::cout << table.csv();
    std::cerr << "wrote " << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Foreground-covering prototype generation and matching on synthetic episodes"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, variant_list;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes, shots;
    double tol = 1e-4;

    auto* train = app.add_subcommand("train", "Train a model from a config file");
    train->add_option("--config", config_path, "key = value config file")->required();
    train->add_option("--seed", seed, "override the config seed");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on novel episodes");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--episodes", episodes, "episode count");
    eval->add_option("--k", shots, "support shots per episode");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    gradcheck->add_option("--tol", tol, "relative error tolerance");

    auto* compare = app.add_subcommand("pseudomask-compare",
                                       "Per-episode metrics for both pseudo-mask types");
    compare->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    compare->add_option("--episodes", episodes, "episode count");

    auto* ablation = app.add_subcommand("ablation", "Train/evaluate a set of variants");
    ablation->add_option("--config", config_path, "base config file")->required();
    ablation->add_option("--variants", variant_list, "comma-separated variant names")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, seed);
        if (eval->parsed()) return cmd_eval(checkpoint_path, episodes, shots);
        if (gradcheck->parsed()) return cmd_gradcheck(tol);
        if (compare->parsed()) return cmd_pseudomask_compare(checkpoint_path, episodes);
        if (ablation->parsed()) return cmd_ablation(config_path, variant_list);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
