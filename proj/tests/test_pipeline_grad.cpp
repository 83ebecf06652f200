#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fcp/trainer.hpp"

#include <string>

using namespace fcp;

namespace {

RunConfig tiny_run() {
    RunConfig cfg;
    cfg.dataset.base_classes = 3;
    cfg.dataset.novel_classes = 2;
    cfg.dataset.channels = 6;
    cfg.dataset.height = 5;
    cfg.dataset.width = 5;
    cfg.tokens = 3;
    cfg.steps = 3;
    cfg.decoder_hidden = 4;
    return cfg;
}

void expect_pass(const RunConfig& cfg, const GradCheckOptions& opts) {
    GradCheckReport report = check_pipeline_gradients(cfg, opts);
    std::string detail = "max rel error " + std::to_string(report.max_rel_error) + " at " +
                         report.worst.param + "[" + std::to_string(report.worst.coord) +
                         "] (analytic " + std::to_string(report.worst.analytic) + ", numeric " +
                         std::to_string(report.worst.numeric) + ")";
    INFO(detail);
    CHECK(report.pass);
    CHECK(report.max_rel_error < 1e-4);
    CHECK(report.checked > 0);
}

}  // namespace

TEST_CASE("full pipeline gradients pass over every coordinate") {
    GradCheckOptions opts;  // samples_per_param <= 0 checks all coordinates
    expect_pass(tiny_run(), opts);
}

TEST_CASE("conventional-guide pipeline gradients pass") {
    RunConfig cfg = tiny_run();
    cfg.variant = "conventional-guide";
    GradCheckOptions opts;
    opts.samples_per_param = 8;
    expect_pass(cfg, opts);
}

TEST_CASE("prototype-pixel pipeline gradients pass") {
    RunConfig cfg = tiny_run();
    cfg.variant = "prototype-pixel";
    GradCheckOptions opts;
    opts.samples_per_param = 8;
    expect_pass(cfg, opts);
}

TEST_CASE("two-shot pipeline gradients pass") {
    RunConfig cfg = tiny_run();
    cfg.shots = 2;
    GradCheckOptions opts;
    opts.samples_per_param = 6;
    expect_pass(cfg, opts);
}

TEST_CASE("minimal step count and final-step ortho gradients pass") {
    RunConfig cfg = tiny_run();
    cfg.steps = 2;
    GradCheckOptions opts;
    opts.samples_per_param = 6;
    expect_pass(cfg, opts);

    RunConfig with_final = tiny_run();
    with_final.ortho_includes_final_step = true;
    expect_pass(with_final, opts);
}

TEST_CASE("gradient check is deterministic in its seed") {
    GradCheckOptions opts;
    opts.samples_per_param = 5;
    GradCheckReport a = check_pipeline_gradients(tiny_run(), opts);
    GradCheckReport b = check_pipeline_gradients(tiny_run(), opts);
    CHECK(a.max_rel_error == b.max_rel_error);
    CHECK(a.worst.param == b.worst.param);
    CHECK(a.checked == b.checked);
}
