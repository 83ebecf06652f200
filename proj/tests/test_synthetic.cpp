#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fcp/synthetic.hpp"

#include <algorithm>
#include <cmath>

using namespace fcp;

namespace {

DatasetConfig tiny_config() {
    DatasetConfig cfg;
    cfg.base_classes = 3;
    cfg.novel_classes = 2;
    cfg.channels = 16;
    cfg.height = 8;
    cfg.width = 8;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("dataset splits are disjoint and embeddings are unit rows") {
    DatasetSpec ds = make_dataset({});
    CHECK(ds.base_ids.size() == 12);
    CHECK(ds.novel_ids.size() == 4);
    for (int b : ds.base_ids)
        for (int n : ds.novel_ids) CHECK(b != n);
    CHECK(ds.background_class() == 16);
    CHECK(ds.class_embeddings.rows() == 17);
    CHECK(ds.class_embeddings.cols() == 64);
    for (Index r = 0; r < ds.class_embeddings.rows(); ++r)
        CHECK(std::abs(ds.class_embeddings.row(r).norm() - 1.0) < 1e-9);
}

TEST_CASE("make_dataset is deterministic per seed") {
    DatasetSpec a = make_dataset({});
    DatasetSpec b = make_dataset({});
    CHECK((a.class_embeddings - b.class_embeddings).cwiseAbs().maxCoeff() == 0.0);

    DatasetConfig other;
    other.seed = 1;
    DatasetSpec c = make_dataset(other);
    CHECK((a.class_embeddings - c.class_embeddings).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("make_dataset rejects invalid configs") {
    DatasetConfig cfg;
    cfg.novel_classes = 0;
    CHECK_THROWS_AS(make_dataset(cfg), ConfigError);
    cfg = {};
    cfg.base_classes = 1;
    CHECK_THROWS_AS(make_dataset(cfg), ConfigError);
    cfg = {};
    cfg.channels = 0;
    CHECK_THROWS_AS(make_dataset(cfg), ConfigError);
    cfg = {};
    cfg.sigma_pix = -0.1;
    CHECK_THROWS_AS(make_dataset(cfg), ConfigError);
}

TEST_CASE("overlapping splits are rejected by validation") {
    DatasetSpec ds = make_dataset(tiny_config());
    ds.novel_ids[0] = ds.base_ids[0];
    CHECK_THROWS_AS(ds.validate(), ConfigError);
}

TEST_CASE("random scenes partition the grid with at most three shapes") {
    DatasetSpec ds = make_dataset(tiny_config());
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        SceneSpec scene = random_scene(ds, ds.base_ids, rng);
        scene.validate();
        CHECK(scene.height == 8);
        CHECK(scene.width == 8);
        CHECK(scene.segments.size() <= 4);  // up to 3 shapes plus background
        for (const auto& seg : scene.segments) {
            const bool is_bg = seg.class_id == scene.background_class;
            const bool in_pool = std::find(ds.base_ids.begin(), ds.base_ids.end(),
                                           seg.class_id) != ds.base_ids.end();
            CHECK((is_bg || in_pool));
        }
    }
}

TEST_CASE("scene_containing always places the target class") {
    DatasetSpec ds = make_dataset(tiny_config());
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const int target = ds.novel_ids[static_cast<std::size_t>(i) % ds.novel_ids.size()];
        SceneSpec scene = scene_containing(ds, target, ds.novel_ids, rng);
        CHECK(scene.contains_class(target));
        CHECK(scene.class_mask(target).foreground_sum() > 0.0);
    }
    CHECK_THROWS_AS(scene_containing(ds, ds.background_class(), ds.novel_ids, rng), ConfigError);
    CHECK_THROWS_AS(scene_containing(ds, -1, ds.novel_ids, rng), ConfigError);
    CHECK_THROWS_AS(scene_containing(ds, 0, std::span<const int>{}, rng), ConfigError);
}

TEST_CASE("class_mask marks exactly the segment pixels") {
    SceneSpec scene;
    scene.height = 2;
    scene.width = 3;
    scene.background_class = 5;
    scene.segments = {{5, {0, 1, 5}}, {1, {2, 3}}, {2, {4}}};
    scene.validate();

    Mask m1 = scene.class_mask(1);
    CHECK(m1.values(0, 2) == 1.0);
    CHECK(m1.values(1, 0) == 1.0);
    CHECK(m1.foreground_sum() == 2.0);
    CHECK(scene.class_mask(2).foreground_sum() == 1.0);
    CHECK(scene.class_mask(3).foreground_sum() == 0.0);
    CHECK(scene.contains_class(1));
    CHECK(!scene.contains_class(3));
}

TEST_CASE("scene validation rejects broken partitions") {
    SceneSpec overlap;
    overlap.height = 1;
    overlap.width = 2;
    overlap.background_class = 9;
    overlap.segments = {{9, {0}}, {1, {0, 1}}};
    CHECK_THROWS_AS(overlap.validate(), ContractError);

    SceneSpec gap;
    gap.height = 1;
    gap.width = 3;
    gap.background_class = 9;
    gap.segments = {{9, {0}}, {1, {1}}};
    CHECK_THROWS_AS(gap.validate(), ContractError);

    SceneSpec no_fg;
    no_fg.height = 1;
    no_fg.width = 2;
    no_fg.background_class = 9;
    no_fg.segments = {{9, {0, 1}}};
    CHECK_THROWS_AS(no_fg.validate(), ContractError);
}

TEST_CASE("rendered features are unit norm and deterministic") {
    DatasetSpec ds = make_dataset(tiny_config());
    Rng scene_rng(3);
    SceneSpec scene = scene_containing(ds, 0, ds.base_ids, scene_rng);

    Rng r1(11), r2(11);
    RenderedScene a = render_features(scene, ds, 0, r1);
    RenderedScene b = render_features(scene, ds, 0, r2);
    CHECK((a.sam_like.values - b.sam_like.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.backbone_like.values - b.backbone_like.values).cwiseAbs().maxCoeff() == 0.0);

    for (Index p = 0; p < a.sam_like.pixel_count(); ++p) {
        CHECK(std::abs(a.sam_like.values.col(p).norm() - 1.0) < 1e-9);
        CHECK(std::abs(a.backbone_like.values.col(p).norm() - 1.0) < 1e-9);
    }
    CHECK(a.gt_mask.binary);
    CHECK((a.gt_mask.values - scene.class_mask(0).values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise-free rendering collapses to per-segment and per-class embeddings") {
    DatasetConfig cfg = tiny_config();
    cfg.sigma_sam = cfg.sigma_img = cfg.sigma_pix = 0.0;
    DatasetSpec ds = make_dataset(cfg);
    Rng scene_rng(4);
    SceneSpec scene = scene_containing(ds, 1, ds.base_ids, scene_rng);

    Rng rng(21);
    RenderedScene r = render_features(scene, ds, 1, rng);
    for (const auto& seg : scene.segments) {
        // Identical pixels within a segment in both families.
        const Index first = seg.pixels.front();
        for (Index p : seg.pixels) {
            CHECK((r.sam_like.values.col(p) - r.sam_like.values.col(first)).norm() < 1e-12);
            CHECK((r.backbone_like.values.col(p) - r.backbone_like.values.col(first)).norm() <
                  1e-12);
        }
        // Backbone pixels sit exactly on the global class embedding.
        Vector expect = ds.class_embeddings.row(seg.class_id).transpose();
        CHECK((r.backbone_like.values.col(first) - expect).norm() < 1e-12);
    }
}

TEST_CASE("noise-free sam embeddings are re-drawn per image, backbone anchored per class") {
    DatasetConfig cfg = tiny_config();
    cfg.sigma_sam = cfg.sigma_img = cfg.sigma_pix = 0.0;
    DatasetSpec ds = make_dataset(cfg);
    const int cls = 2;
    std::vector<int> pool{cls};

    Rng rng(8);
    SceneSpec s1 = scene_containing(ds, cls, pool, rng);
    RenderedScene r1 = render_features(s1, ds, cls, rng);
    SceneSpec s2 = scene_containing(ds, cls, pool, rng);
    RenderedScene r2 = render_features(s2, ds, cls, rng);

    auto fg_pixel = [cls](const SceneSpec& s) {
        for (const auto& seg : s.segments)
            if (seg.class_id == cls) return seg.pixels.front();
        return Index{-1};
    };
    const Index p1 = fg_pixel(s1), p2 = fg_pixel(s2);
    const double sam_cos = r1.sam_like.values.col(p1).dot(r2.sam_like.values.col(p2));
    const double bb_cos = r1.backbone_like.values.col(p1).dot(r2.backbone_like.values.col(p2));
    CHECK(bb_cos == doctest::Approx(1.0).epsilon(1e-12));  // same class, same embedding
    CHECK(sam_cos < 0.9);  // fresh segment identity per image
}

TEST_CASE("render_features validates scene and class arguments") {
    DatasetSpec ds = make_dataset(tiny_config());
    Rng rng(2);
    SceneSpec scene = scene_containing(ds, 0, ds.base_ids, rng);

    SceneSpec wrong = scene;
    wrong.height = 4;
    CHECK_THROWS_AS(render_features(wrong, ds, 0, rng), Error);

    SceneSpec alien = scene;
    alien.segments.front().class_id = 99;
    CHECK_THROWS_AS(render_features(alien, ds, 0, rng), ConfigError);

    CHECK_THROWS_AS(render_features(scene, ds, ds.background_class(), rng), ConfigError);
}

TEST_CASE("noise-free complementarity components hit their exact endpoints") {
    DatasetConfig cfg = tiny_config();
    cfg.sigma_sam = cfg.sigma_img = cfg.sigma_pix = 0.0;
    DatasetSpec ds = make_dataset(cfg);
    Rng rng(2);
    ComplementarityStats st = complementarity_stats(ds, 4, rng);
    CHECK(st.sam_fg_fg == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.backbone_same_class == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.backbone_same_class > st.backbone_cross_class + 0.5);
}

TEST_CASE("complementarity direction holds with margin over 120 scenes") {
    DatasetSpec ds = make_dataset({});
    Rng rng(0);
    ComplementarityStats st = complementarity_stats(ds, 120, rng);
    CHECK(st.sam_fgbg_gap() - st.backbone_fgbg_gap() >= 0.05);
    CHECK(st.backbone_class_gap() - st.sam_class_gap() >= 0.05);
    CHECK(st.sam_fgbg_gap() > 0.0);
    CHECK(st.backbone_class_gap() > 0.0);
}

TEST_CASE("complementarity_stats requires at least two scenes") {
    DatasetSpec ds = make_dataset(tiny_config());
    Rng rng(0);
    CHECK_THROWS_AS(complementarity_stats(ds, 1, rng), ConfigError);
}
