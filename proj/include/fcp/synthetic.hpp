#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcp/featuremap.hpp"
#include "fcp/mask.hpp"
#include "fcp/rng.hpp"

namespace fcp {

/// One region of a scene: all pixels sharing a painted shape (or the
/// background). Pixels are linear indices r*W + c, kept sorted.
struct Segment {
    int class_id = 0;
    std::vector<Index> pixels;
};

struct SceneSpec {
    int height = 0;
    int width = 0;
    std::vector<Segment> segments;
    int background_class = 0;

    /// Throws unless the segments partition the grid and at least one
    /// non-background segment is nonempty.
    void validate() const;

    /// Binary mask of every pixel whose segment carries class_id.
    Mask class_mask(int class_id) const;
    bool contains_class(int class_id) const;
};

struct DatasetConfig {
    int base_classes = 12;
    int novel_classes = 4;
    int channels = 64;
    int height = 32;
    int width = 32;
    double sigma_sam = 0.1;   // pixel noise on the segment-identity family
    double sigma_img = 0.3;   // per-image class-appearance shift
    double sigma_pix = 0.5;   // pixel noise on the class-identity family
    std::uint64_t seed = 0;
};

struct DatasetSpec {
    DatasetConfig config;
    std::vector<int> base_ids;
    std::vector<int> novel_ids;
    Matrix class_embeddings;  // (base + novel + 1) x C unit rows; last row = background

    int background_class() const { return config.base_classes + config.novel_classes; }
    void validate() const;  // disjoint splits, embedding table shape
};

DatasetSpec make_dataset(const DatasetConfig& config);

/// Scene with 1..3 random rectangles/ellipses over a background, classes
/// drawn from the pool.
SceneSpec random_scene(const DatasetSpec& dataset, std::span<const int> class_pool, Rng& rng);

/// Like random_scene but guarantees target_class appears with at least one
/// visible pixel; rejects and retries when later shapes cover it.
SceneSpec scene_containing(const DatasetSpec& dataset, int target_class,
                           std::span<const int> class_pool, Rng& rng);

struct RenderedScene {
    FeatureMap sam_like;
    FeatureMap backbone_like;
    Mask gt_mask;  // pixels of target_class
};

/// Two feature families per pixel: a segment-identity family ("SAM-like",
/// embedding re-drawn per image so there is no class tie) and a
/// class-identity family ("backbone-like", anchored to the dataset's global
/// class embedding). All output vectors are unit-norm.
RenderedScene render_features(const SceneSpec& scene, const DatasetSpec& dataset,
                              int target_class, Rng& rng);

struct ComplementarityStats {
    // Within-image mean cosines, per family.
    double sam_fg_fg = 0.0;
    double sam_fg_bg = 0.0;
    double backbone_fg_fg = 0.0;
    double backbone_fg_bg = 0.0;
    // Cross-image mean cosines between foregrounds, split by class equality.
    double sam_same_class = 0.0;
    double sam_cross_class = 0.0;
    double backbone_same_class = 0.0;
    double backbone_cross_class = 0.0;

    double sam_fgbg_gap() const { return sam_fg_fg - sam_fg_bg; }
    double backbone_fgbg_gap() const { return backbone_fg_fg - backbone_fg_bg; }
    double sam_class_gap() const { return sam_same_class - sam_cross_class; }
    double backbone_class_gap() const { return backbone_same_class - backbone_cross_class; }
};

/// Monte-Carlo similarity gaps over n_scenes freshly sampled scenes. Pair
/// means use the mean-vector identity: the average pairwise dot product of
/// two pixel sets equals the dot product of their mean vectors (self-pairs
/// included for FG-FG).
ComplementarityStats complementarity_stats(const DatasetSpec& dataset, int n_scenes, Rng& rng);

}  // namespace fcp
