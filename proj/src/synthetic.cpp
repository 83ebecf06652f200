#include "fcp/synthetic.hpp"

#include <algorithm>
#include <numeric>

#include "fcp/errors.hpp"

namespace fcp {

void SceneSpec::validate() const {
    if (height <= 0 || width <= 0) throw DimensionError("SceneSpec: non-positive grid");
    auto total = static_cast<Index>(height) * width;
    std::vector<char> seen(static_cast<std::size_t>(total), 0);
    bool foreground = false;
    for (const auto& seg : segments) {
        if (seg.class_id != background_class && !seg.pixels.empty()) foreground = true;
        for (Index p : seg.pixels) {
            if (p < 0 || p >= total) throw DimensionError("SceneSpec: pixel out of range");
            if (seen[static_cast<std::size_t>(p)]++)
                throw ContractError("SceneSpec: pixel covered twice");
        }
    }
    for (char s : seen)
        if (!s) throw ContractError("SceneSpec: pixel not covered by any segment");
    if (!foreground) throw ContractError("SceneSpec: no foreground segment");
}

Mask SceneSpec::class_mask(int class_id) const {
    Mask mask = Mask::zeros(height, width);
    for (const auto& seg : segments) {
        if (seg.class_id != class_id) continue;
        for (Index p : seg.pixels) mask.values(p / width, p % width) = 1.0;
    }
    return mask;
}

bool SceneSpec::contains_class(int class_id) const {
    for (const auto& seg : segments)
        if (seg.class_id == class_id && !seg.pixels.empty()) return true;
    return false;
}

void DatasetSpec::validate() const {
    for (int b : base_ids)
        for (int n : novel_ids)
            if (b == n) throw ConfigError("base and novel class splits overlap");
    Index classes = static_cast<Index>(base_ids.size() + novel_ids.size()) + 1;
    if (class_embeddings.rows() != classes || class_embeddings.cols() != config.channels)
        throw DimensionError("DatasetSpec: embedding table shape mismatch");
}

DatasetSpec make_dataset(const DatasetConfig& config) {
    if (config.base_classes < 2) throw ConfigError("need at least 2 base classes");
    if (config.novel_classes < 2) throw ConfigError("need at least 2 novel classes");
    if (config.channels < 1 || config.height < 1 || config.width < 1)
        throw ConfigError("non-positive dataset dimensions");
    if (config.sigma_sam < 0 || config.sigma_img < 0 || config.sigma_pix < 0)
        throw ConfigError("negative noise scale");

    DatasetSpec ds;
    ds.config = config;
    ds.base_ids.resize(static_cast<std::size_t>(config.base_classes));
    std::iota(ds.base_ids.begin(), ds.base_ids.end(), 0);
    ds.novel_ids.resize(static_cast<std::size_t>(config.novel_classes));
    std::iota(ds.novel_ids.begin(), ds.novel_ids.end(), config.base_classes);

    Rng rng(config.seed);
    int classes = config.base_classes + config.novel_classes + 1;
    ds.class_embeddings.resize(classes, config.channels);
    for (int c = 0; c < classes; ++c)
        ds.class_embeddings.row(c) = unit_gaussian_vector(config.channels, rng).transpose();
    ds.validate();
    return ds;
}

namespace {

struct Shape {
    int class_id;
    bool ellipse;
    int cy, cx, ry, rx;  // center and half-extents
};

Shape random_shape(const DatasetSpec& ds, std::span<const int> pool, Rng& rng) {
    const auto& cfg = ds.config;
    Shape s;
    s.class_id = pool[static_cast<std::size_t>(uniform_int(rng, 0, std::ssize(pool) - 1))];
    s.ellipse = uniform_int(rng, 0, 1) == 1;
    s.cy = static_cast<int>(uniform_int(rng, 0, cfg.height - 1));
    s.cx = static_cast<int>(uniform_int(rng, 0, cfg.width - 1));
    s.ry = static_cast<int>(uniform_int(rng, 2, std::max(2, cfg.height / 3)));
    s.rx = static_cast<int>(uniform_int(rng, 2, std::max(2, cfg.width / 3)));
    return s;
}

void paint(const Shape& s, int id, int height, int width, std::vector<int>& segment_of) {
    for (int r = std::max(0, s.cy - s.ry); r <= std::min(height - 1, s.cy + s.ry); ++r)
        for (int c = std::max(0, s.cx - s.rx); c <= std::min(width - 1, s.cx + s.rx); ++c) {
            if (s.ellipse) {
                double dy = static_cast<double>(r - s.cy) / s.ry;
                double dx = static_cast<double>(c - s.cx) / s.rx;
                if (dy * dy + dx * dx > 1.0) continue;
            }
            segment_of[static_cast<std::size_t>(r) * width + c] = id;
        }
}

SceneSpec assemble(const DatasetSpec& ds, const std::vector<Shape>& shapes,
                   const std::vector<int>& segment_of) {
    const auto& cfg = ds.config;
    SceneSpec scene;
    scene.height = cfg.height;
    scene.width = cfg.width;
    scene.background_class = ds.background_class();

    std::vector<Segment> segments(shapes.size() + 1);
    segments[0].class_id = scene.background_class;
    for (std::size_t i = 0; i < shapes.size(); ++i)
        segments[i + 1].class_id = shapes[i].class_id;
    auto total = static_cast<Index>(cfg.height) * cfg.width;
    for (Index p = 0; p < total; ++p)
        segments[static_cast<std::size_t>(segment_of[static_cast<std::size_t>(p)])]
            .pixels.push_back(p);
    for (auto& seg : segments)
        if (!seg.pixels.empty()) scene.segments.push_back(std::move(seg));
    return scene;
}

SceneSpec try_scene(const DatasetSpec& ds, std::span<const int> pool, Rng& rng,
                    int forced_class) {
    const auto& cfg = ds.config;
    int n_shapes = static_cast<int>(uniform_int(rng, 1, 3));
    std::vector<Shape> shapes;
    shapes.reserve(static_cast<std::size_t>(n_shapes));
    int forced_slot = forced_class < 0
                          ? -1
                          : static_cast<int>(uniform_int(rng, 0, n_shapes - 1));
    for (int i = 0; i < n_shapes; ++i) {
        Shape s = random_shape(ds, pool, rng);
        if (i == forced_slot) s.class_id = forced_class;
        shapes.push_back(s);
    }

    // segment id 0 = background, shape i -> id i+1; later shapes overwrite.
    std::vector<int> segment_of(static_cast<std::size_t>(cfg.height) * cfg.width, 0);
    for (std::size_t i = 0; i < shapes.size(); ++i)
        paint(shapes[i], static_cast<int>(i) + 1, cfg.height, cfg.width, segment_of);
    return assemble(ds, shapes, segment_of);
}

}  // namespace

SceneSpec random_scene(const DatasetSpec& dataset, std::span<const int> class_pool, Rng& rng) {
    if (class_pool.empty()) throw ConfigError("random_scene: empty class pool");
    for (int attempt = 0; attempt < 100; ++attempt) {
        SceneSpec scene = try_scene(dataset, class_pool, rng, -1);
        bool has_fg = false;
        for (const auto& seg : scene.segments)
            if (seg.class_id != scene.background_class && !seg.pixels.empty()) has_fg = true;
        if (has_fg) return scene;
    }
    throw SamplingError("random_scene: no foreground after 100 attempts");
}

SceneSpec scene_containing(const DatasetSpec& dataset, int target_class,
                           std::span<const int> class_pool, Rng& rng) {
    if (class_pool.empty()) throw ConfigError("scene_containing: empty class pool");
    if (target_class < 0 || target_class >= dataset.background_class())
        throw ConfigError("scene_containing: class id outside universe");
    for (int attempt = 0; attempt < 100; ++attempt) {
        SceneSpec scene = try_scene(dataset, class_pool, rng, target_class);
        if (scene.contains_class(target_class)) return scene;
    }
    throw SamplingError("scene_containing: target class occluded in 100 attempts");
}

RenderedScene render_features(const SceneSpec& scene, const DatasetSpec& dataset,
                              int target_class, Rng& rng) {
    scene.validate();
    const auto& cfg = dataset.config;
    if (scene.height != cfg.height || scene.width != cfg.width)
        throw DimensionError("render_features: scene grid does not match dataset");
    for (const auto& seg : scene.segments)
        if (seg.class_id < 0 || seg.class_id > dataset.background_class())
            throw ConfigError("render_features: class id outside universe");
    if (target_class < 0 || target_class >= dataset.background_class())
        throw ConfigError("render_features: target class outside universe");

    int C = cfg.channels;
    RenderedScene out;
    out.sam_like = FeatureMap(C, scene.height, scene.width);
    out.backbone_like = FeatureMap(C, scene.height, scene.width);

    for (const auto& seg : scene.segments) {
        Vector segment_embed = unit_gaussian_vector(C, rng);
        Vector image_shift = unit_gaussian_vector(C, rng);
        Vector class_embed = dataset.class_embeddings.row(seg.class_id).transpose();
        for (Index p : seg.pixels) {
            Vector sam = segment_embed + cfg.sigma_sam * unit_gaussian_vector(C, rng);
            Vector bb = class_embed + cfg.sigma_img * image_shift +
                        cfg.sigma_pix * unit_gaussian_vector(C, rng);
            out.sam_like.values.col(p) = sam / sam.norm();
            out.backbone_like.values.col(p) = bb / bb.norm();
        }
    }
    out.gt_mask = scene.class_mask(target_class);
    return out;
}

ComplementarityStats complementarity_stats(const DatasetSpec& dataset, int n_scenes, Rng& rng) {
    if (n_scenes < 2) throw ConfigError("complementarity_stats: need at least 2 scenes");

    std::vector<int> all_ids = dataset.base_ids;
    all_ids.insert(all_ids.end(), dataset.novel_ids.begin(), dataset.novel_ids.end());

    struct SceneSummary {
        int class_id;
        Vector sam_fg, sam_bg, bb_fg, bb_bg;
        bool has_bg;
    };
    std::vector<SceneSummary> summaries;
    summaries.reserve(static_cast<std::size_t>(n_scenes));

    for (int i = 0; i < n_scenes; ++i) {
        int cls = all_ids[static_cast<std::size_t>(uniform_int(rng, 0, std::ssize(all_ids) - 1))];
        SceneSpec scene = scene_containing(dataset, cls, all_ids, rng);
        RenderedScene r = render_features(scene, dataset, cls, rng);

        SceneSummary s;
        s.class_id = cls;
        Index fg = 0, bg = 0;
        s.sam_fg = Vector::Zero(dataset.config.channels);
        s.sam_bg = Vector::Zero(dataset.config.channels);
        s.bb_fg = Vector::Zero(dataset.config.channels);
        s.bb_bg = Vector::Zero(dataset.config.channels);
        for (Index p = 0; p < r.gt_mask.pixel_count(); ++p) {
            bool in_fg = r.gt_mask.values(p / scene.width, p % scene.width) >= 0.5;
            (in_fg ? s.sam_fg : s.sam_bg) += r.sam_like.values.col(p);
            (in_fg ? s.bb_fg : s.bb_bg) += r.backbone_like.values.col(p);
            (in_fg ? fg : bg) += 1;
        }
        s.sam_fg /= static_cast<double>(fg);
        s.bb_fg /= static_cast<double>(fg);
        s.has_bg = bg > 0;
        if (s.has_bg) {
            s.sam_bg /= static_cast<double>(bg);
            s.bb_bg /= static_cast<double>(bg);
        }
        summaries.push_back(std::move(s));
    }

    ComplementarityStats stats;
    int within = 0;
    for (const auto& s : summaries) {
        if (!s.has_bg) continue;
        stats.sam_fg_fg += s.sam_fg.dot(s.sam_fg);
        stats.sam_fg_bg += s.sam_fg.dot(s.sam_bg);
        stats.backbone_fg_fg += s.bb_fg.dot(s.bb_fg);
        stats.backbone_fg_bg += s.bb_fg.dot(s.bb_bg);
        ++within;
    }
    if (within == 0) throw DegenerateInputError("complementarity_stats: no scene with background");
    stats.sam_fg_fg /= within;
    stats.sam_fg_bg /= within;
    stats.backbone_fg_fg /= within;
    stats.backbone_fg_bg /= within;

    int same = 0, cross = 0;
    for (std::size_t i = 0; i < summaries.size(); ++i)
        for (std::size_t j = i + 1; j < summaries.size(); ++j) {
            const auto& a = summaries[i];
            const auto& b = summaries[j];
            double sam = a.sam_fg.dot(b.sam_fg);
            double bb = a.bb_fg.dot(b.bb_fg);
            if (a.class_id == b.class_id) {
                stats.sam_same_class += sam;
                stats.backbone_same_class += bb;
                ++same;
            } else {
                stats.sam_cross_class += sam;
                stats.backbone_cross_class += bb;
                ++cross;
            }
        }
    if (same == 0 || cross == 0)
        throw DegenerateInputError("complementarity_stats: need both same- and cross-class pairs");
    stats.sam_same_class /= same;
    stats.backbone_same_class /= same;
    stats.sam_cross_class /= cross;
    stats.backbone_cross_class /= cross;
    return stats;
}

}  // namespace fcp
