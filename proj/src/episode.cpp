#include "fcp/episode.hpp"

#include "fcp/errors.hpp"

namespace fcp {

namespace {

Shot sample_shot(const DatasetSpec& dataset, int class_id, std::span<const int> pool, Rng& rng) {
    SceneSpec scene = scene_containing(dataset, class_id, pool, rng);
    RenderedScene r = render_features(scene, dataset, class_id, rng);
    Shot shot;
    shot.sam = std::move(r.sam_like);
    shot.backbone = std::move(r.backbone_like);
    shot.mask = std::move(r.gt_mask);
    shot.mask.binary = true;
    if (shot.mask.empty_foreground())
        throw SamplingError("sample_episode: scene lost its foreground");
    return shot;
}

}  // namespace

Episode sample_episode(const DatasetSpec& dataset, Phase phase, int shots, Rng& rng) {
    if (shots < 1) throw ConfigError("sample_episode: shots must be >= 1");
    const std::vector<int>& pool = phase == Phase::Base ? dataset.base_ids : dataset.novel_ids;
    if (pool.empty()) throw ConfigError("sample_episode: phase split is empty");

    Episode ep;
    ep.phase = phase;
    ep.class_id = pool[static_cast<std::size_t>(uniform_int(rng, 0, std::ssize(pool) - 1))];
    for (int k = 0; k < shots; ++k)
        ep.support.push_back(sample_shot(dataset, ep.class_id, pool, rng));
    ep.query = sample_shot(dataset, ep.class_id, pool, rng);
    return ep;
}

}  // namespace fcp
