#pragma once

// Epoch-indexed random-access view used by training-loop adapters. get()
// returns exactly the pixels `generate` writes for the same (config, epoch,
// index). Concurrent get() calls are safe; set_epoch() must not race them.

#include <cstddef>
#include <memory>

#include "foraug/asset_store.hpp"
#include "foraug/compositor.hpp"
#include "foraug/recombiner.hpp"

namespace foraug {

struct DatasetItem {
    RgbImage image;
    int class_id = 0;
    SamplePlan plan;
};

class Dataset {
public:
    /// `manifest` must already be pruned; `images` must outlive the dataset.
    Dataset(const AssetManifest& manifest, RecombinationConfig config, const AssetImages& images)
        : manifest_(&manifest), config_(std::move(config)), images_(&images),
          pipeline_(make_pipeline(config_.augment, config_.image_size)) {
        config_.validate();
    }

    std::size_t size() const noexcept { return manifest_->foregrounds.size(); }
    std::int64_t epoch() const noexcept { return epoch_; }
    void set_epoch(std::int64_t e) {
        if (e < 0 || e >= config_.total_epochs) {
            throw InputError("epoch " + std::to_string(e) + " outside [0, " + std::to_string(config_.total_epochs) + ")");
        }
        epoch_ = e;
    }

    DatasetItem get(std::size_t index) const { return get(epoch_, index); }

    DatasetItem get(std::int64_t epoch, std::size_t index) const {
        if (index >= size()) {
            throw InputError("index " + std::to_string(index) + " out of range for dataset of size " +
                             std::to_string(size()));
        }
        DatasetItem item;
        item.plan = plan_sample(*manifest_, config_, epoch, index);
        item.class_id = manifest_->foregrounds[item.plan.fg_index].class_id;
        item.image = render(item.plan, *manifest_, config_, pipeline_, *images_);
        return item;
    }

    const RecombinationConfig& config() const noexcept { return config_; }

private:
    const AssetManifest* manifest_;
    RecombinationConfig config_;
    const AssetImages* images_;
    AugPipeline pipeline_;
    std::int64_t epoch_ = 0;
};

} // namespace foraug
