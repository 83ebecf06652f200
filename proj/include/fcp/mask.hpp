#pragma once

#include "fcp/tensor.hpp"

namespace fcp {

/// H x W map with values in [0, 1]; binary means values are exactly 0 or 1.
struct Mask {
    int height = 0;
    int width = 0;
    Matrix values;  // height x width
    bool binary = false;

    Mask() = default;
    Mask(int h, int w, Matrix v, bool binary_flag);

    static Mask zeros(int h, int w);

    Index pixel_count() const { return static_cast<Index>(height) * width; }
    Scalar foreground_sum() const { return values.sum(); }
    bool empty_foreground() const { return values.sum() == 0; }

    /// 1 x (H*W) row-major view as a constant graph leaf.
    Tensor as_row_tensor() const;
    /// Values at or above threshold become 1.
    Mask binarized(Scalar threshold) const;
};

/// Rebuilds an H x W mask from a 1 x (H*W) row tensor/matrix.
Mask mask_from_row(const Matrix& row, int height, int width, bool binary_flag = false);

struct MaskMetrics {
    Scalar iou = 0;
    Scalar precision = 0;
    Scalar recall = 0;
};

/// Binarizes pred at threshold and scores it against a binary ground truth.
/// Empty-denominator conventions: 0/0 -> 1, otherwise x/0 -> 0.
MaskMetrics mask_metrics(const Mask& pred, const Mask& gt, Scalar threshold);

}  // namespace fcp
