#pragma once

#include "fcp/tensor.hpp"

namespace fcp {

/// C x H x W feature volume stored channel-major: row c holds channel c over
/// the H*W pixels in row-major pixel order.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    Matrix values;  // channels x (height * width)

    FeatureMap() = default;
    FeatureMap(int c, int h, int w) : channels(c), height(h), width(w) {
        values = Matrix::Zero(c, static_cast<Index>(h) * w);
    }
    FeatureMap(int c, int h, int w, Matrix v)
        : channels(c), height(h), width(w), values(std::move(v)) {
        if (values.rows() != c || values.cols() != static_cast<Index>(h) * w)
            throw DimensionError("FeatureMap: value matrix does not match C x (H*W)");
        if (!values.allFinite()) throw ContractError("FeatureMap: non-finite values");
    }

    Index pixel_count() const { return static_cast<Index>(height) * width; }

    Tensor as_tensor() const {
        Tensor t = Tensor::constant(values);
        t.reshape({channels, height, width});
        return t;
    }
};

}  // namespace fcp
