#include "fcp/mask.hpp"

namespace fcp {

Mask::Mask(int h, int w, Matrix v, bool binary_flag)
    : height(h), width(w), values(std::move(v)), binary(binary_flag) {
    if (values.rows() != h || values.cols() != w)
        throw DimensionError("Mask: value matrix does not match height x width");
    if ((values.array() < 0).any() || (values.array() > 1).any())
        throw ContractError("Mask: values must lie in [0, 1]");
    if (binary && ((values.array() != 0) && (values.array() != 1)).any())
        throw ContractError("Mask: binary flag set but values are not 0/1");
}

Mask Mask::zeros(int h, int w) { return Mask(h, w, Matrix::Zero(h, w), true); }

Tensor Mask::as_row_tensor() const {
    return Tensor::constant(
        Eigen::Map<const Matrix>(values.data(), 1, values.size()));
}

Mask Mask::binarized(Scalar threshold) const {
    Matrix b = (values.array() >= threshold).cast<Scalar>();
    return Mask(height, width, std::move(b), true);
}

Mask mask_from_row(const Matrix& row, int height, int width, bool binary_flag) {
    if (row.size() != static_cast<Index>(height) * width)
        throw DimensionError("mask_from_row: size does not match height x width");
    return Mask(height, width, Eigen::Map<const Matrix>(row.data(), height, width), binary_flag);
}

MaskMetrics mask_metrics(const Mask& pred, const Mask& gt, Scalar threshold) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw DimensionError("mask_metrics: mask shapes differ");
    if (!gt.binary) throw ContractError("mask_metrics: ground truth must be binary");

    const auto p = (pred.values.array() >= threshold);
    const auto g = (gt.values.array() != 0);
    const Scalar inter = (p && g).cast<Scalar>().sum();
    const Scalar p_area = p.cast<Scalar>().sum();
    const Scalar g_area = g.cast<Scalar>().sum();
    const Scalar uni = p_area + g_area - inter;

    auto ratio = [](Scalar num, Scalar den) {
        if (den == 0) return num == 0 ? 1.0 : 0.0;  // both empty counts as a match
        return num / den;
    };
    MaskMetrics m;
    m.iou = ratio(inter, uni);
    m.precision = ratio(inter, p_area);
    m.recall = ratio(inter, g_area);
    return m;
}

}  // namespace fcp
