#include "fcp/losses.hpp"

#include "fcp/errors.hpp"

namespace fcp {

void LossConfig::validate() const {
    if (lambda_ortho < 0 || lambda_guide < 0)
        throw ConfigError("LossConfig: negative loss weight");
    if (!(eps > 0 && eps < 0.5)) throw ConfigError("LossConfig: eps must be in (0, 0.5)");
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor bce_loss(const Tensor& pred, const Tensor& gt, Scalar eps) {
    check_same_shape(pred, gt, "bce_loss");
    if (!(eps > 0 && eps < 0.5)) throw ConfigError("bce_loss: eps must be in (0, 0.5)");
    Tensor p = clamp(pred, eps, 1.0 - eps);
    Tensor ones = Tensor::constant(Matrix::Ones(pred.rows(), pred.cols()));
    Tensor pos = mul(gt, log(p));
    Tensor neg = mul(sub(ones, gt), log(sub(ones, p)));
    return mul_scalar(sum(add(pos, neg)), -1.0 / static_cast<Scalar>(pred.size()));
}

Tensor dice_loss(const Tensor& pred, const Tensor& gt) {
    check_same_shape(pred, gt, "dice_loss");
    Scalar denom_value = gt.value().squaredNorm() + pred.value().squaredNorm();
    if (denom_value == 0.0) return Tensor::scalar_constant(0.0);
    Tensor overlap = mul_scalar(sum(mul(pred, gt)), 2.0);
    Tensor denom = add(sum(mul(gt, gt)), sum(mul(pred, pred)));
    Tensor one = Tensor::scalar_constant(1.0);
    return sub(one, div(overlap, denom));
}

Tensor guide_loss(const std::vector<Tensor>& attention_masks, const Tensor& m_q, Scalar eps) {
    if (attention_masks.empty()) throw ContractError("guide_loss: no attention masks");
    Tensor total = Tensor::scalar_constant(0.0);
    for (const Tensor& m : attention_masks)
        total = add(total, add(bce_loss(m, m_q, eps), dice_loss(m, m_q)));
    return mul_scalar(total, 1.0 / static_cast<Scalar>(attention_masks.size()));
}

Tensor prompt_loss(const Tensor& m_pred, const Tensor& m_q, Scalar eps) {
    return add(bce_loss(m_pred, m_q, eps), dice_loss(m_pred, m_q));
}

namespace {

/// Sum over ordered pairs i != j of cos(row_i, row_j) for one record.
Tensor pairwise_cosine_sum(const Tensor& weights) {
    Index n = weights.rows();
    Matrix row_norms = weights.value().rowwise().norm();
    for (Index i = 0; i < n; ++i)
        if (row_norms(i, 0) <= 0.0)
            throw DegenerateInputError("ortho_loss: all-zero attention map");

    Tensor norms = sqrt(rowwise_sum(mul(weights, weights)));        // N x 1
    Tensor unit = div(weights, broadcast_cols(norms, weights.cols()));
    Tensor gram = matmul(unit, transpose(unit));                    // N x N
    // Subtract the computed diagonal rather than its ideal value n so that
    // rounding in the normalization cannot leak into the off-diagonal sum;
    // disjoint-support rows then give exactly zero.
    Tensor diag = sum(mul(gram, Tensor::constant(Matrix::Identity(n, n))));
    return sub(sum(gram), diag);
}

}  // namespace

Tensor ortho_loss(const std::vector<AttentionRecord>& support_records,
                  const std::vector<AttentionRecord>& query_records, int steps,
                  bool include_final_step) {
    if (steps < 2) throw ContractError("ortho_loss: needs at least 2 steps");
    int used = include_final_step ? steps : steps - 1;
    if (std::ssize(support_records) < used)
        throw ContractError("ortho_loss: missing support attention records");
    if (!query_records.empty() && std::ssize(query_records) < used)
        throw ContractError("ortho_loss: missing query attention records");

    Tensor total = Tensor::scalar_constant(0.0);
    for (int t = 0; t < used; ++t) {
        total = add(total, pairwise_cosine_sum(support_records[static_cast<std::size_t>(t)].weights));
        if (!query_records.empty())
            total = add(total, pairwise_cosine_sum(query_records[static_cast<std::size_t>(t)].weights));
    }
    return mul_scalar(total, 1.0 / static_cast<Scalar>(used));
}

Tensor total_loss(const Tensor& prompt, const Tensor& guide, const Tensor& ortho,
                  const LossConfig& cfg) {
    cfg.validate();
    return add(prompt, add(mul_scalar(ortho, cfg.lambda_ortho),
                           mul_scalar(guide, cfg.lambda_guide)));
}

}  // namespace fcp
