#include "fcp/pseudomask.hpp"

#include <vector>

#include "fcp/errors.hpp"

namespace fcp {

Mask conventional_pseudo_mask(const FeatureMap& f_query, const FeatureMap& f_support,
                              const Mask& m_support) {
    if (f_query.channels != f_support.channels)
        throw DimensionError("conventional_pseudo_mask: channel mismatch");
    if (m_support.height != f_support.height || m_support.width != f_support.width)
        throw DimensionError("conventional_pseudo_mask: support mask shape mismatch");
    for (int r = 0; r < m_support.height; ++r)
        for (int c = 0; c < m_support.width; ++c) {
            double v = m_support.values(r, c);
            if (v != 0.0 && v != 1.0)
                throw ContractError("conventional_pseudo_mask: support mask must be binary");
        }

    std::vector<Index> fg;
    for (Index p = 0; p < m_support.pixel_count(); ++p)
        if (m_support.values(p / m_support.width, p % m_support.width) == 1.0)
            fg.push_back(p);
    if (fg.empty())
        throw DegenerateEpisodeError("conventional_pseudo_mask: empty support foreground");

    // Cosine of every (query pixel, support foreground pixel) pair at once:
    // normalize columns, one matrix product, rowwise max.
    auto normalized = [](const Matrix& m, const char* side) {
        Matrix out = m;
        for (Index c = 0; c < out.cols(); ++c) {
            double norm = out.col(c).norm();
            if (norm == 0.0)
                throw DegenerateInputError(std::string("conventional_pseudo_mask: zero ") +
                                           side + " feature vector");
            out.col(c) /= norm;
        }
        return out;
    };
    Matrix q_hat = normalized(f_query.values, "query");
    Matrix s_fg(f_support.values.rows(), static_cast<Index>(fg.size()));
    for (std::size_t i = 0; i < fg.size(); ++i) s_fg.col(static_cast<Index>(i)) = f_support.values.col(fg[i]);
    s_fg = normalized(s_fg, "support");

    Matrix cos = q_hat.transpose() * s_fg;  // P_query x |FG|
    Mask out = Mask::zeros(f_query.height, f_query.width);
    for (Index q = 0; q < f_query.pixel_count(); ++q) {
        double best = std::clamp(cos.row(q).maxCoeff(), -1.0, 1.0);
        out.values(q / f_query.width, q % f_query.width) = (best + 1.0) / 2.0;
    }
    return out;
}

Tensor attention_mask(const Tensor& weights) {
    return max_normalize(colwise_max(weights));
}

Mask normalize_mask(const Mask& m) {
    double max = m.values.maxCoeff();
    if (m.values.minCoeff() < 0.0)
        throw ContractError("normalize_mask: negative values");
    Mask out = m;
    out.binary = false;
    if (max > 0.0) out.values /= max;
    return out;
}

}  // namespace fcp
