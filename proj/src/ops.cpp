#include "fcp/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fcp {

namespace {

using detail::Node;
using detail::make_node;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + " differ");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    return make_node(a.value() + b.value(), {a.node(), b.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(n.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    return make_node(a.value() - b.value(), {a.node(), b.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(-n.grad);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    return make_node(a.value().cwiseProduct(b.value()), {a.node(), b.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad.cwiseProduct(n.parents[1]->value));
        n.parents[1]->accumulate(n.grad.cwiseProduct(n.parents[0]->value));
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div");
    return make_node(a.value().cwiseQuotient(b.value()), {a.node(), b.node()}, [](Node& n) {
        const Matrix& bv = n.parents[1]->value;
        n.parents[0]->accumulate(n.grad.cwiseQuotient(bv));
        n.parents[1]->accumulate(
            -n.grad.cwiseProduct(n.parents[0]->value).cwiseQuotient(bv.cwiseProduct(bv)));
    });
}

Tensor add_scalar(const Tensor& a, Scalar c) {
    return make_node(a.value().array() + c, {a.node()},
                     [](Node& n) { n.parents[0]->accumulate(n.grad); });
}

Tensor mul_scalar(const Tensor& a, Scalar c) {
    return make_node(a.value() * c, {a.node()},
                     [c](Node& n) { n.parents[0]->accumulate(n.grad * c); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " differ");
    return make_node(a.value() * b.value(), {a.node(), b.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad * n.parents[1]->value.transpose());
        n.parents[1]->accumulate(n.parents[0]->value.transpose() * n.grad);
    });
}

Tensor transpose(const Tensor& a) {
    return make_node(a.value().transpose(), {a.node()},
                     [](Node& n) { n.parents[0]->accumulate(n.grad.transpose()); });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: empty input");
    const Index cols = parts[0].cols();
    Index rows = 0;
    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) {
        if (p.cols() != cols) throw DimensionError("concat_rows: column counts differ");
        rows += p.rows();
        parents.push_back(p.node());
    }
    Matrix out(rows, cols);
    Index r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p.rows()) = p.value();
        r += p.rows();
    }
    return make_node(std::move(out), std::move(parents), [](Node& n) {
        Index r = 0;
        for (auto& p : n.parents) {
            p->accumulate(n.grad.middleRows(r, p->value.rows()));
            r += p->value.rows();
        }
    });
}

Tensor broadcast_cols(const Tensor& a, Index cols) {
    if (a.cols() != 1) throw DimensionError("broadcast_cols: input must be a column");
    return make_node(a.value().replicate(1, cols), {a.node()},
                     [](Node& n) { n.parents[0]->accumulate(n.grad.rowwise().sum()); });
}

Tensor broadcast_scalar(const Tensor& a, Index rows, Index cols) {
    if (a.size() != 1) throw DimensionError("broadcast_scalar: input must be 1x1");
    return make_node(Matrix::Constant(rows, cols, a.value()(0, 0)), {a.node()}, [](Node& n) {
        Matrix g(1, 1);
        g(0, 0) = n.grad.sum();
        n.parents[0]->accumulate(g);
    });
}

Tensor add_colvec(const Tensor& m, const Tensor& b) {
    if (b.cols() != 1 || b.rows() != m.rows())
        throw DimensionError("add_colvec: bias must be a column matching the rows");
    Matrix out = m.value();
    out.colwise() += Eigen::Map<const Vector>(b.value().data(), b.rows());
    return make_node(std::move(out), {m.node(), b.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(n.grad.rowwise().sum());
    });
}

Tensor rowwise_sum(const Tensor& a) {
    return make_node(a.value().rowwise().sum(), {a.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad.replicate(1, n.parents[0]->value.cols()));
    });
}

Tensor sum(const Tensor& a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return make_node(std::move(out), {a.node()}, [](Node& n) {
        const Matrix& v = n.parents[0]->value;
        n.parents[0]->accumulate(Matrix::Constant(v.rows(), v.cols(), n.grad(0, 0)));
    });
}

Tensor reduce_max(const Tensor& a) {
    Index ar = 0, ac = 0;
    Matrix out(1, 1);
    out(0, 0) = a.value().maxCoeff(&ar, &ac);
    return make_node(std::move(out), {a.node()}, [ar, ac](Node& n) {
        const Matrix& v = n.parents[0]->value;
        Matrix g = Matrix::Zero(v.rows(), v.cols());
        g(ar, ac) = n.grad(0, 0);
        n.parents[0]->accumulate(g);
    });
}

Tensor colwise_max(const Tensor& a) {
    const Matrix& v = a.value();
    Matrix out(1, v.cols());
    std::vector<Index> argrow(static_cast<size_t>(v.cols()));
    for (Index c = 0; c < v.cols(); ++c) {
        Index r = 0;
        out(0, c) = v.col(c).maxCoeff(&r);
        argrow[static_cast<size_t>(c)] = r;
    }
    return make_node(std::move(out), {a.node()}, [argrow](Node& n) {
        const Matrix& v = n.parents[0]->value;
        Matrix g = Matrix::Zero(v.rows(), v.cols());
        for (Index c = 0; c < v.cols(); ++c) g(argrow[static_cast<size_t>(c)], c) = n.grad(0, c);
        n.parents[0]->accumulate(g);
    });
}

namespace {

// Shared softmax kernel; an empty mask matrix means all columns live.
Tensor softmax_impl(const Tensor& logits, const Matrix& mask, Scalar scale, const char* op) {
    if (scale <= 0) throw ContractError(std::string(op) + ": scale must be positive");
    if (logits.cols() < 1) throw DimensionError(std::string(op) + ": needs at least one column");
    const bool masked = mask.size() != 0;
    if (masked) {
        if (mask.rows() != 1 || mask.cols() != logits.cols())
            throw DimensionError(std::string(op) + ": mask must be 1 x cols");
        if ((mask.array() != 0).count() == 0)
            throw DegenerateEpisodeError(std::string(op) + ": mask has no foreground");
    }

    const ArrayXX z = logits.value().array() / scale;
    constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
    ArrayXX s(z.rows(), z.cols());
    for (Index r = 0; r < z.rows(); ++r) {
        Scalar m = kNegInf;
        for (Index c = 0; c < z.cols(); ++c)
            if (!masked || mask(0, c) != 0) m = std::max(m, z(r, c));
        Scalar denom = 0;
        for (Index c = 0; c < z.cols(); ++c) {
            if (!masked || mask(0, c) != 0) {
                s(r, c) = std::exp(z(r, c) - m);
                denom += s(r, c);
            } else {
                s(r, c) = 0;
            }
        }
        s.row(r) /= denom;
    }
    return make_node(Matrix(s.matrix()), {logits.node()}, [scale](Node& n) {
        // d softmax: s .* (g - <g, s>_row), one more 1/scale from the logits.
        const ArrayXX s = n.value.array();
        const ArrayXX g = n.grad.array();
        Vector rowdot = (g * s).rowwise().sum();
        ArrayXX gx = s * (g.colwise() - rowdot.array()) / scale;
        n.parents[0]->accumulate(gx.matrix());
    });
}

}  // namespace

Tensor scaled_softmax(const Tensor& logits, Scalar scale) {
    return softmax_impl(logits, Matrix(), scale, "scaled_softmax");
}

Tensor masked_scaled_softmax(const Tensor& logits, const Matrix& mask, Scalar scale) {
    if (mask.size() == 0) throw ContractError("masked_scaled_softmax: empty mask");
    return softmax_impl(logits, mask, scale, "masked_scaled_softmax");
}

Tensor sqrt(const Tensor& a) {
    return make_node(a.value().array().sqrt().matrix(), {a.node()}, [](Node& n) {
        n.parents[0]->accumulate((n.grad.array() * 0.5 / n.value.array()).matrix());
    });
}

Tensor log(const Tensor& a) {
    return make_node(a.value().array().log().matrix(), {a.node()}, [](Node& n) {
        n.parents[0]->accumulate(n.grad.cwiseQuotient(n.parents[0]->value));
    });
}

Tensor clamp(const Tensor& a, Scalar lo, Scalar hi) {
    if (lo > hi) throw ContractError("clamp: lo > hi");
    return make_node(a.value().array().max(lo).min(hi).matrix(), {a.node()}, [lo, hi](Node& n) {
        const ArrayXX x = n.parents[0]->value.array();
        ArrayXX pass = ((x >= lo) && (x <= hi)).cast<Scalar>();
        n.parents[0]->accumulate((n.grad.array() * pass).matrix());
    });
}

Tensor sigmoid(const Tensor& a) {
    ArrayXX s = 1.0 / (1.0 + (-a.value().array()).exp());
    return make_node(s.matrix(), {a.node()}, [](Node& n) {
        const ArrayXX s = n.value.array();
        n.parents[0]->accumulate((n.grad.array() * s * (1.0 - s)).matrix());
    });
}

Tensor relu(const Tensor& a) {
    return make_node(a.value().cwiseMax(0.0), {a.node()}, [](Node& n) {
        ArrayXX pass = (n.parents[0]->value.array() > 0).cast<Scalar>();
        n.parents[0]->accumulate((n.grad.array() * pass).matrix());
    });
}

Tensor conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.cols() != x.rows())
        throw DimensionError("conv1x1: weight columns " + std::to_string(weight.cols()) +
                             " do not match input channels " + std::to_string(x.rows()));
    Tensor out = add_colvec(matmul(weight, x), bias);
    if (x.shape().size() == 3) out.reshape({weight.rows(), x.shape()[1], x.shape()[2]});
    return out;
}

Tensor max_normalize(const Tensor& a) {
    if ((a.value().array() < 0).any())
        throw ContractError("max_normalize: values must be nonnegative");
    if (a.value().maxCoeff() <= 0) return Tensor::constant(Matrix::Zero(a.rows(), a.cols()));
    Tensor mx = reduce_max(a);
    return div(a, broadcast_scalar(mx, a.rows(), a.cols()));
}

Scalar cosine_similarity(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
    if (u.size() != v.size()) throw DimensionError("cosine_similarity: lengths differ");
    const Scalar nu = u.norm(), nv = v.norm();
    if (nu == 0 || nv == 0) throw DegenerateInputError("cosine_similarity: zero vector");
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

}  // namespace fcp
