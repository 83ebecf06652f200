#pragma once

#include "fcp/tensor.hpp"

#include <initializer_list>
#include <vector>

namespace fcp {

// Differentiable primitives.  Free functions building graph nodes; each
// documents its gradient only where it is not the obvious one.

// Elementwise, same shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, Scalar c);
Tensor mul_scalar(const Tensor& a, Scalar c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Vertical stack; all inputs must share a column count.
Tensor concat_rows(const std::vector<Tensor>& parts);

/// n x 1 column replicated to n x cols.
Tensor broadcast_cols(const Tensor& a, Index cols);
/// 1 x 1 scalar replicated to rows x cols.
Tensor broadcast_scalar(const Tensor& a, Index rows, Index cols);
/// Adds an n x 1 column vector to every column of an n x P matrix.
Tensor add_colvec(const Tensor& m, const Tensor& b);

Tensor rowwise_sum(const Tensor& a);  // n x P -> n x 1
Tensor sum(const Tensor& a);          // -> 1 x 1

/// Full max -> 1 x 1.  Gradient routes to the first maximizer in row-major
/// scan order.
Tensor reduce_max(const Tensor& a);
/// Per-column max over rows, N x P -> 1 x P; gradient to the first maximizer
/// of each column.
Tensor colwise_max(const Tensor& a);

/// Softmax of logits/scale along each row, stabilized by max-subtraction.
Tensor scaled_softmax(const Tensor& logits, Scalar scale);
/// Same, restricted to columns where mask != 0; masked columns are exactly 0.
/// mask is a 1 x P binary constant (it conditions, it is not differentiated).
Tensor masked_scaled_softmax(const Tensor& logits, const Matrix& mask, Scalar scale);

Tensor sqrt(const Tensor& a);
Tensor log(const Tensor& a);
/// Gradient passes where lo <= x <= hi and is zero outside.
Tensor clamp(const Tensor& a, Scalar lo, Scalar hi);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

/// Per-pixel affine map over the flattened pixels: weight * x + bias.
/// x is Cin x P, weight Cout x Cin, bias Cout x 1.
Tensor conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Divides by the max entry; an all-zero input maps to all zeros with no
/// gradient path.  Values must be nonnegative.
Tensor max_normalize(const Tensor& a);

/// Plain cosine similarity of two equal-length vectors, clamped to [-1, 1].
/// Throws DegenerateInputError on a zero vector.
Scalar cosine_similarity(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, Scalar c) { return mul_scalar(a, c); }
inline Tensor operator*(Scalar c, const Tensor& a) { return mul_scalar(a, c); }

}  // namespace fcp
