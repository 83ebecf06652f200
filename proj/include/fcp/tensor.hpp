#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "fcp/errors.hpp"

namespace fcp {

using Scalar = double;
using Index = Eigen::Index;

// Dense row-major storage throughout; matches the row-major/channel-major
// layout of the on-disk formats.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;  // empty until first accumulation; empty means all-zero
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad and accumulates into the parents' grads.
    std::function<void(Node&)> backprop;
    // Logical shape; trailing dimensions are flattened into the columns of
    // `value` (rows == shape[0], cols == product of the rest).
    std::vector<Index> shape;

    void accumulate(const Matrix& g);
};

}  // namespace detail

/// Handle to one node of a reverse-mode differentiation graph.  Copies are
/// shallow and share the node.  A graph is confined to one thread; distinct
/// graphs may run concurrently.
class Tensor {
public:
    Tensor() = default;

    /// Leaf that never accumulates gradient.
    static Tensor constant(Matrix v);
    /// Differentiable leaf.
    static Tensor variable(Matrix v);
    static Tensor scalar_constant(Scalar v);

    bool defined() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    /// Accumulated gradient; zeros if backward has not reached this node.
    Matrix grad() const;
    bool requires_grad() const { return node_->requires_grad; }

    Index rows() const { return node_->value.rows(); }
    Index cols() const { return node_->value.cols(); }
    Index size() const { return node_->value.size(); }

    const std::vector<Index>& shape() const { return node_->shape; }
    /// Re-tags the logical shape; the product must equal size() and the first
    /// dimension must equal rows().
    Tensor& reshape(std::vector<Index> dims);

    /// Reverse-mode sweep from a scalar; gradients accumulate across calls
    /// until zero_all_grads().
    void backward();
    /// Zeros the gradients of this node and every ancestor.
    void zero_all_grads();

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

namespace detail {

/// Builds an interior node; requires_grad is inherited from the parents.
Tensor make_node(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                 std::function<void(Node&)> backprop);

}  // namespace detail

}  // namespace fcp
