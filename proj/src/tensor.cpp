#include "fcp/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace fcp {

namespace detail {

void Node::accumulate(const Matrix& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    grad += g;
}

Tensor make_node(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                 std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backprop = std::move(backprop);
    n->shape = {n->value.rows(), n->value.cols()};
    return Tensor(n);
}

namespace {

// Post-order over the ancestor DAG, iterative to keep deep graphs safe.
// Traversal order is fixed by the parent lists, so repeated sweeps over the
// same graph are bit-identical.
std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

}  // namespace detail

Tensor Tensor::constant(Matrix v) {
    auto n = std::make_shared<detail::Node>();
    n->shape = {v.rows(), v.cols()};
    n->value = std::move(v);
    return Tensor(n);
}

Tensor Tensor::variable(Matrix v) {
    auto n = std::make_shared<detail::Node>();
    n->shape = {v.rows(), v.cols()};
    n->value = std::move(v);
    n->requires_grad = true;
    return Tensor(n);
}

Tensor Tensor::scalar_constant(Scalar v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
}

Matrix Tensor::grad() const {
    if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
    return node_->grad;
}

Tensor& Tensor::reshape(std::vector<Index> dims) {
    Index prod = 1;
    for (Index d : dims) {
        if (d <= 0) throw ContractError("reshape: dimensions must be positive");
        prod *= d;
    }
    if (prod != size() || dims.empty() || dims[0] != rows())
        throw DimensionError("reshape: incompatible dimensions");
    node_->shape = std::move(dims);
    return *this;
}

void Tensor::backward() {
    if (size() != 1) throw ContractError("backward: loss must be scalar");
    if (!node_->requires_grad) return;
    auto order = detail::topo_order(node_.get());
    // Interior grads are per-sweep scratch; only leaves accumulate across
    // calls, so repeated backward() adds one copy of the gradient each time.
    for (detail::Node* n : order)
        if (!n->parents.empty() && n->grad.size() != 0) n->grad.setZero();
    node_->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backprop && n->grad.size() != 0) n->backprop(*n);
    }
}

void Tensor::zero_all_grads() {
    auto order = detail::topo_order(node_.get());
    for (detail::Node* n : order)
        if (n->grad.size() != 0) n->grad.setZero();
}

}  // namespace fcp
