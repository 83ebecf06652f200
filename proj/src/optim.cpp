#include "fcp/optim.hpp"

#include <cmath>

namespace fcp {

Parameter::Parameter(std::string name, Matrix init) : name(std::move(name)) {
    moment1 = Matrix::Zero(init.rows(), init.cols());
    moment2 = Matrix::Zero(init.rows(), init.cols());
    tensor = Tensor::variable(std::move(init));
}

Parameter::Parameter(std::string name, Tensor leaf) : name(std::move(name)), tensor(std::move(leaf)) {
    if (!tensor.defined() || !tensor.requires_grad())
        throw ContractError("Parameter: leaf must be a differentiable variable");
    moment1 = Matrix::Zero(tensor.rows(), tensor.cols());
    moment2 = Matrix::Zero(tensor.rows(), tensor.cols());
}

void Parameter::zero_grad() {
    if (tensor.node()->grad.size() != 0) tensor.node()->grad.setZero();
}

void adam_step(std::span<Parameter*> params, const AdamConfig& cfg) {
    if (cfg.lr <= 0) throw ContractError("adam_step: lr must be positive");
    if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
        throw ContractError("adam_step: betas must lie in [0, 1)");
    for (Parameter* p : params) {
        const Matrix g = p->tensor.grad();
        p->step += 1;
        p->moment1 = cfg.beta1 * p->moment1 + (1 - cfg.beta1) * g;
        p->moment2 = cfg.beta2 * p->moment2 + (1 - cfg.beta2) * g.cwiseProduct(g);
        const Scalar c1 = 1 - std::pow(cfg.beta1, static_cast<Scalar>(p->step));
        const Scalar c2 = 1 - std::pow(cfg.beta2, static_cast<Scalar>(p->step));
        Matrix& v = p->tensor.mutable_value();
        const ArrayXX update =
            (p->moment1.array() / c1) / ((p->moment2.array() / c2).sqrt() + cfg.eps);
        v.array() -= cfg.lr * (update + cfg.weight_decay * v.array());
    }
}

void zero_grads(std::span<Parameter*> params) {
    for (Parameter* p : params) p->zero_grad();
}

Scalar cosine_lr(std::int64_t step, std::int64_t total, Scalar lr0) {
    if (step < 0 || step > total) throw ContractError("cosine_lr: step outside [0, total]");
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<Scalar>(step) / static_cast<Scalar>(total)));
}

}  // namespace fcp
