#pragma once

#include "fcp/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace fcp {

/// A differentiable leaf plus its AdamW state.
struct Parameter {
    std::string name;
    Tensor tensor;      // variable leaf, reused across episode graphs
    Matrix moment1;     // first-moment buffer, shaped like the tensor
    Matrix moment2;     // second-moment buffer
    std::int64_t step = 0;

    Parameter() = default;
    Parameter(std::string name, Matrix init);
    /// Adopts an existing differentiable leaf; updates write through to it.
    Parameter(std::string name, Tensor leaf);

    void zero_grad();
};

struct AdamConfig {
    Scalar lr = 2e-4;
    Scalar beta1 = 0.9;
    Scalar beta2 = 0.999;
    Scalar eps = 1e-8;
    Scalar weight_decay = 1e-4;  // decoupled, applied to parameters
};

/// One bias-corrected AdamW update over each parameter's accumulated
/// gradient.  Gradients are left untouched; call zero_grad separately.
void adam_step(std::span<Parameter*> params, const AdamConfig& cfg);

void zero_grads(std::span<Parameter*> params);

/// lr0 * 0.5 * (1 + cos(pi * step / total)).
Scalar cosine_lr(std::int64_t step, std::int64_t total, Scalar lr0);

}  // namespace fcp
