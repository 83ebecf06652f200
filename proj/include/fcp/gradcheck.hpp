#pragma once

#include "fcp/optim.hpp"
#include "fcp/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fcp {

struct GradCheckOptions {
    // Largest step; coordinates that fail are retried at h/10 and h/100.
    Scalar h = 1e-5;
    Scalar tol = 1e-4;
    // Coordinates checked per parameter; <= 0 means every coordinate.
    int samples_per_param = -1;
    // Denominator floor: gradients smaller than this are compared absolutely,
    // so finite-difference roundoff on near-zero coordinates cannot fail them.
    Scalar floor = 1e-6;
    std::uint64_t seed = 0x5eed;
};

struct GradCheckEntry {
    std::string param;
    Index coord = 0;
    Scalar analytic = 0;
    Scalar numeric = 0;
    Scalar rel_error = 0;
};

struct GradCheckReport {
    Scalar max_rel_error = 0;
    bool pass = false;
    std::int64_t checked = 0;
    GradCheckEntry worst;
};

/// Compares reverse-mode gradients of a scalar loss against central finite
/// differences (f(p+h) - f(p-h)) / 2h, per sampled coordinate.  make_loss must
/// rebuild the graph from the parameters' current values on every call.
///
/// The loss is piecewise smooth (relu, hard max), so a step that straddles an
/// activation switch measures a blend of two slopes and no step size makes the
/// difference quotient match the one-sided derivative.  Each failing
/// coordinate is therefore retried with a smaller step: shrinking h steps off
/// the crossing, while a genuinely wrong gradient keeps failing at every h.
GradCheckReport grad_check(const std::function<Tensor()>& make_loss, std::span<Parameter*> params,
                           const GradCheckOptions& opts = {});

}  // namespace fcp
