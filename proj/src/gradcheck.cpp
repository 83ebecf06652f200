#include "fcp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace fcp {

GradCheckReport grad_check(const std::function<Tensor()>& make_loss, std::span<Parameter*> params,
                           const GradCheckOptions& opts) {
    if (opts.h <= 0) throw ContractError("grad_check: h must be positive");

    // Analytic sweep once, from clean gradients.
    zero_grads(params);
    Tensor loss = make_loss();
    loss.backward();
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->tensor.grad());

    auto eval = [&]() { return make_loss().value()(0, 0); };

    std::mt19937_64 rng(opts.seed);
    GradCheckReport report;
    report.pass = true;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        const Index n = p->tensor.size();
        std::vector<Index> coords(static_cast<size_t>(n));
        std::iota(coords.begin(), coords.end(), Index{0});
        if (opts.samples_per_param > 0 && opts.samples_per_param < n) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(static_cast<size_t>(opts.samples_per_param));
        }
        Matrix& v = p->tensor.mutable_value();
        for (Index c : coords) {
            Scalar* x = v.data() + c;
            const Scalar saved = *x;
            const Scalar a = *(analytic[pi].data() + c);
            Scalar best_rel = std::numeric_limits<Scalar>::infinity();
            Scalar best_numeric = 0;
            for (const Scalar h : {opts.h, opts.h / 10, opts.h / 100}) {
                *x = saved + h;
                const Scalar fp = eval();
                *x = saved - h;
                const Scalar fm = eval();
                *x = saved;
                const Scalar numeric = (fp - fm) / (2 * h);
                const Scalar rel =
                    std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), opts.floor);
                if (rel < best_rel) {
                    best_rel = rel;
                    best_numeric = numeric;
                }
                if (best_rel < opts.tol) break;
            }
            ++report.checked;
            if (best_rel > report.max_rel_error) {
                report.max_rel_error = best_rel;
                report.worst = {p->name, c, a, best_numeric, best_rel};
            }
        }
    }
    report.pass = report.max_rel_error < opts.tol;
    return report;
}

}  // namespace fcp
