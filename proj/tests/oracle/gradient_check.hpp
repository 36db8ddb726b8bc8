#pragma once

// Central finite differences on the double-precision reference network, compared
// with the engine's binary32 backward pass.

#include "reference_net.hpp"

#include "resilinet/engine.hpp"
#include "resilinet/random.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t kinks_skipped = 0;
};

/// Relative error with a floor on the denominator so that gradients that are zero up
/// to rounding do not produce unbounded ratios.
inline double rel_error(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3}); }

inline GradientCheck check_gradients(const resilinet::ModelGraph& m, const resilinet::Tensor& batch, bool training,
                                     std::uint64_t seed, double eps = 1e-4)
{
    using namespace resilinet;
    const std::size_t n = batch.dim(0);
    Tensor g_out({n, m.num_classes});
    Rng rng(seed);
    for (auto& v : g_out.data()) v = static_cast<float>(uniform_real(rng, -1.0, 1.0));

    ForwardCache cache;
    forward(m, batch, cache, training ? Phase::Training : Phase::Inference);
    const GradientSet grads = backward(m, cache, g_out);

    const std::vector<double> input(batch.data().begin(), batch.data().end());
    Params p = params_of(m);
    std::vector<std::uint32_t> pattern;
    const auto loss = [&] {
        pattern.clear();
        const auto z = forward(m, p, input, n, training, &pattern);
        double l = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) l += static_cast<double>(g_out[i]) * z[i];
        return l;
    };
    GradientCheck out;
    loss();
    const auto pattern0 = pattern;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        for (std::size_t s = 0; s < m.layers[li].params.size(); ++s) {
            if (!is_trainable(m.layers[li].spec.kind, s)) continue;
            for (std::size_t e = 0; e < p[li][s].size(); ++e) {
                const double orig = p[li][s][e];
                p[li][s][e] = orig + eps;
                const double lp = loss();
                bool kink = pattern != pattern0;
                p[li][s][e] = orig - eps;
                const double lm = loss();
                kink = kink || pattern != pattern0;
                p[li][s][e] = orig;
                // A ReLU gate or max-pool winner that switches inside [-eps, eps] puts a kink in
                // the loss, where the central difference is not a derivative; skip those points.
                if (kink) {
                    ++out.kinks_skipped;
                    continue;
                }
                const double fd = (lp - lm) / (2.0 * eps);
                out.max_rel_error = std::max(out.max_rel_error, rel_error(grads.layers[li][s][e], fd));
                ++out.checked;
            }
        }
    }
    return out;
}

}  // namespace oracle
