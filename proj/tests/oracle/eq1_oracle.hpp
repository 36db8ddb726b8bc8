#pragma once

// Brute-force channel vulnerability: every partial derivative of every logit margin
// by central differences on the double-precision reference network.

#include "reference_net.hpp"

#include "resilinet/dataset.hpp"

#include <map>

namespace oracle {

inline std::map<std::size_t, std::vector<double>> brute_force_vulnerability(const resilinet::ModelGraph& m,
                                                                           const resilinet::Dataset& calib,
                                                                           double eps = 1e-5)
{
    using namespace resilinet;
    std::map<std::size_t, std::vector<double>> scores;
    for (const auto li : channel_layers(m)) scores[li].assign(output_channels(m.layers[li].spec), 0.0);
    Params p = params_of(m);
    const std::size_t stride = calib.images.size() / calib.size();
    const std::size_t classes = m.num_classes;
    for (std::size_t s = 0; s < calib.size(); ++s) {
        const std::vector<double> x(calib.images.raw() + s * stride, calib.images.raw() + (s + 1) * stride);
        const auto z = forward(m, p, x, 1);
        std::size_t t = 0;
        for (std::size_t i = 1; i < classes; ++i) {
            if (z[i] > z[t]) t = i;
        }
        for (auto& [li, sc] : scores) {
            const std::size_t channels = sc.size();
            const std::size_t row = p[li][0].size() / channels;
            for (std::size_t c = 0; c < channels; ++c) {
                // Partial derivatives of all logits w.r.t. each parameter of channel c.
                std::vector<std::vector<double>> dz;
                const auto probe = [&](double& w) {
                    const double orig = w;
                    w = orig + eps;
                    const auto zp = forward(m, p, x, 1);
                    w = orig - eps;
                    const auto zm = forward(m, p, x, 1);
                    w = orig;
                    std::vector<double> d(classes);
                    for (std::size_t k = 0; k < classes; ++k) d[k] = (zp[k] - zm[k]) / (2.0 * eps);
                    dz.push_back(std::move(d));
                };
                for (std::size_t e = 0; e < row; ++e) probe(p[li][0][c * row + e]);
                if (m.layers[li].spec.has_bias) probe(p[li][1][c]);
                for (std::size_t i = 0; i < classes; ++i) {
                    if (i == t) continue;
                    const double margin = z[i] - z[t];
                    if (margin * margin < 1e-12) continue;
                    double mass = 0.0;
                    for (const auto& d : dz) mass += (d[i] - d[t]) * (d[i] - d[t]);
                    sc[c] += mass / (margin * margin);
                }
            }
        }
    }
    for (auto& [li, sc] : scores) {
        for (auto& v : sc) v /= static_cast<double>(calib.size());
    }
    return scores;
}

}  // namespace oracle
