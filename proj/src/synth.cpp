#include "dtaad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dtaad {

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int m = spec.dims;
    const int t_len = spec.length;
    constexpr double kTwoPi = 6.283185307179586476925286766559;

    // Shared periods give the dimensions correlated dynamics; per-dimension
    // amplitudes, phases and offsets keep them distinguishable.
    std::vector<double> periods(static_cast<std::size_t>(spec.harmonics));
    for (double& p : periods) p = 40.0 + rng.u01() * 160.0;
    MatrixD amp(m, spec.harmonics), phase(m, spec.harmonics);
    std::vector<double> offset(static_cast<std::size_t>(m));
    std::vector<double> amp_scale(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        for (int h = 0; h < spec.harmonics; ++h) {
            amp(j, h) = rng.uniform(0.3, 1.0);
            phase(j, h) = rng.uniform(0.0, kTwoPi);
            amp_scale[static_cast<std::size_t>(j)] += amp(j, h);
        }
        offset[static_cast<std::size_t>(j)] = rng.uniform(-0.5, 0.5);
    }

    auto base_at = [&](long long t, int j) {
        double v = offset[static_cast<std::size_t>(j)];
        for (int h = 0; h < spec.harmonics; ++h)
            v += amp(j, h) * std::sin(kTwoPi * static_cast<double>(t) / periods[static_cast<std::size_t>(h)] +
                                      phase(j, h));
        return v;
    };

    SyntheticData data;
    data.train.resize(t_len, m);
    data.test.resize(t_len, m);
    data.test_labels = MatrixI::Zero(t_len, m);
    for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < m; ++j)
            data.train(t, j) = static_cast<float>(base_at(t, j) + 0.01 * rng.gauss());
    for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < m; ++j)
            data.test(t, j) = static_cast<float>(base_at(t_len + t, j) + 0.01 * rng.gauss());

    // Point spikes: one dimension, one timestamp.
    for (int t = 0; t < t_len; ++t) {
        if (rng.u01() >= spec.spike_rate) continue;
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        const double sign = rng.u01() < 0.5 ? -1.0 : 1.0;
        const double magnitude = rng.uniform(0.5, 1.0) * 2.0 * amp_scale[static_cast<std::size_t>(j)];
        data.test(t, j) += static_cast<float>(sign * magnitude);
        data.test_labels(t, j) = 1;
    }

    // Level shifts: a constant offset over a short segment.
    for (int t = 0; t < t_len; ++t) {
        if (rng.u01() >= spec.shift_rate) continue;
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        const int len = 5 + static_cast<int>(rng.below(16));
        const double sign = rng.u01() < 0.5 ? -1.0 : 1.0;
        const double delta = sign * rng.uniform(0.3, 0.6) * 2.0 * amp_scale[static_cast<std::size_t>(j)];
        for (int s = t; s < std::min(t + len, t_len); ++s) {
            data.test(s, j) += static_cast<float>(delta);
            data.test_labels(s, j) = 1;
        }
    }

    // Noise bursts: high-variance noise over a short segment.
    for (int t = 0; t < t_len; ++t) {
        if (rng.u01() >= spec.burst_rate) continue;
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        const int len = 5 + static_cast<int>(rng.below(16));
        for (int s = t; s < std::min(t + len, t_len); ++s) {
            data.test(s, j) += static_cast<float>(rng.gauss() * 0.5 * amp_scale[static_cast<std::size_t>(j)]);
            data.test_labels(s, j) = 1;
        }
    }

    return data;
}

}  // namespace dtaad
