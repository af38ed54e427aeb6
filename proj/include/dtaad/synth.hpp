#pragma once

#include <cstdint>

#include "dtaad/data.hpp"

namespace dtaad {

/// Desk-scale synthetic benchmark: a sinusoid-mixture base signal with point
/// spikes, level shifts and noise bursts injected into the test split only.
/// Rates are per-timestamp event-start probabilities.
struct SyntheticSpec {
    int dims = 5;
    int length = 10000;  // rows per split; the test split continues the train signal
    double spike_rate = 0.005;
    double shift_rate = 0.0;
    double burst_rate = 0.0;
    std::uint64_t seed = 7;
    int harmonics = 3;

    double total_rate() const { return spike_rate + shift_rate + burst_rate; }

    void validate() const {
        if (dims < 1) throw ConfigError("synth: dims must be >= 1");
        if (length < 10) throw ConfigError("synth: length must be >= 10");
        if (harmonics < 1) throw ConfigError("synth: harmonics must be >= 1");
        if (spike_rate < 0.0 || shift_rate < 0.0 || burst_rate < 0.0)
            throw ConfigError("synth: anomaly rates must be non-negative");
        if (!(total_rate() > 0.0) || total_rate() > 0.2)
            throw ConfigError("synth: total anomaly rate must lie in (0, 0.2]");
    }
};

struct SyntheticData {
    MatrixF train;        // length x dims, anomaly-free
    MatrixF test;         // length x dims with injected anomalies
    MatrixI test_labels;  // length x dims, marks exactly the injected points
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace dtaad
