#pragma once

#include <array>
#include <string>
#include <vector>

namespace fastgate {

// All times in this header are dimensionless (units of 1/omega_t) and all
// repetition rates are pulse pairs per unit dimensionless time.

struct PulseGroup {
    long z = 0;
    double time = 0.0;
    bool operator==(const PulseGroup&) const = default;
};

struct PulseSequence {
    std::vector<PulseGroup> groups;  // sorted by time, no zero groups
    double gate_time = 0.0;
    double window_begin = 0.0;       // scheme window is [window_begin, window_begin + gate_time]

    long total_pulse_pairs() const;
    long net_pulse_pairs() const;
    std::vector<double> z_values() const;
    std::vector<double> times() const;
    PulseSequence translated(double shift) const;
    bool operator==(const PulseSequence&) const = default;
};

enum class SchemeKind { GZC, FRAG, GPG, APG };

struct SchemeSpec {
    SchemeKind kind = SchemeKind::GPG;
    int groups = 8;  // N for GPG/APG; always 6 for GZC/FRAG

    int parameter_count() const;
    bool timing_scheme() const { return kind == SchemeKind::GZC || kind == SchemeKind::FRAG; }
    /// Fixed (a, b, c) ratios for GZC/FRAG.
    std::array<double, 3> ratios() const;
    std::string to_string() const;
    bool operator==(const SchemeSpec&) const = default;
};

/// Parses gzc, frag, gpg:N, apg:N.
SchemeSpec parse_scheme(const std::string& text);

struct SchemeParams {
    SchemeSpec spec;
    // GPG: z (N). APG: half z (N/2), innermost first. GZC/FRAG: (n, tau1, tau2, tau3).
    std::vector<double> values;
    double gate_time = 0.0;
};

/// Real-valued group weights and times before integer finalisation.
struct ContinuousSequence {
    std::vector<double> z;
    std::vector<double> t;
};

/// Fixed GPG/APG group times for gate time T.
std::vector<double> scheme_times(const SchemeSpec& spec, double gate_time);
double scheme_window_begin(const SchemeSpec& spec, double gate_time);

ContinuousSequence expand_parameters(const SchemeParams& params);

PulseSequence build_sequence(const SchemeParams& params);

/// Smallest rate at which adjacent expanded groups do not overlap.
double min_repetition_rate(const PulseSequence& seq);
double min_repetition_rate(const std::vector<double>& z, const std::vector<double>& t);

bool is_antisymmetric(const PulseSequence& seq, double tolerance = 1e-12);

struct KickTrain {
    std::vector<long> slots;  // kick k fires at slots[k] / rate
    std::vector<int> signs;
    double rate = 0.0;

    std::size_t size() const { return slots.size(); }
    double time(std::size_t k) const { return static_cast<double>(slots[k]) / rate; }
};

/// First grid slot of a block of `pairs` kicks centred as near as possible to t.
long block_start_slot(double time, long pairs, double rate);

KickTrain expand_to_kick_train(const PulseSequence& seq, double rate);

}  // namespace fastgate
