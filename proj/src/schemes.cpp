#include "fastgate/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "fastgate/error.hpp"

namespace fastgate {

long PulseSequence::total_pulse_pairs() const {
    long n = 0;
    for (const auto& g : groups) n += std::labs(g.z);
    return n;
}

long PulseSequence::net_pulse_pairs() const {
    long n = 0;
    for (const auto& g : groups) n += g.z;
    return n;
}

std::vector<double> PulseSequence::z_values() const {
    std::vector<double> z;
    for (const auto& g : groups) z.push_back(static_cast<double>(g.z));
    return z;
}

std::vector<double> PulseSequence::times() const {
    std::vector<double> t;
    for (const auto& g : groups) t.push_back(g.time);
    return t;
}

PulseSequence PulseSequence::translated(double shift) const {
    PulseSequence out = *this;
    for (auto& g : out.groups) g.time += shift;
    out.window_begin += shift;
    return out;
}

int SchemeSpec::parameter_count() const {
    switch (kind) {
        case SchemeKind::GPG: return groups;
        case SchemeKind::APG: return groups / 2;
        default: return 4;
    }
}

std::array<double, 3> SchemeSpec::ratios() const {
    if (kind == SchemeKind::GZC) return {2.0, -3.0, 2.0};
    if (kind == SchemeKind::FRAG) return {1.0, -2.0, 2.0};
    throw SchemeError("ratios are defined for GZC and FRAG only");
}

std::string SchemeSpec::to_string() const {
    switch (kind) {
        case SchemeKind::GZC: return "gzc";
        case SchemeKind::FRAG: return "frag";
        case SchemeKind::GPG: return "gpg:" + std::to_string(groups);
        case SchemeKind::APG: return "apg:" + std::to_string(groups);
    }
    return "";
}

SchemeSpec parse_scheme(const std::string& text) {
    std::string s = text;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "gzc") return {SchemeKind::GZC, 6};
    if (s == "frag") return {SchemeKind::FRAG, 6};
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("unknown scheme '" + text + "'");
    const std::string name = s.substr(0, colon);
    int n = 0;
    try {
        std::size_t used = 0;
        n = std::stoi(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("bad group count in scheme '" + text + "'");
    }
    if (n < 1) throw ConfigError("scheme needs at least one group");
    if (name == "gpg") return {SchemeKind::GPG, n};
    if (name == "apg") {
        if (n % 2 != 0) throw SchemeError("APG requires an even number of groups");
        return {SchemeKind::APG, n};
    }
    throw ConfigError("unknown scheme '" + text + "'");
}

std::vector<double> scheme_times(const SchemeSpec& spec, double T) {
    const int n = spec.groups;
    std::vector<double> t;
    if (spec.kind == SchemeKind::GPG) {
        for (int k = 1; k <= n; ++k) t.push_back(T * k / n);
    } else if (spec.kind == SchemeKind::APG) {
        if (n % 2 != 0) throw SchemeError("APG requires an even number of groups");
        for (int k = -n / 2; k <= n / 2; ++k)
            if (k != 0) t.push_back(T * k / n);
    } else {
        throw SchemeError("GZC/FRAG times are optimisation parameters");
    }
    return t;
}

double scheme_window_begin(const SchemeSpec& spec, double T) {
    return spec.kind == SchemeKind::GPG ? 0.0 : -0.5 * T;
}

ContinuousSequence expand_parameters(const SchemeParams& params) {
    const auto& v = params.values;
    const auto& spec = params.spec;
    if (static_cast<int>(v.size()) != spec.parameter_count())
        throw SchemeError("parameter count does not match scheme " + spec.to_string());
    ContinuousSequence out;
    switch (spec.kind) {
        case SchemeKind::GPG:
            out.z = v;
            out.t = scheme_times(spec, params.gate_time);
            break;
        case SchemeKind::APG: {
            const int h = spec.groups / 2;
            for (int k = h - 1; k >= 0; --k) out.z.push_back(-v[k]);
            for (int k = 0; k < h; ++k) out.z.push_back(v[k]);
            out.t = scheme_times(spec, params.gate_time);
            break;
        }
        default: {
            const auto r = spec.ratios();
            const double n = v[0];
            for (int k = 1; k <= 3; ++k)
                if (!(v[k] > 0)) throw SchemeError("GZC/FRAG timings must be positive");
            out.z = {-n * r[0], -n * r[1], -n * r[2], n * r[2], n * r[1], n * r[0]};
            out.t = {-v[1], -v[2], -v[3], v[3], v[2], v[1]};
            break;
        }
    }
    return out;
}

PulseSequence build_sequence(const SchemeParams& params) {
    const ContinuousSequence c = expand_parameters(params);
    PulseSequence seq;
    seq.gate_time = params.gate_time;
    seq.window_begin = scheme_window_begin(params.spec, params.gate_time);
    for (std::size_t k = 0; k < c.z.size(); ++k) {
        const double z = c.z[k];
        if (std::abs(z - std::round(z)) > 1e-9 * std::max(1.0, std::abs(z)))
            throw SchemeError("non-integer pulse-pair count in finalised sequence");
        const long zi = std::lround(z);
        if (zi != 0) seq.groups.push_back({zi, c.t[k]});
    }
    std::stable_sort(seq.groups.begin(), seq.groups.end(),
                     [](const PulseGroup& a, const PulseGroup& b) { return a.time < b.time; });
    return seq;
}

double min_repetition_rate(const std::vector<double>& z, const std::vector<double>& t) {
    if (z.size() != t.size()) throw SchemeError("z and t lengths differ");
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < z.size(); ++k)
        if (z[k] != 0.0) order.push_back(k);
    if (order.size() < 2) throw SchemeError("minimum repetition rate needs at least two groups");
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
    double f = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto a = order[i], b = order[i + 1];
        const double gap = t[b] - t[a];
        if (!(gap > 0)) throw SchemeError("coincident group times: minimum repetition rate is infinite");
        f = std::max(f, (std::abs(z[a]) + std::abs(z[b])) / (2.0 * gap));
    }
    return f;
}

double min_repetition_rate(const PulseSequence& seq) {
    return min_repetition_rate(seq.z_values(), seq.times());
}

bool is_antisymmetric(const PulseSequence& seq, double tolerance) {
    const auto& g = seq.groups;
    const std::size_t n = g.size();
    double scale = 0.0;
    for (const auto& x : g) scale = std::max(scale, std::abs(x.time));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = g[k];
        const auto& b = g[n - 1 - k];
        if (a.z != -b.z || std::abs(a.time + b.time) > tolerance * std::max(scale, 1.0)) return false;
        if (n % 2 == 1 && k == n / 2) return false;
    }
    return true;
}

long block_start_slot(double time, long pairs, double rate) {
    // ceil(x - 1/2) picks the nearest integer and sends exact ties to the earlier slot.
    const double x = time * rate - 0.5 * static_cast<double>(pairs - 1);
    return static_cast<long>(std::ceil(x - 0.5));
}

KickTrain expand_to_kick_train(const PulseSequence& seq, double rate) {
    if (!(rate > 0)) throw SchemeError("repetition rate must be positive");
    struct Block {
        long start, count;
        int sign;
        int group;
    };
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < seq.groups.size(); ++k) {
        const auto& g = seq.groups[k];
        if (g.z == 0) continue;
        const long n = std::labs(g.z);
        blocks.push_back({block_start_slot(g.time, n, rate), n, g.z > 0 ? 1 : -1, static_cast<int>(k)});
    }
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const Block& a, const Block& b) { return a.start < b.start; });
    KickTrain train;
    train.rate = rate;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) {
            const auto& p = blocks[i - 1];
            if (p.start + p.count > blocks[i].start) {
                std::ostringstream os;
                os << "grid collision between pulse groups " << p.group << " and " << blocks[i].group
                   << " at repetition rate " << rate;
                try {
                    os << " (minimum " << min_repetition_rate(seq) << ")";
                } catch (const SchemeError&) {
                    os << " (coincident group times)";
                }
                throw CollisionError(p.group, blocks[i].group, os.str());
            }
        }
        for (long m = 0; m < blocks[i].count; ++m) {
            train.slots.push_back(blocks[i].start + m);
            train.signs.push_back(blocks[i].sign);
        }
    }
    return train;
}

}  // namespace fastgate
