#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccsched {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

enum class TrafficKind { Uniform, DiagonalHotspot, LogDiagonal };

inline const char* traffic_name(TrafficKind k) {
    switch (k) {
        case TrafficKind::Uniform: return "uniform";
        case TrafficKind::DiagonalHotspot: return "diagonal_hotspot";
        default: return "log_diagonal";
    }
}

inline TrafficKind traffic_from_name(const std::string& s) {
    if (s == "uniform") return TrafficKind::Uniform;
    if (s == "diagonal_hotspot" || s == "hotspot") return TrafficKind::DiagonalHotspot;
    if (s == "log_diagonal" || s == "logdiag") return TrafficKind::LogDiagonal;
    throw DomainError("unknown traffic model: " + s);
}

struct Arrival {
    int input;
    int output;
};

/// Admissible rate matrix for Bernoulli arrivals: every row sums to lambda.
/// The log-diagonal row weights 2^((N-1-i+j) mod N) are normalized to lambda so
/// load sweeps behave identically across models.
class TrafficModel {
public:
    TrafficModel(TrafficKind kind, int n, double lambda) : kind_(kind), n_(n), lambda_(lambda) {
        if (n < 1) throw DomainError("port count must be positive");
        if (lambda < 0.0 || lambda > 1.0) throw DomainError("lambda must lie in [0,1]");
        rate_.assign(static_cast<size_t>(n) * n, 0.0);
        row_cdf_.assign(static_cast<size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            fill_row(i);
            double acc = 0.0;
            double row = row_sum(i);
            for (int j = 0; j < n; ++j) {
                acc += row > 0.0 ? rate_[idx(i, j)] / row : (j == 0 ? 1.0 : 0.0);
                row_cdf_[idx(i, j)] = acc;
            }
            row_cdf_[idx(i, n - 1)] = 1.0;  // guard against rounding at the tail
        }
    }

    TrafficKind kind() const { return kind_; }
    int ports() const { return n_; }
    double lambda() const { return lambda_; }
    double rate(int i, int j) const { return rate_[idx(i, j)]; }

    double row_sum(int i) const {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += rate_[idx(i, j)];
        return s;
    }

    /// Destination for a packet from input i, given a uniform draw in [0,1).
    int pick_destination(int i, double u) const {
        const double* begin = row_cdf_.data() + idx(i, 0);
        const double* end = begin + n_;
        return static_cast<int>(std::upper_bound(begin, end, u) - begin);
    }

private:
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * n_ + j; }

    void fill_row(int i) {
        switch (kind_) {
            case TrafficKind::Uniform:
                for (int j = 0; j < n_; ++j) rate_[idx(i, j)] = lambda_ / n_;
                break;
            case TrafficKind::DiagonalHotspot:
                for (int j = 0; j < n_; ++j)
                    rate_[idx(i, j)] = (i == j) ? lambda_ / 2.0
                                     : (n_ > 1 ? lambda_ / (2.0 * (n_ - 1)) : 0.0);
                if (n_ == 1) rate_[idx(i, i)] = lambda_;
                break;
            case TrafficKind::LogDiagonal: {
                long double denom = 0.0L;
                std::vector<long double> w(n_);
                for (int j = 0; j < n_; ++j) {
                    int k = ((n_ - 1 - i + j) % n_ + n_) % n_;
                    w[j] = std::exp2l(static_cast<long double>(k));
                    denom += w[j];
                }
                for (int j = 0; j < n_; ++j)
                    rate_[idx(i, j)] = static_cast<double>(w[j] / denom) * lambda_;
                break;
            }
        }
    }

    TrafficKind kind_;
    int n_;
    double lambda_;
    std::vector<double> rate_;
    std::vector<double> row_cdf_;
};

/// Seeded slot-level generator: one independent RNG stream per input port so
/// ports can be generated concurrently and reproducibly.
class ArrivalProcess {
public:
    ArrivalProcess(TrafficModel model, uint64_t seed) : model_(std::move(model)) {
        rngs_.reserve(model_.ports());
        for (int i = 0; i < model_.ports(); ++i) rngs_.emplace_back(mix(seed, i));
    }

    const TrafficModel& model() const { return model_; }

    /// At most one packet per input per slot (Bernoulli with rate lambda).
    std::vector<Arrival> generate_slot(long long /*slot*/) {
        std::vector<Arrival> out;
        for (int i = 0; i < model_.ports(); ++i) {
            double u = unit(rngs_[i]);
            if (u < model_.lambda()) out.push_back({i, model_.pick_destination(i, unit(rngs_[i]))});
        }
        return out;
    }

private:
    static uint64_t mix(uint64_t seed, int port) {
        // splitmix64 step keeps per-port streams decorrelated
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(port) + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static double unit(std::mt19937_64& rng) {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }

    TrafficModel model_;
    std::vector<std::mt19937_64> rngs_;
};

inline constexpr long long kFrameSizeInfinite = std::numeric_limits<long long>::max();

/// Frame-size selection from the extreme-value tail of the per-output packet
/// count. For a fully loaded frame the output counts are asymptotically normal
/// with mean f and variance f; their maximum follows a Gumbel law whose
/// coefficients drive the minimum frame size for throughput eta at confidence
/// 1 - epsilon.
class FrameSizer {
public:
    FrameSizer(int n, double eta, double confidence_epsilon)
        : n_(n), eta_(eta), eps_(confidence_epsilon) {
        if (n < 3) throw DomainError("frame sizing needs N >= 3");
        if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0,1)");
        if (!(confidence_epsilon > 0.0 && confidence_epsilon < 1.0))
            throw DomainError("epsilon must lie in (0,1)");
    }

    int ports() const { return n_; }
    double eta() const { return eta_; }
    double confidence_epsilon() const { return eps_; }

    double gumbel_a(long long f) const { return std::sqrt(2.0 * std::log(n_)) / sigma(f); }

    double gumbel_b(long long f) const {
        double s = sigma(f);
        double l2n = std::sqrt(2.0 * std::log(n_));
        return s * l2n - s * (std::log(std::log(static_cast<double>(n_))) + std::log(4.0 * M_PI)) /
                              (2.0 * l2n) +
               static_cast<double>(f);
    }

    /// Gumbel CDF of the frame's maximum output degree: Pr{Delta <= x}.
    double max_degree_tail(long long f, double x) const {
        return std::exp(-std::exp(-gumbel_a(f) * (x - gumbel_b(f))));
    }

    /// Smallest frame size guaranteeing throughput >= eta with probability
    /// 1 - epsilon. Unreachable targets (eta -> 1) return kFrameSizeInfinite.
    long long min_frame_size() const {
        double bracket = -std::log(std::log(1.0 / (1.0 - eps_))) + 2.0 * std::log(n_) -
                         0.5 * (std::log(std::log(static_cast<double>(n_))) + std::log(4.0 * M_PI));
        double ratio = eta_ / (1.0 - eta_);
        double bound = ratio * ratio / (2.0 * std::log(n_)) * bracket * bracket;
        if (!std::isfinite(bound) || bound >= 9.0e18) return kFrameSizeInfinite;
        long long f = static_cast<long long>(std::ceil(bound));
        return std::max<long long>(f, 1);
    }

    /// Throughput achievable with frame size f at confidence 1 - epsilon:
    /// the inverse of the min_frame_size bound.
    double eta_for_frame(long long f) const {
        double threshold = gumbel_b(f) - std::log(std::log(1.0 / (1.0 - eps_))) / gumbel_a(f);
        return static_cast<double>(f) / threshold;
    }

private:
    static double sigma(long long f) {
        if (f < 1) throw DomainError("frame size must be >= 1");
        return std::sqrt(static_cast<double>(f));
    }

    int n_;
    double eta_;
    double eps_;
};

}  // namespace ccsched
