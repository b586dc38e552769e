#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kpz {

// Welford accumulator; merge() is Chan's pairwise update.
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& o);
    std::int64_t n() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / (n_ - 1) : 0.0; }
    double stderr_of_mean() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

enum class Verdict { pass, fail, informational };
std::string verdict_name(Verdict v);

struct EnsembleEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::optional<double> target;
    double allowance = 0.0;  // systematic tolerance added to 3 stderr
    Verdict verdict = Verdict::informational;
    std::string label;

    // |estimate - target| in units of std_error (inf when std_error is 0 and the gap is not)
    double z() const;
};

// Mean and stderr of i.i.d. values; verdict against target when given.
EnsembleEstimate estimate_mean(std::span<const double> values, std::optional<double> target = std::nullopt,
                               double allowance = 0.0, double nsigma = 3.0);
void judge(EnsembleEstimate& e, double nsigma = 3.0);

struct KsResult {
    double D = 0.0;
    double p_value = 1.0;
    std::int64_t n = 0;
};
// One-sample Kolmogorov-Smirnov test against Uniform[0,1).
KsResult ks_uniform(std::vector<double> x);
// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_q(double lambda);

// 64-bit FNV-1a, used for config hashes.
std::uint64_t fnv1a(std::string_view s);

}  // namespace kpz
