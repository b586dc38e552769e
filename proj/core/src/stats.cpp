#include "kpz/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kpz {

void RunningStats::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / n_;
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const std::int64_t n = n_ + o.n_;
    const double d = o.mean_ - mean_;
    mean_ += d * o.n_ / n;
    m2_ += o.m2_ + d * d * double(n_) * double(o.n_) / n;
    n_ = n;
}

double RunningStats::stderr_of_mean() const { return n_ > 1 ? std::sqrt(variance() / n_) : 0.0; }

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::informational: return "informational";
    }
    return "?";
}

double EnsembleEstimate::z() const {
    if (!target) return 0.0;
    const double gap = std::abs(estimate - *target);
    if (std_error > 0.0) return gap / std_error;
    return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

void judge(EnsembleEstimate& e, double nsigma) {
    if (!e.target) {
        e.verdict = Verdict::informational;
        return;
    }
    e.verdict = std::abs(e.estimate - *e.target) <= nsigma * e.std_error + e.allowance ? Verdict::pass : Verdict::fail;
}

EnsembleEstimate estimate_mean(std::span<const double> values, std::optional<double> target, double allowance,
                               double nsigma) {
    RunningStats s;
    for (double v : values) s.add(v);
    EnsembleEstimate e;
    e.estimate = s.mean();
    e.std_error = s.stderr_of_mean();
    e.n = s.n();
    e.target = target;
    e.allowance = allowance;
    judge(e, nsigma);
    return e;
}

double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double t = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * t;
        if (t < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double D = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = std::clamp(x[i], 0.0, 1.0);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    KsResult r;
    r.D = D;
    r.n = static_cast<std::int64_t>(x.size());
    const double sn = std::sqrt(n);
    // Stephens' small-sample correction
    r.p_value = x.empty() ? 1.0 : kolmogorov_q((sn + 0.12 + 0.11 / sn) * D);
    return r;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace kpz
