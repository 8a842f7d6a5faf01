#include "tutorloop/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace tutorloop {

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

WilsonInterval wilson95(int successes, int n) {
    if (n <= 0) return {0.0, 0.0};
    constexpr double z = 1.959963984540054;
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double hw = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * static_cast<double>(n) * n)) / denom;
    return {p, hw};
}

namespace {

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
    if (nu <= 0) throw std::invalid_argument("student_t_cdf: nu must be positive");
    double x = nu / (nu + t * t);
    double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
    return t >= 0 ? 1.0 - tail : tail;
}

PairedTest paired_t_test(std::span<const double> diffs) {
    PairedTest r{};
    r.n = static_cast<int>(diffs.size());
    if (r.n < 2) {
        r.mean_diff = mean(diffs);
        r.t_statistic = 0;
        r.p_value = 1.0;
        return r;
    }
    r.mean_diff = mean(diffs);
    double sd = sample_std(diffs);
    if (sd == 0.0) {
        r.t_statistic = 0;
        r.p_value = r.mean_diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t_statistic = r.mean_diff / (sd / std::sqrt(static_cast<double>(r.n)));
    double nu = static_cast<double>(r.n - 1);
    r.p_value = 2.0 * (1.0 - student_t_cdf(std::abs(r.t_statistic), nu));
    return r;
}

}  // namespace tutorloop
