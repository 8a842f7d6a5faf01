#pragma once

#include <span>

namespace tutorloop {

double mean(std::span<const double> v);
// Population standard deviation (divide by n), the convention used for
// group-normalised advantages.
double population_std(std::span<const double> v);
// Sample standard deviation (divide by n-1).
double sample_std(std::span<const double> v);

struct WilsonInterval {
    double rate;        // plain fraction successes/n
    double half_width;  // 95% Wilson half-width
};
WilsonInterval wilson95(int successes, int n);

// Two-sided paired t-test on the differences. Zero-variance inputs return
// p = 1 when the mean difference is zero, p = 0 otherwise.
struct PairedTest {
    double mean_diff;
    double t_statistic;
    double p_value;
    int n;
};
PairedTest paired_t_test(std::span<const double> diffs);

// Regularised incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

}  // namespace tutorloop
