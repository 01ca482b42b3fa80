#pragma once

#include <vector>

namespace tfk3d {

double mean(const std::vector<double>& xs);

/// Sample standard deviation (n-1 divisor); 0 for fewer than 2 values.
double sample_stddev(const std::vector<double>& xs);

/// sample_stddev / sqrt(n).
double standard_error(const std::vector<double>& xs);

/// Regularized incomplete beta function I_x(a, b) via the continued
/// fraction (Lentz), good to ~1e-12 for the arguments used here.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;  // two-sided
};

/// Welch's two-sample t-test (unequal variances). Degenerate inputs
/// (fewer than 2 values or zero variance on both sides) report p = 1 for
/// equal means and p = 0 otherwise.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tfk3d
