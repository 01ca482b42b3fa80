#include "tfk3d/stats.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace tfk3d {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double standard_error(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("standard error of an empty sample");
    return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

namespace {

// Continued fraction for the incomplete beta (Numerical Recipes betacf).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) return 1.0;
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    WelchResult result;
    if (a.size() < 2 || b.size() < 2) {
        result.p = (!a.empty() && !b.empty() && mean(a) == mean(b)) ? 1.0 : 0.0;
        return result;
    }
    const double ma = mean(a), mb = mean(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double sa = sample_stddev(a), sb = sample_stddev(b);
    const double va = sa * sa / na, vb = sb * sb / nb;
    const double denom = va + vb;
    if (denom == 0.0) {
        result.p = (ma == mb) ? 1.0 : 0.0;
        result.t = (ma == mb) ? 0.0 : std::numeric_limits<double>::infinity();
        return result;
    }
    result.t = (ma - mb) / std::sqrt(denom);
    result.dof = denom * denom / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    result.p = student_t_two_sided_p(result.t, result.dof);
    return result;
}

}  // namespace tfk3d
