#pragma once

// Extended Bates distribution. For eta >= 1 a draw is the mean of eta
// independent U[0,1] variables; for eta <= -1 it is the sawtooth image of a
// Bates(-eta) draw, which moves the mass from the center to the borders.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "foraug/error.hpp"
#include "foraug/rng.hpp"

namespace foraug {

/// Nonzero integer concentration parameter.
class BatesParam {
public:
    constexpr BatesParam() = default;

    explicit BatesParam(int eta) : eta_(eta) {
        if (eta == 0) {
            throw InputError("Bates parameter eta must be a nonzero integer");
        }
    }

    /// Rejects non-integer values (e.g. from a config file).
    static BatesParam from_real(double eta) {
        if (!std::isfinite(eta) || std::trunc(eta) != eta) {
            throw InputError("Bates parameter eta must be an integer, got " + std::to_string(eta));
        }
        return BatesParam(static_cast<int>(eta));
    }

    constexpr int eta() const noexcept { return eta_; }
    constexpr int draws() const noexcept { return eta_ < 0 ? -eta_ : eta_; }

    friend constexpr bool operator==(BatesParam, BatesParam) = default;

private:
    int eta_ = 1;
};

namespace detail {
inline void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw InputError(std::string(what) + ": argument " + std::to_string(x) + " outside [0, 1]");
    }
}
} // namespace detail

/// Half-shift involution on [0,1]; s(0) is taken as 0.5 so that s(s(x)) = x
/// holds on the closed interval.
inline double sawtooth(double x) {
    detail::check_unit(x, "sawtooth");
    if (x < 0.5) {
        return x + 0.5;
    }
    return x - 0.5;
}

/// Consumes exactly |eta| draws from `rng`.
inline double bates_sample(BatesParam p, Rng& rng) {
    const int n = p.draws();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += rng.uniform();
    }
    const double mean = sum / n;
    return p.eta() > 0 ? mean : sawtooth(mean);
}

namespace detail {

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

/// Irwin-Hall density of the sum of n uniforms, t in [0, n].
inline double irwin_hall_pdf(int n, double t) {
    if (t < 0.0 || t > n) {
        return 0.0;
    }
    if (n == 1) {
        return 1.0;
    }
    long double sum = 0.0L;
    const int kmax = static_cast<int>(std::floor(t));
    for (int k = 0; k <= kmax && k <= n; ++k) {
        const long double term = binomial(n, k) * std::pow(static_cast<long double>(t - k), n - 1);
        sum += (k % 2 == 0) ? term : -term;
    }
    long double fact = 1.0L;
    for (int i = 2; i < n; ++i) {
        fact *= i;
    }
    return std::max(0.0, static_cast<double>(sum / fact));
}

inline double irwin_hall_cdf(int n, double t) {
    if (t <= 0.0) {
        return 0.0;
    }
    if (t >= n) {
        return 1.0;
    }
    long double sum = 0.0L;
    const int kmax = static_cast<int>(std::floor(t));
    for (int k = 0; k <= kmax; ++k) {
        const long double term = binomial(n, k) * std::pow(static_cast<long double>(t - k), n);
        sum += (k % 2 == 0) ? term : -term;
    }
    long double fact = 1.0L;
    for (int i = 2; i <= n; ++i) {
        fact *= i;
    }
    return std::clamp(static_cast<double>(sum / fact), 0.0, 1.0);
}

inline double positive_bates_cdf(int n, double x) { return irwin_hall_cdf(n, n * x); }

} // namespace detail

inline double bates_pdf(BatesParam p, double x) {
    detail::check_unit(x, "bates_pdf");
    const int n = p.draws();
    const double y = p.eta() > 0 ? x : sawtooth(x);
    return n * detail::irwin_hall_pdf(n, n * y);
}

inline double bates_cdf(BatesParam p, double x) {
    detail::check_unit(x, "bates_cdf");
    const int n = p.draws();
    if (p.eta() > 0) {
        return detail::positive_bates_cdf(n, x);
    }
    // X = s(Y): X <= x < 0.5 iff Y in [0.5, x + 0.5]; for x >= 0.5 add Y in (0, x - 0.5].
    const double half = detail::positive_bates_cdf(n, 0.5);
    if (x < 0.5) {
        return detail::positive_bates_cdf(n, x + 0.5) - half;
    }
    return 1.0 - half + detail::positive_bates_cdf(n, x - 0.5);
}

} // namespace foraug
