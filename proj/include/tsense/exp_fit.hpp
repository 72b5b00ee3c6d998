#pragma once

// Least-squares fit of shift(v) = a (1 - exp(-b v)).
//
// The model is linear in a, so for a fixed rate b the optimal a has a closed
// form and the residual becomes a one-dimensional profile in b. The profile is
// scanned on a log grid around b0 = 1/max(v), refined by golden section, and
// the joint (a, b) estimate is polished with damped Gauss-Newton.

#include "tsense/errors.hpp"
#include "tsense/response.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace tsense::response {

struct VolumeShift {
    double volume = 0.0; ///< mL added
    double shift = 0.0;  ///< Hz
};

namespace detail {

struct Profile {
    double a = 0.0;
    double sse = 0.0;
};

inline Profile profile_at(std::span<const VolumeShift> s, double b) {
    double yg = 0.0;
    double gg = 0.0;
    for (const auto& p : s) {
        const double g = -std::expm1(-b * p.volume);
        yg += p.shift * g;
        gg += g * g;
    }
    const double a = gg > 0.0 ? yg / gg : 0.0;
    double sse = 0.0;
    for (const auto& p : s) {
        const double r = p.shift + a * std::expm1(-b * p.volume);
        sse += r * r;
    }
    return {a, sse};
}

inline double sse_at(std::span<const VolumeShift> s, double a, double b) {
    double sse = 0.0;
    for (const auto& p : s) {
        const double r = p.shift + a * std::expm1(-b * p.volume);
        sse += r * r;
    }
    return sse;
}

} // namespace detail

inline ExpFit fit_exponential(std::span<const VolumeShift> samples) {
    if (samples.size() < 3) {
        throw FitError("exponential fit needs at least 3 samples");
    }
    std::vector<double> volumes;
    volumes.reserve(samples.size());
    for (const auto& p : samples) {
        if (!(p.volume >= 0.0) || !std::isfinite(p.shift)) {
            throw FitError("exponential fit needs finite shifts at non-negative volumes");
        }
        volumes.push_back(p.volume);
    }
    std::sort(volumes.begin(), volumes.end());
    if (std::adjacent_find(volumes.begin(), volumes.end()) != volumes.end()) {
        throw FitError("exponential fit needs distinct volumes");
    }
    const double v_max = volumes.back();

    const double n = static_cast<double>(samples.size());
    const double b0 = 1.0 / v_max;

    if (std::all_of(samples.begin(), samples.end(), [](const VolumeShift& p) { return p.shift == 0.0; })) {
        return {0.0, b0, 0.0, false};
    }

    // Scan the profile over six decades of b.
    constexpr int scan_points = 241;
    constexpr double log_span = 3.0 * 2.302585092994046; // ln(1e3)
    const double log_b0 = std::log(b0);
    auto log_b_at = [&](int i) { return log_b0 - log_span + 2.0 * log_span * i / (scan_points - 1); };

    int best = 0;
    double best_sse = INFINITY;
    std::array<double, scan_points> scan{};
    for (int i = 0; i < scan_points; ++i) {
        scan[static_cast<std::size_t>(i)] = detail::profile_at(samples, std::exp(log_b_at(i))).sse;
        if (scan[static_cast<std::size_t>(i)] < best_sse) {
            best_sse = scan[static_cast<std::size_t>(i)];
            best = i;
        }
    }
    // A flat profile reaching an edge (e.g. an exact step) is as degenerate as an edge minimum.
    const double tie = best_sse * (1.0 + 1e-9) + 1e-300;
    if (scan.back() <= tie) {
        best = scan_points - 1;
    } else if (scan.front() <= tie) {
        best = 0;
    }
    if (best == 0 || best == scan_points - 1) {
        throw FitError(best == 0 ? "exponential fit degenerate: data is linear in volume, rate not identifiable"
                                 : "exponential fit degenerate: data is a step, rate not identifiable");
    }

    // Golden section on log b.
    double lo = log_b_at(best - 1);
    double hi = log_b_at(best + 1);
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = detail::profile_at(samples, std::exp(x1)).sse;
    double f2 = detail::profile_at(samples, std::exp(x2)).sse;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = detail::profile_at(samples, std::exp(x1)).sse;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = detail::profile_at(samples, std::exp(x2)).sse;
        }
    }
    double b = std::exp(0.5 * (lo + hi));
    double a = detail::profile_at(samples, b).a;
    double sse = detail::sse_at(samples, a, b);

    // Damped Gauss-Newton polish on (a, log b).
    double lambda = 1e-3;
    for (int it = 0; it < 100; ++it) {
        std::array<double, 3> jtj{}; // [00, 01, 11]
        std::array<double, 2> jtr{};
        for (const auto& p : samples) {
            const double e = std::exp(-b * p.volume);
            const double g = 1.0 - e;
            const double r = p.shift - a * g;
            const double ja = g;
            const double jb = a * p.volume * e * b; // d/d(log b)
            jtj[0] += ja * ja;
            jtj[1] += ja * jb;
            jtj[2] += jb * jb;
            jtr[0] += ja * r;
            jtr[1] += jb * r;
        }
        bool improved = false;
        for (int tries = 0; tries < 20; ++tries) {
            const double m00 = jtj[0] * (1.0 + lambda);
            const double m11 = jtj[2] * (1.0 + lambda);
            const double det = m00 * m11 - jtj[1] * jtj[1];
            if (!(std::abs(det) > 0.0)) {
                break;
            }
            const double da = (m11 * jtr[0] - jtj[1] * jtr[1]) / det;
            const double dlb = (m00 * jtr[1] - jtj[1] * jtr[0]) / det;
            const double a_new = a + da;
            const double b_new = b * std::exp(std::clamp(dlb, -1.0, 1.0));
            const double sse_new = detail::sse_at(samples, a_new, b_new);
            if (sse_new <= sse) {
                const bool converged = std::abs(da) <= 1e-15 * std::abs(a) + 1e-300 && std::abs(dlb) <= 1e-15;
                a = a_new;
                b = b_new;
                sse = sse_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            break;
        }
    }

    if (!std::isfinite(a) || !std::isfinite(b) || !(b > 0.0)) {
        throw FitError("exponential fit diverged");
    }
    return {a, b, std::sqrt(sse / n), true};
}

inline ExpFit fit_exponential(const std::vector<VolumeShift>& samples) {
    return fit_exponential(std::span<const VolumeShift>(samples));
}

} // namespace tsense::response
