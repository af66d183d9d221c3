#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mqm/core.hpp"
#include "mqm/screen.hpp"
#include "mqm/solver.hpp"

// Time-of-arrival and point-of-arrival statistics read off a completed
// SurvivalRecord or a per-point current history.

namespace mqm {

struct ArrivalDistribution {
    std::vector<double> times;
    std::vector<double> pdf;             // arrival-time density, = current series
    std::vector<double> cdf_complement;  // Pr{tau > t}, = survival series
    double total_mass = 0.0;             // Pr{tau <= T}; 1 - S(T) over the horizon
};

struct ArrivalPointDensity {
    std::vector<double> points;
    std::vector<double> density;
    double total_mass = 0.0;       // surface integral of the density
    double truncation_mass = 0.0;  // 1 - total_mass: never-arrived + beyond-horizon share
};

inline ArrivalDistribution arrival_time_pdf(const SurvivalRecord& record) {
    record.validate();
    ArrivalDistribution d;
    d.times = record.times;
    d.pdf = record.current;
    d.cdf_complement = record.survival;
    d.total_mass = record.absorbed_mass();
    return d;
}

namespace detail {

inline double series_value_at(const std::vector<double>& times, const std::vector<double>& vals,
                              double t) {
    if (times.empty()) throw std::invalid_argument("empty record");
    const double tol = 1e-9 * (times.back() - times.front() + 1.0);
    if (t < times.front() - tol || t > times.back() + tol)
        throw std::invalid_argument("time outside record range");
    auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    std::size_t i = static_cast<std::size_t>(it - times.begin());
    if (i >= times.size()) i = times.size() - 1;
    if (std::abs(times[i] - t) <= tol) return vals[i];
    if (i > 0) --i;
    const double f = (t - times[i]) / (times[i + 1] - times[i]);
    return (1.0 - f) * vals[i] + f * vals[i + 1];
}

}  // namespace detail

// Instantaneous arrival rate given survival up to s; depends on the wall
// gradient alone.
inline double hazard_rate(const SurvivalRecord& record, double s) {
    return record.discount_coeff * detail::series_value_at(record.times, record.grad_sq, s);
}

// Density of arrival at t conditioned on {tau >= s}: pdf(t)/Pr{tau > s}.
inline double conditional_arrival_density(const SurvivalRecord& record, double s, double t) {
    if (s > t) throw std::invalid_argument("conditional_arrival_density: s must be <= t");
    const double pdf_t = detail::series_value_at(record.times, record.current, t);
    const double surv_s = detail::series_value_at(record.times, record.survival, s);
    if (surv_s <= 0.0)
        throw std::invalid_argument("conditional_arrival_density: conditioning event has mass 0");
    return pdf_t / surv_s;
}

// Time-integrated per-point current: the density of where the particle
// lands, with the not-yet-absorbed share reported, never renormalized away.
inline ArrivalPointDensity arrival_point_pdf(const ScreenMeasurement& meas) {
    meas.validate();
    ArrivalPointDensity out;
    out.points = meas.positions;
    out.density.assign(meas.positions.size(), 0.0);
    for (std::size_t p = 0; p < meas.positions.size(); ++p) {
        double acc = 0.0;
        for (std::size_t k = 1; k < meas.times.size(); ++k)
            acc += 0.5 * (meas.at(k, p) + meas.at(k - 1, p)) * (meas.times[k] - meas.times[k - 1]);
        out.density[p] = acc;
    }
    out.total_mass = trapezoid(out.points, out.density);
    out.truncation_mass = 1.0 - out.total_mass;
    return out;
}

struct AbsorptionClassification {
    bool certain = false;      // exponent integral diverges under the fitted tail
    double prob_never = 0.0;   // Pr{tau = infinity} estimate when deficient
    double fitted_power = 0.0; // log-log slope of grad_sq over the window
    double fitted_log_amplitude = 0.0;
    double fit_rms_residual = 0.0;
    std::size_t window_samples = 0;
};

// Fits grad_sq ~ A t^p over the trailing window and applies the integral
// test: p >= -1 means the survival exponent keeps growing without bound.
inline AbsorptionClassification classify_total_absorption(const SurvivalRecord& record,
                                                          std::size_t window_samples) {
    record.validate();
    const std::size_t n = record.size();
    if (window_samples < 10 || window_samples > n)
        throw std::invalid_argument("classify_total_absorption: window must have >= 10 samples");

    AbsorptionClassification out;
    out.window_samples = window_samples;
    if (record.discount_coeff == 0.0) {
        out.certain = false;
        out.prob_never = 1.0;
        return out;
    }

    const std::size_t lo = n - window_samples;
    double gmax = 0.0;
    for (std::size_t k = lo; k < n; ++k) gmax = std::max(gmax, record.grad_sq[k]);
    if (gmax <= 0.0) {
        // gradient already dead: the exponent integral has converged
        out.certain = false;
        out.prob_never = record.survival.back();
        return out;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = lo; k < n; ++k) {
        if (!(record.times[k] > 0.0) || !(record.grad_sq[k] > 0.0)) continue;
        const double lx = std::log(record.times[k]);
        const double ly = std::log(record.grad_sq[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m < 10)
        throw std::invalid_argument("classify_total_absorption: too few positive samples in window");
    const double md = static_cast<double>(m);
    const double denom = md * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
        throw std::invalid_argument("classify_total_absorption: degenerate fit window");
    out.fitted_power = (md * sxy - sx * sy) / denom;
    out.fitted_log_amplitude = (sy - out.fitted_power * sx) / md;
    double rss = 0.0;
    for (std::size_t k = lo; k < n; ++k) {
        if (!(record.times[k] > 0.0) || !(record.grad_sq[k] > 0.0)) continue;
        const double r = std::log(record.grad_sq[k]) -
                         (out.fitted_log_amplitude + out.fitted_power * std::log(record.times[k]));
        rss += r * r;
    }
    out.fit_rms_residual = std::sqrt(rss / md);

    if (out.fitted_power >= -1.0) {
        out.certain = true;
        out.prob_never = 0.0;
        return out;
    }
    const double t_end = record.times.back();
    const double tail_integral = std::exp(out.fitted_log_amplitude) *
                                 std::pow(t_end, out.fitted_power + 1.0) /
                                 (-1.0 - out.fitted_power);
    out.certain = false;
    out.prob_never = record.survival.back() * std::exp(-record.discount_coeff * tail_integral);
    return out;
}

}  // namespace mqm
