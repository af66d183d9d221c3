#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mqm/analytic.hpp"
#include "mqm/core.hpp"
#include "mqm/screen.hpp"

// Recovery of the free-packet density |psi_F(x,y,t)|^2 from absorption
// currents measured on the original screen and on a rotated one. All
// time-only factors fold into one normalization; points where the measured
// denominator current is too small are masked, never extrapolated.

namespace mqm {

struct RotationFrame {
    double theta = 0.0;
    double alpha = 1.0, beta = 0.0;   // x' = alpha x + beta y
    double gamma = 0.0, delta = 1.0;  // y' = gamma x + delta y
    double a_prime = 0.0;             // packet-center distance to the rotated screen
};

inline RotationFrame rotate_frame(double theta, double a_prime) {
    if (std::abs(std::sin(theta)) < 1e-12)
        throw std::invalid_argument("rotate_frame: degenerate rotation: beta = 0");
    RotationFrame f;
    f.theta = theta;
    f.alpha = std::cos(theta);
    f.beta = std::sin(theta);
    f.gamma = -std::sin(theta);
    f.delta = std::cos(theta);
    f.a_prime = a_prime;
    return f;
}

struct ReconstructionResult {
    std::vector<double> x_axis;
    std::vector<double> y_axis;
    std::vector<double> density;     // row-major, x_axis.size() rows
    std::vector<std::uint8_t> mask;  // 1 = valid, 0 = masked
    double masked_fraction = 0.0;
    int interpolation_order = 0;     // 0: lattice hits only, 1: bilinear used
    double normalization = 0.0;      // N(t): density = N * raw product
    double denominator_threshold = 0.0;

    double& at(std::size_t ix, std::size_t iy) { return density[ix * y_axis.size() + iy]; }
    double at(std::size_t ix, std::size_t iy) const { return density[ix * y_axis.size() + iy]; }
    bool valid(std::size_t ix, std::size_t iy) const { return mask[ix * y_axis.size() + iy] != 0; }
};

// Trapezoid integral over the unmasked part of a rectangular grid.
inline double masked_grid_integral(const std::vector<double>& x_axis,
                                   const std::vector<double>& y_axis,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& mask) {
    const std::size_t nx = x_axis.size(), ny = y_axis.size();
    if (values.size() != nx * ny || mask.size() != nx * ny)
        throw std::invalid_argument("masked_grid_integral: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double wx = (i == 0 ? 0.5 * (x_axis[1] - x_axis[0])
                                  : i + 1 == nx ? 0.5 * (x_axis[nx - 1] - x_axis[nx - 2])
                                                : 0.5 * (x_axis[i + 1] - x_axis[i - 1]));
        for (std::size_t j = 0; j < ny; ++j) {
            if (!mask[i * ny + j]) continue;
            const double wy = (j == 0 ? 0.5 * (y_axis[1] - y_axis[0])
                                      : j + 1 == ny ? 0.5 * (y_axis[ny - 1] - y_axis[ny - 2])
                                                    : 0.5 * (y_axis[j + 1] - y_axis[j - 1]));
            acc += wx * wy * values[i * ny + j];
        }
    }
    return acc;
}

// Inverse normalization of an (already masked) density grid. Positive;
// scaling the inputs by c scales the result by c.
inline double normalization_constant(const std::vector<double>& x_axis,
                                     const std::vector<double>& y_axis,
                                     const std::vector<double>& values,
                                     const std::vector<std::uint8_t>& mask) {
    const double n_inv = masked_grid_integral(x_axis, y_axis, values, mask);
    if (!(n_inv > 0.0))
        throw std::invalid_argument("normalization_constant: zero unmasked mass");
    return n_inv;
}

// Assemble |psi_F(x,y,t)|^2 on the requested grid from the two screen
// measurements. The denominator threshold is relative to the largest
// current seen on the original screen at this t.
inline ReconstructionResult reconstruct_density(const ScreenMeasurement& m0,
                                                const ScreenMeasurement& m1,
                                                const RotationFrame& frame, double t,
                                                const GaussianPacketSpec& packet,
                                                const PhysicalParams& params,
                                                std::vector<double> x_axis,
                                                std::vector<double> y_axis,
                                                double epsilon_rel = 1e-6) {
    m0.validate();
    m1.validate();
    packet.validate();
    params.validate();
    if (x_axis.size() < 2 || y_axis.size() < 2)
        throw std::invalid_argument("reconstruct_density: need >= 2 axis points");
    if (std::abs(frame.beta) < 1e-12)
        throw std::invalid_argument("reconstruct_density: degenerate rotation: beta = 0");

    ReconstructionResult res;
    res.x_axis = std::move(x_axis);
    res.y_axis = std::move(y_axis);
    const std::size_t nx = res.x_axis.size(), ny = res.y_axis.size();
    res.density.assign(nx * ny, 0.0);
    res.mask.assign(nx * ny, 0);

    // epsilon from the screen-0 current level at this time slice
    double m0_max = 0.0;
    {
        int dummy = 0;
        for (double pos : m0.positions) m0_max = std::max(m0_max, m0.sample(pos, t, &dummy));
    }
    res.denominator_threshold = epsilon_rel * m0_max;

    int interp = 0;
    std::vector<double> num0(ny, 0.0);
    for (std::size_t j = 0; j < ny; ++j) num0[j] = m0.sample(res.y_axis[j], t, &interp);

    std::size_t masked = 0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = res.x_axis[i];
        const double u = (frame.a_prime - frame.alpha * x) / frame.beta;  // screen-0 denominator point
        const double y_rot = frame.gamma * x + frame.delta * u;           // rotated-screen position
        double denom = 0.0, num1 = 0.0;
        bool ok = true;
        try {
            denom = m0.sample(u, t, &interp);
            num1 = m1.sample(y_rot, t, &interp);
        } catch (const std::invalid_argument&) {
            ok = false;  // query fell outside the sampled screens
        }
        if (!ok || denom < res.denominator_threshold) {
            masked += ny;
            continue;
        }
        const double row_factor = num1 / denom;
        for (std::size_t j = 0; j < ny; ++j) {
            res.density[i * ny + j] = row_factor * num0[j];
            res.mask[i * ny + j] = 1;
        }
    }
    res.interpolation_order = interp;
    res.masked_fraction = static_cast<double>(masked) / static_cast<double>(nx * ny);

    const double n_inv = normalization_constant(res.x_axis, res.y_axis, res.density, res.mask);
    res.normalization = 1.0 / n_inv;
    for (std::size_t k = 0; k < res.density.size(); ++k)
        res.density[k] = res.mask[k] ? res.density[k] * res.normalization : 0.0;
    return res;
}

}  // namespace mqm
