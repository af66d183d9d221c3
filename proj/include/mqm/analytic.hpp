#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "mqm/core.hpp"

// Closed forms for the Gaussian-slit geometry: free packet propagation,
// the half-line solution built from mirror images, transverse densities,
// screen absorption rates, and the lateral-wall eigenfunction series.

namespace mqm {

struct SlitGeometry {
    double x0 = 1.0;              // slit plane offset from the screen, > 0
    double screen_at = 0.0;       // screen plane position
    double y0 = 0.0;              // lateral wall half-separation; 0 = no walls
    double slit_half_width = pi / 2.0;

    void validate() const {
        if (!(x0 > 0.0)) throw std::invalid_argument("SlitGeometry: x0 must be > 0");
        if (y0 != 0.0 && !(y0 > slit_half_width))
            throw std::invalid_argument("SlitGeometry: y0 must exceed the slit half-width");
    }
};

namespace detail {

// sqrt(2*pi*i), principal branch
inline complex sqrt_two_pi_i() {
    return std::sqrt(complex(0.0, 2.0 * pi));
}

inline complex initial_gaussian(double z, const GaussianPacketSpec& p) {
    const complex norm = 1.0 / (sqrt_two_pi_i() * p.sigma_x);
    const double u = (z - p.x0) / p.sigma_x;
    return norm * std::exp(complex(-0.5 * u * u, p.k0 * (z - p.x0)));
}

// 16-point Gauss-Legendre nodes/weights on [-1,1]
inline const std::array<double, 16>& gl16_nodes() {
    static const std::array<double, 16> x = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
        -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
        0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
    return x;
}
inline const std::array<double, 16>& gl16_weights() {
    static const std::array<double, 16> w = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
        0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    return w;
}

}  // namespace detail

// Free evolution of the Gaussian packet (completed-square closed form).
// At t = 0 this reduces to the initial packet value.
inline complex free_gaussian_1d(double x, double t, const GaussianPacketSpec& packet,
                                const PhysicalParams& params) {
    packet.validate();
    params.validate();
    if (t < 0.0) throw std::invalid_argument("free_gaussian_1d: t must be >= 0");
    const double sig = packet.sigma_x;
    const double ht_m = params.hbar * t / params.mass;
    const complex spread(1.0, ht_m / (sig * sig));           // 1 + i*hbar*t/(m*sigma^2)
    const complex width2(sig * sig, ht_m);                   // sigma^2 + i*hbar*t/m
    const double xc = packet.x0 + params.hbar * packet.k0 * t / params.mass;
    const complex pref = 1.0 / (detail::sqrt_two_pi_i() * sig * std::sqrt(spread));
    const complex gauss = std::exp(-(x - xc) * (x - xc) / (2.0 * width2));
    const complex phase = std::exp(complex(
        0.0, packet.k0 * (x - packet.x0) - params.hbar * packet.k0 * packet.k0 * t / (2.0 * params.mass)));
    return pref * gauss * phase;
}

// d/dx of free_gaussian_1d at fixed t.
inline complex free_gaussian_1d_dx(double x, double t, const GaussianPacketSpec& packet,
                                   const PhysicalParams& params) {
    const double ht_m = params.hbar * t / params.mass;
    const complex width2(packet.sigma_x * packet.sigma_x, ht_m);
    const double xc = packet.x0 + params.hbar * packet.k0 * t / params.mass;
    const complex log_dx = -(x - xc) / width2 + complex(0.0, packet.k0);
    return free_gaussian_1d(x, t, packet, params) * log_dx;
}

enum class ImageFormula {
    auto_rule,   // two-term pair when sigma_x < |x0|/10, else truncated integral
    image_pair,  // source minus mirror image, both full Gaussians
    truncated    // quadrature of the wall-truncated initial packet
};

namespace detail {

inline GaussianPacketSpec mirrored(const GaussianPacketSpec& p) {
    GaussianPacketSpec m = p;
    m.x0 = -p.x0;
    m.k0 = -p.k0;
    return m;
}

// Integral over the source half-line of initial * (kernel(x-z) - kernel(x+z)).
// Composite Gauss-Legendre; panel length follows the kernel oscillation
// m*|x-z|/(hbar*t), so cost grows as 1/t.
inline complex truncated_images_quad(double x, double t, const GaussianPacketSpec& p,
                                     const PhysicalParams& params) {
    const double sig = p.sigma_x;
    const double z_hi = std::abs(p.x0) + 16.0 * sig;
    const double z_lo = std::max(0.0, std::abs(p.x0) - 16.0 * sig);
    const double mu = params.mass / (2.0 * params.hbar * t);
    const complex kpref = std::sqrt(params.mass / (complex(0.0, 2.0 * pi * params.hbar * t)));
    const double omega_max = 2.0 * mu * (std::abs(x) + z_hi) + std::abs(p.k0);
    const double len = z_hi - z_lo;
    double panel = std::min(sig, 18.0 / std::max(omega_max, 1e-30));
    const std::size_t n_panels =
        std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(len / panel)));
    if (n_panels > 2'000'000)
        throw std::runtime_error("halfline_images_1d: oscillatory quadrature too fine at this t");
    panel = len / static_cast<double>(n_panels);

    const auto& xs = gl16_nodes();
    const auto& ws = gl16_weights();
    complex acc = 0.0;
    for (std::size_t ip = 0; ip < n_panels; ++ip) {
        const double a = z_lo + panel * static_cast<double>(ip);
        const double c = a + 0.5 * panel;
        complex local = 0.0;
        for (int q = 0; q < 16; ++q) {
            const double z = c + 0.5 * panel * xs[q];
            const complex kd = std::exp(complex(0.0, mu * (x - z) * (x - z))) -
                               std::exp(complex(0.0, mu * (x + z) * (x + z)));
            local += ws[q] * initial_gaussian(z, p) * kd;
        }
        acc += local * (0.5 * panel);
    }
    return acc * kpref;
}

}  // namespace detail

// Half-line solution with the wall at x = 0 and the source on x > 0.
// Vanishes at the wall for every t and formula choice.
inline complex halfline_images_1d(double x, double t, const GaussianPacketSpec& packet,
                                  const PhysicalParams& params,
                                  ImageFormula formula = ImageFormula::auto_rule) {
    packet.validate();
    params.validate();
    if (t < 0.0) throw std::invalid_argument("halfline_images_1d: t must be >= 0");
    if (formula == ImageFormula::auto_rule)
        formula = (packet.sigma_x < std::abs(packet.x0) / 10.0) ? ImageFormula::image_pair
                                                                : ImageFormula::truncated;
    if (formula == ImageFormula::image_pair) {
        return free_gaussian_1d(x, t, packet, params) -
               free_gaussian_1d(x, t, detail::mirrored(packet), params);
    }
    if (t == 0.0) {
        if (x == 0.0) return 0.0;
        return x > 0.0 ? detail::initial_gaussian(x, packet) : -detail::initial_gaussian(-x, packet);
    }
    return detail::truncated_images_quad(x, t, packet, params);
}

// |d/dx psi_B(0,t)|^2 of the image-pair half-line solution, from the
// closed-form derivative of both terms.
inline double halfline_wall_gradient_sq(double t, const GaussianPacketSpec& packet,
                                        const PhysicalParams& params) {
    const complex d = free_gaussian_1d_dx(0.0, t, packet, params) -
                      free_gaussian_1d_dx(0.0, t, detail::mirrored(packet), params);
    return std::norm(d);
}

// |psi^2(y,t)|^2 of the freely spreading transverse Gaussian. The bare
// form is not unit-normalized: its y-integral is 1/(2*sigma_y*sqrt(pi)),
// constant in t. Pass normalized = true to scale that integral to 1.
inline double transverse_density(double y, double t, double sigma_y, const PhysicalParams& params,
                                 bool normalized = false) {
    if (!(sigma_y > 0.0)) throw std::invalid_argument("transverse_density: sigma_y must be > 0");
    if (t < 0.0) throw std::invalid_argument("transverse_density: t must be >= 0");
    const double ht = params.hbar * t / (params.mass * sigma_y);
    const double spread = ht * ht + sigma_y * sigma_y;
    double val = std::exp(-y * y / spread) / (2.0 * pi * sigma_y * std::sqrt(spread));
    if (normalized) val *= 2.0 * sigma_y * std::sqrt(pi);
    return val;
}

namespace detail {

// (hbar*t/(m*sigma))^2 + sigma^2, the spreading denominator shared by the
// screen-plane formulas
inline double spread_denom(double t, double sigma, const PhysicalParams& params) {
    const double ht = params.hbar * t / (params.mass * sigma);
    return ht * ht + sigma * sigma;
}

}  // namespace detail

// t-only factor of the screen absorption rate; same formula serves the
// rotated screen with its own offset.
inline double phi_factor(double t, double x0_or_a, const GaussianPacketSpec& packet,
                         const PhysicalParams& params) {
    if (t < 0.0) throw std::invalid_argument("phi_factor: t must be >= 0");
    const double sig = packet.sigma_x;
    const double d = detail::spread_denom(t, sig, params);
    return 4.0 * x0_or_a * x0_or_a * params.lambda * params.mass / (2.0 * pi * sig * sig) *
           std::pow(d, -1.5) * std::exp(-x0_or_a * x0_or_a / d);
}

// Free-packet probability density on the screen plane x = 0.
inline double screen_density_feynman(double y, double t, const SlitGeometry& geom,
                                     const GaussianPacketSpec& packet, const PhysicalParams& params) {
    const double sig = packet.sigma_x;
    const double d = detail::spread_denom(t, sig, params);
    const double xfac = std::exp(-geom.x0 * geom.x0 / d) / (2.0 * pi * sig * std::sqrt(d));
    return xfac * transverse_density(y, t, packet.sigma_y, params);
}

// Instantaneous absorption rate at (0, y) on the screen.
inline double slit_absorption_rate(double y, double t, const SlitGeometry& geom,
                                   const GaussianPacketSpec& packet, const PhysicalParams& params) {
    return phi_factor(t, geom.x0, packet, params) * transverse_density(y, t, packet.sigma_y, params);
}

// Ratio of the absorption rate to the free screen density; a function of t
// alone. Decays because earlier absorption attenuates the later packet.
inline double relative_brightness(double t, const SlitGeometry& geom,
                                  const GaussianPacketSpec& packet, const PhysicalParams& params) {
    const double sig = packet.sigma_x;
    const double d = detail::spread_denom(t, sig, params);
    const double m = params.mass;
    return 4.0 * geom.x0 * geom.x0 * params.lambda /
           (m * m * sig * sig * sig * sig * sig * sig * d);
}

// |sinc(pi k / 2)|^2: density of initial transverse velocities selected by a
// uniform slit of half-width pi/2.
inline double slit_velocity_density(double k) {
    const double u = 0.5 * pi * k;
    if (std::abs(u) < 1e-6) {
        const double u2 = u * u;
        const double s = 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
        return s * s;
    }
    const double s = std::sin(u) / u;
    return s * s;
}

enum class BoxPhase {
    bare,        // frequencies n^2 pi^2 / (hbar y0^2)
    standard     // exp{-i E_n t/hbar}, E_n = hbar^2 n^2 pi^2 / (2 m y0^2)
};

// Eigenfunction series for the packet between lateral walls at y = +-y0,
// truncated at n_max. Exactly zero at y = 0 and y = +-y0.
inline complex box_expansion(double y, double t, double y0, std::size_t n_max,
                             const PhysicalParams& params, BoxPhase phase = BoxPhase::bare) {
    if (!(y0 > 0.0)) throw std::invalid_argument("box_expansion: y0 must be > 0");
    if (n_max < 1) throw std::invalid_argument("box_expansion: n_max must be >= 1");
    if (std::abs(y) > y0) throw std::invalid_argument("box_expansion: |y| must be <= y0");
    if (y == 0.0 || y == y0 || y == -y0) return 0.0;
    const double pref = 2.0 / std::pow(pi, 1.5);
    complex acc = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double dn = static_cast<double>(n);
        const double en = (phase == BoxPhase::bare)
                              ? dn * dn * pi * pi / (y0 * y0)
                              : params.hbar * dn * dn * pi * pi / (2.0 * params.mass * y0 * y0);
        acc += pref / dn * std::cos(dn * pi * pi / (4.0 * y0)) * std::sin(dn * pi * y / y0) *
               std::exp(complex(0.0, -en * t / params.hbar));
    }
    return acc;
}

// d/dy of the truncated series; nonzero at the walls, where the series
// itself vanishes.
inline complex box_expansion_dy(double y, double t, double y0, std::size_t n_max,
                                const PhysicalParams& params, BoxPhase phase = BoxPhase::bare) {
    if (!(y0 > 0.0)) throw std::invalid_argument("box_expansion_dy: y0 must be > 0");
    if (n_max < 1) throw std::invalid_argument("box_expansion_dy: n_max must be >= 1");
    const double pref = 2.0 / std::pow(pi, 1.5);
    complex acc = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double dn = static_cast<double>(n);
        const double en = (phase == BoxPhase::bare)
                              ? dn * dn * pi * pi / (y0 * y0)
                              : params.hbar * dn * dn * pi * pi / (2.0 * params.mass * y0 * y0);
        acc += pref / dn * std::cos(dn * pi * pi / (4.0 * y0)) * (dn * pi / y0) *
               std::cos(dn * pi * y / y0) * std::exp(complex(0.0, -en * t / params.hbar));
    }
    return acc;
}

// Scale of the first omitted series term. The coefficient envelope decays
// only like 1/n, so this is a heuristic, not a rigorous remainder.
inline double box_series_tail_estimate(std::size_t n_max) {
    return 2.0 / (std::pow(pi, 1.5) * static_cast<double>(n_max + 1));
}

}  // namespace mqm
