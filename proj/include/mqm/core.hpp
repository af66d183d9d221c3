#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Shared domain types: physical constants, uniform grids, complex wave
// fields, and the field algebra every other header builds on.

namespace mqm {

using complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

struct PhysicalParams {
    double hbar = 1.0;
    double mass = 1.0;
    double lambda = 1.0;  // detector absorption length, >= 0

    // coefficient lambda*hbar/(m*pi) multiplying |grad psi_B|^2 in the
    // survival exponent and the absorption current
    double absorption_coeff() const { return lambda * hbar / (mass * pi); }

    void validate() const {
        if (!(hbar > 0.0)) throw std::invalid_argument("PhysicalParams: hbar must be > 0");
        if (!(mass > 0.0)) throw std::invalid_argument("PhysicalParams: mass must be > 0");
        if (!(lambda >= 0.0)) throw std::invalid_argument("PhysicalParams: lambda must be >= 0");
    }
};

// Uniform grid, endpoints included.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_points = 2;

    Grid1D() = default;
    Grid1D(double lo, double hi, std::size_t n) : x_min(lo), x_max(hi), n_points(n) { validate(); }

    double dx() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }

    void validate() const {
        if (n_points < 3) throw std::invalid_argument("Grid1D: n_points must be >= 3");
        if (!(x_min < x_max)) throw std::invalid_argument("Grid1D: x_min must be < x_max");
        if (!std::isfinite(x_min) || !std::isfinite(x_max))
            throw std::invalid_argument("Grid1D: bounds must be finite");
    }
};

inline bool same_grid(const Grid1D& a, const Grid1D& b) {
    const double tol = 1e-12 * (std::abs(a.x_max - a.x_min) + 1.0);
    return a.n_points == b.n_points && std::abs(a.x_min - b.x_min) <= tol &&
           std::abs(a.x_max - b.x_max) <= tol;
}

// Complex amplitudes on a grid at one instant.
struct WaveField {
    Grid1D grid;
    std::vector<complex> amplitudes;
    double time = 0.0;

    WaveField() = default;
    WaveField(Grid1D g, std::vector<complex> a, double t = 0.0)
        : grid(g), amplitudes(std::move(a)), time(t) {
        validate();
    }

    void validate() const {
        grid.validate();
        if (amplitudes.size() != grid.n_points)
            throw std::invalid_argument("WaveField: amplitude count does not match grid");
        for (const complex& a : amplitudes)
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
                throw std::invalid_argument("WaveField: non-finite amplitude");
    }
};

struct GaussianPacketSpec {
    double x0 = 1.0;       // packet center
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double k0 = 0.0;       // optional drift wavenumber

    void validate() const {
        if (!(sigma_x > 0.0)) throw std::invalid_argument("GaussianPacketSpec: sigma_x must be > 0");
        if (!(sigma_y > 0.0)) throw std::invalid_argument("GaussianPacketSpec: sigma_y must be > 0");
    }
};

// Trapezoid quadrature of samples on a uniform grid.
inline double trapezoid(const std::vector<double>& f, double dx) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t j = 1; j + 1 < f.size(); ++j) s += f[j];
    return s * dx;
}

// Trapezoid over arbitrary (sorted) abscissae.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    if (t.size() != f.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (f[k] + f[k - 1]) * (t[k] - t[k - 1]);
    return s;
}

inline double l2_norm_sq(const WaveField& field) {
    const std::size_t n = field.grid.n_points;
    double s = 0.5 * (std::norm(field.amplitudes.front()) + std::norm(field.amplitudes.back()));
    for (std::size_t j = 1; j + 1 < n; ++j) s += std::norm(field.amplitudes[j]);
    return s * field.grid.dx();
}

inline complex inner_product(const WaveField& a, const WaveField& b) {
    if (!same_grid(a.grid, b.grid)) throw std::invalid_argument("inner_product: grid mismatch");
    const std::size_t n = a.grid.n_points;
    complex s = 0.5 * (std::conj(a.amplitudes.front()) * b.amplitudes.front() +
                       std::conj(a.amplitudes.back()) * b.amplitudes.back());
    for (std::size_t j = 1; j + 1 < n; ++j) s += std::conj(a.amplitudes[j]) * b.amplitudes[j];
    return s * a.grid.dx();
}

}  // namespace mqm
