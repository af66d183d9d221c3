#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqm/core.hpp"

// Time-dependent Schrodinger evolution with a zero boundary condition at
// the detector wall, plus the bookkeeping derived from the wall gradient:
// survival probability, discounted wave function, absorption current.

namespace mqm {

// Raised when a run trips a runtime guard (far-boundary contamination,
// non-finite amplitudes, instability).
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct DetectorSpec {
    enum class Side { above, below };

    double location = 0.0;
    Side side = Side::above;  // which half-space holds the particle

    // Detector must sit on the matching edge of the computational grid.
    void validate_on(const Grid1D& grid) const {
        const double edge = (side == Side::above) ? grid.x_min : grid.x_max;
        if (std::abs(location - edge) > 1e-9 * grid.dx())
            throw std::invalid_argument("DetectorSpec: detector must lie on the domain boundary");
    }
};

// Per-step history of the wall gradient and the derived discounting series.
//
// survival[k] = exp{-coeff * trapz(grad_sq, 0..t_k)}, accumulated as a
// product of per-step factors so it is non-increasing by construction;
// current[k] = coeff * grad_sq[k] * survival[k].
struct SurvivalRecord {
    std::vector<double> times;
    std::vector<double> grad_sq;
    std::vector<double> survival;
    std::vector<double> current;
    double discount_coeff = 0.0;  // lambda*hbar/(m*pi)

    std::size_t size() const { return times.size(); }

    // Integral of the current over [times[i], times[j]], evaluated by the
    // rule consistent with the survival accumulation: the current is the
    // exact time derivative of -survival under the piecewise-linear
    // exponent, so the step integral telescopes to a survival difference.
    double absorbed_mass(std::size_t i, std::size_t j) const {
        if (i > j || j >= survival.size())
            throw std::invalid_argument("SurvivalRecord: bad absorbed_mass range");
        return survival[i] - survival[j];
    }
    double absorbed_mass() const {
        return survival.empty() ? 0.0 : absorbed_mass(0, survival.size() - 1);
    }

    void validate() const {
        const std::size_t n = times.size();
        if (grad_sq.size() != n || survival.size() != n || current.size() != n)
            throw std::invalid_argument("SurvivalRecord: series length mismatch");
        if (n == 0) return;
        if (survival.front() != 1.0)
            throw std::invalid_argument("SurvivalRecord: survival[0] must be 1");
        for (std::size_t k = 0; k < n; ++k) {
            if (!(survival[k] >= 0.0 && survival[k] <= 1.0))
                throw std::invalid_argument("SurvivalRecord: survival out of [0,1]");
            if (k > 0 && survival[k] > survival[k - 1])
                throw std::invalid_argument("SurvivalRecord: survival must be non-increasing");
            if (!(current[k] >= 0.0))
                throw std::invalid_argument("SurvivalRecord: negative current");
        }
    }
};

// Streaming trapezoid accumulation of the survival exponent. Each step
// multiplies by exp(-coeff*(g_prev+g)/2*dt) <= 1, so monotonicity is exact.
class SurvivalAccumulator {
  public:
    explicit SurvivalAccumulator(const PhysicalParams& params)
        : coeff_(params.absorption_coeff()) {}

    // First call records the initial sample and returns 1.
    double push(double t, double grad_sq_value) {
        if (grad_sq_value < 0.0)
            throw std::invalid_argument("SurvivalAccumulator: grad_sq must be >= 0");
        if (has_prev_) {
            const double dt = t - prev_t_;
            if (dt < 0.0) throw std::invalid_argument("SurvivalAccumulator: time went backwards");
            survival_ *= std::exp(-coeff_ * 0.5 * (prev_g_ + grad_sq_value) * dt);
        }
        prev_t_ = t;
        prev_g_ = grad_sq_value;
        has_prev_ = true;
        return survival_;
    }

    double survival() const { return survival_; }
    double coeff() const { return coeff_; }

  private:
    double coeff_;
    double survival_ = 1.0;
    double prev_t_ = 0.0;
    double prev_g_ = 0.0;
    bool has_prev_ = false;
};

inline double absorption_current(double grad_sq, double survival, const PhysicalParams& params) {
    if (grad_sq < 0.0) throw std::invalid_argument("absorption_current: grad_sq must be >= 0");
    if (!(survival >= 0.0 && survival <= 1.0 + 1e-15))
        throw std::invalid_argument("absorption_current: survival out of [0,1]");
    return params.absorption_coeff() * grad_sq * survival;
}

// Build the full discounting series from a gradient history.
inline SurvivalRecord make_survival_record(std::vector<double> times, std::vector<double> grad_sq,
                                           const PhysicalParams& params) {
    if (times.size() != grad_sq.size())
        throw std::invalid_argument("make_survival_record: size mismatch");
    SurvivalRecord rec;
    rec.discount_coeff = params.absorption_coeff();
    rec.times = std::move(times);
    rec.grad_sq = std::move(grad_sq);
    rec.survival.reserve(rec.times.size());
    rec.current.reserve(rec.times.size());
    SurvivalAccumulator acc(params);
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        const double s = acc.push(rec.times[k], rec.grad_sq[k]);
        rec.survival.push_back(s);
        rec.current.push_back(rec.discount_coeff * rec.grad_sq[k] * s);
    }
    return rec;
}

// Squared modulus of the one-sided second-order normal derivative at the
// detector edge: (-3 psi_0 + 4 psi_1 - psi_2)/(2 dx) with psi_0 pinned.
inline double boundary_gradient_sq(const WaveField& field, const DetectorSpec& detector) {
    detector.validate_on(field.grid);
    if (field.grid.n_points < 3)
        throw std::invalid_argument("boundary_gradient_sq: need at least 3 points");
    const double dx = field.grid.dx();
    const auto& a = field.amplitudes;
    complex d;
    if (detector.side == DetectorSpec::Side::above)
        d = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dx);
    else {
        const std::size_t n = a.size();
        d = (3.0 * a[n - 1] - 4.0 * a[n - 2] + a[n - 3]) / (2.0 * dx);
    }
    return std::norm(d);
}

// psi_B scaled by sqrt(S): the squared modulus becomes the joint density of
// position and non-absorption.
inline WaveField discounted_wavefunction(const WaveField& field, double survival_at_t) {
    if (!(survival_at_t >= 0.0 && survival_at_t <= 1.0))
        throw std::invalid_argument("discounted_wavefunction: survival must be in [0,1]");
    WaveField out = field;
    const double s = std::sqrt(survival_at_t);
    for (complex& a : out.amplitudes) a *= s;
    return out;
}

// Net probability current 2 Im(conj(psi) d psi/dx), a diagnostic; it
// vanishes identically at the detector where psi does.
inline std::vector<double> schrodinger_current(const WaveField& field) {
    const std::size_t n = field.grid.n_points;
    const double dx = field.grid.dx();
    const auto& a = field.amplitudes;
    std::vector<double> j(n);
    auto cur = [&](const complex& psi, const complex& dpsi) {
        return 2.0 * std::imag(std::conj(psi) * dpsi);
    };
    j[0] = cur(a[0], (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dx));
    for (std::size_t k = 1; k + 1 < n; ++k) j[k] = cur(a[k], (a[k + 1] - a[k - 1]) / (2.0 * dx));
    j[n - 1] = cur(a[n - 1], (3.0 * a[n - 1] - 4.0 * a[n - 2] + a[n - 3]) / (2.0 * dx));
    return j;
}

struct EvolveOptions {
    std::size_t snapshot_stride = 0;   // 0: keep only the final snapshot
    double far_mass_guard = 1e-6;      // abort when this norm fraction nears the far edge
    std::size_t far_guard_points = 10;
};

struct EvolutionResult {
    std::vector<WaveField> snapshots;
    SurvivalRecord record;
    double norm_initial = 0.0;
    double norm_max_drift = 0.0;  // max |norm(t) - norm(0)| over the run
};

namespace detail {

// Tridiagonal solve with constant coefficients, factored once. Interior
// system only; Dirichlet rows stay pinned at zero.
class CrankNicolsonStepper {
  public:
    CrankNicolsonStepper(const Grid1D& grid, const std::vector<double>& potential, double dt,
                         const PhysicalParams& params)
        : n_(grid.n_points) {
        const double dx = grid.dx();
        r_ = complex(0.0, -params.hbar * dt / (4.0 * params.mass * dx * dx));
        const std::size_t m = n_ - 2;
        lhs_diag_.resize(m);
        rhs_diag_.resize(m);
        cp_.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            const complex vterm(0.0, dt * potential[j + 1] / (2.0 * params.hbar));
            lhs_diag_[j] = 1.0 - 2.0 * r_ + vterm;
            rhs_diag_[j] = 1.0 + 2.0 * r_ - vterm;
        }
        // forward-elimination factors of the constant LHS
        cp_[0] = r_ / lhs_diag_[0];
        denom_.resize(m);
        denom_[0] = lhs_diag_[0];
        for (std::size_t j = 1; j < m; ++j) {
            denom_[j] = lhs_diag_[j] - r_ * cp_[j - 1];
            if (j + 1 < m) cp_[j] = r_ / denom_[j];
        }
        b_.resize(m);
        x_.resize(m);
        resid_.resize(m);
        corr_.resize(m);
    }

    void step(std::vector<complex>& psi) {
        const std::size_t m = n_ - 2;
        // b = (1 + 2r - v) psi_j - r (psi_{j-1} + psi_{j+1}); edge neighbors are zero
        for (std::size_t j = 0; j < m; ++j) {
            complex acc = rhs_diag_[j] * psi[j + 1];
            if (j > 0) acc -= r_ * psi[j];
            if (j + 1 < m) acc -= r_ * psi[j + 2];
            b_[j] = acc;
        }
        solve(b_, x_);
        // one round of residual correction: the per-step solve error loses
        // its bias, so the norm drift stays a random walk at rounding level
        for (std::size_t j = 0; j < m; ++j) {
            complex ax = lhs_diag_[j] * x_[j];
            if (j > 0) ax += r_ * x_[j - 1];
            if (j + 1 < m) ax += r_ * x_[j + 1];
            resid_[j] = b_[j] - ax;
        }
        solve(resid_, corr_);
        for (std::size_t j = 0; j < m; ++j) psi[j + 1] = x_[j] + corr_[j];
        psi[0] = 0.0;
        psi[n_ - 1] = 0.0;
    }

  private:
    void solve(const std::vector<complex>& b, std::vector<complex>& x) {
        const std::size_t m = n_ - 2;
        x.resize(m);
        x[0] = b[0] / denom_[0];
        for (std::size_t j = 1; j < m; ++j) x[j] = (b[j] - r_ * x[j - 1]) / denom_[j];
        for (std::size_t j = m - 1; j-- > 0;) x[j] -= cp_[j] * x[j + 1];
    }

    std::size_t n_;
    complex r_;
    std::vector<complex> lhs_diag_, rhs_diag_, cp_, denom_, b_, x_, resid_, corr_;
};

}  // namespace detail

// Crank-Nicolson evolution with both edges pinned to zero; the Cayley form
// conserves the discrete norm exactly, so discounting is the only
// probability loss. Records grad_sq, S and J at every step.
inline EvolutionResult evolve_dirichlet(const WaveField& initial,
                                        const std::function<double(double)>& potential,
                                        const DetectorSpec& detector, double dt,
                                        std::size_t n_steps, const PhysicalParams& params,
                                        const EvolveOptions& opts = {}) {
    initial.validate();
    params.validate();
    detector.validate_on(initial.grid);
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_dirichlet: dt must be > 0");
    const Grid1D& grid = initial.grid;
    const std::size_t n = grid.n_points;

    double sup = 0.0;
    for (const complex& a : initial.amplitudes) sup = std::max(sup, std::abs(a));
    const std::size_t det_idx = (detector.side == DetectorSpec::Side::above) ? 0 : n - 1;
    if (std::abs(initial.amplitudes[det_idx]) > 1e-10 * std::max(sup, 1.0))
        throw std::invalid_argument("evolve_dirichlet: initial field does not vanish at the detector");

    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = potential ? potential(grid.x(j)) : 0.0;
    detail::CrankNicolsonStepper stepper(grid, v, dt, params);

    EvolutionResult res;
    res.record.discount_coeff = params.absorption_coeff();
    res.record.times.reserve(n_steps + 1);
    res.record.grad_sq.reserve(n_steps + 1);
    res.record.survival.reserve(n_steps + 1);
    res.record.current.reserve(n_steps + 1);

    WaveField psi = initial;
    psi.amplitudes[det_idx] = 0.0;
    psi.amplitudes[(det_idx == 0) ? n - 1 : 0] = 0.0;
    res.norm_initial = l2_norm_sq(psi);

    SurvivalAccumulator acc(params);

    auto record_step = [&](double t) {
        const double g = boundary_gradient_sq(psi, detector);
        const double s = acc.push(t, g);
        res.record.times.push_back(t);
        res.record.grad_sq.push_back(g);
        res.record.survival.push_back(s);
        res.record.current.push_back(res.record.discount_coeff * g * s);
    };

    auto maybe_snapshot = [&](std::size_t k) {
        if (opts.snapshot_stride > 0 && k % opts.snapshot_stride == 0)
            res.snapshots.push_back(psi);
    };

    record_step(psi.time);
    maybe_snapshot(0);

    for (std::size_t k = 1; k <= n_steps; ++k) {
        stepper.step(psi.amplitudes);
        psi.time += dt;

        const double norm = l2_norm_sq(psi);
        if (!std::isfinite(norm))
            throw numerical_error("evolve_dirichlet: non-finite amplitudes at step " +
                                  std::to_string(k));
        res.norm_max_drift = std::max(res.norm_max_drift, std::abs(norm - res.norm_initial));

        if (opts.far_mass_guard > 0.0 && n > opts.far_guard_points + 2) {
            double edge_mass = 0.0;
            for (std::size_t j = 0; j <= opts.far_guard_points; ++j) {
                const std::size_t idx = (det_idx == 0) ? n - 1 - j : j;
                edge_mass += std::norm(psi.amplitudes[idx]);
            }
            edge_mass *= grid.dx();
            if (edge_mass > opts.far_mass_guard * res.norm_initial)
                throw numerical_error(
                    "evolve_dirichlet: far-boundary contamination at step " + std::to_string(k) +
                    " (mass fraction " + std::to_string(edge_mass / res.norm_initial) + ")");
        }

        record_step(psi.time);
        if (k == n_steps)
            res.snapshots.push_back(psi);
        else
            maybe_snapshot(k);
    }
    return res;
}

}  // namespace mqm
