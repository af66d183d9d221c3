#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mqm/core.hpp"
#include "mqm/solver.hpp"

// Brownian first-passage comparator: Euler-Maruyama sampling with a
// Brownian-bridge crossing correction, a conservative Fokker-Planck solve
// with an absorbing wall, and the stationary mean-residence density.

namespace mqm {

struct FarWall {
    enum class Kind { absorbing, reflecting };
    double position = 0.0;
    Kind kind = Kind::reflecting;
};

struct DiffusionSpec {
    double x0 = 1.0;                 // release point, strictly inside the domain
    double diffusion_coeff = 0.5;    // D in  dp/dt = -d(v p)/dx + D d2p/dx2
    double drift = 0.0;
    DetectorSpec boundary;           // absorbing wall
    std::optional<FarWall> far_wall; // optional second wall
    double horizon = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 1;

    void validate() const {
        if (!(diffusion_coeff > 0.0))
            throw std::invalid_argument("DiffusionSpec: diffusion_coeff must be > 0");
        if (!(dt > 0.0)) throw std::invalid_argument("DiffusionSpec: dt must be > 0");
        if (!(horizon > 0.0)) throw std::invalid_argument("DiffusionSpec: horizon must be > 0");
        if (n_paths < 1) throw std::invalid_argument("DiffusionSpec: n_paths must be >= 1");
        const bool above = boundary.side == DetectorSpec::Side::above;
        if (above ? !(x0 > boundary.location) : !(x0 < boundary.location))
            throw std::invalid_argument("DiffusionSpec: x0 must lie strictly inside the domain");
        if (far_wall) {
            const double f = far_wall->position;
            if (above ? !(f > x0) : !(f < x0))
                throw std::invalid_argument("DiffusionSpec: far wall must lie beyond x0");
        }
    }
};

struct FirstPassageSample {
    double hit_time = 0.0;   // horizon when censored
    double hit_point = 0.0;  // wall position hit; meaningful only if !censored
    bool censored = false;
};

namespace detail {

// splitmix64: decorrelates per-path seeds so batches can run on any number
// of threads with identical output.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline FirstPassageSample run_one_path(const DiffusionSpec& spec, std::uint64_t path_seed) {
    std::mt19937_64 rng(path_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // mirror everything so the absorbing wall sits below the particle
    const bool flip = spec.boundary.side == DetectorSpec::Side::below;
    const double wall = flip ? -spec.boundary.location : spec.boundary.location;
    double x = flip ? -spec.x0 : spec.x0;
    const double drift = flip ? -spec.drift : spec.drift;
    const double far = spec.far_wall ? (flip ? -spec.far_wall->position : spec.far_wall->position)
                                     : 0.0;

    const double sdt = std::sqrt(2.0 * spec.diffusion_coeff * spec.dt);
    const double inv_2ddt = 1.0 / (2.0 * spec.diffusion_coeff * spec.dt);
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(spec.horizon / spec.dt));

    FirstPassageSample out;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double x_new = x + drift * spec.dt + sdt * normal(rng);
        const double t_end = static_cast<double>(k + 1) * spec.dt;
        if (x_new <= wall) {
            const double frac = (x - wall) / (x - x_new);
            out.hit_time = static_cast<double>(k) * spec.dt + frac * spec.dt;
            out.hit_point = spec.boundary.location;
            return out;
        }
        // bridge correction: crossing probability for a step that ends on
        // the survival side; skipped once the exponent is beyond underflow
        const double q = 2.0 * (x - wall) * (x_new - wall) * inv_2ddt;
        if (q < 40.0 && uniform(rng) < std::exp(-q)) {
            out.hit_time = t_end;
            out.hit_point = spec.boundary.location;
            return out;
        }
        if (spec.far_wall) {
            if (spec.far_wall->kind == FarWall::Kind::absorbing) {
                if (x_new >= far) {
                    const double frac = (far - x) / (x_new - x);
                    out.hit_time = static_cast<double>(k) * spec.dt + frac * spec.dt;
                    out.hit_point = spec.far_wall->position;
                    return out;
                }
                const double qf = 2.0 * (far - x) * (far - x_new) * inv_2ddt;
                if (qf < 40.0 && uniform(rng) < std::exp(-qf)) {
                    out.hit_time = t_end;
                    out.hit_point = spec.far_wall->position;
                    return out;
                }
                x = x_new;
                continue;
            }
            x = (x_new > far) ? 2.0 * far - x_new : x_new;
            continue;
        }
        x = x_new;
    }
    out.censored = true;
    out.hit_time = spec.horizon;
    return out;
}

}  // namespace detail

// Euler-Maruyama first-passage sampling. Output depends on (spec, seed)
// only: every path owns an engine keyed by splitmix64(seed, index), so the
// thread count never changes the samples.
inline std::vector<FirstPassageSample> simulate_first_passage(const DiffusionSpec& spec,
                                                              std::uint64_t seed,
                                                              unsigned threads = 1) {
    spec.validate();
    std::vector<FirstPassageSample> samples(spec.n_paths);
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(threads, std::thread::hardware_concurrency() > 0
                                                     ? std::thread::hardware_concurrency()
                                                     : 1));
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            samples[i] = detail::run_one_path(spec, detail::splitmix64(seed ^ (0x51ed2701ULL + i)));
    };
    if (n_threads == 1 || spec.n_paths < 1024) {
        worker(0, spec.n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (spec.n_paths + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min<std::size_t>(lo + chunk, spec.n_paths);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return samples;
}

struct FptHistogram {
    double bin_width = 0.0;
    std::vector<double> bin_centers;
    std::vector<double> density;   // counts / (n_samples * bin_width)
    double censored_mass = 0.0;
    std::size_t n_samples = 0;
};

// Normalized first-passage-time histogram; censored paths are reported as
// mass, never folded into the bins.
inline FptHistogram fpt_density_histogram(const std::vector<FirstPassageSample>& samples,
                                          double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("fpt_density_histogram: bin_width > 0");
    if (samples.empty()) throw std::invalid_argument("fpt_density_histogram: no samples");
    FptHistogram h;
    h.bin_width = bin_width;
    h.n_samples = samples.size();
    double t_max = 0.0;
    std::size_t censored = 0;
    for (const auto& s : samples) {
        if (s.censored)
            ++censored;
        else
            t_max = std::max(t_max, s.hit_time);
    }
    h.censored_mass = static_cast<double>(censored) / static_cast<double>(samples.size());
    if (censored == samples.size()) return h;  // empty density, mass 1

    const std::size_t n_bins = static_cast<std::size_t>(std::floor(t_max / bin_width)) + 1;
    std::vector<std::size_t> counts(n_bins, 0);
    for (const auto& s : samples) {
        if (s.censored) continue;
        std::size_t b = static_cast<std::size_t>(s.hit_time / bin_width);
        if (b >= n_bins) b = n_bins - 1;
        ++counts[b];
    }
    h.bin_centers.resize(n_bins);
    h.density.resize(n_bins);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bin_width);
    for (std::size_t b = 0; b < n_bins; ++b) {
        h.bin_centers[b] = (static_cast<double>(b) + 0.5) * bin_width;
        h.density[b] = static_cast<double>(counts[b]) * norm;
    }
    return h;
}

struct FokkerPlanckResult {
    std::vector<double> times;             // step edges, n_steps + 1 entries
    std::vector<double> boundary_current;  // flux into the detector wall per step
    std::vector<double> absorbed_cdf;      // running time integral of the current
    std::vector<double> surviving_mass;
    std::vector<std::pair<double, std::vector<double>>> snapshots;
};

// Explicit conservative flux-form update of dp/dt = -d(v p)/dx + D d2p/dx2
// with p = 0 on the absorbing wall. Mass bookkeeping is exact: the mass
// lost per step equals dt times the recorded edge fluxes.
inline FokkerPlanckResult fokker_planck_absorbing(const DiffusionSpec& spec, const Grid1D& grid,
                                                  std::size_t n_steps,
                                                  std::size_t snapshot_stride = 0) {
    spec.validate();
    grid.validate();
    const double dx = grid.dx();
    const double d_coef = spec.diffusion_coeff;
    const double v = spec.drift;
    const double mu = d_coef * spec.dt / (dx * dx);
    if (mu > 0.5)
        throw std::invalid_argument("fokker_planck_absorbing: dt = " + std::to_string(spec.dt) +
                                    " violates the stability bound dt <= dx^2/(2D) = " +
                                    std::to_string(0.5 * dx * dx / d_coef));
    if (std::abs(v) * dx > 2.0 * d_coef)
        throw std::invalid_argument(
            "fokker_planck_absorbing: cell Peclet number exceeds 2; refine dx");
    spec.boundary.validate_on(grid);
    const bool wall_left = spec.boundary.side == DetectorSpec::Side::above;
    const bool far_absorbing =
        spec.far_wall && spec.far_wall->kind == FarWall::Kind::absorbing;

    const std::size_t n = grid.n_points;
    std::vector<double> p(n, 0.0);
    {
        // delta release at the grid node nearest x0
        std::size_t j0 = static_cast<std::size_t>(std::llround((spec.x0 - grid.x_min) / dx));
        j0 = std::clamp<std::size_t>(j0, 1, n - 2);
        p[j0] = 1.0 / dx;
    }

    FokkerPlanckResult res;
    res.times.reserve(n_steps + 1);
    res.boundary_current.reserve(n_steps + 1);
    res.absorbed_cdf.reserve(n_steps + 1);
    res.surviving_mass.reserve(n_steps + 1);

    auto mass = [&]() {
        double s = 0.0;
        for (std::size_t j = 1; j + 1 < n; ++j) s += p[j];
        return s * dx;
    };
    auto flux = [&](double pl, double pr) {  // at a face, toward +x
        return v * 0.5 * (pl + pr) - d_coef * (pr - pl) / dx;
    };

    std::vector<double> pn(n, 0.0);
    double absorbed = 0.0;
    double t = 0.0;
    res.times.push_back(0.0);
    res.surviving_mass.push_back(mass());
    res.absorbed_cdf.push_back(0.0);
    {
        const double j_wall = wall_left ? -flux(0.0, p[1]) : flux(p[n - 2], 0.0);
        res.boundary_current.push_back(std::max(0.0, j_wall));
    }
    if (snapshot_stride > 0) res.snapshots.emplace_back(0.0, p);

    for (std::size_t k = 1; k <= n_steps; ++k) {
        // wall ends carry p = 0; a reflecting far end gets a zero-flux face
        double out_left, out_right;
        if (wall_left) {
            out_left = -flux(0.0, p[1]);
            out_right = far_absorbing ? flux(p[n - 2], 0.0) : 0.0;
        } else {
            out_right = flux(p[n - 2], 0.0);
            out_left = far_absorbing ? -flux(0.0, p[1]) : 0.0;
        }
        for (std::size_t j = 1; j + 1 < n; ++j) {
            double f_left, f_right;
            if (j == 1)
                f_left = (wall_left || far_absorbing) ? flux(0.0, p[1]) : 0.0;
            else
                f_left = flux(p[j - 1], p[j]);
            if (j == n - 2)
                f_right = (!wall_left || far_absorbing) ? flux(p[n - 2], 0.0) : 0.0;
            else
                f_right = flux(p[j], p[j + 1]);
            pn[j] = p[j] - spec.dt / dx * (f_right - f_left);
            if (pn[j] < 0.0 && pn[j] > -1e-15) pn[j] = 0.0;
        }
        std::swap(p, pn);
        t = static_cast<double>(k) * spec.dt;

        const double j_det = wall_left ? out_left : out_right;
        absorbed += spec.dt * (out_left + out_right);
        res.times.push_back(t);
        res.boundary_current.push_back(j_det);
        res.absorbed_cdf.push_back(absorbed);
        res.surviving_mass.push_back(mass());
        if (snapshot_stride > 0 && (k % snapshot_stride == 0 || k == n_steps))
            res.snapshots.emplace_back(t, p);
    }
    return res;
}

// Mean time spent at each grid point before absorption: the stationary
// density with a unit source at x0 and zero on every absorbing wall.
inline std::vector<double> mean_residence(const DiffusionSpec& spec, const Grid1D& grid) {
    spec.validate();
    grid.validate();
    spec.boundary.validate_on(grid);
    const bool wall_left = spec.boundary.side == DetectorSpec::Side::above;
    const bool far_absorbing =
        spec.far_wall && spec.far_wall->kind == FarWall::Kind::absorbing;
    const std::size_t n = grid.n_points;
    const double dx = grid.dx();
    const double d_coef = spec.diffusion_coeff;
    const double v = spec.drift;

    // interior unknowns j = 1..n-2; absorbing ends pinned to zero, a
    // reflecting far end closed with a zero-flux face
    const std::size_t m = n - 2;
    std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
    const double a_dn = d_coef / (dx * dx) + v / (2.0 * dx);   // coefficient of p_{j-1}
    const double a_up = d_coef / (dx * dx) - v / (2.0 * dx);   // coefficient of p_{j+1}
    for (std::size_t j = 0; j < m; ++j) {
        lower[j] = a_dn;
        diag[j] = -2.0 * d_coef / (dx * dx);
        upper[j] = a_up;
    }
    const bool left_absorbing = wall_left || far_absorbing;
    const bool right_absorbing = !wall_left || far_absorbing;
    if (!left_absorbing) {
        // zero-flux face between nodes 0 and 1 folds node 0 into node 1
        const double w = (d_coef / dx - 0.5 * v) / (d_coef / dx + 0.5 * v);
        diag[0] += a_dn * w;
    }
    if (!right_absorbing) {
        const double w = (d_coef / dx + 0.5 * v) / (d_coef / dx - 0.5 * v);
        diag[m - 1] += a_up * w;
    }
    std::size_t j0 = static_cast<std::size_t>(std::llround((spec.x0 - grid.x_min) / dx));
    j0 = std::clamp<std::size_t>(j0, 1, n - 2);
    rhs[j0 - 1] = -1.0 / dx;

    // Thomas solve
    for (std::size_t j = 1; j < m; ++j) {
        const double w = lower[j] / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    std::vector<double> p(n, 0.0);
    p[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) p[j + 1] = (rhs[j] - upper[j] * p[j + 2]) / diag[j];
    if (!left_absorbing) {
        const double w = (d_coef / dx - 0.5 * v) / (d_coef / dx + 0.5 * v);
        p[0] = w * p[1];
    }
    if (!right_absorbing) {
        const double w = (d_coef / dx + 0.5 * v) / (d_coef / dx - 0.5 * v);
        p[n - 1] = w * p[n - 2];
    }
    for (double& val : p)
        if (val < 0.0 && val > -1e-12) val = 0.0;
    return p;
}

// Kolmogorov-Smirnov distance between uncensored first-passage samples and
// a reference CDF, evaluated over [0, horizon].
inline double ks_distance(const std::vector<FirstPassageSample>& samples,
                          const std::function<double(double)>& cdf) {
    std::vector<double> hits;
    hits.reserve(samples.size());
    for (const auto& s : samples)
        if (!s.censored) hits.push_back(s.hit_time);
    std::sort(hits.begin(), hits.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const double f = cdf(hits[i]);
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Same comparison against a stepwise CDF given on a time lattice (the
// Fokker-Planck absorbed mass).
inline double ks_distance(const std::vector<FirstPassageSample>& samples,
                          const std::vector<double>& times, const std::vector<double>& cdf_vals) {
    if (times.size() != cdf_vals.size() || times.empty())
        throw std::invalid_argument("ks_distance: bad lattice CDF");
    auto cdf = [&](double t) {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return 0.0;
        const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
        if (i + 1 >= times.size()) return cdf_vals.back();
        const double f = (t - times[i]) / (times[i + 1] - times[i]);
        return (1.0 - f) * cdf_vals[i] + f * cdf_vals[i + 1];
    };
    return ks_distance(samples, cdf);
}

}  // namespace mqm
