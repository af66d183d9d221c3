#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqm/analytic.hpp"
#include "mqm/arrival.hpp"
#include "mqm/core.hpp"
#include "mqm/diffusion.hpp"
#include "mqm/io.hpp"
#include "mqm/reconstruct.hpp"
#include "mqm/screen.hpp"
#include "mqm/solver.hpp"

// Named experiments behind the command-line tool. Every run is a pure
// function of (config, seed): outputs are byte-identical across reruns and
// thread counts, and each run ends by writing a manifest of everything it
// produced.

namespace mqm {

class validation_error : public std::runtime_error {
  public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

inline const std::vector<std::string>& valid_scenarios() {
    static const std::vector<std::string> names = {
        "halfline", "gaussian-slit", "lateral-walls", "reconstruction", "diffusion-compare"};
    return names;
}

struct ScenarioConfig {
    std::string scenario;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::filesystem::path out_dir;
    json raw;

    static ScenarioConfig from_json(const json& j) {
        ScenarioConfig c;
        c.raw = j;
        c.scenario = j.value("scenario", "");
        c.seed = j.value("seed", std::uint64_t{0});
        c.threads = j.value("threads", 1u);
        c.out_dir = j.value("out", std::string("out"));
        return c;
    }

    static ScenarioConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw validation_error("config: cannot open " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw validation_error("config: invalid JSON in " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

namespace config_detail {

inline void require_number(const json& block, const std::string& block_name, const char* key,
                           std::vector<std::string>& errors, bool positive = false) {
    if (!block.contains(key)) {
        errors.push_back(block_name + "." + key + ": missing");
        return;
    }
    if (!block[key].is_number()) {
        errors.push_back(block_name + "." + key + ": must be a number");
        return;
    }
    if (positive && !(block[key].get<double>() > 0.0))
        errors.push_back(block_name + "." + key + ": must be > 0");
}

inline PhysicalParams parse_params(const json& j) {
    PhysicalParams p;
    if (j.contains("params")) {
        const json& b = j["params"];
        p.hbar = b.value("hbar", 1.0);
        p.mass = b.value("mass", 1.0);
        p.lambda = b.value("lambda", 1.0);
    }
    return p;
}

inline GaussianPacketSpec parse_packet(const json& j) {
    GaussianPacketSpec p;
    const json& b = j.at("packet");
    p.x0 = b.at("x0").get<double>();
    p.sigma_x = b.at("sigma_x").get<double>();
    p.sigma_y = b.value("sigma_y", 1.0);
    p.k0 = b.value("k0", 0.0);
    return p;
}

inline void check_params_packet(const json& j, std::vector<std::string>& errors) {
    if (j.contains("params")) {
        try {
            parse_params(j).validate();
        } catch (const std::exception& e) {
            errors.push_back(std::string("params: ") + e.what());
        }
    }
    if (!j.contains("packet")) {
        errors.push_back("packet: missing");
        return;
    }
    require_number(j["packet"], "packet", "x0", errors);
    require_number(j["packet"], "packet", "sigma_x", errors, true);
    if (j["packet"].contains("sigma_y") && !(j["packet"]["sigma_y"].get<double>() > 0.0))
        errors.push_back("packet.sigma_y: must be > 0");
}

}  // namespace config_detail

// Field-level validation; returns every problem found, not just the first.
inline std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
    using namespace config_detail;
    std::vector<std::string> errors;
    const json& j = cfg.raw;

    if (cfg.scenario.empty()) {
        errors.push_back("scenario: missing");
        return errors;
    }
    const auto& names = valid_scenarios();
    if (std::find(names.begin(), names.end(), cfg.scenario) == names.end()) {
        std::string msg = "scenario: unknown name '" + cfg.scenario + "'; valid names:";
        for (const auto& n : names) msg += " " + n;
        errors.push_back(msg);
        return errors;
    }

    if (cfg.scenario == "halfline") {
        check_params_packet(j, errors);
        if (!j.contains("grid")) errors.push_back("grid: missing");
        else {
            require_number(j["grid"], "grid", "x_min", errors);
            require_number(j["grid"], "grid", "x_max", errors);
            require_number(j["grid"], "grid", "n_points", errors, true);
        }
        if (!j.contains("time")) errors.push_back("time: missing");
        else {
            require_number(j["time"], "time", "dt", errors, true);
            require_number(j["time"], "time", "n_steps", errors, true);
        }
        if (errors.empty()) {
            const auto params = parse_params(j);
            const auto packet = parse_packet(j);
            const double x_max = j["grid"]["x_max"].get<double>();
            const double horizon =
                j["time"]["dt"].get<double>() * j["time"]["n_steps"].get<double>();
            const double reach = 8.0 * packet.sigma_x +
                                 (params.hbar * packet.k0 / params.mass +
                                  4.0 * params.hbar / (params.mass * packet.sigma_x)) *
                                     horizon;
            if (x_max - packet.x0 < reach)
                errors.push_back("grid.x_max: far boundary closer than the packet reach " +
                                 format_double(packet.x0 + reach) +
                                 "; enlarge the domain or shorten the run");
        }
    } else if (cfg.scenario == "gaussian-slit") {
        check_params_packet(j, errors);
        if (j.contains("slit") && j["slit"].contains("y0")) {
            const double y0 = j["slit"]["y0"].get<double>();
            const double hw = j["slit"].value("slit_half_width", pi / 2.0);
            if (y0 != 0.0 && !(y0 > hw))
                errors.push_back("slit.y0: must exceed slit_half_width");
        }
    } else if (cfg.scenario == "lateral-walls") {
        check_params_packet(j, errors);
        if (!j.contains("slit")) errors.push_back("slit: missing");
        else require_number(j["slit"], "slit", "y0", errors, true);
    } else if (cfg.scenario == "reconstruction") {
        check_params_packet(j, errors);
        if (j.contains("reconstruction")) {
            const double theta = j["reconstruction"].value("theta", pi / 2.0);
            if (std::abs(std::sin(theta)) < 1e-12)
                errors.push_back("reconstruction.theta: degenerate rotation: beta = 0");
            if (std::abs(theta - pi / 2.0) > 1e-9)
                errors.push_back(
                    "reconstruction.theta: synthetic currents are generated for theta = pi/2 only");
        }
    } else if (cfg.scenario == "diffusion-compare") {
        if (!j.contains("diffusion")) errors.push_back("diffusion: missing");
        else {
            const json& b = j["diffusion"];
            require_number(b, "diffusion", "x0", errors);
            require_number(b, "diffusion", "diffusion_coeff", errors, true);
            require_number(b, "diffusion", "horizon", errors, true);
            require_number(b, "diffusion", "dt", errors, true);
            require_number(b, "diffusion", "n_paths", errors, true);
            if (b.contains("x0") && b.contains("wall") && b["x0"].is_number() &&
                !(b["x0"].get<double>() > b.value("wall", 0.0)))
                errors.push_back("diffusion.x0: must lie above the wall");
        }
    }
    return errors;
}

namespace scenario_detail {

inline std::filesystem::path prepare_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (ec || !out)
            throw validation_error("out: output directory not writable: " + dir.string());
    }
    std::filesystem::remove(probe);
    return dir;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

// ---------------------------------------------------------------- halfline

inline void run_halfline(const ScenarioConfig& cfg, OutputManifest& manifest,
                         const std::filesystem::path& out) {
    const json& j = cfg.raw;
    const PhysicalParams params = config_detail::parse_params(j);
    const GaussianPacketSpec packet = config_detail::parse_packet(j);
    const Grid1D grid(j["grid"]["x_min"].get<double>(), j["grid"]["x_max"].get<double>(),
                      j["grid"]["n_points"].get<std::size_t>());
    const double dt = j["time"]["dt"].get<double>();
    const std::size_t n_steps = j["time"]["n_steps"].get<std::size_t>();
    EvolveOptions opts;
    opts.snapshot_stride = j["time"].value("snapshot_stride", std::size_t{0});

    DetectorSpec detector{grid.x_min, DetectorSpec::Side::above};
    std::vector<complex> amp(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i)
        amp[i] = halfline_images_1d(grid.x(i), 0.0, packet, params, ImageFormula::image_pair);
    WaveField initial(grid, std::move(amp), 0.0);

    const EvolutionResult res = evolve_dirichlet(initial, nullptr, detector, dt, n_steps, params, opts);

    write_csv(out / "survival.csv", {"t", "grad_sq", "survival", "current"},
              {res.record.times, res.record.grad_sq, res.record.survival, res.record.current});
    manifest.add(out / "survival.csv");

    const ArrivalDistribution arr = arrival_time_pdf(res.record);
    write_csv(out / "arrival.csv", {"t", "pdf", "cdf_complement"},
              {arr.times, arr.pdf, arr.cdf_complement});
    manifest.add(out / "arrival.csv");

    json snap_index = json::array();
    for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
        const WaveField& w = res.snapshots[s];
        char name[32];
        std::snprintf(name, sizeof(name), "wavefield_%04zu.csv", s);
        std::vector<double> xs(w.grid.n_points), re(w.grid.n_points), im(w.grid.n_points),
            a2(w.grid.n_points);
        for (std::size_t i = 0; i < w.grid.n_points; ++i) {
            xs[i] = w.grid.x(i);
            re[i] = w.amplitudes[i].real();
            im[i] = w.amplitudes[i].imag();
            a2[i] = std::norm(w.amplitudes[i]);
        }
        write_csv(out / name, {"x", "re", "im", "abs2"}, {xs, re, im, a2});
        manifest.add(out / name);
        snap_index.push_back({{"file", name}, {"time", w.time}});
    }
    write_json(out / "snapshots.json", snap_index);
    manifest.add(out / "snapshots.json");

    // closed-form cross-checks: survival from the analytic wall gradient and
    // the final field against the image solution
    std::vector<double> g_exact(res.record.times.size());
    for (std::size_t k = 0; k < g_exact.size(); ++k)
        g_exact[k] = halfline_wall_gradient_sq(res.record.times[k], packet, params);
    const double s_analytic =
        std::exp(-params.absorption_coeff() * trapezoid(res.record.times, g_exact));

    double linf = 0.0, sup = 0.0;
    const WaveField& last = res.snapshots.back();
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const complex exact =
            halfline_images_1d(grid.x(i), last.time, packet, params, ImageFormula::image_pair);
        linf = std::max(linf, std::abs(last.amplitudes[i] - exact));
        sup = std::max(sup, std::abs(exact));
    }

    json summary;
    summary["final_time"] = res.record.times.back();
    summary["final_survival"] = res.record.survival.back();
    summary["analytic_quadrature_survival"] = s_analytic;
    summary["survival_abs_diff"] = std::abs(res.record.survival.back() - s_analytic);
    summary["absorbed_mass"] = res.record.absorbed_mass();
    summary["bookkeeping_residual"] =
        std::abs(res.record.absorbed_mass() - (1.0 - res.record.survival.back()));
    summary["norm_initial"] = res.norm_initial;
    summary["norm_max_drift"] = res.norm_max_drift;
    summary["linf_error_vs_images"] = sup > 0 ? linf / sup : 0.0;
    write_json(out / "summary.json", summary);
    manifest.add(out / "summary.json");
}

// ------------------------------------------------------------ gaussian-slit

inline void run_gaussian_slit(const ScenarioConfig& cfg, OutputManifest& manifest,
                              const std::filesystem::path& out) {
    const json& j = cfg.raw;
    const PhysicalParams params = config_detail::parse_params(j);
    const GaussianPacketSpec packet = config_detail::parse_packet(j);
    const json slit_block = j.value("slit", json::object());
    SlitGeometry geom;
    geom.x0 = slit_block.value("x0", packet.x0);
    geom.validate();

    const double y_max = slit_block.value("y_max", 6.0);
    const std::size_t n_y = slit_block.value("n_y", std::size_t{121});
    const double t_max = slit_block.value("t_max", 4.0);
    const std::size_t n_t = slit_block.value("n_t", std::size_t{9});
    const std::size_t n_series = slit_block.value("n_series", std::size_t{2001});

    const std::vector<double> ys = linspace(-y_max, y_max, n_y);
    const std::vector<double> ts_grid = linspace(t_max / static_cast<double>(n_t), t_max, n_t);
    const std::vector<double> ts_series = linspace(0.0, t_max, n_series);

    // density and absorption-rate lattices (rows = times)
    std::vector<double> dens(n_t * n_y), rate(n_t * n_y);
    for (std::size_t r = 0; r < n_t; ++r)
        for (std::size_t c = 0; c < n_y; ++c) {
            dens[r * n_y + c] = screen_density_feynman(ys[c], ts_grid[r], geom, packet, params);
            rate[r * n_y + c] = slit_absorption_rate(ys[c], ts_grid[r], geom, packet, params);
        }
    write_grid_csv(out / "screen_density.csv", dens, n_t, n_y);
    write_grid_csv(out / "absorption_rate.csv", rate, n_t, n_y);
    write_json(out / "grid_meta.json",
               json{{"rows", "time"}, {"cols", "y"}, {"times", ts_grid}, {"y", ys}});
    manifest.add(out / "screen_density.csv");
    manifest.add(out / "absorption_rate.csv");
    manifest.add(out / "grid_meta.json");

    // ratio law diagnostics
    double ratio_max_var = 0.0, brightness_max_dev = 0.0;
    std::vector<double> brightness(n_t), ratio_at_zero(n_t);
    for (std::size_t r = 0; r < n_t; ++r) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t c = 0; c < n_y; ++c) {
            const double q = rate[r * n_y + c] / dens[r * n_y + c];
            if (c == 0) lo = hi = q;
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        ratio_max_var = std::max(ratio_max_var, (hi - lo) / hi);
        brightness[r] = relative_brightness(ts_grid[r], geom, packet, params);
        const std::size_t mid = n_y / 2;
        ratio_at_zero[r] = rate[r * n_y + mid] / dens[r * n_y + mid];
        brightness_max_dev = std::max(
            brightness_max_dev, std::abs(ratio_at_zero[r] - brightness[r]) / brightness[r]);
    }
    write_csv(out / "brightness.csv", {"t", "relative_brightness", "rate_over_density"},
              {ts_grid, brightness, ratio_at_zero});
    manifest.add(out / "brightness.csv");

    // discounting series: the surface-integrated wall gradient factorizes
    // into the x-packet gradient times the constant transverse integral
    const double c_y = 1.0 / (2.0 * packet.sigma_y * std::sqrt(pi));
    std::vector<double> g_surface(n_series);
    for (std::size_t k = 0; k < n_series; ++k)
        g_surface[k] = halfline_wall_gradient_sq(ts_series[k], packet, params) * c_y;
    const SurvivalRecord record = make_survival_record(ts_series, g_surface, params);
    write_csv(out / "survival.csv", {"t", "grad_sq", "survival", "current"},
              {record.times, record.grad_sq, record.survival, record.current});
    manifest.add(out / "survival.csv");

    // per-point current history and arrival-point density
    ScreenMeasurement meas;
    meas.screen_id = "screen_x0";
    meas.positions = ys;
    meas.times = ts_series;
    meas.current.resize(n_series * n_y);
    const double coeff = params.absorption_coeff();
    for (std::size_t k = 0; k < n_series; ++k) {
        const double g1 = g_surface[k] / c_y;
        for (std::size_t c = 0; c < n_y; ++c)
            meas.at(k, c) = coeff * g1 *
                            transverse_density(ys[c], ts_series[k], packet.sigma_y, params) *
                            record.survival[k];
    }
    const ArrivalPointDensity pts = arrival_point_pdf(meas);
    write_csv(out / "arrival_points.csv", {"position", "density"}, {pts.points, pts.density});
    manifest.add(out / "arrival_points.csv");

    json summary;
    summary["ratio_max_relative_variation_across_y"] = ratio_max_var;
    summary["brightness_max_relative_deviation"] = brightness_max_dev;
    summary["final_survival"] = record.survival.back();
    summary["arrival_point_mass"] = pts.total_mass;
    summary["arrival_truncation_mass"] = pts.truncation_mass;
    summary["transverse_integral"] = c_y;
    write_json(out / "summary.json", summary);
    manifest.add(out / "summary.json");
}

// ------------------------------------------------------------ lateral-walls

inline void run_lateral_walls(const ScenarioConfig& cfg, OutputManifest& manifest,
                              const std::filesystem::path& out) {
    const json& j = cfg.raw;
    const PhysicalParams params = config_detail::parse_params(j);
    const GaussianPacketSpec packet = config_detail::parse_packet(j);
    const json slit_block = j.at("slit");
    const double y0 = slit_block.at("y0").get<double>();
    SlitGeometry geom;
    geom.x0 = slit_block.value("x0", packet.x0);
    geom.y0 = y0;
    geom.slit_half_width = slit_block.value("slit_half_width", pi / 2.0);
    geom.validate();

    const json lat = j.value("lateral", json::object());
    const std::size_t n_series = lat.value("n_series", std::size_t{256});
    const double t_int_max = lat.value("t_max", 6.0);
    const std::size_t n_t_int = lat.value("n_t", std::size_t{1201});
    const double k_max = lat.value("k_max", 4.0);
    const std::size_t n_k = lat.value("n_k", std::size_t{161});
    const double x_max = lat.value("x_max", 2.0 * geom.x0);
    const std::size_t n_x = lat.value("n_x", std::size_t{101});
    const std::size_t n_y = lat.value("n_y", std::size_t{101});

    const std::vector<double> ks = linspace(-k_max, k_max, n_k);
    std::vector<double> vdens(n_k);
    for (std::size_t i = 0; i < n_k; ++i) vdens[i] = slit_velocity_density(ks[i]);
    write_csv(out / "velocity_density.csv", {"k", "density"}, {ks, vdens});
    manifest.add(out / "velocity_density.csv");

    const std::vector<double> ts = linspace(t_int_max / static_cast<double>(n_t_int), t_int_max,
                                            n_t_int);
    const double coeff = params.absorption_coeff();

    // pattern left on the lateral wall y = +y0: time integral of the
    // x-profile density times the squared normal gradient of the series
    const std::vector<double> xs = linspace(0.0, x_max, n_x);
    std::vector<double> wall_pattern(n_x, 0.0);
    {
        std::vector<double> gy(n_t_int);
        for (std::size_t k = 0; k < n_t_int; ++k)
            gy[k] = std::norm(box_expansion_dy(y0, ts[k], y0, n_series, params));
        for (std::size_t i = 0; i < n_x; ++i) {
            std::vector<double> f(n_t_int);
            for (std::size_t k = 0; k < n_t_int; ++k) {
                const complex psi1 =
                    halfline_images_1d(xs[i], ts[k], packet, params, ImageFormula::image_pair);
                f[k] = coeff * std::norm(psi1) * gy[k];
            }
            wall_pattern[i] = trapezoid(ts, f);
        }
    }
    write_csv(out / "wall_pattern.csv", {"x", "current"}, {xs, wall_pattern});
    manifest.add(out / "wall_pattern.csv");

    // trace on the screen x = 0 between the walls
    const std::vector<double> ys = linspace(-y0, y0, n_y);
    std::vector<double> screen_pattern(n_y, 0.0);
    {
        std::vector<double> g1(n_t_int);
        for (std::size_t k = 0; k < n_t_int; ++k)
            g1[k] = halfline_wall_gradient_sq(ts[k], packet, params);
        for (std::size_t iy = 0; iy < n_y; ++iy) {
            std::vector<double> f(n_t_int);
            for (std::size_t k = 0; k < n_t_int; ++k)
                f[k] = coeff * g1[k] * std::norm(box_expansion(ys[iy], ts[k], y0, n_series, params));
            screen_pattern[iy] = trapezoid(ts, f);
        }
    }
    write_csv(out / "screen_pattern.csv", {"y", "current"}, {ys, screen_pattern});
    manifest.add(out / "screen_pattern.csv");

    json summary;
    summary["series_terms"] = n_series;
    summary["series_tail_estimate"] = box_series_tail_estimate(n_series);
    summary["time_integral_horizon"] = t_int_max;
    write_json(out / "summary.json", summary);
    manifest.add(out / "summary.json");
}

// ------------------------------------------------------------ reconstruction

inline void run_reconstruction(const ScenarioConfig& cfg, OutputManifest& manifest,
                               const std::filesystem::path& out) {
    const json& j = cfg.raw;
    const PhysicalParams params = config_detail::parse_params(j);
    const GaussianPacketSpec packet = config_detail::parse_packet(j);
    const json rec = j.value("reconstruction", json::object());
    const double theta = rec.value("theta", pi / 2.0);
    // the quarter-turn setup puts the rotated screen one packet offset away
    const double a_prime = rec.value("a_prime", packet.x0);
    const double t_eval = rec.value("t_eval", 1.0);
    const double x_lo = rec.value("x_min", packet.x0 - 4.0);
    const double x_hi = rec.value("x_max", packet.x0 + 4.0);
    const std::size_t n_x = rec.value("n_x", std::size_t{81});
    const double y_lo = rec.value("y_min", -4.0);
    const double y_hi = rec.value("y_max", 4.0);
    const std::size_t n_y = rec.value("n_y", std::size_t{81});
    const double eps_rel = rec.value("epsilon_rel", 1e-6);

    const RotationFrame frame = rotate_frame(theta, a_prime);
    const std::vector<double> x_axis = linspace(x_lo, x_hi, n_x);
    const std::vector<double> y_axis = linspace(y_lo, y_hi, n_y);

    SlitGeometry geom;
    geom.x0 = packet.x0;

    // screen at x = 0: lattice covers the requested y axis plus every
    // denominator point (a' - alpha x)/beta
    ScreenMeasurement m0;
    m0.screen_id = "screen_x0";
    {
        std::vector<double> pos = y_axis;
        for (double x : x_axis) pos.push_back((a_prime - frame.alpha * x) / frame.beta);
        std::sort(pos.begin(), pos.end());
        pos.erase(std::unique(pos.begin(), pos.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                  pos.end());
        m0.positions = pos;
    }
    m0.times = {t_eval};
    m0.current.resize(m0.positions.size());
    for (std::size_t i = 0; i < m0.positions.size(); ++i)
        m0.current[i] = slit_absorption_rate(m0.positions[i], t_eval, geom, packet, params);

    // rotated screen: the transverse profile along it is the x-profile of
    // the free packet read at x = -y'
    ScreenMeasurement m1;
    m1.screen_id = "screen_rotated";
    {
        std::vector<double> pos;
        for (double x : x_axis)
            pos.push_back(frame.gamma * x +
                          frame.delta * (a_prime - frame.alpha * x) / frame.beta);
        std::sort(pos.begin(), pos.end());
        pos.erase(std::unique(pos.begin(), pos.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                  pos.end());
        m1.positions = pos;
    }
    m1.times = {t_eval};
    m1.current.resize(m1.positions.size());
    const double phi_tilde = phi_factor(t_eval, a_prime, packet, params);
    for (std::size_t i = 0; i < m1.positions.size(); ++i)
        m1.current[i] =
            phi_tilde * std::norm(free_gaussian_1d(-m1.positions[i], t_eval, packet, params));

    const ReconstructionResult recon =
        reconstruct_density(m0, m1, frame, t_eval, packet, params, x_axis, y_axis, eps_rel);

    // oracle: the free-packet density renormalized over the same grid
    std::vector<double> oracle(n_x * n_y, 0.0);
    for (std::size_t i = 0; i < n_x; ++i) {
        const double px = std::norm(free_gaussian_1d(x_axis[i], t_eval, packet, params));
        for (std::size_t jy = 0; jy < n_y; ++jy)
            oracle[i * n_y + jy] =
                px * transverse_density(y_axis[jy], t_eval, packet.sigma_y, params);
    }
    const double oracle_norm = masked_grid_integral(x_axis, y_axis, oracle, recon.mask);
    double linf = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
        if (!recon.mask[k]) continue;
        oracle[k] /= oracle_norm;
        linf = std::max(linf, std::abs(oracle[k] - recon.density[k]));
        sup = std::max(sup, oracle[k]);
    }
    const double integral = masked_grid_integral(x_axis, y_axis, recon.density, recon.mask);

    write_grid_csv(out / "m0_current.csv", m0.current, 1, m0.positions.size());
    write_json(out / "m0_meta.json",
               json{{"positions", m0.positions}, {"times", m0.times}, {"rows", "time"}});
    write_grid_csv(out / "m1_current.csv", m1.current, 1, m1.positions.size());
    write_json(out / "m1_meta.json",
               json{{"positions", m1.positions}, {"times", m1.times}, {"rows", "time"}});
    write_grid_csv(out / "reconstructed.csv", recon.density, n_x, n_y);
    {
        std::vector<double> mask_d(recon.mask.begin(), recon.mask.end());
        write_grid_csv(out / "mask.csv", mask_d, n_x, n_y);
    }
    write_json(out / "reconstructed_meta.json",
               json{{"rows", "x"},
                    {"cols", "y"},
                    {"x_axis", x_axis},
                    {"y_axis", y_axis},
                    {"masked_fraction", recon.masked_fraction},
                    {"interpolation_order", recon.interpolation_order},
                    {"normalization", recon.normalization},
                    {"denominator_threshold", recon.denominator_threshold}});
    for (const char* f : {"m0_current.csv", "m0_meta.json", "m1_current.csv", "m1_meta.json",
                          "reconstructed.csv", "mask.csv", "reconstructed_meta.json"})
        manifest.add(out / f);

    json summary;
    summary["t_eval"] = t_eval;
    summary["theta"] = theta;
    summary["a_prime"] = a_prime;
    summary["linf_relative_error_vs_free_density"] = sup > 0 ? linf / sup : 0.0;
    summary["grid_integral"] = integral;
    summary["masked_fraction"] = recon.masked_fraction;
    summary["interpolation_order"] = recon.interpolation_order;
    write_json(out / "summary.json", summary);
    manifest.add(out / "summary.json");
}

// --------------------------------------------------------- diffusion-compare

inline void run_diffusion_compare(const ScenarioConfig& cfg, OutputManifest& manifest,
                                  const std::filesystem::path& out) {
    const json& j = cfg.raw;
    const json& b = j.at("diffusion");
    DiffusionSpec spec;
    spec.x0 = b.at("x0").get<double>();
    spec.diffusion_coeff = b.at("diffusion_coeff").get<double>();
    spec.drift = b.value("drift", 0.0);
    spec.boundary = DetectorSpec{b.value("wall", 0.0), DetectorSpec::Side::above};
    spec.horizon = b.at("horizon").get<double>();
    spec.dt = b.at("dt").get<double>();
    spec.n_paths = b.at("n_paths").get<std::size_t>();
    spec.validate();
    const double bin_width = b.value("bin_width", 0.05);

    const auto samples = simulate_first_passage(spec, cfg.seed, cfg.threads);
    const FptHistogram hist = fpt_density_histogram(samples, bin_width);
    write_csv(out / "fpt_histogram.csv", {"bin_center", "density"},
              {hist.bin_centers, hist.density});
    manifest.add(out / "fpt_histogram.csv");

    // closed-form first-passage CDF for constant drift toward/away from the wall
    const double d_coef = spec.diffusion_coeff;
    const double dist = spec.x0 - spec.boundary.location;
    const double v = spec.drift;
    auto cdf_exact = [&](double t) {
        if (t <= 0.0) return 0.0;
        const double s = std::sqrt(2.0 * d_coef * t);
        auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
        if (v == 0.0) return 2.0 * phi(-dist / s);
        return phi(-(dist + v * t) / s) + std::exp(-v * dist / d_coef) * phi((-dist + v * t) / s);
    };
    const double ks_mc_exact = ks_distance(samples, cdf_exact);

    double pr_tau_le_1 = 0.0;
    if (spec.horizon >= 1.0) {
        std::size_t hits = 0;
        for (const auto& s : samples)
            if (!s.censored && s.hit_time <= 1.0) ++hits;
        pr_tau_le_1 = static_cast<double>(hits) / static_cast<double>(samples.size());
    }

    // matching Fokker-Planck run; far edge reflecting and out of reach
    const json fp = b.value("fp", json::object());
    const double fp_x_max = fp.value(
        "x_max", spec.x0 + 8.0 * std::sqrt(2.0 * d_coef * spec.horizon) +
                     std::max(0.0, v) * spec.horizon);
    const std::size_t fp_n = fp.value("n_points", std::size_t{1501});
    Grid1D fp_grid(spec.boundary.location, fp_x_max, fp_n);
    DiffusionSpec fp_spec = spec;
    const double dx = fp_grid.dx();
    fp_spec.dt = fp.value("dt", 0.45 * dx * dx / d_coef);
    const std::size_t fp_steps =
        static_cast<std::size_t>(std::ceil(spec.horizon / fp_spec.dt));
    const FokkerPlanckResult fpr = fokker_planck_absorbing(fp_spec, fp_grid, fp_steps);
    const double ks_mc_fp = ks_distance(samples, fpr.times, fpr.absorbed_cdf);

    write_csv(out / "fp_current.csv", {"t", "current", "absorbed_cdf", "surviving_mass"},
              {fpr.times, fpr.boundary_current, fpr.absorbed_cdf, fpr.surviving_mass});
    manifest.add(out / "fp_current.csv");

    double bookkeeping = 0.0;
    for (std::size_t k = 0; k < fpr.times.size(); ++k)
        bookkeeping =
            std::max(bookkeeping, std::abs(fpr.surviving_mass[k] + fpr.absorbed_cdf[k] - 1.0));

    json summary;
    summary["n_paths"] = spec.n_paths;
    summary["censored_fraction"] = hist.censored_mass;
    summary["ks_mc_vs_closed_form"] = ks_mc_exact;
    summary["ks_mc_vs_fokker_planck"] = ks_mc_fp;
    summary["pr_tau_le_1"] = pr_tau_le_1;
    summary["fp_bookkeeping_max_residual"] = bookkeeping;
    summary["fp_dt"] = fp_spec.dt;
    summary["fp_dx"] = dx;
    write_json(out / "summary.json", summary);
    manifest.add(out / "summary.json");
}

}  // namespace scenario_detail

// Executes the named scenario. Throws validation_error for bad configs and
// numerical_error when a runtime guard trips; anything written is listed in
// <out>/manifest.json together with the resolved config.
inline void run_scenario(const ScenarioConfig& cfg) {
    const auto errors = validate_config(cfg);
    if (!errors.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw validation_error(msg);
    }
    const auto out = scenario_detail::prepare_out_dir(cfg.out_dir);

    json resolved = cfg.raw;
    resolved["scenario"] = cfg.scenario;
    resolved["seed"] = cfg.seed;
    resolved["threads"] = cfg.threads;
    resolved["out"] = cfg.out_dir.generic_string();
    OutputManifest manifest(out, resolved);

    if (cfg.scenario == "halfline")
        scenario_detail::run_halfline(cfg, manifest, out);
    else if (cfg.scenario == "gaussian-slit")
        scenario_detail::run_gaussian_slit(cfg, manifest, out);
    else if (cfg.scenario == "lateral-walls")
        scenario_detail::run_lateral_walls(cfg, manifest, out);
    else if (cfg.scenario == "reconstruction")
        scenario_detail::run_reconstruction(cfg, manifest, out);
    else if (cfg.scenario == "diffusion-compare")
        scenario_detail::run_diffusion_compare(cfg, manifest, out);
    manifest.write();
}

}  // namespace mqm
