#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "mqm/reconstruct.hpp"

using namespace mqm;

namespace {

const PhysicalParams natural{};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

struct QuarterTurnSetup {
    GaussianPacketSpec packet;
    RotationFrame frame;
    double t = 1.0;
    std::vector<double> x_axis, y_axis;
    ScreenMeasurement m0, m1;
};

// synthetic currents for the quarter-turn geometry: the screens sample the
// factorized free density times arbitrary positive t-factors
QuarterTurnSetup make_quarter_turn(double sigma_x = 0.5, double sigma_y = 1.0) {
    QuarterTurnSetup s;
    s.packet.x0 = 2.0;
    s.packet.sigma_x = sigma_x;
    s.packet.sigma_y = sigma_y;
    s.frame = rotate_frame(pi / 2.0, s.packet.x0);
    s.x_axis = linspace(s.packet.x0 - 3.0, s.packet.x0 + 3.0, 61);
    s.y_axis = linspace(-3.0, 3.0, 61);

    SlitGeometry geom;
    geom.x0 = s.packet.x0;

    s.m0.screen_id = "screen";
    s.m0.positions = s.y_axis;
    s.m0.positions.push_back(s.frame.a_prime);  // denominator point
    std::sort(s.m0.positions.begin(), s.m0.positions.end());
    s.m0.positions.erase(std::unique(s.m0.positions.begin(), s.m0.positions.end()),
                         s.m0.positions.end());
    s.m0.times = {s.t};
    s.m0.current.resize(s.m0.positions.size());
    for (std::size_t i = 0; i < s.m0.positions.size(); ++i)
        s.m0.current[i] = slit_absorption_rate(s.m0.positions[i], s.t, geom, s.packet, natural);

    s.m1.screen_id = "rotated";
    for (double x : s.x_axis) s.m1.positions.push_back(-x);
    std::sort(s.m1.positions.begin(), s.m1.positions.end());
    s.m1.times = {s.t};
    s.m1.current.resize(s.m1.positions.size());
    const double phi_t = phi_factor(s.t, s.frame.a_prime, s.packet, natural);
    for (std::size_t i = 0; i < s.m1.positions.size(); ++i)
        s.m1.current[i] =
            phi_t * std::norm(free_gaussian_1d(-s.m1.positions[i], s.t, s.packet, natural));
    return s;
}

}  // namespace

TEST_CASE("rotate_frame entries and determinant") {
    const RotationFrame q = rotate_frame(pi / 2.0, 2.0);
    REQUIRE(q.alpha == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(q.beta == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(q.gamma == Catch::Approx(-1.0).epsilon(1e-15));
    REQUIRE(q.delta == Catch::Approx(0.0).margin(1e-15));

    // (x, y) = (1, 0) lands at (0, -1) under the quarter turn
    REQUIRE(q.alpha * 1.0 + q.beta * 0.0 == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(q.gamma * 1.0 + q.delta * 0.0 == Catch::Approx(-1.0).epsilon(1e-15));

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.05, pi - 0.05);
    for (int i = 0; i < 25; ++i) {
        const RotationFrame f = rotate_frame(u(rng), 1.0);
        REQUIRE(f.alpha * f.delta - f.beta * f.gamma == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(f.alpha == f.delta);
        REQUIRE(f.beta == -f.gamma);
    }
}

TEST_CASE("rotate_frame rejects degenerate angles") {
    REQUIRE_THROWS_WITH(rotate_frame(0.0, 1.0), Catch::Matchers::ContainsSubstring("beta = 0"));
    REQUIRE_THROWS_AS(rotate_frame(pi, 1.0), std::invalid_argument);
}

TEST_CASE("quarter-turn round trip recovers the free density") {
    const auto s = make_quarter_turn();
    const auto rec =
        reconstruct_density(s.m0, s.m1, s.frame, s.t, s.packet, natural, s.x_axis, s.y_axis);

    REQUIRE(rec.masked_fraction == 0.0);
    REQUIRE(rec.interpolation_order == 0);  // lattices were built to line up

    // oracle: |psi_F^1(x,t)|^2 |psi^2(y,t)|^2 renormalized over the grid
    const std::size_t nx = s.x_axis.size(), ny = s.y_axis.size();
    std::vector<double> oracle(nx * ny);
    for (std::size_t i = 0; i < nx; ++i) {
        const double px = std::norm(free_gaussian_1d(s.x_axis[i], s.t, s.packet, natural));
        for (std::size_t j = 0; j < ny; ++j)
            oracle[i * ny + j] = px * transverse_density(s.y_axis[j], s.t, s.packet.sigma_y, natural);
    }
    const double oracle_norm = masked_grid_integral(s.x_axis, s.y_axis, oracle, rec.mask);
    double linf = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
        linf = std::max(linf, std::abs(oracle[k] / oracle_norm - rec.density[k]));
        sup = std::max(sup, oracle[k] / oracle_norm);
    }
    REQUIRE(linf / sup <= 1e-6);

    // normalized over the unmasked grid
    REQUIRE(masked_grid_integral(s.x_axis, s.y_axis, rec.density, rec.mask) ==
            Catch::Approx(1.0).margin(1e-8));

    // symmetric packet: even in y
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny / 2; ++j)
            REQUIRE(std::abs(rec.at(i, j) - rec.at(i, ny - 1 - j)) <=
                    1e-9 * std::max(rec.at(i, j), 1e-300));
}

TEST_CASE("reconstruction is invariant under shared positive time factors") {
    const auto base = make_quarter_turn();
    auto scaled = base;
    for (double& v : scaled.m0.current) v *= 37.5;
    for (double& v : scaled.m1.current) v *= 0.004;

    const auto a = reconstruct_density(base.m0, base.m1, base.frame, base.t, base.packet, natural,
                                       base.x_axis, base.y_axis);
    const auto b = reconstruct_density(scaled.m0, scaled.m1, scaled.frame, scaled.t, scaled.packet,
                                       natural, scaled.x_axis, scaled.y_axis);
    for (std::size_t k = 0; k < a.density.size(); ++k)
        REQUIRE(a.density[k] == Catch::Approx(b.density[k]).margin(1e-12));
}

TEST_CASE("general rotation masks the weak-denominator strip") {
    // artificial factorized currents: m0 ~ G(y), m1 ~ H(w); the identity
    // rec(x,y) = H(gamma x + delta u) G(y)/G(u), u = (a'-alpha x)/beta,
    // is an oracle for the lookup, masking and normalization machinery
    const double theta = pi / 3.0;
    const RotationFrame frame = rotate_frame(theta, 1.2);
    auto G = [](double y) { return std::exp(-y * y); };
    auto H = [](double w) { return 1.0 + 0.1 * std::cos(w); };

    ScreenMeasurement m0;
    m0.screen_id = "g";
    m0.positions = linspace(-12.0, 12.0, 4801);
    m0.times = {0.5};
    m0.current.resize(m0.positions.size());
    for (std::size_t i = 0; i < m0.positions.size(); ++i) m0.current[i] = G(m0.positions[i]);

    ScreenMeasurement m1;
    m1.screen_id = "h";
    m1.positions = linspace(-12.0, 12.0, 4801);
    m1.times = {0.5};
    m1.current.resize(m1.positions.size());
    for (std::size_t i = 0; i < m1.positions.size(); ++i) m1.current[i] = H(m1.positions[i]);

    const auto x_axis = linspace(-6.0, 6.0, 121);  // left end drives G(u) below threshold
    const auto y_axis = linspace(-2.0, 2.0, 41);
    GaussianPacketSpec packet;  // irrelevant to the artificial currents
    const auto rec =
        reconstruct_density(m0, m1, frame, 0.5, packet, natural, x_axis, y_axis, 1e-6);

    // G dies in the tails, so part of the x range must be masked
    REQUIRE(rec.masked_fraction > 0.0);
    REQUIRE(rec.masked_fraction < 0.5);

    // on unmasked points the reconstruction matches the closed identity
    std::vector<double> expected(rec.density.size(), 0.0);
    for (std::size_t i = 0; i < x_axis.size(); ++i) {
        const double u = (frame.a_prime - frame.alpha * x_axis[i]) / frame.beta;
        if (!rec.valid(i, 0)) continue;
        for (std::size_t j = 0; j < y_axis.size(); ++j)
            expected[i * y_axis.size() + j] =
                H(frame.gamma * x_axis[i] + frame.delta * u) * G(y_axis[j]) / G(u);
    }
    const double norm = masked_grid_integral(x_axis, y_axis, expected, rec.mask);
    for (std::size_t k = 0; k < expected.size(); ++k)
        if (rec.mask[k])
            REQUIRE(rec.density[k] == Catch::Approx(expected[k] / norm).epsilon(5e-4));
}

TEST_CASE("off-lattice queries go through bilinear interpolation and say so") {
    auto s = make_quarter_turn();
    // coarse time pair bracketing t so the lookup has to interpolate
    s.m0.times = {s.t - 0.05, s.t + 0.05};
    SlitGeometry geom;
    geom.x0 = s.packet.x0;
    s.m0.current.resize(s.m0.positions.size() * 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < s.m0.positions.size(); ++i)
            s.m0.current[k * s.m0.positions.size() + i] =
                slit_absorption_rate(s.m0.positions[i], s.m0.times[k], geom, s.packet, natural);

    const auto rec =
        reconstruct_density(s.m0, s.m1, s.frame, s.t, s.packet, natural, s.x_axis, s.y_axis);
    REQUIRE(rec.interpolation_order == 1);
    REQUIRE(masked_grid_integral(s.x_axis, s.y_axis, rec.density, rec.mask) ==
            Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("normalization_constant behavior") {
    const auto x = linspace(0.0, 1.0, 21);
    const auto y = linspace(0.0, 2.0, 31);
    std::vector<double> v(21 * 31, 0.5);
    std::vector<std::uint8_t> mask(21 * 31, 1);

    const double n_inv = normalization_constant(x, y, v, mask);
    REQUIRE(n_inv == Catch::Approx(1.0).epsilon(1e-12));  // 0.5 over area 2

    std::vector<double> w = v;
    for (double& a : w) a *= 2.0;
    REQUIRE(normalization_constant(x, y, w, mask) == Catch::Approx(2.0 * n_inv).epsilon(1e-12));

    std::fill(mask.begin(), mask.end(), 0);
    REQUIRE_THROWS_AS(normalization_constant(x, y, v, mask), std::invalid_argument);
}

TEST_CASE("screen measurement rejects malformed lattices") {
    ScreenMeasurement m;
    m.positions = {0.0, 1.0};
    m.times = {0.0};
    m.current = {1.0};  // wrong count
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m.current = {1.0, -0.5};
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m.current = {1.0, 0.5};
    REQUIRE_NOTHROW(m.validate());
    REQUIRE_THROWS_AS(m.sample(5.0, 0.0), std::invalid_argument);  // out of range
}
