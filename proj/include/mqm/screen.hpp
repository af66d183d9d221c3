#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqm {

// Absorption current sampled on a full position x time lattice of one
// detector plane. Values are stored row-major, one row per time sample.
struct ScreenMeasurement {
    std::string screen_id;
    std::vector<double> positions;  // sorted, strictly increasing
    std::vector<double> times;      // sorted, strictly increasing
    std::vector<double> current;    // times.size() * positions.size(), >= 0

    double& at(std::size_t time_idx, std::size_t pos_idx) {
        return current[time_idx * positions.size() + pos_idx];
    }
    double at(std::size_t time_idx, std::size_t pos_idx) const {
        return current[time_idx * positions.size() + pos_idx];
    }

    void validate() const {
        if (positions.size() < 2 || times.empty())
            throw std::invalid_argument("ScreenMeasurement: need >= 2 positions and >= 1 time");
        if (current.size() != positions.size() * times.size())
            throw std::invalid_argument("ScreenMeasurement: sample count does not match lattice");
        for (std::size_t i = 1; i < positions.size(); ++i)
            if (!(positions[i] > positions[i - 1]))
                throw std::invalid_argument("ScreenMeasurement: positions must increase");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw std::invalid_argument("ScreenMeasurement: times must increase");
        for (double v : current)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("ScreenMeasurement: current must be finite and >= 0");
    }

    // Sample lookup; falls back to bilinear interpolation off-lattice and
    // reports which was used through interp_order (0 exact, 1 bilinear).
    double sample(double pos, double t, int* interp_order = nullptr) const {
        const auto locate = [](const std::vector<double>& axis, double v, bool& exact) {
            const double span = axis.back() - axis.front();
            const double tol = 1e-9 * (span + 1.0);
            if (v < axis.front() - tol || v > axis.back() + tol)
                throw std::invalid_argument("ScreenMeasurement: query outside sampled range");
            auto it = std::lower_bound(axis.begin(), axis.end(), v - tol);
            std::size_t i = static_cast<std::size_t>(it - axis.begin());
            if (i >= axis.size()) i = axis.size() - 1;
            exact = std::abs(axis[i] - v) <= tol;
            if (!exact && i > 0) --i;  // left neighbor for interpolation
            return i;
        };
        bool pe = false, te = false;
        const std::size_t ip = locate(positions, pos, pe);
        const std::size_t it = locate(times, t, te);
        if (pe && te) return at(it, ip);
        if (interp_order) *interp_order = 1;
        const std::size_t ip1 = pe ? ip : std::min(ip + 1, positions.size() - 1);
        const std::size_t it1 = te ? it : std::min(it + 1, times.size() - 1);
        const double fx = pe || ip1 == ip ? 0.0 : (pos - positions[ip]) / (positions[ip1] - positions[ip]);
        const double ft = te || it1 == it ? 0.0 : (t - times[it]) / (times[it1] - times[it]);
        const double v00 = at(it, ip), v01 = at(it, ip1), v10 = at(it1, ip), v11 = at(it1, ip1);
        return (1.0 - ft) * ((1.0 - fx) * v00 + fx * v01) + ft * ((1.0 - fx) * v10 + fx * v11);
    }
};

}  // namespace mqm
