#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entsim/polarization.hpp"

namespace entsim {

/// Pump and crystal parameters of the photon-pair source.
///
/// `tilt_phase_coefficient_rad_per_urad` maps angular detuning of a crystal
/// to the pair phase; the default pi/600 puts the D/A visibility at
/// cos(pi/6) ~ 0.87 at the edge of the +-100 urad alignment tolerance. It is
/// a calibrated model parameter, not a measured constant.
struct SourceConfig {
    double pump_wavelength_nm = 405.0;
    double pump_linewidth_mhz = 160.0;
    double beam_fwhm_x_um = 800.0;
    double beam_fwhm_y_um = 400.0;
    double crystal_cut_angle_deg = 28.8;
    double crystal_length_mm = 6.0;
    double tilt_phase_coefficient_rad_per_urad = kPi / 600.0;

    void validate() const {
        if (pump_wavelength_nm <= 0.0 || pump_linewidth_mhz <= 0.0 ||
            beam_fwhm_x_um <= 0.0 || beam_fwhm_y_um <= 0.0 ||
            crystal_length_mm <= 0.0)
            throw std::invalid_argument(
                "source lengths and wavelengths must be positive");
    }
};

struct LaserOperatingPoint {
    double current_ma = 0.0;
    double temperature_c = 20.0;

    LaserOperatingPoint() = default;
    LaserOperatingPoint(double current, double temperature)
        : current_ma(current), temperature_c(temperature) {
        if (current_ma < 0.0)
            throw std::invalid_argument("laser current must be >= 0");
    }
};

/// Pair phase as a function of crystal angular detuning. Nominal alignment
/// (zero detuning) gives exactly pi; the response is linear in the detuning
/// over the supported +-10 mrad range.
inline double phase_from_tilt(double detuning_urad,
                              const SourceConfig& config) {
    if (std::abs(detuning_urad) > 10000.0)
        throw std::invalid_argument("detuning outside +-10000 urad");
    if (detuning_urad == 0.0) return kPi;
    return kPi + config.tilt_phase_coefficient_rad_per_urad * detuning_urad;
}

/// D/A-basis visibility implied by an angular detuning: |cos(k * detuning)|.
/// Matches the contrast of a D/A analyzer sweep of the correspondingly
/// detuned pair state.
inline double visibility_vs_detuning(double detuning_urad,
                                     const SourceConfig& config) {
    if (std::abs(detuning_urad) > 10000.0)
        throw std::invalid_argument("detuning outside +-10000 urad");
    return std::abs(
        std::cos(config.tilt_phase_coefficient_rad_per_urad * detuning_urad));
}

/// Signal/idler wavelengths for a non-degenerate pair. The signal sits
/// `split_nm` below the degenerate wavelength 2*lambda_p; the idler follows
/// from energy conservation 1/lp = 1/ls + 1/li.
inline std::pair<double, double> signal_idler_wavelengths(
    double pump_wavelength_nm, double split_nm) {
    if (pump_wavelength_nm <= 0.0)
        throw std::invalid_argument("pump wavelength must be positive");
    if (split_nm < 0.0) throw std::invalid_argument("split must be >= 0");
    const double lambda_s = 2.0 * pump_wavelength_nm - split_nm;
    if (lambda_s <= pump_wavelength_nm)
        throw std::domain_error(
            "split leaves no physical idler wavelength (signal at or below "
            "the pump)");
    const double lambda_i =
        1.0 / (1.0 / pump_wavelength_nm - 1.0 / lambda_s);
    return {lambda_s, lambda_i};
}

/// Detected pair rate under linear pump scaling.
inline double pair_rate(double pump_power_mw, double brightness_per_mw) {
    if (pump_power_mw < 0.0 || brightness_per_mw < 0.0)
        throw std::invalid_argument("pump power and brightness must be >= 0");
    return pump_power_mw * brightness_per_mw;
}

/// D/A visibility of the source versus laser current and temperature, plus
/// the laser power curve. Mode-hops show up as low-visibility bands across
/// the grid. Rows are temperatures, columns are currents, both ascending.
class ModeHopMap {
  public:
    ModeHopMap() = default;
    ModeHopMap(std::vector<double> currents_ma,
               std::vector<double> temperatures_c,
               std::vector<double> visibility_row_major,
               std::vector<std::pair<double, double>> power_curve_ma_mw = {})
        : currents_(std::move(currents_ma)),
          temperatures_(std::move(temperatures_c)),
          visibility_(std::move(visibility_row_major)),
          power_curve_(std::move(power_curve_ma_mw)) {
        if (currents_.empty() || temperatures_.empty())
            throw std::invalid_argument("mode-hop map grid must be non-empty");
        if (visibility_.size() != currents_.size() * temperatures_.size())
            throw std::invalid_argument("mode-hop map grid is not rectangular");
        if (!std::is_sorted(currents_.begin(), currents_.end()) ||
            !std::is_sorted(temperatures_.begin(), temperatures_.end()))
            throw std::invalid_argument("mode-hop map axes must be sorted");
        for (double v : visibility_)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument(
                    "mode-hop map visibilities must lie in [0, 1]");
        for (std::size_t i = 1; i < power_curve_.size(); ++i)
            if (power_curve_[i].first <= power_curve_[i - 1].first)
                throw std::invalid_argument(
                    "power curve currents must be strictly ascending");
    }

    const std::vector<double>& currents_ma() const { return currents_; }
    const std::vector<double>& temperatures_c() const { return temperatures_; }

    double value(std::size_t temperature_index,
                 std::size_t current_index) const {
        return visibility_[temperature_index * currents_.size() +
                           current_index];
    }

    /// Laser output power at a given current, linear between curve points and
    /// clamped at the ends. Returns 0 when no curve is attached.
    double power_mw(double current_ma) const {
        if (power_curve_.empty()) return 0.0;
        if (current_ma <= power_curve_.front().first)
            return power_curve_.front().second;
        if (current_ma >= power_curve_.back().first)
            return power_curve_.back().second;
        auto hi = std::upper_bound(
            power_curve_.begin(), power_curve_.end(), current_ma,
            [](double c, const auto& p) { return c < p.first; });
        auto lo = hi - 1;
        const double f =
            (current_ma - lo->first) / (hi->first - lo->first);
        return lo->second + f * (hi->second - lo->second);
    }

    const std::vector<std::pair<double, double>>& power_curve() const {
        return power_curve_;
    }

  private:
    std::vector<double> currents_;
    std::vector<double> temperatures_;
    std::vector<double> visibility_;
    std::vector<std::pair<double, double>> power_curve_;
};

namespace detail {

inline std::size_t lower_cell(const std::vector<double>& axis, double x) {
    // index i with axis[i] <= x <= axis[i+1]; callers have bounds-checked x
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = (it == axis.begin()) ? 0 : (it - axis.begin() - 1);
    return std::min(i, axis.size() - 2);
}

}  // namespace detail

/// Bilinear interpolation of the map at an operating point. Points outside
/// the grid are an error, not an extrapolation.
inline double visibility_at(const LaserOperatingPoint& point,
                            const ModeHopMap& map) {
    const auto& cur = map.currents_ma();
    const auto& tem = map.temperatures_c();
    if (point.current_ma < cur.front() || point.current_ma > cur.back() ||
        point.temperature_c < tem.front() || point.temperature_c > tem.back())
        throw std::out_of_range("operating point outside the surveyed grid");
    if (cur.size() == 1 && tem.size() == 1) return map.value(0, 0);

    if (cur.size() == 1) {
        const std::size_t t0 = detail::lower_cell(tem, point.temperature_c);
        const double ft =
            (point.temperature_c - tem[t0]) / (tem[t0 + 1] - tem[t0]);
        return (1.0 - ft) * map.value(t0, 0) + ft * map.value(t0 + 1, 0);
    }
    if (tem.size() == 1) {
        const std::size_t c0 = detail::lower_cell(cur, point.current_ma);
        const double fc = (point.current_ma - cur[c0]) / (cur[c0 + 1] - cur[c0]);
        return (1.0 - fc) * map.value(0, c0) + fc * map.value(0, c0 + 1);
    }

    const std::size_t c0 = detail::lower_cell(cur, point.current_ma);
    const std::size_t t0 = detail::lower_cell(tem, point.temperature_c);
    const double fc = (point.current_ma - cur[c0]) / (cur[c0 + 1] - cur[c0]);
    const double ft =
        (point.temperature_c - tem[t0]) / (tem[t0 + 1] - tem[t0]);
    const double v00 = map.value(t0, c0), v01 = map.value(t0, c0 + 1);
    const double v10 = map.value(t0 + 1, c0), v11 = map.value(t0 + 1, c0 + 1);
    return (1.0 - ft) * ((1.0 - fc) * v00 + fc * v01) +
           ft * ((1.0 - fc) * v10 + fc * v11);
}

/// Grid current that maximizes interpolated visibility at `temperature_c`.
/// Ties break toward the lower current (lower power draw).
inline double optimal_current(double temperature_c, const ModeHopMap& map) {
    const auto& tem = map.temperatures_c();
    if (temperature_c < tem.front() || temperature_c > tem.back())
        throw std::out_of_range("temperature outside the surveyed grid");
    double best_current = map.currents_ma().front();
    double best_vis = -1.0;
    for (double c : map.currents_ma()) {
        const double v = visibility_at({c, temperature_c}, map);
        if (v > best_vis) {
            best_vis = v;
            best_current = c;
        }
    }
    return best_current;
}

/// Parameters of the synthetic mode-hop structure: diagonal low-visibility
/// bands (hops) over an otherwise high-visibility plateau.
struct SyntheticMapParams {
    double current_min_ma = 30.0;
    double current_max_ma = 50.0;
    double current_step_ma = 0.5;
    double temperature_min_c = 14.0;
    double temperature_max_c = 26.0;
    double temperature_step_c = 0.5;
    double plateau_visibility = 0.90;
    double band_depth = 0.55;
    double band_width_ma = 0.6;
    double band_spacing_ma = 6.0;
    /// Current shift of the band pattern per degree C; mode-hop lines run
    /// diagonally through (current, temperature) space.
    double band_slope_ma_per_c = 0.8;
};

inline ModeHopMap make_synthetic_mode_hop_map(
    const SyntheticMapParams& p = {}) {
    std::vector<double> currents, temperatures, vis;
    for (double c = p.current_min_ma; c <= p.current_max_ma + 1e-9;
         c += p.current_step_ma)
        currents.push_back(c);
    for (double t = p.temperature_min_c; t <= p.temperature_max_c + 1e-9;
         t += p.temperature_step_c)
        temperatures.push_back(t);
    vis.reserve(currents.size() * temperatures.size());
    for (double t : temperatures)
        for (double c : currents) {
            // distance to the nearest hop line, folded into one band period
            const double u = c - p.band_slope_ma_per_c * t;
            double d = std::fmod(u, p.band_spacing_ma);
            if (d < 0.0) d += p.band_spacing_ma;
            d = std::min(d, p.band_spacing_ma - d);
            const double dip =
                p.band_depth * std::exp(-(d * d) / (2.0 * p.band_width_ma *
                                                    p.band_width_ma));
            vis.push_back(std::clamp(p.plateau_visibility - dip, 0.0, 1.0));
        }

    // power curve with a plateau: output does not scale with current
    // everywhere
    std::vector<std::pair<double, double>> power = {
        {20.0, 0.0}, {34.0, 12.0}, {40.0, 17.0}, {44.0, 17.5}, {52.0, 21.0}};
    return ModeHopMap(std::move(currents), std::move(temperatures),
                      std::move(vis), std::move(power));
}

/// Text format for survey grids:
///   currents: c1 c2 ...
///   t1: v1 v2 ...
///   t2: v1 v2 ...
/// Optional power curve lines: `power: current_ma power_mw`.
/// `#` starts a comment.
inline ModeHopMap load_mode_hop_map(std::istream& in) {
    std::vector<double> currents, temperatures, vis;
    std::vector<std::pair<double, double>> power;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("mode-hop map: missing ':' in line: " +
                                     line);
        std::string head = line.substr(0, colon);
        std::istringstream rest(line.substr(colon + 1));
        if (head == "currents") {
            double c;
            while (rest >> c) currents.push_back(c);
        } else if (head == "power") {
            double c, p;
            if (!(rest >> c >> p))
                throw std::runtime_error("mode-hop map: bad power line");
            power.emplace_back(c, p);
        } else {
            double t;
            try {
                t = std::stod(head);
            } catch (const std::exception&) {
                throw std::runtime_error("mode-hop map: bad row label: " +
                                         head);
            }
            temperatures.push_back(t);
            double v;
            std::size_t n = 0;
            while (rest >> v) {
                vis.push_back(v);
                ++n;
            }
            if (n != currents.size())
                throw std::runtime_error(
                    "mode-hop map: row width does not match currents header");
        }
    }
    return ModeHopMap(std::move(currents), std::move(temperatures),
                      std::move(vis), std::move(power));
}

inline void save_mode_hop_map(std::ostream& out, const ModeHopMap& map) {
    const auto saved = out.precision(17);
    out << "currents:";
    for (double c : map.currents_ma()) out << ' ' << c;
    out << '\n';
    for (std::size_t t = 0; t < map.temperatures_c().size(); ++t) {
        out << map.temperatures_c()[t] << ':';
        for (std::size_t c = 0; c < map.currents_ma().size(); ++c)
            out << ' ' << map.value(t, c);
        out << '\n';
    }
    for (const auto& [c, p] : map.power_curve())
        out << "power: " << c << ' ' << p << '\n';
    out.precision(saved);
}

}  // namespace entsim
