#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "entsim/rng.hpp"

namespace entsim {

/// Lens-free collection geometry: crystal, pump spot, emission cone and the
/// bare detector discs. The pump axis is x; the crystal spans
/// [-length/2, +length/2] and each detector plane sits `detector_distance_mm`
/// from the crystal centre (the distance reference is a modelling choice and
/// deliberately config-visible). Beam profile axes (x, y) map onto the ray
/// transverse coordinates (y, z).
struct OpticalLayout {
    double crystal_length_mm = 6.0;
    double crystal_refractive_index = 1.66;
    double beam_fwhm_x_um = 800.0;
    double beam_fwhm_y_um = 400.0;
    double max_opening_angle_deg = 0.3;
    double detector_diameter_um = 500.0;
    double detector_distance_mm = 100.0;

    enum class AngleDistribution { kUniformInAngle, kUniformInSolidAngle };
    AngleDistribution angle_distribution = AngleDistribution::kUniformInAngle;

    /// Nominal non-degenerate pair; sampling jitters each wavelength
    /// uniformly within +-wavelength_band_nm. Bookkeeping only: refraction
    /// uses the single crystal index.
    double signal_wavelength_nm = 760.0;
    double idler_wavelength_nm = 867.0;
    double wavelength_band_nm = 10.0;

    void validate() const {
        if (crystal_length_mm <= 0.0 || crystal_refractive_index <= 0.0 ||
            beam_fwhm_x_um <= 0.0 || beam_fwhm_y_um <= 0.0 ||
            detector_diameter_um <= 0.0 || detector_distance_mm <= 0.0)
            throw std::invalid_argument("layout dimensions must be positive");
        if (max_opening_angle_deg < 0.0 || max_opening_angle_deg >= 90.0)
            throw std::invalid_argument("opening angle must lie in [0, 90)");
        if (detector_distance_mm <= crystal_length_mm / 2.0)
            throw std::invalid_argument(
                "detector must sit beyond the crystal exit face");
    }
};

/// One sampled SPDC emission: birth point inside the crystal plus the
/// internal direction of each photon. Directions are unit vectors; the idler
/// azimuth is opposite the signal azimuth (transverse momentum balance for a
/// collinear pump).
struct RayPair {
    double birth_x_mm = 0.0;  // along the crystal, from its centre
    double birth_y_um = 0.0;
    double birth_z_um = 0.0;
    double signal_dir[3] = {1.0, 0.0, 0.0};
    double idler_dir[3] = {1.0, 0.0, 0.0};
    double signal_wavelength_nm = 0.0;
    double idler_wavelength_nm = 0.0;
};

enum class PairOutcome { kBoth, kSignalOnly, kIdlerOnly, kNeither };

struct EfficiencyEstimate {
    std::uint64_t n_samples = 0;
    std::uint64_t both_hit = 0;
    std::uint64_t only_signal = 0;
    std::uint64_t only_idler = 0;
    std::uint64_t neither = 0;
    double efficiency = 0.0;
    double std_error = 0.0;
};

/// Detector-plane histogram of photon landing positions, for external
/// plotting. `all` counts every photon; `coincident` counts photons whose
/// partner also hit.
struct HitMap {
    int bins = 0;
    double extent_um = 0.0;
    std::vector<std::uint64_t> all;
    std::vector<std::uint64_t> coincident;

    HitMap() = default;
    HitMap(int n_bins, double extent)
        : bins(n_bins),
          extent_um(extent),
          all(static_cast<std::size_t>(n_bins) * n_bins, 0),
          coincident(static_cast<std::size_t>(n_bins) * n_bins, 0) {
        if (n_bins <= 0 || extent <= 0.0)
            throw std::invalid_argument("hit map needs positive bins/extent");
    }

    bool empty() const { return bins == 0; }

    void deposit(double y_um, double z_um, bool is_coincident) {
        const double cell = 2.0 * extent_um / bins;
        const int iy = static_cast<int>(std::floor((y_um + extent_um) / cell));
        const int iz = static_cast<int>(std::floor((z_um + extent_um) / cell));
        if (iy < 0 || iy >= bins || iz < 0 || iz >= bins) return;
        const std::size_t idx = static_cast<std::size_t>(iz) * bins + iy;
        ++all[idx];
        if (is_coincident) ++coincident[idx];
    }

    void merge(const HitMap& other) {
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] += other.all[i];
            coincident[i] += other.coincident[i];
        }
    }
};

namespace detail {

// Unit doubles straight off the engine; one engine call per draw so every
// sample consumes a fixed, documented number of draws.
inline double u01(Rng& rng) {
    return static_cast<double>(rng()() >> 11) * 0x1.0p-53;
}

inline double u01_open(Rng& rng) {  // (0, 1]
    return (static_cast<double>(rng()() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace detail

inline double fwhm_to_sigma(double fwhm) {
    return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

/// Draws one emission sample. Per pair the generator is advanced exactly
/// seven times, in this order: birth x, Box-Muller pair for (y, z), opening
/// angle, azimuth, signal wavelength, idler wavelength. Keeping the draw
/// pattern fixed makes same-seed runs comparable across layout parameters.
inline RayPair sample_ray_pair(const OpticalLayout& layout, Rng& rng) {
    RayPair pair;
    const double half_len = layout.crystal_length_mm / 2.0;
    pair.birth_x_mm = (2.0 * detail::u01(rng) - 1.0) * half_len;

    const double r = std::sqrt(-2.0 * std::log(detail::u01_open(rng)));
    const double w = 2.0 * kPi * detail::u01(rng);
    pair.birth_y_um = fwhm_to_sigma(layout.beam_fwhm_x_um) * r * std::cos(w);
    pair.birth_z_um = fwhm_to_sigma(layout.beam_fwhm_y_um) * r * std::sin(w);

    const double alpha = deg_to_rad(layout.max_opening_angle_deg);
    const double u_theta = detail::u01(rng);
    double theta;
    if (layout.angle_distribution ==
        OpticalLayout::AngleDistribution::kUniformInAngle) {
        theta = alpha * u_theta;
    } else {
        theta = std::acos(1.0 - u_theta * (1.0 - std::cos(alpha)));
    }
    const double phi = 2.0 * kPi * detail::u01(rng);

    const double st = std::sin(theta), ct = std::cos(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    pair.signal_dir[0] = ct;
    pair.signal_dir[1] = st * cp;
    pair.signal_dir[2] = st * sp;
    pair.idler_dir[0] = ct;
    pair.idler_dir[1] = -st * cp;
    pair.idler_dir[2] = -st * sp;

    pair.signal_wavelength_nm =
        layout.signal_wavelength_nm +
        (2.0 * detail::u01(rng) - 1.0) * layout.wavelength_band_nm;
    pair.idler_wavelength_nm =
        layout.idler_wavelength_nm +
        (2.0 * detail::u01(rng) - 1.0) * layout.wavelength_band_nm;
    return pair;
}

/// Snell's law at the flat exit face: n sin(theta_in) = sin(theta_out).
inline double refract_angle(double internal_angle_rad, double n) {
    const double s = n * std::sin(internal_angle_rad);
    if (s > 1.0)
        throw std::domain_error("total internal reflection at the exit face");
    return std::asin(s);
}

/// Vector form of the exit refraction. The face normal is the pump axis, so
/// the transverse direction is preserved and only the polar angle opens up.
inline void refract_at_exit(const double (&dir_in)[3],
                            const OpticalLayout& layout, double (&dir_out)[3]) {
    const double sin_in = std::hypot(dir_in[1], dir_in[2]);
    if (sin_in == 0.0) {
        dir_out[0] = 1.0;
        dir_out[1] = dir_out[2] = 0.0;
        return;
    }
    const double sin_out = layout.crystal_refractive_index * sin_in;
    if (sin_out > 1.0)
        throw std::domain_error("total internal reflection at the exit face");
    const double scale = sin_out / sin_in;
    dir_out[1] = dir_in[1] * scale;
    dir_out[2] = dir_in[2] * scale;
    dir_out[0] = std::sqrt(std::max(0.0, 1.0 - sin_out * sin_out));
}

struct TraceResult {
    bool signal_hit = false;
    bool idler_hit = false;
    double signal_y_um = 0.0, signal_z_um = 0.0;
    double idler_y_um = 0.0, idler_z_um = 0.0;

    PairOutcome outcome() const {
        if (signal_hit && idler_hit) return PairOutcome::kBoth;
        if (signal_hit) return PairOutcome::kSignalOnly;
        if (idler_hit) return PairOutcome::kIdlerOnly;
        return PairOutcome::kNeither;
    }
};

namespace detail {

inline void trace_one(double birth_x_mm, double birth_y_um, double birth_z_um,
                      const double (&dir)[3], const OpticalLayout& layout,
                      double& y_um, double& z_um) {
    const double half_len = layout.crystal_length_mm / 2.0;
    // inside the crystal up to the exit face
    const double run_in_mm = (half_len - birth_x_mm) / dir[0];
    double y_mm = birth_y_um / 1000.0 + run_in_mm * dir[1];
    double z_mm = birth_z_um / 1000.0 + run_in_mm * dir[2];
    // refract, then free flight to the detector plane
    double out[3];
    refract_at_exit(dir, layout, out);
    const double run_out_mm =
        (layout.detector_distance_mm - half_len) / out[0];
    y_mm += run_out_mm * out[1];
    z_mm += run_out_mm * out[2];
    y_um = y_mm * 1000.0;
    z_um = z_mm * 1000.0;
}

}  // namespace detail

/// Propagates both photons of a pair to their detector planes and classifies
/// the pair by which active areas were hit.
inline TraceResult trace_to_detector(const RayPair& pair,
                                     const OpticalLayout& layout) {
    TraceResult res;
    detail::trace_one(pair.birth_x_mm, pair.birth_y_um, pair.birth_z_um,
                      pair.signal_dir, layout, res.signal_y_um,
                      res.signal_z_um);
    detail::trace_one(pair.birth_x_mm, pair.birth_y_um, pair.birth_z_um,
                      pair.idler_dir, layout, res.idler_y_um, res.idler_z_um);
    const double radius = layout.detector_diameter_um / 2.0;
    const double r2 = radius * radius;
    res.signal_hit = res.signal_y_um * res.signal_y_um +
                         res.signal_z_um * res.signal_z_um <=
                     r2;
    res.idler_hit =
        res.idler_y_um * res.idler_y_um + res.idler_z_um * res.idler_z_um <=
        r2;
    return res;
}

struct HitMapRequest {
    int bins = 101;
    double extent_um = 1500.0;
};

struct GeometryResult {
    EfficiencyEstimate estimate;
    HitMap hit_map;  // empty unless requested
};

/// Number of samples drawn from one derived sub-seed. Chunking (rather than
/// per-worker streams) is what makes the merged result independent of the
/// worker count: chunk i always uses sub-seed i of the run seed and always
/// covers the same sample indices, whichever thread processes it.
inline constexpr std::uint64_t kGeometryChunkSamples = 8192;

/// Monte Carlo collection-efficiency estimate. Deterministic: a given
/// (layout, n_samples, seed) triple yields a bit-identical result for any
/// worker count. `std_error` is the binomial error of the both-hit fraction.
inline GeometryResult run_geometry(
    const OpticalLayout& layout, std::uint64_t n_samples, std::uint64_t seed,
    unsigned n_workers = 1,
    const std::optional<HitMapRequest>& map_request = std::nullopt) {
    layout.validate();
    if (n_samples == 0) throw std::invalid_argument("need at least one sample");
    if (n_workers == 0) n_workers = 1;

    const std::uint64_t n_chunks =
        (n_samples + kGeometryChunkSamples - 1) / kGeometryChunkSamples;

    struct Tally {
        std::uint64_t both = 0, signal = 0, idler = 0, neither = 0;
        HitMap map;
    };

    std::atomic<std::uint64_t> next_chunk{0};
    std::vector<Tally> tallies(n_workers);

    auto work = [&](unsigned worker_index) {
        Tally& tally = tallies[worker_index];
        if (map_request)
            tally.map = HitMap(map_request->bins, map_request->extent_um);
        for (;;) {
            const std::uint64_t chunk = next_chunk.fetch_add(1);
            if (chunk >= n_chunks) break;
            const std::uint64_t begin = chunk * kGeometryChunkSamples;
            const std::uint64_t end =
                std::min(n_samples, begin + kGeometryChunkSamples);
            Rng rng = make_rng(derive_seed(seed, chunk));
            for (std::uint64_t i = begin; i < end; ++i) {
                const RayPair pair = sample_ray_pair(layout, rng);
                const TraceResult res = trace_to_detector(pair, layout);
                switch (res.outcome()) {
                    case PairOutcome::kBoth: ++tally.both; break;
                    case PairOutcome::kSignalOnly: ++tally.signal; break;
                    case PairOutcome::kIdlerOnly: ++tally.idler; break;
                    case PairOutcome::kNeither: ++tally.neither; break;
                }
                if (map_request) {
                    const bool coincident = res.signal_hit && res.idler_hit;
                    if (res.signal_hit)
                        tally.map.deposit(res.signal_y_um, res.signal_z_um,
                                          coincident);
                    if (res.idler_hit)
                        tally.map.deposit(res.idler_y_um, res.idler_z_um,
                                          coincident);
                }
            }
        }
    };

    if (n_workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    GeometryResult result;
    if (map_request)
        result.hit_map = HitMap(map_request->bins, map_request->extent_um);
    for (const Tally& t : tallies) {
        result.estimate.both_hit += t.both;
        result.estimate.only_signal += t.signal;
        result.estimate.only_idler += t.idler;
        result.estimate.neither += t.neither;
        if (map_request && !t.map.empty()) result.hit_map.merge(t.map);
    }
    result.estimate.n_samples = n_samples;
    const double p =
        static_cast<double>(result.estimate.both_hit) / n_samples;
    result.estimate.efficiency = p;
    result.estimate.std_error = std::sqrt(p * (1.0 - p) / n_samples);
    return result;
}

/// Collection efficiency of the layout from `n_samples` Monte Carlo pairs.
inline EfficiencyEstimate estimate_geometric_efficiency(
    const OpticalLayout& layout, std::uint64_t n_samples, std::uint64_t seed,
    unsigned n_workers = 1) {
    if (n_samples < 10000)
        throw std::invalid_argument(
            "efficiency estimate needs at least 1e4 samples");
    return run_geometry(layout, n_samples, seed, n_workers).estimate;
}

}  // namespace entsim
