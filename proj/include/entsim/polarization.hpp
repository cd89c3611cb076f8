#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace entsim {

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Linear-polarizer angles for the two analyzer arms, in degrees.
/// A linear polarizer is 180-degree periodic, so angles are reduced to
/// [0, 180) on construction.
struct AnalyzerSetting {
    double signal_deg = 0.0;
    double idler_deg = 0.0;

    AnalyzerSetting() = default;
    AnalyzerSetting(double signal, double idler)
        : signal_deg(reduce(signal)), idler_deg(reduce(idler)) {}

    static double reduce(double deg) {
        double r = std::fmod(deg, 180.0);
        if (r < 0.0) r += 180.0;
        return r;
    }
};

/// Named analyzer bases: H = 0, V = 90, D = 45, A = 135 degrees.
enum class Basis { H, V, D, A };

inline double basis_angle_deg(Basis b) {
    switch (b) {
        case Basis::H: return 0.0;
        case Basis::V: return 90.0;
        case Basis::D: return 45.0;
        case Basis::A: return 135.0;
    }
    throw std::invalid_argument("unknown basis");
}

/// Polarization state of a signal/idler photon pair as a 4x4 density matrix
/// over the product basis {HH, HV, VH, VV}.
///
/// The matrix representation is canonical for every state in the simulator,
/// pure or mixed, so ideal and degraded sources share one code path. All
/// factory functions return states that satisfy trace = 1, Hermiticity and
/// positive semidefiniteness; `from_matrix` validates a caller-supplied
/// matrix against those invariants.
class TwoPhotonState {
  public:
    using Matrix = Eigen::Matrix4cd;

    static constexpr double kTraceTol = 1e-12;
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kEigenvalueTol = -1e-12;

    /// Pure state (|HH> + e^{i dphi} |VV>)/sqrt(2). dphi = pi gives the
    /// maximally entangled singlet-like state with anti-correlated D/A
    /// coincidences.
    static TwoPhotonState bell(double delta_phi_rad) {
        if (!std::isfinite(delta_phi_rad))
            throw std::invalid_argument("bell state phase must be finite");
        Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
        psi(0) = 1.0 / std::numbers::sqrt2;
        psi(3) = std::polar(1.0 / std::numbers::sqrt2, delta_phi_rad);
        return TwoPhotonState(psi * psi.adjoint());
    }

    /// State whose H/V-basis visibility is `v_hv` and D/A-basis visibility is
    /// `v_da`. Model: convex mixture of a phase-damped Bell state (dphi = pi)
    /// with cross-polarized (HV/VH) noise. Mixing weight p sets the H/V
    /// contrast, the residual coherence d sets the D/A contrast:
    ///   p = (1 - v_hv)/2,   d = 2 v_da / (1 + v_hv).
    /// Requires 0 <= v_da <= v_hv <= 1 (d <= 1 must hold).
    static TwoPhotonState noisy(double v_hv, double v_da) {
        if (!(v_hv >= 0.0 && v_hv <= 1.0) || !(v_da >= 0.0 && v_da <= 1.0))
            throw std::invalid_argument("visibilities must lie in [0, 1]");
        if (v_da > v_hv)
            throw std::invalid_argument(
                "v_da > v_hv is unreachable for this noise model");
        const double p = (1.0 - v_hv) / 2.0;
        const double d = 2.0 * v_da / (1.0 + v_hv);
        Matrix rho = Matrix::Zero();
        rho(0, 0) = rho(3, 3) = (1.0 - p) / 2.0;
        rho(1, 1) = rho(2, 2) = p / 2.0;
        rho(0, 3) = rho(3, 0) = -(1.0 - p) * d / 2.0;
        return TwoPhotonState(rho);
    }

    static TwoPhotonState maximally_mixed() {
        return TwoPhotonState(Matrix::Identity() / 4.0);
    }

    /// Validating constructor for caller-supplied density matrices.
    static TwoPhotonState from_matrix(const Matrix& rho) {
        if (std::abs(rho.trace().real() - 1.0) > kTraceTol ||
            std::abs(rho.trace().imag()) > kTraceTol)
            throw std::invalid_argument("density matrix trace must be 1");
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
            throw std::invalid_argument("density matrix must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < kEigenvalueTol)
            throw std::invalid_argument(
                "density matrix must be positive semidefinite");
        return TwoPhotonState(rho);
    }

    const Matrix& rho() const { return rho_; }

  private:
    explicit TwoPhotonState(Matrix rho) : rho_(std::move(rho)) {}
    Matrix rho_;
};

namespace detail {

inline Eigen::Matrix2cd polarizer_projector(double angle_rad) {
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    Eigen::Matrix2cd p;
    p << c * c, c * s, c * s, s * s;
    return p;
}

inline Eigen::Matrix4cd kron2(const Eigen::Matrix2cd& a,
                              const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return k;
}

}  // namespace detail

/// Probability that both photons pass their linear analyzers:
/// Tr(rho . P(theta_s) x P(theta_i)).
inline double coincidence_probability(const TwoPhotonState& state,
                                      const AnalyzerSetting& setting) {
    const auto ps = detail::polarizer_projector(deg_to_rad(setting.signal_deg));
    const auto pi_ = detail::polarizer_projector(deg_to_rad(setting.idler_deg));
    const double p = (state.rho() * detail::kron2(ps, pi_)).trace().real();
    // clamp float dust so downstream ratios stay in range
    return std::clamp(p, 0.0, 1.0);
}

/// Correlation value at analyzer angles (a, b):
///   E = [P(a,b) + P(a+90,b+90) - P(a,b+90) - P(a+90,b)] / (sum of the four).
/// The four probabilities form a complete basis pair, so the denominator is
/// Tr(rho) = 1 up to rounding; normalising keeps E exact for any valid state.
inline double correlation_e(const TwoPhotonState& state, double a_deg,
                            double b_deg) {
    const double p_ab = coincidence_probability(state, {a_deg, b_deg});
    const double p_aB = coincidence_probability(state, {a_deg, b_deg + 90.0});
    const double p_Ab = coincidence_probability(state, {a_deg + 90.0, b_deg});
    const double p_AB =
        coincidence_probability(state, {a_deg + 90.0, b_deg + 90.0});
    const double total = p_ab + p_aB + p_Ab + p_AB;
    if (total <= 0.0)
        throw std::domain_error("degenerate analyzer setting: zero total rate");
    return (p_ab + p_AB - p_aB - p_Ab) / total;
}

/// CHSH combination S = E(a,b) + E(a,b') + E(a',b) - E(a',b').
/// The caller picks the settings; the sign convention matches the standard
/// maximum at a=0, a'=45, b=-22.5, b'=22.5 for the dphi = pi Bell state.
inline double chsh_s(const TwoPhotonState& state, double a_deg,
                     double a_prime_deg, double b_deg, double b_prime_deg) {
    return correlation_e(state, a_deg, b_deg) +
           correlation_e(state, a_deg, b_prime_deg) +
           correlation_e(state, a_prime_deg, b_deg) -
           correlation_e(state, a_prime_deg, b_prime_deg);
}

/// Contrast (c_max - c_min)/(c_max + c_min) of a correlation curve.
inline double visibility(double c_max, double c_min) {
    if (c_min < 0.0 || c_max < c_min)
        throw std::invalid_argument("visibility requires c_max >= c_min >= 0");
    const double total = c_max + c_min;
    if (total <= 0.0)
        throw std::domain_error("visibility undefined for zero total counts");
    return (c_max - c_min) / total;
}

/// Intrinsic quantum bit error ratio implied by a mean visibility.
inline double qber_from_visibility(double v_mean) {
    if (!(v_mean >= 0.0 && v_mean <= 1.0))
        throw std::invalid_argument("mean visibility must lie in [0, 1]");
    return (1.0 - v_mean) / 2.0;
}

/// Per-basis visibilities of the four standard correlation curves.
struct VisibilitySet {
    double v_h = 1.0;
    double v_v = 1.0;
    double v_d = 1.0;
    double v_a = 1.0;

    VisibilitySet() = default;
    VisibilitySet(double h, double v, double d, double a)
        : v_h(h), v_v(v), v_d(d), v_a(a) {
        for (double x : {v_h, v_v, v_d, v_a})
            if (!(x >= 0.0 && x <= 1.0))
                throw std::invalid_argument("visibility must lie in [0, 1]");
    }

    double mean() const { return (v_h + v_v + v_d + v_a) / 4.0; }
};

}  // namespace entsim
