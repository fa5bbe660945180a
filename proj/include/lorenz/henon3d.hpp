#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lorenz/errors.hpp"

namespace lorenz {

using State3 = Eigen::Vector3d; // (x, y, z)

// Parameters of the 3D Henon map
//   xbar = y, ybar = z, zbar = M1 + B x + M2 y - z^2.
// B equals the (constant) Jacobian determinant.
struct Henon3DParams {
    double m1 = 0.0;
    double m2 = 0.0;
    double b = 0.0;
};

State3 henon_step(const State3& s, const Henon3DParams& p);

// Rows [0,1,0], [0,0,1], [B, M2, -2z]; det = B identically.
Eigen::Matrix3d henon_jacobian(const State3& s, const Henon3DParams& p);

// Fixed points are diagonal: x = y = z = root of x^2 + (1-B-M2)x - M1.
// Returns 0, 1 or 2 points (double roots deduplicated).
std::vector<State3> henon_fixed_points(const Henon3DParams& p);

// Eigenvalues of the Jacobian at a fixed point, i.e. roots of
//   rho^3 + 2z rho^2 - M2 rho - B.
// Throws validation_error if fp is not a fixed point (residual > 1e-9).
std::array<std::complex<double>, 3> multipliers(const Henon3DParams& p, const State3& fp);

struct Codim3Point {
    Henon3DParams params;
    State3 fixed_point;
    std::array<std::complex<double>, 3> mults; // close to (-1, -1, +1)
    int newton_iterations = 0;
};

// Newton on the coefficient-matching system for multipliers (-1,-1,+1)
// together with the fixed point equation. Converges to
// (M1, M2, B) = (-1/4, 1, 1), fixed point (1/2, 1/2, 1/2).
Codim3Point find_codim3_point();

struct LyapunovSpectrum {
    std::array<double, 3> exponents{}; // sorted descending, nats per iterate
    long transient_discarded = 0;
    long iterates_used = 0;
    // max over the three exponents of their variation across the final 10%
    // of iterates (running-estimate min/max gap)
    double last_window_drift = 0.0;
    bool sum_check_applicable = true; // false when B == 0
};

// Tangent-space products with QR reorthonormalization every iterate.
// Throws orbit_escape_error if the orbit leaves escape_radius or blows up.
LyapunovSpectrum lyapunov_spectrum(const Henon3DParams& p, const State3& s0,
                                   long n_transient, long n_iterates,
                                   double escape_radius = 100.0);

enum class AttractorTag {
    DivergedToInfinity,
    PeriodicSink,
    InvariantCurveLike,
    LorenzLikeCandidate,
    ChaoticOther,
    Undetermined,
};

const char* to_string(AttractorTag t);

struct AttractorClass {
    AttractorTag tag = AttractorTag::Undetermined;
    int period = 0; // >= 1 when tag == PeriodicSink
};

struct ClassifyBudget {
    long transient = 10000;
    long measure = 1000000;
    double escape_radius = 100.0;
    int q_max = 64;
    double closure_tol = 1e-9;
    double eps_pos = 1e-3;
    double eps_zero = 1e-3;
};

struct AttractorReport {
    AttractorClass cls;
    std::optional<LyapunovSpectrum> spectrum; // present for Lyapunov-based tags
    State3 final_state = State3::Zero();
    long escape_iterate = -1; // >= 0 when diverged
    std::string note;
};

// The pure classification rule on a sorted spectrum (no dynamics):
//   LorenzLikeCandidate  iff L1 > eps_pos, L1+L2 > -eps_zero, L1+L2+L3 < -eps_pos
//   InvariantCurveLike   iff L1 in (-eps_zero, eps_zero) and L2 < -eps_pos
//   ChaoticOther         iff L1 > eps_pos (volume-expansion condition failed)
//   Undetermined         otherwise
AttractorClass classify_from_spectrum(const std::array<double, 3>& exps,
                                      double eps_pos = 1e-3, double eps_zero = 1e-3);

// Deterministic full classification: escape check, periodic closure up to
// q_max (Newton-refined), then the Lyapunov rule.
AttractorReport classify_dynamics(const Henon3DParams& p, const State3& s0,
                                  const ClassifyBudget& budget = {});

// Default seed: diagonal fixed point offset by +1e-3 per coordinate,
// or the origin when no real fixed point exists.
State3 default_seed(const Henon3DParams& p);

struct PeriodicOrbit {
    std::vector<State3> points; // one cycle, length = period
    int period = 0;
    std::array<std::complex<double>, 3> mults; // of the q-fold Jacobian product
};

// Detects a closed orbit of period <= q_max starting near s (already past
// transient), refines it with Newton on F^q(s) - s, and computes the cycle
// multipliers. Returns nullopt if no closure within tolerance.
std::optional<PeriodicOrbit> detect_periodic_orbit(const Henon3DParams& p, const State3& s,
                                                   int q_max, double closure_tol,
                                                   double escape_radius);

} // namespace lorenz
