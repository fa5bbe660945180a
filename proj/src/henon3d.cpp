#include "lorenz/henon3d.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

namespace lorenz {

namespace {

bool finite(const State3& s) {
    return std::isfinite(s[0]) && std::isfinite(s[1]) && std::isfinite(s[2]);
}

bool escaped(const State3& s, double radius) {
    return !finite(s) || s.cwiseAbs().maxCoeff() > radius;
}

// Roots of the monic cubic rho^3 + a2 rho^2 + a1 rho + a0.
// Closed form with a dedicated near-double-root branch: the codim-3 point
// has a defective double multiplier at -1, where generic eigensolvers only
// reach sqrt(eps) accuracy but the discriminant route stays at full
// precision.
std::array<std::complex<double>, 3> solve_cubic_monic(double a2, double a1, double a0) {
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double half_q = q / 2.0;
    const double third_p = p / 3.0;
    const double disc = half_q * half_q + third_p * third_p * third_p;
    const double scale =
        std::max(half_q * half_q, std::abs(third_p * third_p * third_p));
    const double shift = a2 / 3.0;

    std::array<std::complex<double>, 3> roots;
    if (std::abs(disc) <= 1e3 * std::numeric_limits<double>::epsilon() * scale) {
        if (p == 0.0 && q == 0.0) {
            roots = {-shift, -shift, -shift};
        } else {
            const double t_single = 3.0 * q / p;
            const double t_double = -1.5 * q / p;
            roots = {t_single - shift, t_double - shift, t_double - shift};
        }
    } else if (disc > 0.0) {
        // one real root, complex pair via deflation
        const double s = std::sqrt(disc);
        const double u = std::cbrt(-half_q + s);
        const double v = std::cbrt(-half_q - s);
        double r = u + v - shift;
        for (int it = 0; it < 3; ++it) { // Newton polish on the original cubic
            const double f = ((r + a2) * r + a1) * r + a0;
            const double df = (3.0 * r + 2.0 * a2) * r + a1;
            if (df == 0.0) break;
            r -= f / df;
        }
        const double qb = a2 + r;
        const double qc = a1 + r * qb;
        const double qd = qb * qb - 4.0 * qc;
        if (qd >= 0.0) {
            const double sq = std::sqrt(qd);
            roots = {r, (-qb + sq) / 2.0, (-qb - sq) / 2.0};
        } else {
            const double im = std::sqrt(-qd) / 2.0;
            roots = {r, {-qb / 2.0, im}, {-qb / 2.0, -im}};
        }
    } else {
        // three distinct real roots (trigonometric form)
        const double m = 2.0 * std::sqrt(-third_p);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            double r = m * std::cos(theta - 2.0 * M_PI * k / 3.0) - shift;
            for (int it = 0; it < 3; ++it) {
                const double f = ((r + a2) * r + a1) * r + a0;
                const double df = (3.0 * r + 2.0 * a2) * r + a1;
                if (std::abs(df) < 1e-8) break;
                r -= f / df;
            }
            roots[k] = r;
        }
    }
    return roots;
}

// One modified Gram-Schmidt QR step on the tangent frame; returns the
// diagonal of R (column norms after projection).
std::array<double, 3> qr_reorthonormalize(Eigen::Matrix3d& q) {
    std::array<double, 3> diag{};
    for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d v = q.col(k);
        for (int m = 0; m < k; ++m) v -= q.col(m).dot(v) * q.col(m);
        diag[k] = v.norm();
        q.col(k) = diag[k] > 0 ? Eigen::Vector3d(v / diag[k]) : v;
    }
    return diag;
}

} // namespace

State3 henon_step(const State3& s, const Henon3DParams& p) {
    return State3(s[1], s[2], p.m1 + p.b * s[0] + p.m2 * s[1] - s[2] * s[2]);
}

Eigen::Matrix3d henon_jacobian(const State3& s, const Henon3DParams& p) {
    Eigen::Matrix3d j;
    j << 0, 1, 0,
         0, 0, 1,
         p.b, p.m2, -2.0 * s[2];
    return j;
}

std::vector<State3> henon_fixed_points(const Henon3DParams& p) {
    // x^2 + (1 - B - M2) x - M1 = 0 on the diagonal
    const double bq = 1.0 - p.b - p.m2;
    const double disc = bq * bq + 4.0 * p.m1;
    std::vector<State3> out;
    if (disc < 0.0) return out;
    const double sq = std::sqrt(disc);
    const double xa = (-bq + sq) / 2.0;
    const double xb = (-bq - sq) / 2.0;
    out.emplace_back(xa, xa, xa);
    if (sq > 0.0) out.emplace_back(xb, xb, xb);
    return out;
}

std::array<std::complex<double>, 3> multipliers(const Henon3DParams& p, const State3& fp) {
    const State3 image = henon_step(fp, p);
    if ((image - fp).cwiseAbs().maxCoeff() > 1e-9)
        throw validation_error("multipliers: input is not a fixed point");
    // characteristic polynomial rho^3 + 2z rho^2 - M2 rho - B
    auto out = solve_cubic_monic(2.0 * fp[2], -p.m2, -p.b);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
    return out;
}

Codim3Point find_codim3_point() {
    // Unknowns q = (M1, M2, B, x*). Target char poly (rho+1)^2(rho-1)
    // = rho^3 + rho^2 - rho - 1 against rho^3 + 2x* rho^2 - M2 rho - B,
    // plus the fixed point equation.
    Eigen::Vector4d q(0.0, 0.5, 0.5, 0.25); // generic start
    int it = 0;
    for (; it < 100; ++it) {
        const double m1 = q[0], m2 = q[1], b = q[2], x = q[3];
        Eigen::Vector4d f(2.0 * x - 1.0,
                          -m2 - (-1.0),
                          -b - (-1.0),
                          x * x + (1.0 - b - m2) * x - m1);
        if (f.cwiseAbs().maxCoeff() < 1e-14) break;
        Eigen::Matrix4d jac;
        jac << 0, 0, 0, 2,
               0, -1, 0, 0,
               0, 0, -1, 0,
               -1, -x, -x, 2.0 * x + (1.0 - b - m2);
        q -= jac.partialPivLu().solve(f);
    }
    if (it >= 100)
        throw numeric_error("find_codim3_point: Newton failed to converge after 100 iterations");

    Codim3Point res;
    res.params = Henon3DParams{q[0], q[1], q[2]};
    res.fixed_point = State3(q[3], q[3], q[3]);
    res.newton_iterations = it;
    res.mults = multipliers(res.params, res.fixed_point);
    // order as (-1, -1, +1)
    std::sort(res.mults.begin(), res.mults.end(),
              [](const auto& a, const auto& b) { return a.real() < b.real(); });
    double worst = std::max({std::abs(res.mults[0] + 1.0), std::abs(res.mults[1] + 1.0),
                             std::abs(res.mults[2] - 1.0)});
    if (worst > 1e-10)
        throw numeric_error("find_codim3_point: multiplier verification failed");
    return res;
}

LyapunovSpectrum lyapunov_spectrum(const Henon3DParams& p, const State3& s0,
                                   long n_transient, long n_iterates, double escape_radius) {
    State3 s = s0;
    for (long t = 0; t < n_transient; ++t) {
        s = henon_step(s, p);
        if (escaped(s, escape_radius)) throw orbit_escape_error(t);
    }

    Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
    std::array<double, 3> sums{};
    const long window_start = n_iterates - n_iterates / 10;
    std::array<double, 3> wmin{}, wmax{};
    wmin.fill(std::numeric_limits<double>::infinity());
    wmax.fill(-std::numeric_limits<double>::infinity());

    for (long t = 0; t < n_iterates; ++t) {
        q = henon_jacobian(s, p) * q;
        s = henon_step(s, p);
        if (escaped(s, escape_radius)) throw orbit_escape_error(n_transient + t);
        const auto diag = qr_reorthonormalize(q);
        for (int k = 0; k < 3; ++k) sums[k] += std::log(std::abs(diag[k]));
        if (t + 1 >= window_start) {
            for (int k = 0; k < 3; ++k) {
                const double est = sums[k] / double(t + 1);
                wmin[k] = std::min(wmin[k], est);
                wmax[k] = std::max(wmax[k], est);
            }
        }
    }

    LyapunovSpectrum out;
    for (int k = 0; k < 3; ++k) out.exponents[k] = sums[k] / double(n_iterates);
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    out.transient_discarded = n_transient;
    out.iterates_used = n_iterates;
    double drift = 0.0;
    for (int k = 0; k < 3; ++k) drift = std::max(drift, wmax[k] - wmin[k]);
    out.last_window_drift = drift;
    out.sum_check_applicable = p.b != 0.0;
    return out;
}

const char* to_string(AttractorTag t) {
    switch (t) {
        case AttractorTag::DivergedToInfinity: return "DivergedToInfinity";
        case AttractorTag::PeriodicSink: return "PeriodicSink";
        case AttractorTag::InvariantCurveLike: return "InvariantCurveLike";
        case AttractorTag::LorenzLikeCandidate: return "LorenzLikeCandidate";
        case AttractorTag::ChaoticOther: return "ChaoticOther";
        case AttractorTag::Undetermined: return "Undetermined";
    }
    return "?";
}

AttractorClass classify_from_spectrum(const std::array<double, 3>& exps, double eps_pos,
                                      double eps_zero) {
    const double l1 = exps[0], l2 = exps[1], l3 = exps[2];
    if (l1 > eps_pos) {
        if (l1 + l2 > -eps_zero && l1 + l2 + l3 < -eps_pos)
            return {AttractorTag::LorenzLikeCandidate, 0};
        return {AttractorTag::ChaoticOther, 0};
    }
    if (l1 > -eps_zero && l2 < -eps_pos) return {AttractorTag::InvariantCurveLike, 0};
    return {AttractorTag::Undetermined, 0};
}

State3 default_seed(const Henon3DParams& p) {
    const auto fps = henon_fixed_points(p);
    if (fps.empty()) return State3::Zero();
    return fps.front() + State3(1e-3, 1e-3, 1e-3);
}

std::optional<PeriodicOrbit> detect_periodic_orbit(const Henon3DParams& p, const State3& s,
                                                   int q_max, double closure_tol,
                                                   double escape_radius) {
    State3 walk = s;
    int period = 0;
    for (int q = 1; q <= q_max; ++q) {
        walk = henon_step(walk, p);
        if (escaped(walk, escape_radius)) return std::nullopt;
        if ((walk - s).cwiseAbs().maxCoeff() < closure_tol) {
            period = q;
            break;
        }
    }
    if (period == 0) return std::nullopt;

    // Newton refinement of F^q(x) - x = 0
    State3 x = s;
    for (int it = 0; it < 50; ++it) {
        State3 y = x;
        Eigen::Matrix3d dq = Eigen::Matrix3d::Identity();
        for (int k = 0; k < period; ++k) {
            dq = henon_jacobian(y, p) * dq;
            y = henon_step(y, p);
        }
        const State3 residual = y - x;
        if (residual.cwiseAbs().maxCoeff() < 1e-13) break;
        Eigen::Matrix3d m = dq - Eigen::Matrix3d::Identity();
        x -= m.partialPivLu().solve(residual);
        if (escaped(x, escape_radius)) return std::nullopt;
    }

    PeriodicOrbit orbit;
    orbit.period = period;
    Eigen::Matrix3d dq = Eigen::Matrix3d::Identity();
    State3 y = x;
    for (int k = 0; k < period; ++k) {
        orbit.points.push_back(y);
        dq = henon_jacobian(y, p) * dq;
        y = henon_step(y, p);
    }
    Eigen::EigenSolver<Eigen::Matrix3d> es(dq);
    orbit.mults = {es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
    std::sort(orbit.mults.begin(), orbit.mults.end(),
              [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
    return orbit;
}

AttractorReport classify_dynamics(const Henon3DParams& p, const State3& s0,
                                  const ClassifyBudget& budget) {
    AttractorReport report;
    State3 s = s0;
    for (long t = 0; t < budget.transient; ++t) {
        s = henon_step(s, p);
        if (escaped(s, budget.escape_radius)) {
            report.cls = {AttractorTag::DivergedToInfinity, 0};
            report.escape_iterate = t;
            report.final_state = s;
            return report;
        }
    }
    report.final_state = s;

    if (auto orbit = detect_periodic_orbit(p, s, budget.q_max, budget.closure_tol,
                                           budget.escape_radius)) {
        report.cls = {AttractorTag::PeriodicSink, orbit->period};
        return report;
    }

    try {
        auto spec = lyapunov_spectrum(p, s, 0, budget.measure, budget.escape_radius);
        report.spectrum = spec;
        report.cls = classify_from_spectrum(spec.exponents, budget.eps_pos, budget.eps_zero);
    } catch (const orbit_escape_error& e) {
        report.cls = {AttractorTag::DivergedToInfinity, 0};
        report.escape_iterate = budget.transient + e.at_iterate();
    }
    return report;
}

} // namespace lorenz
