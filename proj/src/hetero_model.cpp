#include "lorenz/hetero_model.hpp"

#include <cmath>
#include <sstream>

namespace lorenz {

namespace {

double det3_t12(const GlobalMapT12& t) {
    Eigen::Matrix3d m;
    m << t.A(0, 0), t.A(0, 1), t.b[0],
         t.A(1, 0), t.A(1, 1), t.b[1],
         t.c[0], t.c[1], t.d;
    return m.determinant();
}

double det3_t21(const GlobalMapT21& t) {
    Eigen::Matrix3d m;
    m << t.A(0, 0), t.A(0, 1), t.b[0],
         t.A(1, 0), t.A(1, 1), t.b[1],
         t.c[0], t.c[1], 0.0;
    return m.determinant();
}

void check_spectrum(const SaddleSpectrum& s, const char* which) {
    if (!(s.contracting2 > 0.0 && s.contracting2 < s.contracting1 &&
          s.contracting1 < 1.0 && 1.0 < s.expanding)) {
        std::ostringstream os;
        os << "condition A violated at " << which << ": need 0 < second < first < 1 < expanding, got ("
           << s.contracting1 << ", " << s.contracting2 << ", " << s.expanding << ")";
        throw validation_error(os.str());
    }
}

Eigen::Vector3d quad_eval(const QuadRecord& quad, const Eigen::Vector3d& delta) {
    if (!quad.any()) return Eigen::Vector3d::Zero();
    Eigen::Vector3d out;
    for (int k = 0; k < 3; ++k) out[k] = delta.dot(quad.q[k] * delta);
    return out;
}

} // namespace

const char* to_string(CaseTag t) {
    switch (t) {
        case CaseTag::I: return "CaseI";
        case CaseTag::II: return "CaseII";
        case CaseTag::III: return "CaseIII";
    }
    return "?";
}

double a11_combination(const GlobalMapT12& t12) {
    return t12.A(0, 0) - t12.b[0] * t12.c[0] / t12.d;
}

CaseTag classify_case(const ModelConfig& config) {
    const double tol = config.numerics.zero_tol;
    const auto& t21 = config.t21;
    const double b1 = t21.b[0], b2 = t21.b[1];
    const double c1 = t21.c[0], c2 = t21.c[1];
    const double a11c = a11_combination(config.t12);
    const auto zero = [tol](double v) { return std::abs(v) <= tol; };

    if (zero(b1) && !zero(b2) && !zero(c1) && !zero(a11c)) return CaseTag::I;
    if (!zero(b1) && zero(c1) && !zero(c2) && !zero(a11c)) return CaseTag::II;
    if (!zero(b1) && !zero(c1) && zero(a11c)) return CaseTag::III;
    throw validation_error("classify_case: not in Cases I-III");
}

double S_functional(double j1, double j2) {
    if (!(j1 > 0.0 && j1 < 1.0))
        throw validation_error("S_functional: J1 must lie in (0,1)");
    if (!(j2 > 1.0))
        throw validation_error("S_functional: J2 must exceed 1");
    return -std::log(j1) / std::log(j2);
}

HeteroModel::HeteroModel(const ModelConfig& config, const MuVector& mu)
    : config_(config), mu_(mu), saddle2_eff_(config.saddle2), t12_eff_(config.t12),
      t21_eff_(config.t21) {
    check_spectrum(config_.saddle1, "O1");
    check_spectrum(config_.saddle2, "O2");

    const double j1 = config_.saddle1.contracting1 * config_.saddle1.contracting2 *
                      config_.saddle1.expanding;
    const double j2_0 = config_.saddle2.contracting1 * config_.saddle2.contracting2 *
                        config_.saddle2.expanding;
    if (!(j1 < 1.0))
        throw validation_error("condition B violated: J1 = " + std::to_string(j1) + " >= 1");
    if (!(j2_0 > 1.0))
        throw validation_error("condition B violated: J2 = " + std::to_string(j2_0) + " <= 1");
    base_S0_ = S_functional(j1, j2_0);

    if (config_.t12.d == 0.0)
        throw validation_error("condition C violated: d^(1) = 0 (transversality of T12)");
    if (config_.t21.d == 0.0)
        throw validation_error("condition C violated: d^(2) = 0 (quadratic tangency of T21)");

    // condition D: the declared case must match the Eq. 12 pattern at mu = 0
    const CaseTag detected = classify_case(config_);
    if (detected != config_.case_tag) {
        std::ostringstream os;
        os << "condition D violated: config declares " << to_string(config_.case_tag)
           << " but Eq. 12 pattern gives " << to_string(detected);
        throw validation_error(os.str());
    }

    // apply mu1
    t21_eff_.y_plus = mu_.mu1;
    // apply mu2 to the case-designated coefficient
    switch (config_.case_tag) {
        case CaseTag::I: t21_eff_.b[0] = config_.t21.b[0] + mu_.mu2; break;
        case CaseTag::II: t21_eff_.c[0] = config_.t21.c[0] + mu_.mu2; break;
        case CaseTag::III: t12_eff_.A(0, 0) = config_.t12.A(0, 0) + mu_.mu2; break;
    }
    // apply mu3: scalar Newton on gamma2 so that S(f_mu) = S0 + mu3
    if (mu_.mu3 != 0.0) {
        const double target = base_S0_ + mu_.mu3;
        if (!(target > 0.0))
            throw validation_error("mu3 drives S nonpositive; unfolding out of range");
        const double nn = config_.saddle2.contracting1 * config_.saddle2.contracting2;
        double g2 = config_.saddle2.expanding;
        const double lnj1 = std::log(j1);
        bool converged = false;
        for (int it = 0; it < config_.numerics.mu3_max_iter; ++it) {
            const double lnj2 = std::log(nn * g2);
            const double f = -lnj1 / lnj2 - target;
            if (std::abs(f) < config_.numerics.mu3_tol) {
                converged = true;
                break;
            }
            const double dfdg2 = lnj1 / (lnj2 * lnj2 * g2);
            g2 -= f / dfdg2;
            if (!(g2 > 1.0 / nn)) g2 = (config_.saddle2.expanding + 1.0 / nn) / 2.0;
        }
        if (!converged)
            throw numeric_error("mu3 unfolding: gamma2 Newton did not converge");
        saddle2_eff_.expanding = g2;
        check_spectrum(saddle2_eff_, "O2 (after mu3)");
    }

    // Eq. 7 determinants of the effective maps
    const double j12 = det3_t12(t12_eff_);
    const double j21 = det3_t21(t21_eff_);
    if (j12 == 0.0) throw validation_error("Eq. 7 violated: J12 = 0");
    if (j21 == 0.0) throw validation_error("Eq. 7 violated: J21 = 0");

    // Case II consequence of Eq. 7 + Eq. 12: A21^(2) != 0
    if (config_.case_tag == CaseTag::II) {
        const double a21c =
            t21_eff_.A(1, 0) - (t21_eff_.b[1] / t21_eff_.b[0]) * t21_eff_.A(0, 0);
        if (std::abs(a21c) <= config_.numerics.zero_tol)
            throw validation_error("Eq. 7 violated: A21^(2) = 0 in Case II");
    }
}

HeteroModel build_model(const ModelConfig& config, const MuVector& mu) {
    return HeteroModel(config, mu);
}

std::pair<double, double> jacobians(const HeteroModel& m) {
    const auto& s1 = m.saddle1();
    const auto& s2 = m.saddle2();
    return {s1.contracting1 * s1.contracting2 * s1.expanding,
            s2.contracting1 * s2.contracting2 * s2.expanding};
}

double S_functional(const HeteroModel& m) {
    auto [j1, j2] = jacobians(m);
    return S_functional(j1, j2);
}

Eigen::Vector3d local_iterate_o1(const HeteroModel& m, long k, const Eigen::Vector3d& p) {
    const auto& s = m.saddle1();
    return {std::pow(s.contracting1, double(k)) * p[0],
            std::pow(s.contracting2, double(k)) * p[1],
            std::pow(s.expanding, double(k)) * p[2]};
}

Eigen::Vector3d local_iterate_o2(const HeteroModel& m, long k, const Eigen::Vector3d& p) {
    const auto& s = m.saddle2();
    return {std::pow(s.contracting1, double(k)) * p[0],
            std::pow(s.contracting2, double(k)) * p[1],
            std::pow(s.expanding, double(k)) * p[2]};
}

Eigen::Vector3d apply_t12(const HeteroModel& m, const Eigen::Vector3d& p) {
    const auto& t = m.t12();
    const double r = m.numerics().chart_radius;
    const Eigen::Vector3d delta(p[0], p[1], p[2] - t.base_in);
    if (std::max(std::abs(p[0]), std::abs(p[1])) > r || std::abs(delta[2]) > r)
        throw chart_exit_error("T12", "left chart Pi1^-");
    const Vec2 x(p[0], p[1]);
    const Vec2 u = t.base_out + t.A * x + t.b * delta[2];
    const double v = t.c.dot(x) + t.d * delta[2];
    const Eigen::Vector3d quad = quad_eval(t.quad, delta);
    return {u[0] + quad[0], u[1] + quad[1], v + quad[2]};
}

Eigen::Vector3d apply_t21(const HeteroModel& m, const Eigen::Vector3d& p) {
    const auto& t = m.t21();
    const double r = m.numerics().chart_radius;
    const Eigen::Vector3d delta(p[0], p[1], p[2] - t.base_in);
    if (std::max(std::abs(p[0]), std::abs(p[1])) > r || std::abs(delta[2]) > r)
        throw chart_exit_error("T21", "left chart Pi2^-");
    const Vec2 u(p[0], p[1]);
    const Vec2 xo = t.base_out + t.A * u + t.b * delta[2];
    const double y = t.y_plus + t.c.dot(u) + t.d * delta[2] * delta[2];
    const Eigen::Vector3d quad = quad_eval(t.quad, delta);
    return {xo[0] + quad[0], xo[1] + quad[1], y + quad[2]};
}

std::pair<double, double> global_determinants(const GlobalMapT12& t12,
                                              const GlobalMapT21& t21) {
    return {det3_t12(t12), det3_t21(t21)};
}

std::pair<double, double> global_determinants(const HeteroModel& m) {
    return global_determinants(m.t12(), m.t21());
}

} // namespace lorenz
