#include "lorenz/rescaling.hpp"

#include <cmath>
#include <sstream>

namespace lorenz {

namespace {

double pow_int(double base, long k) { return std::pow(base, double(k)); }

struct Powers {
    double li1, li2, g1, nj1, nj2, g2;
};

Powers powers(const HeteroModel& m, ReturnIndex idx) {
    return {pow_int(m.saddle1().contracting1, idx.i), pow_int(m.saddle1().contracting2, idx.i),
            pow_int(m.saddle1().expanding, idx.i),   pow_int(m.saddle2().contracting1, idx.j),
            pow_int(m.saddle2().contracting2, idx.j), pow_int(m.saddle2().expanding, idx.j)};
}

} // namespace

ScaleSet scale_factors(const HeteroModel& m, ReturnIndex idx) {
    const auto pw = powers(m, idx);
    const double d1 = m.t12().d, d2 = m.t21().d;
    const double dd = d1 * d2;

    ScaleSet s;
    s.sw = -1.0 / (pw.g1 * pw.g2 * pw.g2 * dd);
    switch (m.case_tag()) {
        case CaseTag::I: {
            const double c12 = m.t21().c[0];
            const double a11c = a11_combination(m.t12());
            if (c12 == 0.0 || a11c == 0.0)
                throw validation_error("scale_factors: degenerate Case I coefficient");
            s.s1 = 1.0 / (pw.li1 * pw.g1 * pw.g1 * pw.nj1 * pw.g2 * pw.g2 * c12 * a11c * d1 *
                          d1 * d2);
            s.s2 = -m.t21().b[1] / (pw.g1 * pw.g2 * dd);
            s.shear = 0.0;
            break;
        }
        case CaseTag::II: {
            const double b12 = m.t21().b[0];
            if (b12 == 0.0) throw validation_error("scale_factors: b1^(2) = 0 in Case II");
            const double a11c = a11_combination(m.t12());
            const double a21c = m.t21().A(1, 0) - (m.t21().b[1] / b12) * m.t21().A(0, 0);
            if (a11c == 0.0 || a21c == 0.0)
                throw validation_error("scale_factors: degenerate Case II coefficient");
            s.s1 = -b12 / (pw.g1 * pw.g2 * dd);
            s.s2 = -b12 * a11c * a21c * pw.li1 * pw.nj1 / (pw.g1 * pw.g2 * dd);
            s.shear = m.t21().b[1] / b12;
            break;
        }
        case CaseTag::III: {
            const double b12 = m.t21().b[0];
            if (b12 == 0.0) throw validation_error("scale_factors: b1^(2) = 0 in Case III");
            s.s1 = -b12 / (pw.g1 * pw.g2 * dd);
            s.shear = m.t21().b[1] / b12;
            // rho_ij^6 route: sigma2 is the measured x1 -> xt2bar coefficient
            // of the composed map at the window center, times sigma1. The
            // input direction holds the sheared coordinate fixed.
            ReturnMapFrame frame(m, idx);
            const Eigen::Matrix3d jw = frame.jacobian(WindowVec{});
            const Eigen::Vector3d dir(1.0, s.shear, 0.0);
            const Eigen::Vector3d col = jw * dir;
            const double coeff = col[1] - s.shear * col[0];
            if (coeff == 0.0)
                throw validation_error("scale_factors: measured rho_ij^6 vanishes in Case III");
            s.s2 = coeff * s.s1;
            break;
        }
    }
    if (s.s1 == 0.0 || s.s2 == 0.0 || s.sw == 0.0)
        throw validation_error("scale_factors: zero scale factor");
    return s;
}

Eigen::Vector3d limit_map(CaseTag c, const RescaledParams& p, const Eigen::Vector3d& X) {
    if (c == CaseTag::I)
        return {-p.bij * X[1] + p.m2 * X[2], X[2], p.m1 - X[0] - X[2] * X[2]};
    return {X[2], X[0], p.m1 + p.m2 * X[0] + p.bij * X[1] - X[2] * X[2]};
}

Eigen::Vector3d CaseIChange::to_henon(const Eigen::Vector3d& X) const {
    return {(X[0] - m2 * X[1]) / (-j), X[1], X[2]};
}

Eigen::Vector3d CaseIChange::from_henon(const Eigen::Vector3d& s) const {
    return {m2 * s[1] - j * s[0], s[1], s[2]};
}

CaseIChange caseI_to_henon(const RescaledParams& p) {
    if (p.bij == 0.0) throw validation_error("caseI_to_henon: singular change, J_ij = 0");
    CaseIChange ch;
    ch.j = p.bij;
    ch.m2 = p.m2;
    ch.henon = Henon3DParams{p.m1, -p.m2, p.bij};
    return ch;
}

RescaledParams params_forward(const HeteroModel& m, ReturnIndex idx) {
    const auto pw = powers(m, idx);
    const double d1 = m.t12().d, d2 = m.t21().d;
    auto [j1, j2] = jacobians(m);
    auto [j12, j21] = global_determinants(m);

    RescaledParams out;
    const double c12_eff = m.t21().c[0];
    const double bracket = m.mu().mu1 + pw.nj1 * c12_eff * m.t12().base_out[0] -
                           m.t12().base_in / pw.g1;
    out.m1 = -d1 * d1 * d2 * pw.g1 * pw.g1 * pw.g2 * pw.g2 * bracket;
    switch (m.case_tag()) {
        case CaseTag::I:
            out.m2 = m.t21().b[0] * m.t21().c[0] * a11_combination(m.t12()) * pw.li1 * pw.g1 *
                     pw.nj1 * pw.g2;
            break;
        case CaseTag::II:
            out.m2 = m.t21().c[0] * m.t21().b[0] * a11_combination(m.t12()) * pw.li1 * pw.nj1 *
                     pw.g1 * pw.g2;
            break;
        case CaseTag::III:
            out.m2 = a11_combination(m.t12()) * m.t21().b[0] * m.t21().c[0] * pw.li1 * pw.nj1 *
                     pw.g1 * pw.g2;
            break;
    }
    out.bij = j12 * j21 * pow_int(j1, idx.i) * pow_int(j2, idx.j);
    return out;
}

MuVector params_invert(const ModelConfig& config, ReturnIndex idx,
                       const RescaledParams& target) {
    if (!(target.bij > 0.0))
        throw validation_error("params_invert: target Jacobian must be positive");

    MuVector mu;
    double mu2 = 0.0, mu3 = 0.0;
    for (int it = 0; it < 64; ++it) {
        const HeteroModel trial(config, MuVector{0.0, mu2, 0.0});
        auto [j12, j21] = global_determinants(trial);
        auto [j1, j2] = jacobians(trial);
        const double ratio = target.bij / (j12 * j21 * pow_int(j1, idx.i));
        if (!(ratio > 0.0))
            throw validation_error(
                "params_invert: index pair incompatible with target Jacobian (sign)");
        const double j2_needed = std::pow(ratio, 1.0 / double(idx.j));
        if (!(j2_needed > 1.0))
            throw validation_error(
                "params_invert: index pair incompatible with target Jacobian (J2 <= 1)");
        mu3 = S_functional(j1, j2_needed) - trial.base_S0();

        const HeteroModel trial3(config, MuVector{0.0, mu2, mu3});
        const auto pw = powers(trial3, idx);
        const double a11c = a11_combination(config.t12);
        double mu2_next = 0.0;
        switch (config.case_tag) {
            case CaseTag::I:
                mu2_next = target.m2 /
                           (config.t21.c[0] * a11c * pw.li1 * pw.g1 * pw.nj1 * pw.g2);
                break;
            case CaseTag::II:
                mu2_next = target.m2 /
                           (config.t21.b[0] * a11c * pw.li1 * pw.nj1 * pw.g1 * pw.g2);
                break;
            case CaseTag::III:
                mu2_next = target.m2 /
                           (config.t21.b[0] * config.t21.c[0] * pw.li1 * pw.nj1 * pw.g1 * pw.g2);
                break;
        }
        if (std::abs(mu2_next - mu2) <= 1e-15 * std::max(1.0, std::abs(mu2_next))) {
            mu2 = mu2_next;
            break;
        }
        mu2 = mu2_next;
    }

    if (std::abs(mu3) > 0.2)
        throw validation_error("params_invert: index pair incompatible with target Jacobian "
                               "(|mu3| = " + std::to_string(std::abs(mu3)) + " > 0.2)");
    if (std::abs(mu2) > 0.1)
        throw validation_error("params_invert: |mu2| = " + std::to_string(std::abs(mu2)) +
                               " > 0.1; index too small for this M2 target");

    const HeteroModel final3(config, MuVector{0.0, mu2, mu3});
    const auto pw = powers(final3, idx);
    const double d1 = config.t12.d, d2 = config.t21.d;
    const double c12_eff = final3.t21().c[0];
    const double bracket = target.m1 / (-d1 * d1 * d2 * pw.g1 * pw.g1 * pw.g2 * pw.g2);
    mu.mu1 = bracket - pw.nj1 * c12_eff * config.t12.base_out[0] + config.t12.base_in / pw.g1;
    mu.mu2 = mu2;
    mu.mu3 = mu3;
    if (std::abs(mu.mu1) > 0.1)
        throw validation_error("params_invert: |mu1| = " + std::to_string(std::abs(mu.mu1)) +
                               " > 0.1; index too small for this target");
    return mu;
}

// ---------------------------------------------------------------------------

RescaledFrame::RescaledFrame(const HeteroModel& m, ReturnIndex idx)
    : frame_(m, idx), scales_(scale_factors(m, idx)) {}

WindowVec RescaledFrame::to_window(const Eigen::Vector3d& X) const {
    const auto& s = scales_;
    const double dx1 = s.s1 * (s.offsets[0] + X[0]);
    const double dxt2 = s.s2 * (s.offsets[1] + X[1]);
    const double dw = s.sw * (s.offsets[2] + X[2]);
    return WindowVec(Vec2(dx1, dxt2 + s.shear * dx1), dw);
}

Eigen::Vector3d RescaledFrame::from_window(const WindowVec& dev) const {
    const auto& s = scales_;
    const double dxt2 = dev.x[1] - s.shear * dev.x[0];
    return {dev.x[0] / s.s1 - s.offsets[0], dxt2 / s.s2 - s.offsets[1],
            dev.w / s.sw - s.offsets[2]};
}

Eigen::Vector3d RescaledFrame::map(const Eigen::Vector3d& X) const {
    return from_window(frame_.map(to_window(X)));
}

Eigen::Matrix3d RescaledFrame::jacobian(const Eigen::Vector3d& X) const {
    const Eigen::Matrix3d jw = frame_.jacobian(to_window(X));
    const auto& s = scales_;
    Eigen::Matrix3d sh = Eigen::Matrix3d::Identity();   // (dx1,dx2,dw)->(dx1,dxt2,dw)
    sh(1, 0) = -s.shear;
    Eigen::Matrix3d shinv = Eigen::Matrix3d::Identity();
    shinv(1, 0) = s.shear;
    const Eigen::Matrix3d sm = Eigen::Vector3d(s.s1, s.s2, s.sw).asDiagonal();
    const Eigen::Matrix3d sminv =
        Eigen::Vector3d(1.0 / s.s1, 1.0 / s.s2, 1.0 / s.sw).asDiagonal();
    return sminv * sh * jw * shinv * sm;
}

Eigen::Vector3d RescaledFrame::conditions() const {
    const Eigen::Vector3d r0 = map(Eigen::Vector3d::Zero());
    const Eigen::Matrix3d j0 = jacobian(Eigen::Vector3d::Zero());
    return {r0[0], r0[1], j0(2, 2)};
}

void RescaledFrame::normalize() {
    const double tol = frame_.model().numerics().shift_tol;
    for (int round = 0; round < 4; ++round) {
        bool converged = false;
        for (int it = 0; it < 80; ++it) {
            const Eigen::Vector3d f = conditions();
            if (f.cwiseAbs().maxCoeff() < tol) {
                converged = true;
                break;
            }
            // exact gradients: offsets act as R(X + off) - off, so the rows of
            // d(conditions)/d(offsets) are (JR - I) rows for the constants and
            // the Y-row second derivative for the linear-Y condition (the map
            // is polynomial; probe at h = 1/2 is exact for quadratics).
            const Eigen::Matrix3d j0 = jacobian(Eigen::Vector3d::Zero());
            Eigen::Matrix3d jm;
            jm.row(0) = j0.row(0) - Eigen::RowVector3d(1, 0, 0);
            jm.row(1) = j0.row(1) - Eigen::RowVector3d(0, 1, 0);
            const double h = 0.5;
            for (int k = 0; k < 3; ++k) {
                Eigen::Vector3d e = Eigen::Vector3d::Zero();
                e[k] = h;
                jm(2, k) = (jacobian(e)(2, 2) - j0(2, 2)) / h;
            }
            scales_.offsets -= jm.partialPivLu().solve(f);
        }
        if (!converged)
            throw numeric_error("rescaling shift solve did not converge");
        if (scales_.offsets.cwiseAbs().maxCoeff() < 1e3) return;
        // fold large offsets into the window base to keep the X resolution
        frame_.shift_base(to_window(Eigen::Vector3d::Zero()));
        scales_.offsets.setZero();
    }
}

RescaledParams RescaledFrame::measured_params() const {
    RescaledParams out;
    out.m1 = map(Eigen::Vector3d::Zero())[2];
    const Eigen::Matrix3d j0 = jacobian(Eigen::Vector3d::Zero());
    if (frame_.model().case_tag() == CaseTag::I) {
        out.m2 = j0(0, 2);
        out.bij = -j0(0, 1);
    } else {
        out.m2 = j0(2, 0);
        out.bij = j0(2, 1);
    }
    return out;
}

RefinedMu refine_mu(const ModelConfig& config, ReturnIndex idx, const MuVector& mu_formula,
                    const RescaledParams& target) {
    RefinedMu out;
    MuVector mu = mu_formula;
    for (int it = 0; it < 60; ++it) {
        const HeteroModel m(config, mu);
        RescaledFrame rf(m, idx);
        rf.normalize();
        const RescaledParams meas = rf.measured_params();
        out.measured = meas;
        out.iterations = it;
        const double e1 = meas.m1 - target.m1;
        const double e2 = meas.m2 - target.m2;
        if (std::abs(e1) <= 1e-9 * std::max(1.0, std::abs(target.m1)) &&
            std::abs(e2) <= 1e-9 * std::max(1.0, std::abs(target.m2))) {
            out.mu = mu;
            out.delta_mu1 = mu.mu1 - mu_formula.mu1;
            out.delta_mu2 = mu.mu2 - mu_formula.mu2;
            return out;
        }
        // formula derivatives are accurate enough for Newton
        const auto pw = powers(m, idx);
        const double d1 = config.t12.d, d2 = config.t21.d;
        const double dm1_dmu1 = -d1 * d1 * d2 * pw.g1 * pw.g1 * pw.g2 * pw.g2;
        const double a11c = a11_combination(config.t12);
        double dm2_dmu2 = 0.0, dm1_dmu2 = 0.0;
        switch (config.case_tag) {
            case CaseTag::I:
                dm2_dmu2 = config.t21.c[0] * a11c * pw.li1 * pw.g1 * pw.nj1 * pw.g2;
                break;
            case CaseTag::II:
                dm2_dmu2 = config.t21.b[0] * a11c * pw.li1 * pw.nj1 * pw.g1 * pw.g2;
                dm1_dmu2 = dm1_dmu1 * pw.nj1 * config.t12.base_out[0];
                break;
            case CaseTag::III:
                dm2_dmu2 = config.t21.b[0] * config.t21.c[0] * pw.li1 * pw.nj1 * pw.g1 * pw.g2;
                break;
        }
        mu.mu1 -= (e1 * dm2_dmu2 - e2 * dm1_dmu2) / (dm1_dmu1 * dm2_dmu2);
        mu.mu2 -= e2 / dm2_dmu2;
    }
    throw numeric_error("refine_mu: measured-parameter Newton did not converge");
}

ResidualReport residual_sup(const HeteroModel& m, ReturnIndex idx, double box_halfwidth,
                            int grid_n) {
    if (grid_n < 3) throw validation_error("residual_sup: grid_n must be at least 3");
    RescaledFrame rf(m, idx);
    rf.normalize();

    ResidualReport rep;
    rep.formula = params_forward(m, idx);
    const RescaledParams meas = rf.measured_params();
    rep.measured = RescaledParams{meas.m1, meas.m2, rep.formula.bij};
    rep.delta_m1 = meas.m1 - rep.formula.m1;
    rep.delta_m2 = meas.m2 - rep.formula.m2;

    const CaseTag c = m.case_tag();
    double sup = 0.0;
    for (int a = 0; a < grid_n; ++a) {
        for (int b = 0; b < grid_n; ++b) {
            for (int cidx = 0; cidx < grid_n; ++cidx) {
                const auto t = [&](int k) {
                    return -box_halfwidth + 2.0 * box_halfwidth * k / double(grid_n - 1);
                };
                const Eigen::Vector3d X(t(a), t(b), t(cidx));
                Eigen::Vector3d image;
                try {
                    image = rf.map(X);
                } catch (const chart_exit_error& e) {
                    std::ostringstream os;
                    os << "residual_sup: grid point (" << X[0] << ", " << X[1] << ", " << X[2]
                       << ") left the admissible window: " << e.what();
                    throw numeric_error(os.str());
                }
                const Eigen::Vector3d ref = limit_map(c, rep.measured, X);
                sup = std::max(sup, (image - ref).cwiseAbs().maxCoeff());
            }
        }
    }
    rep.sup = sup;
    return rep;
}

} // namespace lorenz
