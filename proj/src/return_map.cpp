#include "lorenz/return_map.hpp"

#include <cmath>
#include <sstream>

namespace lorenz {

namespace {

constexpr double kContractionMargin = 0.1;

double pow_int(double base, long k) { return std::pow(base, double(k)); }

// delta^T Q delta
double qform(const Eigen::Matrix3d& q, const Eigen::Vector3d& d) { return d.dot(q * d); }
// exact difference: q(b + d) - q(b) = d . Q (2b + d)  (Q symmetric)
double qform_diff(const Eigen::Matrix3d& q, const Eigen::Vector3d& b,
                  const Eigen::Vector3d& d) {
    return d.dot(q * (2.0 * b + d));
}
// gradient of the quadratic form at delta
Eigen::Vector3d qgrad(const Eigen::Matrix3d& q, const Eigen::Vector3d& d) {
    return 2.0 * (q * d);
}

void check_chart(const char* stage, const char* chart, double r, double a, double b,
                 double c) {
    if (std::max({std::abs(a), std::abs(b), std::abs(c)}) > r ||
        !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        std::ostringstream os;
        os << "left chart " << chart;
        throw chart_exit_error(stage, os.str());
    }
}

} // namespace

std::pair<int, int> min_return_index(const HeteroModel& m) {
    const double r = m.numerics().chart_radius;
    const auto& t12 = m.t12();
    const auto& t21 = m.t21();
    const double g1 = m.saddle1().expanding, l1 = m.saddle1().contracting1;
    const double g2 = m.saddle2().expanding, n1 = m.saddle2().contracting1;

    const double xmax = t21.base_out.cwiseAbs().maxCoeff() + r;
    const double umax = t12.base_out.cwiseAbs().maxCoeff() + r;

    int i0 = 1;
    while (std::pow(g1, -double(i0)) * (std::abs(t12.base_in) + r) > r ||
           std::pow(l1, double(i0)) * xmax > kContractionMargin * r)
        ++i0;
    int j0 = 1;
    while (std::pow(g2, -double(j0)) * (std::abs(t21.base_in) + r) > r ||
           std::pow(n1, double(j0)) * umax > kContractionMargin * r)
        ++j0;
    return {i0, j0};
}

AdmissibleWindow admissible_window(const HeteroModel& m, ReturnIndex idx) {
    const auto [i0, j0] = min_return_index(m);
    if (idx.i < i0 || idx.j < j0)
        throw validation_error("index too small for chart radii (i0=" + std::to_string(i0) +
                               ", j0=" + std::to_string(j0) + ")");
    const double r = m.numerics().chart_radius;
    const double g1i = pow_int(m.saddle1().expanding, -idx.i);
    const double g2j = pow_int(m.saddle2().expanding, -idx.j);
    const double ym = m.t12().base_in, vm = m.t21().base_in;

    AdmissibleWindow w;
    w.y_interval.lo = std::max(g1i * (ym - r), -r);
    w.y_interval.hi = std::min(g1i * (ym + r), r);
    w.v_interval.lo = std::max(g2j * (vm - r), -r);
    w.v_interval.hi = std::min(g2j * (vm + r), r);
    w.x_box[0] = {m.t21().base_out[0] - r, m.t21().base_out[0] + r};
    w.x_box[1] = {m.t21().base_out[1] - r, m.t21().base_out[1] + r};
    if (w.y_interval.empty() || w.v_interval.empty())
        throw validation_error("admissible window empty at (i,j)=(" + std::to_string(idx.i) +
                               "," + std::to_string(idx.j) + ")");
    return w;
}

Eigen::Vector3d compose(const HeteroModel& m, ReturnIndex idx, const Eigen::Vector3d& p) {
    const double r = m.numerics().chart_radius;
    const auto& t12 = m.t12();
    const auto& t21 = m.t21();

    // input in Pi1^+
    check_chart("T01^i", "Pi1^+", r, p[0] - t21.base_out[0], p[1] - t21.base_out[1], p[2]);

    const Eigen::Vector3d p1 = local_iterate_o1(m, idx.i, p);
    check_chart("T01^i", "Pi1^-", r, p1[0], p1[1], p1[2] - t12.base_in);

    const Eigen::Vector3d p2 = apply_t12(m, p1);
    check_chart("T12", "Pi2^+", r, p2[0] - t12.base_out[0], p2[1] - t12.base_out[1], p2[2]);

    const Eigen::Vector3d p3 = local_iterate_o2(m, idx.j, p2);
    check_chart("T02^j", "Pi2^-", r, p3[0], p3[1], p3[2] - t21.base_in);

    const Eigen::Vector3d p4 = apply_t21(m, p3);
    check_chart("T21", "Pi1^+", r, p4[0] - t21.base_out[0], p4[1] - t21.base_out[1], p4[2]);
    return p4;
}

Eigen::Matrix3d return_jacobian(const HeteroModel& m, ReturnIndex idx,
                                const Eigen::Vector3d& p) {
    const auto& t12 = m.t12();
    const auto& t21 = m.t21();

    const Eigen::Vector3d p1 = local_iterate_o1(m, idx.i, p);
    const Eigen::Vector3d p2 = apply_t12(m, p1);
    const Eigen::Vector3d p3 = local_iterate_o2(m, idx.j, p2);

    Eigen::Matrix3d d01 = Eigen::Vector3d(pow_int(m.saddle1().contracting1, idx.i),
                                          pow_int(m.saddle1().contracting2, idx.i),
                                          pow_int(m.saddle1().expanding, idx.i))
                              .asDiagonal();
    Eigen::Matrix3d d02 = Eigen::Vector3d(pow_int(m.saddle2().contracting1, idx.j),
                                          pow_int(m.saddle2().contracting2, idx.j),
                                          pow_int(m.saddle2().expanding, idx.j))
                              .asDiagonal();

    Eigen::Matrix3d d12;
    d12 << t12.A(0, 0), t12.A(0, 1), t12.b[0],
           t12.A(1, 0), t12.A(1, 1), t12.b[1],
           t12.c[0], t12.c[1], t12.d;
    const Eigen::Vector3d delta1(p1[0], p1[1], p1[2] - t12.base_in);
    if (t12.quad.any())
        for (int k = 0; k < 3; ++k) d12.row(k) += qgrad(t12.quad.q[k], delta1).transpose();

    const double dv = p3[2] - t21.base_in;
    Eigen::Matrix3d d21;
    d21 << t21.A(0, 0), t21.A(0, 1), t21.b[0],
           t21.A(1, 0), t21.A(1, 1), t21.b[1],
           t21.c[0], t21.c[1], 2.0 * t21.d * dv;
    const Eigen::Vector3d delta3(p3[0], p3[1], dv);
    if (t21.quad.any())
        for (int k = 0; k < 3; ++k) d21.row(k) += qgrad(t21.quad.q[k], delta3).transpose();

    return d21 * d02 * d12 * d01;
}

// ---------------------------------------------------------------------------

ReturnMapFrame::ReturnMapFrame(const HeteroModel& m, ReturnIndex idx) : m_(&m), idx_(idx) {
    li_ = Vec2(pow_int(m.saddle1().contracting1, idx.i),
               pow_int(m.saddle1().contracting2, idx.i));
    nj_ = Vec2(pow_int(m.saddle2().contracting1, idx.j),
               pow_int(m.saddle2().contracting2, idx.j));
    g1_ = pow_int(m.saddle1().expanding, idx.i);
    g2_ = pow_int(m.saddle2().expanding, idx.j);
    base_ = WindowVec(m.t21().base_out, m.t21().base_in / g2_);
}

double ReturnMapFrame::solve_dy_base(const Vec2& X, double w) const {
    const auto& t = m_->t12();
    double dy = (w - t.c.dot(X)) / t.d;
    if (!t.quad.any()) return dy;
    for (int it = 0; it < 60; ++it) {
        const Eigen::Vector3d delta(X[0], X[1], dy);
        const double f = t.c.dot(X) + t.d * dy + qform(t.quad.q[2], delta) - w;
        if (std::abs(f) < 1e-15 * std::max(1.0, std::abs(w))) break;
        const double df = t.d + qgrad(t.quad.q[2], delta)[2];
        dy -= f / df;
    }
    return dy;
}

double ReturnMapFrame::solve_dy_dev(const Vec2& Xb, double dyb, const Vec2& Xd,
                                    double dw) const {
    const auto& t = m_->t12();
    double dyd = (dw - t.c.dot(Xd)) / t.d;
    if (!t.quad.any()) return dyd;
    const Eigen::Vector3d db(Xb[0], Xb[1], dyb);
    for (int it = 0; it < 60; ++it) {
        const Eigen::Vector3d dd(Xd[0], Xd[1], dyd);
        const double f = t.c.dot(Xd) + t.d * dyd + qform_diff(t.quad.q[2], db, dd) - dw;
        const double scale = std::max(std::abs(dw), 1e-300);
        if (std::abs(f) < 1e-14 * scale) break;
        const double df = t.d + qgrad(t.quad.q[2], db + dd)[2];
        dyd -= f / df;
    }
    return dyd;
}

Eigen::Vector3d ReturnMapFrame::to_state(const WindowVec& dev) const {
    const Vec2 x = base_.x + dev.x;
    const Vec2 Xb = li_.cwiseProduct(base_.x);
    const Vec2 Xd = li_.cwiseProduct(dev.x);
    const double dyb = solve_dy_base(Xb, base_.w);
    const double dyd = solve_dy_dev(Xb, dyb, Xd, dev.w);
    const double y = (m_->t12().base_in + dyb + dyd) / g1_;
    return {x[0], x[1], y};
}

WindowVec ReturnMapFrame::from_state(const Eigen::Vector3d& p) const {
    const auto& t = m_->t12();
    const Vec2 X = li_.cwiseProduct(Vec2(p[0], p[1]));
    const double dy = g1_ * p[2] - t.base_in;
    const Eigen::Vector3d delta(X[0], X[1], dy);
    double w = t.c.dot(X) + t.d * dy;
    if (t.quad.any()) w += qform(t.quad.q[2], delta);
    return WindowVec(Vec2(p[0], p[1]) - base_.x, w - base_.w);
}

WindowVec ReturnMapFrame::map(const WindowVec& dev) const {
    const auto& t12 = m_->t12();
    const auto& t21 = m_->t21();
    const double r = m_->numerics().chart_radius;

    // stage T01^i (in window coordinates the y-part is the chart solve)
    const Vec2 Xb = li_.cwiseProduct(base_.x);
    const Vec2 Xd = li_.cwiseProduct(dev.x);
    const double dyb = solve_dy_base(Xb, base_.w);
    const double dyd = solve_dy_dev(Xb, dyb, Xd, dev.w);
    check_chart("T01^i", "Pi1^+", r, base_.x[0] + dev.x[0] - t21.base_out[0],
                base_.x[1] + dev.x[1] - t21.base_out[1],
                (t12.base_in + dyb + dyd) / g1_);
    check_chart("T01^i", "Pi1^-", r, Xb[0] + Xd[0], Xb[1] + Xd[1], dyb + dyd);

    // stage T12 (deviation form)
    const Eigen::Vector3d d1b(Xb[0], Xb[1], dyb);
    const Eigen::Vector3d d1d(Xd[0], Xd[1], dyd);
    Vec2 ub = t12.base_out + t12.A * Xb + t12.b * dyb;
    Vec2 ud = t12.A * Xd + t12.b * dyd;
    if (t12.quad.any()) {
        ub += Vec2(qform(t12.quad.q[0], d1b), qform(t12.quad.q[1], d1b));
        ud += Vec2(qform_diff(t12.quad.q[0], d1b, d1d), qform_diff(t12.quad.q[1], d1b, d1d));
    }
    check_chart("T12", "Pi2^+", r, ub[0] + ud[0] - t12.base_out[0],
                ub[1] + ud[1] - t12.base_out[1], base_.w + dev.w);

    // stage T02^j
    const Vec2 Ub = nj_.cwiseProduct(ub);
    const Vec2 Ud = nj_.cwiseProduct(ud);
    const double dvb = g2_ * base_.w - t21.base_in;
    const double dvd = g2_ * dev.w;
    check_chart("T02^j", "Pi2^-", r, Ub[0] + Ud[0], Ub[1] + Ud[1], dvb + dvd);

    // stage T21 (deviation form; ybar quadratic handled exactly)
    const Eigen::Vector3d d2b(Ub[0], Ub[1], dvb);
    const Eigen::Vector3d d2d(Ud[0], Ud[1], dvd);
    Vec2 xbb = t21.base_out + t21.A * Ub + t21.b * dvb;
    Vec2 xbd = t21.A * Ud + t21.b * dvd;
    double ybb = t21.y_plus + t21.c.dot(Ub) + t21.d * dvb * dvb;
    double ybd = t21.c.dot(Ud) + t21.d * (2.0 * dvb * dvd + dvd * dvd);
    if (t21.quad.any()) {
        xbb += Vec2(qform(t21.quad.q[0], d2b), qform(t21.quad.q[1], d2b));
        xbd += Vec2(qform_diff(t21.quad.q[0], d2b, d2d), qform_diff(t21.quad.q[1], d2b, d2d));
        ybb += qform(t21.quad.q[2], d2b);
        ybd += qform_diff(t21.quad.q[2], d2b, d2d);
    }
    check_chart("T21", "Pi1^+", r, xbb[0] + xbd[0] - t21.base_out[0],
                xbb[1] + xbd[1] - t21.base_out[1], ybb + ybd);

    // window-coordinate readout of the image: next-round intermediate v
    const Vec2 Xob = li_.cwiseProduct(xbb);
    const Vec2 Xod = li_.cwiseProduct(xbd);
    const double dyob = g1_ * ybb - t12.base_in;
    const double dyod = g1_ * ybd;
    const Eigen::Vector3d d3b(Xob[0], Xob[1], dyob);
    const Eigen::Vector3d d3d(Xod[0], Xod[1], dyod);
    double wob = t12.c.dot(Xob) + t12.d * dyob;
    double wod = t12.c.dot(Xod) + t12.d * dyod;
    if (t12.quad.any()) {
        wob += qform(t12.quad.q[2], d3b);
        wod += qform_diff(t12.quad.q[2], d3b, d3d);
    }

    // fold the base drift into the deviation (base stays fixed)
    WindowVec out;
    out.x = (xbb - base_.x) + xbd;
    out.w = (wob - base_.w) + wod;
    return out;
}

Eigen::Matrix3d ReturnMapFrame::jacobian(const WindowVec& dev) const {
    const auto& t12 = m_->t12();
    const auto& t21 = m_->t21();

    // evaluation point pieces (base + dev)
    const Vec2 Xb = li_.cwiseProduct(base_.x);
    const Vec2 Xd = li_.cwiseProduct(dev.x);
    const double dyb = solve_dy_base(Xb, base_.w);
    const double dyd = solve_dy_dev(Xb, dyb, Xd, dev.w);
    const Eigen::Vector3d d1(Xb[0] + Xd[0], Xb[1] + Xd[1], dyb + dyd);

    // d(X, dy)/d(x1, x2, w): X rows are li-diagonal; dy solves the chart.
    Eigen::Vector3d cv(t12.c[0], t12.c[1], 0.0);
    double dv_dy = t12.d;
    if (t12.quad.any()) {
        const Eigen::Vector3d g = qgrad(t12.quad.q[2], d1);
        cv[0] += g[0];
        cv[1] += g[1];
        dv_dy += g[2];
    }
    Eigen::Matrix3d j1 = Eigen::Matrix3d::Zero(); // rows: X1, X2, dy
    j1(0, 0) = li_[0];
    j1(1, 1) = li_[1];
    j1.row(2) << -cv[0] * li_[0] / dv_dy, -cv[1] * li_[1] / dv_dy, 1.0 / dv_dy;

    // T12 u-rows on (X1, X2, dy)
    Eigen::Matrix<double, 2, 3> j12u;
    j12u << t12.A(0, 0), t12.A(0, 1), t12.b[0],
            t12.A(1, 0), t12.A(1, 1), t12.b[1];
    if (t12.quad.any()) {
        j12u.row(0) += qgrad(t12.quad.q[0], d1).transpose();
        j12u.row(1) += qgrad(t12.quad.q[1], d1).transpose();
    }
    // d(U1, U2, dv)/d(x1, x2, w)
    Eigen::Matrix3d j2;
    j2.topRows<2>() = nj_.asDiagonal() * (j12u * j1);
    j2.row(2) << 0.0, 0.0, g2_;

    // T21 at the arrival point
    const Vec2 ub = t12.base_out + t12.A * Xb + t12.b * dyb;
    Vec2 u_all = ub + t12.A * Xd + t12.b * dyd;
    if (t12.quad.any()) {
        const Eigen::Vector3d d1b(Xb[0], Xb[1], dyb);
        const Eigen::Vector3d d1d(Xd[0], Xd[1], dyd);
        u_all += Vec2(qform(t12.quad.q[0], d1b) + qform_diff(t12.quad.q[0], d1b, d1d),
                      qform(t12.quad.q[1], d1b) + qform_diff(t12.quad.q[1], d1b, d1d));
    }
    const Vec2 U = nj_.cwiseProduct(u_all);
    const double dv = g2_ * (base_.w + dev.w) - t21.base_in;
    const Eigen::Vector3d d2(U[0], U[1], dv);

    Eigen::Matrix3d j21; // rows: xbar1, xbar2, ybar on (U1, U2, dv)
    j21 << t21.A(0, 0), t21.A(0, 1), t21.b[0],
           t21.A(1, 0), t21.A(1, 1), t21.b[1],
           t21.c[0], t21.c[1], 2.0 * t21.d * dv;
    if (t21.quad.any())
        for (int k = 0; k < 3; ++k) j21.row(k) += qgrad(t21.quad.q[k], d2).transpose();
    const Eigen::Matrix3d j3 = j21 * j2; // d(xbar, ybar)/d(x1, x2, w)

    // readout: wbar = v-chart of (li * xbar, g1 ybar - y^-)
    const Vec2 xbar = t21.base_out + t21.A * U + t21.b * dv +
                      (t21.quad.any()
                           ? Vec2(qform(t21.quad.q[0], d2), qform(t21.quad.q[1], d2))
                           : Vec2::Zero());
    const double ybar = t21.y_plus + t21.c.dot(U) + t21.d * dv * dv +
                        (t21.quad.any() ? qform(t21.quad.q[2], d2) : 0.0);
    const Eigen::Vector3d d3(li_[0] * xbar[0], li_[1] * xbar[1], g1_ * ybar - t12.base_in);
    Eigen::Vector3d cv3(t12.c[0], t12.c[1], 0.0);
    double dv3 = t12.d;
    if (t12.quad.any()) {
        const Eigen::Vector3d g = qgrad(t12.quad.q[2], d3);
        cv3[0] += g[0];
        cv3[1] += g[1];
        dv3 += g[2];
    }
    Eigen::Matrix3d out;
    out.row(0) = j3.row(0);
    out.row(1) = j3.row(1);
    out.row(2) = (cv3[0] * li_[0]) * j3.row(0) + (cv3[1] * li_[1]) * j3.row(1) +
                 (dv3 * g1_) * j3.row(2);
    return out;
}

std::optional<SingleRoundFixedPoint> find_single_round_fixed_point(
    const ReturnMapFrame& frame) {
    const auto& num = frame.model().numerics();
    WindowVec dev; // window center
    double prev_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < num.newton_max_iter; ++it) {
        WindowVec image;
        try {
            image = frame.map(dev);
        } catch (const chart_exit_error&) {
            return std::nullopt;
        }
        const Eigen::Vector3d f = (image - dev).vec();
        const double res = f.cwiseAbs().maxCoeff();
        if (res < num.newton_tol) {
            SingleRoundFixedPoint out;
            out.dev = dev;
            out.state = frame.to_state(dev);
            out.iterations = it;
            return out;
        }
        Eigen::Matrix3d jm = frame.jacobian(dev) - Eigen::Matrix3d::Identity();
        Eigen::Vector3d step = jm.partialPivLu().solve(f);
        const double damp = (res >= prev_res) ? 0.5 : 1.0;
        dev = dev - WindowVec::from(damp * step);
        prev_res = res;
    }
    return std::nullopt;
}

} // namespace lorenz
