#pragma once

#include <optional>

#include "lorenz/hetero_model.hpp"

namespace lorenz {

// Local-iterate counts (i at O1, j at O2) of one return-map branch.
struct ReturnIndex {
    int i = 0;
    int j = 0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(lo <= hi); }
    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// The set of starting data completing one return for index (i, j):
// y in y_interval makes T01^i land in Pi1^-, the intermediate v in
// v_interval makes T02^j land in Pi2^-, x ranges over the Pi1^+ chart box.
struct AdmissibleWindow {
    Interval y_interval;
    Interval v_interval;
    std::array<Interval, 2> x_box;
};

// Smallest (i0, j0) for which windows are nonempty and the contracted
// x/u-parts stay inside the charts with a 10% margin. Computed from the
// configured chart radii.
std::pair<int, int> min_return_index(const HeteroModel& m);

// Throws validation_error("index too small for chart radii") below (i0, j0).
AdmissibleWindow admissible_window(const HeteroModel& m, ReturnIndex idx);

// T_ij = T21 . T02^j . T12 . T01^i on Pi1^+, every stage chart-checked.
// Throws chart_exit_error naming the stage (T01^i, T12, T02^j, T21).
Eigen::Vector3d compose(const HeteroModel& m, ReturnIndex idx, const Eigen::Vector3d& p);

// Chain-rule product of the four stage differentials at p.
Eigen::Matrix3d return_jacobian(const HeteroModel& m, ReturnIndex idx,
                                const Eigen::Vector3d& p);

// ---------------------------------------------------------------------------
// Window frame: the return map in window coordinates (x1, x2, w), where w is
// the intermediate Pi2^+ v-value of the point. States are kept as
// base + deviation; deviations are composed in exact difference arithmetic so
// window scales far below 1 ulp of the base stay resolved. This is the only
// numerically valid way to evaluate the map inside V_ij at large (i, j).

struct WindowVec {
    Vec2 x = Vec2::Zero();
    double w = 0.0;

    WindowVec() = default;
    WindowVec(const Vec2& x_, double w_) : x(x_), w(w_) {}
    WindowVec operator+(const WindowVec& o) const { return {x + o.x, w + o.w}; }
    WindowVec operator-(const WindowVec& o) const { return {x - o.x, w - o.w}; }
    Eigen::Vector3d vec() const { return {x[0], x[1], w}; }
    static WindowVec from(const Eigen::Vector3d& v) { return {Vec2(v[0], v[1]), v[2]}; }
};

class ReturnMapFrame {
public:
    // base defaults to the window center: x = x^+, w = gamma2^-j v^-
    // (the point whose Pi2^- arrival hits v^- exactly).
    ReturnMapFrame(const HeteroModel& m, ReturnIndex idx);

    const HeteroModel& model() const { return *m_; }
    ReturnIndex index() const { return idx_; }
    const WindowVec& base() const { return base_; }
    void shift_base(const WindowVec& dev) { base_ = base_ + dev; }

    // Pi1^+ state of base + dev (y solved from the w-chart relation).
    Eigen::Vector3d to_state(const WindowVec& dev) const;
    // window coordinates (relative to base) of a Pi1^+ state
    WindowVec from_state(const Eigen::Vector3d& p) const;

    // One application of T_ij in window coordinates; input and output are
    // deviations from the same base. Chart-checked; throws chart_exit_error.
    WindowVec map(const WindowVec& dev) const;

    // Exact chain-rule Jacobian of the deviation map at base + dev.
    Eigen::Matrix3d jacobian(const WindowVec& dev) const;

private:
    // solves the v-chart relation for the y-deviation:
    //   base:      c1 . X + d1 dy + quad_v(X, dy) = w
    //   deviation: the exact difference form of the same relation
    double solve_dy_base(const Vec2& X, double w) const;
    double solve_dy_dev(const Vec2& Xb, double dyb, const Vec2& Xd, double dw) const;

    const HeteroModel* m_;
    ReturnIndex idx_;
    Vec2 li_, nj_; // (lambda1^i, lambda2^i), (nu1^j, nu2^j)
    double g1_ = 0.0, g2_ = 0.0;
    WindowVec base_;
};

// Single-round fixed point of T_ij found by damped Newton in the window,
// initial guess at the window center. Returns the fixed point as a deviation
// from the frame's base (and the frame used).
struct SingleRoundFixedPoint {
    WindowVec dev;
    Eigen::Vector3d state;
    int iterations = 0;
};
std::optional<SingleRoundFixedPoint> find_single_round_fixed_point(const ReturnMapFrame& frame);

} // namespace lorenz
