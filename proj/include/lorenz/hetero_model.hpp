#pragma once

#include <array>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "lorenz/errors.hpp"

namespace lorenz {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Multipliers of one saddle: 0 < second < first < 1 < expanding (condition A).
struct SaddleSpectrum {
    double contracting1 = 0.0; // lambda1 / nu1
    double contracting2 = 0.0; // lambda2 / nu2
    double expanding = 0.0;    // gamma1 / gamma2
};

// Optional second-order coefficient record for a global map: for output
// component k, the contribution is delta^T quad[k] delta where delta is the
// input deviation (x1, x2, y - y^-) resp. (u1, u2, v - v^-). These are the
// displayed O(.)^2 monomials beyond the explicit d-terms; default zero.
struct QuadRecord {
    std::array<Eigen::Matrix3d, 3> q{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                     Eigen::Matrix3d::Zero()};
    bool any() const {
        return !(q[0].isZero(0) && q[1].isZero(0) && q[2].isZero(0));
    }
};

// T12 : Pi1^- -> Pi2^+, Taylor form near (0, 0, y^-) -> (u^+, 0):
//   u - u^+ = A x + b (y - y^-) + quad
//   v       = c . x + d (y - y^-) + quad
struct GlobalMapT12 {
    Mat2 A = Mat2::Zero();
    Vec2 b = Vec2::Zero();
    Vec2 c = Vec2::Zero();
    double d = 0.0;
    Vec2 base_out = Vec2::Zero(); // u^+
    double base_in = 0.0;         // y^-
    QuadRecord quad;
};

// T21 : Pi2^- -> Pi1^+, Taylor form near (0, 0, v^-) -> (x^+, y^+):
//   xbar - x^+ = A u + b (v - v^-) + quad
//   ybar       = y^+ + c . u + d (v - v^-)^2 + quad
// y^+ is the tangency splitting, equal to mu1.
struct GlobalMapT21 {
    Mat2 A = Mat2::Zero();
    Vec2 b = Vec2::Zero();
    Vec2 c = Vec2::Zero();
    double d = 0.0;
    Vec2 base_out = Vec2::Zero(); // x^+
    double base_in = 0.0;         // v^-
    double y_plus = 0.0;          // y^+ = mu1
    QuadRecord quad;
};

enum class CaseTag { I, II, III };
const char* to_string(CaseTag t);

struct MuVector {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double mu3 = 0.0;
};

struct ModelNumerics {
    double chart_radius = 0.5;  // per-coordinate half-width of every chart
    double zero_tol = 1e-12;    // classify_case zero tests
    double mu3_tol = 1e-12;     // gamma2 Newton residual on S
    int mu3_max_iter = 50;
    double shift_tol = 1e-10;   // rescaling offset solve
    double newton_tol = 1e-12;  // window fixed-point Newton
    int newton_max_iter = 100;
};

// Coefficient record at mu = 0, as read from a config file.
struct ModelConfig {
    SaddleSpectrum saddle1; // O1: (lambda1, lambda2, gamma1)
    SaddleSpectrum saddle2; // O2: (nu1, nu2, gamma2)
    GlobalMapT12 t12;
    GlobalMapT21 t21;
    CaseTag case_tag = CaseTag::I;
    ModelNumerics numerics;
};

// A11^(1) = a11^(1) - b1^(1) c1^(1) / d^(1) (tangent-plane image condition).
double a11_combination(const GlobalMapT12& t12);

// Eq. 12 zero-pattern classification of a mu = 0 config.
// Throws validation_error("not in Cases I-III") when no pattern matches.
CaseTag classify_case(const ModelConfig& config);

// The model with mu applied:
//   mu1 sets y^+;
//   mu2 perturbs b1^(2) (I), c1^(2) (II) or a11^(1) (III);
//   mu3 adjusts gamma2 so that S(f_mu) = S(f_0) + mu3.
// Construction validates conditions A, B, C, D and the Eq. 7 determinants
// and throws validation_error naming the violated condition.
class HeteroModel {
public:
    HeteroModel(const ModelConfig& config, const MuVector& mu);

    const ModelConfig& config() const { return config_; }
    const MuVector& mu() const { return mu_; }

    // effective (mu-applied) pieces
    const SaddleSpectrum& saddle1() const { return config_.saddle1; }
    const SaddleSpectrum& saddle2() const { return saddle2_eff_; }
    const GlobalMapT12& t12() const { return t12_eff_; }
    const GlobalMapT21& t21() const { return t21_eff_; }
    CaseTag case_tag() const { return config_.case_tag; }
    const ModelNumerics& numerics() const { return config_.numerics; }

    double base_S0() const { return base_S0_; }

private:
    ModelConfig config_;
    MuVector mu_;
    SaddleSpectrum saddle2_eff_; // gamma2 shifted by the mu3 Newton
    GlobalMapT12 t12_eff_;
    GlobalMapT21 t21_eff_;
    double base_S0_ = 0.0;
};

HeteroModel build_model(const ModelConfig& config, const MuVector& mu);

// J1 = lambda1 lambda2 gamma1 < 1, J2 = nu1 nu2 gamma2 > 1 (condition B).
std::pair<double, double> jacobians(const HeteroModel& m);

// S = -ln J1 / ln J2. Throws validation_error if J1 or J2 is on the wrong
// side of 1.
double S_functional(const HeteroModel& m);
double S_functional(double j1, double j2);

// Closed-form k-th iterate of the linear local map at O1:
//   (x1, x2, y) -> (lambda1^k x1, lambda2^k x2, gamma1^k y).
Eigen::Vector3d local_iterate_o1(const HeteroModel& m, long k, const Eigen::Vector3d& p);
// Same with (nu1, nu2, gamma2) at O2.
Eigen::Vector3d local_iterate_o2(const HeteroModel& m, long k, const Eigen::Vector3d& p);

// Global maps, chart-checked against their source neighborhoods.
// apply_t12 throws chart_exit_error("T12", "left chart Pi1^-") etc.
Eigen::Vector3d apply_t12(const HeteroModel& m, const Eigen::Vector3d& p);
Eigen::Vector3d apply_t21(const HeteroModel& m, const Eigen::Vector3d& p);

// J12 = det [[A1, b1], [c1, d1]], J21 = det [[A2, b2], [c2, 0]] (Eq. 7).
std::pair<double, double> global_determinants(const HeteroModel& m);
std::pair<double, double> global_determinants(const GlobalMapT12& t12,
                                              const GlobalMapT21& t21);

} // namespace lorenz
