#pragma once

#include "lorenz/henon3d.hpp"
#include "lorenz/return_map.hpp"

namespace lorenz {

// Coefficients of the case limit map. bij is named J_ij in Case I and B in
// Cases II/III; the two are the same quantity (the return-map Jacobian).
struct RescaledParams {
    double m1 = 0.0;
    double m2 = 0.0;
    double bij = 0.0;
};

// Per-coordinate affine scalings (x1, x2, v) -> (X1, X2, Y) plus the
// case-dependent shear xt2 = x2 - shear * x1 applied before scaling
// (Cases II/III; zero in Case I). Offsets are produced by the shift solve
// and live in rescaled units.
struct ScaleSet {
    double s1 = 0.0;    // x1 factor
    double s2 = 0.0;    // x2 (sheared) factor
    double sw = 0.0;    // w factor (Pi2^+ chart; gamma2^-j times the paper's
                        // Pi2^- v-scale)
    double shear = 0.0; // b2^(2) / b1^(2) in Cases II/III
    Eigen::Vector3d offsets = Eigen::Vector3d::Zero(); // in (X1, X2, Y) units
};

// The scale factors of Lemma 1's proof with correction factors q_ij set to
// zero. In Case III the displayed factor contains rho_ij^6 = mu2 + rho_ij^5,
// a measured quantity; it is computed from the chain-rule Jacobian at the
// window center (setting it to zero would degenerate the x2 direction).
ScaleSet scale_factors(const HeteroModel& m, ReturnIndex idx);

// Case limit maps:
//   I:      (X1,X2,Y) -> (-J X2 + M2 Y, Y, M1 - X1 - Y^2)
//   II/III: (X1,X2,Y) -> (Y, X1, M1 + M2 X1 + B X2 - Y^2)
Eigen::Vector3d limit_map(CaseTag c, const RescaledParams& p, const Eigen::Vector3d& X);

// Affine change conjugating the Case I limit map to the 3D Henon map (1):
//   x = (X1 - M2 X2) / (-J),  y = X2,  z = Y
// giving zbar = M1 + J x - M2 y - z^2, i.e. Henon3DParams{M1, -M2, J}.
struct CaseIChange {
    Henon3DParams henon;  // resulting Eq. (1) parameters (note m2 sign flip)
    double j = 0.0;       // J_ij
    double m2 = 0.0;      // the Case I M2
    Eigen::Vector3d to_henon(const Eigen::Vector3d& X) const;
    Eigen::Vector3d from_henon(const Eigen::Vector3d& s) const;
};
CaseIChange caseI_to_henon(const RescaledParams& p);

// Leading-order parameter formulas (correction terms nu_ij, rho_ij set to
// zero), evaluated with the model's effective (mu-applied) coefficients.
RescaledParams params_forward(const HeteroModel& m, ReturnIndex idx);

// Formula-level inversion: mu3 from bij via the gamma2 unfolding, mu2 from
// M2, mu1 from M1 (mu2 feeds J21 so (mu2, mu3) iterate to a fixed point).
// Enforces |mu1| <= 0.1, |mu2| <= 0.1, |mu3| <= 0.2 and bij > 0.
MuVector params_invert(const ModelConfig& config, ReturnIndex idx,
                       const RescaledParams& target);

// ---------------------------------------------------------------------------
// The rescaled return map R = Sigma^-1 . T_ij . Sigma with offsets chosen so
// that the X1bar and X2bar equations have no constant term and the Ybar
// equation has no linear Y term (the shift constants phi_ij, psi_ij).

class RescaledFrame {
public:
    RescaledFrame(const HeteroModel& m, ReturnIndex idx);

    const ReturnMapFrame& window() const { return frame_; }
    const ScaleSet& scales() const { return scales_; }

    Eigen::Vector3d map(const Eigen::Vector3d& X) const;
    Eigen::Matrix3d jacobian(const Eigen::Vector3d& X) const;

    // Newton shift solve; throws numeric_error on non-convergence.
    void normalize();

    // Measured constants of the normalized map: M1 = R3(0) and the measured
    // M2 and B slots of the linear part (case-dependent positions).
    RescaledParams measured_params() const;

    WindowVec to_window(const Eigen::Vector3d& X) const;
    Eigen::Vector3d from_window(const WindowVec& dev) const;

private:
    Eigen::Vector3d conditions() const;

    ReturnMapFrame frame_;
    ScaleSet scales_;
};

// The mu-space realization of the paper's nu_ij / rho_ij corrections:
// 2-D Newton moving (mu1, mu2) until the measured (M1, M2) of the normalized
// rescaled map equal the target; mu3 is left at its formula value. Returns
// the refined mu and the correction against the formula inversion.
struct RefinedMu {
    MuVector mu;
    RescaledParams measured;
    double delta_mu1 = 0.0; // refined - formula
    double delta_mu2 = 0.0;
    int iterations = 0;
};
RefinedMu refine_mu(const ModelConfig& config, ReturnIndex idx, const MuVector& mu_formula,
                    const RescaledParams& target);

// C0 residual between the normalized rescaled map and the case limit map
// over a grid_n^3 grid on [-L, L]^3. The Ybar constant and the measured M2
// slot are anchored at their measured values (those corrections are the
// nu_ij / rho_ij terms, reported separately); bij stays at the formula value.
struct ResidualReport {
    double sup = 0.0;
    RescaledParams formula;  // params_forward at the model's mu
    RescaledParams measured; // anchors actually used for M1, M2
    double delta_m1 = 0.0;   // measured - formula
    double delta_m2 = 0.0;
};
ResidualReport residual_sup(const HeteroModel& m, ReturnIndex idx, double box_halfwidth,
                            int grid_n);

} // namespace lorenz
