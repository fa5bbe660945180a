#pragma once

#include <map>
#include <string>
#include <vector>

#include "lorenz/rescaling.hpp"

namespace lorenz {

enum class SeedPolicy { FixedPointOffset, Origin };

struct GridAxis {
    std::string name; // one of "m1", "m2", "b"
    double min = 0.0;
    double max = 0.0;
    int count = 0;
};

struct GridSpec {
    GridAxis axis1;
    GridAxis axis2;
    std::map<std::string, double> fixed; // the remaining parameter
    ClassifyBudget budget;
    SeedPolicy seed_policy = SeedPolicy::FixedPointOffset;
};

struct ScanCell {
    int i1 = 0, i2 = 0;   // axis indices (row-major output order)
    Henon3DParams params;
    AttractorReport report;
};

// Per-cell classification over the grid; deterministic seeds; output in
// row-major order regardless of thread count.
std::vector<ScanCell> henon_scan(const GridSpec& grid, int threads = 1);

struct LadderRung {
    ReturnIndex idx;
    double mu3 = 0.0;        // the mu3 hitting target_bij exactly at this rung
    double log_defect = 0.0; // |i ln J1 + j ln J2 + ln(J12 J21) - ln target|
};

struct IndexLadder {
    std::vector<LadderRung> rungs; // strictly increasing in i + j
    double target_bij = 0.0;
    double tolerance = 0.0; // allowed log defect (absorbed by mu3)
};

// For each i starting at i0, the j minimizing the log defect; rungs kept
// while |mu3| <= 0.2. Throws numeric_error if no rung qualifies.
IndexLadder index_ladder(const ModelConfig& config, double target_bij, int max_rungs);

// Axis-aligned box of Henon-side targets.
struct HenonBox {
    Henon3DParams center;
    double half_m1 = 0.0;
    double half_m2 = 0.0;
    double half_b = 0.0;
};

struct DomainReport {
    ReturnIndex idx;
    RescaledParams target;      // case-side target (Case I: m2 negated)
    bool inversion_ok = false;
    std::string note;
    MuVector mu_center;         // formula inversion at the box center
    Eigen::Vector3d mu_halfwidth = Eigen::Vector3d::Zero(); // corner push
    MuVector mu_refined;        // after the measured-(M1,M2) correction
    double delta_mu1 = 0.0;
    double delta_mu2 = 0.0;
    double residual = -1.0;     // residual_sup at mu_refined
    AttractorReport verification;
};

struct MapDomainsOptions {
    double residual_halfwidth = 2.0;
    int residual_grid = 5;
    ClassifyBudget budget{.transient = 2000, .measure = 20000};
    bool verify = true;
};

// Theorem 1 domains: per rung, invert the box center (and corners for the
// mu-box), refine against the measured constants, measure the residual and
// verify the composed return map. Inversion failures are recorded, not fatal.
std::vector<DomainReport> map_domains(const ModelConfig& config, const IndexLadder& ladder,
                                      const HenonBox& box, const MapDomainsOptions& opt = {});

// Classification of the composed return map at the report's refined mu:
// iterates the rescaled window frame from the window center with the same
// decision rules as henon3d::classify_dynamics (per-return exponents).
AttractorReport verify_domain(const ModelConfig& config, const DomainReport& report,
                              const ClassifyBudget& budget = {.transient = 2000,
                                                              .measure = 20000});

// Henon-side target corresponding to a case-side RescaledParams and back.
RescaledParams henon_target_to_case(CaseTag c, const Henon3DParams& target);
Henon3DParams case_target_to_henon(CaseTag c, const RescaledParams& target);

} // namespace lorenz
