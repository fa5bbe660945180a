#include "lorenz/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace lorenz {

namespace {

Henon3DParams cell_params(const GridSpec& grid, double v1, double v2) {
    Henon3DParams p;
    auto set = [&p](const std::string& name, double v) {
        if (name == "m1") p.m1 = v;
        else if (name == "m2") p.m2 = v;
        else if (name == "b") p.b = v;
        else throw validation_error("unknown grid axis '" + name + "' (use m1, m2, b)");
    };
    for (const auto& [name, v] : grid.fixed) set(name, v);
    set(grid.axis1.name, v1);
    set(grid.axis2.name, v2);
    return p;
}

double axis_value(const GridAxis& a, int k) {
    if (a.count == 1) return a.min;
    return a.min + (a.max - a.min) * double(k) / double(a.count - 1);
}

} // namespace

std::vector<ScanCell> henon_scan(const GridSpec& grid, int threads) {
    if (grid.axis1.count < 2 || grid.axis2.count < 2)
        throw validation_error("henon_scan: axis count must be >= 2");
    if (!(grid.axis1.min < grid.axis1.max) || !(grid.axis2.min < grid.axis2.max))
        throw validation_error("henon_scan: axis min must be < max");

    const int n1 = grid.axis1.count, n2 = grid.axis2.count;
    std::vector<ScanCell> cells(size_t(n1) * n2);

    auto work = [&](int row_begin, int row_end) {
        for (int a = row_begin; a < row_end; ++a) {
            for (int b = 0; b < n2; ++b) {
                ScanCell& cell = cells[size_t(a) * n2 + b];
                cell.i1 = a;
                cell.i2 = b;
                cell.params = cell_params(grid, axis_value(grid.axis1, a),
                                          axis_value(grid.axis2, b));
                const State3 seed = grid.seed_policy == SeedPolicy::Origin
                                        ? State3::Zero()
                                        : default_seed(cell.params);
                cell.report = classify_dynamics(cell.params, seed, grid.budget);
            }
        }
    };

    threads = std::max(1, std::min(threads, n1));
    if (threads == 1) {
        work(0, n1);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n1 + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk, hi = std::min(n1, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return cells;
}

IndexLadder index_ladder(const ModelConfig& config, double target_bij, int max_rungs) {
    if (!(target_bij > 0.0))
        throw validation_error("index_ladder: target Jacobian must be positive");
    const HeteroModel m0(config, MuVector{});
    auto [j1, j2] = jacobians(m0);
    auto [j12, j21] = global_determinants(m0);
    if (!(j12 * j21 > 0.0))
        throw validation_error("index_ladder: J12*J21 < 0 cannot reach a positive target");
    const auto [i0, j0] = min_return_index(m0);

    IndexLadder ladder;
    ladder.target_bij = target_bij;
    ladder.tolerance = 0.5 * std::abs(std::log(j2)) + 1e-12;

    const double lt = std::log(target_bij) - std::log(j12 * j21);
    int last_sum = 0;
    for (int i = i0; int(ladder.rungs.size()) < max_rungs && i < i0 + 4 * max_rungs; ++i) {
        const double jreal = (lt - i * std::log(j1)) / std::log(j2);
        const int j = int(std::lround(jreal));
        if (j < j0) continue;
        if (i + j <= last_sum) continue;
        LadderRung rung;
        rung.idx = {i, j};
        rung.log_defect = std::abs(i * std::log(j1) + j * std::log(j2) - lt);
        if (rung.log_defect > ladder.tolerance) continue;
        // mu3 hitting the target exactly at this rung
        const double j2_needed = std::exp((lt - i * std::log(j1)) / double(j));
        if (!(j2_needed > 1.0)) continue;
        rung.mu3 = S_functional(j1, j2_needed) - m0.base_S0();
        if (std::abs(rung.mu3) > 0.2) continue;
        ladder.rungs.push_back(rung);
        last_sum = i + j;
    }
    if (ladder.rungs.empty())
        throw numeric_error("index_ladder: no rung within tolerance and mu3 bound");
    return ladder;
}

RescaledParams henon_target_to_case(CaseTag c, const Henon3DParams& target) {
    // Case I limit map is conjugate to Eq. (1) with the M2 slot negated.
    if (c == CaseTag::I) return {target.m1, -target.m2, target.b};
    return {target.m1, target.m2, target.b};
}

Henon3DParams case_target_to_henon(CaseTag c, const RescaledParams& target) {
    if (c == CaseTag::I) return {target.m1, -target.m2, target.bij};
    return {target.m1, target.m2, target.bij};
}

AttractorReport verify_domain(const ModelConfig& config, const DomainReport& report,
                              const ClassifyBudget& budget) {
    AttractorReport out;
    try {
        const HeteroModel m(config, report.mu_refined);
        RescaledFrame rf(m, report.idx);
        rf.normalize();

        Eigen::Vector3d X = Eigen::Vector3d::Zero(); // window center
        for (long t = 0; t < budget.transient; ++t) {
            X = rf.map(X);
            if (!X.allFinite() || X.cwiseAbs().maxCoeff() > budget.escape_radius) {
                out.cls = {AttractorTag::DivergedToInfinity, 0};
                out.escape_iterate = t;
                return out;
            }
        }
        out.final_state = X;

        // periodic closure in rescaled coordinates (periods = return counts)
        {
            Eigen::Vector3d walk = X;
            for (int q = 1; q <= budget.q_max; ++q) {
                walk = rf.map(walk);
                if (!walk.allFinite() || walk.cwiseAbs().maxCoeff() > budget.escape_radius) {
                    out.cls = {AttractorTag::DivergedToInfinity, 0};
                    return out;
                }
                if ((walk - X).cwiseAbs().maxCoeff() < budget.closure_tol) {
                    out.cls = {AttractorTag::PeriodicSink, q};
                    return out;
                }
            }
        }

        // per-return Lyapunov spectrum via the analytic frame Jacobian
        Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
        std::array<double, 3> sums{};
        for (long t = 0; t < budget.measure; ++t) {
            q = rf.jacobian(X) * q;
            X = rf.map(X);
            if (!X.allFinite() || X.cwiseAbs().maxCoeff() > budget.escape_radius) {
                out.cls = {AttractorTag::DivergedToInfinity, 0};
                out.escape_iterate = budget.transient + t;
                return out;
            }
            for (int k = 0; k < 3; ++k) {
                Eigen::Vector3d v = q.col(k);
                for (int mcol = 0; mcol < k; ++mcol) v -= q.col(mcol).dot(v) * q.col(mcol);
                const double norm = v.norm();
                sums[k] += std::log(norm);
                q.col(k) = v / norm;
            }
        }
        LyapunovSpectrum spec;
        for (int k = 0; k < 3; ++k) spec.exponents[k] = sums[k] / double(budget.measure);
        std::sort(spec.exponents.begin(), spec.exponents.end(), std::greater<>());
        spec.transient_discarded = budget.transient;
        spec.iterates_used = budget.measure;
        out.spectrum = spec;
        out.cls = classify_from_spectrum(spec.exponents, budget.eps_pos, budget.eps_zero);
        return out;
    } catch (const chart_exit_error& e) {
        out.cls = {AttractorTag::Undetermined, 0};
        out.note = std::string("chart exit during verification: ") + e.what() +
                   " (window too small or target outside valid range)";
        return out;
    }
}

std::vector<DomainReport> map_domains(const ModelConfig& config, const IndexLadder& ladder,
                                      const HenonBox& box, const MapDomainsOptions& opt) {
    std::vector<DomainReport> out;
    const CaseTag c = config.case_tag;
    const RescaledParams center_target =
        henon_target_to_case(c, box.center);

    for (const auto& rung : ladder.rungs) {
        DomainReport rep;
        rep.idx = rung.idx;
        rep.target = center_target;
        try {
            rep.mu_center = params_invert(config, rung.idx, center_target);
            // push the 8 box corners through the inversion
            Eigen::Vector3d hw = Eigen::Vector3d::Zero();
            for (int corner = 0; corner < 8; ++corner) {
                Henon3DParams hp = box.center;
                hp.m1 += (corner & 1 ? box.half_m1 : -box.half_m1);
                hp.m2 += (corner & 2 ? box.half_m2 : -box.half_m2);
                hp.b += (corner & 4 ? box.half_b : -box.half_b);
                const MuVector mc = params_invert(config, rung.idx, henon_target_to_case(c, hp));
                hw[0] = std::max(hw[0], std::abs(mc.mu1 - rep.mu_center.mu1));
                hw[1] = std::max(hw[1], std::abs(mc.mu2 - rep.mu_center.mu2));
                hw[2] = std::max(hw[2], std::abs(mc.mu3 - rep.mu_center.mu3));
            }
            rep.mu_halfwidth = hw;
            const RefinedMu refined = refine_mu(config, rung.idx, rep.mu_center, center_target);
            rep.mu_refined = refined.mu;
            rep.delta_mu1 = refined.delta_mu1;
            rep.delta_mu2 = refined.delta_mu2;
            rep.inversion_ok = true;

            const HeteroModel m(config, rep.mu_refined);
            rep.residual =
                residual_sup(m, rung.idx, opt.residual_halfwidth, opt.residual_grid).sup;
            if (opt.verify) rep.verification = verify_domain(config, rep, opt.budget);
        } catch (const std::exception& e) {
            rep.inversion_ok = false;
            rep.note = e.what();
        }
        out.push_back(std::move(rep));
    }
    return out;
}

} // namespace lorenz
