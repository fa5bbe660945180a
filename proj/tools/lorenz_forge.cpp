#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lorenz/config_io.hpp"
#include "lorenz/manifest.hpp"

using namespace lorenz;
using nlohmann::json;

namespace {

int thread_count(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("LORENZ_FORGE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void finish(RunManifest& manifest, const Timer& timer, const std::string& primary_output) {
    manifest.version = kVersion;
    manifest.wall_clock_seconds = timer.seconds();
    if (!primary_output.empty()) write_manifest(manifest, primary_output);
}

GridAxis parse_axis(const std::string& spec, const char* flag) {
    GridAxis a;
    std::istringstream is(spec);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(is, tok, ':')) parts.push_back(tok);
    if (parts.size() != 4)
        throw validation_error(std::string(flag) + ": expected name:min:max:count");
    a.name = parts[0];
    a.min = std::stod(parts[1]);
    a.max = std::stod(parts[2]);
    a.count = std::stoi(parts[3]);
    return a;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lorenz-forge: 3D Henon map and heteroclinic-cycle return-map toolkit"};
    app.require_subcommand(1);

    // ---------------- henon ----------------
    auto* henon = app.add_subcommand("henon", "3D Henon map operations");
    henon->require_subcommand(1);

    Henon3DParams hp;
    State3 seed0(0.0, 0.0, 0.0);
    bool seed_given = false;
    std::string out_path;

    auto add_params = [&](CLI::App* cmd) {
        cmd->add_option("--m1", hp.m1, "M1 parameter")->check(CLI::Number);
        cmd->add_option("--m2", hp.m2, "M2 parameter")->check(CLI::Number);
        cmd->add_option("--b", hp.b, "B parameter (Jacobian)")->check(CLI::Number);
    };
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--x0", seed0[0], "seed x")->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--y0", seed0[1], "seed y")->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--z0", seed0[2], "seed z")->each([&](const std::string&) { seed_given = true; });
    };

    long iter_n = 10;
    auto* h_iter = henon->add_subcommand("iterate", "iterate the map, CSV to --out or stdout");
    add_params(h_iter);
    add_seed(h_iter);
    h_iter->add_option("--n", iter_n, "number of iterates")->check(CLI::PositiveNumber);
    h_iter->add_option("--out", out_path, "output CSV path");

    auto* h_fp = henon->add_subcommand("fixed-points", "fixed points and multipliers, JSON");
    add_params(h_fp);
    h_fp->add_option("--out", out_path, "output JSON path");

    long ly_transient = 10000, ly_iterates = 1000000;
    auto* h_ly = henon->add_subcommand("lyapunov", "Lyapunov spectrum, JSON");
    add_params(h_ly);
    add_seed(h_ly);
    h_ly->add_option("--transient", ly_transient, "transient iterates");
    h_ly->add_option("--iterates", ly_iterates, "measured iterates");
    h_ly->add_option("--out", out_path, "output JSON path");

    std::string axis1_spec, axis2_spec, fixed_spec;
    long sc_transient = 10000, sc_measure = 100000;
    int threads_flag = 0;
    auto* h_scan = henon->add_subcommand("scan", "classification grid, CSV");
    h_scan->add_option("--axis1", axis1_spec, "name:min:max:count")->required();
    h_scan->add_option("--axis2", axis2_spec, "name:min:max:count")->required();
    h_scan->add_option("--fixed", fixed_spec, "name=value for the remaining parameter");
    h_scan->add_option("--transient", sc_transient, "per-cell transient");
    h_scan->add_option("--measure", sc_measure, "per-cell Lyapunov iterates");
    h_scan->add_option("--threads", threads_flag, "worker threads (default: hardware)");
    h_scan->add_option("--out", out_path, "output CSV path")->required();

    auto* h_c3 = henon->add_subcommand("codim3", "locate the (-1,-1,+1) multiplier point, JSON");
    h_c3->add_option("--out", out_path, "output JSON path");

    // ---------------- model ----------------
    auto* model = app.add_subcommand("model", "heteroclinic-cycle model operations");
    model->require_subcommand(1);

    std::string config_path;
    int idx_i = 0, idx_j = 0;
    MuVector mu;
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "model config JSON")->required();
    };
    auto add_mu = [&](CLI::App* cmd) {
        cmd->add_option("--mu1", mu.mu1, "tangency splitting");
        cmd->add_option("--mu2", mu.mu2, "degeneracy unfolding");
        cmd->add_option("--mu3", mu.mu3, "Jacobian-ratio shift");
    };
    auto add_idx = [&](CLI::App* cmd) {
        cmd->add_option("--i", idx_i, "O1 iterate count")->required();
        cmd->add_option("--j", idx_j, "O2 iterate count")->required();
    };

    auto* m_check = model->add_subcommand("check", "validate conditions A-D and Eq. 7");
    add_config(m_check);

    auto* m_case = model->add_subcommand("classify-case", "Eq. 12 zero-pattern case");
    add_config(m_case);

    auto* m_rm = model->add_subcommand("return-map", "compose T_ij at the window center, JSON");
    add_config(m_rm);
    add_idx(m_rm);
    add_mu(m_rm);
    m_rm->add_option("--out", out_path, "output JSON path");

    double rr_L = 3.0;
    int rr_grid = 7;
    auto* m_rr = model->add_subcommand("rescale-residual",
                                       "C0 residual against the case limit map, JSON");
    add_config(m_rr);
    add_idx(m_rr);
    add_mu(m_rr);
    m_rr->add_option("--L", rr_L, "rescaled box halfwidth");
    m_rr->add_option("--grid", rr_grid, "grid points per axis");
    m_rr->add_option("--out", out_path, "output JSON path");

    double tg_m1 = 0.0, tg_m2 = 0.85, tg_b = 0.7;
    double half_m1 = 0.02, half_m2 = 0.02, half_b = 0.02;
    int dm_rungs = 8;
    auto* m_dm = model->add_subcommand("domain-map", "Theorem 1 domains delta_ij, JSON");
    add_config(m_dm);
    m_dm->add_option("--target-m1", tg_m1, "Henon-side target M1");
    m_dm->add_option("--target-m2", tg_m2, "Henon-side target M2");
    m_dm->add_option("--target-b", tg_b, "Henon-side target B");
    m_dm->add_option("--half-m1", half_m1, "box halfwidth in M1");
    m_dm->add_option("--half-m2", half_m2, "box halfwidth in M2");
    m_dm->add_option("--half-b", half_b, "box halfwidth in B");
    m_dm->add_option("--rungs", dm_rungs, "ladder rungs");
    m_dm->add_option("--out", out_path, "output JSON path")->required();

    auto* m_vf = model->add_subcommand("verify", "verify one (i,j) against a Henon target, JSON");
    add_config(m_vf);
    add_idx(m_vf);
    m_vf->add_option("--target-m1", tg_m1, "Henon-side target M1");
    m_vf->add_option("--target-m2", tg_m2, "Henon-side target M2");
    m_vf->add_option("--target-b", tg_b, "Henon-side target B");
    m_vf->add_option("--out", out_path, "output JSON path");

    // ---------------- replay ----------------
    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "re-run a recorded manifest and verify digests");
    replay->add_option("manifest", manifest_path, "path to a .manifest.json")->required();

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Timer timer;
    RunManifest manifest;
    manifest.argv = args;

    auto emit = [&](const std::string& text, const std::string& what) {
        if (out_path.empty()) {
            std::cout << text;
            return std::string();
        }
        write_output(manifest, out_path, text);
        std::cout << "wrote " << what << " to " << out_path << "\n";
        return out_path;
    };

    if (h_iter->parsed()) {
        manifest.command = "henon iterate";
        std::ostringstream os;
        os << "t,x,y,z\n";
        State3 s = seed_given ? seed0 : default_seed(hp);
        os << 0 << "," << fmt_double(s[0]) << "," << fmt_double(s[1]) << ","
           << fmt_double(s[2]) << "\n";
        for (long t = 1; t <= iter_n; ++t) {
            s = henon_step(s, hp);
            os << t << "," << fmt_double(s[0]) << "," << fmt_double(s[1]) << ","
               << fmt_double(s[2]) << "\n";
        }
        finish(manifest, timer, emit(os.str(), "orbit CSV"));
        return 0;
    }
    if (h_fp->parsed()) {
        manifest.command = "henon fixed-points";
        json doc;
        doc["params"] = {{"m1", hp.m1}, {"m2", hp.m2}, {"b", hp.b}};
        doc["fixed_points"] = json::array();
        for (const auto& fp : henon_fixed_points(hp)) {
            json e;
            e["point"] = {fp[0], fp[1], fp[2]};
            e["residual"] = (henon_step(fp, hp) - fp).cwiseAbs().maxCoeff();
            json ms = json::array();
            for (const auto& m : multipliers(hp, fp))
                ms.push_back({{"re", m.real()}, {"im", m.imag()}});
            e["multipliers"] = std::move(ms);
            doc["fixed_points"].push_back(std::move(e));
        }
        finish(manifest, timer, emit(doc.dump(2) + "\n", "fixed points JSON"));
        return 0;
    }
    if (h_ly->parsed()) {
        manifest.command = "henon lyapunov";
        const State3 s = seed_given ? seed0 : default_seed(hp);
        const auto spec = lyapunov_spectrum(hp, s, ly_transient, ly_iterates);
        json doc;
        doc["params"] = {{"m1", hp.m1}, {"m2", hp.m2}, {"b", hp.b}};
        doc["seed"] = {s[0], s[1], s[2]};
        doc["spectrum"] = lyapunov_to_json(spec);
        doc["sum"] = spec.exponents[0] + spec.exponents[1] + spec.exponents[2];
        if (hp.b != 0.0) doc["log_abs_b"] = std::log(std::abs(hp.b));
        finish(manifest, timer, emit(doc.dump(2) + "\n", "Lyapunov JSON"));
        return 0;
    }
    if (h_scan->parsed()) {
        manifest.command = "henon scan";
        GridSpec grid;
        grid.axis1 = parse_axis(axis1_spec, "--axis1");
        grid.axis2 = parse_axis(axis2_spec, "--axis2");
        if (!fixed_spec.empty()) {
            const auto eq = fixed_spec.find('=');
            if (eq == std::string::npos)
                throw validation_error("--fixed: expected name=value");
            grid.fixed[fixed_spec.substr(0, eq)] = std::stod(fixed_spec.substr(eq + 1));
        }
        grid.budget.transient = sc_transient;
        grid.budget.measure = sc_measure;
        const auto cells = henon_scan(grid, thread_count(threads_flag));
        finish(manifest, timer, emit(scan_to_csv(grid, cells), "scan CSV"));
        return 0;
    }
    if (h_c3->parsed()) {
        manifest.command = "henon codim3";
        const auto c3 = find_codim3_point();
        json doc;
        doc["params"] = {{"m1", c3.params.m1}, {"m2", c3.params.m2}, {"b", c3.params.b}};
        doc["fixed_point"] = {c3.fixed_point[0], c3.fixed_point[1], c3.fixed_point[2]};
        json ms = json::array();
        for (const auto& m : c3.mults) ms.push_back({{"re", m.real()}, {"im", m.imag()}});
        doc["multipliers"] = std::move(ms);
        doc["residuals"] = {std::abs(c3.mults[0] + 1.0), std::abs(c3.mults[1] + 1.0),
                            std::abs(c3.mults[2] - 1.0)};
        doc["newton_iterations"] = c3.newton_iterations;
        finish(manifest, timer, emit(doc.dump(2) + "\n", "codim-3 JSON"));
        return 0;
    }

    if (m_check->parsed()) {
        const ModelConfig cfg = load_model_config(config_path);
        const HeteroModel m(cfg, MuVector{});
        auto [j1, j2] = jacobians(m);
        auto [j12, j21] = global_determinants(m);
        std::cout << "condition A: saddle spectra ordered (O1 and O2)          ok\n"
                  << "condition B: J1 = " << fmt_double(j1) << " < 1 < J2 = " << fmt_double(j2)
                  << "  ok\n"
                  << "condition C: d1 = " << fmt_double(cfg.t12.d)
                  << " != 0, d2 = " << fmt_double(cfg.t21.d) << " != 0  ok\n"
                  << "condition D: Eq. 12 pattern matches declared "
                  << to_string(cfg.case_tag) << "  ok\n"
                  << "Eq. 7: J12 = " << fmt_double(j12) << ", J21 = " << fmt_double(j21)
                  << "  ok\n"
                  << "S(f0) = " << fmt_double(m.base_S0()) << "\n";
        return 0;
    }
    if (m_case->parsed()) {
        const ModelConfig cfg = load_model_config(config_path);
        std::cout << to_string(classify_case(cfg)) << "\n";
        return 0;
    }
    if (m_rm->parsed()) {
        manifest.command = "model return-map";
        const ModelConfig cfg = load_model_config(config_path);
        const HeteroModel m(cfg, mu);
        const ReturnIndex idx{idx_i, idx_j};
        const auto window = admissible_window(m, idx);
        ReturnMapFrame frame(m, idx);
        const WindowVec image = frame.map(WindowVec{});
        auto [j1, j2] = jacobians(m);
        auto [j12, j21] = global_determinants(m);
        json doc;
        doc["i"] = idx.i;
        doc["j"] = idx.j;
        doc["window"] = {{"y_interval", {window.y_interval.lo, window.y_interval.hi}},
                         {"v_interval", {window.v_interval.lo, window.v_interval.hi}}};
        const Eigen::Vector3d center = frame.to_state(WindowVec{});
        doc["center"] = {center[0], center[1], center[2]};
        doc["image_deviation"] = {image.x[0], image.x[1], image.w};
        doc["jacobian_det"] = frame.jacobian(WindowVec{}).determinant();
        doc["det_identity"] = j12 * j21 * std::pow(j1, idx.i) * std::pow(j2, idx.j);
        finish(manifest, timer, emit(doc.dump(2) + "\n", "return-map JSON"));
        return 0;
    }
    if (m_rr->parsed()) {
        manifest.command = "model rescale-residual";
        const ModelConfig cfg = load_model_config(config_path);
        const HeteroModel m(cfg, mu);
        const auto rep = residual_sup(m, ReturnIndex{idx_i, idx_j}, rr_L, rr_grid);
        json doc;
        doc["i"] = idx_i;
        doc["j"] = idx_j;
        doc["residual_sup"] = rep.sup;
        doc["formula"] = {{"m1", rep.formula.m1}, {"m2", rep.formula.m2}, {"bij", rep.formula.bij}};
        doc["measured"] = {{"m1", rep.measured.m1}, {"m2", rep.measured.m2}};
        doc["delta_m1"] = rep.delta_m1;
        doc["delta_m2"] = rep.delta_m2;
        finish(manifest, timer, emit(doc.dump(2) + "\n", "residual JSON"));
        return 0;
    }
    if (m_dm->parsed()) {
        manifest.command = "model domain-map";
        const ModelConfig cfg = load_model_config(config_path);
        const HenonBox box{Henon3DParams{tg_m1, tg_m2, tg_b}, half_m1, half_m2, half_b};
        const IndexLadder ladder = index_ladder(cfg, tg_b, dm_rungs);
        const auto reports = map_domains(cfg, ladder, box);
        json doc = domain_reports_to_json(reports);
        doc["ladder"] = ladder_to_json(ladder);
        finish(manifest, timer, emit(doc.dump(2) + "\n", "domain JSON"));
        return 0;
    }
    if (m_vf->parsed()) {
        manifest.command = "model verify";
        const ModelConfig cfg = load_model_config(config_path);
        const RescaledParams target =
            henon_target_to_case(cfg.case_tag, Henon3DParams{tg_m1, tg_m2, tg_b});
        DomainReport rep;
        rep.idx = {idx_i, idx_j};
        rep.target = target;
        rep.mu_center = params_invert(cfg, rep.idx, target);
        const RefinedMu refined = refine_mu(cfg, rep.idx, rep.mu_center, target);
        rep.mu_refined = refined.mu;
        rep.delta_mu1 = refined.delta_mu1;
        rep.delta_mu2 = refined.delta_mu2;
        rep.inversion_ok = true;
        const HeteroModel m(cfg, rep.mu_refined);
        rep.residual = residual_sup(m, rep.idx, 2.0, 5).sup;
        const AttractorReport verdict = verify_domain(cfg, rep);
        json doc = attractor_report_to_json(verdict);
        doc["i"] = idx_i;
        doc["j"] = idx_j;
        doc["residual"] = rep.residual;
        doc["mu_center"] = {rep.mu_center.mu1, rep.mu_center.mu2, rep.mu_center.mu3};
        doc["mu_refined"] = {rep.mu_refined.mu1, rep.mu_refined.mu2, rep.mu_refined.mu3};
        finish(manifest, timer, emit(doc.dump(2) + "\n", "verification JSON"));
        return 0;
    }

    if (replay->parsed()) {
        const RunManifest recorded = manifest_from_file(manifest_path);
        std::cout << "replaying: ";
        for (const auto& a : recorded.argv) std::cout << a << " ";
        std::cout << "\n";
        const int code = run_cli(recorded.argv);
        if (code != 0) return code;
        for (const auto& o : recorded.outputs) {
            std::ifstream in(o.path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            const std::string digest = fnv1a64_hex(ss.str());
            if (digest != o.fnv1a64) {
                std::cerr << "replay mismatch for " << o.path << ": " << digest
                          << " != " << o.fnv1a64 << "\n";
                return 3;
            }
            std::cout << "verified " << o.path << " (" << digest << ")\n";
        }
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run_cli(args);
    } catch (const lorenz::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lorenz::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
