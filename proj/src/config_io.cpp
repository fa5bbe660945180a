#include "lorenz/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lorenz {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw validation_error("config: " + path + ": " + what);
}

const json& expect(const json& doc, const std::string& path, const char* key) {
    if (!doc.is_object()) fail(path, "expected an object");
    auto it = doc.find(key);
    if (it == doc.end()) fail(path + "/" + key, "missing required field");
    return *it;
}

double expect_number(const json& doc, const std::string& path, const char* key) {
    const json& v = expect(doc, path, key);
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path + "/" + key, "must be finite");
    return d;
}

void check_known_keys(const json& doc, const std::string& path,
                      const std::set<std::string>& known) {
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.count(it.key())) fail(path + "/" + it.key(), "unknown field");
}

Vec2 parse_vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(path, "expected an array of 2 numbers");
    return Vec2(v[0].get<double>(), v[1].get<double>());
}

Mat2 parse_mat2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected 2 rows (row-major 2x2)");
    Mat2 m;
    for (int r = 0; r < 2; ++r) {
        if (!v[r].is_array() || v[r].size() != 2) fail(path, "expected rows of 2 numbers");
        for (int c = 0; c < 2; ++c) {
            if (!v[r][c].is_number()) fail(path, "expected numeric entries");
            m(r, c) = v[r][c].get<double>();
        }
    }
    return m;
}

Eigen::Matrix3d parse_mat3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected 3 rows (row-major 3x3)");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) fail(path, "expected rows of 3 numbers");
        for (int c = 0; c < 3; ++c) {
            if (!v[r][c].is_number()) fail(path, "expected numeric entries");
            m(r, c) = v[r][c].get<double>();
        }
    }
    if (!m.isApprox(m.transpose(), 0.0))
        fail(path, "quadratic coefficient matrices must be symmetric");
    return m;
}

QuadRecord parse_quad(const json& v, const std::string& path,
                      const std::array<const char*, 3>& names) {
    QuadRecord q;
    check_known_keys(v, path, {names[0], names[1], names[2]});
    for (int k = 0; k < 3; ++k)
        if (v.contains(names[k])) q.q[k] = parse_mat3(v[names[k]], path + "/" + names[k]);
    return q;
}

json mat2_to_json(const Mat2& m) {
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

} // namespace

CaseTag parse_case_tag(const std::string& s) {
    if (s == "I" || s == "CaseI" || s == "1") return CaseTag::I;
    if (s == "II" || s == "CaseII" || s == "2") return CaseTag::II;
    if (s == "III" || s == "CaseIII" || s == "3") return CaseTag::III;
    throw validation_error("config: /case: expected \"I\", \"II\" or \"III\", got \"" + s +
                           "\"");
}

ModelConfig parse_model_config(const json& doc) {
    if (!doc.is_object()) throw validation_error("config: top level must be an object");
    check_known_keys(doc, "", {"schema_version", "case", "saddle1", "saddle2", "t12", "t21",
                               "mu", "numerics"});
    const json& sv = expect(doc, "", "schema_version");
    if (!sv.is_number_integer() || sv.get<int>() != 1)
        fail("/schema_version", "expected 1");

    ModelConfig cfg;
    const json& cj = expect(doc, "", "case");
    if (!cj.is_string()) fail("/case", "expected a string");
    cfg.case_tag = parse_case_tag(cj.get<std::string>());

    {
        const json& s = expect(doc, "", "saddle1");
        check_known_keys(s, "/saddle1", {"lambda1", "lambda2", "gamma1"});
        cfg.saddle1.contracting1 = expect_number(s, "/saddle1", "lambda1");
        cfg.saddle1.contracting2 = expect_number(s, "/saddle1", "lambda2");
        cfg.saddle1.expanding = expect_number(s, "/saddle1", "gamma1");
    }
    {
        const json& s = expect(doc, "", "saddle2");
        check_known_keys(s, "/saddle2", {"nu1", "nu2", "gamma2"});
        cfg.saddle2.contracting1 = expect_number(s, "/saddle2", "nu1");
        cfg.saddle2.contracting2 = expect_number(s, "/saddle2", "nu2");
        cfg.saddle2.expanding = expect_number(s, "/saddle2", "gamma2");
    }
    {
        const json& t = expect(doc, "", "t12");
        check_known_keys(t, "/t12", {"A", "b", "c", "d", "u_plus", "y_minus", "quad"});
        cfg.t12.A = parse_mat2(expect(t, "/t12", "A"), "/t12/A");
        cfg.t12.b = parse_vec2(expect(t, "/t12", "b"), "/t12/b");
        cfg.t12.c = parse_vec2(expect(t, "/t12", "c"), "/t12/c");
        cfg.t12.d = expect_number(t, "/t12", "d");
        cfg.t12.base_out = parse_vec2(expect(t, "/t12", "u_plus"), "/t12/u_plus");
        cfg.t12.base_in = expect_number(t, "/t12", "y_minus");
        if (t.contains("quad"))
            cfg.t12.quad = parse_quad(t["quad"], "/t12/quad", {"u1", "u2", "v"});
    }
    {
        const json& t = expect(doc, "", "t21");
        check_known_keys(t, "/t21", {"A", "b", "c", "d", "x_plus", "v_minus", "quad"});
        cfg.t21.A = parse_mat2(expect(t, "/t21", "A"), "/t21/A");
        cfg.t21.b = parse_vec2(expect(t, "/t21", "b"), "/t21/b");
        cfg.t21.c = parse_vec2(expect(t, "/t21", "c"), "/t21/c");
        cfg.t21.d = expect_number(t, "/t21", "d");
        cfg.t21.base_out = parse_vec2(expect(t, "/t21", "x_plus"), "/t21/x_plus");
        cfg.t21.base_in = expect_number(t, "/t21", "v_minus");
        if (t.contains("quad"))
            cfg.t21.quad = parse_quad(t["quad"], "/t21/quad", {"x1", "x2", "y"});
    }
    if (doc.contains("numerics")) {
        const json& n = doc["numerics"];
        check_known_keys(n, "/numerics",
                         {"chart_radius", "zero_tol", "mu3_tol", "mu3_max_iter", "shift_tol",
                          "newton_tol", "newton_max_iter"});
        auto opt = [&](const char* key, double& slot) {
            if (n.contains(key)) slot = expect_number(n, "/numerics", key);
        };
        opt("chart_radius", cfg.numerics.chart_radius);
        opt("zero_tol", cfg.numerics.zero_tol);
        opt("mu3_tol", cfg.numerics.mu3_tol);
        opt("shift_tol", cfg.numerics.shift_tol);
        opt("newton_tol", cfg.numerics.newton_tol);
        if (n.contains("mu3_max_iter")) cfg.numerics.mu3_max_iter = n["mu3_max_iter"].get<int>();
        if (n.contains("newton_max_iter"))
            cfg.numerics.newton_max_iter = n["newton_max_iter"].get<int>();
    }
    return cfg;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error("config: " + path + ": " + e.what());
    }
    return parse_model_config(doc);
}

json model_config_to_json(const ModelConfig& cfg) {
    json doc;
    doc["schema_version"] = 1;
    doc["case"] = cfg.case_tag == CaseTag::I ? "I" : (cfg.case_tag == CaseTag::II ? "II" : "III");
    doc["saddle1"] = {{"lambda1", cfg.saddle1.contracting1},
                      {"lambda2", cfg.saddle1.contracting2},
                      {"gamma1", cfg.saddle1.expanding}};
    doc["saddle2"] = {{"nu1", cfg.saddle2.contracting1},
                      {"nu2", cfg.saddle2.contracting2},
                      {"gamma2", cfg.saddle2.expanding}};
    doc["t12"] = {{"A", mat2_to_json(cfg.t12.A)},
                  {"b", {cfg.t12.b[0], cfg.t12.b[1]}},
                  {"c", {cfg.t12.c[0], cfg.t12.c[1]}},
                  {"d", cfg.t12.d},
                  {"u_plus", {cfg.t12.base_out[0], cfg.t12.base_out[1]}},
                  {"y_minus", cfg.t12.base_in}};
    doc["t21"] = {{"A", mat2_to_json(cfg.t21.A)},
                  {"b", {cfg.t21.b[0], cfg.t21.b[1]}},
                  {"c", {cfg.t21.c[0], cfg.t21.c[1]}},
                  {"d", cfg.t21.d},
                  {"x_plus", {cfg.t21.base_out[0], cfg.t21.base_out[1]}},
                  {"v_minus", cfg.t21.base_in}};
    doc["numerics"] = {{"chart_radius", cfg.numerics.chart_radius},
                       {"zero_tol", cfg.numerics.zero_tol},
                       {"mu3_tol", cfg.numerics.mu3_tol},
                       {"mu3_max_iter", cfg.numerics.mu3_max_iter},
                       {"shift_tol", cfg.numerics.shift_tol},
                       {"newton_tol", cfg.numerics.newton_tol},
                       {"newton_max_iter", cfg.numerics.newton_max_iter}};
    return doc;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string scan_to_csv(const GridSpec& grid, const std::vector<ScanCell>& cells) {
    std::ostringstream os;
    os << "i1,i2," << grid.axis1.name << "," << grid.axis2.name
       << ",m1,m2,b,class,period,lyap1,lyap2,lyap3,drift,escape_iterate\n";
    for (const auto& cell : cells) {
        double v1 = 0.0, v2 = 0.0;
        auto get = [&cell](const std::string& name) {
            if (name == "m1") return cell.params.m1;
            if (name == "m2") return cell.params.m2;
            return cell.params.b;
        };
        v1 = get(grid.axis1.name);
        v2 = get(grid.axis2.name);
        os << cell.i1 << "," << cell.i2 << "," << fmt_double(v1) << "," << fmt_double(v2)
           << "," << fmt_double(cell.params.m1) << "," << fmt_double(cell.params.m2) << ","
           << fmt_double(cell.params.b) << "," << to_string(cell.report.cls.tag) << ","
           << cell.report.cls.period;
        if (cell.report.spectrum) {
            const auto& s = *cell.report.spectrum;
            os << "," << fmt_double(s.exponents[0]) << "," << fmt_double(s.exponents[1]) << ","
               << fmt_double(s.exponents[2]) << "," << fmt_double(s.last_window_drift);
        } else {
            os << ",,,,";
        }
        os << "," << cell.report.escape_iterate << "\n";
    }
    return os.str();
}

json lyapunov_to_json(const LyapunovSpectrum& spec) {
    return json{{"exponents", {spec.exponents[0], spec.exponents[1], spec.exponents[2]}},
                {"transient_discarded", spec.transient_discarded},
                {"iterates_used", spec.iterates_used},
                {"last_window_drift", spec.last_window_drift},
                {"sum_check_applicable", spec.sum_check_applicable}};
}

json attractor_report_to_json(const AttractorReport& report) {
    json doc;
    doc["class"] = to_string(report.cls.tag);
    doc["period"] = report.cls.period;
    if (report.spectrum) doc["spectrum"] = lyapunov_to_json(*report.spectrum);
    doc["final_state"] = {report.final_state[0], report.final_state[1],
                          report.final_state[2]};
    if (report.escape_iterate >= 0) doc["escape_iterate"] = report.escape_iterate;
    if (!report.note.empty()) doc["note"] = report.note;
    return doc;
}

json domain_reports_to_json(const std::vector<DomainReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json d;
        d["i"] = r.idx.i;
        d["j"] = r.idx.j;
        d["target"] = {{"m1", r.target.m1}, {"m2", r.target.m2}, {"bij", r.target.bij}};
        d["inversion_ok"] = r.inversion_ok;
        if (!r.note.empty()) d["note"] = r.note;
        if (r.inversion_ok) {
            d["mu_center"] = {r.mu_center.mu1, r.mu_center.mu2, r.mu_center.mu3};
            d["mu_halfwidth"] = {r.mu_halfwidth[0], r.mu_halfwidth[1], r.mu_halfwidth[2]};
            d["mu_refined"] = {r.mu_refined.mu1, r.mu_refined.mu2, r.mu_refined.mu3};
            d["delta_mu1"] = r.delta_mu1;
            d["delta_mu2"] = r.delta_mu2;
            d["residual"] = r.residual;
            d["verification"] = attractor_report_to_json(r.verification);
        }
        arr.push_back(std::move(d));
    }
    return json{{"schema_version", 1}, {"domains", std::move(arr)}};
}

json ladder_to_json(const IndexLadder& ladder) {
    json arr = json::array();
    for (const auto& r : ladder.rungs)
        arr.push_back(json{{"i", r.idx.i},
                           {"j", r.idx.j},
                           {"mu3", r.mu3},
                           {"log_defect", r.log_defect}});
    return json{{"schema_version", 1},
                {"target_bij", ladder.target_bij},
                {"tolerance", ladder.tolerance},
                {"rungs", std::move(arr)}};
}

} // namespace lorenz
