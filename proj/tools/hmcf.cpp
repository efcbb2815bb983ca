// hmcf: one binary, one subcommand per computation path.
//   geom              frame diagnostics (rank, step, brackets)
//   curvature         pointwise horizontal jet and mean curvature
//   named-curvature   closed-form curvatures of the named surfaces
//   char-scan         characteristic points on a sampled surface
//   evolve-grid       level-set finite-difference evolution
//   evolve-rotational reduced 1-D evolution of a rotational profile
//   value-function    stochastic-control Monte Carlo estimate
//   crossval          all three paths on one problem, tabulated
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <span>

#include "hmcf/cli_io.hpp"
#include "hmcf/expression.hpp"
#include "hmcf/geometry.hpp"
#include "hmcf/horizontal.hpp"
#include "hmcf/levelset.hpp"
#include "hmcf/rotational.hpp"
#include "hmcf/sde.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hmcf;

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        out.push_back(std::stod(s.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    Vec x(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<int>(i)) = v[i];
    return x;
}

Frame load_geometry(const std::string& spec) {
    if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
        std::ifstream f(spec);
        if (!f) throw std::invalid_argument("cannot open frame file " + spec);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return frame_from_json_text(text);
    }
    return make_geometry(spec);
}

// Output directory: flag wins, then HMCF_OUTPUT_DIR, then current directory.
fs::path resolve_output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("HMCF_OUTPUT_DIR")) return env;
    return ".";
}

void write_provenance(const fs::path& dir, const json& config) {
    fs::create_directories(dir);
    json j = config;
    j["version"] = tool_version();
    std::ofstream f(dir / "config.json");
    f << j.dump(2) << "\n";
}

json jet_to_json(const Frame& frame, const ScalarField& field, const Vec& x, double char_tol) {
    HorizontalJet j = jet(frame, field, x);
    json out;
    out["point"] = std::vector<double>(j.point.data(), j.point.data() + j.point.size());
    out["euclid_grad"] =
        std::vector<double>(j.euclid_grad.data(), j.euclid_grad.data() + j.euclid_grad.size());
    out["horiz_grad"] =
        std::vector<double>(j.horiz_grad.data(), j.horiz_grad.data() + j.horiz_grad.size());
    auto mat_rows = [](const Mat& m) {
        std::vector<std::vector<double>> rows;
        for (int r = 0; r < m.rows(); ++r) {
            rows.emplace_back();
            for (int c = 0; c < m.cols(); ++c) rows.back().push_back(m(r, c));
        }
        return rows;
    };
    out["correction"] = mat_rows(j.correction);
    out["horiz_hess"] = mat_rows(j.horiz_hess);
    out["delta0"] = horizontal_laplacian(j);
    bool charpt = is_characteristic(j, char_tol);
    out["characteristic"] = charpt;
    if (!charpt) {
        out["delta0_inf"] = horizontal_inf_laplacian(j, char_tol);
        out["k0"] = horizontal_mean_curvature(frame, field, x, char_tol);
    }
    return out;
}

int cmd_geom(const std::string& geometry, const std::vector<double>& point, int max_step) {
    Frame frame = load_geometry(geometry);
    Vec x = point.empty() ? Vec(Vec::Zero(frame.n)) : to_vec(point);
    if (x.size() != frame.n)
        throw std::invalid_argument("point dimension does not match the frame");
    json out;
    out["label"] = frame.label;
    out["n"] = frame.n;
    out["m"] = frame.m;
    Mat sig = frame.eval_sigma(x);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < sig.rows(); ++r)
        rows.emplace_back(sig.row(r).begin(), sig.row(r).end());
    out["sigma"] = rows;
    HormanderResult hr = hormander_step(frame, x, max_step);
    out["hormander"] = {{"satisfied", hr.satisfied}, {"step", hr.step}, {"diagnostic", hr.diagnostic}};
    json brackets = json::array();
    for (int i = 0; i < frame.m; ++i)
        for (int j2 = i + 1; j2 < frame.m; ++j2) {
            Vec b = lie_bracket(frame, i, j2, x);
            brackets.push_back({{"i", i + 1},
                                {"j", j2 + 1},
                                {"value", std::vector<double>(b.data(), b.data() + b.size())}});
        }
    out["brackets"] = brackets;
    out["version"] = tool_version();
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_curvature(const std::string& geometry, const std::string& field_spec,
                  const std::vector<double>& point, bool force_fd) {
    Frame frame = load_geometry(geometry);
    ScalarField field = resolve_field_spec(field_spec, frame.n);
    if (force_fd) {
        field.grad = nullptr;
        field.hess = nullptr;
        field.smooth = false;
    }
    Vec x = to_vec(point);
    if (x.size() != frame.n)
        throw std::invalid_argument("point dimension does not match the frame");
    std::cout << jet_to_json(frame, field, x, default_char_tol(field)).dump(2) << "\n";
    return 0;
}

int cmd_named_curvature(const std::string& surface, double R, double c,
                        const std::vector<double>& point) {
    json out;
    out["surface"] = surface;
    out["R"] = R;
    if (surface == "euclidean_ball" || surface == "koranyi_ball") {
        if (point.size() != 3) throw std::invalid_argument("--point X,Y,Z required");
        Eigen::Vector3d p(point[0], point[1], point[2]);
        out["point"] = point;
        out["k0"] = surface == "euclidean_ball" ? euclidean_ball_curvature(R, p)
                                                : koranyi_ball_curvature(R, p);
    } else if (surface == "heisenberg_ball") {
        Eigen::Vector2d rz = heisenberg_ball_point(R, c);
        out["c"] = c;
        out["r"] = rz(0);
        out["z"] = rz(1);
        out["k0"] = heisenberg_ball_curvature(R, c);
    } else {
        throw std::invalid_argument("unknown surface '" + surface + "'");
    }
    out["version"] = tool_version();
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_char_scan(const std::string& geometry, const std::string& field_spec,
                  const std::vector<double>& lo, const std::vector<double>& hi, double h,
                  double char_tol, const std::string& output_dir) {
    Frame frame = load_geometry(geometry);
    ScalarField field = resolve_field_spec(field_spec, frame.n);
    if (frame.n != 3) throw std::invalid_argument("char-scan supports 3-D frames");
    if (lo.size() != 3 || hi.size() != 3) throw std::invalid_argument("--box-lo/--box-hi X,Y,Z");
    // Surface sampler: zero level of the field on a grid over the box.
    GridField gf = GridField::create(3, {lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}, h);
    gf.fill([&](const Eigen::Vector3d& p) {
        Vec x(3);
        x << p(0), p(1), p(2);
        return field.eval(x);
    });
    ZeroLevel zl = zero_level_extract(gf);
    if (zl.empty) throw std::runtime_error("field has a single sign on the box; no surface found");
    std::vector<Vec> sampler;
    sampler.reserve(zl.points.size());
    for (const auto& p : zl.points) {
        Vec x(3);
        x << p(0), p(1), p(2);
        sampler.push_back(x);
    }
    double tol = char_tol > 0 ? char_tol : default_char_tol(field);
    std::vector<Vec> found = char_scan(frame, field, sampler, tol);
    std::vector<std::vector<double>> rows;
    for (const auto& p : found) rows.push_back({p(0), p(1), p(2)});
    fs::path dir = resolve_output_dir(output_dir);
    fs::create_directories(dir);
    write_csv((dir / "characteristic_points.csv").string(), {"x", "y", "z"}, rows);
    json cfg{{"geometry", geometry}, {"field", field_spec},   {"box_lo", lo}, {"box_hi", hi},
             {"h", h},               {"char_tol", tol},       {"sampled", sampler.size()},
             {"characteristic", found.size()}};
    write_provenance(dir, cfg);
    std::cout << cfg.dump(2) << "\n";
    return 0;
}

void write_grid_csv(const fs::path& path, const GridField& g) {
    std::vector<std::vector<double>> rows;
    rows.reserve(g.values.size());
    for (int k = 0; k < g.shape[2]; ++k)
        for (int j = 0; j < g.shape[1]; ++j)
            for (int i = 0; i < g.shape[0]; ++i) {
                Eigen::Vector3d p = g.point(i, j, k);
                rows.push_back({p(0), p(1), p(2), g.at(i, j, k)});
            }
    write_csv(path.string(), {"x", "y", "z", "u"}, rows);
}

int cmd_evolve_grid(const RunConfig& cfg) {
    Frame frame = load_geometry(cfg.geometry);
    if (frame.n != 3) throw std::invalid_argument("evolve-grid supports 3-D frames");
    ScalarField field = resolve_field_spec(cfg.field, 3);
    if (cfg.box_lo.size() != 3 || cfg.box_hi.size() != 3)
        throw std::invalid_argument("--box-lo/--box-hi X,Y,Z required");
    GridField u0 = GridField::create(3, {cfg.box_lo[0], cfg.box_lo[1], cfg.box_lo[2]},
                                     {cfg.box_hi[0], cfg.box_hi[1], cfg.box_hi[2]}, cfg.h);
    u0.fill([&](const Eigen::Vector3d& p) {
        Vec x(3);
        x << p(0), p(1), p(2);
        return field.eval(x);
    });
    SchemeParams params;
    params.branch = branch_from_string(cfg.branch);
    EvolveResult res = evolve(frame, u0, cfg.T, params, cfg.snap_every);

    fs::path dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(dir);
    for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
        const GridField& g = res.snapshots[s];
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%03zu.csv", s);
        write_grid_csv(dir / name, g);
        ZeroLevel zl = zero_level_extract(g);
        std::snprintf(name, sizeof(name), "zero_level_%03zu.csv", s);
        std::vector<std::vector<double>> pts;
        for (const auto& p : zl.points) pts.push_back({p(0), p(1), p(2)});
        write_csv((dir / name).string(), {"x", "y", "z"}, pts);
    }
    json meta = cfg.to_json();
    meta["dt"] = res.dt;
    meta["s_max"] = res.s_max;
    meta["steps"] = res.steps;
    meta["snapshots"] = res.snapshots.size();
    std::ofstream mf(dir / "run.json");
    mf << meta.dump(2) << "\n";
    write_provenance(dir, cfg.to_json());
    std::cout << meta.dump(2) << "\n";
    return 0;
}

int cmd_evolve_rotational(const std::string& f0_spec, double rmax, double h, double T,
                          int snap_every, const std::string& output_dir) {
    Expr e = Expr::parse(f0_spec);
    if (e.max_var() > 0) throw std::invalid_argument("--f0 must be an expression in x1 (= r)");
    int n = static_cast<int>(std::lround(rmax / h)) + 1;
    if (n < 3) throw std::invalid_argument("grid too coarse");
    std::vector<double> f0(n);
    for (int i = 0; i < n; ++i) {
        double r = rmax * i / (n - 1);
        f0[i] = e.eval(std::span<const double>(&r, 1));
    }
    auto snaps = evolve_profile(f0, rmax, T, snap_every);
    std::vector<std::vector<double>> rows;
    for (const auto& p : snaps)
        for (std::size_t i = 0; i < p.r.size(); ++i) rows.push_back({p.time, p.r[i], p.f[i]});
    fs::path dir = resolve_output_dir(output_dir);
    fs::create_directories(dir);
    write_csv((dir / "profile.csv").string(), {"t", "r", "f"}, rows);
    json cfg{{"f0", f0_spec}, {"rmax", rmax}, {"h", h}, {"T", T}, {"snap_every", snap_every},
             {"snapshots", snaps.size()}};
    write_provenance(dir, cfg);
    std::cout << cfg.dump(2) << "\n";
    return 0;
}

EssSupMode parse_ess_sup(const std::string& s) {
    if (s == "max") return EssSupMode::max();
    if (s.rfind("quantile:", 0) == 0) return EssSupMode::quantile_mode(std::stod(s.substr(9)));
    throw std::invalid_argument("--ess-sup must be max or quantile:Q");
}

int cmd_value_function(const RunConfig& cfg, const std::vector<double>& x0v, double t0,
                       bool dump_endpoints) {
    Frame frame = load_geometry(cfg.geometry);
    ScalarField g = resolve_field_spec(cfg.terminal, frame.n);
    Vec x0 = to_vec(x0v);
    if (x0.size() != frame.n)
        throw std::invalid_argument("--x0 dimension does not match the frame");
    EssSupMode mode = parse_ess_sup(cfg.ess_sup);

    std::vector<ControlPolicy> family;
    if (cfg.policy == "feedback" || cfg.policy == "both")
        family.push_back(feedback_policy(frame, g, default_char_tol(g)));
    if (cfg.policy == "fan" || cfg.policy == "both") {
        auto fan = fan_policies(frame.m);
        family.insert(family.end(), fan.begin(), fan.end());
    }
    if (family.empty()) throw std::invalid_argument("--policy must be feedback, fan or both");

    json per_policy = json::array();
    for (const auto& pol : family) {
        json entry{{"policy", pol.label}};
        json vps = json::object();
        for (double p : cfg.p_list)
            vps[std::to_string(p)] =
                estimate_vp(frame, x0, t0, cfg.T, g, p, pol, cfg.n_paths, cfg.dt, cfg.seed);
        entry["v_p"] = vps;
        ValueEstimate single =
            estimate_v(frame, x0, t0, cfg.T, g, {pol}, cfg.n_paths, cfg.dt, cfg.seed, mode);
        entry["ess_sup"] = single.value;
        entry["stderr"] = single.stderr_best;
        per_policy.push_back(entry);
    }
    ValueEstimate best =
        estimate_v(frame, x0, t0, cfg.T, g, family, cfg.n_paths, cfg.dt, cfg.seed, mode);
    json out{{"per_policy", per_policy},
             {"value", best.value},
             {"best_policy", best.best_policy},
             {"stderr", best.stderr_best},
             {"version", tool_version()}};

    fs::path dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(dir);
    if (dump_endpoints) {
        PathEnsemble ens =
            simulate(frame, x0, t0, cfg.T, family.front(), cfg.n_paths, cfg.dt, cfg.seed);
        std::vector<std::string> header;
        for (int d = 0; d < frame.n; ++d) header.push_back("x" + std::to_string(d + 1));
        header.push_back("g");
        std::vector<std::vector<double>> rows;
        for (const auto& s : ens.states) {
            std::vector<double> row(s.data(), s.data() + s.size());
            row.push_back(g.eval(s));
            rows.push_back(row);
        }
        write_csv((dir / "endpoints.csv").string(), header, rows);
    }
    std::ofstream rf(dir / "value.json");
    rf << out.dump(2) << "\n";
    write_provenance(dir, cfg.to_json());
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_crossval(const RunConfig& cfg) {
    CrossvalReport rep = crossval(cfg);
    fs::path dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(dir);
    std::ofstream rf(dir / "crossval.json");
    rf << rep.to_json().dump(2) << "\n";
    write_provenance(dir, cfg.to_json());
    std::cout << rep.to_json().dump(2) << "\n";
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Horizontal mean curvature flow toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    RunConfig cfg;
    std::string config_file, point_str, x0_str, box_lo_str, box_hi_str, p_str;
    double t0 = 0.0, R = 1.0, c = 1.0, char_tol = -1.0;
    std::string surface = "koranyi_ball", f0_spec = "x1^2/2";
    int max_step = 4;
    bool force_fd = false, dump_endpoints = false;

    // --h is a grid-spacing option, so help is long-form only.
    app.set_help_flag("--help", "print help");
    auto add_sub = [&](const std::string& name, const std::string& desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->set_help_flag("--help", "print help");
        return sub;
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file; flags override");
        sub->add_option("--output-dir", cfg.output_dir, "output directory");
    };

    auto* geom = add_sub("geom", "frame diagnostics");
    geom->add_option("--geometry", cfg.geometry, "built-in name or frame JSON file");
    geom->add_option("--point", point_str, "probe point X,Y,...");
    geom->add_option("--max-step", max_step, "Hormander search depth");

    auto* curv = add_sub("curvature", "pointwise horizontal jet and k0");
    curv->add_option("--geometry", cfg.geometry);
    curv->add_option("--field", cfg.field)->required();
    curv->add_option("--point", point_str)->required();
    curv->add_flag("--fd", force_fd, "force the finite-difference derivative path");

    auto* named = add_sub("named-curvature", "closed-form named surfaces");
    named->add_option("--surface", surface, "euclidean_ball | koranyi_ball | heisenberg_ball");
    named->add_option("--R", R);
    named->add_option("--c", c, "heisenberg_ball geodesic parameter");
    named->add_option("--point", point_str);

    auto* scan = add_sub("char-scan", "characteristic points of a sampled surface");
    
    scan->add_option("--geometry", cfg.geometry);
    scan->add_option("--field", cfg.field)->required();
    scan->add_option("--box-lo", box_lo_str)->required();
    scan->add_option("--box-hi", box_hi_str)->required();
    scan->add_option("--h", cfg.h);
    scan->add_option("--char-tol", char_tol);
    add_common(scan);

    auto* eg = add_sub("evolve-grid", "level-set evolution on a 3-D grid");
    
    eg->add_option("--geometry", cfg.geometry);
    eg->add_option("--initial", cfg.field);
    eg->add_option("--box-lo", box_lo_str);
    eg->add_option("--box-hi", box_hi_str);
    eg->add_option("--h", cfg.h);
    eg->add_option("--T", cfg.T);
    eg->add_option("--branch", cfg.branch, "regularized | upper_envelope | lower_envelope");
    eg->add_option("--snap-every", cfg.snap_every);
    add_common(eg);

    auto* er = add_sub("evolve-rotational", "reduced 1-D rotational evolution");
    
    er->add_option("--f0", f0_spec, "initial profile, expression in x1 (= r)");
    er->add_option("--rmax", cfg.rmax);
    er->add_option("--h", cfg.h);
    er->add_option("--T", cfg.T);
    er->add_option("--snap-every", cfg.snap_every);
    add_common(er);

    auto* vf = add_sub("value-function", "stochastic value-function estimate");
    vf->add_option("--geometry", cfg.geometry);
    vf->add_option("--terminal", cfg.terminal);
    vf->add_option("--x0", x0_str);
    vf->add_option("--t0", t0);
    vf->add_option("--T", cfg.T);
    vf->add_option("--paths", cfg.n_paths);
    vf->add_option("--dt", cfg.dt);
    vf->add_option("--p", p_str, "comma-separated p list");
    vf->add_option("--policy", cfg.policy, "feedback | fan | both");
    vf->add_option("--seed", cfg.seed);
    vf->add_option("--ess-sup", cfg.ess_sup, "max | quantile:Q");
    vf->add_flag("--dump-endpoints", dump_endpoints);
    add_common(vf);

    auto* cv = add_sub("crossval", "run all three paths on one problem");
    cv->add_option("--problem", cfg.field, "vertical_plane | radial_cap | constant_cost");
    cv->add_option("--geometry", cfg.geometry);
    cv->add_option("--h", cfg.h);
    cv->add_option("--T", cfg.T);
    cv->add_option("--paths", cfg.n_paths);
    cv->add_option("--dt", cfg.dt);
    cv->add_option("--seed", cfg.seed);
    cv->add_option("--branch", cfg.branch);
    cv->add_option("--rmax", cfg.rmax);
    add_common(cv);

    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->set_help_flag("--help", "print help");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f) throw std::invalid_argument("cannot open config file " + config_file);
            json j = json::parse(f);
            RunConfig base = RunConfig::from_json(j);
            // Flags already parsed win over the file only where explicitly set;
            // simplest faithful rule: file fills fields the flags left at defaults.
            RunConfig defaults;
            auto pick = [](auto& dst, const auto& file_v, const auto& def_v) {
                if (dst == def_v) dst = file_v;
            };
            pick(cfg.geometry, base.geometry, defaults.geometry);
            pick(cfg.field, base.field, defaults.field);
            pick(cfg.terminal, base.terminal, defaults.terminal);
            pick(cfg.h, base.h, defaults.h);
            pick(cfg.T, base.T, defaults.T);
            pick(cfg.dt, base.dt, defaults.dt);
            pick(cfg.n_paths, base.n_paths, defaults.n_paths);
            pick(cfg.seed, base.seed, defaults.seed);
            pick(cfg.branch, base.branch, defaults.branch);
            pick(cfg.policy, base.policy, defaults.policy);
            pick(cfg.ess_sup, base.ess_sup, defaults.ess_sup);
            pick(cfg.snap_every, base.snap_every, defaults.snap_every);
            pick(cfg.rmax, base.rmax, defaults.rmax);
            pick(cfg.output_dir, base.output_dir, defaults.output_dir);
            if (cfg.box_lo.empty()) cfg.box_lo = base.box_lo;
            if (cfg.box_hi.empty()) cfg.box_hi = base.box_hi;
            if (!base.p_list.empty()) cfg.p_list = base.p_list;
        }
        if (!box_lo_str.empty()) cfg.box_lo = parse_list(box_lo_str);
        if (!box_hi_str.empty()) cfg.box_hi = parse_list(box_hi_str);
        if (!p_str.empty()) cfg.p_list = parse_list(p_str);
        std::vector<double> point = point_str.empty() ? std::vector<double>{} : parse_list(point_str);
        std::vector<double> x0 = x0_str.empty() ? std::vector<double>{} : parse_list(x0_str);

        if (geom->parsed()) return cmd_geom(cfg.geometry, point, max_step);
        if (curv->parsed()) return cmd_curvature(cfg.geometry, cfg.field, point, force_fd);
        if (named->parsed()) return cmd_named_curvature(surface, R, c, point);
        if (scan->parsed())
            return cmd_char_scan(cfg.geometry, cfg.field, cfg.box_lo, cfg.box_hi, cfg.h, char_tol,
                                 cfg.output_dir);
        if (eg->parsed()) return cmd_evolve_grid(cfg);
        if (er->parsed())
            return cmd_evolve_rotational(f0_spec, cfg.rmax, cfg.h, cfg.T, cfg.snap_every,
                                         cfg.output_dir);
        if (vf->parsed()) return cmd_value_function(cfg, x0, t0, dump_endpoints);
        if (cv->parsed()) return cmd_crossval(cfg);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
