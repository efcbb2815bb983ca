#include "hmcf/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>

#include "hmcf/expression.hpp"

namespace hmcf {

ScalarField parse_field(const std::string& expr_src, int dim) {
    Expr e = Expr::parse(expr_src);
    if (e.max_var() >= dim)
        throw std::invalid_argument("field expression uses x" + std::to_string(e.max_var() + 1) +
                                    " but dimension is " + std::to_string(dim));
    ScalarField f;
    f.eval = [e](const Vec& x) {
        return e.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    };
    f.smooth = e.smooth();
    if (f.smooth) {
        std::vector<Expr> g;
        std::vector<std::vector<Expr>> h(dim);
        for (int i = 0; i < dim; ++i) g.push_back(e.diff(i));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) h[i].push_back(g[i].diff(j));
        f.grad = [g, dim](const Vec& x) {
            std::span<const double> v(x.data(), static_cast<std::size_t>(x.size()));
            Vec out(dim);
            for (int i = 0; i < dim; ++i) out(i) = g[i].eval(v);
            return out;
        };
        f.hess = [h, dim](const Vec& x) {
            std::span<const double> v(x.data(), static_cast<std::size_t>(x.size()));
            Mat out(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) out(i, j) = h[i][j].eval(v);
            return out;
        };
    }
    return f;
}

namespace {

bool parse_named(const std::string& spec, const std::string& name, double& arg) {
    if (spec.rfind(name + "(", 0) != 0 || spec.back() != ')') return false;
    arg = std::stod(spec.substr(name.size() + 1, spec.size() - name.size() - 2));
    return true;
}

}  // namespace

ScalarField resolve_field_spec(const std::string& spec, int dim) {
    double R;
    if (parse_named(spec, "euclidean_ball", R)) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "x1^2+x2^2+x3^2-%.17g", R * R);
        return parse_field(buf, dim);
    }
    if (parse_named(spec, "koranyi_ball", R)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "(x1^2+x2^2)^2+16*x3^2-%.17g", R * R * R * R);
        return parse_field(buf, dim);
    }
    return parse_field(spec, dim);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << csv_string(header, rows);
}

std::string tool_version() { return "hmcf 0.1.0"; }

nlohmann::json RunConfig::to_json() const {
    return {{"geometry", geometry}, {"field", field},       {"terminal", terminal},
            {"box_lo", box_lo},     {"box_hi", box_hi},     {"h", h},
            {"T", T},               {"dt", dt},             {"n_paths", n_paths},
            {"p_list", p_list},     {"seed", seed},         {"branch", branch},
            {"policy", policy},     {"ess_sup", ess_sup},   {"snap_every", snap_every},
            {"rmax", rmax},         {"output_dir", output_dir}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    c.geometry = j.value("geometry", c.geometry);
    c.field = j.value("field", c.field);
    c.terminal = j.value("terminal", c.terminal);
    c.box_lo = j.value("box_lo", c.box_lo);
    c.box_hi = j.value("box_hi", c.box_hi);
    c.h = j.value("h", c.h);
    c.T = j.value("T", c.T);
    c.dt = j.value("dt", c.dt);
    c.n_paths = j.value("n_paths", c.n_paths);
    c.p_list = j.value("p_list", c.p_list);
    c.seed = j.value("seed", c.seed);
    c.branch = j.value("branch", c.branch);
    c.policy = j.value("policy", c.policy);
    c.ess_sup = j.value("ess_sup", c.ess_sup);
    c.snap_every = j.value("snap_every", c.snap_every);
    c.rmax = j.value("rmax", c.rmax);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

bool CrossvalReport::all_pass() const {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

nlohmann::json CrossvalReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"quantity", r.quantity},
                       {"a", r.a},
                       {"b", r.b},
                       {"discrepancy", r.discrepancy},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass}});
    return {{"rows", arr}, {"all_pass", all_pass()}, {"version", tool_version()}};
}

namespace {

CrossvalRow make_row(const std::string& q, double a, double b, double tol) {
    CrossvalRow r;
    r.quantity = q;
    r.a = a;
    r.b = b;
    r.discrepancy = std::abs(a - b);
    r.tolerance = tol;
    r.pass = r.discrepancy <= tol;
    return r;
}

CrossvalReport crossval_vertical_plane(const RunConfig& cfg) {
    CrossvalReport rep;
    Frame frame = make_geometry("heisenberg(1)");
    ScalarField g = parse_field("x1+2*x2-1", 3);

    GridField u0 = GridField::create(3, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, cfg.h);
    u0.fill([&](const Eigen::Vector3d& p) { return p(0) + 2 * p(1) - 1; });
    SchemeParams params;
    params.branch = branch_from_string(cfg.branch);
    EvolveResult res = evolve(frame, u0, cfg.T, params);
    const GridField& uT = res.snapshots.back();
    double max_change = 0.0;
    for (int k = 1; k + 1 < u0.shape[2]; ++k)
        for (int j = 1; j + 1 < u0.shape[1]; ++j)
            for (int i = 1; i + 1 < u0.shape[0]; ++i)
                max_change = std::max(max_change, std::abs(uT.at(i, j, k) - u0.at(i, j, k)));
    rep.rows.push_back(make_row("grid interior max change (stationary plane)", max_change, 0.0, 1e-3));

    Vec x0(3);
    x0 << 0.1, 0.05, 0.0;
    auto fan = fan_policies(frame.m, 16);
    std::vector<ControlPolicy> family{feedback_policy(frame, g, 1e-8)};
    family.insert(family.end(), fan.begin(), fan.end());
    ValueEstimate v = estimate_v(frame, x0, 0.0, cfg.T, g, family, cfg.n_paths, cfg.dt, cfg.seed);
    rep.rows.push_back(make_row("stochastic value vs stationary level function", v.value,
                                g.eval(x0), 1e-3 + 3 * v.stderr_best));

    double k0 = horizontal_mean_curvature(frame, g, x0);
    rep.rows.push_back(make_row("analytic curvature of the plane", k0, 0.0, 1e-10));
    return rep;
}

CrossvalReport crossval_radial_cap(const RunConfig& cfg) {
    CrossvalReport rep;
    Frame frame = make_geometry("heisenberg(1)");
    const double c0 = 0.25;
    auto f0 = [c0](double r) { return c0 + 0.5 * r * r; };

    // 1-D rotational oracle
    const double rmax = cfg.rmax;
    const int nr = 257;
    std::vector<double> prof0(nr);
    for (int i = 0; i < nr; ++i) prof0[i] = f0(rmax * i / (nr - 1));
    auto profs = evolve_profile(prof0, rmax, cfg.T);
    const RotationalProfile& pf = profs.back();

    // 3-D grid
    GridField u0 = GridField::create(3, {-0.85, -0.85, 0.1}, {0.85, 0.85, 0.8}, cfg.h);
    u0.fill([&](const Eigen::Vector3d& p) { return p(2) - f0(std::hypot(p(0), p(1))); });
    SchemeParams params;
    params.branch = branch_from_string(cfg.branch);
    EvolveResult res = evolve(frame, u0, cfg.T, params);
    const GridField& uT = res.snapshots.back();

    const double zslice = 0.48;
    double r_grid = -1;
    {
        // radius of the zero level at z = zslice along the +x ray
        for (double r = 0.8; r > 0.0; r -= cfg.h / 4) {
            if (grid_sample(uT, {r, 0, zslice}) <= 0) {
                double lo = r, hi = std::min(0.8, r + cfg.h / 4);
                for (int it = 0; it < 40; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (grid_sample(uT, {mid, 0, zslice}) <= 0 ? lo : hi) = mid;
                }
                r_grid = 0.5 * (lo + hi);
                break;
            }
        }
    }
    double r_prof = profile_radius_at_level(pf, zslice);
    rep.rows.push_back(make_row("zero-level radius, grid vs rotational", r_grid, r_prof, 2 * cfg.h));

    // axis speed from the rotational solver
    auto early = evolve_profile(prof0, rmax, std::min(0.01, cfg.T));
    double speed = (early.back().f[0] - prof0[0]) / early.back().time;
    rep.rows.push_back(make_row("axis speed vs f''(0)", speed, 1.0, 0.1));

    // stochastic estimate vs grid solution at a probe
    ScalarField g;
    g.eval = [f0](const Vec& x) { return x(2) - f0(std::hypot(x(0), x(1))); };
    g.grad = [](const Vec& x) {
        Vec d(3);
        d << -x(0), -x(1), 1.0;
        return d;
    };
    g.hess = [](const Vec&) {
        Mat H = Mat::Zero(3, 3);
        H(0, 0) = H(1, 1) = -1.0;
        return H;
    };
    Vec probe(3);
    probe << 0.4, 0.0, 0.4;
    std::vector<ControlPolicy> family{feedback_policy(frame, g, 1e-8)};
    ValueEstimate v =
        estimate_v(frame, probe, 0.0, cfg.T, g, family, cfg.n_paths, cfg.dt, cfg.seed);
    double pde = grid_sample(uT, {probe(0), probe(1), probe(2)});
    rep.rows.push_back(make_row("stochastic value vs grid solution", v.value, pde,
                                3 * (v.stderr_best + cfg.h)));
    return rep;
}

CrossvalReport crossval_constant_cost(const RunConfig& cfg) {
    CrossvalReport rep;
    Frame frame = make_geometry(cfg.geometry);
    const double c = 0.7;
    ScalarField g;
    g.eval = [c](const Vec&) { return c; };
    g.grad = [&frame, c](const Vec&) { return Vec::Zero(frame.n); };
    g.hess = [&frame](const Vec&) { return Mat::Zero(frame.n, frame.n); };
    Vec x0 = Vec::Zero(frame.n);
    auto family = fan_policies(frame.m, 8);
    ValueEstimate v = estimate_v(frame, x0, 0.0, cfg.T, g, family, cfg.n_paths, cfg.dt, cfg.seed);
    rep.rows.push_back(make_row("stochastic value of a constant cost", v.value, c, 0.0));
    if (frame.n == 3) {
        GridField u0 = GridField::create(3, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, cfg.h);
        u0.fill([c](const Eigen::Vector3d&) { return c; });
        SchemeParams params;
        EvolveResult res = evolve(frame, u0, cfg.T, params);
        double dev = 0.0;
        for (double vv : res.snapshots.back().values) dev = std::max(dev, std::abs(vv - c));
        rep.rows.push_back(make_row("grid solution of a constant field", c + dev, c, 1e-12));
    }
    return rep;
}

}  // namespace

CrossvalReport crossval(const RunConfig& config) {
    if (config.field == "vertical_plane") return crossval_vertical_plane(config);
    if (config.field == "radial_cap") return crossval_radial_cap(config);
    if (config.field == "constant_cost") return crossval_constant_cost(config);
    throw std::invalid_argument("crossval: unknown problem '" + config.field +
                                "' (expected vertical_plane, radial_cap or constant_cost)");
}

}  // namespace hmcf
