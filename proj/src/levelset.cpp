#include "hmcf/levelset.hpp"

#include <cmath>
#include <limits>

namespace hmcf {

namespace {

// Small fixed-capacity matrices keep the node kernel allocation-free.
constexpr int kMaxRank = 4;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRank, kMaxRank>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxRank, 1>;
using SigMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxRank, 3>;

double branch_rhs_impl(const SmallMat& S, const SmallVec& hg, Branch branch, double char_tol,
                       double epsilon) {
    const double tr = S.trace();
    const double norm = hg.norm();
    if (branch == Branch::regularized) {
        const double denom2 = norm * norm + epsilon * epsilon;
        if (denom2 == 0.0) return tr;
        SmallVec q = hg / std::sqrt(denom2);
        return tr - q.dot(S * q);
    }
    if (norm > char_tol) {
        SmallVec q = hg / norm;
        return tr - q.dot(S * q);
    }
    Eigen::SelfAdjointEigenSolver<SmallMat> es(S, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    double lam = branch == Branch::upper_envelope ? ev(0) : ev(ev.size() - 1);
    return tr - lam;
}

}  // namespace

double envelope_rhs(const HorizontalJet& j, Branch branch, double char_tol, double epsilon) {
    SmallMat S = j.horiz_hess;
    SmallVec hg = j.horiz_grad;
    return branch_rhs_impl(S, hg, branch, char_tol, epsilon);
}

Branch branch_from_string(const std::string& s) {
    if (s == "regularized") return Branch::regularized;
    if (s == "upper_envelope" || s == "upper") return Branch::upper_envelope;
    if (s == "lower_envelope" || s == "lower") return Branch::lower_envelope;
    throw std::invalid_argument("unknown branch '" + s + "'");
}

std::string to_string(Branch b) {
    switch (b) {
        case Branch::regularized: return "regularized";
        case Branch::upper_envelope: return "upper_envelope";
        case Branch::lower_envelope: return "lower_envelope";
    }
    return "?";
}

GridField GridField::create(int dim, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                            double h) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("GridField: dim must be 2 or 3");
    if (h <= 0) throw std::invalid_argument("GridField: spacing must be positive");
    GridField g;
    g.dim = dim;
    g.origin = lo;
    for (int d = 0; d < 3; ++d) {
        if (d < dim) {
            int cells = static_cast<int>(std::round((hi(d) - lo(d)) / h));
            if (cells < 2) throw std::invalid_argument("GridField: box too small for spacing");
            g.shape[d] = cells + 1;
            g.spacing(d) = (hi(d) - lo(d)) / cells;
        } else {
            g.shape[d] = 1;
            g.spacing(d) = 1.0;
            g.origin(d) = 0.0;
        }
    }
    g.values.assign(static_cast<std::size_t>(g.shape[0]) * g.shape[1] * g.shape[2], 0.0);
    return g;
}

void GridField::fill(const std::function<double(const Eigen::Vector3d&)>& f) {
    for (int k = 0; k < shape[2]; ++k)
        for (int j = 0; j < shape[1]; ++j)
            for (int i = 0; i < shape[0]; ++i) values[index(i, j, k)] = f(point(i, j, k));
}

double GridField::min_spacing() const {
    double h = spacing(0);
    for (int d = 1; d < dim; ++d) h = std::min(h, spacing(d));
    return h;
}

namespace {

// Frame coefficients cached per node: sigma rows and the symmetrized
// derivative vectors c_ab = nabla_{X_a}X_b + nabla_{X_b}X_a (upper triangle).
struct NodeGeo {
    std::vector<double> sig;   // nodes * m * 3
    std::vector<double> csum;  // nodes * pairs * 3
    int m = 0;
    int pairs = 0;
    bool has_first_order = false;
};

NodeGeo precompute_geo(const Frame& frame, const GridField& g) {
    if (frame.n != g.dim)
        throw std::invalid_argument("evolve: frame ambient dimension must match grid dim");
    if (frame.m > kMaxRank) throw std::invalid_argument("evolve: horizontal rank too large");
    NodeGeo geo;
    geo.m = frame.m;
    geo.pairs = frame.m * (frame.m + 1) / 2;
    const std::size_t nodes = g.values.size();
    geo.sig.assign(nodes * geo.m * 3, 0.0);
    geo.csum.assign(nodes * geo.pairs * 3, 0.0);
    Vec x(frame.n);
    for (int k = 0; k < g.shape[2]; ++k)
        for (int j = 0; j < g.shape[1]; ++j)
            for (int i = 0; i < g.shape[0]; ++i) {
                Eigen::Vector3d p = g.point(i, j, k);
                for (int d = 0; d < frame.n; ++d) x(d) = p(d);
                std::size_t idx = g.index(i, j, k);
                Mat s = frame.eval_sigma(x);
                for (int a = 0; a < geo.m; ++a)
                    for (int d = 0; d < frame.n; ++d)
                        geo.sig[(idx * geo.m + a) * 3 + d] = s(a, d);
                int pr = 0;
                for (int a = 0; a < geo.m; ++a)
                    for (int b = a; b < geo.m; ++b, ++pr) {
                        Vec c = frame.eval_nabla(a, b, x) + frame.eval_nabla(b, a, x);
                        for (int d = 0; d < frame.n; ++d) {
                            double v = c(d);
                            geo.csum[(idx * geo.pairs + pr) * 3 + d] = v;
                            if (v != 0.0) geo.has_first_order = true;
                        }
                    }
            }
    return geo;
}

struct StepContext {
    const GridField* in;
    GridField* out;
    const NodeGeo* geo;
    SchemeParams params;
    double dt;
    double epsilon;
};

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

inline double node_update(const StepContext& c, int i, int j, int k) {
    const GridField& g = *c.in;
    const int m = c.geo->m;
    const int dim = g.dim;
    const std::size_t idx = g.index(i, j, k);
    const double u0 = g.values[idx];

    const int ijk[3] = {i, j, k};
    const int nmax[3] = {g.shape[0] - 1, g.shape[1] - 1, g.shape[2] - 1};
    auto val = [&](int di, int dj, int dk) {
        return g.values[g.index(clampi(i + di, nmax[0]), clampi(j + dj, nmax[1]),
                                clampi(k + dk, nmax[2]))];
    };
    (void)ijk;

    double Du[3] = {0, 0, 0};
    double H[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (int d = 0; d < dim; ++d) {
        const double h = g.spacing(d);
        const int off[3] = {d == 0, d == 1, d == 2};
        const double up = val(off[0], off[1], off[2]);
        const double um = val(-off[0], -off[1], -off[2]);
        Du[d] = (up - um) / (2 * h);
        H[d][d] = (up - 2 * u0 + um) / (h * h);
    }
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) {
            int da[3] = {a == 0, a == 1, a == 2};
            int db[3] = {b == 0, b == 1, b == 2};
            const double hpp = val(da[0] + db[0], da[1] + db[1], da[2] + db[2]);
            const double hpm = val(da[0] - db[0], da[1] - db[1], da[2] - db[2]);
            const double hmp = val(db[0] - da[0], db[1] - da[1], db[2] - da[2]);
            const double hmm = val(-da[0] - db[0], -da[1] - db[1], -da[2] - db[2]);
            H[a][b] = H[b][a] = (hpp - hpm - hmp + hmm) / (4 * g.spacing(a) * g.spacing(b));
        }

    const double* sig = &c.geo->sig[idx * m * 3];
    const double* csum = &c.geo->csum[idx * c.geo->pairs * 3];

    SmallVec hg(m);
    for (int a = 0; a < m; ++a) {
        double s = 0;
        for (int d = 0; d < dim; ++d) s += sig[a * 3 + d] * Du[d];
        hg(a) = s;
    }
    SmallMat S(m, m);
    int pr = 0;
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b, ++pr) {
            double s = 0;
            for (int d1 = 0; d1 < dim; ++d1) {
                double hs = 0;
                for (int d2 = 0; d2 < dim; ++d2) hs += H[d1][d2] * sig[b * 3 + d2];
                s += sig[a * 3 + d1] * hs;
            }
            double corr = 0;
            for (int d = 0; d < dim; ++d) corr += csum[pr * 3 + d] * Du[d];
            s += 0.5 * corr;
            S(a, b) = S(b, a) = s;
        }

    const double rhs = branch_rhs_impl(S, hg, c.params.branch, c.params.char_tol, c.epsilon);
    return u0 + c.dt * rhs;
}

void run_step(const StepContext& c, bool parallel) {
    // The outermost node layer is held fixed (the data are constant outside a
    // compact set, so the boundary value is the constant extension); interior
    // nodes always see full centered stencils.
    const auto& sh = c.in->shape;
    auto is_boundary = [&](int i, int j, int k) {
        if (i == 0 || i == sh[0] - 1) return true;
        if (j == 0 || j == sh[1] - 1) return true;
        if (sh[2] > 1 && (k == 0 || k == sh[2] - 1)) return true;
        return false;
    };
#pragma omp parallel for collapse(2) if (parallel)
    for (int k = 0; k < sh[2]; ++k)
        for (int j = 0; j < sh[1]; ++j)
            for (int i = 0; i < sh[0]; ++i) {
                std::size_t idx = c.out->index(i, j, k);
                c.out->values[idx] = is_boundary(i, j, k) ? c.in->values[idx]
                                                          : node_update(c, i, j, k);
            }
}

double stability_bound(const Frame& frame, const GridField& g, const NodeGeo& geo) {
    // S_max = max over nodes of lambda_max(sigma sigma^T), plus a bound on the
    // first-order (correction) contribution scaled to the grid spacing.
    double smax = 0.0;
    double cmax = 0.0;
    const std::size_t nodes = g.values.size();
    const int m = geo.m;
    for (std::size_t idx = 0; idx < nodes; ++idx) {
        SigMat s(m, 3);
        for (int a = 0; a < m; ++a)
            for (int d = 0; d < 3; ++d) s(a, d) = geo.sig[(idx * m + a) * 3 + d];
        SmallMat ss = s * s.transpose();
        Eigen::SelfAdjointEigenSolver<SmallMat> es(ss, Eigen::EigenvaluesOnly);
        smax = std::max(smax, es.eigenvalues()(m - 1));
        double csum = 0.0;
        for (int pr = 0; pr < geo.pairs; ++pr) {
            double n2 = 0;
            for (int d = 0; d < 3; ++d) {
                double v = geo.csum[(idx * geo.pairs + pr) * 3 + d];
                n2 += v * v;
            }
            csum += 0.5 * std::sqrt(n2);
        }
        cmax = std::max(cmax, csum);
    }
    (void)frame;
    return smax + cmax * g.min_spacing();
}

}  // namespace

void evolve_step(const Frame& frame, const GridField& in, GridField& out, double dt,
                 const SchemeParams& params, bool parallel) {
    NodeGeo geo = precompute_geo(frame, in);
    StepContext ctx{&in, &out, &geo, params, dt,
                    params.epsilon > 0 ? params.epsilon : in.min_spacing()};
    run_step(ctx, parallel);
}

EvolveResult evolve(const Frame& frame, const GridField& initial, double T,
                    const SchemeParams& params, int snap_every, bool parallel) {
    if (T <= 0) throw std::invalid_argument("evolve: T must be positive");
    if (params.cfl <= 0 || params.cfl >= 1)
        throw std::invalid_argument("evolve: cfl must lie in (0,1)");

    NodeGeo geo = precompute_geo(frame, initial);
    const double s_max = stability_bound(frame, initial, geo);
    const double h = initial.min_spacing();
    const double dt = params.cfl * h * h / (2.0 * initial.dim * std::max(s_max, 1e-12));
    const int steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-12)));

    EvolveResult res;
    res.dt = dt;
    res.s_max = s_max;
    res.steps = steps;
    res.snapshots.push_back(initial);

    GridField cur = initial;
    GridField next = initial;
    StepContext ctx{&cur, &next, &geo, params, dt,
                    params.epsilon > 0 ? params.epsilon : h};
    for (int s = 0; s < steps; ++s) {
        run_step(ctx, parallel);
        next.time = cur.time + dt;
        std::swap(cur.values, next.values);
        cur.time = next.time;
        for (std::size_t idx = 0; idx < cur.values.size(); ++idx)
            if (!std::isfinite(cur.values[idx])) {
                int i = static_cast<int>(idx % cur.shape[0]);
                int rem = static_cast<int>(idx / cur.shape[0]);
                int j = rem % cur.shape[1];
                int k = rem / cur.shape[1];
                throw BlowupError(cur.point(i, j, k), cur.time);
            }
        const bool last = s + 1 == steps;
        if (last || (snap_every > 0 && (s + 1) % snap_every == 0)) res.snapshots.push_back(cur);
    }
    return res;
}

ZeroLevel zero_level_extract(const GridField& g) {
    ZeroLevel out;
    bool has_pos = false, has_neg = false;
    for (double v : g.values) {
        has_pos = has_pos || v > 0;
        has_neg = has_neg || v < 0;
    }
    if (!(has_pos && has_neg)) {
        out.empty = true;
        return out;
    }
    auto edge = [&](int i, int j, int k, int d) {
        const double a = g.at(i, j, k);
        int i2 = i + (d == 0), j2 = j + (d == 1), k2 = k + (d == 2);
        const double b = g.at(i2, j2, k2);
        if ((a > 0 && b > 0) || (a < 0 && b < 0)) return;
        if (a == 0 && b == 0) return;
        double t = a / (a - b);
        Eigen::Vector3d p = g.point(i, j, k);
        p(d) += t * g.spacing(d);
        out.points.push_back(p);
    };
    for (int k = 0; k < g.shape[2]; ++k)
        for (int j = 0; j < g.shape[1]; ++j)
            for (int i = 0; i < g.shape[0]; ++i) {
                if (i + 1 < g.shape[0]) edge(i, j, k, 0);
                if (j + 1 < g.shape[1]) edge(i, j, k, 1);
                if (k + 1 < g.shape[2]) edge(i, j, k, 2);
            }
    return out;
}

double grid_sample(const GridField& g, const Eigen::Vector3d& p) {
    int base[3];
    double frac[3];
    for (int d = 0; d < 3; ++d) {
        if (g.shape[d] == 1) {
            base[d] = 0;
            frac[d] = 0;
            continue;
        }
        double s = (p(d) - g.origin(d)) / g.spacing(d);
        s = std::max(0.0, std::min(s, static_cast<double>(g.shape[d] - 1)));
        base[d] = std::min(static_cast<int>(s), g.shape[d] - 2);
        frac[d] = s - base[d];
    }
    double acc = 0.0;
    for (int dk = 0; dk < (g.shape[2] > 1 ? 2 : 1); ++dk)
        for (int dj = 0; dj < (g.shape[1] > 1 ? 2 : 1); ++dj)
            for (int di = 0; di < (g.shape[0] > 1 ? 2 : 1); ++di) {
                double w = (di ? frac[0] : 1 - frac[0]) * (dj ? frac[1] : 1 - frac[1]) *
                           (dk ? frac[2] : 1 - frac[2]);
                acc += w * g.at(base[0] + di, base[1] + dj, base[2] + dk);
            }
    return acc;
}

}  // namespace hmcf
