#include "hmcf/geometry.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>

#include "hmcf/expression.hpp"

namespace hmcf {

Mat Frame::eval_sigma(const Vec& x) const {
    Mat s = sigma(x);
    if (s.rows() != m || s.cols() != n)
        throw std::runtime_error("sigma shape mismatch for frame " + label);
    if (!s.allFinite())
        throw std::runtime_error("non-finite sigma output for frame " + label);
    return s;
}

Vec Frame::nabla_fd(int i, int j, const Vec& x) const {
    // nabla_{X_i} X_j = D X_j(x) X_i(x), Jacobian by central differences.
    const Vec xi = eval_sigma(x).row(i).transpose();
    Vec out = Vec::Zero(n);
    Vec p = x;
    for (int k = 0; k < n; ++k) {
        p(k) = x(k) + fd_step;
        Vec rp = sigma(p).row(j).transpose();
        p(k) = x(k) - fd_step;
        Vec rm = sigma(p).row(j).transpose();
        p(k) = x(k);
        out += (rp - rm) / (2 * fd_step) * xi(k);
    }
    return out;
}

Vec Frame::eval_nabla(int i, int j, const Vec& x) const {
    if (nabla) return nabla(i, j, x);
    return nabla_fd(i, j, x);
}

Vec lie_bracket(const Frame& frame, int i, int j, const Vec& x) {
    return frame.eval_nabla(i, j, x) - frame.eval_nabla(j, i, x);
}

// ---- built-in frames ----

Frame make_euclidean(int n) {
    if (n < 1) throw std::invalid_argument("euclidean: n must be positive");
    Frame f;
    f.n = n;
    f.m = n;
    f.label = "euclidean(" + std::to_string(n) + ")";
    f.sigma = [n](const Vec&) { return Mat::Identity(n, n); };
    f.nabla = [n](int, int, const Vec&) { return Vec::Zero(n); };
    return f;
}

Frame make_heisenberg(int k) {
    if (k < 1) throw std::invalid_argument("heisenberg: k must be positive");
    Frame f;
    const int n = 2 * k + 1;
    const int m = 2 * k;
    f.n = n;
    f.m = m;
    f.label = "heisenberg(" + std::to_string(k) + ")";
    // Rows: X_i = e_i - (y_i/2) e_z, Y_i = e_{k+i} + (x_i/2) e_z.
    f.sigma = [n, m, k](const Vec& x) {
        Mat s = Mat::Zero(m, n);
        for (int i = 0; i < k; ++i) {
            s(i, i) = 1.0;
            s(i, n - 1) = -x(k + i) / 2.0;
            s(k + i, k + i) = 1.0;
            s(k + i, n - 1) = x(i) / 2.0;
        }
        return s;
    };
    // Only the z-component of X_j is non-constant, so
    // nabla_V X_j = (0,...,0, -V_{k+j}/2) and nabla_V Y_j = (0,...,0, V_j/2).
    auto sig = f.sigma;
    f.nabla = [n, k, sig](int i, int j, const Vec& x) {
        Vec v = sig(x).row(i).transpose();
        Vec out = Vec::Zero(n);
        if (j < k)
            out(n - 1) = -v(k + j) / 2.0;
        else
            out(n - 1) = v(j - k) / 2.0;
        return out;
    };
    return f;
}

Frame make_grusin() {
    Frame f;
    f.n = 2;
    f.m = 2;
    f.label = "grusin";
    f.sigma = [](const Vec& x) {
        Mat s = Mat::Zero(2, 2);
        s(0, 0) = 1.0;
        s(1, 1) = x(0);
        return s;
    };
    auto sig = f.sigma;
    f.nabla = [sig](int i, int j, const Vec& x) {
        Vec out = Vec::Zero(2);
        if (j == 1) out(1) = sig(x)(i, 0);  // D X_2 = [[0,0],[1,0]]
        return out;
    };
    return f;
}

Frame make_rototranslation() {
    Frame f;
    f.n = 3;
    f.m = 2;
    f.label = "rototranslation";
    f.sigma = [](const Vec& x) {
        Mat s = Mat::Zero(2, 3);
        s(0, 0) = std::cos(x(2));
        s(0, 1) = std::sin(x(2));
        s(1, 2) = 1.0;
        return s;
    };
    auto sig = f.sigma;
    f.nabla = [sig](int i, int j, const Vec& x) {
        Vec out = Vec::Zero(3);
        if (j == 0) {
            double vtheta = sig(x)(i, 2);
            out(0) = -std::sin(x(2)) * vtheta;
            out(1) = std::cos(x(2)) * vtheta;
        }
        return out;
    };
    return f;
}

namespace {

void check_probe(const Frame& f) {
    if (f.m > f.n) throw std::invalid_argument("frame has m > n");
    Vec probe = Vec::Constant(f.n, 0.1);
    Mat s = f.eval_sigma(probe);  // throws on shape mismatch / non-finite
    (void)s;
}

}  // namespace

Frame make_geometry(const std::string& spec) {
    Frame f;
    auto paren = spec.find('(');
    std::string name = spec.substr(0, paren);
    int arg = 0;
    if (paren != std::string::npos) {
        auto close = spec.find(')', paren);
        if (close == std::string::npos)
            throw std::invalid_argument("bad geometry spec '" + spec + "'");
        arg = std::stoi(spec.substr(paren + 1, close - paren - 1));
    }
    if (name == "euclidean")
        f = make_euclidean(paren == std::string::npos ? 2 : arg);
    else if (name == "heisenberg")
        f = make_heisenberg(paren == std::string::npos ? 1 : arg);
    else if (name == "grusin")
        f = make_grusin();
    else if (name == "rototranslation")
        f = make_rototranslation();
    else
        throw std::invalid_argument("unknown geometry '" + spec + "'");
    check_probe(f);
    return f;
}

Frame frame_from_json_text(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text);
    Frame f;
    f.n = j.at("n").get<int>();
    f.m = j.at("m").get<int>();
    if (f.n < 1 || f.m < 1 || f.m > f.n)
        throw std::invalid_argument("custom frame: need 1 <= m <= n");
    f.label = j.value("label", std::string("custom"));

    const auto& rows = j.at("rows");
    if (static_cast<int>(rows.size()) != f.m)
        throw std::invalid_argument("custom frame: expected m rows");
    std::vector<std::vector<Expr>> exprs(f.m);
    std::vector<std::vector<std::vector<Expr>>> jac(f.m);  // jac[i][c][k] = d row_i[c] / d x_k
    bool smooth = true;
    for (int i = 0; i < f.m; ++i) {
        if (static_cast<int>(rows[i].size()) != f.n)
            throw std::invalid_argument("custom frame: expected n entries per row");
        exprs[i].reserve(f.n);
        jac[i].resize(f.n);
        for (int c = 0; c < f.n; ++c) {
            Expr e = Expr::parse(rows[i][c].get<std::string>());
            if (e.max_var() >= f.n)
                throw std::invalid_argument("custom frame: row expression uses variable beyond x" +
                                            std::to_string(f.n));
            smooth = smooth && e.smooth();
            if (smooth)
                for (int k = 0; k < f.n; ++k) jac[i][c].push_back(e.diff(k));
            exprs[i].push_back(std::move(e));
        }
    }
    const int n = f.n, m = f.m;
    f.sigma = [exprs, n, m](const Vec& x) {
        Mat s(m, n);
        std::span<const double> v(x.data(), static_cast<std::size_t>(x.size()));
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < n; ++c) s(i, c) = exprs[i][c].eval(v);
        return s;
    };
    if (smooth) {
        auto sig = f.sigma;
        f.nabla = [jac, sig, n](int i, int j, const Vec& x) {
            std::span<const double> v(x.data(), static_cast<std::size_t>(x.size()));
            Vec xi = sig(x).row(i).transpose();
            Vec out = Vec::Zero(n);
            for (int c = 0; c < n; ++c)
                for (int k = 0; k < n; ++k) out(c) += jac[j][c][k].eval(v) * xi(k);
            return out;
        };
    }
    check_probe(f);
    return f;
}

// ---- Hormander step ----

namespace {

using VField = std::function<Vec(const Vec&)>;

Vec numeric_bracket(const VField& X, const VField& Y, const Vec& x, double h) {
    // [X,Y](x) = DY(x) X(x) - DX(x) Y(x)
    const int n = static_cast<int>(x.size());
    Vec xv = X(x), yv = Y(x);
    Vec out = Vec::Zero(n);
    Vec p = x;
    for (int k = 0; k < n; ++k) {
        p(k) = x(k) + h;
        Vec yp = Y(p), xp = X(p);
        p(k) = x(k) - h;
        Vec ym = Y(p), xm = X(p);
        p(k) = x(k);
        out += (yp - ym) / (2 * h) * xv(k) - (xp - xm) / (2 * h) * yv(k);
    }
    return out;
}

int numeric_rank(const std::vector<Vec>& fields, const Vec& x, int n, double rel_tol) {
    Mat A(static_cast<int>(fields.size()), n);
    for (std::size_t i = 0; i < fields.size(); ++i) A.row(static_cast<int>(i)) = fields[i];
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++r;
    return r;
}

}  // namespace

HormanderResult hormander_step(const Frame& frame, const Vec& x, int max_step) {
    if (max_step < 1) throw std::invalid_argument("hormander_step: max_step >= 1 required");
    const double rel_tol = 1e-8;
    const int n = frame.n;
    std::vector<std::vector<VField>> levels;  // levels[k] = L^{k+1}
    std::vector<VField> base;
    for (int i = 0; i < frame.m; ++i)
        base.push_back([&frame, i](const Vec& p) { return Vec(frame.eval_sigma(p).row(i).transpose()); });
    levels.push_back(base);

    std::vector<Vec> span_vectors;
    for (int step = 1; step <= max_step; ++step) {
        if (step > 1) {
            // L^k: brackets of fields from levels h, l with h + l = k
            std::vector<VField> next;
            for (int h = 1; h <= step - 1; ++h) {
                int l = step - h;
                if (l < 1 || l > static_cast<int>(levels.size())) continue;
                for (const auto& A : levels[h - 1])
                    for (const auto& B : levels[l - 1]) {
                        double fd = frame.fd_step;
                        next.push_back([A, B, fd](const Vec& p) { return numeric_bracket(A, B, p, fd); });
                    }
            }
            levels.push_back(next);
        }
        for (const auto& F : levels.back()) {
            Vec v = F(x);
            if (!v.allFinite()) return {false, step, "non-finite bracket value"};
            span_vectors.push_back(v);
        }
        if (numeric_rank(span_vectors, x, n, rel_tol) == n) return {true, step, ""};
    }
    return {false, max_step, "span did not reach full rank within max_step"};
}

// ---- Heisenberg H^1 group structure ----

H1Point h1_mul(const H1Point& p, const H1Point& q) {
    return {p(0) + q(0), p(1) + q(1), p(2) + q(2) + (p(0) * q(1) - p(1) * q(0)) / 2.0};
}

H1Point h1_inverse(const H1Point& p) { return -p; }

H1Point h1_dilation(double lambda, const H1Point& p) {
    if (lambda <= 0) throw std::invalid_argument("dilation: lambda must be positive");
    return {lambda * p(0), lambda * p(1), lambda * lambda * p(2)};
}

double h1_homogeneous_norm(const H1Point& p) {
    double r2 = p(0) * p(0) + p(1) * p(1);
    return std::pow(r2 * r2 + p(2) * p(2), 0.25);
}

Eigen::Matrix3d h1_left_translation_diff(const H1Point& a) {
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 0) = -a(1) / 2.0;
    d(2, 1) = a(0) / 2.0;
    return d;
}

}  // namespace hmcf
