#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hmcf/geometry.hpp"
#include "hmcf/sde.hpp"

using namespace hmcf;

namespace {

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}
Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec random_unit(int m, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Vec a(m);
    do {
        for (int i = 0; i < m; ++i) a(i) = g(rng);
    } while (a.norm() < 1e-6);
    a.normalize();
    return a;
}

ScalarField const_field(double c, int n) {
    ScalarField f;
    f.eval = [c](const Vec&) { return c; };
    f.grad = [n](const Vec&) { return Vec(Vec::Zero(n)); };
    f.hess = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
    return f;
}

}  // namespace

TEST_CASE("control matrices are admissible projections") {
    std::mt19937 rng(1);
    for (int m : {2, 3}) {
        for (int t = 0; t < 30; ++t) {
            ControlMatrix c = ControlMatrix::projection(random_unit(m, rng));
            Mat nu = c.nu();
            CHECK((nu - nu.transpose()).norm() < 1e-12);
            CHECK((nu * nu - nu).norm() < 1e-12);  // idempotent
            Eigen::SelfAdjointEigenSolver<Mat> es(nu);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);  // nu >= 0
            Mat rest = Mat::Identity(m, m) - nu * nu;
            Eigen::SelfAdjointEigenSolver<Mat> es2(rest);
            CHECK(es2.eigenvalues().minCoeff() >= -1e-10);  // I - nu^2 >= 0
            CHECK(rest.trace() == doctest::Approx(1).epsilon(1e-10));
            // apply() matches the matrix product
            Vec w(m);
            for (int i = 0; i < m; ++i) w(i) = std::sin(i + t + 1.0);
            CHECK((c.apply(w) - nu * w).norm() < 1e-12);
        }
    }
    CHECK_THROWS_AS(ControlMatrix::projection(vec2(1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(ControlMatrix::projection(vec2(0, 0)), std::invalid_argument);
    CHECK(ControlMatrix::unconstrained(3).nu().isApprox(Mat::Identity(3, 3)));
}

TEST_CASE("drift vanishes for heisenberg and euclidean") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k : {1, 2}) {
        Frame h = make_heisenberg(k);
        for (int t = 0; t < 100; ++t) {
            Vec x(h.n);
            for (int i = 0; i < h.n; ++i) x(i) = u(rng);
            ControlMatrix nu = t % 2 ? ControlMatrix::projection(random_unit(h.m, rng))
                                     : ControlMatrix::unconstrained(h.m);
            CHECK(drift_vector(h, nu, x).norm() < 1e-12);
        }
    }
    Frame eu = make_euclidean(3);
    CHECK(drift_vector(eu, ControlMatrix::unconstrained(3), vec3(1, -2, 0.5)).norm() < 1e-12);
}

TEST_CASE("grusin drift against the brute-force oracle") {
    // The Ito drift is sum_{i,j} (nu^2)_{ij} nabla_{X_i}X_j.  For nu = I the
    // off-diagonal weights vanish, so only nabla_{X_i}X_i contribute.
    Frame gr = make_grusin();
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 50; ++t) {
        Vec x = vec2(u(rng), u(rng));
        ControlMatrix nu = t % 2 ? ControlMatrix::projection(random_unit(2, rng))
                                 : ControlMatrix::unconstrained(2);
        Mat nu2 = nu.nu_squared();
        Vec oracle = Vec::Zero(2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) oracle += nu2(i, j) * gr.eval_nabla(i, j, x);
        CHECK((drift_vector(gr, nu, x) - oracle).norm() < 1e-12);
    }
    // nu = I at (1,0): only the diagonal survives and both nabla_{X_i}X_i are 0.
    CHECK(drift_vector(gr, ControlMatrix::unconstrained(2), vec2(1, 0)).norm() < 1e-12);
}

TEST_CASE("ito step closed forms") {
    Frame h1 = make_heisenberg(1);
    Vec x = vec3(0.4, -0.7, 0.2);
    CHECK((step_ito(h1, x, ControlMatrix::unconstrained(2), 0.01, vec2(0, 0)) - x).norm() < 1e-15);

    Frame eu = make_euclidean(2);
    Vec y = vec2(1, 2);
    Vec e1 = vec2(1, 0);
    Vec out = step_ito(eu, y, ControlMatrix::projection(e1), 0.01, vec2(0.3, 0.5));
    CHECK(out(0) == doctest::Approx(1.0));  // projection kills the first component
    CHECK(out(1) == doctest::Approx(2.0 + std::sqrt(2.0) * 0.5));

    Vec origin = vec3(0, 0, 0);
    Vec o = step_ito(h1, origin, ControlMatrix::unconstrained(2), 0.01, vec2(0.2, -0.1));
    CHECK(o(0) == doctest::Approx(std::sqrt(2.0) * 0.2));
    CHECK(o(1) == doctest::Approx(std::sqrt(2.0) * -0.1));
    CHECK(o(2) == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("simulation is deterministic and scheduling independent") {
    Frame h1 = make_heisenberg(1);
    Vec x0 = vec3(0.1, 0.2, 0);
    ControlPolicy pol = unconstrained_policy(2);
    PathEnsemble a = simulate(h1, x0, 0, 0.2, pol, 64, 1e-2, 99, false);
    PathEnsemble b = simulate(h1, x0, 0, 0.2, pol, 64, 1e-2, 99, true);
    PathEnsemble c = simulate(h1, x0, 0, 0.2, pol, 64, 1e-2, 99, true);
    for (int p = 0; p < 64; ++p) {
        CHECK(a.states[p] == b.states[p]);
        CHECK(b.states[p] == c.states[p]);
    }
    CHECK_THROWS_AS(simulate(h1, x0, 0.5, 0.2, pol, 4, 1e-2, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate(h1, x0, 0, 0.2, pol, 4, -1e-2, 1), std::invalid_argument);
}

TEST_CASE("martingale property and variance scaling") {
    Frame h1 = make_heisenberg(1);
    const int n = 20000;
    const double T = 0.25;
    PathEnsemble e = simulate(h1, vec3(0, 0, 0), 0, T, unconstrained_policy(2), n, 2e-3, 7);
    Vec mean = Vec::Zero(3);
    for (const auto& s : e.states) mean += s;
    mean /= n;
    Vec var = Vec::Zero(3);
    for (const auto& s : e.states)
        for (int d = 0; d < 3; ++d) var(d) += (s(d) - mean(d)) * (s(d) - mean(d));
    var /= n - 1;
    for (int d = 0; d < 3; ++d) {
        double stderr_d = std::sqrt(var(d) / n);
        CHECK(std::abs(mean(d)) <= 4 * stderr_d + 1e-12);
    }
    // horizontal variance = 2T per direction (sqrt(2) scaling)
    for (int d = 0; d < 2; ++d)
        CHECK(var(d) == doctest::Approx(2 * T).epsilon(0.1));
}

TEST_CASE("quadratic variation of the horizontal increments") {
    Frame h1 = make_heisenberg(1);
    PathRng rng(123, 0);
    std::vector<std::pair<double, Vec>> traj;
    simulate_path(h1, vec3(0, 0, 0), 0, 1.0, unconstrained_policy(2), 1e-3, rng, &traj);
    double acc = 0;
    int cnt = 0;
    for (std::size_t s = 1; s < traj.size(); ++s) {
        double dt = traj[s].first - traj[s - 1].first;
        Vec d = traj[s].second - traj[s - 1].second;
        acc += (d(0) * d(0) + d(1) * d(1)) / dt;
        ++cnt;
    }
    double mean = acc / cnt;
    // E |horizontal increment|^2 = 2 m dt with m = 2
    CHECK(mean == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("left invariance of heisenberg paths") {
    // Same Gaussian increments from x and from a.x: the second path is the
    // exact left translate of the first (the integrator commutes with dL_a),
    // so the gap is pure roundoff, far below the O(dt) bound.
    Frame h1 = make_heisenberg(1);
    H1Point a{0.7, -0.4, 0.9}, x{0.1, 0.3, -0.2};
    ControlPolicy pol = constant_policy(ControlMatrix::projection(vec2(0.6, 0.8)));
    for (double dt : {1e-2, 5e-3}) {
        PathRng r1(55, 0), r2(55, 0);
        std::vector<std::pair<double, Vec>> t1, t2;
        simulate_path(h1, Vec(x), 0, 0.5, pol, dt, r1, &t1);
        simulate_path(h1, Vec(h1_mul(a, x)), 0, 0.5, pol, dt, r2, &t2);
        REQUIRE(t1.size() == t2.size());
        double gap = 0;
        for (std::size_t s = 0; s < t1.size(); ++s) {
            H1Point translated = h1_mul(a, H1Point(t1[s].second));
            gap = std::max(gap, (H1Point(t2[s].second) - translated).norm());
        }
        CHECK(gap <= 1e-10);
    }
}

TEST_CASE("feedback optimal control") {
    Frame eu = make_euclidean(2);
    ScalarField r2;
    r2.eval = [](const Vec& x) { return x.squaredNorm(); };
    r2.grad = [](const Vec& x) { return Vec(2 * x); };
    r2.hess = [](const Vec& x) { return Mat(2 * Mat::Identity(x.size(), x.size())); };
    ControlMatrix c = feedback_optimal_control(eu, r2, 0, vec2(1, 0), 1e-8);
    CHECK((c.direction() - vec2(1, 0)).norm() < 1e-12);
    Mat nu = c.nu();
    CHECK(nu(0, 0) == doctest::Approx(0).epsilon(1e-12));
    CHECK(nu(1, 1) == doctest::Approx(1));

    // characteristic point with horizontal hessian diag(1,3): a = e2
    ScalarField aniso;
    aniso.eval = [](const Vec& x) { return 0.5 * x(0) * x(0) + 1.5 * x(1) * x(1); };
    aniso.grad = [](const Vec& x) { return Vec(vec2(x(0), 3 * x(1))); };
    aniso.hess = [](const Vec&) {
        Mat h = Mat::Zero(2, 2);
        h(0, 0) = 1;
        h(1, 1) = 3;
        return h;
    };
    ControlMatrix cc = feedback_optimal_control(eu, aniso, 0, vec2(0, 0), 1e-8);
    CHECK(std::abs(cc.direction()(0)) < 1e-10);
    CHECK(cc.direction()(1) == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("fan policies are unit constant directions") {
    for (int m : {2, 3}) {
        auto fans = fan_policies(m, 16);
        CHECK(fans.size() == 16);
        for (const auto& p : fans) {
            ControlMatrix c = p.fn(0.0, Vec::Zero(m));
            CHECK(c.direction().norm() == doctest::Approx(1).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant cost estimates") {
    Frame h1 = make_heisenberg(1);
    ScalarField g = const_field(0.7, 3);
    Vec x0 = vec3(0, 0, 0);
    for (double p : {1.0, 2.0, 8.0}) {
        double v = estimate_vp(h1, x0, 0, 0.1, g, p, unconstrained_policy(2), 256, 1e-2, 5);
        CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
    }
    auto fam = fan_policies(2, 4);
    CHECK(estimate_v(h1, x0, 0, 0.1, g, fam, 256, 1e-2, 5).value == doctest::Approx(0.7));
}

TEST_CASE("estimate_vp is the plain mean at p=1 and monotone in p") {
    Frame h1 = make_heisenberg(1);
    ScalarField g;
    g.eval = [](const Vec& x) { return x(0) * x(0) + 0.3 * x(2); };
    Vec x0 = vec3(0.2, 0, 0);
    ControlPolicy pol = unconstrained_policy(2);
    const int n = 2000;
    PathEnsemble e = simulate(h1, x0, 0, 0.1, pol, n, 1e-2, 11);
    double mean = 0;
    for (const auto& s : e.states) mean += g.eval(s);
    mean /= n;
    CHECK(estimate_vp(h1, x0, 0, 0.1, g, 1.0, pol, n, 1e-2, 11) ==
          doctest::Approx(mean).epsilon(1e-10));

    double prev = -1e300;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        double v = estimate_vp(h1, x0, 0, 0.1, g, p, pol, n, 1e-2, 11);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK_THROWS_AS(estimate_vp(h1, x0, 0, 0.1, g, 0.5, pol, 16, 1e-2, 11),
                    std::invalid_argument);
}

TEST_CASE("value estimate lemmas: geometric, comparison, bounded") {
    Frame h1 = make_heisenberg(1);
    Vec x0 = vec3(0.1, -0.2, 0);
    auto fam = fan_policies(2, 8);
    const int n = 500;

    ScalarField g;
    g.eval = [](const Vec& x) { return std::sin(x(0)) + 0.5 * std::cos(x(1) + x(2)); };

    // geometric: phi(V_g) = V_{phi(g)} exactly for sample max
    auto phi = [](double s) { return s * s * s + s; };
    ScalarField pg;
    pg.eval = [&](const Vec& x) {
        double s = std::sin(x(0)) + 0.5 * std::cos(x(1) + x(2));
        return s * s * s + s;
    };
    ValueEstimate vg = estimate_v(h1, x0, 0, 0.15, g, fam, n, 1e-2, 13);
    ValueEstimate vpg = estimate_v(h1, x0, 0, 0.15, pg, fam, n, 1e-2, 13);
    CHECK(vpg.value == doctest::Approx(phi(vg.value)).epsilon(1e-14));
    CHECK(vpg.best_policy == vg.best_policy);

    // comparison: g <= g + 0.3
    ScalarField g2;
    g2.eval = [&](const Vec& x) { return g.eval(x) + 0.3; };
    ValueEstimate v2 = estimate_v(h1, x0, 0, 0.15, g2, fam, n, 1e-2, 13);
    CHECK(vg.value <= v2.value + 1e-12);

    // bounded: estimates within [min g, max g] = [-1.5, 1.5]
    CHECK(vg.value <= 1.5);
    CHECK(vg.value >= -1.5);
    for (double p : {1.0, 4.0})
        for (const auto& pol : fam) {
            double v = estimate_vp(h1, x0, 0, 0.15, g, p, pol, n, 1e-2, 13);
            CHECK(v <= 1.5);
            CHECK(v >= -1.5);
        }

    // quantile mode is below the sample max, above nothing weird
    ValueEstimate vq =
        estimate_v(h1, x0, 0, 0.15, g, fam, n, 1e-2, 13, EssSupMode::quantile_mode(0.9));
    CHECK(vq.value <= vg.value + 1e-12);

    CHECK_THROWS_AS(estimate_v(h1, x0, 0, 0.15, g, {}, n, 1e-2, 13), std::invalid_argument);
}

TEST_CASE("control hamiltonian closed forms and brute force") {
    Frame eu = make_euclidean(2);
    Vec x = vec2(0.3, -0.4);
    Mat S = Mat::Zero(2, 2);
    S(0, 0) = 1;
    S(1, 1) = 3;
    CHECK(control_hamiltonian(eu, x, vec2(0.5, -1), S) == doctest::Approx(-1).epsilon(1e-12));
    Mat cI = 2.5 * Mat::Identity(2, 2);
    CHECK(control_hamiltonian(eu, x, vec2(0, 0), cI) == doctest::Approx(-2.5).epsilon(1e-12));

    // brute force over sampled unit directions
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 10; ++t) {
        Mat a(2, 2);
        a << u(rng), u(rng), u(rng), u(rng);
        Mat Sym = (a + a.transpose()) / 2;
        Vec d = vec2(u(rng), u(rng));
        double best = -1e300;
        for (int i = 0; i < 10000; ++i) {
            double th = 2 * M_PI * i / 10000;
            Vec dir = vec2(std::cos(th), std::sin(th));
            Mat nu2 = Mat::Identity(2, 2) - dir * dir.transpose();
            best = std::max(best, -(nu2 * Sym).trace());
        }
        CHECK(control_hamiltonian(eu, x, d, Sym) == doctest::Approx(best).epsilon(1e-6));
    }
}
