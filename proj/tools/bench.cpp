// Benchmark: OpenMP kernels vs the serial reference, and a bitwise-equality
// check that they produce identical results.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "hmcf/geometry.hpp"
#include "hmcf/levelset.hpp"
#include "hmcf/sde.hpp"

using namespace hmcf;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void bench_grid() {
    Frame frame = make_heisenberg(1);
    GridField u = GridField::create(3, {-1, -1, -1}, {1, 1, 1}, 1.0 / 24.0);
    u.fill([](const Eigen::Vector3d& p) { return p.squaredNorm() - 0.5; });
    SchemeParams params;
    const double dt = 1e-5;
    const int steps = 40;

    GridField serial = u, parallel = u, scratch = u;
    auto run = [&](GridField& g, bool par) {
        auto t0 = clock_type::now();
        for (int s = 0; s < steps; ++s) {
            evolve_step(frame, g, scratch, dt, params, par);
            std::swap(g.values, scratch.values);
        }
        return seconds_since(t0);
    };
    double ts = run(serial, false);
    double tp = run(parallel, true);
    bool identical = std::memcmp(serial.values.data(), parallel.values.data(),
                                 serial.values.size() * sizeof(double)) == 0;
    std::printf("grid step   (%d steps, %dx%dx%d): serial %.3fs  openmp %.3fs  speedup %.2fx  bitwise %s\n",
                steps, u.shape[0], u.shape[1], u.shape[2], ts, tp, ts / tp,
                identical ? "identical" : "DIFFERENT");
}

void bench_paths() {
    Frame frame = make_heisenberg(1);
    Vec x0 = Vec::Zero(3);
    ControlPolicy pol = unconstrained_policy(2);
    const int n_paths = 20000;
    const double dt = 1e-3, T = 0.5;

    auto t0 = clock_type::now();
    PathEnsemble es = simulate(frame, x0, 0.0, T, pol, n_paths, dt, 42, false);
    double ts = seconds_since(t0);
    t0 = clock_type::now();
    PathEnsemble ep = simulate(frame, x0, 0.0, T, pol, n_paths, dt, 42, true);
    double tp = seconds_since(t0);
    bool identical = true;
    for (int i = 0; i < n_paths && identical; ++i)
        identical = std::memcmp(es.states[i].data(), ep.states[i].data(), 3 * sizeof(double)) == 0;
    std::printf("sde paths   (%d paths, T=%.1f, dt=%.0e): serial %.3fs  openmp %.3fs  speedup %.2fx  bitwise %s\n",
                n_paths, T, dt, ts, tp, ts / tp, identical ? "identical" : "DIFFERENT");
}

}  // namespace

int main() {
    bench_grid();
    bench_paths();
    return 0;
}
