#include "hmcf/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hmcf {

// ---- controls ----

ControlMatrix ControlMatrix::projection(const Vec& direction) {
    double norm = direction.norm();
    if (norm == 0.0 || !direction.allFinite())
        throw std::invalid_argument("projection control: direction must be a nonzero vector");
    if (std::abs(norm - 1.0) > 1e-12)
        throw std::invalid_argument("projection control: direction must be unit length");
    ControlMatrix c;
    c.a_ = direction;
    c.m_ = static_cast<int>(direction.size());
    return c;
}

ControlMatrix ControlMatrix::unconstrained(int m) {
    ControlMatrix c;
    c.unconstrained_ = true;
    c.m_ = m;
    return c;
}

Mat ControlMatrix::nu() const {
    if (unconstrained_) return Mat::Identity(m_, m_);
    return Mat::Identity(m_, m_) - a_ * a_.transpose();
}

Vec ControlMatrix::apply(const Vec& w) const {
    if (unconstrained_) return w;
    return w - a_ * a_.dot(w);
}

ControlPolicy constant_policy(const ControlMatrix& nu, const std::string& label) {
    return {[nu](double, const Vec&) { return nu; }, label};
}

ControlPolicy unconstrained_policy(int m) {
    return {[m](double, const Vec&) { return ControlMatrix::unconstrained(m); }, "unconstrained"};
}

namespace {

Vec canonical_sign(Vec v, double tol) {
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > tol) {
            if (v(i) < 0) v = -v;
            break;
        }
    }
    return v;
}

}  // namespace

ControlMatrix feedback_optimal_control(const Frame& frame, const ScalarField& field, double /*t*/,
                                       const Vec& x, double char_tol) {
    Vec du = field.gradient(x);
    Mat s = frame.eval_sigma(x);
    Vec hg = s * du;
    double norm = hg.norm();
    if (norm > char_tol) return ControlMatrix::projection(Vec(hg / norm));
    // Characteristic point: direction of the largest eigenvalue of the
    // symmetrized horizontal Hessian.
    HorizontalJet j = jet(frame, field, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(j.horiz_hess);
    Vec a = es.eigenvectors().col(frame.m - 1);
    a = canonical_sign(a, 1e-12);
    a.normalize();
    return ControlMatrix::projection(a);
}

ControlPolicy feedback_policy(const Frame& frame, const ScalarField& field, double char_tol) {
    return {[&frame, field, char_tol](double t, const Vec& x) {
                return feedback_optimal_control(frame, field, t, x, char_tol);
            },
            "feedback"};
}

std::vector<ControlPolicy> fan_policies(int m, int count) {
    std::vector<ControlPolicy> out;
    out.reserve(count);
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < count; ++i) {
        Vec a = Vec::Zero(m);
        if (m == 1) {
            a(0) = 1.0;
        } else if (m == 2) {
            double th = 2.0 * M_PI * i / count;
            a(0) = std::cos(th);
            a(1) = std::sin(th);
        } else {
            // Fibonacci-spaced points on S^{m-1}: exact lattice for m=3,
            // golden-angle spiral through the remaining coordinates above.
            double zc = 1.0 - 2.0 * (i + 0.5) / count;
            double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
            double th = 2.0 * M_PI * i / golden;
            a(0) = r * std::cos(th);
            a(1) = r * std::sin(th);
            a(2) = zc;
            for (int d = 3; d < m; ++d) {
                double phi = 2.0 * M_PI * std::fmod((i + 1) * std::pow(golden, d - 2), 1.0);
                a(d) = std::cos(phi) * 0.3;
            }
            a.normalize();
        }
        out.push_back(constant_policy(ControlMatrix::projection(a), "fan" + std::to_string(i)));
        if (m == 1) break;
    }
    return out;
}

// ---- RNG ----

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) {
    // Mix (seed, path) into an initial counter so streams are decorrelated.
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = path ^ 0xD1B54A32D192ED03ull;
    std::uint64_t b = splitmix64(s);
    state_ = a ^ (b * 0x9E3779B97F4A7C15ull);
}

std::uint64_t PathRng::next_u64() { return splitmix64(state_); }

double PathRng::uniform() {
    // (0,1): 53 random bits, offset by half an ulp so 0 never occurs.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

// ---- dynamics ----

Vec drift_vector(const Frame& frame, const ControlMatrix& nu, const Vec& x) {
    Mat nu2 = nu.nu_squared();
    Vec out = Vec::Zero(frame.n);
    for (int i = 0; i < frame.m; ++i)
        for (int j = 0; j < frame.m; ++j) {
            double w = nu2(i, j);
            if (w != 0.0) out += w * frame.eval_nabla(i, j, x);
        }
    return out;
}

Vec step_ito(const Frame& frame, const Vec& x, const ControlMatrix& nu, double dt, const Vec& dW) {
    Mat s = frame.eval_sigma(x);
    Vec out = x + std::sqrt(2.0) * (s.transpose() * nu.apply(dW)) + drift_vector(frame, nu, x) * dt;
    if (!out.allFinite()) throw std::runtime_error("step_ito: non-finite state");
    return out;
}

Vec simulate_path(const Frame& frame, const Vec& x0, double t0, double T,
                  const ControlPolicy& policy, double dt, PathRng& rng,
                  std::vector<std::pair<double, Vec>>* trajectory) {
    Vec x = x0;
    double t = t0;
    Vec dW(frame.m);
    if (trajectory) trajectory->emplace_back(t, x);
    while (t < T - 1e-15) {
        double h = std::min(dt, T - t);
        for (int i = 0; i < frame.m; ++i) dW(i) = std::sqrt(h) * rng.gaussian();
        ControlMatrix nu = policy.fn(t, x);
        x = step_ito(frame, x, nu, h, dW);
        t += h;
        if (trajectory) trajectory->emplace_back(t, x);
    }
    return x;
}

PathEnsemble simulate(const Frame& frame, const Vec& x0, double t0, double T,
                      const ControlPolicy& policy, int n_paths, double dt, std::uint64_t seed,
                      bool parallel) {
    if (!(t0 < T)) throw std::invalid_argument("simulate: t0 < T required");
    if (dt <= 0 || n_paths < 1) throw std::invalid_argument("simulate: bad dt or n_paths");
    PathEnsemble e;
    e.n_paths = n_paths;
    e.t = T;
    e.dt = dt;
    e.seed = seed;
    e.states.resize(n_paths);
    int first_bad = -1;
#pragma omp parallel for if (parallel) schedule(static)
    for (int p = 0; p < n_paths; ++p) {
        PathRng rng(seed, static_cast<std::uint64_t>(p));
        try {
            e.states[p] = simulate_path(frame, x0, t0, T, policy, dt, rng);
        } catch (const std::exception&) {
#pragma omp critical
            {
                if (first_bad < 0 || p < first_bad) first_bad = p;
            }
        }
    }
    if (first_bad >= 0) throw PathBlowupError(first_bad, T);
    return e;
}

// ---- estimators ----

namespace {

std::vector<double> terminal_costs(const Frame& frame, const Vec& x0, double t0, double T,
                                   const ScalarField& g, const ControlPolicy& policy, int n_paths,
                                   double dt, std::uint64_t seed, bool parallel) {
    PathEnsemble e = simulate(frame, x0, t0, T, policy, n_paths, dt, seed, parallel);
    std::vector<double> vals(n_paths);
    for (int p = 0; p < n_paths; ++p) vals[p] = g.eval(e.states[p]);
    return vals;
}

}  // namespace

double estimate_vp(const Frame& frame, const Vec& x0, double t0, double T, const ScalarField& g,
                   double p, const ControlPolicy& policy, int n_paths, double dt,
                   std::uint64_t seed, bool parallel) {
    if (p < 1) throw std::invalid_argument("estimate_vp: p >= 1 required");
    std::vector<double> vals =
        terminal_costs(frame, x0, t0, T, g, policy, n_paths, dt, seed, parallel);
    // Shift the sample so it is >= 1, take the L^p mean via log-sum-exp,
    // then remove the shift.
    const double shift = *std::min_element(vals.begin(), vals.end()) - 1.0;
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        logs[i] = p * std::log(vals[i] - shift);
        lmax = std::max(lmax, logs[i]);
    }
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - lmax);
    double lp_mean = std::exp((lmax + std::log(acc / static_cast<double>(vals.size()))) / p);
    return lp_mean + shift;
}

ValueEstimate estimate_v(const Frame& frame, const Vec& x0, double t0, double T,
                         const ScalarField& g, const std::vector<ControlPolicy>& policy_family,
                         int n_paths, double dt, std::uint64_t seed, EssSupMode mode,
                         bool parallel) {
    if (policy_family.empty()) throw std::invalid_argument("estimate_v: empty policy family");
    ValueEstimate best;
    bool first = true;
    for (const auto& policy : policy_family) {
        std::vector<double> vals =
            terminal_costs(frame, x0, t0, T, g, policy, n_paths, dt, seed, parallel);
        double v;
        if (mode.use_max) {
            v = *std::max_element(vals.begin(), vals.end());
        } else {
            std::vector<double> sorted = vals;
            std::sort(sorted.begin(), sorted.end());
            auto idx = static_cast<std::size_t>(
                std::ceil(mode.quantile * static_cast<double>(sorted.size())) - 1);
            idx = std::min(idx, sorted.size() - 1);
            v = sorted[idx];
        }
        if (first || v < best.value) {
            first = false;
            best.value = v;
            best.best_policy = policy.label;
            double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
            double var = 0.0;
            for (double x : vals) var += (x - mean) * (x - mean);
            var /= std::max<std::size_t>(1, vals.size() - 1);
            best.stderr_best = std::sqrt(var / static_cast<double>(vals.size()));
        }
    }
    return best;
}

double control_hamiltonian(const Frame& frame, const Vec& x, const Vec& d, const Mat& S) {
    Mat sig = frame.eval_sigma(x);
    Mat St = sig * S * sig.transpose();
    for (int a = 0; a < frame.m; ++a)
        for (int b = a; b < frame.m; ++b) {
            Vec c = frame.eval_nabla(a, b, x) + frame.eval_nabla(b, a, x);
            double v = 0.5 * c.dot(d);
            St(a, b) += v;
            if (b != a) St(b, a) += v;
        }
    Eigen::SelfAdjointEigenSolver<Mat> es(St, Eigen::EigenvaluesOnly);
    return -St.trace() + es.eigenvalues()(frame.m - 1);
}

}  // namespace hmcf
