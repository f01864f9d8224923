#include "sparseclust/lowdim_fit.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace sparseclust {

int restart_budget(double delta) {
    return static_cast<int>(std::ceil(std::log(1.0 / delta))) + 4;
}

namespace lowdim {
namespace {

// Sufficient statistics gathered by one E pass.
struct PassResult {
    double loglik = 0.0;
    double resp = 0.0;             // sum of component-1 responsibilities
    std::array<double, 2> resp_x{};  // responsibility-weighted coordinate sums
};

Matrix clip_eigenvalues(const Matrix& sigma, double floor, bool& clipped) {
    if (sigma.rows() == 1) {
        Matrix out = sigma;
        if (!(out(0, 0) >= floor)) {
            out(0, 0) = floor;
            clipped = true;
        }
        return out;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    Vector ev = eig.eigenvalues();
    if (ev.minCoeff() >= floor) return sigma;
    clipped = true;
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
    Matrix out = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    out(0, 1) = out(1, 0);
    return out;
}

PassResult e_pass(const Columns& data, const MixtureState& s) {
    const std::size_t n = data.size();
    const std::size_t k = data.dim();
    constexpr double kLog2Pi = 1.8378770664093454836;
    PassResult out;
    double ll = 0.0, resp = 0.0, rx0 = 0.0, rx1 = 0.0;
    if (k == 1) {
        const double var = s.sigma(0, 0);
        const double m1 = s.mu1(0), m2 = s.mu2(0);
        const double w = (m1 - m2) / var;
        const double b = -w * 0.5 * (m1 + m2);
        const double norm = -0.5 * (kLog2Pi + std::log(var)) - std::numbers::ln2;
        const double* x = data.cols[0].data();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = w * x[i] + b;
            const double e = std::exp(-std::abs(t));
            const double inv = 1.0 / (1.0 + e);
            const double r = t >= 0.0 ? inv : e * inv;
            const double dx = x[i] - m2;
            ll += std::max(t, 0.0) + std::log1p(e) - 0.5 * dx * dx / var;
            resp += r;
            rx0 += r * x[i];
        }
        out.loglik = ll + norm * static_cast<double>(n);
    } else {
        const Eigen::Matrix2d sigma = s.sigma;
        const Eigen::Matrix2d prec = sigma.inverse();
        const Eigen::Vector2d mu1 = s.mu1, mu2 = s.mu2;
        const Eigen::Vector2d w = prec * (mu1 - mu2);
        const double b = -w.dot(0.5 * (mu1 + mu2));
        const double norm = -(kLog2Pi + 0.5 * std::log(sigma.determinant())) - std::numbers::ln2;
        const double p00 = prec(0, 0), p01 = prec(0, 1), p11 = prec(1, 1);
        const double* x = data.cols[0].data();
        const double* y = data.cols[1].data();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = w(0) * x[i] + w(1) * y[i] + b;
            const double e = std::exp(-std::abs(t));
            const double inv = 1.0 / (1.0 + e);
            const double r = t >= 0.0 ? inv : e * inv;
            const double dx = x[i] - mu2(0), dy = y[i] - mu2(1);
            const double q = p00 * dx * dx + 2.0 * p01 * dx * dy + p11 * dy * dy;
            ll += std::max(t, 0.0) + std::log1p(e) - 0.5 * q;
            resp += r;
            rx0 += r * x[i];
            rx1 += r * y[i];
        }
        out.loglik = ll + norm * static_cast<double>(n);
    }
    out.resp = resp;
    out.resp_x = {rx0, rx1};
    return out;
}

struct Moments {
    Vector sum;
    Matrix scatter;  // sum of x x^T
};

Moments raw_moments(const Columns& data) {
    const std::size_t k = data.dim();
    Moments m{Vector::Zero(static_cast<Eigen::Index>(k)), Matrix::Zero(static_cast<Eigen::Index>(k),
                                                                       static_cast<Eigen::Index>(k))};
    for (std::size_t a = 0; a < k; ++a) {
        const auto& ca = data.cols[a];
        double s = 0.0;
        for (double v : ca) s += v;
        m.sum(static_cast<Eigen::Index>(a)) = s;
        for (std::size_t b = 0; b <= a; ++b) {
            const auto& cb = data.cols[b];
            double acc = 0.0;
            for (std::size_t i = 0; i < ca.size(); ++i) acc += ca[i] * cb[i];
            m.scatter(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
            m.scatter(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc;
        }
    }
    return m;
}

MixtureState m_step(const PassResult& pass, const Moments& mom, const MixtureState& prev, std::size_t n_points,
                    double floor, bool& clipped) {
    const auto k = prev.mu1.size();
    const double n = static_cast<double>(n_points);
    const double r1 = pass.resp;
    const double r2 = n - r1;
    Vector rx(k);
    for (Eigen::Index a = 0; a < k; ++a) rx(a) = pass.resp_x[static_cast<std::size_t>(a)];
    MixtureState next = prev;
    const double tiny = 1e-12 * n;
    if (r1 > tiny) next.mu1 = rx / r1;
    if (r2 > tiny) next.mu2 = (mom.sum - rx) / r2;
    Matrix sigma = (mom.scatter - r1 * next.mu1 * next.mu1.transpose() - r2 * next.mu2 * next.mu2.transpose()) / n;
    sigma = 0.5 * (sigma + sigma.transpose());
    next.sigma = clip_eigenvalues(sigma, floor, clipped);
    return next;
}

}  // namespace

double mixture_loglik(const Columns& data, const MixtureState& state) {
    return e_pass(data, state).loglik;
}

void continue_em(const Columns& data, EmRun& run, double floor, int extra_iterations, double rel_tol,
                 bool record_trace) {
    if (extra_iterations <= 0 || run.converged) return;
    const Moments mom = raw_moments(data);
    PassResult pass = e_pass(data, run.state);
    run.loglik = pass.loglik;
    for (int it = 0; it < extra_iterations; ++it) {
        MixtureState next = m_step(pass, mom, run.state, data.size(), floor, run.floored);
        PassResult next_pass = e_pass(data, next);
        const double change = std::abs(next_pass.loglik - pass.loglik);
        run.state = std::move(next);
        pass = next_pass;
        run.loglik = pass.loglik;
        ++run.iterations;
        if (record_trace) run.trace.push_back(run.loglik);
        if (change < rel_tol * std::abs(run.loglik)) {
            run.converged = true;
            break;
        }
    }
}

EmRun run_em(const Columns& data, MixtureState init, double floor, int max_iterations, double rel_tol,
             bool record_trace) {
    EmRun run;
    run.state = std::move(init);
    run.state.sigma = clip_eigenvalues(run.state.sigma, floor, run.floored);
    if (record_trace) run.trace.push_back(mixture_loglik(data, run.state));
    continue_em(data, run, floor, max_iterations, rel_tol, record_trace);
    if (max_iterations <= 0) run.loglik = mixture_loglik(data, run.state);
    return run;
}

}  // namespace lowdim

namespace {

using lowdim::Columns;
using lowdim::EmRun;
using lowdim::MixtureState;

constexpr int kMomentGrid = 200;
constexpr int kAngleGrid = 180;

void check_accuracy_args(double eps, double delta) {
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("low-dimensional fit: eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("low-dimensional fit: delta must lie in (0, 1)");
}

// Within-component variance and half-gap matching the second and fourth
// central moments of an equal-weight two-point-mean mixture, by grid search
// over the within-component share of the variance.
std::pair<double, double> moment_match(double m2, double m4) {
    double best_err = std::numeric_limits<double>::infinity();
    double best_within = m2;
    for (int g = 0; g <= kMomentGrid; ++g) {
        const double within = m2 * static_cast<double>(g) / kMomentGrid;
        const double gap2 = m2 - within;
        const double model = 3.0 * within * within + 6.0 * within * gap2 + gap2 * gap2;
        const double err = std::abs(model - m4);
        if (err < best_err) {
            best_err = err;
            best_within = within;
        }
    }
    return {best_within, std::sqrt(std::max(m2 - best_within, 0.0))};
}

void canonicalize(LowDimEstimate& est) {
    const auto k = est.mu1.size();
    bool swap = false;
    for (Eigen::Index a = 0; a < k; ++a) {
        if (est.mu1(a) < est.mu2(a)) break;
        if (est.mu1(a) > est.mu2(a)) {
            swap = true;
            break;
        }
    }
    if (swap) std::swap(est.mu1, est.mu2);
}

struct Prepared {
    std::vector<std::vector<double>> centered;
    Columns view;
    Vector mean;
    Matrix cov;
    double floor = 0.0;
    std::size_t n = 0;
};

Prepared prepare(const std::vector<std::span<const double>>& raw) {
    Prepared p;
    const std::size_t k = raw.size();
    p.n = raw.front().size();
    p.mean.resize(static_cast<Eigen::Index>(k));
    double second = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        double s = 0.0, s2 = 0.0;
        for (double v : raw[a]) {
            if (!std::isfinite(v)) throw PreconditionError("low-dimensional fit: non-finite sample");
            s += v;
            s2 += v * v;
        }
        p.mean(static_cast<Eigen::Index>(a)) = s / static_cast<double>(p.n);
        second += s2 / static_cast<double>(p.n);
    }
    p.floor = 1e-8 * (second / static_cast<double>(k) + 1.0);
    p.centered.resize(k);
    for (std::size_t a = 0; a < k; ++a) {
        const double m = p.mean(static_cast<Eigen::Index>(a));
        p.centered[a].resize(p.n);
        for (std::size_t i = 0; i < p.n; ++i) p.centered[a][i] = raw[a][i] - m;
        p.view.cols.emplace_back(p.centered[a]);
    }
    p.cov.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < p.n; ++i) acc += p.centered[a][i] * p.centered[b][i];
            p.cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc / static_cast<double>(p.n);
            p.cov(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc / static_cast<double>(p.n);
        }
    return p;
}

LowDimEstimate finish(const Prepared& p, const MixtureState& s, double loglik) {
    LowDimEstimate est;
    est.mu1 = s.mu1 + p.mean;
    est.mu2 = s.mu2 + p.mean;
    est.sigma = s.sigma;
    est.loglik = loglik;
    return est;
}

// Shared tail of fit_1d and fit_2d: multi-start EM from `starts`, then the
// penalized comparison against the single-Gaussian fit.
LowDimEstimate select_fit(const Prepared& p, const std::vector<MixtureState>& starts,
                          const LowDimEstimate& single, const LowDimOptions& options) {
    std::vector<EmRun> runs;
    runs.reserve(starts.size());
    int total_iterations = 0;
    for (const auto& start : starts) {
        runs.push_back(lowdim::run_em(p.view, start, p.floor, options.screen_iterations, options.rel_tol));
        total_iterations += runs.back().iterations;
    }
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].loglik > runs[best].loglik) best = r;
    EmRun& winner = runs[best];
    const int before = winner.iterations;
    lowdim::continue_em(p.view, winner, p.floor, options.max_iterations - winner.iterations, options.rel_tol);
    total_iterations += winner.iterations - before;

    const double k = static_cast<double>(p.view.dim());
    const double penalty = k * std::log(static_cast<double>(p.n));
    LowDimEstimate est;
    if (2.0 * (winner.loglik - single.loglik) > penalty) {
        est = finish(p, winner.state, winner.loglik);
        est.floored = winner.floored;
    } else {
        est = single;
        est.equal_means = true;
    }
    est.restarts_used = static_cast<int>(runs.size());
    est.iterations = total_iterations;
    canonicalize(est);
    return est;
}

LowDimEstimate single_gaussian(const Prepared& p) {
    MixtureState s;
    const auto k = p.mean.size();
    s.mu1 = Vector::Zero(k);
    s.mu2 = Vector::Zero(k);
    bool clipped = false;
    s.sigma = p.cov;
    if (k == 1) {
        if (!(s.sigma(0, 0) >= p.floor)) {
            s.sigma(0, 0) = p.floor;
            clipped = true;
        }
    } else {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(p.cov);
        Vector ev = eig.eigenvalues();
        if (ev.minCoeff() < p.floor) {
            clipped = true;
            for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), p.floor);
            s.sigma = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
            s.sigma(0, 1) = s.sigma(1, 0);
        }
    }
    LowDimEstimate est = finish(p, s, lowdim::mixture_loglik(p.view, s));
    est.equal_means = true;
    est.floored = clipped;
    return est;
}

double quantile(std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

LowDimEstimate fit_1d(std::span<const double> samples, double eps, double delta, std::uint64_t seed,
                      const LowDimOptions& options) {
    if (samples.size() < 20) throw PreconditionError("fit_1d: need at least 20 samples");
    check_accuracy_args(eps, delta);
    const Prepared p = prepare({samples});
    const double n = static_cast<double>(p.n);
    const double m2 = p.cov(0, 0);

    if (!(m2 > p.floor)) {
        LowDimEstimate est = single_gaussian(p);
        est.degenerate = true;
        if (m2 == 0.0) {
            est.mu1(0) = samples[0];
            est.mu2(0) = samples[0];
        }
        return est;
    }

    const LowDimEstimate single = single_gaussian(p);
    double m4 = 0.0;
    for (double v : p.centered[0]) m4 += v * v * v * v;
    m4 /= n;
    const double kurt = m4 / (m2 * m2) - 3.0;
    if (!(kurt < 0.0 && n * kurt * kurt / 24.0 > std::log(n))) return single;

    const int budget = restart_budget(delta);
    std::vector<MixtureState> starts;
    auto add = [&](double lo, double hi, double var) {
        if (static_cast<int>(starts.size()) >= budget) return;
        MixtureState s;
        s.mu1 = Vector::Constant(1, lo);
        s.mu2 = Vector::Constant(1, hi);
        s.sigma = Matrix::Constant(1, 1, var > p.floor ? var : 0.25 * m2);
        starts.push_back(std::move(s));
    };

    const auto [within, gap] = moment_match(m2, m4);
    add(-gap, gap, within);

    std::vector<double> sorted = p.centered[0];
    std::sort(sorted.begin(), sorted.end());
    auto add_quantile_pair = [&](double q) {
        const double lo = quantile(sorted, q), hi = quantile(sorted, 1.0 - q);
        const double half = 0.5 * (hi - lo);
        add(lo, hi, m2 - half * half);
    };
    for (double q : {0.25, 0.1, 0.05}) add_quantile_pair(q);
    const rng::CounterStream stream(seed);
    for (std::uint64_t r = 0; static_cast<int>(starts.size()) < budget; ++r)
        add_quantile_pair(0.02 + 0.46 * stream.uniform(r));

    return select_fit(p, starts, single, options);
}

LowDimEstimate fit_2d(std::span<const double> x, std::span<const double> y, double eps, double delta,
                      std::uint64_t seed, const LowDimOptions& options) {
    if (x.size() != y.size()) throw PreconditionError("fit_2d: columns differ in length");
    if (x.size() < 40) throw PreconditionError("fit_2d: need at least 40 samples");
    check_accuracy_args(eps, delta);
    const Prepared p = prepare({x, y});
    const double n = static_cast<double>(p.n);

    const LowDimEstimate single = single_gaussian(p);
    const Eigen::LLT<Matrix> llt(p.cov);
    const Eigen::SelfAdjointEigenSolver<Matrix> cov_eig(p.cov, Eigen::EigenvaluesOnly);
    if (llt.info() != Eigen::Success || !(cov_eig.eigenvalues()(0) > p.floor)) {
        LowDimEstimate est = single;
        est.degenerate = true;
        return est;
    }
    const Matrix chol = llt.matrixL();
    const Matrix chol_inv = chol.inverse();

    // Fourth-order moment tensor of the whitened data.
    std::array<double, 5> t4{};  // z1^4, z1^3 z2, z1^2 z2^2, z1 z2^3, z2^4
    {
        const double a = chol_inv(0, 0), c = chol_inv(1, 0), d = chol_inv(1, 1);
        for (std::size_t i = 0; i < p.n; ++i) {
            const double u = a * p.centered[0][i];
            const double v = c * p.centered[0][i] + d * p.centered[1][i];
            const double u2 = u * u, v2 = v * v;
            t4[0] += u2 * u2;
            t4[1] += u2 * u * v;
            t4[2] += u2 * v2;
            t4[3] += u * v2 * v;
            t4[4] += v2 * v2;
        }
        for (double& m : t4) m /= n;
    }
    double kurt = std::numeric_limits<double>::infinity();
    double best_angle = 0.0;
    for (int g = 0; g < kAngleGrid; ++g) {
        const double th = std::numbers::pi * g / kAngleGrid;
        const double c = std::cos(th), s = std::sin(th);
        const double m4 = c * c * c * c * t4[0] + 4 * c * c * c * s * t4[1] + 6 * c * c * s * s * t4[2] +
                          4 * c * s * s * s * t4[3] + s * s * s * s * t4[4];
        if (m4 - 3.0 < kurt) {
            kurt = m4 - 3.0;
            best_angle = th;
        }
    }
    if (!(kurt < 0.0 && n * kurt * kurt / 24.0 > 2.0 * std::log(n))) return single;

    const int budget = restart_budget(delta);
    std::vector<MixtureState> starts;
    auto add = [&](const Vector& half_gap) {
        if (static_cast<int>(starts.size()) >= budget) return;
        MixtureState s;
        s.mu1 = -half_gap;
        s.mu2 = half_gap;
        s.sigma = p.cov - half_gap * half_gap.transpose();
        starts.push_back(std::move(s));
    };

    const Eigen::Vector2d u_star(std::cos(best_angle), std::sin(best_angle));
    // Along u_star the whitened data has unit variance; match its kurtosis.
    const double whitened_gap = moment_match(1.0, kurt + 3.0).second;
    add(chol * (whitened_gap * u_star));
    // Median splits along a direction given in the original coordinates.
    std::vector<double> proj(p.n);
    auto add_split = [&](const Eigen::Vector2d& dir) {
        for (std::size_t i = 0; i < p.n; ++i) proj[i] = dir(0) * p.centered[0][i] + dir(1) * p.centered[1][i];
        std::vector<double> tmp = proj;
        auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
        std::nth_element(tmp.begin(), mid, tmp.end());
        const double median = *mid;
        Eigen::Vector2d lo = Eigen::Vector2d::Zero(), hi = Eigen::Vector2d::Zero();
        double nlo = 0.0, nhi = 0.0;
        for (std::size_t i = 0; i < p.n; ++i) {
            const Eigen::Vector2d v(p.centered[0][i], p.centered[1][i]);
            if (proj[i] < median) {
                lo += v;
                nlo += 1.0;
            } else {
                hi += v;
                nhi += 1.0;
            }
        }
        if (nlo == 0.0 || nhi == 0.0) return;
        add(Vector(0.5 * (hi / nhi - lo / nlo)));
    };
    add_split(chol_inv.transpose() * u_star);
    add_split(Eigen::Vector2d(1.0, 0.0));
    add_split(Eigen::Vector2d(0.0, 1.0));
    const rng::CounterStream stream(seed);
    for (std::uint64_t r = 0; static_cast<int>(starts.size()) < budget && r < 1000; ++r) {
        const double th = std::numbers::pi * stream.uniform(r);
        add_split(Eigen::Vector2d(std::cos(th), std::sin(th)));
    }
    return select_fit(p, starts, single, options);
}

LowDimEstimate fit_2d(const Matrix& samples, double eps, double delta, std::uint64_t seed,
                      const LowDimOptions& options) {
    if (samples.cols() != 2) throw PreconditionError("fit_2d: samples must have two columns");
    const Matrix colmajor = samples;  // Eigen default storage is column-major
    return fit_2d(std::span<const double>(colmajor.col(0).data(), static_cast<std::size_t>(colmajor.rows())),
                  std::span<const double>(colmajor.col(1).data(), static_cast<std::size_t>(colmajor.rows())), eps,
                  delta, seed, options);
}

}  // namespace sparseclust
