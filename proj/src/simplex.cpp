#include "sparseclust/simplex.hpp"

#include "sparseclust/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sparseclust::lp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class Tableau {
public:
    Tableau(const Problem& p, double pivot_tol) : m_(p.a.rows()), n_(p.a.cols()), tol_(pivot_tol) {
        for (Index i = 0; i < m_; ++i)
            if (p.b(i) < 0.0) ++n_art_;
        t_ = MatrixXd::Zero(m_ + 1, n_ + m_ + n_art_ + 1);
        basis_.resize(static_cast<std::size_t>(m_));
        Index art = 0;
        for (Index i = 0; i < m_; ++i) {
            const double sign = p.b(i) < 0.0 ? -1.0 : 1.0;
            t_.row(i).head(n_) = sign * p.a.row(i);
            t_(i, n_ + i) = sign;
            t_(i, rhs()) = sign * p.b(i);
            if (sign < 0.0) {
                t_(i, n_ + m_ + art) = 1.0;
                basis_[static_cast<std::size_t>(i)] = n_ + m_ + art;
                ++art;
            } else {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
            }
        }
    }

    Index rhs() const { return t_.cols() - 1; }
    Index first_artificial() const { return n_ + m_; }
    bool has_artificials() const { return n_art_ > 0; }
    const std::vector<Index>& basis() const { return basis_; }
    double value(Index i) const { return t_(i, rhs()); }
    double objective() const { return -t_(m_, rhs()); }

    void set_cost(const VectorXd& cost) {
        t_.row(m_).setZero();
        t_.row(m_).head(cost.size()) = cost.transpose();
        for (Index i = 0; i < m_; ++i) {
            const Index bi = basis_[static_cast<std::size_t>(i)];
            const double cb = bi < cost.size() ? cost(bi) : 0.0;
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    // Runs Bland-rule pivots over columns [0, allowed); returns optimal or unbounded.
    Status optimize(Index allowed, int& iterations, int max_iterations) {
        while (true) {
            Index enter = -1;
            for (Index j = 0; j < allowed; ++j)
                if (t_(m_, j) < -tol_) {
                    enter = j;
                    break;
                }
            if (enter < 0) return Status::optimal;
            if (iterations >= max_iterations) return Status::iteration_limit;
            Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m_; ++i) {
                const double coef = t_(i, enter);
                if (coef <= tol_) continue;
                const double ratio = t_(i, rhs()) / coef;
                if (leave < 0) {
                    best_ratio = ratio;
                    leave = i;
                    continue;
                }
                // Ties go to the smallest basic variable index.
                const double slack = 1e-12 * std::max(1.0, std::abs(best_ratio));
                if (ratio < best_ratio - slack ||
                    (ratio <= best_ratio + slack &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    best_ratio = std::min(ratio, best_ratio);
                    leave = i;
                }
            }
            if (leave < 0) return Status::unbounded;
            pivot(leave, enter);
            ++iterations;
        }
    }

    // Pivots basic artificials out of the basis where a structural column allows it.
    void expel_artificials() {
        for (Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < first_artificial()) continue;
            for (Index j = 0; j < first_artificial(); ++j)
                if (std::abs(t_(i, j)) > tol_) {
                    pivot(i, j);
                    break;
                }
        }
    }

private:
    void pivot(Index r, Index c) {
        t_.row(r) /= t_(r, c);
        for (Index i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f != 0.0) t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    Index m_;
    Index n_;
    Index n_art_ = 0;
    double tol_;
    MatrixXd t_;
    std::vector<Index> basis_;
};

double certificate(const Problem& p, const VectorXd& x, const VectorXd& y) {
    const VectorXd slack = p.b - p.a * x;
    const VectorXd reduced = p.c - p.a.transpose() * y;
    double worst = 0.0;
    for (Index i = 0; i < slack.size(); ++i) {
        worst = std::max({worst, -slack(i), y(i), std::abs(y(i) * slack(i))});
    }
    for (Index j = 0; j < x.size(); ++j) {
        worst = std::max({worst, -x(j), -reduced(j), std::abs(x(j) * reduced(j))});
    }
    return worst;
}

}  // namespace

const char* to_string(Status status) {
    switch (status) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

Result solve(const Problem& p, const Options& options) {
    const Index m = p.a.rows();
    const Index n = p.a.cols();
    if (p.b.size() != m || p.c.size() != n) throw PreconditionError("lp::solve: dimension mismatch");

    Result result;
    Tableau tab(p, options.pivot_tol);

    if (tab.has_artificials()) {
        VectorXd phase1 = VectorXd::Zero(tab.rhs());
        phase1.tail(tab.rhs() - tab.first_artificial()).setOnes();
        tab.set_cost(phase1);
        const Status s1 = tab.optimize(tab.rhs(), result.iterations, options.max_iterations);
        if (s1 == Status::iteration_limit) {
            result.status = s1;
            return result;
        }
        if (tab.objective() > options.feas_tol * (1.0 + p.b.cwiseAbs().maxCoeff())) {
            result.status = Status::infeasible;
            return result;
        }
        tab.expel_artificials();
    }

    tab.set_cost(p.c);
    result.status = tab.optimize(tab.first_artificial(), result.iterations, options.max_iterations);
    if (result.status != Status::optimal) return result;

    // Re-solve the final basis against the original data.
    const auto& basis = tab.basis();
    const bool clean = std::all_of(basis.begin(), basis.end(), [&](Index j) { return j < tab.first_artificial(); });
    VectorXd full = VectorXd::Zero(n + m);
    if (clean) {
        MatrixXd bmat(m, m);
        VectorXd cost_b(m);
        for (Index k = 0; k < m; ++k) {
            const Index j = basis[static_cast<std::size_t>(k)];
            if (j < n) {
                bmat.col(k) = p.a.col(j);
                cost_b(k) = p.c(j);
            } else {
                bmat.col(k) = VectorXd::Unit(m, j - n);
                cost_b(k) = 0.0;
            }
        }
        const Eigen::PartialPivLU<MatrixXd> lu(bmat);
        const VectorXd xb = lu.solve(p.b);
        for (Index k = 0; k < m; ++k) full(basis[static_cast<std::size_t>(k)]) = xb(k);
        result.dual = lu.transpose().solve(cost_b);
    } else {
        for (Index k = 0; k < m; ++k) {
            const Index j = basis[static_cast<std::size_t>(k)];
            if (j < n + m) full(j) = tab.value(k);
        }
        result.dual = VectorXd::Zero(m);
    }
    result.x = full.head(n);
    const double scale = 1.0 + (result.x.size() ? result.x.cwiseAbs().maxCoeff() : 0.0);
    for (Index j = 0; j < n; ++j)
        if (result.x(j) < 1e-13 * scale) result.x(j) = 0.0;
    result.objective = p.c.dot(result.x);
    result.certificate_residual = certificate(p, result.x, result.dual);
    return result;
}

}  // namespace sparseclust::lp
