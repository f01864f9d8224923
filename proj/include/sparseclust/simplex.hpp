#pragma once

// Dense two-phase primal simplex for
//
//     minimize c^T x  subject to  A x <= b,  x >= 0.
//
// Pivoting follows Bland's least-index rule in both the entering and the
// leaving choice, which rules out cycling. The final basis is re-solved from
// the original data, and the dual is recovered from it to certify optimality.

#include <Eigen/Dense>

namespace sparseclust::lp {

struct Problem {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Options {
    double pivot_tol = 1e-9;
    double feas_tol = 1e-8;
    int max_iterations = 100000;
};

struct Result {
    Status status = Status::infeasible;
    Eigen::VectorXd x;
    Eigen::VectorXd dual;   // y <= 0 with A^T y <= c at optimality
    double objective = 0.0;
    int iterations = 0;
    /// Largest of primal infeasibility, dual infeasibility and
    /// complementary-slackness violation at the returned point.
    double certificate_residual = 0.0;
};

Result solve(const Problem& problem, const Options& options = {});

const char* to_string(Status status);

}  // namespace sparseclust::lp
