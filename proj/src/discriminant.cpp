#include "sparseclust/discriminant.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/normal.hpp"
#include "sparseclust/simplex.hpp"

#include <cmath>

namespace sparseclust {

const char* to_string(DantzigStatus status) {
    return status == DantzigStatus::optimal ? "optimal" : "infeasible";
}

DantzigSolution solve_dantzig(const Matrix& sigma_hat, const Vector& delta_mu_hat, double lambda) {
    const auto d = delta_mu_hat.size();
    if (d == 0 || sigma_hat.rows() != d || sigma_hat.cols() != d)
        throw PreconditionError("solve_dantzig: dimension mismatch");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PreconditionError("solve_dantzig: lambda must be >= 0");
    if (!sigma_hat.allFinite() || !delta_mu_hat.allFinite())
        throw PreconditionError("solve_dantzig: non-finite input");

    lp::Problem prob;
    prob.a.resize(2 * d, 2 * d);
    prob.a << sigma_hat, -sigma_hat, -sigma_hat, sigma_hat;
    prob.b.resize(2 * d);
    prob.b << delta_mu_hat.array() + lambda, lambda - delta_mu_hat.array();
    prob.c = Vector::Ones(2 * d);

    const lp::Result res = lp::solve(prob, lp::Options{1e-9, kDantzigFeasTol, 100000});

    DantzigSolution sol;
    sol.lambda = lambda;
    sol.iterations = res.iterations;
    if (res.status == lp::Status::infeasible) {
        sol.status = DantzigStatus::infeasible;
        sol.beta_hat = Vector::Zero(d);
        sol.max_residual = delta_mu_hat.cwiseAbs().maxCoeff();
        return sol;
    }
    if (res.status != lp::Status::optimal)
        throw AlgorithmFailure(std::string("solve_dantzig: simplex stopped with status ") + lp::to_string(res.status));
    sol.status = DantzigStatus::optimal;
    sol.beta_hat = res.x.head(d) - res.x.tail(d);
    sol.l1_norm = sol.beta_hat.lpNorm<1>();
    sol.max_residual = (sigma_hat * sol.beta_hat - delta_mu_hat).cwiseAbs().maxCoeff();
    sol.certificate_residual = res.certificate_residual;
    return sol;
}

LinearRule plug_in_rule(const Vector& mu1_hat, const Vector& mu2_hat, const DantzigSolution& solution) {
    if (solution.status != DantzigStatus::optimal)
        throw PreconditionError("plug_in_rule: the discriminant program was not solved to optimality");
    if (mu1_hat.size() != solution.beta_hat.size() || mu2_hat.size() != solution.beta_hat.size())
        throw PreconditionError("plug_in_rule: dimension mismatch");
    return LinearRule{0.5 * (mu1_hat + mu2_hat), solution.beta_hat};
}

LinearRule plug_in_rule(const GmmEstimate& estimate, const DantzigSolution& solution) {
    return plug_in_rule(estimate.mu1_hat, estimate.mu2_hat, solution);
}

double corollary_lambda(std::size_t n, std::size_t d, double delta, double c1, double d0, std::size_t s,
                        double rho, double eta) {
    if (n == 0 || d == 0 || s == 0) throw PreconditionError("corollary_lambda: n, d, s must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("corollary_lambda: delta must lie in (0, 1)");
    if (!(c1 > 0.0 && d0 > 0.0 && rho > 0.0 && eta > 0.0))
        throw PreconditionError("corollary_lambda: c1, D0, rho, eta must be positive");
    const double nn = static_cast<double>(n);
    const double r = std::log(static_cast<double>(d) * nn / delta) / nn;
    return c1 * std::pow(r, 1.0 / 6.0) * std::sqrt(d0 * static_cast<double>(s) * rho) / eta +
           std::sqrt(c1) * std::pow(r, 1.0 / 12.0);
}

double corollary_omega(double eps0, double d0, std::size_t s, double eta) {
    if (!(eta > 0.0)) throw PreconditionError("corollary_omega: eta must be positive");
    return eps0 * d0 * static_cast<double>(s) / (eta * eta);
}

double plugin_signal_energy(const Vector& delta_mu_hat, const DantzigSolution& solution) {
    if (delta_mu_hat.size() != solution.beta_hat.size())
        throw PreconditionError("plugin_signal_energy: dimension mismatch");
    return delta_mu_hat.dot(solution.beta_hat);
}

SupportEstimate threshold_support(const DantzigSolution& solution, std::size_t s, double c, double eta) {
    if (!(c > 0.0)) throw PreconditionError("threshold_support: c must be positive");
    if (!(eta > 0.0)) throw PreconditionError("threshold_support: eta must be positive");
    if (s == 0) throw PreconditionError("threshold_support: s must be positive");
    SupportEstimate out;
    out.threshold = c * solution.lambda * std::sqrt(static_cast<double>(s));
    out.recovery_condition_met = c > 2.0 / eta;
    std::vector<std::size_t> idx;
    for (Eigen::Index i = 0; i < solution.beta_hat.size(); ++i)
        if (std::abs(solution.beta_hat(i)) > out.threshold) idx.push_back(static_cast<std::size_t>(i));
    out.features = FeatureSet(std::move(idx), static_cast<std::size_t>(solution.beta_hat.size()));
    return out;
}

double linf_error_bound(double lambda, std::size_t s, double eta) {
    if (!(lambda >= 0.0) || s == 0 || !(eta > 0.0))
        throw PreconditionError("linf_error_bound: need lambda >= 0, s >= 1, eta > 0");
    return 2.0 * lambda * std::sqrt(static_cast<double>(s)) / eta;
}

BoundReport proposition1_bound(const GmmParams& params, double eps, double lambda) {
    if (!(eps >= 0.0) || !(lambda >= 0.0)) throw PreconditionError("proposition1_bound: need eps, lambda >= 0");
    const Vector beta = true_discriminant(params);
    BoundReport r;
    r.rho = params.half_difference().dot(beta);
    r.beta_l1 = beta.lpNorm<1>();
    const double root_eps = std::sqrt(eps);
    r.eps1 = (2.0 * lambda + 3.0 * root_eps) * r.beta_l1;
    r.eps2 = eps * r.beta_l1 * r.beta_l1 + 3.0 * (lambda + root_eps) * r.beta_l1;
    r.conditions_met = eps * r.beta_l1 + root_eps <= lambda;
    if (!(r.rho > 0.0)) {
        r.equal_means = true;
        r.bound = 0.5;
        return r;
    }
    const double arg = std::max((r.rho - r.eps1) / std::sqrt(r.rho + r.eps2), 0.0);
    r.bound = normal_pdf(arg) * (r.eps1 + r.eps2) / std::sqrt(r.rho);
    return r;
}

}  // namespace sparseclust
