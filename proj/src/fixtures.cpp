#include "sparseclust/fixtures.hpp"

#include "sparseclust/errors.hpp"

#include <cmath>

namespace sparseclust {

GmmParams figure1_embed(std::size_t d, double correlation, std::optional<double> rho_target) {
    if (d < 2) throw PreconditionError("figure1_embed: d must be at least 2");
    if (!(correlation > -1.0 && correlation < 1.0))
        throw PreconditionError("figure1_embed: correlation must lie in (-1, 1)");
    if (rho_target && !(*rho_target > 0.0)) throw PreconditionError("figure1_embed: rho_target must be positive");
    const auto dd = static_cast<Eigen::Index>(d);
    // For Delta_mu = h e_1 the signal energy is h^2 / (1 - r^2).
    const double h = rho_target ? std::sqrt(*rho_target * (1.0 - correlation * correlation)) : 1.0;
    Matrix sigma = Matrix::Identity(dd, dd);
    sigma(0, 1) = sigma(1, 0) = correlation;
    Vector mu1 = Vector::Zero(dd), mu2 = Vector::Zero(dd);
    mu1(1) = h;
    mu2(1) = -h;
    return GmmParams(mu1, mu2, sigma);
}

GmmParams identity_sparse(std::size_t d, std::size_t s, std::optional<double> rho_target) {
    if (s < 1 || s > d) throw PreconditionError("identity_sparse: need 1 <= s <= d");
    if (rho_target && !(*rho_target > 0.0)) throw PreconditionError("identity_sparse: rho_target must be positive");
    const auto dd = static_cast<Eigen::Index>(d);
    const double h = rho_target ? std::sqrt(*rho_target / static_cast<double>(s)) : 1.0;
    Vector mu1 = Vector::Zero(dd), mu2 = Vector::Zero(dd);
    mu1.head(static_cast<Eigen::Index>(s)).setConstant(h);
    mu2.head(static_cast<Eigen::Index>(s)).setConstant(-h);
    return GmmParams(mu1, mu2, Matrix::Identity(dd, dd));
}

}  // namespace sparseclust
