#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace hdplus::fitting {

struct LinearFit {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    double chi_square = 0.0;
    int dof = 0;
};

/// Weighted linear least squares y ~ X p. With weights, covariance is
/// (X^T W X)^-1; without, it is scaled by the residual variance when dof > 0.
/// Throws SingularFitError for a rank-deficient design.
LinearFit linear_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                               const std::optional<Eigen::VectorXd>& weights);

}  // namespace hdplus::fitting
