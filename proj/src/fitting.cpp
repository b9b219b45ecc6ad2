#include "hdplus/fitting.hpp"

#include "hdplus/errors.hpp"

namespace hdplus::fitting {

LinearFit linear_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                               const std::optional<Eigen::VectorXd>& weights) {
    const auto n = design.rows();
    const auto p = design.cols();
    if (y.size() != n) throw InputError("least squares: design/data size mismatch");
    if (n < p) throw SingularFitError("least squares: fewer points than parameters");

    Eigen::VectorXd sw = Eigen::VectorXd::Ones(n);
    if (weights) {
        if (weights->size() != n) throw InputError("least squares: weight size mismatch");
        sw = weights->cwiseSqrt();
    }
    const Eigen::MatrixXd a = sw.asDiagonal() * design;
    const Eigen::VectorXd b = sw.asDiagonal() * y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) throw SingularFitError("least squares: singular design matrix");

    LinearFit fit;
    fit.params = qr.solve(b);
    const Eigen::VectorXd r = a * fit.params - b;
    fit.chi_square = r.squaredNorm();
    fit.dof = static_cast<int>(n - p);
    const Eigen::MatrixXd normal = a.transpose() * a;
    fit.covariance = normal.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    if (!weights && fit.dof > 0) fit.covariance *= fit.chi_square / fit.dof;
    return fit;
}

}  // namespace hdplus::fitting
