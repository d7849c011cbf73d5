#include "scralign/ridge.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace scralign {

GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double a,
                                            double b, double tol, int max_iters) {
    if (!(b > a)) throw std::invalid_argument("golden_section_minimize: bad bracket");
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c);
    double fd = f(d);
    int evals = 2;
    for (int i = 0; i < max_iters && (b - a) > tol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    GoldenSectionResult r;
    r.x = 0.5 * (a + b);
    r.fx = f(r.x);
    r.evals = evals + 1;
    return r;
}

RidgeDesign::RidgeDesign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows() || X.rows() == 0)
        throw std::invalid_argument("RidgeDesign: row count mismatch");
    n_ = static_cast<int>(X.rows());
    d_ = static_cast<int>(X.cols());
    dual_ = d_ > n_;
    scale_ = X.squaredNorm() / static_cast<double>(n_);

    if (dual_) {
        const Eigen::MatrixXd gram = X * X.transpose(); // n x n
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("RidgeDesign: eigendecomposition failed");
        eigs_ = eig.eigenvalues();
        projected_ = eig.eigenvectors().transpose() * Y; // n x m
        basis_ = X.transpose() * eig.eigenvectors();     // d x n
    } else {
        const Eigen::MatrixXd gram = X.transpose() * X; // d x d
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("RidgeDesign: eigendecomposition failed");
        eigs_ = eig.eigenvalues();
        projected_ = eig.eigenvectors().transpose() * (X.transpose() * Y); // d x m
        basis_ = eig.eigenvectors();                                       // d x d
    }
}

Eigen::MatrixXd RidgeDesign::solve(double lambda) const {
    if (lambda < 0.0) throw std::invalid_argument("RidgeDesign::solve: negative lambda");
    const double largest = std::max(eigs_.maxCoeff(), 1.0);
    const double smallest = eigs_.minCoeff() + lambda;
    if (smallest <= 1e-14 * largest)
        throw std::runtime_error(
            "RidgeDesign::solve: system is ill-conditioned at this lambda; widen the bracket "
            "upwards");
    // W = U diag(1/(e_i + lambda)) (U^T X^T Y)   [primal]
    // W = (X^T U) diag(1/(e_i + lambda)) (U^T Y) [dual]
    Eigen::MatrixXd scaled = projected_;
    for (Eigen::Index i = 0; i < scaled.rows(); ++i) scaled.row(i) /= (eigs_(i) + lambda);
    return basis_ * scaled;
}

} // namespace scralign
