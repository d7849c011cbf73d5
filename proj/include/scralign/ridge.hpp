#pragma once

#include <functional>

#include <Eigen/Core>

namespace scralign {

struct GoldenSectionResult {
    double x = 0.0;
    double fx = 0.0;
    int evals = 0;
};

// Scalar minimization of a unimodal f over [a,b] to |b-a| <= tol.
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double a,
                                            double b, double tol = 1e-6, int max_iters = 200);

// Ridge problem over a fixed design: min_W ||X W - Y||_F^2 + lambda ||W||_F^2
// with X (n x d) and Y (n x m). The Gram eigendecomposition is computed once
// (dual n x n form when d > n, primal otherwise), so repeated solves across a
// lambda search cost only matrix products.
class RidgeDesign {
public:
    RidgeDesign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

    // W (d x m); throws when Gram + lambda*I is numerically singular
    Eigen::MatrixXd solve(double lambda) const;

    // mean squared row norm of the design; the natural unit for lambda brackets
    double scale() const { return scale_; }

    int samples() const { return n_; }

private:
    int n_ = 0, d_ = 0;
    bool dual_ = false;
    double scale_ = 0.0;
    Eigen::VectorXd eigs_;      // Gram eigenvalues, ascending
    Eigen::MatrixXd projected_; // U^T X^T Y (primal) or U^T Y (dual)
    Eigen::MatrixXd basis_;     // U (primal) or X^T U (dual)
};

} // namespace scralign
