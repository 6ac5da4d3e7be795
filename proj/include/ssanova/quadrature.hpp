#pragma once

#include <Eigen/Dense>

#include "ssanova/errors.hpp"

namespace ssanova {

/// Nodes and weights on [0, 1].
struct Quadrature1D {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Gauss-Legendre rule with `n` nodes, mapped from [-1,1] to [0,1].
/// Exact for polynomials up to degree 2n-1.
Quadrature1D gauss_legendre(int n);

/// Tensor-product grid over the unit cube: points is (n^dim) x dim,
/// weights the matching products. Supports dim 1..3.
struct TensorGrid {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
};

TensorGrid tensor_gauss_legendre(int dim, int nodes_per_axis);

/// First `count` Halton points in `dim` dimensions (prime bases 2, 3, 5, ...),
/// starting at index 1. Used for quasi-Monte-Carlo integration above dim 3.
Eigen::MatrixXd halton_points(int dim, int count);

} // namespace ssanova
