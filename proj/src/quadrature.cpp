#include "ssanova/quadrature.hpp"

#include <cmath>

namespace ssanova {

Quadrature1D gauss_legendre(int n) {
    if (n < 1)
        throw ArgumentError("quadrature order must be positive");
    Eigen::VectorXd x(n), w(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / pp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        const double wi = 2.0 / ((1.0 - t * t) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    // map [-1,1] -> [0,1]
    Quadrature1D q;
    q.nodes = (x.array() + 1.0) / 2.0;
    q.weights = w / 2.0;
    return q;
}

TensorGrid tensor_gauss_legendre(int dim, int nodes_per_axis) {
    if (dim < 1 || dim > 3)
        throw ArgumentError("tensor Gauss-Legendre supports dimensions 1..3");
    const Quadrature1D q = gauss_legendre(nodes_per_axis);
    const int n = nodes_per_axis;
    int total = 1;
    for (int k = 0; k < dim; ++k) total *= n;

    TensorGrid grid;
    grid.points.resize(total, dim);
    grid.weights.resize(total);
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        double wt = 1.0;
        for (int k = 0; k < dim; ++k) {
            const int pos = rem % n;
            rem /= n;
            grid.points(idx, k) = q.nodes[pos];
            wt *= q.weights[pos];
        }
        grid.weights[idx] = wt;
    }
    return grid;
}

Eigen::MatrixXd halton_points(int dim, int count) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dim < 1 || dim > static_cast<int>(sizeof(primes) / sizeof(primes[0])))
        throw ArgumentError("halton dimension out of range");
    if (count < 1)
        throw ArgumentError("halton count must be positive");
    Eigen::MatrixXd P(count, dim);
    for (int d = 0; d < dim; ++d) {
        const int base = primes[d];
        for (int i = 0; i < count; ++i) {
            // radical inverse of i+1 in the given base
            double f = 1.0, r = 0.0;
            int k = i + 1;
            while (k > 0) {
                f /= base;
                r += f * (k % base);
                k /= base;
            }
            P(i, d) = r;
        }
    }
    return P;
}

} // namespace ssanova
