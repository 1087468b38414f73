#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "platevem/mesh.hpp"

namespace platevem {

/// Scaled monomials m_a(x) = ((x - x_E) / h_E)^a, |a| <= degree, graded-lex
/// order: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) (3,0) ...
class ScaledMonomialBasis {
public:
    ScaledMonomialBasis(Point center, double h, int degree);

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const Point& center() const { return center_; }
    double scale() const { return h_; }
    const std::vector<std::array<int, 2>>& exponents() const { return exponents_; }
    /// Position of exponent (a, b) in the ordering.
    static int index_of(int a, int b);

    /// Row r of the result holds the r-th partial derivative of the given
    /// order for every basis function (columns). Rows are ordered by the
    /// number of y-derivatives: order 1 -> (x, y), order 2 -> (xx, xy, yy),
    /// order 3 -> (xxx, xxy, xyy, yyy).
    Eigen::MatrixXd eval(const Point& x, int derivative_order = 0) const;
    /// Plain values as a vector.
    Eigen::VectorXd values(const Point& x) const;

private:
    Point center_;
    double h_;
    int degree_;
    std::vector<std::array<int, 2>> exponents_;
};

struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness_degree = 0;

    std::size_t size() const { return points.size(); }
    double weight_sum() const;
};

/// n-point Gauss-Legendre rule on [0, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

/// Collapsed Gauss rule on a triangle, exact for total degree <= degree.
QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int degree);

/// Triangles covering a simple CCW polygon: a centroid fan when every fan
/// triangle is positively oriented, ear clipping otherwise.
std::vector<std::array<Point, 3>> triangulate_polygon(std::span<const Point> polygon);

QuadratureRule polygon_quadrature(std::span<const Point> polygon, int degree = 6);

/// Gauss-Legendre on the segment [a, b]; weights sum to |b - a|.
QuadratureRule edge_quadrature(const Point& a, const Point& b, int degree);

}  // namespace platevem
