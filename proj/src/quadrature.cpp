#include "platevem/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "platevem/errors.hpp"

namespace platevem {

namespace {

double falling(int a, int i) {
    double r = 1.0;
    for (int k = 0; k < i; ++k) r *= a - k;
    return r;
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

double orient(const Point& a, const Point& b, const Point& c) {
    return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

bool in_triangle(const Point& p, const Point& a, const Point& b, const Point& c, double tol) {
    return orient(a, b, p) >= -tol && orient(b, c, p) >= -tol && orient(c, a, p) >= -tol;
}

}  // namespace

ScaledMonomialBasis::ScaledMonomialBasis(Point center, double h, int degree)
    : center_(std::move(center)), h_(h), degree_(degree) {
    if (degree < 0) throw InvalidArgument("basis degree must be >= 0");
    if (!(h > 0.0)) throw InvalidArgument("basis scale must be positive");
    for (int d = 0; d <= degree; ++d)
        for (int b = 0; b <= d; ++b) exponents_.push_back({d - b, b});
}

int ScaledMonomialBasis::index_of(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + b;
}

Eigen::MatrixXd ScaledMonomialBasis::eval(const Point& x, int order) const {
    if (order < 0 || order > 3) throw InvalidArgument("derivative order must be in 0..3");
    const double X = (x.x() - center_.x()) / h_;
    const double Y = (x.y() - center_.y()) / h_;
    const double scale = ipow(1.0 / h_, order);
    Eigen::MatrixXd out(order + 1, size());
    for (int r = 0; r <= order; ++r) {
        const int i = order - r;  // x-derivatives
        const int j = r;          // y-derivatives
        for (int k = 0; k < size(); ++k) {
            const auto [a, b] = exponents_[static_cast<std::size_t>(k)];
            if (a < i || b < j) {
                out(r, k) = 0.0;
                continue;
            }
            out(r, k) = scale * falling(a, i) * falling(b, j) * ipow(X, a - i) * ipow(Y, b - j);
        }
    }
    return out;
}

Eigen::VectorXd ScaledMonomialBasis::values(const Point& x) const {
    return eval(x, 0).row(0).transpose();
}

double QuadratureRule::weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("Gauss-Legendre needs at least one point");
    GaussLegendre g;
    g.nodes.resize(static_cast<std::size_t>(n));
    g.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Map [-1, 1] to [0, 1], ascending nodes.
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        g.nodes[idx] = 0.5 * (x + 1.0);
        g.weights[idx] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int degree) {
    if (degree < 0) throw InvalidArgument("quadrature degree must be >= 0");
    const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
    const GaussLegendre g = gauss_legendre(n);
    const double jac = orient(a, b, c);
    QuadratureRule rule;
    rule.exactness_degree = degree;
    rule.points.reserve(static_cast<std::size_t>(n * n));
    rule.weights.reserve(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
        const double u = g.nodes[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const double v = g.nodes[static_cast<std::size_t>(j)] * (1.0 - u);
            rule.points.push_back(a + u * (b - a) + v * (c - a));
            rule.weights.push_back(jac * (1.0 - u) * g.weights[static_cast<std::size_t>(i)] *
                                   g.weights[static_cast<std::size_t>(j)]);
        }
    }
    return rule;
}

std::vector<std::array<Point, 3>> triangulate_polygon(std::span<const Point> polygon) {
    const std::size_t m = polygon.size();
    if (m < 3) throw GeometryError("cannot triangulate a polygon with fewer than 3 vertices");
    double area = 0.0;
    Point c = Point::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        const Point& p = polygon[i];
        const Point& q = polygon[(i + 1) % m];
        const double w = p.x() * q.y() - q.x() * p.y();
        area += w;
        c += w * (p + q);
    }
    if (!(area > 0.0)) throw GeometryError("polygon is not counter-clockwise");
    c /= 3.0 * area;
    area *= 0.5;

    double scale = 0.0;
    for (const Point& p : polygon) scale = std::max(scale, (p - polygon[0]).norm());
    const double tol = 1e-12 * scale * scale;

    std::vector<std::array<Point, 3>> tris;
    bool fan_ok = true;
    for (std::size_t i = 0; i < m && fan_ok; ++i)
        fan_ok = orient(c, polygon[i], polygon[(i + 1) % m]) > tol;
    if (fan_ok) {
        for (std::size_t i = 0; i < m; ++i) tris.push_back({c, polygon[i], polygon[(i + 1) % m]});
        return tris;
    }

    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const Point& a = polygon[idx[(k + idx.size() - 1) % idx.size()]];
            const Point& b = polygon[idx[k]];
            const Point& d = polygon[idx[(k + 1) % idx.size()]];
            if (orient(a, b, d) <= tol) continue;
            bool empty = true;
            for (std::size_t l = 0; l < idx.size() && empty; ++l) {
                const Point& p = polygon[idx[l]];
                if (l == k || l == (k + 1) % idx.size() || l == (k + idx.size() - 1) % idx.size())
                    continue;
                if (in_triangle(p, a, b, d, tol)) empty = false;
            }
            if (!empty) continue;
            tris.push_back({a, b, d});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
            clipped = true;
            break;
        }
        if (!clipped) throw GeometryError("ear clipping found no ear");
    }
    const Point& a = polygon[idx[0]];
    const Point& b = polygon[idx[1]];
    const Point& d = polygon[idx[2]];
    if (orient(a, b, d) > tol) tris.push_back({a, b, d});
    return tris;
}

QuadratureRule polygon_quadrature(std::span<const Point> polygon, int degree) {
    QuadratureRule rule;
    rule.exactness_degree = degree;
    for (const auto& t : triangulate_polygon(polygon)) {
        const QuadratureRule r = triangle_quadrature(t[0], t[1], t[2], degree);
        rule.points.insert(rule.points.end(), r.points.begin(), r.points.end());
        rule.weights.insert(rule.weights.end(), r.weights.begin(), r.weights.end());
    }
    return rule;
}

QuadratureRule edge_quadrature(const Point& a, const Point& b, int degree) {
    if (degree < 0) throw InvalidArgument("quadrature degree must be >= 0");
    const double len = (b - a).norm();
    if (!(len > 0.0)) throw InvalidArgument("edge endpoints coincide");
    const GaussLegendre g = gauss_legendre(degree / 2 + 1);
    QuadratureRule rule;
    rule.exactness_degree = degree;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        rule.points.push_back(a + g.nodes[i] * (b - a));
        rule.weights.push_back(len * g.weights[i]);
    }
    return rule;
}

}  // namespace platevem
