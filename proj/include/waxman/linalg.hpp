#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "waxman/errors.hpp"

namespace waxman {

namespace detail {

inline void require_finite(const std::vector<double>& entries, const char* what) {
    for (double x : entries) {
        if (!std::isfinite(x)) {
            throw UsageError(std::string(what) + " contains a non-finite entry");
        }
    }
}

}  // namespace detail

// Dense real vector. Entries are validated finite at construction; treat
// instances as immutable once shared across threads.
class Vector {
public:
    explicit Vector(std::vector<double> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) throw UsageError("Vector requires dim >= 1");
        detail::require_finite(entries_, "Vector");
    }

    static Vector zeros(std::size_t dim) {
        if (dim == 0) throw UsageError("Vector requires dim >= 1");
        Vector v;
        v.entries_.assign(dim, 0.0);
        return v;
    }

    static Vector basis(std::size_t dim, std::size_t k) {
        if (k >= dim) throw UsageError("basis index out of range");
        Vector v = zeros(dim);
        v.entries_[k] = 1.0;
        return v;
    }

    std::size_t dim() const noexcept { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    double& operator[](std::size_t i) { return entries_[i]; }
    const std::vector<double>& entries() const noexcept { return entries_; }

private:
    Vector() = default;
    std::vector<double> entries_;
};

// Dense real symmetric matrix. Only the upper triangle is stored, so
// entries(i,j) == entries(j,i) holds exactly by construction.
class SymMatrix {
public:
    explicit SymMatrix(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw UsageError("SymMatrix requires dim >= 1");
        packed_.assign(dim * (dim + 1) / 2, 0.0);
    }

    static SymMatrix identity(std::size_t dim) {
        SymMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
        return m;
    }

    std::size_t dim() const noexcept { return dim_; }

    double at(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }

    void set(std::size_t i, std::size_t j, double value) {
        if (!std::isfinite(value)) throw UsageError("SymMatrix entry must be finite");
        packed_[index(i, j)] = value;
    }

    Vector mult(const Vector& x) const {
        if (x.dim() != dim_) throw UsageError("SymMatrix::mult dimension mismatch");
        Vector y = Vector::zeros(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) acc += at(i, j) * x[j];
            y[i] = acc;
        }
        return y;
    }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i >= dim_ || j >= dim_) throw UsageError("SymMatrix index out of range");
        if (i > j) std::swap(i, j);
        return i * dim_ - i * (i - 1) / 2 + (j - i);
    }

    std::size_t dim_;
    std::vector<double> packed_;
};

struct Eigenpair2x2 {
    double eigenvalue_low;
    double eigenvalue_high;
    std::array<double, 2> eigvec_low;
    std::array<double, 2> eigvec_high;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) throw UsageError("dot dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline Vector normalize(const Vector& a) {
    double n = norm2(a);
    if (n == 0.0) throw ZeroVectorError("cannot normalize the zero vector");
    std::vector<double> out(a.entries());
    for (double& x : out) x /= n;
    return Vector(std::move(out));
}

// Analytic eigen-decomposition of [[a, b], [b, c]]. The root nearer to
// cancellation is recovered from the determinant so both eigenvalues stay
// accurate, and the eigenvectors are an exactly orthonormal rotated pair.
inline Eigenpair2x2 eig_sym_2x2(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw UsageError("eig_sym_2x2 requires finite entries");
    }
    if (b == 0.0) {
        Eigenpair2x2 p{};
        if (a <= c) {
            p = {a, c, {1.0, 0.0}, {0.0, 1.0}};
        } else {
            p = {c, a, {0.0, 1.0}, {1.0, 0.0}};
        }
        return p;
    }

    const double mean = 0.5 * (a + c);
    const double half_gap = 0.5 * (a - c);
    const double disc = std::hypot(half_gap, b);
    const double det = a * c - b * b;
    double lo, hi;
    if (mean >= 0.0) {
        hi = mean + disc;
        lo = (hi != 0.0) ? det / hi : mean - disc;
    } else {
        lo = mean - disc;
        hi = (lo != 0.0) ? det / lo : mean + disc;
    }

    // Eigenvector of the high eigenvalue, built from the non-cancelling
    // component; the low one is its orthogonal complement.
    double vx, vy;
    if (half_gap >= 0.0) {
        vx = half_gap + disc;
        vy = b;
    } else {
        vx = b;
        vy = disc - half_gap;
    }
    const double n = std::hypot(vx, vy);
    vx /= n;
    vy /= n;

    Eigenpair2x2 p{};
    p.eigenvalue_low = lo;
    p.eigenvalue_high = hi;
    p.eigvec_high = {vx, vy};
    p.eigvec_low = {-vy, vx};
    return p;
}

struct DenseEig {
    std::vector<double> eigenvalues;     // ascending
    std::vector<Vector> eigenvectors;    // eigenvectors[k] pairs with eigenvalues[k]
};

// Cyclic Jacobi eigensolver for dense symmetric matrices. Self-contained
// brute-force oracle; capped at dim 512.
inline DenseEig eig_sym_dense(const SymMatrix& m) {
    const std::size_t n = m.dim();
    if (n > 512) throw UsageError("eig_sym_dense supports dim <= 512");

    std::vector<double> a(n * n);
    std::vector<double> q(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        q[i * n + i] = 1.0;
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m.at(i, j);
    }

    double base = 0.0;
    for (double x : a) base += x * x;
    base = std::sqrt(base);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) off += a[p * n + r] * a[p * n + r];
        }
        if (std::sqrt(off) <= 1e-15 * base || off == 0.0) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apq = a[p * n + r];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[r * n + r];
                const double theta = 0.5 * (aqq - app) / apq;
                double t;
                if (std::abs(theta) > 1e153) {
                    t = 0.5 / theta;
                } else {
                    t = std::copysign(1.0, theta) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                const double tau = sn / (1.0 + cs);
                const double h = t * apq;

                a[p * n + p] = app - h;
                a[r * n + r] = aqq + h;
                a[p * n + r] = 0.0;
                a[r * n + p] = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == r) continue;
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + r];
                    const double nkp = akp - sn * (akq + akp * tau);
                    const double nkq = akq + sn * (akp - akq * tau);
                    a[k * n + p] = nkp;
                    a[p * n + k] = nkp;
                    a[k * n + r] = nkq;
                    a[r * n + k] = nkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = q[k * n + p];
                    const double vkq = q[k * n + r];
                    q[k * n + p] = vkp - sn * (vkq + vkp * tau);
                    q[k * n + r] = vkq + sn * (vkp - vkq * tau);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const double di = a[i * n + i];
        const double dj = a[j * n + j];
        return di < dj || (di == dj && i < j);
    });

    DenseEig out;
    out.eigenvalues.reserve(n);
    out.eigenvectors.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = order[k];
        out.eigenvalues.push_back(a[c * n + c]);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = q[i * n + c];
        out.eigenvectors.push_back(Vector(std::move(col)));
    }
    return out;
}

}  // namespace waxman
