#include "padiclf/ratlin.hpp"

#include "padiclf/errors.hpp"

namespace padiclf {

QMat q_identity(size_t n) {
    QMat I(n, QVec(n, 0));
    for (size_t i = 0; i < n; ++i) I[i][i] = 1;
    return I;
}

QMat q_mul(const QMat& A, const QMat& B) {
    size_t n = A.size(), m = B.empty() ? 0 : B[0].size(), inner = B.size();
    QMat C(n, QVec(m, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t k = 0; k < inner; ++k) {
            if (A[i][k] == 0) continue;
            for (size_t j = 0; j < m; ++j)
                if (B[k][j] != 0) C[i][j] += A[i][k] * B[k][j];
        }
    return C;
}

QVec q_apply(const QMat& A, const QVec& x) {
    QVec y(A.size(), 0);
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < x.size(); ++j)
            if (A[i][j] != 0 && x[j] != 0) y[i] += A[i][j] * x[j];
    return y;
}

std::vector<size_t> rref(QMat& A) {
    std::vector<size_t> pivots;
    if (A.empty()) return pivots;
    size_t rows = A.size(), cols = A[0].size(), r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        size_t sel = r;
        while (sel < rows && A[sel][c] == 0) ++sel;
        if (sel == rows) continue;
        std::swap(A[sel], A[r]);
        mpq_class inv = 1 / A[r][c];
        for (size_t j = c; j < cols; ++j) A[r][j] *= inv;
        for (size_t i = 0; i < rows; ++i) {
            if (i == r || A[i][c] == 0) continue;
            mpq_class f = A[i][c];
            for (size_t j = c; j < cols; ++j) A[i][j] -= f * A[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

std::vector<QVec> kernel_basis(QMat A, size_t ncols) {
    std::vector<size_t> pivots = rref(A);
    std::vector<bool> is_pivot(ncols, false);
    for (size_t c : pivots) is_pivot[c] = true;
    std::vector<QVec> basis;
    for (size_t f = 0; f < ncols; ++f) {
        if (is_pivot[f]) continue;
        QVec v(ncols, 0);
        v[f] = 1;
        for (size_t r = 0; r < pivots.size(); ++r)
            v[pivots[r]] = -A[r][f];
        basis.push_back(std::move(v));
    }
    return basis;
}

QVec coords_in_span(const std::vector<QVec>& basis, const QVec& target) {
    if (basis.empty()) {
        for (const auto& x : target)
            if (x != 0) throw InternalError("coords_in_span: target outside empty span");
        return {};
    }
    size_t dim = target.size(), n = basis.size();
    QMat A(dim, QVec(n + 1, 0));
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j < n; ++j) A[i][j] = basis[j][i];
        A[i][n] = target[i];
    }
    std::vector<size_t> pivots = rref(A);
    QVec coords(n, 0);
    for (size_t r = 0; r < pivots.size(); ++r) {
        if (pivots[r] == n) throw InternalError("coords_in_span: target outside span");
        coords[pivots[r]] = A[r][n];
    }
    return coords;
}

mpq_class q_det(QMat A) {
    size_t n = A.size();
    mpq_class det = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t sel = c;
        while (sel < n && A[sel][c] == 0) ++sel;
        if (sel == n) return 0;
        if (sel != c) {
            std::swap(A[sel], A[c]);
            det = -det;
        }
        det *= A[c][c];
        mpq_class inv = 1 / A[c][c];
        for (size_t i = c + 1; i < n; ++i) {
            if (A[i][c] == 0) continue;
            mpq_class f = A[i][c] * inv;
            for (size_t j = c; j < n; ++j) A[i][j] -= f * A[c][j];
        }
    }
    return det;
}

QVec charpoly(const QMat& A) {
    size_t n = A.size();
    // Interpolate det(xI - A) at x = 0..n.
    std::vector<mpq_class> xs, ys;
    for (size_t i = 0; i <= n; ++i) {
        QMat B = A;
        for (auto& row : B)
            for (auto& e : row) e = -e;
        for (size_t j = 0; j < n; ++j) B[j][j] += static_cast<long>(i);
        xs.emplace_back(static_cast<long>(i));
        ys.push_back(q_det(B));
    }
    // Newton's divided differences, then expand.
    size_t m = xs.size();
    std::vector<mpq_class> dd = ys;
    for (size_t lvl = 1; lvl < m; ++lvl)
        for (size_t i = m - 1; i >= lvl; --i)
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - lvl]);
    QVec poly(m, 0);
    QVec base(1, 1); // product (x - x_0)...(x - x_{j-1}), ascending
    for (size_t j = 0; j < m; ++j) {
        for (size_t i = 0; i < base.size(); ++i) poly[i] += dd[j] * base[i];
        QVec next(base.size() + 1, 0);
        for (size_t i = 0; i < base.size(); ++i) {
            next[i + 1] += base[i];
            next[i] -= xs[j] * base[i];
        }
        base = std::move(next);
    }
    poly.resize(n + 1);
    return poly;
}

mpq_class poly_eval(const QVec& poly, const mpz_class& x) {
    mpq_class acc = 0;
    for (size_t i = poly.size(); i-- > 0;) {
        acc *= x;
        acc += poly[i];
    }
    return acc;
}

std::vector<QVec> generalized_kernel(const QMat& A, const mpq_class& a, size_t power) {
    size_t n = A.size();
    QMat B = A;
    for (size_t i = 0; i < n; ++i) B[i][i] -= a;
    QMat P = q_identity(n);
    std::vector<QVec> last;
    for (size_t e = 0; e < power; ++e) {
        P = q_mul(B, P);
        std::vector<QVec> ker = kernel_basis(P, n);
        if (ker.size() == last.size() && e > 0) break;
        last = std::move(ker);
    }
    return last;
}

std::vector<mpz_class> primitive_integral(const QVec& v) {
    mpz_class lcm = 1;
    for (const auto& x : v)
        mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.get_den().get_mpz_t());
    std::vector<mpz_class> out;
    out.reserve(v.size());
    mpz_class content = 0;
    for (const auto& x : v) {
        mpq_class y = x * lcm;
        out.push_back(y.get_num());
        mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), out.back().get_mpz_t());
    }
    if (content == 0) return out;
    for (auto& x : out) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), content.get_mpz_t());
    for (const auto& x : out) {
        if (x == 0) continue;
        if (x < 0)
            for (auto& y : out) y = -y;
        break;
    }
    return out;
}

} // namespace padiclf
