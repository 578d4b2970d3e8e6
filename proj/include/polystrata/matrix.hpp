#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "polystrata/error.hpp"

// Exact integer linear algebra over Z^d: Hermite and Smith normal forms,
// kernels, lattice membership and saturation. All arithmetic is checked
// through 128-bit intermediates; inputs that overflow 64 bits raise a
// resource error instead of wrapping.

namespace polystrata::lin {

using I64 = long long;
using I128 = __int128;

using Vec = std::vector<I64>;
using Mat = std::vector<Vec>; // row major

inline I64 narrow(I128 v, const char* what = "integer") {
    if (v > I128(INT64_MAX) || v < I128(INT64_MIN))
        fail_resource(std::string(what) + " exceeds 64-bit range");
    return static_cast<I64>(v);
}

inline I64 checked_add(I64 a, I64 b) { return narrow(I128(a) + I128(b)); }
inline I64 checked_sub(I64 a, I64 b) { return narrow(I128(a) - I128(b)); }
inline I64 checked_mul(I64 a, I64 b) { return narrow(I128(a) * I128(b)); }

inline I64 gcd_i64(I64 a, I64 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) { I64 t = a % b; a = b; b = t; }
    return a;
}

inline Vec vec_add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = checked_add(a[i], b[i]);
    return r;
}

inline Vec vec_sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = checked_sub(a[i], b[i]);
    return r;
}

inline Vec vec_scale(I64 c, const Vec& a) {
    Vec r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = checked_mul(c, a[i]);
    return r;
}

inline Vec vec_neg(const Vec& a) { return vec_scale(-1, a); }

inline bool vec_is_zero(const Vec& a) {
    return std::all_of(a.begin(), a.end(), [](I64 x) { return x == 0; });
}

inline I64 dot(const Vec& a, const Vec& b) {
    I128 s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += I128(a[i]) * I128(b[i]);
    return narrow(s, "dot product");
}

// Divides out the gcd of the entries; the zero vector is returned unchanged.
inline Vec vec_primitive(Vec a) {
    I64 g = 0;
    for (I64 x : a) g = gcd_i64(g, x);
    if (g > 1)
        for (I64& x : a) x /= g;
    return a;
}

// y = A * x  (A acts on column vectors; rows of A are functionals).
inline Vec mat_apply(const Mat& a, const Vec& x) {
    Vec y(a.size());
    for (size_t i = 0; i < a.size(); ++i) y[i] = dot(a[i], x);
    return y;
}

// y = x * m for a row vector x (x as coefficients of the rows of m).
inline Vec vec_mat(const Vec& x, const Mat& m) {
    require(x.size() == m.size(), ErrorKind::internal, "vec_mat size mismatch");
    size_t cols = m.empty() ? 0 : m[0].size();
    Vec y(cols, 0);
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0)
            for (size_t j = 0; j < cols; ++j)
                y[j] = checked_add(y[j], checked_mul(x[i], m[i][j]));
    return y;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    size_t n = a.size(), k = b.size(), m = k ? b[0].size() : 0;
    Mat c(n, Vec(m, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
            I128 s = 0;
            for (size_t t = 0; t < k; ++t) s += I128(a[i][t]) * I128(b[t][j]);
            c[i][j] = narrow(s, "matrix product");
        }
    return c;
}

inline Mat mat_identity(size_t n) {
    Mat a(n, Vec(n, 0));
    for (size_t i = 0; i < n; ++i) a[i][i] = 1;
    return a;
}

inline Mat mat_transpose(const Mat& a) {
    size_t n = a.size(), m = n ? a[0].size() : 0;
    Mat t(m, Vec(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) t[j][i] = a[i][j];
    return t;
}

inline I64 rank(Mat a) {
    size_t rows = a.size(), cols = rows ? a[0].size() : 0;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        size_t piv = r;
        while (piv < rows && a[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(a[r], a[piv]);
        for (size_t i = r + 1; i < rows; ++i) {
            while (a[i][c] != 0) {
                I64 q = a[r][c] != 0 ? a[i][c] / a[r][c] : 0;
                if (q != 0)
                    for (size_t j = c; j < cols; ++j)
                        a[i][j] = checked_sub(a[i][j], checked_mul(q, a[r][j]));
                if (a[i][c] == 0) break;
                std::swap(a[r], a[i]);
            }
        }
        ++r;
    }
    return static_cast<I64>(r);
}

// Canonical Hermite form of the row lattice: echelon rows, positive pivots,
// entries above each pivot reduced into [0, pivot). Zero rows are dropped,
// so the result is a canonical basis of the lattice spanned by the input.
inline Mat hermite_rows(Mat a) {
    size_t rows = a.size(), cols = rows ? a[0].size() : 0;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        // gcd elimination in column c below row r
        while (true) {
            size_t piv = rows;
            for (size_t i = r; i < rows; ++i)
                if (a[i][c] != 0 && (piv == rows ||
                                     std::abs(a[i][c]) < std::abs(a[piv][c])))
                    piv = i;
            if (piv == rows) break;
            std::swap(a[r], a[piv]);
            bool again = false;
            for (size_t i = r + 1; i < rows; ++i) {
                if (a[i][c] == 0) continue;
                I64 q = a[i][c] / a[r][c];
                for (size_t j = 0; j < cols; ++j)
                    a[i][j] = checked_sub(a[i][j], checked_mul(q, a[r][j]));
                if (a[i][c] != 0) again = true;
            }
            if (!again) break;
        }
        if (a[r][c] == 0) continue;
        if (a[r][c] < 0) a[r] = vec_neg(a[r]);
        for (size_t i = 0; i < r; ++i) {
            I64 q = a[i][c] >= 0 ? a[i][c] / a[r][c]
                                 : -((-a[i][c] + a[r][c] - 1) / a[r][c]);
            if (q != 0)
                for (size_t j = 0; j < cols; ++j)
                    a[i][j] = checked_sub(a[i][j], checked_mul(q, a[r][j]));
        }
        ++r;
    }
    a.resize(r);
    return a;
}

// Expresses v in the row basis h (h must be hermite_rows output).
// Returns the coefficient vector, or nullopt if v is not in the lattice.
inline std::optional<Vec> solve_in_rows(const Mat& h, const Vec& v) {
    Vec rem = v;
    Vec coeff(h.size(), 0);
    size_t cols = v.size();
    for (size_t i = 0; i < h.size(); ++i) {
        size_t c = 0;
        while (c < cols && h[i][c] == 0) ++c;
        if (c == cols) continue;
        if (rem[c] % h[i][c] != 0) {
            // pivot does not divide: still may fail later; bail out early
            return std::nullopt;
        }
        I64 q = rem[c] / h[i][c];
        coeff[i] = q;
        if (q != 0) rem = vec_sub(rem, vec_scale(q, h[i]));
    }
    if (!vec_is_zero(rem)) return std::nullopt;
    return coeff;
}

inline bool in_row_lattice(const Mat& h, const Vec& v) {
    return solve_in_rows(h, v).has_value();
}

struct SmithResult {
    Mat s;       // diagonal (rectangular) normal form, s = u * a * v
    Mat u;       // unimodular, rows x rows
    Mat v;       // unimodular, cols x cols
    std::vector<I64> divisors; // nonzero diagonal entries d1 | d2 | ...
};

inline SmithResult smith(Mat a) {
    size_t rows = a.size(), cols = rows ? a[0].size() : 0;
    Mat u = mat_identity(rows), v = mat_identity(cols);
    size_t t = 0;
    auto swap_rows = [&](size_t i, size_t j) { std::swap(a[i], a[j]); std::swap(u[i], u[j]); };
    auto swap_cols = [&](size_t i, size_t j) {
        for (size_t r = 0; r < rows; ++r) std::swap(a[r][i], a[r][j]);
        for (size_t r = 0; r < cols; ++r) std::swap(v[r][i], v[r][j]);
    };
    auto add_row = [&](size_t dst, size_t src, I64 q) {
        for (size_t j = 0; j < cols; ++j) a[dst][j] = checked_sub(a[dst][j], checked_mul(q, a[src][j]));
        for (size_t j = 0; j < rows; ++j) u[dst][j] = checked_sub(u[dst][j], checked_mul(q, u[src][j]));
    };
    auto add_col = [&](size_t dst, size_t src, I64 q) {
        for (size_t r = 0; r < rows; ++r) a[r][dst] = checked_sub(a[r][dst], checked_mul(q, a[r][src]));
        for (size_t r = 0; r < cols; ++r) v[r][dst] = checked_sub(v[r][dst], checked_mul(q, v[r][src]));
    };
    while (t < rows && t < cols) {
        // find smallest nonzero entry in the remaining block
        size_t pi = rows, pj = cols;
        for (size_t i = t; i < rows; ++i)
            for (size_t j = t; j < cols; ++j)
                if (a[i][j] != 0 && (pi == rows || std::abs(a[i][j]) < std::abs(a[pi][pj]))) { pi = i; pj = j; }
        if (pi == rows) break;
        swap_rows(t, pi);
        swap_cols(t, pj);
        bool clean = true;
        for (size_t i = t + 1; i < rows; ++i)
            if (a[i][t] != 0) { add_row(i, t, a[i][t] / a[t][t]); if (a[i][t] != 0) clean = false; }
        for (size_t j = t + 1; j < cols; ++j)
            if (a[t][j] != 0) { add_col(j, t, a[t][j] / a[t][t]); if (a[t][j] != 0) clean = false; }
        if (!clean) continue;
        // divisibility sweep: a[t][t] must divide everything below-right
        bool redo = false;
        for (size_t i = t + 1; i < rows && !redo; ++i)
            for (size_t j = t + 1; j < cols && !redo; ++j)
                if (a[i][j] % a[t][t] != 0) { add_row(t, i, -1); redo = true; }
        if (redo) continue;
        if (a[t][t] < 0) { for (size_t j = 0; j < cols; ++j) a[t][j] = -a[t][j]; for (size_t j = 0; j < rows; ++j) u[t][j] = -u[t][j]; }
        ++t;
    }
    SmithResult res;
    res.divisors.reserve(t);
    for (size_t i = 0; i < t; ++i) res.divisors.push_back(a[i][i]);
    res.s = std::move(a);
    res.u = std::move(u);
    res.v = std::move(v);
    return res;
}

// Integer combination x of the rows of a with x * a = v, if one exists.
// Unlike solve_in_rows this accepts an arbitrary (even dependent) row list.
inline std::optional<Vec> solve_rows_any(const Mat& a, const Vec& v) {
    if (a.empty()) return vec_is_zero(v) ? std::optional<Vec>(Vec{}) : std::nullopt;
    SmithResult sm = smith(a);
    Vec w = vec_mat(v, sm.v);
    size_t t = sm.divisors.size();
    Vec y(a.size(), 0);
    for (size_t j = 0; j < w.size(); ++j) {
        if (j < t) {
            if (w[j] % sm.divisors[j] != 0) return std::nullopt;
            y[j] = w[j] / sm.divisors[j];
        } else if (w[j] != 0) {
            return std::nullopt;
        }
    }
    return vec_mat(y, sm.u);
}

// Basis of { x in Z^cols : a x = 0 }.
inline Mat kernel_lattice(const Mat& a) {
    if (a.empty()) return Mat(); // caller handles full space separately
    SmithResult sm = smith(a);
    size_t cols = a[0].size();
    size_t r = sm.divisors.size();
    Mat base;
    for (size_t j = r; j < cols; ++j) {
        Vec col(cols);
        for (size_t i = 0; i < cols; ++i) col[i] = sm.v[i][j];
        base.push_back(col);
    }
    return hermite_rows(base);
}

// Inverse of a unimodular integer matrix (|det| = 1).
inline Mat unimodular_inverse(const Mat& m) {
    size_t n = m.size();
    Mat aug(n, Vec(2 * n, 0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) aug[i][j] = m[i][j];
        aug[i][n + i] = 1;
    }
    for (size_t c = 0; c < n; ++c) {
        while (true) {
            size_t piv = n;
            for (size_t i = c; i < n; ++i)
                if (aug[i][c] != 0 && (piv == n || std::abs(aug[i][c]) < std::abs(aug[piv][c]))) piv = i;
            require(piv != n, ErrorKind::internal, "unimodular inverse failed");
            std::swap(aug[c], aug[piv]);
            bool done = true;
            for (size_t i = c + 1; i < n; ++i)
                if (aug[i][c] != 0) {
                    I64 q = aug[i][c] / aug[c][c];
                    for (size_t j = 0; j < 2 * n; ++j) aug[i][j] = checked_sub(aug[i][j], checked_mul(q, aug[c][j]));
                    if (aug[i][c] != 0) done = false;
                }
            if (done) break;
        }
        if (aug[c][c] < 0) aug[c] = vec_neg(aug[c]);
        require(aug[c][c] == 1, ErrorKind::internal, "matrix is not unimodular");
        for (size_t i = 0; i < c; ++i)
            if (aug[i][c] != 0) {
                I64 q = aug[i][c];
                for (size_t j = 0; j < 2 * n; ++j) aug[i][j] = checked_sub(aug[i][j], checked_mul(q, aug[c][j]));
            }
    }
    Mat inv(n, Vec(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) inv[i][j] = aug[i][n + j];
    return inv;
}

// Saturation of the row lattice of `a` inside Z^cols:
// { v : k v in L for some k >= 1 }.
inline Mat saturate_rows(const Mat& a, size_t cols) {
    Mat h = hermite_rows(a);
    if (h.empty()) return h;
    SmithResult sm = smith(h);
    size_t r = sm.divisors.size();
    // rowspace(h) = { sum z_i d_i (v^{-1})_i }; the saturation drops the d_i,
    // so it is spanned by the first r rows of v^{-1}.
    Mat vinv = unimodular_inverse(sm.v);
    Mat sat(vinv.begin(), vinv.begin() + r);
    (void)cols;
    return hermite_rows(sat);
}


// Split of Z^n along a saturated sublattice L (rows of sat_basis):
//   proj: Z^n -> Z^{n-k} with kernel exactly L (rows are functionals),
//   section: rows lifting the standard basis, proj(section_j) = e_j.
struct QuotientSplit {
    Mat proj;    // (n-k) x n functional rows
    Mat section; // (n-k) x n lift rows
    size_t codim = 0;
};

inline QuotientSplit split_by(const Mat& sat_basis, size_t n) {
    QuotientSplit q;
    size_t k = sat_basis.size();
    require(k <= n, ErrorKind::internal, "sublattice larger than ambient");
    q.codim = n - k;
    if (k == 0) {
        q.proj = mat_identity(n);
        q.section = mat_identity(n);
        return q;
    }
    SmithResult sm = smith(sat_basis);
    require(sm.divisors.size() == k, ErrorKind::internal, "dependent sublattice basis");
    for (I64 d : sm.divisors)
        require(d == 1 || d == -1, ErrorKind::internal, "split_by needs a saturated sublattice");
    // x in L  <=>  (x * v) has zero in the last n-k coordinates
    Mat vinv = unimodular_inverse(sm.v);
    q.proj.assign(n - k, Vec(n, 0));
    for (size_t j = 0; j < n - k; ++j)
        for (size_t i = 0; i < n; ++i) q.proj[j][i] = sm.v[i][k + j];
    q.section.assign(vinv.begin() + k, vinv.end());
    return q;
}

// Invariant factors of Z^cols / rowspace(a): the nonzero diagonal entries
// that are > 1 (torsion) plus the free rank cols - rank.
struct QuotientShape {
    std::vector<I64> torsion; // invariant factors > 1
    I64 free_rank = 0;
};

inline QuotientShape quotient_shape(const Mat& a, size_t cols) {
    QuotientShape q;
    if (a.empty()) { q.free_rank = static_cast<I64>(cols); return q; }
    SmithResult sm = smith(a);
    for (I64 d : sm.divisors)
        if (d > 1) q.torsion.push_back(d);
    q.free_rank = static_cast<I64>(cols) - static_cast<I64>(sm.divisors.size());
    return q;
}

// Determinant via Bareiss fraction-free elimination (128-bit intermediates).
inline I64 det(Mat a) {
    size_t n = a.size();
    if (n == 0) return 1;
    I64 sign = 1, prev = 1;
    for (size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            size_t piv = n;
            for (size_t i = k + 1; i < n; ++i)
                if (a[i][k] != 0) { piv = i; break; }
            if (piv == n) return 0;
            std::swap(a[k], a[piv]);
            sign = -sign;
        }
        for (size_t i = k + 1; i < n; ++i)
            for (size_t j = k + 1; j < n; ++j) {
                I128 num = I128(a[i][j]) * a[k][k] - I128(a[i][k]) * a[k][j];
                a[i][j] = narrow(num / prev, "determinant");
            }
        prev = a[k][k];
    }
    return checked_mul(sign, a[n - 1][n - 1]);
}

inline std::string vec_to_string(const Vec& v) {
    std::string s = "(";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    s += ")";
    return s;
}

} // namespace polystrata::lin
