#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "polystrata/matrix.hpp"

// Rational polyhedral cones in the coordinates of a full-rank lattice.
// Facets come from a double description run on the dual cone; Hilbert bases
// from a recursive triangulation plus lattice points of the fundamental
// parallelepiped of each simplicial piece.

namespace polystrata::cone {

using lin::I128;
using lin::I64;
using lin::Mat;
using lin::Vec;

struct ConeData {
    size_t dim = 0;   // coordinate dimension; the cone spans R^dim
    Mat gens;         // generators (nonzero, as given)
    Mat facets;       // primitive inward facet normals; cone = {x : F x >= 0}
    Mat lineality;    // lattice basis of (cone ∩ -cone) ∩ Z^dim
    Mat extreme_rays; // primitive, only meaningful when lineality is empty
};

namespace detail {

struct DualRay {
    Vec v;
    std::set<size_t> zero; // indices of processed constraints vanishing on v
};

// Extreme rays of {y : y . g >= 0 for all g} assuming the g span R^dim.
inline std::vector<Vec> dual_rays(const Mat& gens, size_t dim) {
    if (dim == 0) return {};
    // pick dim linearly independent generators for the simplicial start
    std::vector<size_t> start;
    Mat picked;
    for (size_t i = 0; i < gens.size() && start.size() < dim; ++i) {
        picked.push_back(gens[i]);
        if (static_cast<size_t>(lin::rank(picked)) == picked.size())
            start.push_back(i);
        else
            picked.pop_back();
    }
    require(start.size() == dim, ErrorKind::internal, "cone generators do not span");

    // rays of the simplicial dual: columns of the adjugate, oriented so that
    // ray_j . g_{start[k]} = |det| . delta_{jk}
    Mat m;
    for (size_t k : start) m.push_back(gens[k]);
    I64 d = lin::det(m);
    I64 sign = d >= 0 ? 1 : -1;
    std::vector<DualRay> rays;
    for (size_t j = 0; j < dim; ++j) {
        // cofactor expansion: adj(M)[i][j] = cofactor C_{j i}
        Vec r(dim);
        for (size_t i = 0; i < dim; ++i) {
            Mat minor;
            for (size_t a = 0; a < dim; ++a) {
                if (a == j) continue;
                Vec row;
                for (size_t b = 0; b < dim; ++b) {
                    if (b == i) continue;
                    row.push_back(m[a][b]);
                }
                minor.push_back(row);
            }
            I64 c = lin::det(minor);
            if ((i + j) % 2 == 1) c = -c;
            r[i] = lin::checked_mul(sign, c);
        }
        r = lin::vec_primitive(r);
        DualRay dr;
        dr.v = r;
        for (size_t k = 0; k < dim; ++k)
            if (lin::dot(r, gens[start[k]]) == 0) dr.zero.insert(k);
        rays.push_back(dr);
    }

    std::vector<size_t> order(start.begin(), start.end());
    for (size_t i = 0; i < gens.size(); ++i)
        if (std::find(start.begin(), start.end(), i) == start.end()) order.push_back(i);

    for (size_t step = dim; step < order.size(); ++step) {
        const Vec& g = gens[order[step]];
        std::vector<DualRay> pos, neg, zer;
        for (auto& r : rays) {
            I64 s = lin::dot(r.v, g);
            if (s > 0) pos.push_back(r);
            else if (s < 0) neg.push_back(r);
            else { r.zero.insert(step); zer.push_back(r); }
        }
        std::vector<DualRay> next = pos;
        next.insert(next.end(), zer.begin(), zer.end());
        for (const auto& p : pos)
            for (const auto& n : neg) {
                // combinatorial adjacency: no third ray's zero set contains
                // the common zero set of p and n
                std::set<size_t> common;
                std::set_intersection(p.zero.begin(), p.zero.end(), n.zero.begin(), n.zero.end(),
                                      std::inserter(common, common.begin()));
                bool adjacent = true;
                for (const auto& other : rays) {
                    if (&other == &p || &other == &n) continue;
                    if (other.v == p.v || other.v == n.v) continue;
                    if (std::includes(other.zero.begin(), other.zero.end(), common.begin(), common.end())) {
                        adjacent = false;
                        break;
                    }
                }
                if (!adjacent) continue;
                I64 pg = lin::dot(p.v, g), ng = lin::dot(n.v, g);
                Vec nv = lin::vec_sub(lin::vec_scale(pg, n.v), lin::vec_scale(ng, p.v));
                nv = lin::vec_primitive(nv);
                if (lin::vec_is_zero(nv)) continue;
                DualRay dr;
                dr.v = nv;
                // recompute the zero set exactly; the combination may vanish
                // on more constraints than Z(p) ∩ Z(n) ∪ {step}
                for (size_t k = 0; k <= step; ++k)
                    if (lin::dot(nv, gens[order[k]]) == 0) dr.zero.insert(k);
                next.push_back(dr);
            }
        // dedupe
        std::sort(next.begin(), next.end(), [](const DualRay& a, const DualRay& b) { return a.v < b.v; });
        next.erase(std::unique(next.begin(), next.end(),
                               [](const DualRay& a, const DualRay& b) { return a.v == b.v; }),
                   next.end());
        rays = std::move(next);
    }
    std::vector<Vec> out;
    for (auto& r : rays)
        if (!lin::vec_is_zero(r.v)) out.push_back(r.v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace detail

// Builds the cone spanned by `gens`, which must span R^dim (full dimensional).
inline ConeData build_cone(Mat gens, size_t dim) {
    ConeData c;
    c.dim = dim;
    for (auto& g : gens)
        if (!lin::vec_is_zero(g)) c.gens.push_back(g);
    if (dim == 0) return c;
    require(static_cast<size_t>(lin::rank(c.gens)) == dim, ErrorKind::internal,
            "build_cone requires full-dimensional input");
    c.facets = Mat();
    for (auto& f : detail::dual_rays(c.gens, dim)) c.facets.push_back(f);
    if (c.facets.empty()) {
        c.lineality = lin::mat_identity(dim);
    } else {
        c.lineality = lin::kernel_lattice(c.facets);
    }
    if (c.lineality.empty()) {
        // extreme rays: generators lying on a rank dim-1 set of facets
        std::set<Vec> seen;
        for (const auto& g : c.gens) {
            Mat z;
            for (const auto& f : c.facets)
                if (lin::dot(f, g) == 0) z.push_back(f);
            if (static_cast<size_t>(lin::rank(z)) == dim - 1) {
                Vec p = lin::vec_primitive(g);
                if (seen.insert(p).second) c.extreme_rays.push_back(p);
            }
        }
        std::sort(c.extreme_rays.begin(), c.extreme_rays.end());
    }
    return c;
}

inline bool cone_contains(const ConeData& c, const Vec& v) {
    for (const auto& f : c.facets)
        if (lin::dot(f, v) < 0) return false;
    return true;
}

inline bool is_pointed(const ConeData& c) { return c.lineality.empty(); }

// Sum of the facet normals: strictly positive on every nonzero element of a
// pointed cone, zero only at 0.
inline Vec positive_grading(const ConeData& c) {
    Vec g(c.dim, 0);
    for (const auto& f : c.facets) g = lin::vec_add(g, f);
    return g;
}

namespace detail {

// Recursive triangulation of a pointed cone given by extreme rays (full rank
// within their span). Returns index subsets of `rays` forming simplicial cones.
inline void triangulate_rec(const Mat& rays, std::vector<std::vector<size_t>>& out,
                            std::vector<size_t> idx) {
    Mat sub;
    for (size_t i : idx) sub.push_back(rays[i]);
    size_t r = static_cast<size_t>(lin::rank(sub));
    if (idx.size() == r) {
        out.push_back(idx);
        return;
    }
    // project into span coordinates to get facets of this subcone
    Mat span = lin::saturate_rows(sub, rays[0].size());
    Mat coords;
    for (size_t i : idx) {
        auto c = lin::solve_in_rows(span, rays[i]);
        require(c.has_value(), ErrorKind::internal, "span coordinate failure");
        coords.push_back(*c);
    }
    ConeData c = build_cone(coords, r);
    require(is_pointed(c), ErrorKind::internal, "triangulation of non-pointed cone");
    size_t apex = 0; // position within idx
    for (const auto& f : c.facets) {
        if (lin::dot(f, coords[apex]) == 0) continue; // facet contains apex
        std::vector<size_t> face_idx;
        for (size_t k = 0; k < idx.size(); ++k)
            if (lin::dot(f, coords[k]) == 0) face_idx.push_back(idx[k]);
        std::vector<std::vector<size_t>> faces;
        triangulate_rec(rays, faces, face_idx);
        for (auto& s : faces) {
            s.push_back(idx[apex]);
            std::sort(s.begin(), s.end());
            out.push_back(s);
        }
    }
}

inline std::vector<std::vector<size_t>> triangulate(const Mat& rays) {
    std::vector<std::vector<size_t>> out;
    if (rays.empty()) return out;
    std::vector<size_t> all(rays.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    triangulate_rec(rays, out, all);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Lattice points of { sum t_i v_i : 0 <= t_i < 1 } for a nonsingular square
// system of rows v_i in Z^dim.
inline std::vector<Vec> parallelepiped_points(const Mat& v) {
    size_t dim = v.size();
    I64 dval = lin::det(v);
    require(dval != 0, ErrorKind::internal, "degenerate simplicial cone");
    I64 index = dval > 0 ? dval : -dval;
    require(index <= 2000000, ErrorKind::resource,
            "fundamental parallelepiped too large (index " + std::to_string(index) + ")");
    auto sm = lin::smith(v);
    Mat winv = lin::unimodular_inverse(sm.v);
    // residues t with t_i in [0, d_i); representative x = t * W^{-1} ... the
    // class of x in Z^dim / rowlattice(v) is determined by x.W mod diag(d).
    std::vector<Vec> reps;
    Vec t(dim, 0);
    // amount of work = product of divisors = index (guarded above)
    while (true) {
        Vec x(dim, 0);
        for (size_t i = 0; i < dim; ++i)
            if (t[i] != 0)
                for (size_t j = 0; j < dim; ++j)
                    x[j] = lin::checked_add(x[j], lin::checked_mul(t[i], winv[i][j]));
        reps.push_back(x);
        size_t k = 0;
        while (k < dim) {
            ++t[k];
            if (t[k] < sm.divisors[k]) break;
            t[k] = 0;
            ++k;
        }
        if (k == dim) break;
    }
    // reduce each representative into the half-open parallelepiped:
    // coordinates c = x . v^{-1} = x . adj(v) / det(v)
    Mat adj(dim, Vec(dim, 0));
    for (size_t i = 0; i < dim; ++i)
        for (size_t j = 0; j < dim; ++j) {
            Mat minor;
            for (size_t a = 0; a < dim; ++a) {
                if (a == j) continue;
                Vec row;
                for (size_t b = 0; b < dim; ++b) {
                    if (b == i) continue;
                    row.push_back(v[a][b]);
                }
                minor.push_back(row);
            }
            I64 c = lin::det(minor);
            if ((i + j) % 2 == 1) c = -c;
            adj[i][j] = c; // adj[i][j] = cofactor_{j,i}: (x adj)_j has det scale
        }
    auto floor_div = [](I64 a, I64 b) {
        if (b < 0) { a = -a; b = -b; }
        return a >= 0 ? a / b : -((-a + b - 1) / b);
    };
    std::vector<Vec> pts;
    for (Vec x : reps) {
        // c_j * det = sum_i x_i adj[i][j]
        for (size_t j = 0; j < dim; ++j) {
            I128 num = 0;
            for (size_t i = 0; i < dim; ++i) num += I128(x[i]) * I128(adj[i][j]);
            I64 fl = floor_div(lin::narrow(num, "parallelepiped reduction"), dval);
            if (fl != 0)
                x = lin::vec_sub(x, lin::vec_scale(fl, v[j]));
        }
        pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

} // namespace detail

// Hilbert basis of (cone ∩ Z^dim) for a pointed full-dimensional cone.
inline std::vector<Vec> hilbert_basis(const ConeData& c) {
    if (c.dim == 0) return {};
    require(is_pointed(c), ErrorKind::internal, "hilbert_basis requires a pointed cone");
    std::set<Vec> cand;
    for (const auto& r : c.extreme_rays) cand.insert(r);
    for (const auto& simplex : detail::triangulate(c.extreme_rays)) {
        Mat v;
        for (size_t i : simplex) v.push_back(c.extreme_rays[i]);
        for (const auto& p : detail::parallelepiped_points(v))
            if (!lin::vec_is_zero(p)) cand.insert(p);
    }
    // minimize: h is reducible iff h - a lies in the cone for another candidate
    std::vector<Vec> basis;
    for (const auto& h : cand) {
        bool reducible = false;
        for (const auto& a : cand) {
            if (a == h) continue;
            Vec diff = lin::vec_sub(h, a);
            if (!lin::vec_is_zero(diff) && cone_contains(c, diff)) {
                reducible = true;
                break;
            }
        }
        if (!reducible) basis.push_back(h);
    }
    std::sort(basis.begin(), basis.end());
    return basis;
}

// Indices of facets vanishing on every element of S.
inline std::vector<size_t> common_zero_facets(const ConeData& c, const Mat& s) {
    std::vector<size_t> z;
    for (size_t i = 0; i < c.facets.size(); ++i) {
        bool all0 = true;
        for (const auto& v : s)
            if (lin::dot(c.facets[i], v) != 0) { all0 = false; break; }
        if (all0) z.push_back(i);
    }
    return z;
}

} // namespace polystrata::cone
