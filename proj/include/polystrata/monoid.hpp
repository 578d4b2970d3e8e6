#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "polystrata/cone.hpp"
#include "polystrata/matrix.hpp"
#include "polystrata/poset.hpp"

// Affine (fine) monoids presented by integer generators in Z^d, with exact
// membership, units/sharpening, saturation via Hilbert bases, and the face
// lattice. Monoids are identified with their generator sets; all derived
// structure lives in envelope coordinates where the cone is full dimensional.
//
// Internal decomposition, fixed once per monoid:
//   envelope lattice  Z^r  (coordinates of the Hermite basis of the gens),
//   U  = lattice spanned by the unit generators (equals the unit group),
//   U' = envelope ∩ lineality space (saturation of U),
//   proj/section split  Z^r = U' ⊕ Z^s  with the sharp image cone pointed.
// Membership reduces to a bounded search over sharp images plus a residue
// condition in the finite group U'/U.

namespace polystrata {

using lin::I64;
using lin::Mat;
using lin::Vec;

struct LatticeGroup {
    size_t ambient_dim = 0;
    Mat basis; // Hermite-canonical rows
    size_t rank() const { return basis.size(); }
    bool contains(const Vec& v) const { return lin::in_row_lattice(basis, v); }
    bool operator==(const LatticeGroup& o) const = default;
};

namespace detail {

// Canonical generating set of (Z^dim ∩ cone): plus/minus a basis of the
// lineality lattice together with a lift of the Hilbert basis of the pointed
// quotient cone. Canonical because every ingredient is.
inline Mat canonical_fs_generators(const cone::ConeData& c) {
    Mat out;
    if (c.dim == 0) return out;
    for (const auto& row : c.lineality) {
        out.push_back(row);
        out.push_back(lin::vec_neg(row));
    }
    auto split = lin::split_by(c.lineality, c.dim);
    if (split.codim > 0) {
        Mat sig;
        for (const auto& g : c.gens) sig.push_back(lin::mat_apply(split.proj, g));
        auto sc = cone::build_cone(sig, split.codim);
        require(cone::is_pointed(sc), ErrorKind::internal, "quotient by lineality not pointed");
        for (const auto& h : cone::hilbert_basis(sc))
            out.push_back(lin::vec_mat(h, split.section));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace detail

class Face;
struct FacePoset;

class AffineMonoid {
  public:
    AffineMonoid(size_t ambient_dim, const Mat& generators)
        : core_(std::make_shared<const Core>(build_core(ambient_dim, generators))),
          lazy_(std::make_shared<Lazy>()) {}

    size_t ambient_dim() const { return core_->dim; }
    const Mat& generators() const { return core_->gens; }

    LatticeGroup group_envelope() const { return {core_->dim, core_->env}; }

    LatticeGroup units() const {
        Mat u;
        for (size_t i : core_->unit_idx) u.push_back(core_->gens[i]);
        return {core_->dim, lin::hermite_rows(u)};
    }

    bool is_sharp() const { return core_->unit_idx.empty(); }

    bool is_saturated() const {
        ensure_saturation();
        return lazy_->saturated;
    }

    // Image of the monoid in envelope/units, presented in Z^s. Requires the
    // unit lattice to be saturated in the envelope; otherwise the quotient
    // group has torsion and cannot live in a lattice.
    AffineMonoid sharpen() const {
        require(core_->u_basis == core_->uprime, ErrorKind::validation,
                "unit lattice is not saturated in the envelope; "
                "the sharp quotient has torsion and is not representable");
        return AffineMonoid(core_->s, core_->sigma);
    }

    AffineMonoid saturate() const {
        ensure_saturation();
        Mat gens;
        for (const auto& g : lazy_->sat_env_gens) gens.push_back(ambient_from_env(g));
        return AffineMonoid(core_->dim, gens);
    }

    // Structural equality: equality of the canonical generator sets of the
    // saturations (decidable canonical form; exact equality for fs monoids).
    bool equals(const AffineMonoid& o) const {
        if (core_ == o.core_) return true;
        if (core_->dim != o.core_->dim) return false;
        ensure_saturation();
        o.ensure_saturation();
        Mat a, b;
        for (const auto& g : lazy_->sat_env_gens) a.push_back(ambient_from_env(g));
        for (const auto& g : o.lazy_->sat_env_gens) b.push_back(o.ambient_from_env(g));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }

    // Exact equality as submonoids of the ambient lattice.
    bool same_submonoid(const AffineMonoid& o) const {
        if (core_ == o.core_) return true;
        if (core_->dim != o.core_->dim) return false;
        for (const auto& g : o.core_->gens)
            if (!contains(g)) return false;
        for (const auto& g : core_->gens)
            if (!o.contains(g)) return false;
        return true;
    }

    bool contains(const Vec& v) const {
        require(v.size() == core_->dim, ErrorKind::validation, "element dimension mismatch");
        auto coords = lin::solve_in_rows(core_->env, v);
        if (!coords) return false;
        return contains_env(*coords);
    }

    bool divides(const Vec& a, const Vec& b) const { return contains(lin::vec_sub(b, a)); }

    // Value of the positive grading of the sharp quotient; zero exactly on
    // the units. Requires v in the group envelope.
    I64 sharp_degree(const Vec& v) const {
        auto coords = lin::solve_in_rows(core_->env, v);
        require(coords.has_value(), ErrorKind::validation, "element outside the group envelope");
        return lin::dot(core_->grading, lin::mat_apply(core_->split.proj, *coords));
    }

    size_t sharp_rank() const { return core_->s; }

    // All sums of at most `max_terms` generators (the brute-force "degree"
    // used by the bounded classifiers). Sorted, deduplicated, includes 0.
    std::vector<Vec> elements_up_to(size_t max_terms, size_t cap = 200000) const {
        std::set<Vec> seen;
        std::vector<Vec> frontier{Vec(core_->dim, 0)};
        seen.insert(frontier[0]);
        for (size_t step = 0; step < max_terms && !frontier.empty(); ++step) {
            std::vector<Vec> next;
            for (const auto& e : frontier)
                for (const auto& g : core_->gens) {
                    Vec f = lin::vec_add(e, g);
                    if (seen.insert(f).second) {
                        require(seen.size() <= cap, ErrorKind::resource,
                                "element enumeration exceeded cap");
                        next.push_back(f);
                    }
                }
            frontier = std::move(next);
        }
        return {seen.begin(), seen.end()};
    }

    // All divisors of v within a sharp monoid (finite since the grading is
    // positive). Complete: divisibility is inherited along generator removal.
    std::vector<Vec> divisors_of(const Vec& v, size_t cap = 200000) const {
        require(is_sharp(), ErrorKind::validation, "divisor enumeration requires a sharp monoid");
        require(contains(v), ErrorKind::validation, "divisor enumeration target not in the monoid");
        std::set<Vec> out;
        std::vector<Vec> frontier{Vec(core_->dim, 0)};
        out.insert(frontier[0]);
        while (!frontier.empty()) {
            std::vector<Vec> next;
            for (const auto& d : frontier)
                for (const auto& g : core_->gens) {
                    Vec e = lin::vec_add(d, g);
                    if (out.count(e)) continue;
                    if (!contains(lin::vec_sub(v, e))) continue;
                    require(out.size() < cap, ErrorKind::resource, "divisor enumeration exceeded cap");
                    out.insert(e);
                    next.push_back(e);
                }
            frontier = std::move(next);
        }
        return {out.begin(), out.end()};
    }

    Face face(std::vector<size_t> generator_indices) const;
    Face units_face() const;
    Face full_face() const;
    std::vector<Face> faces() const;
    FacePoset face_poset() const;
    // Smallest face whose span contains all given elements (rows).
    Face smallest_face_containing(const Mat& elements) const;
    AffineMonoid localize(const Face& f) const;

    // The same monoid presented in envelope coordinates (ambient = Z^r).
    AffineMonoid env_presentation() const { return AffineMonoid(core_->r, core_->coords); }

    Vec ambient_from_env(const Vec& env_coords) const {
        Vec v = lin::vec_mat(env_coords, core_->env);
        v.resize(core_->dim, 0); // rank-0 envelope maps everything to the origin
        return v;
    }

    std::optional<Vec> env_coords(const Vec& v) const { return lin::solve_in_rows(core_->env, v); }

    std::string to_string() const {
        std::string s = "monoid(dim=" + std::to_string(core_->dim) + ", gens=";
        for (size_t i = 0; i < core_->gens.size(); ++i) {
            if (i) s += " ";
            s += lin::vec_to_string(core_->gens[i]);
        }
        return s + ")";
    }

  private:
    struct Core {
        size_t dim = 0;
        Mat gens;
        Mat env;    // Hermite basis of the envelope, ambient coords
        size_t r = 0;
        Mat coords; // gens in envelope coordinates
        cone::ConeData cn;
        std::vector<size_t> unit_idx, nonunit_idx;
        Mat u_basis; // Hermite basis of the unit lattice, envelope coords
        Mat uprime;  // lineality lattice (saturation of u_basis)
        lin::QuotientSplit split;
        size_t s = 0;
        Mat sigma; // sharp images of the non-unit gens (parallel to nonunit_idx)
        cone::ConeData sharp_cone;
        Vec grading;
        std::vector<I64> res_divisors; // invariant factors of U'/U
        Mat res_v;
        std::vector<Vec> rho; // residue of each non-unit gen's unit component
    };

    struct Lazy {
        std::once_flag saturated_once;
        bool saturated = false;
        Mat sat_env_gens;
    };

    std::shared_ptr<const Core> core_;
    std::shared_ptr<Lazy> lazy_;

    friend class Face;

    static Core build_core(size_t dim, const Mat& raw) {
        Core c;
        c.dim = dim;
        std::set<Vec> seen;
        for (const auto& g : raw) {
            require(g.size() == dim, ErrorKind::validation, "generator dimension mismatch");
            if (lin::vec_is_zero(g)) continue;
            if (seen.insert(g).second) c.gens.push_back(g);
        }
        c.env = lin::hermite_rows(c.gens);
        c.r = c.env.size();
        for (const auto& g : c.gens) {
            auto co = lin::solve_in_rows(c.env, g);
            require(co.has_value(), ErrorKind::internal, "generator outside its own envelope");
            c.coords.push_back(*co);
        }
        c.cn = cone::build_cone(c.coords, c.r);
        for (size_t i = 0; i < c.gens.size(); ++i) {
            bool unit = c.r > 0 && lin::in_row_lattice(c.cn.lineality, c.coords[i]);
            (unit ? c.unit_idx : c.nonunit_idx).push_back(i);
        }
        Mat ucoords;
        for (size_t i : c.unit_idx) ucoords.push_back(c.coords[i]);
        c.u_basis = lin::hermite_rows(ucoords);
        c.uprime = c.cn.lineality;
        require(c.u_basis.size() == c.uprime.size(), ErrorKind::internal,
                "unit generators do not span the lineality space");
        c.split = lin::split_by(c.uprime, c.r);
        c.s = c.split.codim;
        for (size_t i : c.nonunit_idx) c.sigma.push_back(lin::mat_apply(c.split.proj, c.coords[i]));
        c.sharp_cone = cone::build_cone(c.sigma, c.s);
        require(cone::is_pointed(c.sharp_cone), ErrorKind::internal, "sharp quotient cone not pointed");
        c.grading = cone::positive_grading(c.sharp_cone);
        size_t k = c.uprime.size();
        if (k > 0) {
            Mat m;
            for (const auto& u : c.u_basis) {
                auto t = lin::solve_in_rows(c.uprime, u);
                require(t.has_value(), ErrorKind::internal, "unit basis outside lineality lattice");
                m.push_back(*t);
            }
            auto sm = lin::smith(m);
            require(sm.divisors.size() == k, ErrorKind::internal, "unit lattice rank defect");
            c.res_divisors = sm.divisors;
            c.res_v = sm.v;
        }
        for (size_t j = 0; j < c.nonunit_idx.size(); ++j) {
            Vec lift = lin::vec_mat(c.sigma[j], c.split.section);
            c.rho.push_back(residue_in(c, lin::vec_sub(c.coords[c.nonunit_idx[j]], lift)));
        }
        return c;
    }

    // Residue class of x (which must lie in U') inside U'/U.
    static Vec residue_in(const Core& c, const Vec& x) {
        size_t k = c.uprime.size();
        if (k == 0) return {};
        auto t = lin::solve_in_rows(c.uprime, x);
        require(t.has_value(), ErrorKind::internal, "residue argument outside lineality lattice");
        Vec w = lin::vec_mat(*t, c.res_v);
        Vec r(k);
        for (size_t j = 0; j < k; ++j) {
            I64 e = c.res_divisors[j];
            r[j] = ((w[j] % e) + e) % e;
        }
        return r;
    }

  public:
    // Membership in envelope coordinates; exact for every fine monoid here.
    bool contains_env(const Vec& coords) const {
        const Core& c = *core_;
        if (!cone::cone_contains(c.cn, coords)) return false;
        Vec z = lin::mat_apply(c.split.proj, coords);
        Vec lift = lin::vec_mat(z, c.split.section);
        lift.resize(c.r, 0); // empty section (trivial sharp part) still lifts into Z^r
        Vec need = residue_in(c, lin::vec_sub(coords, lift));
        std::map<std::tuple<size_t, Vec, Vec>, bool> memo;
        size_t budget = 500000;
        return member_dfs(0, z, need, memo, budget);
    }

    const cone::ConeData& envelope_cone() const { return core_->cn; }

  private:
    bool member_dfs(size_t i, const Vec& z, const Vec& need,
                    std::map<std::tuple<size_t, Vec, Vec>, bool>& memo, size_t& budget) const {
        const Core& c = *core_;
        if (lin::vec_is_zero(z)) return lin::vec_is_zero(need);
        if (i == c.sigma.size()) return false;
        if (budget == 0) fail_resource("membership search exceeded node budget");
        --budget;
        auto key = std::make_tuple(i, z, need);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        I64 lam_z = lin::dot(c.grading, z);
        I64 lam_s = lin::dot(c.grading, c.sigma[i]);
        bool ok = false;
        Vec zc = z;
        Vec nc = need;
        for (I64 cnt = 0; cnt * lam_s <= lam_z; ++cnt) {
            if (cnt > 0) {
                zc = lin::vec_sub(zc, c.sigma[i]);
                // each facet value decreases linearly in cnt; once outside, stay outside
                if (!cone::cone_contains(c.sharp_cone, zc)) break;
                for (size_t j = 0; j < nc.size(); ++j) {
                    I64 e = c.res_divisors[j];
                    nc[j] = ((nc[j] - c.rho[i][j]) % e + e) % e;
                }
            }
            if (member_dfs(i + 1, zc, nc, memo, budget)) {
                ok = true;
                break;
            }
        }
        memo[key] = ok;
        return ok;
    }

    void ensure_saturation() const {
        std::call_once(lazy_->saturated_once, [this] {
            lazy_->sat_env_gens = detail::canonical_fs_generators(core_->cn);
            lazy_->saturated = true;
            for (const auto& g : lazy_->sat_env_gens)
                if (!contains_env(g)) {
                    lazy_->saturated = false;
                    break;
                }
        });
    }
};

// A face of an affine monoid: the submonoid of elements supported on a
// cone face, recorded by the generators lying in it. The complement is a
// prime ideal; validation checks the generator set is facet-closed.
class Face {
  public:
    const AffineMonoid& parent() const { return parent_; }
    const std::vector<size_t>& generator_indices() const { return idx_; }

    Mat generator_subset() const {
        Mat m;
        for (size_t i : idx_) m.push_back(parent_.generators()[i]);
        return m;
    }

    AffineMonoid monoid() const { return AffineMonoid(parent_.ambient_dim(), generator_subset()); }

    size_t size() const { return idx_.size(); }

    bool contains_index(size_t i) const {
        return std::binary_search(idx_.begin(), idx_.end(), i);
    }

    bool subset_of(const Face& o) const {
        return std::includes(o.idx_.begin(), o.idx_.end(), idx_.begin(), idx_.end());
    }

    bool operator==(const Face& o) const { return idx_ == o.idx_; }
    bool operator<(const Face& o) const {
        if (idx_.size() != o.idx_.size()) return idx_.size() < o.idx_.size();
        return idx_ < o.idx_;
    }

    std::string to_string() const {
        std::string s = "face{";
        for (size_t k = 0; k < idx_.size(); ++k) {
            if (k) s += ",";
            s += std::to_string(idx_[k]);
        }
        return s + "}";
    }

  private:
    friend class AffineMonoid;
    Face(AffineMonoid p, std::vector<size_t> idx) : parent_(std::move(p)), idx_(std::move(idx)) {}
    AffineMonoid parent_;
    std::vector<size_t> idx_;
};

struct FacePoset {
    std::vector<Face> faces;
    Poset order; // faces[i] <= faces[j]  iff  faces[i] ⊆ faces[j]

    size_t index_of(const Face& f) const {
        for (size_t i = 0; i < faces.size(); ++i)
            if (faces[i] == f) return i;
        fail_internal("face not present in its poset");
    }
};

inline Face AffineMonoid::face(std::vector<size_t> generator_indices) const {
    std::sort(generator_indices.begin(), generator_indices.end());
    generator_indices.erase(std::unique(generator_indices.begin(), generator_indices.end()),
                            generator_indices.end());
    for (size_t i : generator_indices)
        require(i < core_->gens.size(), ErrorKind::validation, "face generator index out of range");
    // the subset must consist of exactly the generators vanishing on the
    // facets it vanishes on (equivalently: it generates a cone face)
    Mat sub;
    for (size_t i : generator_indices) sub.push_back(core_->coords[i]);
    auto zero = cone::common_zero_facets(core_->cn, sub);
    std::vector<size_t> closure;
    for (size_t i = 0; i < core_->gens.size(); ++i) {
        bool in = true;
        for (size_t f : zero)
            if (lin::dot(core_->cn.facets[f], core_->coords[i]) != 0) {
                in = false;
                break;
            }
        if (in) closure.push_back(i);
    }
    require(closure == generator_indices, ErrorKind::validation,
            "generator subset is not a face (not closed under summand extraction)");
    return Face(*this, std::move(generator_indices));
}

inline Face AffineMonoid::units_face() const { return face(core_->unit_idx); }

inline Face AffineMonoid::full_face() const {
    std::vector<size_t> all(core_->gens.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    return face(std::move(all));
}

inline std::vector<Face> AffineMonoid::faces() const {
    const Core& c = *core_;
    size_t nf = c.cn.facets.size();
    require(nf <= 18, ErrorKind::resource, "face enumeration: too many facets");
    require(c.gens.size() <= 64, ErrorKind::resource, "face enumeration: too many generators");
    std::vector<uint32_t> zb(c.gens.size(), 0);
    for (size_t i = 0; i < c.gens.size(); ++i)
        for (size_t f = 0; f < nf; ++f)
            if (lin::dot(c.cn.facets[f], c.coords[i]) == 0) zb[i] |= uint32_t(1) << f;
    std::set<uint64_t> sets;
    for (uint32_t mask = 0; mask < (uint32_t(1) << nf); ++mask) {
        uint64_t genset = 0;
        for (size_t i = 0; i < c.gens.size(); ++i)
            if ((zb[i] & mask) == mask) genset |= uint64_t(1) << i;
        sets.insert(genset);
    }
    std::vector<Face> out;
    for (uint64_t genset : sets) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < c.gens.size(); ++i)
            if (genset & (uint64_t(1) << i)) idx.push_back(i);
        out.push_back(face(std::move(idx)));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline FacePoset AffineMonoid::face_poset() const {
    std::vector<Face> fs = faces();
    size_t n = fs.size();
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) leq[i][j] = fs[i].subset_of(fs[j]);
    Poset p(std::move(leq));
    require(p.minimal_elements().size() == 1, ErrorKind::internal, "face poset bottom not unique");
    require(p.maximal_elements().size() == 1, ErrorKind::internal, "face poset top not unique");
    return {std::move(fs), std::move(p)};
}

inline Face AffineMonoid::smallest_face_containing(const Mat& elements) const {
    Mat coords;
    for (const auto& v : elements) {
        auto co = lin::solve_in_rows(core_->env, v);
        require(co.has_value(), ErrorKind::validation, "element outside the group envelope");
        coords.push_back(*co);
    }
    auto zero = cone::common_zero_facets(core_->cn, coords);
    std::vector<size_t> idx;
    for (size_t i = 0; i < core_->gens.size(); ++i) {
        bool in = true;
        for (size_t f : zero)
            if (lin::dot(core_->cn.facets[f], core_->coords[i]) != 0) {
                in = false;
                break;
            }
        if (in) idx.push_back(i);
    }
    return face(std::move(idx));
}

inline AffineMonoid AffineMonoid::localize(const Face& f) const {
    require(f.parent().core_ == core_ || f.parent().same_submonoid(*this), ErrorKind::validation,
            "face does not belong to this monoid");
    Mat gens = core_->gens;
    for (const auto& g : f.generator_subset()) gens.push_back(lin::vec_neg(g));
    return AffineMonoid(core_->dim, gens);
}

} // namespace polystrata
