#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "polystrata/error.hpp"

namespace polystrata {

// Shape of a product-of-simplices cell: a tuple of block sizes, each >= 1.
// The empty tuple is the point. [n] denotes the product of the index sets
// {0..n_i}; block indices run over 0..weight-1.
struct LambdaObject {
    std::vector<int> blocks;

    static LambdaObject point() { return {}; }

    int weight() const { return static_cast<int>(blocks.size()); }
    bool is_point() const { return blocks.empty(); }
    int dimension() const { return std::accumulate(blocks.begin(), blocks.end(), 0); }

    long long point_count() const {
        long long c = 1;
        for (int b : blocks) c *= (b + 1);
        return c;
    }

    LambdaObject restrict_to(const std::vector<int>& kept) const {
        LambdaObject r;
        for (int k : kept) {
            require(k >= 0 && k < weight(), ErrorKind::validation, "block index out of range");
            r.blocks.push_back(blocks[k]);
        }
        return r;
    }

    void validate() const {
        for (int b : blocks)
            require(b >= 1, ErrorKind::validation, "block sizes must be positive");
    }

    bool operator==(const LambdaObject& o) const = default;
    bool operator<(const LambdaObject& o) const { return blocks < o.blocks; }

    std::string to_string() const {
        if (is_point()) return "[0]";
        std::string s = "[(";
        for (size_t i = 0; i < blocks.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(blocks[i]);
        }
        return s + ")]";
    }
};

// All tuples of [n] in lexicographic order.
inline std::vector<std::vector<int>> object_points(const LambdaObject& n) {
    std::vector<std::vector<int>> pts{{}};
    for (int b : n.blocks) {
        std::vector<std::vector<int>> next;
        for (const auto& p : pts)
            for (int v = 0; v <= b; ++v) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        pts = std::move(next);
    }
    return pts;
}

// Morphism [m] -> [n] given by a block assignment and coordinate maps:
//  - f[k] is the target block hit by source block k, or -1 when the block is
//    dropped (the support J is {k : f[k] != -1}); f is injective on J;
//  - alpha[l] is the full coordinate table {0..m_k} -> {0..n_l} when
//    l = f[k], and a single constant when no source block hits l.
// The realized map sends j to i with i_l = alpha[l][j_k] on hit blocks and
// i_l = alpha[l][0] elsewhere. Triples and realized maps determine each
// other uniquely (dropped blocks are detectable because sizes are >= 1).
struct LambdaMorphism {
    LambdaObject source;
    LambdaObject target;
    std::vector<int> f;
    std::vector<std::vector<int>> alpha;

    static LambdaMorphism identity(const LambdaObject& n) {
        LambdaMorphism m;
        m.source = m.target = n;
        m.f.resize(n.weight());
        std::iota(m.f.begin(), m.f.end(), 0);
        m.alpha.resize(n.weight());
        for (int l = 0; l < n.weight(); ++l) {
            m.alpha[l].resize(n.blocks[l] + 1);
            std::iota(m.alpha[l].begin(), m.alpha[l].end(), 0);
        }
        return m;
    }

    void validate() const {
        source.validate();
        target.validate();
        require(static_cast<int>(f.size()) == source.weight(), ErrorKind::validation,
                "block assignment size mismatch");
        require(static_cast<int>(alpha.size()) == target.weight(), ErrorKind::validation,
                "coordinate table count mismatch");
        std::vector<int> hit(target.weight(), -1);
        for (int k = 0; k < source.weight(); ++k) {
            if (f[k] < 0) continue;
            require(f[k] < target.weight(), ErrorKind::validation, "target block out of range");
            require(hit[f[k]] < 0, ErrorKind::validation, "block assignment not injective");
            hit[f[k]] = k;
        }
        for (int l = 0; l < target.weight(); ++l) {
            const auto& a = alpha[l];
            size_t expect = hit[l] >= 0 ? source.blocks[hit[l]] + 1 : 1;
            require(a.size() == expect, ErrorKind::validation, "coordinate table size mismatch");
            std::vector<bool> seen(target.blocks[l] + 1, false);
            for (int v : a) {
                require(v >= 0 && v <= target.blocks[l], ErrorKind::validation,
                        "coordinate value out of range");
                if (hit[l] >= 0) {
                    require(!seen[v], ErrorKind::validation, "coordinate table not injective");
                    seen[v] = true;
                }
            }
        }
    }

    std::vector<int> block_support() const {
        std::vector<int> j;
        for (int k = 0; k < source.weight(); ++k)
            if (f[k] >= 0) j.push_back(k);
        return j;
    }

    bool has_full_block_support() const {
        return std::none_of(f.begin(), f.end(), [](int v) { return v < 0; });
    }

    bool is_injective() const { return has_full_block_support(); }

    bool is_surjective() const {
        std::vector<bool> hit(target.weight(), false);
        for (int k = 0; k < source.weight(); ++k)
            if (f[k] >= 0) {
                if (source.blocks[k] != target.blocks[f[k]]) return false;
                hit[f[k]] = true;
            }
        return std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
    }

    bool is_iso() const { return is_injective() && is_surjective(); }

    bool is_identity() const { return *this == identity(source); }

    std::vector<int> apply(const std::vector<int>& pt) const {
        require(pt.size() == static_cast<size_t>(source.weight()), ErrorKind::validation,
                "point arity mismatch");
        std::vector<int> hit(target.weight(), -1);
        for (int k = 0; k < source.weight(); ++k)
            if (f[k] >= 0) hit[f[k]] = k;
        std::vector<int> out(target.weight());
        for (int l = 0; l < target.weight(); ++l)
            out[l] = hit[l] >= 0 ? alpha[l][pt[hit[l]]] : alpha[l][0];
        return out;
    }

    bool operator==(const LambdaMorphism& o) const = default;

    std::string to_string() const {
        std::string s = source.to_string() + "->" + target.to_string() + "(";
        std::vector<int> hit(target.weight(), -1);
        for (int k = 0; k < source.weight(); ++k)
            if (f[k] >= 0) hit[f[k]] = k;
        for (int l = 0; l < target.weight(); ++l) {
            if (l) s += ';';
            if (hit[l] >= 0) {
                s += 'b' + std::to_string(hit[l]) + '[';
                for (size_t t = 0; t < alpha[l].size(); ++t) {
                    if (t) s += ',';
                    s += std::to_string(alpha[l][t]);
                }
                s += ']';
            } else {
                s += '=' + std::to_string(alpha[l][0]);
            }
        }
        return s + ")";
    }

    std::string key() const { return to_string(); }
};

// The support clause constrains only point sources in the source definition;
// a proper nonempty support elsewhere is the permissive reading, flagged
// here so strict validation can reject such input.
inline bool has_partial_block_support(const LambdaMorphism& m) {
    if (m.source.is_point()) return false;
    auto j = m.block_support();
    return !j.empty() && j.size() < static_cast<size_t>(m.source.weight());
}

inline LambdaMorphism compose(const LambdaMorphism& g, const LambdaMorphism& fm) {
    require(fm.target == g.source, ErrorKind::validation, "composition type mismatch");
    LambdaMorphism c;
    c.source = fm.source;
    c.target = g.target;
    c.f.assign(fm.source.weight(), -1);
    for (int k = 0; k < fm.source.weight(); ++k)
        if (fm.f[k] >= 0 && g.f[fm.f[k]] >= 0) c.f[k] = g.f[fm.f[k]];
    std::vector<int> ghit(g.target.weight(), -1), fhit(g.source.weight(), -1);
    for (int j = 0; j < g.source.weight(); ++j)
        if (g.f[j] >= 0) ghit[g.f[j]] = j;
    for (int k = 0; k < fm.source.weight(); ++k)
        if (fm.f[k] >= 0) fhit[fm.f[k]] = k;
    c.alpha.resize(g.target.weight());
    for (int l = 0; l < g.target.weight(); ++l) {
        int j = ghit[l];
        if (j < 0) {
            c.alpha[l] = {g.alpha[l][0]};
        } else if (fhit[j] < 0) {
            c.alpha[l] = {g.alpha[l][fm.alpha[j][0]]};
        } else {
            const auto& inner = fm.alpha[j];
            c.alpha[l].resize(inner.size());
            for (size_t t = 0; t < inner.size(); ++t) c.alpha[l][t] = g.alpha[l][inner[t]];
        }
    }
    return c;
}

// Order-preserving block deletion with identity coordinate tables. These are
// the canonical degeneracies: every surjection is uniquely an isomorphism
// after one of them.
inline LambdaMorphism standard_surjection(const LambdaObject& n, const std::vector<int>& kept) {
    LambdaMorphism s;
    s.source = n;
    s.target = n.restrict_to(kept);
    s.f.assign(n.weight(), -1);
    for (size_t i = 0; i < kept.size(); ++i) {
        require(i == 0 || kept[i] > kept[i - 1], ErrorKind::validation,
                "kept blocks must be strictly increasing");
        s.f[kept[i]] = static_cast<int>(i);
    }
    s.alpha.resize(kept.size());
    for (size_t i = 0; i < kept.size(); ++i) {
        s.alpha[i].resize(n.blocks[kept[i]] + 1);
        std::iota(s.alpha[i].begin(), s.alpha[i].end(), 0);
    }
    return s;
}

// m = mono . epi with epi the standard surjection onto the support.
inline std::pair<LambdaMorphism, LambdaMorphism> factor_epi_mono(const LambdaMorphism& m) {
    std::vector<int> j = m.block_support();
    LambdaMorphism epi = standard_surjection(m.source, j);
    LambdaMorphism mono;
    mono.source = epi.target;
    mono.target = m.target;
    mono.f.resize(j.size());
    for (size_t i = 0; i < j.size(); ++i) mono.f[i] = m.f[j[i]];
    mono.alpha = m.alpha;
    return {epi, mono};
}

// s = iso . standard_surjection(source, kept) for surjective s; returns the
// iso and the kept set.
inline std::pair<LambdaMorphism, std::vector<int>> decompose_surjection(const LambdaMorphism& s) {
    require(s.is_surjective(), ErrorKind::validation, "not a surjection");
    auto [epi, mono] = factor_epi_mono(s);
    require(mono.is_iso(), ErrorKind::internal, "surjection with non-iso residue");
    return {mono, s.block_support()};
}

namespace detail {

inline void injective_tables(int domain, int codomain, std::vector<int>& cur,
                             std::vector<bool>& used, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == domain + 1) {
        out.push_back(cur);
        return;
    }
    for (int v = 0; v <= codomain; ++v) {
        if (used[v]) continue;
        used[v] = true;
        cur.push_back(v);
        injective_tables(domain, codomain, cur, used, out);
        cur.pop_back();
        used[v] = false;
    }
}

inline std::vector<std::vector<int>> all_injective_tables(int domain, int codomain) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::vector<bool> used(codomain + 1, false);
    injective_tables(domain, codomain, cur, used, out);
    return out;
}

// Expand the free alpha choices (tables on hit blocks, constants elsewhere)
// for a fixed block assignment.
inline void expand_alphas(const LambdaObject& source, const LambdaObject& target,
                          const std::vector<int>& f, std::vector<LambdaMorphism>& out) {
    std::vector<int> hit(target.weight(), -1);
    for (int k = 0; k < source.weight(); ++k)
        if (f[k] >= 0) hit[f[k]] = k;
    std::vector<std::vector<std::vector<int>>> choices(target.weight());
    for (int l = 0; l < target.weight(); ++l) {
        if (hit[l] >= 0) {
            if (source.blocks[hit[l]] > target.blocks[l]) return; // no injective table
            choices[l] = all_injective_tables(source.blocks[hit[l]], target.blocks[l]);
        } else {
            for (int v = 0; v <= target.blocks[l]; ++v) choices[l].push_back({v});
        }
    }
    std::vector<size_t> pick(target.weight(), 0);
    while (true) {
        LambdaMorphism m;
        m.source = source;
        m.target = target;
        m.f = f;
        m.alpha.resize(target.weight());
        for (int l = 0; l < target.weight(); ++l) m.alpha[l] = choices[l][pick[l]];
        out.push_back(std::move(m));
        int l = target.weight() - 1;
        while (l >= 0 && ++pick[l] == choices[l].size()) pick[l--] = 0;
        if (l < 0) break;
    }
}

inline void block_assignments(int src_blocks, int tgt_blocks, bool total, std::vector<int>& cur,
                              std::vector<bool>& used, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == src_blocks) {
        out.push_back(cur);
        return;
    }
    for (int l = -(total ? 0 : 1); l < tgt_blocks; ++l) {
        if (l >= 0) {
            if (used[l]) continue;
            used[l] = true;
        }
        cur.push_back(l);
        block_assignments(src_blocks, tgt_blocks, total, cur, used, out);
        cur.pop_back();
        if (l >= 0) used[l] = false;
    }
}

} // namespace detail

inline std::vector<LambdaMorphism> all_morphisms(const LambdaObject& source,
                                                 const LambdaObject& target) {
    std::vector<LambdaMorphism> out;
    std::vector<std::vector<int>> assignments;
    std::vector<int> cur;
    std::vector<bool> used(target.weight(), false);
    detail::block_assignments(source.weight(), target.weight(), false, cur, used, assignments);
    for (const auto& f : assignments) detail::expand_alphas(source, target, f, out);
    return out;
}

// Every injective morphism into `target`, over all source shapes, in a fixed
// deterministic order (by support size, then assignment, then sizes, then
// tables). Includes the identity.
inline std::vector<LambdaMorphism> injections_into(const LambdaObject& target) {
    std::vector<LambdaMorphism> out;
    for (int k = 0; k <= target.weight(); ++k) {
        std::vector<std::vector<int>> assignments;
        std::vector<int> cur;
        std::vector<bool> used(target.weight(), false);
        detail::block_assignments(k, target.weight(), true, cur, used, assignments);
        for (const auto& f : assignments) {
            // enumerate source sizes 1..target size per block
            std::vector<int> sizes(k, 1);
            while (true) {
                LambdaObject src{sizes};
                detail::expand_alphas(src, target, f, out);
                int i = k - 1;
                while (i >= 0 && sizes[i] == target.blocks[f[i]]) sizes[i--] = 1;
                if (i < 0) break;
                ++sizes[i];
            }
        }
    }
    return out;
}

inline std::vector<LambdaMorphism> surjections_from(const LambdaObject& source) {
    std::vector<LambdaMorphism> out;
    int w = source.weight();
    for (int mask = 0; mask < (1 << w); ++mask) {
        std::vector<int> kept;
        for (int k = 0; k < w; ++k)
            if (mask & (1 << k)) kept.push_back(k);
        // all bijective relabelings of the kept blocks
        std::vector<int> order(kept.size());
        std::iota(order.begin(), order.end(), 0);
        do {
            std::vector<int> f(w, -1);
            LambdaObject tgt;
            tgt.blocks.resize(kept.size());
            for (size_t i = 0; i < kept.size(); ++i) {
                f[kept[i]] = order[i];
                tgt.blocks[order[i]] = source.blocks[kept[i]];
            }
            std::vector<std::vector<std::vector<int>>> tables(kept.size());
            for (size_t i = 0; i < kept.size(); ++i)
                tables[order[i]] =
                    detail::all_injective_tables(source.blocks[kept[i]], source.blocks[kept[i]]);
            std::vector<size_t> pick(kept.size(), 0);
            while (true) {
                LambdaMorphism m;
                m.source = source;
                m.target = tgt;
                m.f = f;
                m.alpha.resize(kept.size());
                for (size_t l = 0; l < kept.size(); ++l) m.alpha[l] = tables[l][pick[l]];
                out.push_back(std::move(m));
                int l = static_cast<int>(kept.size()) - 1;
                while (l >= 0 && ++pick[l] == tables[l].size()) pick[l--] = 0;
                if (l < 0) break;
            }
        } while (std::next_permutation(order.begin(), order.end()));
    }
    return out;
}

inline std::vector<LambdaMorphism> automorphisms(const LambdaObject& n) {
    std::vector<LambdaMorphism> out;
    for (auto& m : surjections_from(n))
        if (m.is_iso() && m.target == n) out.push_back(std::move(m));
    return out;
}

} // namespace polystrata
