#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "polystrata/complex.hpp"
#include "polystrata/error.hpp"
#include "polystrata/matrix.hpp"

// Realization skeleta and fundamental-group presentations.
//
// The realization glues one product of simplices per cell. Before gluing,
// every factor simplex is refined barycentrically and the product of the
// refined factors is triangulated by the staircase rule. Combinatorially
// that triangulation has one vertex per tuple of nonempty vertex subsets
// (one face per block) and one d-simplex per (d+1)-chain of tuples under
// blockwise inclusion. Unlike a bare staircase on the vertex grid, this
// refined triangulation is preserved by every coordinate permutation, so
// attachment data acts simplicially even for loops and folds.

namespace polystrata {

// Glued 2-skeleton of a realization. Edges are oriented from the smaller
// chain to the larger one; a 2-cell sits on a chain a < b < c and its
// boundary word reads ab, then bc, then ac backwards.
struct TwoSkeleton {
    struct Edge {
        size_t tail = 0;
        size_t head = 0;
        bool operator==(const Edge&) const = default;
    };
    struct Triangle {
        size_t ab = 0;
        size_t bc = 0;
        size_t ac = 0;
        bool operator==(const Triangle&) const = default;
    };

    size_t vertex_count = 0;
    std::vector<Edge> edges;
    std::vector<Triangle> triangles;

    bool operator==(const TwoSkeleton&) const = default;

    // signed boundary word; the flag is true when the edge is traversed
    // along its own orientation
    std::array<std::pair<size_t, bool>, 3> boundary_word(size_t t) const {
        const Triangle& tr = triangles.at(t);
        return {{{tr.ab, true}, {tr.bc, true}, {tr.ac, false}}};
    }

    void validate() const {
        for (const Edge& e : edges)
            require(e.tail < vertex_count && e.head < vertex_count, ErrorKind::validation,
                    "edge endpoint out of range");
        for (const Triangle& t : triangles) {
            require(t.ab < edges.size() && t.bc < edges.size() && t.ac < edges.size(),
                    ErrorKind::validation, "triangle side out of range");
            bool closed = edges[t.ab].tail == edges[t.ac].tail &&
                          edges[t.ab].head == edges[t.bc].tail &&
                          edges[t.bc].head == edges[t.ac].head;
            require(closed, ErrorKind::validation,
                    "triangle boundary is not a closed length-3 edge path");
        }
    }

    std::string to_string() const {
        return std::to_string(vertex_count) + " vertices, " + std::to_string(edges.size()) +
               " edges, " + std::to_string(triangles.size()) + " triangles";
    }
};

namespace detail {

// Faces of one refined cell: tuples of per-block vertex bitmasks, listed in
// lexicographic order, together with their chains of length 1..3. A strict
// submask has a smaller value, so chains are ascending index sequences.
struct RefinedType {
    std::vector<std::vector<uint32_t>> elems;
    std::map<std::vector<uint32_t>, size_t> elem_index;
    std::array<std::vector<std::vector<size_t>>, 3> chains;
    std::array<std::map<std::vector<size_t>, size_t>, 3> chain_pos;
};

inline RefinedType build_refined_type(const LambdaObject& n) {
    RefinedType rt;
    rt.elems.push_back({});
    for (int b : n.blocks) {
        require(b < 30, ErrorKind::resource, "block too large to refine");
        uint32_t full = (uint32_t(1) << (b + 1)) - 1;
        std::vector<std::vector<uint32_t>> next;
        for (const auto& t : rt.elems)
            for (uint32_t m = 1; m <= full; ++m) {
                auto q = t;
                q.push_back(m);
                next.push_back(std::move(q));
            }
        rt.elems = std::move(next);
        require(rt.elems.size() <= 100000, ErrorKind::resource, "refined cell has too many faces");
    }
    for (size_t i = 0; i < rt.elems.size(); ++i) rt.elem_index[rt.elems[i]] = i;
    auto below = [&](size_t a, size_t b) {
        for (size_t i = 0; i < rt.elems[a].size(); ++i)
            if ((rt.elems[a][i] | rt.elems[b][i]) != rt.elems[b][i]) return false;
        return true;
    };
    size_t m = rt.elems.size();
    for (size_t i = 0; i < m; ++i) rt.chains[0].push_back({i});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = i + 1; j < m; ++j)
            if (below(i, j)) rt.chains[1].push_back({i, j});
    for (const auto& pr : rt.chains[1])
        for (size_t k = pr[1] + 1; k < m; ++k)
            if (below(pr[1], k)) rt.chains[2].push_back({pr[0], pr[1], k});
    require(rt.chains[1].size() + rt.chains[2].size() <= 2000000, ErrorKind::resource,
            "refined cell has too many simplices");
    for (int len = 0; len < 3; ++len)
        for (size_t p = 0; p < rt.chains[len].size(); ++p) rt.chain_pos[len][rt.chains[len][p]] = p;
    return rt;
}

// image of a face tuple along an injective morphism: hit blocks push the
// mask through the coordinate table, missed blocks give the constant vertex
inline std::vector<uint32_t> tuple_image(const LambdaMorphism& u, const std::vector<int>& hit,
                                         const std::vector<uint32_t>& t) {
    std::vector<uint32_t> out(u.target.weight());
    for (int l = 0; l < u.target.weight(); ++l) {
        if (hit[l] < 0) {
            out[l] = uint32_t(1) << u.alpha[l][0];
            continue;
        }
        uint32_t in = t[hit[l]], img = 0;
        for (int v = 0; (uint32_t(1) << v) <= in; ++v)
            if (in & (uint32_t(1) << v)) img |= uint32_t(1) << u.alpha[l][v];
        out[l] = img;
    }
    return out;
}

// least vertex and size of each connected component, in vertex order
inline std::vector<std::pair<size_t, size_t>> skeleton_components(const TwoSkeleton& sk) {
    std::vector<std::vector<size_t>> adj(sk.vertex_count);
    for (const auto& e : sk.edges) {
        adj[e.tail].push_back(e.head);
        adj[e.head].push_back(e.tail);
    }
    std::vector<char> seen(sk.vertex_count, 0);
    std::vector<std::pair<size_t, size_t>> comps;
    for (size_t v0 = 0; v0 < sk.vertex_count; ++v0) {
        if (seen[v0]) continue;
        size_t count = 0;
        std::queue<size_t> q;
        seen[v0] = 1;
        q.push(v0);
        while (!q.empty()) {
            size_t v = q.front();
            q.pop();
            ++count;
            for (size_t w : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push(w);
                }
        }
        comps.push_back({v0, count});
    }
    return comps;
}

inline void require_connected(const TwoSkeleton& sk) {
    auto comps = skeleton_components(sk);
    if (comps.size() <= 1) return;
    std::string msg = "skeleton is disconnected:";
    for (const auto& [v, n] : comps)
        msg += " component at vertex " + std::to_string(v) + " (" + std::to_string(n) +
               (n == 1 ? " vertex)" : " vertices)");
    fail_validation(msg);
}

} // namespace detail

// Glued 2-skeleton together with the class of every refined simplex of every
// cell, indexed by the chain enumeration of the cell's type. The chart is what
// lets cell-level maps (automorphisms, coverings, collapses) act on the
// skeleton.
struct SkeletonChart {
    TwoSkeleton skeleton;
    std::vector<std::vector<size_t>> cell_vertices;
    std::vector<std::vector<size_t>> cell_edges;
    std::vector<std::vector<size_t>> cell_triangles;
};

// Builds the glued 2-skeleton. Simplices of each refined cell are chains of
// face tuples; for every non-identity injection u the chains of the face are
// identified with their image in the cell on one side and with their
// restriction in the attached poly on the other. A degenerate attachment
// would crush simplices to lower dimension and is rejected.
inline SkeletonChart two_skeleton_chart(const Complex& cx) {
    using detail::RefinedType;
    std::map<std::string, RefinedType> cache;
    auto refined = [&](const LambdaObject& n) -> const RefinedType& {
        auto it = cache.find(n.to_string());
        if (it == cache.end()) it = cache.emplace(n.to_string(), detail::build_refined_type(n)).first;
        return it->second;
    };

    size_t nc = cx.cell_count();
    std::vector<std::array<size_t, 3>> seg(nc);
    size_t total = 0;
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        for (int len = 0; len < 3; ++len) {
            seg[c][len] = total;
            total += rt.chains[len].size();
        }
    }
    require(total <= 4000000, ErrorKind::resource, "refined skeleton too large");

    std::vector<size_t> up(total);
    std::iota(up.begin(), up.end(), 0);
    // roots stay minimal, so the canonical member of a class is the first
    // slot in cell-major scan order
    auto find = [&](size_t x) {
        while (up[x] != x) x = up[x] = up[up[x]];
        return x;
    };
    auto unite = [&](size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) up[std::max(a, b)] = std::min(a, b);
    };

    std::vector<unsigned char> lens(total);
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        for (int len = 0; len < 3; ++len)
            for (size_t t = 0; t < rt.chains[len].size(); ++t)
                lens[seg[c][len] + t] = static_cast<unsigned char>(len + 1);
    }

    for (size_t c = 0; c < nc; ++c) {
        const LambdaObject& n = cx.cell_type(c);
        const RefinedType& rtn = refined(n);
        for (const LambdaMorphism& u : injections_into(n)) {
            if (u.is_identity()) continue;
            PolyRef p = cx.act(c, u);
            const RefinedType& rts = refined(u.source);
            const RefinedType& rtt = refined(cx.cell_type(p.cell));
            std::vector<int> hit(u.target.weight(), -1);
            for (int k = 0; k < u.source.weight(); ++k)
                if (u.f[k] >= 0) hit[u.f[k]] = k;
            size_t m = rts.elems.size();
            std::vector<size_t> img(m), prj(m);
            for (size_t e = 0; e < m; ++e) {
                img[e] = rtn.elem_index.at(detail::tuple_image(u, hit, rts.elems[e]));
                std::vector<uint32_t> q;
                for (int kb : p.kept) q.push_back(rts.elems[e][kb]);
                prj[e] = rtt.elem_index.at(q);
            }
            for (int len = 0; len < 3; ++len)
                for (const auto& ch : rts.chains[len]) {
                    std::vector<size_t> lhs, rhs;
                    for (size_t e : ch) lhs.push_back(img[e]);
                    for (size_t e : ch) rhs.push_back(prj[e]);
                    rhs.erase(std::unique(rhs.begin(), rhs.end()), rhs.end());
                    size_t lslot = seg[c][len] + rtn.chain_pos[len].at(lhs);
                    size_t rlen = rhs.size() - 1;
                    size_t rslot = seg[p.cell][rlen] + rtt.chain_pos[rlen].at(rhs);
                    unite(lslot, rslot);
                }
        }
    }

    for (size_t s = 0; s < total; ++s)
        require(lens[find(s)] == lens[s], ErrorKind::validation,
                "degenerate attachment collapses the refined triangulation");

    SkeletonChart chart;
    TwoSkeleton& sk = chart.skeleton;
    constexpr size_t kNone = static_cast<size_t>(-1);
    std::vector<size_t> vid(total, kNone), eid(total, kNone), tid(total, kNone);
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        for (size_t t = 0; t < rt.chains[0].size(); ++t) {
            size_t r = find(seg[c][0] + t);
            if (vid[r] == kNone) vid[r] = sk.vertex_count++;
        }
    }
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        // the length-1 chain {i} sits at position i, so endpoint lookups
        // can index the vertex segment directly
        for (size_t t = 0; t < rt.chains[1].size(); ++t) {
            size_t r = find(seg[c][1] + t);
            const auto& ch = rt.chains[1][t];
            TwoSkeleton::Edge e{vid[find(seg[c][0] + ch[0])], vid[find(seg[c][0] + ch[1])]};
            if (eid[r] == kNone) {
                eid[r] = sk.edges.size();
                sk.edges.push_back(e);
            } else {
                require(sk.edges[eid[r]] == e, ErrorKind::internal, "edge gluing endpoints disagree");
            }
        }
    }
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        for (size_t t = 0; t < rt.chains[2].size(); ++t) {
            size_t r = find(seg[c][2] + t);
            const auto& ch = rt.chains[2][t];
            auto side = [&](size_t a, size_t b) {
                return eid[find(seg[c][1] + rt.chain_pos[1].at(std::vector<size_t>{a, b}))];
            };
            TwoSkeleton::Triangle tr{side(ch[0], ch[1]), side(ch[1], ch[2]), side(ch[0], ch[2])};
            if (tid[r] == kNone) {
                tid[r] = sk.triangles.size();
                sk.triangles.push_back(tr);
            } else {
                require(sk.triangles[tid[r]] == tr, ErrorKind::internal,
                        "triangle gluing boundaries disagree");
            }
        }
    }
    sk.validate();
    chart.cell_vertices.resize(nc);
    chart.cell_edges.resize(nc);
    chart.cell_triangles.resize(nc);
    for (size_t c = 0; c < nc; ++c) {
        const RefinedType& rt = refined(cx.cell_type(c));
        for (size_t t = 0; t < rt.chains[0].size(); ++t)
            chart.cell_vertices[c].push_back(vid[find(seg[c][0] + t)]);
        for (size_t t = 0; t < rt.chains[1].size(); ++t)
            chart.cell_edges[c].push_back(eid[find(seg[c][1] + t)]);
        for (size_t t = 0; t < rt.chains[2].size(); ++t)
            chart.cell_triangles[c].push_back(tid[find(seg[c][2] + t)]);
    }
    return chart;
}

inline TwoSkeleton two_skeleton(const Complex& cx) { return two_skeleton_chart(cx).skeleton; }

// Presentation with generators g0, g1, ... and relators stored as signed
// 1-based generator indices.
struct GroupPresentation {
    std::vector<std::string> generators;
    std::vector<std::vector<int>> relators;

    bool operator==(const GroupPresentation&) const = default;

    bool is_free() const { return relators.empty(); }
    size_t free_rank() const {
        require(is_free(), ErrorKind::validation, "presentation is not visibly free");
        return generators.size();
    }

    void validate() const {
        for (const auto& w : relators) {
            require(!w.empty(), ErrorKind::validation, "empty relator");
            for (size_t i = 0; i < w.size(); ++i) {
                require(w[i] != 0 && std::abs(w[i]) <= static_cast<int>(generators.size()),
                        ErrorKind::validation, "relator letter out of range");
                require(i == 0 || w[i - 1] != -w[i], ErrorKind::validation,
                        "relator is not reduced");
            }
        }
    }

    // free rank of the abelianization
    size_t abelianized_rank() const {
        if (relators.empty()) return generators.size();
        lin::Mat m(relators.size(), lin::Vec(generators.size(), 0));
        for (size_t r = 0; r < relators.size(); ++r)
            for (int a : relators[r]) m[r][std::abs(a) - 1] += a > 0 ? 1 : -1;
        return generators.size() - static_cast<size_t>(lin::rank(m));
    }

    // torsion invariant factors and free rank of the abelianization
    lin::QuotientShape abelian_invariants() const {
        lin::Mat m(relators.size(), lin::Vec(generators.size(), 0));
        for (size_t r = 0; r < relators.size(); ++r)
            for (int a : relators[r]) m[r][std::abs(a) - 1] += a > 0 ? 1 : -1;
        return lin::quotient_shape(m, generators.size());
    }

    std::string to_string() const {
        std::string s = "<";
        for (size_t i = 0; i < generators.size(); ++i) {
            if (i) s += ", ";
            s += generators[i];
        }
        s += " |";
        for (size_t r = 0; r < relators.size(); ++r) {
            s += r ? ", " : " ";
            for (size_t i = 0; i < relators[r].size(); ++i) {
                if (i) s += ' ';
                int a = relators[r][i];
                s += generators[std::abs(a) - 1];
                if (a < 0) s += "^-1";
            }
        }
        if (relators.empty()) s += " ";
        s += ">";
        return s;
    }
};

// Edge-path presentation relative to a breadth-first spanning tree rooted at
// the basepoint. Tree edges die, each remaining edge is a generator, and
// every 2-cell contributes its boundary word with tree letters dropped.
inline GroupPresentation pi1_presentation(const TwoSkeleton& sk, size_t basepoint = 0) {
    require(sk.vertex_count > 0, ErrorKind::validation, "empty skeleton has no basepoint");
    require(basepoint < sk.vertex_count, ErrorKind::validation, "basepoint out of range");
    detail::require_connected(sk);

    // neighbors in edge-id order keep the tree deterministic
    std::vector<std::vector<std::pair<size_t, bool>>> adj(sk.vertex_count);
    for (size_t e = 0; e < sk.edges.size(); ++e) {
        adj[sk.edges[e].tail].push_back({e, true});
        adj[sk.edges[e].head].push_back({e, false});
    }
    std::vector<char> seen(sk.vertex_count, 0);
    std::vector<char> in_tree(sk.edges.size(), 0);
    std::queue<size_t> q;
    seen[basepoint] = 1;
    q.push(basepoint);
    while (!q.empty()) {
        size_t v = q.front();
        q.pop();
        for (auto [e, fwd] : adj[v]) {
            size_t w = fwd ? sk.edges[e].head : sk.edges[e].tail;
            if (seen[w]) continue;
            seen[w] = 1;
            in_tree[e] = 1;
            q.push(w);
        }
    }

    GroupPresentation g;
    std::vector<int> gen_of(sk.edges.size(), 0);
    for (size_t e = 0; e < sk.edges.size(); ++e)
        if (!in_tree[e]) {
            gen_of[e] = static_cast<int>(g.generators.size()) + 1;
            g.generators.push_back("g" + std::to_string(g.generators.size()));
        }
    for (size_t t = 0; t < sk.triangles.size(); ++t) {
        std::vector<int> w;
        for (auto [e, fwd] : sk.boundary_word(t)) {
            if (!gen_of[e]) continue;
            int a = fwd ? gen_of[e] : -gen_of[e];
            if (!w.empty() && w.back() == -a)
                w.pop_back();
            else
                w.push_back(a);
        }
        if (!w.empty()) g.relators.push_back(std::move(w));
    }
    g.validate();
    return g;
}

// First Betti number of the realization from the two boundary matrices.
inline size_t h1_rank(const TwoSkeleton& sk) {
    require(sk.vertex_count > 0, ErrorKind::validation, "empty skeleton");
    detail::require_connected(sk);
    lin::Mat d1(sk.edges.size(), lin::Vec(sk.vertex_count, 0));
    for (size_t e = 0; e < sk.edges.size(); ++e) {
        d1[e][sk.edges[e].head] += 1;
        d1[e][sk.edges[e].tail] -= 1;
    }
    lin::Mat d2(sk.triangles.size(), lin::Vec(sk.edges.size(), 0));
    for (size_t t = 0; t < sk.triangles.size(); ++t) {
        d2[t][sk.triangles[t].ab] += 1;
        d2[t][sk.triangles[t].bc] += 1;
        d2[t][sk.triangles[t].ac] -= 1;
    }
    size_t cycles = sk.edges.size() - static_cast<size_t>(lin::rank(d1));
    return cycles - static_cast<size_t>(lin::rank(d2));
}

inline size_t h1_rank(const Complex& cx) { return h1_rank(two_skeleton(cx)); }

} // namespace polystrata
