#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "polystrata/complex.hpp"
#include "polystrata/error.hpp"
#include "polystrata/pi1.hpp"

// Extensions of a finite group acting on a complex by the fundamental group
// of the realization, towers of such extensions, and cospecialization maps
// between towers.
//
// Lifting is supported when the realization is a graph: the refined
// 2-skeleton must have no triangles. That skeleton is already a barycentric
// subdivision, so cell automorphisms can never invert an edge; every edge
// runs from a singleton chain to a longer one and automorphisms preserve
// chain length. The extension is presented as the fundamental group of the
// quotient graph of groups: one generator per nontrivial stabilizer element
// at each vertex-orbit representative, one letter per edge orbit outside a
// spanning tree of the quotient, stabilizer multiplication tables and edge
// conjugation as relators.
//
// Words multiply left to right, as do permutations, so a traversal-ordered
// word maps to the product of its letters' images. Left actions on cells
// therefore induce the right action v * g = (action of g^-1)(v) on the
// skeleton, and all orbit bookkeeping below uses that star action.

namespace polystrata {

// Finite permutation group on {0..degree-1}: the closure of its generators,
// sorted, so the identity is always element 0. Each element remembers one
// word in the generators.
struct PermGroup {
    int degree = 0;
    std::vector<std::vector<int>> elements;
    std::vector<std::vector<size_t>> words;
    std::vector<std::vector<size_t>> table;
    std::vector<size_t> inv;
    std::vector<size_t> gen_index;

    bool operator==(const PermGroup& o) const {
        return degree == o.degree && elements == o.elements;
    }

    size_t size() const { return elements.size(); }
    size_t identity() const { return 0; }
    // mul(a, b) applies b first, then a, matching morphism composition
    size_t mul(size_t a, size_t b) const { return table.at(a).at(b); }
    size_t inverse(size_t a) const { return inv.at(a); }

    size_t index_of(const std::vector<int>& p) const {
        auto it = std::lower_bound(elements.begin(), elements.end(), p);
        require(it != elements.end() && *it == p, ErrorKind::validation,
                "permutation is not a group element");
        return static_cast<size_t>(it - elements.begin());
    }

    static PermGroup generated(int degree, const std::vector<std::vector<int>>& gens) {
        require(degree > 0, ErrorKind::validation, "permutation degree must be positive");
        for (const auto& p : gens) {
            require(p.size() == static_cast<size_t>(degree), ErrorKind::validation,
                    "generator degree mismatch");
            std::vector<char> seen(degree, 0);
            for (int v : p) {
                require(v >= 0 && v < degree && !seen[v], ErrorKind::validation,
                        "generator is not a permutation");
                seen[v] = 1;
            }
        }
        std::vector<int> idp(degree);
        std::iota(idp.begin(), idp.end(), 0);
        std::vector<std::vector<int>> elems{idp};
        std::vector<std::vector<size_t>> ws{{}};
        std::map<std::vector<int>, size_t> pos{{idp, 0}};
        for (size_t i = 0; i < elems.size(); ++i)
            for (size_t g = 0; g < gens.size(); ++g) {
                std::vector<int> q(degree);
                for (int x = 0; x < degree; ++x) q[x] = elems[i][gens[g][x]];
                if (pos.count(q)) continue;
                pos[q] = elems.size();
                elems.push_back(q);
                std::vector<size_t> w = ws[i];
                w.push_back(g);
                ws.push_back(std::move(w));
                require(elems.size() <= 5000, ErrorKind::resource, "permutation group too large");
            }

        PermGroup pg;
        pg.degree = degree;
        std::vector<size_t> order(elems.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return elems[a] < elems[b]; });
        pg.elements.resize(order.size());
        pg.words.resize(order.size());
        for (size_t k = 0; k < order.size(); ++k) {
            pg.elements[k] = std::move(elems[order[k]]);
            pg.words[k] = std::move(ws[order[k]]);
        }
        require(pg.elements[0] == idp, ErrorKind::internal, "identity is not the least element");

        size_t n = pg.elements.size();
        pg.table.assign(n, std::vector<size_t>(n, 0));
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b) {
                std::vector<int> q(degree);
                for (int x = 0; x < degree; ++x) q[x] = pg.elements[a][pg.elements[b][x]];
                pg.table[a][b] = pg.index_of(q);
            }
        pg.inv.assign(n, 0);
        for (size_t a = 0; a < n; ++a) {
            std::vector<int> q(degree);
            for (int x = 0; x < degree; ++x) q[pg.elements[a][x]] = x;
            pg.inv[a] = pg.index_of(q);
        }
        for (const auto& p : gens) pg.gen_index.push_back(pg.index_of(p));
        return pg;
    }
};

namespace detail {

inline bool same_morphism(const ComplexMorphism& a, const ComplexMorphism& b) {
    if (!(a.source() == b.source()) || !(a.target() == b.target())) return false;
    for (size_t i = 0; i < a.source().cell_count(); ++i)
        if (!(a.image(i) == b.image(i))) return false;
    return true;
}

inline std::string word_text(const GroupPresentation& p, const std::vector<int>& w) {
    if (w.empty()) return "1";
    std::string s;
    for (size_t i = 0; i < w.size(); ++i) {
        if (i) s += ' ';
        s += p.generators.at(static_cast<size_t>(std::abs(w[i])) - 1);
        if (w[i] < 0) s += "^-1";
    }
    return s;
}

} // namespace detail

// A finite group acting on a complex: one automorphism per group element,
// aligned with the element order. The action is a left action.
struct GaloisActionDatum {
    PermGroup group;
    std::vector<ComplexMorphism> action;

    GaloisActionDatum(PermGroup g, std::vector<ComplexMorphism> a)
        : group(std::move(g)), action(std::move(a)) {
        validate();
    }

    const Complex& complex() const { return action.front().source(); }

    static GaloisActionDatum trivial(const Complex& c) {
        std::vector<ComplexMorphism> a{ComplexMorphism::identity(c)};
        return GaloisActionDatum(PermGroup::generated(1, {}), std::move(a));
    }

    // closes the generators into a full action; the homomorphism property is
    // verified afterwards, so mismatched generator orders are rejected
    static GaloisActionDatum from_generators(const Complex& c, int degree,
                                             const std::vector<std::vector<int>>& gen_perms,
                                             const std::vector<ComplexMorphism>& gen_actions) {
        require(gen_perms.size() == gen_actions.size(), ErrorKind::validation,
                "one automorphism per group generator required");
        PermGroup g = PermGroup::generated(degree, gen_perms);
        std::vector<ComplexMorphism> act;
        for (size_t e = 0; e < g.size(); ++e) {
            ComplexMorphism m = ComplexMorphism::identity(c);
            for (size_t l : g.words[e]) m = compose(m, gen_actions.at(l));
            act.push_back(std::move(m));
        }
        return GaloisActionDatum(std::move(g), std::move(act));
    }

    void validate() const {
        require(!action.empty() && action.size() == group.size(), ErrorKind::validation,
                "one automorphism per group element required");
        const Complex& c = action.front().source();
        for (const ComplexMorphism& m : action) {
            require(m.source() == c && m.target() == c, ErrorKind::validation,
                    "action morphisms must share one complex");
            require(morphism_is_iso(m), ErrorKind::validation,
                    "action element is not an automorphism");
        }
        require(detail::same_morphism(action[group.identity()], ComplexMorphism::identity(c)),
                ErrorKind::validation, "identity element must act as the identity");
        for (size_t a = 0; a < group.size(); ++a)
            for (size_t b = 0; b < group.size(); ++b)
                require(detail::same_morphism(action[group.mul(a, b)],
                                              compose(action[a], action[b])),
                        ErrorKind::validation, "action is not a homomorphism");
    }
};

// Extension 1 -> pi1 -> Pi -> G -> 1 at presentation level: Pi with its
// relators, the distinguished kernel generators as words, and the quotient
// map recorded per generator.
struct ExtensionPresentation {
    struct GenInfo {
        bool stab = false;   // stabilizer letter vs edge letter
        size_t orbit = 0;    // vertex orbit (stab) or edge orbit
        size_t element = 0;  // stabilizing element, or the edge twist
        bool operator==(const GenInfo&) const = default;
    };

    GroupPresentation pi;
    std::vector<std::vector<int>> kernel_generators;
    PermGroup group;
    std::vector<size_t> quotient;
    std::vector<GenInfo> gen_info;

    size_t kernel_rank() const { return kernel_generators.size(); }

    size_t quotient_of(const std::vector<int>& w) const {
        size_t g = group.identity();
        for (int a : w) {
            size_t e = quotient.at(static_cast<size_t>(std::abs(a)) - 1);
            g = group.mul(g, a > 0 ? e : group.inverse(e));
        }
        return g;
    }

    // folds adjacent stabilizer letters over one orbit through the group
    // table, drops identity contributions, and freely reduces
    std::vector<int> normalize(const std::vector<int>& w) const {
        std::map<std::pair<size_t, size_t>, int> lookup;
        for (size_t i = 0; i < gen_info.size(); ++i)
            if (gen_info[i].stab)
                lookup[{gen_info[i].orbit, gen_info[i].element}] = static_cast<int>(i) + 1;
        auto elem_of = [&](int a) {
            size_t e = quotient[static_cast<size_t>(std::abs(a)) - 1];
            return a > 0 ? e : group.inverse(e);
        };
        std::vector<int> out;
        for (int a : w) {
            int cur = a;
            for (;;) {
                if (out.empty()) {
                    out.push_back(cur);
                    break;
                }
                int top = out.back();
                if (top == -cur) {
                    out.pop_back();
                    break;
                }
                const GenInfo& gt = gen_info[static_cast<size_t>(std::abs(top)) - 1];
                const GenInfo& gc = gen_info[static_cast<size_t>(std::abs(cur)) - 1];
                if (gt.stab && gc.stab && gt.orbit == gc.orbit) {
                    size_t prod = group.mul(elem_of(top), elem_of(cur));
                    out.pop_back();
                    if (prod == group.identity()) break;
                    cur = lookup.at({gt.orbit, prod});
                    continue;
                }
                out.push_back(cur);
                break;
            }
        }
        return out;
    }

    void validate() const {
        require(group.size() >= 1, ErrorKind::validation, "missing Galois group");
        pi.validate();
        require(quotient.size() == pi.generators.size() && gen_info.size() == pi.generators.size(),
                ErrorKind::validation, "per-generator tables have the wrong size");
        for (size_t q : quotient)
            require(q < group.size(), ErrorKind::validation, "quotient image out of range");
        for (const auto& r : pi.relators)
            require(quotient_of(r) == group.identity(), ErrorKind::validation,
                    "a relator survives in the Galois group");
        for (const auto& w : kernel_generators) {
            require(!w.empty(), ErrorKind::validation, "trivial kernel generator");
            for (int a : w)
                require(a != 0 && std::abs(a) <= static_cast<int>(pi.generators.size()),
                        ErrorKind::validation, "kernel letter out of range");
            require(quotient_of(w) == group.identity(), ErrorKind::validation,
                    "a kernel generator survives in the Galois group");
        }
        std::vector<char> hit(group.size(), 0);
        hit[group.identity()] = 1;
        std::queue<size_t> bfs;
        bfs.push(group.identity());
        size_t reached = 1;
        while (!bfs.empty()) {
            size_t g = bfs.front();
            bfs.pop();
            for (size_t img : quotient)
                for (size_t n : {group.mul(g, img), group.mul(g, group.inverse(img))})
                    if (!hit[n]) {
                        hit[n] = 1;
                        ++reached;
                        bfs.push(n);
                    }
        }
        require(reached == group.size(), ErrorKind::validation, "quotient map is not surjective");
    }

    std::string to_string() const {
        std::string s = pi.to_string();
        if (kernel_generators.empty()) {
            s += "; trivial kernel";
        } else {
            s += "; kernel generated by ";
            for (size_t i = 0; i < kernel_generators.size(); ++i) {
                if (i) s += ", ";
                s += detail::word_text(pi, kernel_generators[i]);
            }
        }
        s += "; quotient onto a group of order " + std::to_string(group.size());
        return s;
    }
};

inline std::string presentation_hash(const GroupPresentation& p) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0')
       << static_cast<unsigned long long>(std::hash<std::string>{}(p.to_string()));
    return os.str();
}

// Coset enumeration for the subgroup generated by the given words. Returns
// the index when the table closes within max_cosets; exceeding the bound is
// a resource error, so an infinite index cannot loop forever.
inline size_t todd_coxeter_index(const GroupPresentation& pres,
                                 const std::vector<std::vector<int>>& subgroup,
                                 size_t max_cosets = 4096) {
    pres.validate();
    size_t k = pres.generators.size();
    for (const auto& w : subgroup)
        for (int a : w)
            require(a != 0 && std::abs(a) <= static_cast<int>(k), ErrorKind::validation,
                    "subgroup letter out of range");
    if (k == 0) return 1;
    require(max_cosets >= 1, ErrorKind::validation, "coset bound must be positive");

    size_t width = 2 * k;
    auto col = [](int a) { return static_cast<size_t>(2 * (std::abs(a) - 1) + (a < 0 ? 1 : 0)); };
    std::vector<std::vector<long>> tab;
    std::vector<size_t> up;
    auto find = [&](size_t x) {
        while (up[x] != x) x = up[x] = up[up[x]];
        return x;
    };
    bool merged = false;
    std::queue<std::pair<size_t, size_t>> pending;
    auto newcoset = [&]() {
        require(tab.size() < max_cosets, ErrorKind::resource,
                "coset enumeration exceeded " + std::to_string(max_cosets) + " cosets");
        tab.push_back(std::vector<long>(width, -1));
        up.push_back(up.size());
        return tab.size() - 1;
    };
    auto settle = [&]() {
        while (!pending.empty()) {
            auto [x, y] = pending.front();
            pending.pop();
            x = find(x);
            y = find(y);
            if (x == y) continue;
            size_t s = std::min(x, y), l = std::max(x, y);
            up[l] = s;
            merged = true;
            for (size_t w = 0; w < width; ++w) {
                if (tab[l][w] < 0) continue;
                size_t lv = find(static_cast<size_t>(tab[l][w]));
                if (tab[s][w] < 0)
                    tab[s][w] = static_cast<long>(lv);
                else if (find(static_cast<size_t>(tab[s][w])) != lv)
                    pending.push({find(static_cast<size_t>(tab[s][w])), lv});
            }
        }
    };
    // scans word at coset c, filling gaps with new cosets; reports changes
    auto scan = [&](size_t c, const std::vector<int>& word) {
        bool changed = false;
        size_t f = find(c), b = find(c);
        size_t i = 0, j = word.size();
        for (;;) {
            while (i < j && tab[f][col(word[i])] >= 0) {
                f = find(static_cast<size_t>(tab[f][col(word[i])]));
                ++i;
            }
            while (j > i && tab[b][col(-word[j - 1])] >= 0) {
                b = find(static_cast<size_t>(tab[b][col(-word[j - 1])]));
                --j;
            }
            if (i == j) {
                if (f != b) {
                    pending.push({f, b});
                    settle();
                    changed = true;
                }
                return changed;
            }
            if (i + 1 == j) {
                tab[f][col(word[i])] = static_cast<long>(b);
                tab[b][col(-word[i])] = static_cast<long>(f);
                return true;
            }
            size_t n = newcoset();
            tab[f][col(word[i])] = static_cast<long>(n);
            tab[n][col(-word[i])] = static_cast<long>(f);
            f = n;
            ++i;
            changed = true;
        }
    };

    newcoset();
    for (const auto& w : subgroup) scan(0, w);
    for (;;) {
        bool any = false;
        merged = false;
        for (const auto& w : subgroup)
            if (scan(find(0), w)) any = true;
        for (size_t c = 0; c < tab.size(); ++c) {
            if (find(c) != c) continue;
            for (const auto& r : pres.relators)
                if (scan(find(c), r)) any = true;
        }
        if (merged) any = true;
        if (!any) {
            bool defined = false;
            for (size_t c = 0; c < tab.size() && !defined; ++c) {
                if (find(c) != c) continue;
                for (size_t w = 0; w < width && !defined; ++w)
                    if (tab[c][w] < 0) {
                        size_t n = newcoset();
                        tab[c][w] = static_cast<long>(n);
                        tab[n][w ^ 1] = static_cast<long>(c);
                        defined = true;
                    }
            }
            if (!defined) break;
        }
    }
    size_t live = 0;
    for (size_t c = 0; c < tab.size(); ++c)
        if (find(c) == c) ++live;
    return live;
}

// Certifies that the distinguished subgroup is the whole kernel of the
// quotient map: its generators die in G, so coset index |G| pins it down.
// Returns the index.
inline size_t verify_exact(const ExtensionPresentation& ext, size_t max_cosets = 4096) {
    ext.validate();
    size_t idx = todd_coxeter_index(ext.pi, ext.kernel_generators, max_cosets);
    require(idx == ext.group.size(), ErrorKind::validation,
            "distinguished subgroup has index " + std::to_string(idx) +
                " but the Galois group has order " + std::to_string(ext.group.size()));
    return idx;
}

namespace detail {

constexpr size_t kNoClass = static_cast<size_t>(-1);

// vertex and edge classes under a cell automorphism
struct SkeletonPerm {
    std::vector<size_t> v, e;
};

inline SkeletonPerm skeleton_perm(const Complex& cx, const SkeletonChart& chart,
                                  const ComplexMorphism& m) {
    SkeletonPerm p;
    p.v.assign(chart.skeleton.vertex_count, kNoClass);
    p.e.assign(chart.skeleton.edges.size(), kNoClass);
    std::vector<size_t> img = m.cell_image();
    for (size_t c = 0; c < cx.cell_count(); ++c) {
        size_t j = img[c];
        require(cx.cell_type(c) == cx.cell_type(j), ErrorKind::internal,
                "automorphism changes a cell type");
        for (size_t t = 0; t < chart.cell_vertices[c].size(); ++t) {
            size_t& slot = p.v[chart.cell_vertices[c][t]];
            size_t val = chart.cell_vertices[j][t];
            require(slot == kNoClass || slot == val, ErrorKind::internal,
                    "automorphism tears a vertex class");
            slot = val;
        }
        for (size_t t = 0; t < chart.cell_edges[c].size(); ++t) {
            size_t& slot = p.e[chart.cell_edges[c][t]];
            size_t val = chart.cell_edges[j][t];
            require(slot == kNoClass || slot == val, ErrorKind::internal,
                    "automorphism tears an edge class");
            slot = val;
        }
    }
    for (size_t e = 0; e < p.e.size(); ++e) {
        const auto& a = chart.skeleton.edges[e];
        const auto& b = chart.skeleton.edges[p.e[e]];
        require(p.v[a.tail] == b.tail && p.v[a.head] == b.head, ErrorKind::internal,
                "automorphism breaks an incidence");
    }
    return p;
}

// Induced map of skeleta for an arbitrary morphism: vertices map to
// vertices; an edge maps to an edge or collapses onto a vertex.
struct SkeletonMap {
    std::vector<size_t> v;
    std::vector<long> e;       // image edge class, or -1 when collapsed
    std::vector<size_t> ecol;  // image vertex class of a collapsed edge
};

inline SkeletonMap skeleton_map(const Complex& src, const SkeletonChart& cs, const Complex& dst,
                                const SkeletonChart& cd, const ComplexMorphism& m) {
    require(m.source() == src && m.target() == dst, ErrorKind::validation,
            "morphism endpoints do not match the given complexes");
    std::map<std::string, RefinedType> cache;
    auto refined = [&](const LambdaObject& n) -> const RefinedType& {
        auto it = cache.find(n.to_string());
        if (it == cache.end()) it = cache.emplace(n.to_string(), build_refined_type(n)).first;
        return it->second;
    };
    SkeletonMap sm;
    sm.v.assign(cs.skeleton.vertex_count, kNoClass);
    sm.e.assign(cs.skeleton.edges.size(), -2);
    sm.ecol.assign(cs.skeleton.edges.size(), kNoClass);
    for (size_t c = 0; c < src.cell_count(); ++c) {
        const PolyRef& p = m.image(c);
        const RefinedType& rs = refined(src.cell_type(c));
        const RefinedType& rd = refined(dst.cell_type(p.cell));
        std::vector<size_t> proj(rs.elems.size());
        for (size_t i = 0; i < rs.elems.size(); ++i) {
            std::vector<uint32_t> q;
            for (int kb : p.kept) q.push_back(rs.elems[i][kb]);
            proj[i] = rd.elem_index.at(q);
        }
        for (size_t t = 0; t < rs.chains[0].size(); ++t) {
            size_t& slot = sm.v[cs.cell_vertices[c][t]];
            size_t val = cd.cell_vertices[p.cell][proj[t]];
            require(slot == kNoClass || slot == val, ErrorKind::internal,
                    "induced vertex map disagrees between presentations");
            slot = val;
        }
        for (size_t t = 0; t < rs.chains[1].size(); ++t) {
            const auto& ch = rs.chains[1][t];
            size_t pa = proj[ch[0]], pb = proj[ch[1]];
            size_t cls = cs.cell_edges[c][t];
            if (pa == pb) {
                size_t val = cd.cell_vertices[p.cell][pa];
                require(sm.e[cls] == -2 || (sm.e[cls] == -1 && sm.ecol[cls] == val),
                        ErrorKind::internal, "induced edge map disagrees between presentations");
                sm.e[cls] = -1;
                sm.ecol[cls] = val;
            } else {
                require(pa < pb, ErrorKind::internal, "projection broke the chain order");
                size_t pos = rd.chain_pos[1].at(std::vector<size_t>{pa, pb});
                long val = static_cast<long>(cd.cell_edges[p.cell][pos]);
                require(sm.e[cls] == -2 || sm.e[cls] == val, ErrorKind::internal,
                        "induced edge map disagrees between presentations");
                sm.e[cls] = val;
            }
        }
    }
    return sm;
}

// The full lift: skeleton with chart, induced action, quotient-graph
// combinatorics, spanning trees, and rewriting tables that express any based
// loop as a word in the presentation.
struct LiftData {
    Complex cx;
    GaloisActionDatum act;
    size_t base_cell = 0;
    size_t base_vertex = 0;
    SkeletonChart chart;
    std::vector<SkeletonPerm> perm;
    size_t nv = 0, ne = 0;

    std::vector<size_t> vorb, eorb;
    size_t nvo = 0, neo = 0;
    std::vector<size_t> vrep, erep;
    std::vector<char> etree;
    std::vector<size_t> egamma;
    std::vector<size_t> gv;
    std::vector<std::vector<size_t>> vstabs;
    std::vector<char> xtree;
    std::vector<size_t> parent_edge;
    std::vector<char> parent_fwd;
    std::vector<size_t> edelta;

    std::map<std::pair<size_t, size_t>, int> sgen;
    std::vector<int> tgen;
    ExtensionPresentation ext;

    // one traversal step of a based loop: an oriented skeleton edge, or a
    // jump by a group element at the current vertex
    struct Step {
        bool jump = false;
        size_t id = 0;
        bool fwd = true;
    };

    size_t vstar(size_t v, size_t g) const { return perm[act.group.inverse(g)].v[v]; }
    size_t estar(size_t e, size_t g) const { return perm[act.group.inverse(g)].e[e]; }

    LiftData(const Complex& complex, const GaloisActionDatum& action, size_t basepoint_cell)
        : cx(complex), act(action) {
        require(act.complex() == cx, ErrorKind::validation,
                "action does not act on the given complex");
        require(basepoint_cell < cx.cell_count(), ErrorKind::validation,
                "basepoint cell out of range");
        base_cell = basepoint_cell;
        chart = two_skeleton_chart(cx);
        const TwoSkeleton& sk = chart.skeleton;
        require(sk.triangles.empty(), ErrorKind::validation,
                "realization is not of graph homotopy type; lifting this extension is unsupported");
        require_connected(sk);
        nv = sk.vertex_count;
        ne = sk.edges.size();
        base_vertex = chart.cell_vertices[base_cell][0];

        const PermGroup& G = act.group;
        for (size_t g = 0; g < G.size(); ++g) perm.push_back(skeleton_perm(cx, chart, act.action[g]));

        vorb.assign(nv, kNoClass);
        for (size_t v = 0; v < nv; ++v) {
            if (vorb[v] != kNoClass) continue;
            for (size_t g = 0; g < G.size(); ++g) vorb[perm[g].v[v]] = nvo;
            ++nvo;
        }
        eorb.assign(ne, kNoClass);
        for (size_t e = 0; e < ne; ++e) {
            if (eorb[e] != kNoClass) continue;
            for (size_t g = 0; g < G.size(); ++g) eorb[perm[g].e[e]] = neo;
            ++neo;
        }

        // spanning tree of the quotient graph, representatives anchored at
        // the basepoint: a tree edge gets its representative with the known
        // endpoint at the known representative, and the other endpoint
        // becomes its orbit's representative
        vrep.assign(nvo, kNoClass);
        erep.assign(neo, kNoClass);
        etree.assign(neo, 0);
        egamma.assign(neo, G.identity());
        vrep[vorb[base_vertex]] = base_vertex;
        size_t placed = 0;
        while (placed < neo) {
            bool progress = false;
            for (size_t o = 0; o < neo; ++o) {
                if (erep[o] != kNoClass) continue;
                size_t sample = kNoClass;
                for (size_t e = 0; e < ne && sample == kNoClass; ++e)
                    if (eorb[e] == o) sample = e;
                size_t to = vorb[sk.edges[sample].tail], ho = vorb[sk.edges[sample].head];
                if (vrep[to] != kNoClass) {
                    for (size_t e = sample; e < ne; ++e)
                        if (eorb[e] == o && sk.edges[e].tail == vrep[to]) {
                            erep[o] = e;
                            break;
                        }
                    require(erep[o] != kNoClass, ErrorKind::internal,
                            "edge orbit missed its representative");
                    size_t h = sk.edges[erep[o]].head;
                    if (vrep[ho] == kNoClass) {
                        vrep[ho] = h;
                        etree[o] = 1;
                    } else {
                        size_t got = G.size();
                        for (size_t g = 0; g < G.size(); ++g)
                            if (vstar(vrep[ho], g) == h) {
                                got = g;
                                break;
                            }
                        require(got < G.size(), ErrorKind::internal, "orbit transitivity failed");
                        egamma[o] = got;
                    }
                    ++placed;
                    progress = true;
                } else if (vrep[ho] != kNoClass) {
                    for (size_t e = sample; e < ne; ++e)
                        if (eorb[e] == o && sk.edges[e].head == vrep[ho]) {
                            erep[o] = e;
                            break;
                        }
                    require(erep[o] != kNoClass, ErrorKind::internal,
                            "edge orbit missed its representative");
                    vrep[to] = sk.edges[erep[o]].tail;
                    etree[o] = 1;
                    ++placed;
                    progress = true;
                }
            }
            require(progress, ErrorKind::internal, "quotient graph construction stalled");
        }
        for (size_t o = 0; o < nvo; ++o)
            require(vrep[o] != kNoClass, ErrorKind::internal, "vertex orbit without representative");

        gv.assign(nv, 0);
        for (size_t v = 0; v < nv; ++v) {
            size_t r = vrep[vorb[v]], got = G.size();
            for (size_t g = 0; g < G.size(); ++g)
                if (vstar(r, g) == v) {
                    got = g;
                    break;
                }
            require(got < G.size(), ErrorKind::internal, "vertex missed by its orbit");
            gv[v] = got;
        }
        vstabs.assign(nvo, {});
        for (size_t o = 0; o < nvo; ++o)
            for (size_t g = 0; g < G.size(); ++g)
                if (vstar(vrep[o], g) == vrep[o]) vstabs[o].push_back(g);
        edelta.assign(ne, 0);
        for (size_t e = 0; e < ne; ++e) {
            size_t r = erep[eorb[e]], got = G.size();
            for (size_t g = 0; g < G.size(); ++g)
                if (estar(r, g) == e) {
                    got = g;
                    break;
                }
            require(got < G.size(), ErrorKind::internal, "edge missed by its orbit");
            edelta[e] = got;
        }

        // skeleton spanning tree extending the lifted quotient tree
        xtree.assign(ne, 0);
        {
            std::vector<size_t> comp(nv);
            std::iota(comp.begin(), comp.end(), 0);
            std::function<size_t(size_t)> root = [&](size_t x) {
                while (comp[x] != x) x = comp[x] = comp[comp[x]];
                return x;
            };
            auto add = [&](size_t e) {
                size_t a = root(sk.edges[e].tail), b = root(sk.edges[e].head);
                if (a == b) return false;
                comp[std::max(a, b)] = std::min(a, b);
                xtree[e] = 1;
                return true;
            };
            for (size_t o = 0; o < neo; ++o)
                if (etree[o])
                    require(add(erep[o]), ErrorKind::internal, "lifted tree has a cycle");
            for (size_t e = 0; e < ne; ++e)
                if (!xtree[e]) add(e);
        }
        parent_edge.assign(nv, kNoClass);
        parent_fwd.assign(nv, 1);
        {
            std::vector<std::vector<std::pair<size_t, char>>> adj(nv);
            for (size_t e = 0; e < ne; ++e)
                if (xtree[e]) {
                    adj[sk.edges[e].tail].push_back({e, 1});
                    adj[sk.edges[e].head].push_back({e, 0});
                }
            std::vector<char> seen(nv, 0);
            std::queue<size_t> bfs;
            seen[base_vertex] = 1;
            bfs.push(base_vertex);
            size_t visited = 1;
            while (!bfs.empty()) {
                size_t v = bfs.front();
                bfs.pop();
                for (auto [e, fwd] : adj[v]) {
                    size_t w = fwd ? sk.edges[e].head : sk.edges[e].tail;
                    if (seen[w]) continue;
                    seen[w] = 1;
                    parent_edge[w] = e;
                    parent_fwd[w] = fwd;
                    bfs.push(w);
                    ++visited;
                }
            }
            require(visited == nv, ErrorKind::internal, "spanning tree does not span");
        }

        ext.group = G;
        for (size_t o = 0; o < nvo; ++o)
            for (size_t g : vstabs[o]) {
                if (g == G.identity()) continue;
                sgen[{o, g}] = static_cast<int>(ext.pi.generators.size()) + 1;
                ext.pi.generators.push_back("s" + std::to_string(o) + "g" + std::to_string(g));
                ext.gen_info.push_back({true, o, g});
                ext.quotient.push_back(g);
            }
        tgen.assign(neo, 0);
        for (size_t o = 0; o < neo; ++o) {
            if (etree[o]) continue;
            tgen[o] = static_cast<int>(ext.pi.generators.size()) + 1;
            ext.pi.generators.push_back("t" + std::to_string(o));
            ext.gen_info.push_back({false, o, egamma[o]});
            ext.quotient.push_back(G.inverse(egamma[o]));
        }
        for (size_t o = 0; o < nvo; ++o)
            for (size_t g : vstabs[o]) {
                if (g == G.identity()) continue;
                for (size_t h : vstabs[o]) {
                    if (h == G.identity()) continue;
                    std::vector<int> w{sgen.at({o, g}), sgen.at({o, h})};
                    size_t gh = G.mul(g, h);
                    if (gh != G.identity()) w.push_back(-sgen.at({o, gh}));
                    ext.pi.relators.push_back(std::move(w));
                }
            }
        for (size_t o = 0; o < neo; ++o) {
            size_t e = erep[o];
            size_t uo = vorb[sk.edges[e].tail], wo = vorb[sk.edges[e].head];
            for (size_t g = 1; g < G.size(); ++g) {
                if (estar(e, g) != e) continue;
                if (etree[o]) {
                    ext.pi.relators.push_back({sgen.at({uo, g}), -sgen.at({wo, g})});
                } else {
                    size_t c = G.mul(G.mul(egamma[o], g), G.inverse(egamma[o]));
                    ext.pi.relators.push_back(
                        {sgen.at({uo, g}), tgen[o], -sgen.at({wo, c}), -tgen[o]});
                }
            }
        }

        for (size_t e = 0; e < ne; ++e) {
            if (xtree[e]) continue;
            std::vector<Step> loop = path_to(sk.edges[e].tail);
            loop.push_back({false, e, true});
            append_reversed(loop, path_to(sk.edges[e].head));
            std::vector<int> w = rewrite(loop);
            require(!w.empty(), ErrorKind::internal, "kernel generator rewrote to the identity");
            ext.kernel_generators.push_back(std::move(w));
        }

        ext.validate();
        GroupPresentation edgepath = pi1_presentation(sk, base_vertex);
        require(edgepath.is_free() && edgepath.free_rank() == ext.kernel_generators.size(),
                ErrorKind::internal, "kernel does not match the edge-path presentation");
        if (G.size() <= 24) {
            size_t idx = todd_coxeter_index(ext.pi, ext.kernel_generators, 4096);
            require(idx == G.size(), ErrorKind::internal,
                    "distinguished subgroup is not the full kernel");
        }
    }

    std::vector<Step> path_to(size_t v) const {
        std::vector<Step> rev;
        size_t cur = v;
        while (cur != base_vertex) {
            size_t e = parent_edge[cur];
            bool fwd = parent_fwd[cur];
            rev.push_back({false, e, fwd});
            cur = fwd ? chart.skeleton.edges[e].tail : chart.skeleton.edges[e].head;
        }
        std::reverse(rev.begin(), rev.end());
        return rev;
    }

    void append_reversed(std::vector<Step>& out, const std::vector<Step>& path) const {
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            Step s = *it;
            if (s.jump)
                s.id = act.group.inverse(s.id);
            else
                s.fwd = !s.fwd;
            out.push_back(s);
        }
    }

    // graph-of-groups word of one edge crossed forwards: conjugate the orbit
    // representative into place and read off stabilizer and edge letters
    std::vector<int> mu(size_t e) const {
        const PermGroup& G = act.group;
        size_t o = eorb[e];
        size_t u = chart.skeleton.edges[e].tail, w = chart.skeleton.edges[e].head;
        size_t d = edelta[e];
        size_t a = G.mul(d, G.inverse(gv[u]));
        size_t c = G.mul(G.mul(egamma[o], d), G.inverse(gv[w]));
        std::vector<int> word;
        if (a != G.identity()) word.push_back(sgen.at({vorb[u], G.inverse(a)}));
        if (tgen[o] != 0) word.push_back(tgen[o]);
        if (c != G.identity()) word.push_back(sgen.at({vorb[w], c}));
        return word;
    }

    // word of a jump at v: a single stabilizer letter at v's representative
    int eta_letter(size_t g, size_t v) const {
        const PermGroup& G = act.group;
        size_t b = G.mul(G.mul(gv[v], g), G.inverse(gv[vstar(v, g)]));
        if (b == G.identity()) return 0;
        return sgen.at({vorb[v], b});
    }

    std::vector<int> rewrite(const std::vector<Step>& loop) const {
        std::vector<int> raw;
        size_t cur = base_vertex;
        for (const Step& s : loop) {
            if (s.jump) {
                int l = eta_letter(s.id, cur);
                if (l) raw.push_back(l);
                cur = vstar(cur, s.id);
            } else {
                const auto& ed = chart.skeleton.edges[s.id];
                std::vector<int> w = mu(s.id);
                if (s.fwd) {
                    require(cur == ed.tail, ErrorKind::internal, "loop leaves its path");
                    raw.insert(raw.end(), w.begin(), w.end());
                    cur = ed.head;
                } else {
                    require(cur == ed.head, ErrorKind::internal, "loop leaves its path");
                    for (auto it = w.rbegin(); it != w.rend(); ++it) raw.push_back(-*it);
                    cur = ed.tail;
                }
            }
        }
        require(cur == base_vertex, ErrorKind::internal, "loop does not close");
        return ext.normalize(raw);
    }

    // based loop presenting one generator
    std::vector<Step> generator_loop(size_t gen) const {
        const ExtensionPresentation::GenInfo& info = ext.gen_info.at(gen);
        std::vector<Step> loop;
        if (info.stab) {
            size_t r = vrep[info.orbit];
            loop = path_to(r);
            loop.push_back({true, info.element, true});
            append_reversed(loop, path_to(r));
        } else {
            size_t e = erep[info.orbit];
            size_t w = vrep[vorb[chart.skeleton.edges[e].head]];
            loop = path_to(chart.skeleton.edges[e].tail);
            loop.push_back({false, e, true});
            loop.push_back({true, act.group.inverse(egamma[info.orbit]), true});
            append_reversed(loop, path_to(w));
        }
        return loop;
    }
};

inline void check_group_hom(const PermGroup& src, const PermGroup& dst,
                            const std::vector<size_t>& gmap, const std::string& where) {
    require(gmap.size() == src.size(), ErrorKind::validation,
            "group map has the wrong size " + where);
    for (size_t v : gmap)
        require(v < dst.size(), ErrorKind::validation, "group map image out of range " + where);
    for (size_t a = 0; a < src.size(); ++a)
        for (size_t b = 0; b < src.size(); ++b)
            require(gmap[src.mul(a, b)] == dst.mul(gmap[a], gmap[b]), ErrorKind::validation,
                    "group map is not a homomorphism " + where);
    std::set<size_t> image(gmap.begin(), gmap.end());
    require(image.size() == dst.size(), ErrorKind::validation,
            "group map is not surjective " + where);
}

inline void check_equivariance(const LiftData& fine, const LiftData& coarse, const SkeletonMap& sm,
                               const std::vector<size_t>& gmap, const std::string& where) {
    for (size_t g = 0; g < fine.act.group.size(); ++g) {
        const SkeletonPerm& pf = fine.perm[g];
        const SkeletonPerm& pc = coarse.perm[gmap[g]];
        for (size_t v = 0; v < fine.nv; ++v)
            require(sm.v[pf.v[v]] == pc.v[sm.v[v]], ErrorKind::validation,
                    "map is not equivariant " + where);
        for (size_t e = 0; e < fine.ne; ++e) {
            size_t ge = pf.e[e];
            if (sm.e[e] >= 0)
                require(sm.e[ge] == static_cast<long>(pc.e[static_cast<size_t>(sm.e[e])]),
                        ErrorKind::validation, "map is not equivariant " + where);
            else
                require(sm.e[ge] == -1 && sm.ecol[ge] == pc.v[sm.ecol[e]], ErrorKind::validation,
                        "map is not equivariant " + where);
        }
    }
}

// images of the fine generators downstairs: map each generator's loop
// through the skeleton map (collapsed edges vanish) and rewrite it
inline std::vector<std::vector<int>> induced_generator_words(const LiftData& fine,
                                                             const LiftData& coarse,
                                                             const SkeletonMap& sm,
                                                             const std::vector<size_t>& gmap) {
    std::vector<std::vector<int>> out;
    for (size_t gen = 0; gen < fine.ext.pi.generators.size(); ++gen) {
        std::vector<LiftData::Step> mapped;
        for (const LiftData::Step& s : fine.generator_loop(gen)) {
            if (s.jump)
                mapped.push_back({true, gmap[s.id], true});
            else if (sm.e[s.id] >= 0)
                mapped.push_back({false, static_cast<size_t>(sm.e[s.id]), s.fwd});
        }
        out.push_back(coarse.rewrite(mapped));
    }
    return out;
}

} // namespace detail

// Lifts the action to an extension of G by the fundamental group of the
// realization. The basepoint is the least corner of the given cell.
inline ExtensionPresentation lift_extension(const Complex& cx, const GaloisActionDatum& act,
                                            size_t basepoint_cell) {
    return detail::LiftData(cx, act, basepoint_cell).ext;
}

// Replaces each letter by its image word (inverted for negative letters)
// and freely reduces.
inline std::vector<int> substitute_word(const std::vector<int>& w,
                                        const std::vector<std::vector<int>>& images) {
    std::vector<int> out;
    auto push = [&](int a) {
        if (!out.empty() && out.back() == -a)
            out.pop_back();
        else
            out.push_back(a);
    };
    for (int a : w) {
        const auto& img = images.at(static_cast<size_t>(std::abs(a)) - 1);
        if (a > 0)
            for (int b : img) push(b);
        else
            for (auto it = img.rbegin(); it != img.rend(); ++it) push(-*it);
    }
    return out;
}

struct TowerLevelInput {
    Complex complex;
    GaloisActionDatum action;
    size_t basepoint_cell = 0;
};

struct TowerLevel {
    Complex complex;
    GaloisActionDatum action;
    size_t basepoint_cell = 0;
    ExtensionPresentation extension;
};

// connecting datum from a finer level down to the previous one
struct TowerConnectionInput {
    ComplexMorphism map;
    std::vector<size_t> group_map;
};

struct TowerConnection {
    ComplexMorphism map;
    std::vector<size_t> group_map;
    std::vector<std::vector<int>> induced;  // word downstairs per finer generator
};

struct TemperedTower {
    std::vector<TowerLevel> levels;
    std::vector<TowerConnection> connections;

    std::string report() const {
        std::string s;
        for (size_t i = 0; i < levels.size(); ++i) {
            const ExtensionPresentation& e = levels[i].extension;
            s += "level " + std::to_string(i) + ": |G|=" + std::to_string(e.group.size()) +
                 ", kernel rank " + std::to_string(e.kernel_rank()) + ", hash " +
                 presentation_hash(e.pi) + "\n";
        }
        return s;
    }
};

// Lifts every level and verifies each connecting datum: group surjection,
// equivariant pointed covering map, and the commuting square with the
// quotient maps, checked word by word on generators.
inline TemperedTower build_tower(const std::vector<TowerLevelInput>& levels,
                                 const std::vector<TowerConnectionInput>& connections) {
    require(!levels.empty(), ErrorKind::validation, "a tower needs at least one level");
    require(connections.size() + 1 == levels.size(), ErrorKind::validation,
            "a tower with n levels needs n-1 connections");
    TemperedTower tower;
    std::vector<detail::LiftData> lifts;
    for (const TowerLevelInput& in : levels) {
        lifts.emplace_back(in.complex, in.action, in.basepoint_cell);
        tower.levels.push_back({in.complex, in.action, in.basepoint_cell, lifts.back().ext});
    }
    for (size_t i = 0; i < connections.size(); ++i) {
        const detail::LiftData& fine = lifts[i + 1];
        const detail::LiftData& coarse = lifts[i];
        const TowerConnectionInput& in = connections[i];
        std::string where =
            "(level " + std::to_string(i + 1) + " -> level " + std::to_string(i) + ")";
        detail::check_group_hom(fine.act.group, coarse.act.group, in.group_map, where);
        require(in.map.source() == fine.cx && in.map.target() == coarse.cx, ErrorKind::validation,
                "connecting map endpoints mismatch " + where);
        detail::SkeletonMap sm =
            detail::skeleton_map(fine.cx, fine.chart, coarse.cx, coarse.chart, in.map);
        require(sm.v[fine.base_vertex] == coarse.base_vertex, ErrorKind::validation,
                "connecting map moves the basepoint " + where);
        detail::check_equivariance(fine, coarse, sm, in.group_map, where);
        std::vector<std::vector<int>> words =
            detail::induced_generator_words(fine, coarse, sm, in.group_map);
        for (size_t gen = 0; gen < words.size(); ++gen)
            require(coarse.ext.quotient_of(words[gen]) == in.group_map[fine.ext.quotient[gen]],
                    ErrorKind::validation, "connecting square does not commute " + where);
        tower.connections.push_back({in.map, in.group_map, std::move(words)});
    }
    return tower;
}

// Levelwise homomorphisms between two towers with matching Galois groups,
// induced by the given cospecialization morphisms of complexes.
struct TowerCospecialization {
    std::vector<std::vector<std::vector<int>>> maps;  // per level, per generator
    std::vector<char> level_iso;

    bool all_iso() const {
        for (char c : level_iso)
            if (!c) return false;
        return true;
    }
};

inline TowerCospecialization cospecialize_tower(const TemperedTower& from, const TemperedTower& to,
                                                const std::vector<ComplexMorphism>& per_level) {
    require(from.levels.size() == to.levels.size(), ErrorKind::validation,
            "towers have different heights");
    require(per_level.size() == from.levels.size(), ErrorKind::validation,
            "one cospecialization morphism per level required");
    TowerCospecialization out;
    for (size_t i = 0; i < from.levels.size(); ++i) {
        std::string where = "at level " + std::to_string(i);
        const TowerLevel& a = from.levels[i];
        const TowerLevel& b = to.levels[i];
        require(a.action.group == b.action.group, ErrorKind::validation,
                "Galois groups differ " + where);
        require(per_level[i].source() == a.complex && per_level[i].target() == b.complex,
                ErrorKind::validation, "cospecialization endpoints mismatch " + where);
        detail::LiftData la(a.complex, a.action, a.basepoint_cell);
        detail::LiftData lb(b.complex, b.action, b.basepoint_cell);
        detail::SkeletonMap sm =
            detail::skeleton_map(la.cx, la.chart, lb.cx, lb.chart, per_level[i]);
        require(sm.v[la.base_vertex] == lb.base_vertex, ErrorKind::validation,
                "cospecialization moves the basepoint " + where);
        std::vector<size_t> idmap(a.action.group.size());
        std::iota(idmap.begin(), idmap.end(), 0);
        detail::check_equivariance(la, lb, sm, idmap, where);
        std::vector<std::vector<int>> words = detail::induced_generator_words(la, lb, sm, idmap);
        for (size_t gen = 0; gen < words.size(); ++gen)
            require(lb.ext.quotient_of(words[gen]) == la.ext.quotient[gen], ErrorKind::validation,
                    "cospecialization square does not commute " + where);
        char iso = 0;
        if (morphism_is_iso(per_level[i]) && b.complex.is_interiorly_free()) {
            bool ok = words.size() == lb.ext.pi.generators.size();
            std::vector<char> hit(lb.ext.pi.generators.size() + 1, 0);
            for (const auto& w : words) {
                if (w.size() != 1 || w[0] <= 0 || hit[w[0]]) {
                    ok = false;
                    break;
                }
                hit[w[0]] = 1;
            }
            require(ok, ErrorKind::undecided,
                    "could not certify the levelwise isomorphism " + where);
            iso = 1;
        }
        out.maps.push_back(std::move(words));
        out.level_iso.push_back(iso);
    }
    return out;
}

} // namespace polystrata
