#pragma once

#include <functional>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "polystrata/lambda.hpp"
#include "polystrata/poset.hpp"

namespace polystrata {

// A polysimplex of ambient type [b], in normal form: the nondegenerate cell
// `cell` pulled back along the standard surjection deleting the blocks of b
// outside `kept`. The pair (kept, cell) is unique for each polysimplex, so
// equality of PolyRefs is equality of polysimplices.
struct PolyRef {
    LambdaObject ambient;
    std::vector<int> kept;
    size_t cell = 0;

    bool is_cell() const { return static_cast<int>(kept.size()) == ambient.weight(); }
    bool operator==(const PolyRef& o) const = default;

    std::string to_string() const {
        std::string s = "cell " + std::to_string(cell) + " via " + ambient.to_string() + "{";
        for (size_t i = 0; i < kept.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(kept[i]);
        }
        return s + "}";
    }
};

// Aut-orbit decomposition of the nondegenerate cells plus the order
// "below = reachable along an injection".
struct CellPoset {
    Poset order;                              // on orbits
    std::vector<size_t> class_of;             // per cell
    std::vector<std::vector<size_t>> members; // per orbit, sorted
    std::vector<std::string> labels;          // representative cell names
};

// Finite complex stored by its nondegenerate cells and, for every
// non-identity injection into a cell's type, the normal form of the
// restriction. This determines the whole functor: a general morphism acts
// through its epi-mono factorization.
class Complex {
  public:
    struct CellData {
        LambdaObject type;
        std::string name;
    };

    Complex() = default;

    Complex(std::vector<CellData> cells,
            std::vector<std::map<std::string, PolyRef>> attachment)
        : cells_(std::move(cells)), att_(std::move(attachment)) {
        require(att_.size() == cells_.size(), ErrorKind::validation,
                "attachment table count mismatch");
        validate();
    }

    static Complex point() { return representable(LambdaObject::point()); }

    // Cells of the representable complex are the injections into n, indexed
    // exactly as injections_into(n); the identity injection is the top cell.
    static Complex representable(const LambdaObject& n) {
        n.validate();
        std::vector<LambdaMorphism> inj = injections_into(n);
        std::map<std::string, size_t> index;
        for (size_t i = 0; i < inj.size(); ++i) index[inj[i].key()] = i;
        std::vector<CellData> cells;
        for (size_t i = 0; i < inj.size(); ++i)
            cells.push_back({inj[i].source, "c" + std::to_string(i)});
        std::vector<std::map<std::string, PolyRef>> att(inj.size());
        for (size_t i = 0; i < inj.size(); ++i)
            for (const auto& io : injections_into(inj[i].source)) {
                if (io.is_identity()) continue;
                LambdaMorphism comp = compose(inj[i], io);
                auto it = index.find(comp.key());
                require(it != index.end(), ErrorKind::internal, "injection composite missing");
                att[i][io.key()] = full_poly(io.source, it->second);
            }
        return Complex(std::move(cells), std::move(att));
    }

    size_t cell_count() const { return cells_.size(); }
    const CellData& cell(size_t i) const { return cells_.at(i); }
    const LambdaObject& cell_type(size_t i) const { return cells_.at(i).type; }

    static PolyRef full_poly(const LambdaObject& type, size_t cell) {
        PolyRef p{type, {}, cell};
        for (int k = 0; k < type.weight(); ++k) p.kept.push_back(k);
        return p;
    }

    // Normal form of the pullback of a cell along an arbitrary morphism.
    PolyRef act(size_t cell, const LambdaMorphism& m) const {
        require(cell < cells_.size(), ErrorKind::validation, "cell index out of range");
        require(m.target == cells_[cell].type, ErrorKind::validation,
                "morphism target does not match cell type");
        auto [epi, mono] = factor_epi_mono(m);
        PolyRef inner;
        if (mono.is_identity()) {
            inner = full_poly(cells_[cell].type, cell);
        } else {
            auto it = att_[cell].find(mono.key());
            require(it != att_[cell].end(), ErrorKind::internal, "missing attachment entry");
            inner = it->second;
        }
        std::vector<int> support = m.block_support();
        PolyRef out;
        out.ambient = m.source;
        out.cell = inner.cell;
        for (int i : inner.kept) out.kept.push_back(support[i]);
        return out;
    }

    // Same, for a polysimplex in place of a cell.
    PolyRef act_poly(const PolyRef& p, const LambdaMorphism& m) const {
        require(m.target == p.ambient, ErrorKind::validation,
                "morphism target does not match polysimplex type");
        return act(p.cell, compose(standard_surjection(p.ambient, p.kept), m));
    }

    std::pair<LambdaMorphism, size_t> ez_normal_form(size_t cell, const LambdaMorphism& m) const {
        PolyRef p = act(cell, m);
        return {standard_surjection(p.ambient, p.kept), p.cell};
    }

    // All polysimplices of ambient type t, in deterministic order.
    std::vector<PolyRef> polys_of_type(const LambdaObject& t) const {
        std::vector<PolyRef> out;
        int w = t.weight();
        for (int mask = 0; mask < (1 << w); ++mask) {
            std::vector<int> kept;
            for (int k = 0; k < w; ++k)
                if (mask & (1 << k)) kept.push_back(k);
            LambdaObject rt = t.restrict_to(kept);
            for (size_t c = 0; c < cells_.size(); ++c)
                if (cells_[c].type == rt) out.push_back({t, kept, c});
        }
        return out;
    }

    std::vector<size_t> class_of_cells() const {
        std::vector<size_t> parent(cells_.size());
        for (size_t i = 0; i < parent.size(); ++i) parent[i] = i;
        auto find = [&](size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        // orbits under precomposition with any Lambda isomorphism, so cells
        // whose types differ by a block permutation land in one class
        for (size_t i = 0; i < cells_.size(); ++i)
            for (const auto& u : injections_into(cells_[i].type)) {
                if (!u.is_iso() || u.is_identity()) continue;
                PolyRef p = act(i, u);
                require(p.is_cell(), ErrorKind::internal, "iso action degenerated a cell");
                size_t a = find(i), b = find(p.cell);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        // compact class ids in order of first appearance
        std::vector<size_t> id(cells_.size(), SIZE_MAX), out(cells_.size());
        size_t next = 0;
        for (size_t i = 0; i < cells_.size(); ++i) {
            size_t r = find(i);
            if (id[r] == SIZE_MAX) id[r] = next++;
            out[i] = id[r];
        }
        return out;
    }

    CellPoset cell_poset() const {
        CellPoset cp;
        cp.class_of = class_of_cells();
        size_t nc = 0;
        for (size_t c : cp.class_of) nc = std::max(nc, c + 1);
        cp.members.resize(nc);
        for (size_t i = 0; i < cells_.size(); ++i) cp.members[cp.class_of[i]].push_back(i);
        for (const auto& mem : cp.members) cp.labels.push_back(cells_[mem.front()].name);
        std::vector<std::vector<bool>> leq(nc, std::vector<bool>(nc, false));
        for (size_t i = 0; i < cells_.size(); ++i)
            for (const auto& io : injections_into(cells_[i].type)) {
                PolyRef p = act(i, io);
                if (p.is_cell()) leq[cp.class_of[p.cell]][cp.class_of[i]] = true;
            }
        cp.order = Poset(std::move(leq));
        return cp;
    }

    bool is_interiorly_free() const {
        for (size_t i = 0; i < cells_.size(); ++i)
            for (const auto& u : automorphisms(cells_[i].type)) {
                if (u.is_identity()) continue;
                if (act(i, u).cell == i) return false;
            }
        return true;
    }

    // Signed count of cell orbits by dimension.
    long long euler_characteristic() const {
        std::vector<size_t> cls = class_of_cells();
        size_t nc = 0;
        for (size_t c : cls) nc = std::max(nc, c + 1);
        std::vector<bool> seen(nc, false);
        long long chi = 0;
        for (size_t i = 0; i < cells_.size(); ++i) {
            if (seen[cls[i]]) continue;
            seen[cls[i]] = true;
            chi += cells_[i].type.dimension() % 2 == 0 ? 1 : -1;
        }
        return chi;
    }

    const std::map<std::string, PolyRef>& attachments(size_t cell) const { return att_.at(cell); }

    bool operator==(const Complex& o) const {
        if (cells_.size() != o.cells_.size()) return false;
        for (size_t i = 0; i < cells_.size(); ++i)
            if (cells_[i].type != o.cells_[i].type) return false;
        return att_ == o.att_;
    }

    std::string to_string() const {
        std::string s = "cells " + std::to_string(cells_.size()) + "\n";
        for (size_t i = 0; i < cells_.size(); ++i)
            s += "  " + std::to_string(i) + " " + cells_[i].name + " " +
                 cells_[i].type.to_string() + "\n";
        s += "attachment\n";
        for (size_t i = 0; i < cells_.size(); ++i)
            for (const auto& [k, v] : att_[i])
                s += "  " + std::to_string(i) + " . " + k + " = " + v.to_string() + "\n";
        return s;
    }

  private:
    std::vector<CellData> cells_;
    std::vector<std::map<std::string, PolyRef>> att_;

    // Closure and coherence: every non-identity injection has exactly one
    // entry, entries are well-formed, and restricting in two steps agrees
    // with restricting along the composite.
    void validate() const {
        for (size_t i = 0; i < cells_.size(); ++i) {
            cells_[i].type.validate();
            size_t expected = 0;
            for (const auto& io : injections_into(cells_[i].type)) {
                if (io.is_identity()) continue;
                ++expected;
                auto it = att_[i].find(io.key());
                require(it != att_[i].end(), ErrorKind::validation,
                        "attachment entry missing for " + io.key());
                const PolyRef& p = it->second;
                require(p.ambient == io.source, ErrorKind::validation,
                        "attachment ambient type mismatch");
                require(p.cell < cells_.size(), ErrorKind::validation,
                        "attachment cell out of range");
                require(cells_[p.cell].type == p.ambient.restrict_to(p.kept),
                        ErrorKind::validation, "attachment cell type mismatch");
            }
            require(att_[i].size() == expected, ErrorKind::validation,
                    "attachment table has unexpected entries");
        }
        for (size_t i = 0; i < cells_.size(); ++i)
            for (const auto& io : injections_into(cells_[i].type)) {
                if (io.is_identity()) continue;
                PolyRef mid = act(i, io);
                for (const auto& io2 : injections_into(io.source)) {
                    if (io2.is_identity()) continue;
                    PolyRef stepped = act_poly(mid, io2);
                    PolyRef direct = act(i, compose(io, io2));
                    require(stepped == direct, ErrorKind::validation,
                            "attachment data is not closed under composition");
                }
            }
    }
};

// Morphism of complexes: each nondegenerate cell is sent to a polysimplex of
// the same ambient type, compatibly with all restrictions.
class ComplexMorphism {
  public:
    ComplexMorphism(Complex source, Complex target, std::vector<PolyRef> images)
        : source_(std::move(source)), target_(std::move(target)), images_(std::move(images)) {
        require(images_.size() == source_.cell_count(), ErrorKind::validation,
                "image count mismatch");
        std::string why;
        require(natural(source_, target_, images_, &why), ErrorKind::validation,
                "morphism is not natural: " + why);
    }

    static ComplexMorphism identity(const Complex& c) {
        std::vector<PolyRef> images;
        for (size_t i = 0; i < c.cell_count(); ++i)
            images.push_back(Complex::full_poly(c.cell_type(i), i));
        return ComplexMorphism(c, c, std::move(images));
    }

    const Complex& source() const { return source_; }
    const Complex& target() const { return target_; }
    const PolyRef& image(size_t cell) const { return images_.at(cell); }

    PolyRef apply(const PolyRef& p) const {
        return target_.act_poly(images_.at(p.cell), standard_surjection(p.ambient, p.kept));
    }

    bool maps_cells_to_cells() const {
        for (const auto& p : images_)
            if (!p.is_cell()) return false;
        return true;
    }

    std::vector<size_t> cell_image() const {
        std::vector<size_t> out;
        for (const auto& p : images_) out.push_back(p.cell);
        return out;
    }

    // Naturality without throwing, reusable by the enumerator.
    static bool natural(const Complex& a, const Complex& b, const std::vector<PolyRef>& images,
                        std::string* why = nullptr) {
        for (size_t i = 0; i < a.cell_count(); ++i) {
            if (images[i].ambient != a.cell_type(i)) {
                if (why) *why = "image type mismatch at cell " + std::to_string(i);
                return false;
            }
            for (const auto& io : injections_into(a.cell_type(i))) {
                if (io.is_identity()) continue;
                PolyRef restricted = a.act(i, io);
                PolyRef lhs = b.act_poly(images[restricted.cell],
                                         standard_surjection(restricted.ambient, restricted.kept));
                PolyRef rhs = b.act_poly(images[i], io);
                if (!(lhs == rhs)) {
                    if (why)
                        *why = "cell " + std::to_string(i) + " under " + io.key() + ": " +
                               lhs.to_string() + " vs " + rhs.to_string();
                    return false;
                }
            }
        }
        return true;
    }

  private:
    Complex source_;
    Complex target_;
    std::vector<PolyRef> images_;
};

inline ComplexMorphism compose(const ComplexMorphism& g, const ComplexMorphism& f) {
    require(f.target() == g.source(), ErrorKind::validation, "complex morphism type mismatch");
    std::vector<PolyRef> images;
    for (size_t i = 0; i < f.source().cell_count(); ++i) images.push_back(g.apply(f.image(i)));
    return ComplexMorphism(f.source(), g.target(), std::move(images));
}

// The induced covariant map of a type morphism between representables:
// an injection cell of the source composes to a polysimplex of the target.
inline ComplexMorphism representable_map(const LambdaMorphism& u) {
    Complex a = Complex::representable(u.source);
    Complex b = Complex::representable(u.target);
    std::vector<LambdaMorphism> src_inj = injections_into(u.source);
    std::vector<LambdaMorphism> tgt_inj = injections_into(u.target);
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < tgt_inj.size(); ++i) index[tgt_inj[i].key()] = i;
    std::vector<PolyRef> images;
    for (const auto& gamma : src_inj) {
        auto [epi, mono] = factor_epi_mono(compose(u, gamma));
        auto it = index.find(mono.key());
        require(it != index.end(), ErrorKind::internal, "missing target injection");
        images.push_back({gamma.source, epi.block_support(), it->second});
    }
    return ComplexMorphism(std::move(a), std::move(b), std::move(images));
}

inline bool morphism_is_iso(const ComplexMorphism& m) {
    // Sufficient criterion: nondegenerate cells map to nondegenerate cells,
    // the induced orbit poset map is an isomorphism, and the target is
    // interiorly free.
    if (m.maps_cells_to_cells()) {
        CellPoset pa = m.source().cell_poset();
        CellPoset pb = m.target().cell_poset();
        std::vector<size_t> img = m.cell_image();
        std::vector<size_t> cm(pa.order.size());
        for (size_t i = 0; i < img.size(); ++i) cm[pa.class_of[i]] = pb.class_of[img[i]];
        if (pa.order.is_order_isomorphism(cm, pb.order) && m.target().is_interiorly_free())
            return true;
    }
    // Fallback: a natural map is an isomorphism exactly when it is a
    // bijection of nondegenerate cells (and never when a cell degenerates).
    if (!m.maps_cells_to_cells()) return false;
    std::vector<size_t> img = m.cell_image();
    if (m.source().cell_count() != m.target().cell_count()) return false;
    std::vector<bool> hit(m.target().cell_count(), false);
    for (size_t v : img) {
        if (hit[v]) return false;
        hit[v] = true;
    }
    return true;
}

inline Complex disjoint_union(const Complex& a, const Complex& b) {
    std::vector<Complex::CellData> cells;
    std::vector<std::map<std::string, PolyRef>> att;
    for (size_t i = 0; i < a.cell_count(); ++i) {
        cells.push_back({a.cell_type(i), "0:" + a.cell(i).name});
        att.push_back(a.attachments(i));
    }
    size_t shift = a.cell_count();
    for (size_t i = 0; i < b.cell_count(); ++i) {
        cells.push_back({b.cell_type(i), "1:" + b.cell(i).name});
        auto table = b.attachments(i);
        for (auto& [k, v] : table) v.cell += shift;
        att.push_back(std::move(table));
    }
    return Complex(std::move(cells), std::move(att));
}

namespace detail {

// Split an injection into an interleaved pair type along the shuffle:
// source blocks going to left positions form one injection, the rest the
// other; constants are routed by the side of their target block.
struct SplitInjection {
    std::vector<int> left_blocks;  // source blocks, in order
    std::vector<int> right_blocks;
    LambdaMorphism left;
    LambdaMorphism right;
};

inline SplitInjection split_injection(const LambdaMorphism& io, const std::vector<int>& shuffle,
                                      const LambdaObject& left_type,
                                      const LambdaObject& right_type) {
    SplitInjection sp;
    // position of each interleaved block within its side
    std::vector<int> side_pos(shuffle.size());
    int lc = 0, rc = 0;
    for (size_t t = 0; t < shuffle.size(); ++t) side_pos[t] = shuffle[t] == 0 ? lc++ : rc++;
    for (int k = 0; k < io.source.weight(); ++k)
        (shuffle[io.f[k]] == 0 ? sp.left_blocks : sp.right_blocks).push_back(k);
    auto build = [&](const std::vector<int>& blocks, const LambdaObject& tgt, int side) {
        LambdaMorphism m;
        m.source = io.source.restrict_to(blocks);
        m.target = tgt;
        m.f.assign(blocks.size(), -1);
        for (size_t i = 0; i < blocks.size(); ++i) m.f[i] = side_pos[io.f[blocks[i]]];
        m.alpha.resize(tgt.weight());
        for (size_t t = 0; t < shuffle.size(); ++t)
            if (shuffle[t] == side) m.alpha[side_pos[t]] = io.alpha[t];
        return m;
    };
    sp.left = build(sp.left_blocks, left_type, 0);
    sp.right = build(sp.right_blocks, right_type, 1);
    return sp;
}

} // namespace detail

// Product complex: nondegenerate cells are pairs of nondegenerate cells
// together with an interleaving of their blocks; the realization is the
// product of the realizations.
inline Complex box_product(const Complex& a, const Complex& b) {
    struct PCell {
        size_t left, right;
        std::vector<int> shuffle; // per interleaved block: 0 = left, 1 = right
    };
    std::vector<PCell> pcells;
    std::map<std::string, size_t> index;
    auto pkey = [](size_t l, size_t r, const std::vector<int>& sh) {
        std::string s = std::to_string(l) + "*" + std::to_string(r) + "@";
        for (int v : sh) s += static_cast<char>('0' + v);
        return s;
    };
    for (size_t i = 0; i < a.cell_count(); ++i)
        for (size_t j = 0; j < b.cell_count(); ++j) {
            int wl = a.cell_type(i).weight(), wr = b.cell_type(j).weight();
            // all interleavings: bitmasks with wr ones among wl + wr slots
            std::vector<int> sh(wl + wr, 0);
            for (int t = wl; t < wl + wr; ++t) sh[t] = 1;
            std::sort(sh.begin(), sh.end());
            std::vector<std::vector<int>> shuffles;
            do shuffles.push_back(sh);
            while (std::next_permutation(sh.begin(), sh.end()));
            for (auto& s : shuffles) {
                index[pkey(i, j, s)] = pcells.size();
                pcells.push_back({i, j, s});
            }
        }
    auto ptype = [&](const PCell& pc) {
        LambdaObject t;
        int lc = 0, rc = 0;
        for (int v : pc.shuffle)
            t.blocks.push_back(v == 0 ? a.cell_type(pc.left).blocks[lc++]
                                      : b.cell_type(pc.right).blocks[rc++]);
        return t;
    };
    std::vector<Complex::CellData> cells;
    for (const auto& pc : pcells) {
        std::string nm = a.cell(pc.left).name + "*" + b.cell(pc.right).name;
        if (!pc.shuffle.empty()) {
            nm += "@";
            for (int v : pc.shuffle) nm += static_cast<char>('0' + v);
        }
        cells.push_back({ptype(pc), nm});
    }
    std::vector<std::map<std::string, PolyRef>> att(pcells.size());
    for (size_t c = 0; c < pcells.size(); ++c) {
        const PCell& pc = pcells[c];
        LambdaObject t = cells[c].type;
        for (const auto& io : injections_into(t)) {
            if (io.is_identity()) continue;
            detail::SplitInjection sp = detail::split_injection(
                io, pc.shuffle, a.cell_type(pc.left), b.cell_type(pc.right));
            PolyRef pl = a.act(pc.left, sp.left);
            PolyRef pr = b.act(pc.right, sp.right);
            // surviving source blocks, then the induced interleaving
            std::vector<int> kept;
            for (int i : pl.kept) kept.push_back(sp.left_blocks[i]);
            for (int i : pr.kept) kept.push_back(sp.right_blocks[i]);
            std::sort(kept.begin(), kept.end());
            std::vector<int> sh2;
            std::vector<bool> from_left(io.source.weight(), false);
            for (int i : pl.kept) from_left[sp.left_blocks[i]] = true;
            for (int k : kept) sh2.push_back(from_left[k] ? 0 : 1);
            auto it = index.find(pkey(pl.cell, pr.cell, sh2));
            require(it != index.end(), ErrorKind::internal, "product cell missing");
            att[c][io.key()] = PolyRef{io.source, kept, it->second};
        }
    }
    return Complex(std::move(cells), std::move(att));
}

struct CoequalizerResult {
    Complex complex;
    ComplexMorphism projection;
};

// Quotient of the shared target by the congruence identifying the two
// images of every cell of the shared source, closed under all restrictions.
inline CoequalizerResult coequalizer(const ComplexMorphism& a, const ComplexMorphism& b) {
    require(a.source() == b.source() && a.target() == b.target(), ErrorKind::validation,
            "coequalizer needs a parallel pair");
    const Complex& c = a.target();

    // universe of ambient types: every type reachable from the cell types
    std::vector<LambdaObject> types;
    auto add_type = [&](const LambdaObject& t) {
        if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
    };
    for (size_t i = 0; i < c.cell_count(); ++i) add_type(c.cell_type(i));
    for (size_t i = 0; i < a.source().cell_count(); ++i) add_type(a.source().cell_type(i));
    for (size_t i = 0; i < types.size(); ++i)
        for (const auto& io : injections_into(types[i])) add_type(io.source);
    std::sort(types.begin(), types.end());

    std::vector<PolyRef> universe;
    std::map<std::string, size_t> uindex;
    auto ukey = [](const PolyRef& p) { return p.ambient.to_string() + "|" + p.to_string(); };
    for (const auto& t : types)
        for (const auto& p : c.polys_of_type(t)) {
            uindex[ukey(p)] = universe.size();
            universe.push_back(p);
        }

    std::vector<size_t> parent(universe.size());
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::queue<std::pair<size_t, size_t>> work;
    auto merge = [&](size_t x, size_t y) {
        size_t rx = find(x), ry = find(y);
        if (rx == ry) return;
        parent[std::max(rx, ry)] = std::min(rx, ry);
        work.push({x, y});
    };

    for (size_t i = 0; i < a.source().cell_count(); ++i)
        merge(uindex.at(ukey(a.image(i))), uindex.at(ukey(b.image(i))));

    // morphism cache between universe types
    std::map<std::pair<std::string, std::string>, std::vector<LambdaMorphism>> mcache;
    auto morphs = [&](const LambdaObject& s, const LambdaObject& t)
        -> const std::vector<LambdaMorphism>& {
        auto key = std::make_pair(s.to_string(), t.to_string());
        auto it = mcache.find(key);
        if (it == mcache.end()) it = mcache.emplace(key, all_morphisms(s, t)).first;
        return it->second;
    };
    while (!work.empty()) {
        auto [x, y] = work.front();
        work.pop();
        const PolyRef& p = universe[x];
        const PolyRef& q = universe[y];
        for (const auto& t : types)
            for (const auto& m : morphs(t, p.ambient))
                merge(uindex.at(ukey(c.act_poly(p, m))), uindex.at(ukey(c.act_poly(q, m))));
    }

    // classify: a class is a cell of the quotient iff no member is degenerate
    std::vector<std::vector<size_t>> members;
    std::vector<size_t> class_of(universe.size());
    {
        std::map<size_t, size_t> root_id;
        for (size_t i = 0; i < universe.size(); ++i) {
            size_t r = find(i);
            auto it = root_id.find(r);
            if (it == root_id.end()) {
                it = root_id.emplace(r, members.size()).first;
                members.push_back({});
            }
            class_of[i] = it->second;
            members[it->second].push_back(i);
        }
    }
    std::vector<bool> nondeg(members.size(), true);
    std::vector<size_t> degenerate_member(members.size(), SIZE_MAX);
    for (size_t k = 0; k < members.size(); ++k)
        for (size_t i : members[k])
            if (!universe[i].is_cell()) {
                nondeg[k] = false;
                if (degenerate_member[k] == SIZE_MAX) degenerate_member[k] = i;
            }

    std::vector<size_t> new_cell(members.size(), SIZE_MAX);
    std::vector<Complex::CellData> qcells;
    for (size_t k = 0; k < members.size(); ++k)
        if (nondeg[k]) {
            new_cell[k] = qcells.size();
            size_t rep = members[k].front();
            qcells.push_back({universe[rep].ambient, c.cell(universe[rep].cell).name});
        }

    // normal form in the quotient: follow degenerate members downward
    auto quotient_poly = [&](PolyRef p) {
        while (true) {
            size_t cls = class_of[uindex.at(ukey(Complex::full_poly(c.cell_type(p.cell), p.cell)))];
            if (nondeg[cls]) return PolyRef{p.ambient, p.kept, new_cell[cls]};
            const PolyRef& down = universe[degenerate_member[cls]];
            std::vector<int> kept;
            for (int i : down.kept) kept.push_back(p.kept[i]);
            p = PolyRef{p.ambient, kept, down.cell};
        }
    };

    std::vector<std::map<std::string, PolyRef>> qatt(qcells.size());
    for (size_t k = 0; k < members.size(); ++k) {
        if (!nondeg[k]) continue;
        size_t rep_cell = universe[members[k].front()].cell;
        for (const auto& io : injections_into(qcells[new_cell[k]].type)) {
            if (io.is_identity()) continue;
            qatt[new_cell[k]][io.key()] = quotient_poly(c.act(rep_cell, io));
        }
    }
    Complex q(std::move(qcells), std::move(qatt));

    std::vector<PolyRef> proj;
    for (size_t i = 0; i < c.cell_count(); ++i)
        proj.push_back(quotient_poly(Complex::full_poly(c.cell_type(i), i)));
    ComplexMorphism projection(c, q, std::move(proj));
    return {std::move(q), std::move(projection)};
}

// Exhaustive enumeration of morphisms a -> b; exponential, intended for
// small instances (universal property checks and the like).
inline std::vector<ComplexMorphism> all_complex_morphisms(const Complex& a, const Complex& b) {
    std::vector<std::vector<PolyRef>> candidates;
    for (size_t i = 0; i < a.cell_count(); ++i)
        candidates.push_back(b.polys_of_type(a.cell_type(i)));
    std::vector<ComplexMorphism> out;
    std::vector<PolyRef> images(a.cell_count());
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == a.cell_count()) {
            if (ComplexMorphism::natural(a, b, images)) out.emplace_back(a, b, images);
            return;
        }
        for (const auto& p : candidates[i]) {
            images[i] = p;
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

} // namespace polystrata
