#pragma once

#include <utility>
#include <vector>

#include "polystrata/complex.hpp"
#include "polystrata/strata.hpp"

namespace polystrata {

// Chart of a polystable family over a base monoid P. Block i adjoins
// coordinates T_i0..T_i,n_i subject to T_i0 + .. + T_i,n_i = a_i, so the
// fiber over a base point degenerates exactly where a_i vanishes.
class PolystableChart {
  public:
    struct Block {
        int length = 1; // n_i: free coordinates left after eliminating the relation
        Vec a;          // a_i, an element of the base
    };

    PolystableChart(AffineMonoid base, std::vector<Block> blocks)
        : base_(std::move(base)), blocks_(std::move(blocks)) {
        for (const auto& b : blocks_) {
            require(b.length >= 1, ErrorKind::validation, "block length must be positive");
            require(b.a.size() == base_.ambient_dim(), ErrorKind::validation,
                    "block element has the wrong dimension");
            require(base_.contains(b.a), ErrorKind::validation,
                    "block element does not lie in the base monoid");
        }
    }

    const AffineMonoid& base() const { return base_; }
    const std::vector<Block>& blocks() const { return blocks_; }

  private:
    AffineMonoid base_;
    std::vector<Block> blocks_;
};

// Total monoid of a chart. The last coordinate of each block is eliminated
// through its relation, T_i,n_i = a_i - sum of the others, so the result
// lives in the torsion-free lattice envelope(P) + one Z per kept coordinate.
inline AffineMonoid standard_monoid(const PolystableChart& c) {
    size_t dp = c.base().ambient_dim();
    size_t extra = 0;
    for (const auto& b : c.blocks()) extra += static_cast<size_t>(b.length);
    size_t dim = dp + extra;
    auto padded = [&](const Vec& v) {
        Vec w(dim, 0);
        for (size_t k = 0; k < dp; ++k) w[k] = v[k];
        return w;
    };
    Mat gens;
    for (const auto& g : c.base().generators()) gens.push_back(padded(g));
    size_t off = dp;
    for (const auto& b : c.blocks()) {
        for (int j = 0; j < b.length; ++j) {
            Vec t(dim, 0);
            t[off + static_cast<size_t>(j)] = 1;
            gens.push_back(std::move(t));
        }
        Vec last = padded(b.a);
        for (int j = 0; j < b.length; ++j) last[off + static_cast<size_t>(j)] -= 1;
        gens.push_back(std::move(last));
        off += static_cast<size_t>(b.length);
    }
    AffineMonoid q(dim, gens);
    require(q.group_envelope().rank() == c.base().group_envelope().rank() + extra,
            ErrorKind::internal, "block elimination changed the envelope rank");
    return q;
}

// The base embeds into the total monoid on the leading coordinates.
inline MonoidMap standard_structure(const PolystableChart& c) {
    AffineMonoid q = standard_monoid(c);
    size_t dp = c.base().ambient_dim();
    Mat rows;
    for (size_t r = 0; r < q.ambient_dim(); ++r) {
        Vec row(dp, 0);
        if (r < dp) row[r] = 1;
        rows.push_back(std::move(row));
    }
    return MonoidMap(c.base(), q, rows);
}

// Cell shape of the fiber over a base point, given as the face of units
// there: a block survives exactly when its element a_i vanishes, i.e. lies
// outside the face.
inline LambdaObject fiber_cell_type(const PolystableChart& c, const Face& base_face) {
    require(detail::same_chart(base_face.parent(), c.base()), ErrorKind::validation,
            "face does not belong to the chart's base");
    LambdaObject n;
    for (const auto& b : c.blocks())
        if (!c.base().smallest_face_containing({b.a}).subset_of(base_face))
            n.blocks.push_back(b.length);
    return n;
}

// Identity covering for pieces without monodromy data.
inline MonoidMap trivial_covering(const AffineMonoid& q) {
    Mat rows;
    for (size_t r = 0; r < q.ambient_dim(); ++r) {
        Vec row(q.ambient_dim(), 0);
        row[r] = 1;
        rows.push_back(std::move(row));
    }
    return MonoidMap(q, q, rows);
}

// Kummer-etale piece: a chain of charts, one per fibration level, plus a
// Kummer covering of the top total monoid. A nonempty prime set restricts
// which covering degrees are allowed.
class KetPieceDatum {
  public:
    KetPieceDatum(std::vector<PolystableChart> charts, MonoidMap covering,
                  std::vector<I64> primes = {})
        : charts_(std::move(charts)), covering_(std::move(covering)),
          primes_(std::move(primes)) {
        require(!charts_.empty(), ErrorKind::validation, "piece needs at least one chart");
        require(detail::same_chart(covering_.source(), standard_monoid(charts_.back())),
                ErrorKind::validation, "covering must start at the piece's total monoid");
        for (I64 p : primes_) {
            bool prime = p >= 2;
            for (I64 d = 2; prime && d * d <= p; ++d)
                if (p % d == 0) prime = false;
            require(prime, ErrorKind::validation, "prime set entries must be prime");
        }
        Verdict kummer = detail::decide_kummer(covering_);
        require(kummer.holds(), ErrorKind::validation,
                "covering is not Kummer: " + kummer.witness);
        Verdict lk = detail::decide_l_kummer(covering_, kummer, primes_, 64);
        require(lk.holds(), ErrorKind::validation,
                "covering does not respect the declared primes: " + lk.witness);
    }

    KetPieceDatum(PolystableChart chart, MonoidMap covering, std::vector<I64> primes = {})
        : KetPieceDatum(std::vector<PolystableChart>{std::move(chart)}, std::move(covering),
                        std::move(primes)) {}

    const std::vector<PolystableChart>& charts() const { return charts_; }
    const MonoidMap& covering() const { return covering_; }
    const std::vector<I64>& primes() const { return primes_; }

  private:
    std::vector<PolystableChart> charts_;
    MonoidMap covering_;
    std::vector<I64> primes_;
};

// Polysimplicial set of one piece over a base point. A single chart gives
// the representable complex on its fiber shape; chains box the levels
// together, deeper levels taken over the closed point of their own base.
// Each stratum contributes one component: multiplicity is descent's job.
inline Complex c_of_piece(const KetPieceDatum& p, const Face& base_face) {
    Complex out = Complex::representable(fiber_cell_type(p.charts().front(), base_face));
    for (size_t k = 1; k < p.charts().size(); ++k) {
        const PolystableChart& c = p.charts()[k];
        out = box_product(out, Complex::representable(fiber_cell_type(c, c.base().units_face())));
    }
    return out;
}

inline Complex c_of_piece(const KetPieceDatum& p) {
    return c_of_piece(p, p.charts().front().base().units_face());
}

// Gluing instructions: pieces plus overlap pieces, each overlap projecting
// into two (possibly equal) pieces by cell-level assignments. All complexes
// are taken over the closed point of their own base.
struct DescentOverlap {
    size_t first = 0;
    size_t second = 0;
    KetPieceDatum piece;
    std::vector<PolyRef> to_first;  // per overlap cell, a poly of piece `first`
    std::vector<PolyRef> to_second; // per overlap cell, a poly of piece `second`
};

class DescentDatum {
  public:
    DescentDatum(std::vector<KetPieceDatum> pieces, std::vector<DescentOverlap> overlaps)
        : pieces_(std::move(pieces)), overlaps_(std::move(overlaps)) {
        require(!pieces_.empty(), ErrorKind::validation, "descent needs at least one piece");
        for (const auto& p : pieces_) piece_complexes_.push_back(c_of_piece(p));
        for (const auto& o : overlaps_) {
            require(o.first < pieces_.size() && o.second < pieces_.size(), ErrorKind::validation,
                    "overlap references a missing piece");
            Complex oc = c_of_piece(o.piece);
            // morphism construction validates the cell-level assignments
            first_.emplace_back(oc, piece_complexes_[o.first], o.to_first);
            second_.emplace_back(std::move(oc), piece_complexes_[o.second], o.to_second);
        }
    }

    const std::vector<KetPieceDatum>& pieces() const { return pieces_; }
    const std::vector<DescentOverlap>& overlaps() const { return overlaps_; }
    const Complex& piece_complex(size_t i) const { return piece_complexes_.at(i); }
    const ComplexMorphism& projection_first(size_t k) const { return first_.at(k); }
    const ComplexMorphism& projection_second(size_t k) const { return second_.at(k); }

  private:
    std::vector<KetPieceDatum> pieces_;
    std::vector<DescentOverlap> overlaps_;
    std::vector<Complex> piece_complexes_;
    std::vector<ComplexMorphism> first_, second_;
};

// Glued polysimplicial set: coequalize the two projections from the union
// of the overlaps into the union of the pieces.
inline CoequalizerResult c_global(const DescentDatum& d) {
    Complex pieces;
    std::vector<size_t> offset;
    for (size_t i = 0; i < d.pieces().size(); ++i) {
        offset.push_back(pieces.cell_count());
        pieces = i == 0 ? d.piece_complex(0) : disjoint_union(pieces, d.piece_complex(i));
    }
    Complex overlaps;
    std::vector<PolyRef> ia, ib;
    for (size_t k = 0; k < d.overlaps().size(); ++k) {
        const auto& o = d.overlaps()[k];
        const Complex& oc = d.projection_first(k).source();
        overlaps = k == 0 ? oc : disjoint_union(overlaps, oc);
        for (size_t c = 0; c < oc.cell_count(); ++c) {
            PolyRef pa = d.projection_first(k).image(c);
            pa.cell += offset[o.first];
            ia.push_back(std::move(pa));
            PolyRef pb = d.projection_second(k).image(c);
            pb.cell += offset[o.second];
            ib.push_back(std::move(pb));
        }
    }
    ComplexMorphism a(overlaps, pieces, std::move(ia));
    ComplexMorphism b(std::move(overlaps), std::move(pieces), std::move(ib));
    return coequalizer(a, b);
}

// Cospecialization of fibers inside one family chart: the unique complex
// morphism over the strata cospecialization. Blocks still degenerate at the
// more generic point survive, the others collapse through the canonical
// degeneracy.
struct FiberCospecialization {
    Cospecialization strata;
    ComplexMorphism map; // C(fiber over special face) -> C(fiber over generic face)
};

inline FiberCospecialization cospecialize_c(const PolystableChart& c, const Face& special_base,
                                            const Face& generic_base) {
    Cospecialization strata =
        cospecialize_strata(standard_structure(c), special_base, generic_base);
    LambdaObject source_type = fiber_cell_type(c, special_base);
    std::vector<int> kept;
    int pos = 0;
    for (const auto& b : c.blocks()) {
        Face carrier = c.base().smallest_face_containing({b.a});
        bool alive_special = !carrier.subset_of(special_base);
        bool alive_generic = !carrier.subset_of(generic_base);
        require(alive_special || !alive_generic, ErrorKind::internal,
                "block alive generically but dead at the special point");
        if (!alive_special) continue;
        if (alive_generic) kept.push_back(pos);
        ++pos;
    }
    return {std::move(strata), representable_map(standard_surjection(source_type, kept))};
}

} // namespace polystrata
