#pragma once

#include <string>
#include <vector>

#include "polystrata/monoid_map.hpp"
#include "polystrata/poset.hpp"

namespace polystrata {

namespace detail {

// Face indices are positions in a generator list, so any operation that
// matches faces across two monoids needs literally the same chart, not just
// the same submonoid.
inline bool same_chart(const AffineMonoid& a, const AffineMonoid& b) {
    return a.ambient_dim() == b.ambient_dim() && a.generators() == b.generators();
}

} // namespace detail

// Chart of a log point: a sharp fs monoid.
struct LogPointChart {
    AffineMonoid monoid;

    explicit LogPointChart(AffineMonoid m) : monoid(std::move(m)) {
        require(monoid.is_sharp(), ErrorKind::validation, "log point monoid must be sharp");
        require(monoid.is_saturated(), ErrorKind::validation,
                "log point monoid must be saturated");
    }
};

// Chart of a fiber over a log point: a structure map from the point's monoid
// into the total monoid of the chart.
struct FiberChartDatum {
    LogPointChart base;
    AffineMonoid total;
    MonoidMap structure;

    FiberChartDatum(LogPointChart b, AffineMonoid t, MonoidMap s)
        : base(std::move(b)), total(std::move(t)), structure(std::move(s)) {
        require(detail::same_chart(structure.source(), base.monoid), ErrorKind::validation,
                "structure map source is not the base chart");
        require(detail::same_chart(structure.target(), total), ErrorKind::validation,
                "structure map target is not the total chart");
        require(total.is_saturated(), ErrorKind::validation, "total monoid must be saturated");
    }
};

// Strata of a chart-described fiber: the faces of the total monoid whose
// structure preimage is exactly the prescribed base face. Deeper strata sit
// higher, which on faces is reverse inclusion; the rank label is the log
// rank at a point of the stratum.
struct StrataPoset {
    std::vector<Face> strata;
    Poset order; // strata[i] <= strata[j]  iff  strata[j] ⊆ strata[i]
    std::vector<int> rank;

    size_t index_of(const Face& f) const {
        for (size_t i = 0; i < strata.size(); ++i)
            if (strata[i] == f) return i;
        fail_validation("face is not a stratum");
    }

    std::string to_string() const {
        std::string s = "strata " + std::to_string(strata.size()) + "\n";
        for (size_t i = 0; i < strata.size(); ++i)
            s += "  " + std::to_string(i) + " " + strata[i].to_string() + " rank " +
                 std::to_string(rank[i]) + "\n";
        for (const auto& [lo, hi] : order.covers())
            s += "  " + std::to_string(lo) + " < " + std::to_string(hi) + "\n";
        return s;
    }
};

// Fiber over the generic point of the base stratum cut out by base_face.
inline StrataPoset strata_over(const MonoidMap& structure, const Face& base_face) {
    require(detail::same_chart(base_face.parent(), structure.source()), ErrorKind::validation,
            "base face does not belong to the structure map source");
    StrataPoset sp;
    size_t total_rank = structure.target().group_envelope().rank();
    for (const auto& g : structure.target().faces()) {
        Face pre = restrict_to_face_preimage(structure, g).source_face;
        if (pre.generator_indices() != base_face.generator_indices()) continue;
        sp.rank.push_back(static_cast<int>(total_rank - g.monoid().group_envelope().rank()));
        sp.strata.push_back(g);
    }
    size_t n = sp.strata.size();
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) leq[i][j] = sp.strata[j].subset_of(sp.strata[i]);
    sp.order = Poset(std::move(leq));
    return sp;
}

// Fiber over the log point itself: preimage must be the unit face {0}.
inline StrataPoset strata_of(const FiberChartDatum& d) {
    return strata_over(d.structure, d.structure.source().units_face());
}

// Order isomorphism between the strata of two fiber charts over the same log
// point, induced by transporting faces along a Kummer map of total monoids.
struct StrataTransport {
    StrataPoset source;
    StrataPoset target;
    std::vector<size_t> map;
};

inline StrataTransport kummer_strata_transport(const FiberChartDatum& d, const FiberChartDatum& e,
                                               const MonoidMap& h) {
    require(detail::same_chart(h.source(), d.total), ErrorKind::validation,
            "transport map source is not the first total chart");
    require(detail::same_chart(h.target(), e.total), ErrorKind::validation,
            "transport map target is not the second total chart");
    require(detail::same_chart(d.base.monoid, e.base.monoid), ErrorKind::validation,
            "fiber charts live over different log points");
    MonoidMap lifted = compose(h, d.structure);
    for (const auto& g : d.base.monoid.generators())
        require(lifted.apply(g) == e.structure.apply(g), ErrorKind::validation,
                "total-space map does not commute with the structure maps");

    StrataTransport t{strata_of(d), strata_of(e), {}};
    for (const auto& f : t.source.strata) t.map.push_back(t.target.index_of(kummer_face_transport(h, f)));
    require(t.source.order.is_order_isomorphism(t.map, t.target.order), ErrorKind::validation,
            "face transport does not restrict to a strata isomorphism");
    return t;
}

// Cospecialization inside one family chart: each stratum of the fiber over
// the more special base point goes to the deepest stratum of the less
// special fiber whose closure contains it. Candidate faces are closed under
// intersection, so when any candidate exists the deepest one is unique; a
// missing candidate means the couple is not good and is a hard error.
struct Cospecialization {
    StrataPoset special; // fiber over the smaller base face
    StrataPoset generic; // fiber over the larger base face
    std::vector<size_t> map;

    std::string to_string() const {
        std::string s = "cospecialization " + std::to_string(special.strata.size()) + " -> " +
                        std::to_string(generic.strata.size()) + "\n";
        for (size_t i = 0; i < map.size(); ++i)
            s += "  " + special.strata[i].to_string() + " -> " +
                 generic.strata[map[i]].to_string() + "\n";
        return s;
    }
};

inline Cospecialization cospecialize_strata(const MonoidMap& family, const Face& special_base,
                                            const Face& generic_base) {
    require(special_base.subset_of(generic_base), ErrorKind::validation,
            "cospecialization runs from the smaller base face to the larger");
    Cospecialization co{strata_over(family, special_base), strata_over(family, generic_base), {}};
    for (const auto& f : co.special.strata) {
        size_t best = SIZE_MAX;
        for (size_t j = 0; j < co.generic.strata.size(); ++j) {
            if (!f.subset_of(co.generic.strata[j])) continue;
            if (best == SIZE_MAX || co.generic.strata[j].subset_of(co.generic.strata[best]))
                best = j;
        }
        require(best != SIZE_MAX, ErrorKind::validation,
                "stratum has no cospecialization target: couple is not good");
        for (size_t j = 0; j < co.generic.strata.size(); ++j)
            require(!f.subset_of(co.generic.strata[j]) ||
                        co.generic.strata[best].subset_of(co.generic.strata[j]),
                    ErrorKind::validation,
                    "cospecialization target is not unique: couple is not good");
        co.map.push_back(best);
    }
    require(co.special.order.is_monotone_map(co.map, co.generic.order), ErrorKind::internal,
            "cospecialization is not monotone");
    std::vector<size_t> generic_min = co.generic.order.minimal_elements();
    for (size_t i : co.special.order.minimal_elements())
        require(std::find(generic_min.begin(), generic_min.end(), co.map[i]) != generic_min.end(),
                ErrorKind::internal, "cospecialization does not preserve minimal strata");
    return co;
}

} // namespace polystrata
