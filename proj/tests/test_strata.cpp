#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "polystrata/strata.hpp"

using namespace polystrata;
using lin::Mat;
using lin::Vec;

namespace {

const AffineMonoid kN = AffineMonoid(1, {{1}});
const AffineMonoid kN2 = AffineMonoid(2, {{1, 0}, {0, 1}});
const AffineMonoid kN4 =
    AffineMonoid(4, {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
// two 1-block polystable factors glued over a common base parameter:
// generators T10, T11, T20, T21 with T10 + T11 = T20 + T21
const AffineMonoid kTwoBlock = AffineMonoid(3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, -1}});

FiberChartDatum node_datum(long long scale = 1) {
    return FiberChartDatum(LogPointChart(kN), kN2, MonoidMap(kN, kN2, {{scale}, {scale}}));
}

Poset poset_from_covers(size_t n, const std::vector<std::pair<size_t, size_t>>& rel) {
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i) leq[i][i] = true;
    for (const auto& [a, b] : rel) leq[a][b] = true;
    for (size_t k = 0; k < n; ++k)
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                if (leq[i][k] && leq[k][j]) leq[i][j] = true;
    return Poset(std::move(leq));
}

// two incomparable branches under one node
const Poset kNodePoset = poset_from_covers(3, {{0, 2}, {1, 2}});

std::vector<int> sorted_ranks(const StrataPoset& sp) {
    std::vector<int> r = sp.rank;
    std::sort(r.begin(), r.end());
    return r;
}

} // namespace

TEST_CASE("chart validation") {
    CHECK_THROWS_AS(LogPointChart(AffineMonoid(1, {{1}, {-1}})), Error); // not sharp
    CHECK_THROWS_AS(LogPointChart(AffineMonoid(1, {{2}, {3}})), Error);  // not saturated
    CHECK_THROWS_AS(
        FiberChartDatum(LogPointChart(kN), AffineMonoid(1, {{2}, {3}}),
                        MonoidMap(kN, AffineMonoid(1, {{2}, {3}}), {{2}})),
        Error); // total not saturated
    CHECK_THROWS_AS(FiberChartDatum(LogPointChart(kN), kN2, MonoidMap::identity(kN2)),
                    Error); // structure source is not the base chart
}

TEST_CASE("node fiber has two branches under a node") {
    StrataPoset sp = strata_of(node_datum());
    REQUIRE(sp.strata.size() == 3);
    CHECK(sorted_ranks(sp) == std::vector<int>{1, 1, 2});
    CHECK(sp.order.isomorphic_to(kNodePoset));
    // the deepest stratum is the unique top and carries the full log rank
    auto max = sp.order.maximal_elements();
    REQUIRE(max.size() == 1);
    CHECK(sp.rank[max.front()] == 2);
    CHECK(sp.strata[max.front()].size() == 0);
    auto min = sp.order.minimal_elements();
    REQUIRE(min.size() == 2);
    for (size_t i : min) CHECK(sp.rank[i] == 1);
    CHECK(sp.to_string().find("strata 3") != std::string::npos);
    CHECK_THROWS_AS(sp.index_of(kN2.full_face()), Error);
}

TEST_CASE("smooth fibers have one stratum") {
    StrataPoset a = strata_of(FiberChartDatum(LogPointChart(kN), kN, MonoidMap::identity(kN)));
    REQUIRE(a.strata.size() == 1);
    CHECK(a.rank == std::vector<int>{1});
    StrataPoset b =
        strata_of(FiberChartDatum(LogPointChart(kN2), kN2, MonoidMap::identity(kN2)));
    REQUIRE(b.strata.size() == 1);
    CHECK(b.rank == std::vector<int>{2});
}

TEST_CASE("two-block fiber is a product of node posets") {
    FiberChartDatum d(LogPointChart(kN), kTwoBlock, MonoidMap(kN, kTwoBlock, {{1}, {1}, {0}}));
    StrataPoset sp = strata_of(d);
    REQUIRE(sp.strata.size() == 9);
    CHECK(sp.order.isomorphic_to(kNodePoset.product(kNodePoset)));
    CHECK(sorted_ranks(sp) == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3});
}

TEST_CASE("kummer transport on the node fiber") {
    FiberChartDatum d = node_datum();
    StrataTransport id = kummer_strata_transport(d, d, MonoidMap::identity(kN2));
    CHECK(id.map == std::vector<size_t>{0, 1, 2});

    // index-2 extension of the same chart
    FiberChartDatum e = node_datum(2);
    StrataTransport t = kummer_strata_transport(d, e, MonoidMap(kN2, kN2, {{2, 0}, {0, 2}}));
    REQUIRE(t.map.size() == 3);
    for (size_t i = 0; i < t.map.size(); ++i) CHECK(t.source.rank[i] == t.target.rank[t.map[i]]);

    // structure maps must commute with the transport map
    CHECK_THROWS_AS(kummer_strata_transport(d, d, MonoidMap(kN2, kN2, {{2, 0}, {0, 2}})), Error);
    // non-Kummer total map is rejected even when it commutes
    FiberChartDatum collapsed(LogPointChart(kN), kN2, MonoidMap(kN, kN2, {{1}, {0}}));
    CHECK_THROWS_AS(kummer_strata_transport(d, collapsed, MonoidMap(kN2, kN2, {{1, 0}, {0, 0}})),
                    Error);
}

TEST_CASE("kummer transport on the two-block fiber") {
    FiberChartDatum d(LogPointChart(kN), kTwoBlock, MonoidMap(kN, kTwoBlock, {{1}, {1}, {0}}));
    FiberChartDatum e(LogPointChart(kN), kTwoBlock, MonoidMap(kN, kTwoBlock, {{3}, {3}, {0}}));
    MonoidMap h(kTwoBlock, kTwoBlock, {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}});
    StrataTransport t = kummer_strata_transport(d, e, h);
    REQUIRE(t.map.size() == 9);
    REQUIRE(t.target.strata.size() == 9);
    for (size_t i = 0; i < t.map.size(); ++i) CHECK(t.source.rank[i] == t.target.rank[t.map[i]]);
}

TEST_CASE("degenerating node family cospecializes onto the smooth fiber") {
    MonoidMap family(kN, kN2, {{1}, {1}});
    Cospecialization co = cospecialize_strata(family, kN.units_face(), kN.full_face());
    REQUIRE(co.special.strata.size() == 3);
    REQUIRE(co.generic.strata.size() == 1);
    CHECK(co.map == std::vector<size_t>{0, 0, 0});
    CHECK(co.generic.rank == std::vector<int>{0});
    CHECK(co.to_string().find("3 -> 1") != std::string::npos);

    Cospecialization same = cospecialize_strata(family, kN.units_face(), kN.units_face());
    CHECK(same.map == std::vector<size_t>{0, 1, 2});

    CHECK_THROWS_AS(cospecialize_strata(family, kN.full_face(), kN.units_face()), Error);
}

TEST_CASE("cospecialization composes along a two-parameter base") {
    // two independent one-parameter nodes over N^2
    MonoidMap family(kN2, kN4, {{1, 0}, {1, 0}, {0, 1}, {0, 1}});
    Face f0 = kN2.units_face();
    Face f1 = kN2.face({0});
    Face f2 = kN2.full_face();
    Cospecialization c01 = cospecialize_strata(family, f0, f1);
    Cospecialization c12 = cospecialize_strata(family, f1, f2);
    Cospecialization c02 = cospecialize_strata(family, f0, f2);
    REQUIRE(c01.special.strata.size() == 9);
    REQUIRE(c01.generic.strata.size() == 3);
    REQUIRE(c12.generic.strata.size() == 1);
    for (size_t i = 0; i < c01.map.size(); ++i) CHECK(c02.map[i] == c12.map[c01.map[i]]);
    // the first step separates strata by their surviving node
    CHECK(std::set<size_t>(c01.map.begin(), c01.map.end()).size() == 3);
    // minimal (least special) strata stay minimal
    auto gmin = c01.generic.order.minimal_elements();
    for (size_t i : c01.special.order.minimal_elements())
        CHECK(std::find(gmin.begin(), gmin.end(), c01.map[i]) != gmin.end());
}

TEST_CASE("families without a good target are rejected") {
    // both base parameters collapse onto one total direction: no total face
    // has preimage exactly the first axis
    MonoidMap family(kN2, kN, {{1, 1}});
    CHECK_THROWS_AS(cospecialize_strata(family, kN2.units_face(), kN2.face({0})), Error);
}
