#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "polystrata/monoid.hpp"

using namespace polystrata;
using lin::Mat;
using lin::Vec;

namespace {

AffineMonoid numeric(std::vector<long long> gens) {
    Mat m;
    for (long long g : gens) m.push_back({g});
    return AffineMonoid(1, m);
}

const AffineMonoid kN = numeric({1});
const AffineMonoid kTwoThree = numeric({2, 3});
const AffineMonoid kZ = numeric({1, -1});
const AffineMonoid kN2 = AffineMonoid(2, {{1, 0}, {0, 1}});
const AffineMonoid kN3 = AffineMonoid(3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
const AffineMonoid kSlanted = AffineMonoid(2, {{1, 0}, {1, 2}});
const AffineMonoid kCyl = AffineMonoid(2, {{1, 0}, {-1, 0}, {0, 1}});
// fine monoid whose unit lattice is NOT saturated in its envelope:
// units 2Z on the vertical axis, but the envelope is all of Z^2
const AffineMonoid kHalf = AffineMonoid(2, {{0, 2}, {0, -2}, {1, 0}, {1, 1}});

} // namespace

TEST_CASE("group envelope in canonical form") {
    CHECK(kTwoThree.group_envelope().basis == Mat{{1}});
    CHECK(AffineMonoid(1, {}).group_envelope().rank() == 0);
    CHECK(kSlanted.group_envelope().basis == Mat{{1, 0}, {0, 2}});
    CHECK(kHalf.group_envelope().basis == lin::mat_identity(2));
}

TEST_CASE("membership agrees with the naive coefficient search") {
    struct Case {
        const AffineMonoid& m;
        long long lo, hi;
    };
    const Case cases[] = {
        {kN, -3, 6}, {kTwoThree, -2, 9}, {kZ, -5, 5}, {kN2, -3, 4},
        {kSlanted, -3, 5}, {kCyl, -4, 4}, {kHalf, -4, 4},
    };
    for (const auto& cs : cases) {
        size_t d = cs.m.ambient_dim();
        std::vector<Vec> box;
        if (d == 1) {
            for (long long x = cs.lo; x <= cs.hi; ++x) box.push_back({x});
        } else {
            for (long long x = cs.lo; x <= cs.hi; ++x)
                for (long long y = cs.lo; y <= cs.hi; ++y) box.push_back({x, y});
        }
        for (const auto& v : box) {
            bool fast = cs.m.contains(v);
            bool slow = oracle::member(cs.m.generators(), v, 12);
            INFO(cs.m.to_string() << " at " << lin::vec_to_string(v));
            CHECK(fast == slow);
        }
    }
}

TEST_CASE("units and sharpening") {
    CHECK(kN2.units().rank() == 0);
    CHECK(kN2.is_sharp());
    CHECK(kN2.sharpen().equals(kN2));

    CHECK(kZ.units().rank() == 1);
    CHECK(kZ.sharpen().ambient_dim() == 0);
    CHECK(kZ.sharpen().generators().empty());

    CHECK(kCyl.units().basis == Mat{{1, 0}});
    AffineMonoid sh = kCyl.sharpen();
    CHECK(sh.ambient_dim() == 1);
    CHECK(sh.is_sharp());
    CHECK(sh.generators().size() == 1);
    CHECK(std::abs(sh.generators()[0][0]) == 1); // a copy of N inside Z
}

TEST_CASE("sharpening rejects torsion quotients") {
    CHECK(kHalf.units().basis == Mat{{0, 2}});
    try {
        kHalf.sharpen();
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }
}

TEST_CASE("saturation matches hand values and is idempotent") {
    CHECK_FALSE(kTwoThree.is_saturated());
    CHECK(kTwoThree.saturate().same_submonoid(kN));
    CHECK(kN.is_saturated());
    CHECK(kN2.is_saturated());
    CHECK(kSlanted.is_saturated());
    CHECK(kZ.is_saturated());
    CHECK(kCyl.is_saturated());

    // the vertical axis saturates from 2Z to Z
    CHECK_FALSE(kHalf.is_saturated());
    AffineMonoid hs = kHalf.saturate();
    CHECK(hs.contains({0, 1}));
    CHECK(hs.contains({0, -1}));
    CHECK_FALSE(kHalf.contains({0, 1}));

    for (const AffineMonoid* m : {&kN, &kTwoThree, &kN2, &kSlanted, &kCyl, &kHalf, &kZ}) {
        AffineMonoid s = m->saturate();
        CHECK(s.is_saturated());
        CHECK(s.saturate().equals(s));
        CHECK(s.saturate().same_submonoid(s));
    }
}

TEST_CASE("structural equality is equality of saturations") {
    CHECK(kTwoThree.equals(kN)); // same saturation by design
    CHECK_FALSE(kTwoThree.same_submonoid(kN));
    CHECK_FALSE(kN2.equals(kSlanted));
    CHECK(kN2.same_submonoid(AffineMonoid(2, {{1, 0}, {0, 1}, {1, 1}})));
}

TEST_CASE("face enumeration matches the coordinate-subset picture") {
    CHECK(kN.faces().size() == 2);
    CHECK(kN2.faces().size() == 4);
    CHECK(kN3.faces().size() == 8);
    CHECK(kZ.faces().size() == 1);

    // every reported face passes the naive divisor-closure definition
    for (const Face& f : kN2.faces()) {
        CHECK(oracle::is_face(kN2.generators(), f.generator_subset(), 2, 3, 8));
    }
    // a non-face subset is rejected: {(1,1)} inside N^2 + diagonal
    AffineMonoid withDiag(2, {{1, 0}, {0, 1}, {1, 1}});
    CHECK_THROWS_AS(withDiag.face({2}), Error);
    // each extreme ray of the slanted monoid is a face on its own
    CHECK(kSlanted.face({1}).size() == 1);
    CHECK(kSlanted.face({1, 0}).size() == 2); // the whole monoid is a face
}

TEST_CASE("face poset has canonical bottom and top and product structure") {
    FacePoset fp = kN2.face_poset();
    CHECK(fp.order.size() == 4);
    CHECK(fp.faces.front().size() == 0);                       // units face of a sharp monoid
    CHECK(fp.faces.back().size() == kN2.generators().size());  // the monoid itself

    Poset chain2(std::vector<std::vector<bool>>{{true, true}, {false, true}});
    CHECK(fp.order.isomorphic_to(chain2.product(chain2)));
    CHECK(kN3.face_poset().order.isomorphic_to(chain2.product(chain2).product(chain2)));
}

TEST_CASE("face posets are invariant under saturation") {
    for (const AffineMonoid* m : {&kTwoThree, &kSlanted, &kHalf}) {
        CHECK(m->face_poset().order.isomorphic_to(m->saturate().face_poset().order));
    }
}

TEST_CASE("localization at faces") {
    Face e1 = kN2.smallest_face_containing({{1, 0}});
    CHECK(e1.size() == 1);
    CHECK(kN2.localize(e1).same_submonoid(kCyl));

    // localizing at the whole monoid gives the envelope as a monoid
    AffineMonoid all = kN2.localize(kN2.full_face());
    CHECK(all.same_submonoid(AffineMonoid(2, {{1, 0}, {-1, 0}, {0, 1}, {0, -1}})));

    // localizing at the units face changes nothing
    CHECK(kN2.localize(kN2.units_face()).same_submonoid(kN2));
    CHECK(kCyl.localize(kCyl.units_face()).same_submonoid(kCyl));
}

TEST_CASE("smallest_face_containing picks the support face") {
    CHECK(kN2.smallest_face_containing({{1, 1}}).size() == 2);
    CHECK(kN2.smallest_face_containing({{0, 0}}).size() == 0);
    CHECK(kN2.smallest_face_containing({{1, 0}, {0, 1}}).size() == 2);
    CHECK_THROWS_AS(kSlanted.smallest_face_containing({{0, 1}}), Error); // outside envelope
}

TEST_CASE("divisibility and divisor enumeration") {
    CHECK(kN2.divides({1, 0}, {2, 3}));
    CHECK_FALSE(kN2.divides({1, 0}, {0, 3}));
    CHECK(kN2.divisors_of({1, 1}).size() == 4);
    CHECK(kN.divisors_of({4}).size() == 5);
    CHECK(kTwoThree.divisors_of({7}).size() == 6); // 0, 2, 3, 4, 5, 7
    CHECK_THROWS_AS(kZ.divisors_of({0}), Error);   // not sharp
}

TEST_CASE("sharp degree is the canonical positive grading") {
    CHECK(kN2.sharp_degree({2, 3}) == 5);
    CHECK(kN2.sharp_degree({0, 0}) == 0);
    CHECK(kCyl.sharp_degree({7, 0}) == 0);  // units have degree zero
    CHECK(kCyl.sharp_degree({-3, 2}) > 0);
}

TEST_CASE("envelope re-presentation") {
    AffineMonoid doubled(2, {{2, 0}});
    AffineMonoid pres = doubled.env_presentation();
    CHECK(pres.ambient_dim() == 1);
    CHECK(pres.same_submonoid(kN));
    CHECK(doubled.ambient_from_env({3}) == Vec{6, 0});
}

TEST_CASE("bounded element enumeration") {
    CHECK(kN2.elements_up_to(2).size() == 6);
    CHECK(kN.elements_up_to(0) == std::vector<Vec>{{0}});
    CHECK(kZ.elements_up_to(3).size() == 7); // -3..3
}
