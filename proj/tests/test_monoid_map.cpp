#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "polystrata/monoid_map.hpp"

using namespace polystrata;
using lin::Mat;
using lin::Vec;

namespace {

const AffineMonoid kN = AffineMonoid(1, {{1}});
const AffineMonoid kTwoThree = AffineMonoid(1, {{2}, {3}});
const AffineMonoid kZ = AffineMonoid(1, {{1}, {-1}});
const AffineMonoid kN2 = AffineMonoid(2, {{1, 0}, {0, 1}});
const AffineMonoid kN3 = AffineMonoid(3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
// index-2 extension of N^2: even lattice points of the quadrant plus the
// diagonal generator; the integral model of half-integer pairs with integer sum
const AffineMonoid kNode = AffineMonoid(2, {{2, 0}, {0, 2}, {1, 1}});

MonoidMap times(I64 n) { return MonoidMap(kN, kN, {{n}}); }

const MonoidMap kTimes2 = times(2);
const MonoidMap kTimes3 = times(3);
const MonoidMap kDiag = MonoidMap(kN, kN2, {{1}, {1}});
const MonoidMap kIncl = MonoidMap(kN, kZ, {{1}});
const MonoidMap kProj = MonoidMap(kN2, kN, {{1, 0}});
const MonoidMap kNodeIncl = MonoidMap(kN2, kNode, {{2, 0}, {0, 2}});

// oracle adapters
oracle::Mat og(const AffineMonoid& m) { return m.generators(); }

} // namespace

TEST_CASE("map construction validates shapes and generator images") {
    CHECK_THROWS_AS(MonoidMap(kN, kN2, {{1}}), Error);          // row count
    CHECK_THROWS_AS(MonoidMap(kN, kN, {{1, 0}}), Error);        // column count
    CHECK_THROWS_AS(MonoidMap(kN, kN2, {{1}, {-1}}), Error);    // image escapes target
    CHECK(MonoidMap::identity(kN2).apply({3, 4}) == Vec{3, 4});
    CHECK(compose(kDiag, kTimes2).apply({5}) == Vec{10, 10});
    CHECK_THROWS_AS(compose(kTimes2, kDiag), Error);            // middle mismatch
}

TEST_CASE("envelope matrix round-trips through the target envelope") {
    Mat h = kNodeIncl.envelope_matrix();
    const Mat& env = kNode.group_envelope().basis;
    REQUIRE(h.size() == 2);
    CHECK(lin::vec_mat(h[0], env) == Vec{2, 0});
    CHECK(lin::vec_mat(h[1], env) == Vec{0, 2});
}

TEST_CASE("doubling of N: every flag, saturation fails with the minimal witness") {
    Classification c = classify_map(kTimes2, 4, {2});
    CHECK(c.local.status == Status::yes);
    CHECK(c.exact.status == Status::yes);
    CHECK(c.kummer.status == Status::yes);
    CHECK(c.l_kummer.status == Status::yes);
    CHECK(c.integral.holds());
    CHECK(c.saturated.status == Status::no);
    CHECK(c.saturated.witness.find("p=2") != std::string::npos);
    CHECK(c.saturated.witness.find("a=(1)") != std::string::npos);
    CHECK(c.saturated.witness.find("b=(1)") != std::string::npos);
    CHECK(c.bound == 4);
}

TEST_CASE("default bound follows the data in sight") {
    CHECK(default_classification_bound(kTimes2) == 4);  // coordinate 2, dimension 1
    CHECK(default_classification_bound(kDiag) == 4);    // coordinate 1, dimension 2
    CHECK(default_classification_bound(kNodeIncl) == 8);
}

TEST_CASE("diagonal into the plane: not Kummer, but integral and saturated") {
    Classification c = classify_map(kDiag, 6);
    CHECK(c.local.status == Status::yes);
    CHECK(c.exact.status == Status::yes);
    CHECK(c.kummer.status == Status::no);
    CHECK(c.kummer.witness.find("(1,0)") != std::string::npos);
    CHECK(c.integral.holds());
    CHECK(c.saturated.holds());
}

TEST_CASE("inclusion of N into Z is not exact and not local") {
    Classification c = classify_map(kIncl, 4);
    CHECK(c.exact.status == Status::no);
    CHECK(c.local.status == Status::no); // the generator becomes invertible
    CHECK(c.saturated.holds());          // target is a group
}

TEST_CASE("coordinate projection: kernel directions break locality and exactness") {
    Classification c = classify_map(kProj, 4);
    CHECK(c.local.status == Status::no);
    CHECK(c.exact.status == Status::no);
    CHECK(c.kummer.status == Status::no);
    CHECK(c.integral.holds());
    CHECK(c.saturated.holds());
}

TEST_CASE("index-two node extension is Kummer, exact, but not saturated") {
    Classification c = classify_map(kNodeIncl, 6, {2});
    CHECK(c.local.status == Status::yes);
    CHECK(c.exact.status == Status::yes);
    CHECK(c.kummer.status == Status::yes);
    CHECK(c.l_kummer.status == Status::yes);
    CHECK(c.integral.holds());
    CHECK(c.saturated.status == Status::no);
}

TEST_CASE("restricted Kummer flag tracks the order of the image quotient") {
    // tripling is Kummer but its quotient has order 3: not supported by {2}
    Classification c = classify_map(kTimes3, 6, {2});
    CHECK(c.kummer.status == Status::yes);
    CHECK(c.l_kummer.status == Status::no);
    CHECK(classify_map(kTimes3, 6, {3}).l_kummer.status == Status::yes);
    CHECK(classify_map(kTimes3, 6, {2, 3}).l_kummer.status == Status::yes);
    // without a prime set the flag degenerates to plain Kummer
    CHECK(classify_map(kTimes3, 6).l_kummer.status == Status::yes);
}

TEST_CASE("restricted Kummer multiplier search on a non-saturated source") {
    // view N inside <2,3>: the lattice order is 1 but 1 itself is missing,
    // so a genuine multiplier has to be hunted down in the monoid
    MonoidMap h(kTwoThree, kN, {{1}});
    CHECK(classify_map(h, 8, {2}).l_kummer.status == Status::yes);  // 2 works
    // a gap monoid missing every power of two up to the bound stays undecided
    MonoidMap gap(AffineMonoid(1, {{9}, {10}}), kN, {{1}});
    Classification c = classify_map(gap, 8, {2});
    CHECK(c.kummer.status == Status::yes);
    CHECK(c.l_kummer.status == Status::undecided);
    CHECK(c.l_kummer.bound == 8);
}

TEST_CASE("exactness of the identity on a non-saturated monoid is bound-limited") {
    MonoidMap id23 = MonoidMap::identity(kTwoThree);
    Verdict e = classify_map(id23, 6).exact;
    CHECK(e.status == Status::yes_at_bound);
    CHECK(e.holds());
    // whereas viewing <2,3> inside N is definitively not exact
    Verdict f = classify_map(MonoidMap(kTwoThree, kN, {{1}}), 6).exact;
    CHECK(f.status == Status::no);
    CHECK(f.witness.find("(1)") != std::string::npos);
}

TEST_CASE("classification handles a non-sharp non-saturated source") {
    AffineMonoid half(2, {{0, 2}, {0, -2}, {1, 0}, {1, 1}});
    Classification c = classify_map(MonoidMap::identity(half), 4);
    CHECK(c.local.status == Status::yes);
    CHECK(c.exact.holds());
    CHECK(c.kummer.status == Status::yes);
    CHECK(c.integral.holds());
    CHECK(c.saturated.holds());
}

TEST_CASE("bound and prime arguments are validated") {
    CHECK_THROWS_AS(classify_map(kTimes2, 0), Error);
    CHECK_THROWS_AS(classify_map(kTimes2, 4, {4}), Error);
    CHECK_THROWS_AS(classify_map(kTimes2, 4, {1}), Error);
}

TEST_CASE("bounded verdicts agree with the naive criterion searches") {
    struct Entry {
        const MonoidMap* map;
        size_t terms;
        long long cb;
    };
    const Entry corpus[] = {
        {&kTimes2, 3, 8}, {&kTimes3, 3, 8}, {&kDiag, 3, 8},
        {&kProj, 3, 8},   {&kNodeIncl, 2, 6},
    };
    for (const auto& e : corpus) {
        const MonoidMap& h = *e.map;
        size_t pd = h.source().ambient_dim(), qd = h.target().ambient_dim();
        auto tv = oracle::tsuji_search(og(h.source()), og(h.target()), h.matrix(), pd, qd,
                                       e.terms, e.cb, {2, 3});
        auto iv = oracle::integral_search(og(h.source()), og(h.target()), h.matrix(), pd, qd,
                                          e.terms, e.cb);
        Classification c = classify_map(h, 6);
        INFO("map with matrix " << lin::vec_to_string(h.matrix()[0]));
        CHECK(c.integral.holds() == !iv.found);
        if (tv.found) {
            CHECK_FALSE(c.saturated.holds());
        } else if (!iv.found) {
            CHECK(c.saturated.holds());
        }
    }
}

TEST_CASE("Kummer face transport matches the saturation of the image") {
    Face axis = kN2.smallest_face_containing({{1, 0}});
    Face moved = kummer_face_transport(kNodeIncl, axis);
    CHECK(moved.generator_subset() == Mat{{2, 0}});

    Face bottom = kummer_face_transport(kNodeIncl, kN2.units_face());
    CHECK(bottom.size() == 0);
    Face top = kummer_face_transport(kNodeIncl, kN2.full_face());
    CHECK(top.size() == kNode.generators().size());

    CHECK_THROWS_AS(kummer_face_transport(kDiag, kN.units_face()), Error);
}

TEST_CASE("Kummer face transport is an order isomorphism of face posets") {
    const MonoidMap* maps[] = {&kTimes2, &kNodeIncl};
    for (const MonoidMap* hp : maps) {
        FacePoset sp = hp->source().face_poset();
        FacePoset tp = hp->target().face_poset();
        std::vector<size_t> f(sp.faces.size());
        for (size_t i = 0; i < sp.faces.size(); ++i)
            f[i] = tp.index_of(kummer_face_transport(*hp, sp.faces[i]));
        CHECK(sp.order.is_order_isomorphism(f, tp.order));
    }
}

TEST_CASE("composites of Kummer maps stay Kummer, of saturated maps saturated") {
    MonoidMap six = compose(kTimes2, kTimes3);
    CHECK(six.matrix() == Mat{{6}});
    CHECK(classify_map(six, 8).kummer.status == Status::yes);

    MonoidMap drop3 = MonoidMap(kN3, kN2, {{1, 0, 0}, {0, 1, 0}});
    MonoidMap both = compose(kProj, drop3);
    CHECK(classify_map(drop3, 3).saturated.holds());
    CHECK(classify_map(both, 3).saturated.holds());
}

TEST_CASE("integrality and saturation descend to face preimages") {
    FacePoset qf = kN2.face_poset();
    for (const Face& target_face : qf.faces) {
        FaceRestriction r = restrict_to_face_preimage(kDiag, target_face);
        Classification c = classify_map(r.map, 4);
        CHECK(c.integral.holds());
        CHECK(c.saturated.holds());
    }
    // the preimage face collapses to the units unless the target face
    // swallows the whole diagonal
    FaceRestriction adj = restrict_to_face_preimage(kDiag, qf.faces.back());
    CHECK(adj.source_face.size() == 1);
    FaceRestriction bot = restrict_to_face_preimage(kDiag, qf.faces.front());
    CHECK(bot.source_face.size() == 0);
}

TEST_CASE("verdict rendering carries bounds and witnesses") {
    CHECK(verdict_yes().to_string() == "yes");
    CHECK(verdict_no("bad").to_string() == "no [bad]");
    CHECK(Verdict{Status::yes_at_bound, 7, ""}.to_string() == "yes at bound 7");
    CHECK(Verdict{Status::undecided, 3, "why"}.to_string() == "undecided at bound 3 [why]");
}
