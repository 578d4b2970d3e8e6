#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <string>
#include <vector>

#include "polystrata/tempered.hpp"

using namespace polystrata;

namespace {

const LambdaObject kPt = LambdaObject::point();
const LambdaObject kEdge{{1}};
const LambdaObject kTriangle{{2}};

constexpr size_t kV0 = 0, kV1 = 1;

bool contains(const std::string& s, const std::string& sub) {
    return s.find(sub) != std::string::npos;
}

ComplexMorphism vertex_pick(const Complex& target, size_t vertex_cell) {
    return ComplexMorphism(Complex::point(), target, {PolyRef{kPt, {}, vertex_cell}});
}

Complex loop_complex() {
    Complex edge = Complex::representable(kEdge);
    return coequalizer(vertex_pick(edge, kV0), vertex_pick(edge, kV1)).complex;
}

// n >= 2 edges glued end to start; quotient cells come out as the n vertex
// classes 0..n-1 (class j contains the j-th edge's start) followed by the
// two orientations n+2i, n+2i+1 of each input edge
Complex cycle_complex(size_t n) {
    Complex edges = Complex::representable(kEdge);
    for (size_t i = 1; i < n; ++i) edges = disjoint_union(edges, Complex::representable(kEdge));
    Complex sites = Complex::point();
    for (size_t i = 1; i < n; ++i) sites = disjoint_union(sites, Complex::point());
    std::vector<PolyRef> ia, ib;
    for (size_t i = 0; i < n; ++i) {
        ia.push_back(PolyRef{kPt, {}, 4 * i + kV1});
        ib.push_back(PolyRef{kPt, {}, 4 * ((i + 1) % n) + kV0});
    }
    return coequalizer(ComplexMorphism(sites, edges, std::move(ia)),
                       ComplexMorphism(sites, edges, std::move(ib)))
        .complex;
}

Complex theta_complex() {
    Complex edges = Complex::representable(kEdge);
    for (size_t i = 1; i < 3; ++i) edges = disjoint_union(edges, Complex::representable(kEdge));
    Complex sites = Complex::point();
    for (size_t i = 1; i < 4; ++i) sites = disjoint_union(sites, Complex::point());
    std::vector<PolyRef> ia = {PolyRef{kPt, {}, 0 + kV0}, PolyRef{kPt, {}, 4 + kV0},
                               PolyRef{kPt, {}, 0 + kV1}, PolyRef{kPt, {}, 4 + kV1}};
    std::vector<PolyRef> ib = {PolyRef{kPt, {}, 4 + kV0}, PolyRef{kPt, {}, 8 + kV0},
                               PolyRef{kPt, {}, 4 + kV1}, PolyRef{kPt, {}, 8 + kV1}};
    return coequalizer(ComplexMorphism(sites, edges, std::move(ia)),
                       ComplexMorphism(sites, edges, std::move(ib)))
        .complex;
}

LambdaMorphism flip_edge() {
    LambdaMorphism m;
    m.source = m.target = kEdge;
    m.f = {0};
    m.alpha = {{1, 0}};
    return m;
}

Complex fold_complex() {
    Complex edge = Complex::representable(kEdge);
    return coequalizer(ComplexMorphism::identity(edge), representable_map(flip_edge())).complex;
}

PolyRef full_poly(const Complex& cx, size_t cell) {
    std::vector<int> kept(cx.cell_type(cell).weight());
    std::iota(kept.begin(), kept.end(), 0);
    return PolyRef{cx.cell_type(cell), std::move(kept), cell};
}

ComplexMorphism cycle_rotation(const Complex& cyc, size_t n, size_t shift) {
    std::vector<PolyRef> img;
    for (size_t c = 0; c < cyc.cell_count(); ++c) {
        if (c < n) {
            img.push_back(full_poly(cyc, (c + shift) % n));
        } else {
            size_t i = (c - n) / 2, par = (c - n) % 2;
            img.push_back(full_poly(cyc, n + 2 * ((i + shift) % n) + par));
        }
    }
    return ComplexMorphism(cyc, cyc, std::move(img));
}

// degree covering cycle_nf -> cycle_nc for nc dividing nf
ComplexMorphism cycle_wrap(const Complex& fine, size_t nf, const Complex& coarse, size_t nc) {
    std::vector<PolyRef> img;
    for (size_t c = 0; c < fine.cell_count(); ++c) {
        if (c < nf) {
            img.push_back(full_poly(coarse, c % nc));
        } else {
            size_t i = (c - nf) / 2, par = (c - nf) % 2;
            img.push_back(full_poly(coarse, nc + 2 * (i % nc) + par));
        }
    }
    return ComplexMorphism(fine, coarse, std::move(img));
}

ComplexMorphism collapse_all(const Complex& src, const Complex& pt) {
    std::vector<PolyRef> img;
    for (size_t c = 0; c < src.cell_count(); ++c)
        img.push_back(PolyRef{src.cell_type(c), {}, 0});
    return ComplexMorphism(src, pt, std::move(img));
}

// extends generator images to the whole group along each element's word
std::vector<size_t> hom_by_words(const PermGroup& fine, const PermGroup& coarse,
                                 const std::vector<size_t>& gen_elem_images) {
    std::vector<size_t> out(fine.size(), coarse.identity());
    for (size_t e = 0; e < fine.size(); ++e) {
        size_t acc = coarse.identity();
        for (size_t l : fine.words[e]) acc = coarse.mul(acc, gen_elem_images.at(l));
        out[e] = acc;
    }
    return out;
}

std::string thrown_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

// regular degree-4 representation of the Klein four-group
const std::vector<std::vector<int>> kKlein = {{1, 0, 3, 2}, {2, 3, 0, 1}};
// two disjoint 4-cycles: a faithful degree-8 copy of Z/4 x Z/4
const std::vector<std::vector<int>> kZ4Sq = {{1, 2, 3, 0, 4, 5, 6, 7}, {0, 1, 2, 3, 5, 6, 7, 4}};
// two disjoint 3-cycles: a faithful degree-6 copy of Z/3 x Z/3
const std::vector<std::vector<int>> kZ3Sq = {{1, 2, 0, 3, 4, 5}, {0, 1, 2, 4, 5, 3}};

} // namespace

TEST_CASE("permutation groups close and multiply") {
    PermGroup c3 = PermGroup::generated(3, {{1, 2, 0}});
    CHECK(c3.size() == 3);
    CHECK(c3.identity() == 0);
    CHECK(c3.elements[0] == std::vector<int>{0, 1, 2});
    for (size_t a = 0; a < c3.size(); ++a) {
        CHECK(c3.mul(a, c3.inverse(a)) == c3.identity());
        CHECK(c3.mul(c3.identity(), a) == a);
    }

    PermGroup klein = PermGroup::generated(4, kKlein);
    CHECK(klein.size() == 4);
    for (size_t a = 0; a < 4; ++a)
        for (size_t b = 0; b < 4; ++b) CHECK(klein.mul(a, b) == klein.mul(b, a));
    CHECK(klein.gen_index.size() == 2);
    CHECK(klein.elements[klein.gen_index[0]] == kKlein[0]);

    // mul applies the right factor first
    PermGroup s3 = PermGroup::generated(3, {{1, 0, 2}, {0, 2, 1}});
    CHECK(s3.size() == 6);
    size_t a = s3.gen_index[0], b = s3.gen_index[1];
    std::vector<int> ab(3);
    for (int x = 0; x < 3; ++x) ab[x] = s3.elements[a][s3.elements[b][x]];
    CHECK(s3.mul(a, b) == s3.index_of(ab));

    CHECK_THROWS_AS(PermGroup::generated(0, {}), Error);
    CHECK_THROWS_AS(PermGroup::generated(3, {{0, 1}}), Error);
    CHECK_THROWS_AS(PermGroup::generated(3, {{0, 0, 1}}), Error);
    CHECK_THROWS_AS(c3.index_of({1, 0, 2}), Error);
}

TEST_CASE("coset enumeration computes small indices") {
    GroupPresentation free1{{"t"}, {}};
    CHECK(todd_coxeter_index(free1, {{1, 1, 1, 1, 1}}) == 5);
    CHECK(todd_coxeter_index(free1, {{-1, -1}}) == 2);
    CHECK_THROWS_AS(todd_coxeter_index(free1, {}, 64), Error);

    GroupPresentation dihedral{{"a", "b"}, {{1, 1}, {2, 2}, {1, 2, 1, 2}}};
    CHECK(todd_coxeter_index(dihedral, {}) == 4);
    CHECK(todd_coxeter_index(dihedral, {{1}}) == 2);
    CHECK(todd_coxeter_index(dihedral, {{1}, {2}}) == 1);

    GroupPresentation trivial{{}, {}};
    CHECK(todd_coxeter_index(trivial, {}) == 1);

    CHECK_THROWS_AS(todd_coxeter_index(free1, {{2}}), Error);
}

TEST_CASE("trivial action lifts to the fundamental group itself") {
    Complex loop = loop_complex();
    ExtensionPresentation ext = lift_extension(loop, GaloisActionDatum::trivial(loop), 0);
    CHECK(ext.group.size() == 1);
    CHECK(ext.pi.is_free());
    CHECK(ext.pi.free_rank() == 1);
    CHECK(ext.kernel_generators == std::vector<std::vector<int>>{{1}});
    CHECK(contains(ext.to_string(), "kernel generated by"));
    CHECK(verify_exact(ext) == 1);

    Complex fold = fold_complex();
    ExtensionPresentation fext = lift_extension(fold, GaloisActionDatum::trivial(fold), 0);
    CHECK(fext.pi.generators.empty());
    CHECK(fext.kernel_rank() == 0);
    CHECK(contains(fext.to_string(), "trivial kernel"));

    for (const Complex& cx : {theta_complex(), cycle_complex(4)}) {
        ExtensionPresentation e = lift_extension(cx, GaloisActionDatum::trivial(cx), 0);
        CHECK(e.pi.is_free());
        CHECK(e.pi.free_rank() == h1_rank(two_skeleton(cx)));
        CHECK(e.kernel_rank() == e.pi.free_rank());
    }
}

TEST_CASE("free cyclic rotation gives the degree covering extension") {
    Complex c3 = cycle_complex(3);
    GaloisActionDatum act =
        GaloisActionDatum::from_generators(c3, 3, {{1, 2, 0}}, {cycle_rotation(c3, 3, 1)});
    ExtensionPresentation ext = lift_extension(c3, act, 0);

    // free action on a circle: the extension is Z and the kernel is 3Z
    CHECK(ext.pi.is_free());
    CHECK(ext.pi.free_rank() == 1);
    CHECK(ext.kernel_generators.size() == 1);
    const std::vector<int>& w = ext.kernel_generators[0];
    CHECK(w.size() == 3);
    for (int a : w) CHECK(a == w[0]);
    CHECK(std::abs(w[0]) == 1);
    CHECK(ext.quotient_of(w) == ext.group.identity());
    CHECK(verify_exact(ext) == 3);
}

TEST_CASE("stabilizers at a point present the group itself") {
    Complex pt = Complex::point();
    GaloisActionDatum act = GaloisActionDatum::from_generators(
        pt, 4, kKlein, {ComplexMorphism::identity(pt), ComplexMorphism::identity(pt)});
    ExtensionPresentation ext = lift_extension(pt, act, 0);

    CHECK(ext.pi.generators.size() == 3);
    CHECK(ext.kernel_rank() == 0);
    CHECK(contains(ext.to_string(), "trivial kernel"));
    lin::QuotientShape ab = ext.pi.abelian_invariants();
    CHECK(ab.free_rank == 0);
    CHECK(ab.torsion == std::vector<lin::I64>{2, 2});
    CHECK(verify_exact(ext) == 4);
}

TEST_CASE("mixed rotation and stabilizer action gives product extensions") {
    // first factor rotates the 2-cycle, second acts trivially: Z x Z/2
    Complex c2 = cycle_complex(2);
    GaloisActionDatum act2 = GaloisActionDatum::from_generators(
        c2, 4, kKlein, {cycle_rotation(c2, 2, 1), ComplexMorphism::identity(c2)});
    ExtensionPresentation ext2 = lift_extension(c2, act2, 0);
    CHECK(ext2.pi.generators.size() == 3);
    CHECK(ext2.pi.relators.size() == 4);
    CHECK(ext2.kernel_rank() == 1);
    CHECK(ext2.kernel_rank() == h1_rank(two_skeleton(c2)));
    lin::QuotientShape ab2 = ext2.pi.abelian_invariants();
    CHECK(ab2.free_rank == 1);
    CHECK(ab2.torsion == std::vector<lin::I64>{2});
    CHECK(verify_exact(ext2) == 4);

    // same shape one level up: Z x Z/3
    Complex c3 = cycle_complex(3);
    GaloisActionDatum act3 = GaloisActionDatum::from_generators(
        c3, 6, kZ3Sq, {cycle_rotation(c3, 3, 1), ComplexMorphism::identity(c3)});
    ExtensionPresentation ext3 = lift_extension(c3, act3, 0);
    CHECK(ext3.kernel_rank() == 1);
    lin::QuotientShape ab3 = ext3.pi.abelian_invariants();
    CHECK(ab3.free_rank == 1);
    CHECK(ab3.torsion == std::vector<lin::I64>{3});
    CHECK(verify_exact(ext3) == 9);
}

TEST_CASE("lifting validates its inputs") {
    Complex tri = Complex::representable(kTriangle);
    std::string m = thrown_message(
        [&] { lift_extension(tri, GaloisActionDatum::trivial(tri), 0); });
    CHECK(contains(m, "unsupported"));

    Complex two = disjoint_union(Complex::point(), loop_complex());
    CHECK_THROWS_AS(lift_extension(two, GaloisActionDatum::trivial(two), 0), Error);

    Complex loop = loop_complex();
    CHECK_THROWS_AS(lift_extension(loop, GaloisActionDatum::trivial(loop), 99), Error);

    // order-2 permutation paired with an order-3 rotation
    Complex c3 = cycle_complex(3);
    CHECK_THROWS_AS(
        GaloisActionDatum::from_generators(c3, 2, {{1, 0}}, {cycle_rotation(c3, 3, 1)}), Error);

    // collapsing endomorphism is not an automorphism
    std::vector<PolyRef> img;
    for (size_t c = 0; c < loop.cell_count(); ++c) img.push_back(PolyRef{loop.cell_type(c), {}, 0});
    CHECK_THROWS_AS(GaloisActionDatum::from_generators(
                        loop, 2, {{1, 0}}, {ComplexMorphism(loop, loop, std::move(img))}),
                    Error);
}

TEST_CASE("exactness certification flags proper subgroups") {
    Complex c3 = cycle_complex(3);
    GaloisActionDatum act =
        GaloisActionDatum::from_generators(c3, 3, {{1, 2, 0}}, {cycle_rotation(c3, 3, 1)});
    ExtensionPresentation ext = lift_extension(c3, act, 0);
    CHECK(verify_exact(ext) == 3);

    ExtensionPresentation doctored = ext;
    doctored.kernel_generators = {{1, 1, 1, 1, 1, 1}};
    doctored.validate(); // t^6 still dies in Z/3
    std::string m = thrown_message([&] { verify_exact(doctored); });
    CHECK(contains(m, "index 6"));
}

TEST_CASE("towers assemble with commuting connection squares") {
    // constant-point tower: each level is its own Galois group
    Complex pt = Complex::point();
    GaloisActionDatum t0 = GaloisActionDatum::trivial(pt);
    GaloisActionDatum t1 = GaloisActionDatum::from_generators(
        pt, 4, kKlein, {ComplexMorphism::identity(pt), ComplexMorphism::identity(pt)});
    GaloisActionDatum t2 = GaloisActionDatum::from_generators(
        pt, 8, kZ4Sq, {ComplexMorphism::identity(pt), ComplexMorphism::identity(pt)});
    std::vector<TowerLevelInput> levels = {{pt, t0, 0}, {pt, t1, 0}, {pt, t2, 0}};
    std::vector<TowerConnectionInput> conns;
    conns.push_back({ComplexMorphism::identity(pt), std::vector<size_t>(4, 0)});
    conns.push_back({ComplexMorphism::identity(pt),
                     hom_by_words(t2.group, t1.group,
                                  {t1.group.gen_index[0], t1.group.gen_index[1]})});
    TemperedTower good = build_tower(levels, conns);
    CHECK(good.levels.size() == 3);
    for (const TowerLevel& l : good.levels) {
        CHECK(l.extension.kernel_rank() == 0);
        CHECK(l.extension.pi.generators.size() == l.action.group.size() - 1);
    }
    CHECK(contains(good.report(), "|G|=4"));
    CHECK(contains(good.report(), "|G|=16"));
    CHECK(contains(good.report(), "kernel rank 0"));
    CHECK(good.connections[1].induced.size() == 15);

    // cycle tower: level m is Z x Z/m with kernel Z
    Complex c2 = cycle_complex(2);
    Complex c4 = cycle_complex(4);
    GaloisActionDatum a2 = GaloisActionDatum::from_generators(
        c2, 4, kKlein, {cycle_rotation(c2, 2, 1), ComplexMorphism::identity(c2)});
    GaloisActionDatum a4 = GaloisActionDatum::from_generators(
        c4, 8, kZ4Sq, {cycle_rotation(c4, 4, 1), ComplexMorphism::identity(c4)});
    std::vector<TowerLevelInput> tlevels = {{c2, a2, 0}, {c4, a4, 0}};
    std::vector<TowerConnectionInput> tconns;
    tconns.push_back({cycle_wrap(c4, 4, c2, 2),
                      hom_by_words(a4.group, a2.group,
                                   {a2.group.gen_index[0], a2.group.gen_index[1]})});
    TemperedTower tate = build_tower(tlevels, tconns);
    for (size_t i = 0; i < 2; ++i) {
        const ExtensionPresentation& e = tate.levels[i].extension;
        CHECK(e.kernel_rank() == 1);
        lin::QuotientShape ab = e.pi.abelian_invariants();
        CHECK(ab.free_rank == 1);
        CHECK(ab.torsion == std::vector<lin::I64>{static_cast<lin::I64>(2 << i)});
    }

    // a single-level tower is just the direct lift
    TemperedTower single = build_tower({{c2, a2, 0}}, {});
    CHECK(single.levels[0].extension.to_string() == lift_extension(c2, a2, 0).to_string());

    // wrong generator matching breaks equivariance
    std::vector<TowerConnectionInput> bad;
    bad.push_back({cycle_wrap(c4, 4, c2, 2),
                   hom_by_words(a4.group, a2.group,
                                {a2.group.gen_index[1], a2.group.gen_index[0]})});
    std::string m = thrown_message([&] { build_tower(tlevels, bad); });
    CHECK(contains(m, "equivariant"));
    CHECK(contains(m, "level 1"));

    // collapsing everything onto the Klein factor is not surjective
    std::vector<TowerConnectionInput> small;
    small.push_back({cycle_wrap(c4, 4, c2, 2), std::vector<size_t>(16, 0)});
    CHECK(contains(thrown_message([&] { build_tower(tlevels, small); }), "surjective"));

    CHECK_THROWS_AS(build_tower({}, {}), Error);
    CHECK_THROWS_AS(build_tower(tlevels, {}), Error);
}

TEST_CASE("cospecialization maps towers levelwise") {
    Complex pt = Complex::point();
    Complex c2 = cycle_complex(2);
    Complex c4 = cycle_complex(4);
    GaloisActionDatum a2 = GaloisActionDatum::from_generators(
        c2, 4, kKlein, {cycle_rotation(c2, 2, 1), ComplexMorphism::identity(c2)});
    GaloisActionDatum a4 = GaloisActionDatum::from_generators(
        c4, 8, kZ4Sq, {cycle_rotation(c4, 4, 1), ComplexMorphism::identity(c4)});
    std::vector<size_t> gmap = hom_by_words(a4.group, a2.group,
                                            {a2.group.gen_index[0], a2.group.gen_index[1]});
    TemperedTower tate =
        build_tower({{c2, a2, 0}, {c4, a4, 0}}, {{cycle_wrap(c4, 4, c2, 2), gmap}});

    // identity cospecialization is certified levelwise as an isomorphism
    TowerCospecialization idc = cospecialize_tower(
        tate, tate, {ComplexMorphism::identity(c2), ComplexMorphism::identity(c4)});
    CHECK(idc.all_iso());
    for (size_t i = 0; i < 2; ++i)
        for (size_t g = 0; g < idc.maps[i].size(); ++g)
            CHECK(idc.maps[i][g] == std::vector<int>{static_cast<int>(g) + 1});

    // collapsing the cycles onto points with the same groups kills the kernel
    GaloisActionDatum p2 = GaloisActionDatum::from_generators(
        pt, 4, kKlein, {ComplexMorphism::identity(pt), ComplexMorphism::identity(pt)});
    GaloisActionDatum p4 = GaloisActionDatum::from_generators(
        pt, 8, kZ4Sq, {ComplexMorphism::identity(pt), ComplexMorphism::identity(pt)});
    TemperedTower good =
        build_tower({{pt, p2, 0}, {pt, p4, 0}}, {{ComplexMorphism::identity(pt), gmap}});
    TowerCospecialization col =
        cospecialize_tower(tate, good, {collapse_all(c2, pt), collapse_all(c4, pt)});
    CHECK(!col.all_iso());
    for (size_t i = 0; i < 2; ++i) {
        CHECK(!col.level_iso[i]);
        const ExtensionPresentation& fine = tate.levels[i].extension;
        const ExtensionPresentation& coarse = good.levels[i].extension;
        for (const auto& k : fine.kernel_generators)
            CHECK(coarse.normalize(substitute_word(k, col.maps[i])).empty());
        // squares commute: images still project to the same group elements
        for (size_t g = 0; g < fine.pi.generators.size(); ++g)
            CHECK(coarse.quotient_of(col.maps[i][g]) == fine.quotient[g]);
    }

    // identity followed by the collapse equals the collapse
    for (size_t i = 0; i < 2; ++i) {
        const ExtensionPresentation& coarse = good.levels[i].extension;
        for (size_t g = 0; g < idc.maps[i].size(); ++g)
            CHECK(coarse.normalize(substitute_word(idc.maps[i][g], col.maps[i])) ==
                  coarse.normalize(col.maps[i][g]));
    }

    // rotations do not preserve the basepoint
    std::string m = thrown_message([&] {
        cospecialize_tower(tate, tate, {cycle_rotation(c2, 2, 1), cycle_rotation(c4, 4, 1)});
    });
    CHECK(contains(m, "basepoint"));
    CHECK(contains(m, "level 0"));

    TemperedTower shallow = build_tower({{c2, a2, 0}}, {});
    CHECK(contains(thrown_message([&] {
              cospecialize_tower(tate, shallow, {ComplexMorphism::identity(c2)});
          }),
          "heights"));

    TemperedTower plain = build_tower({{c2, GaloisActionDatum::trivial(c2), 0}}, {});
    CHECK(contains(thrown_message([&] {
              cospecialize_tower(shallow, plain, {ComplexMorphism::identity(c2)});
          }),
          "Galois groups differ"));
}

TEST_CASE("substitute_word splices and reduces") {
    std::vector<std::vector<int>> images = {{2, 1}, {2}};
    CHECK(substitute_word({1, -2}, images) == std::vector<int>{2, 1, -2});
    CHECK(substitute_word({2, -2}, images).empty());
    CHECK(substitute_word({-1, 1}, images).empty());
    CHECK(substitute_word({}, images).empty());
}
