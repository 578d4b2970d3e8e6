#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "polystrata/scene.hpp"

using namespace polystrata;

namespace {

std::filesystem::path scenes_dir() {
    return std::filesystem::path(__FILE__).parent_path().parent_path() / "scenes";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::string thrown_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("parser reports malformed input with line numbers") {
    CHECK(contains(thrown_message([] { parse_scene("monoid M dim 2\n  gen 1\nend\n"); }),
                   "line 2"));
    CHECK(contains(thrown_message([] { parse_scene("widget w\n"); }),
                   "unknown entity kind 'widget'"));
    CHECK(contains(thrown_message([] { parse_scene("map f source A target B\nend\n"); }),
                   "unknown monoid 'A'"));
    CHECK(contains(thrown_message([] { parse_scene("monoid M dim 1\n  gen 1\n"); }),
                   "missing 'end'"));
    CHECK(contains(thrown_message([] {
                       parse_scene("monoid M dim 1\n  gen 1\nend\n"
                                   "monoid M dim 1\n  gen 1\nend\n");
                   }),
                   "duplicate monoid 'M'"));
    CHECK(contains(thrown_message([] { parse_scene("complex c representable [1]\n"); }),
                   "malformed object"));
    CHECK(contains(thrown_message([] { parse_scene("monoid M dim 1\n  gen x\nend\n"); }),
                   "expected an integer"));
}

TEST_CASE("construction failures name the entity and its line") {
    std::string msg = thrown_message([] {
        parse_scene("monoid Z dim 1\n  gen 1\n  gen -1\nend\nlogpoint p monoid Z\n");
    });
    CHECK(contains(msg, "logpoint 'p'"));
    CHECK(contains(msg, "line 5"));
    CHECK(contains(msg, "sharp"));
}

TEST_CASE("the basics scene populates every referenced registry") {
    Scene s = parse_scene(slurp(scenes_dir() / "basics.scene"));
    CHECK(s.monoids.size() == 4);
    CHECK(s.maps.size() == 4);
    CHECK(s.charts.size() == 1);
    CHECK(s.logpoints.size() == 1);
    CHECK(s.fibers.size() == 1);
    CHECK(s.monoids.at("QN").equals(standard_monoid(s.charts.at("node_chart"))));
}

TEST_CASE("raw complexes round-trip through their scene listing") {
    const Complex samples[] = {
        Complex::point(),
        Complex::representable(LambdaObject{{2}}),
        box_product(Complex::representable(LambdaObject{{1}}),
                    Complex::representable(LambdaObject{{1}})),
    };
    for (const Complex& c : samples) {
        std::string text = complex_scene_text("x", c);
        Scene s = parse_scene(text);
        CHECK(s.complexes.at("x") == c);
    }
}

TEST_CASE("reports and artifacts are deterministic") {
    Scene s = parse_scene(slurp(scenes_dir() / "basics.scene"));
    RunResult r1 = run_command(s, {"monoid", "analyze", "N2"});
    RunResult r2 = run_command(s, {"monoid", "analyze", "N2"});
    REQUIRE(r1.status == 0);
    CHECK(r1.report == r2.report);
    CHECK(r1.artifacts == r2.artifacts);
    CHECK(contains(r1.report, "command: monoid analyze N2"));
    CHECK(contains(r1.report, "faces: 4"));
    CHECK(contains(r1.report, "saturated: yes"));
    REQUIRE(r1.artifacts.size() == 2);
    CHECK(r1.artifacts[0].first == "monoid-analyze-N2.dot");
    CHECK(r1.artifacts[1].first == "monoid-analyze-N2.txt");
    CHECK(contains(r1.artifacts[0].second, "digraph"));
    CHECK(r1.artifacts[1].second == r1.report);
}

TEST_CASE("map classify honors the bound and prime flags") {
    Scene s = parse_scene(slurp(scenes_dir() / "basics.scene"));
    RunOptions opt;
    opt.bound = 8;
    RunResult r = run_command(s, {"map", "classify", "x2N"}, opt);
    CHECK(r.status == 0);
    CHECK(contains(r.report, "bound: 8"));
    CHECK(contains(r.report, "local: yes"));
    CHECK(contains(r.report, "kummer: yes"));
    CHECK(contains(r.report, "integral: yes at bound 8"));
    CHECK(contains(r.report, "saturated: no [a=(1), b=(1), p=2]"));

    RunResult d = run_command(s, {"map", "classify", "diag"});
    CHECK(d.status == 0);
    CHECK(contains(d.report, "saturated: yes"));

    opt.primes = {3};
    RunResult lk = run_command(s, {"map", "classify", "x2N"}, opt);
    CHECK(contains(lk.report, "primes: 3"));
    CHECK(contains(lk.report, "l-kummer: no"));
}

TEST_CASE("failures surface as status codes, not exceptions") {
    Scene s = parse_scene(slurp(scenes_dir() / "basics.scene"));
    RunResult r = run_command(s, {"monoid", "analyze", "mystery"});
    CHECK(r.status == 2);
    CHECK(contains(r.report, "unknown monoid 'mystery'"));
    CHECK(r.artifacts.empty());
    CHECK(run_command(s, {"frobnicate"}).status == 2);
    CHECK(run_command(s, {"monoid"}).status == 2);

    CHECK(status_for(ErrorKind::validation) == 2);
    CHECK(status_for(ErrorKind::internal) == 2);
    CHECK(status_for(ErrorKind::undecided) == 3);
    CHECK(status_for(ErrorKind::resource) == 3);
}

TEST_CASE("the nodal cubic scene glues to the loop") {
    Scene s = parse_scene(slurp(scenes_dir() / "nodal_cubic.scene"));
    RunResult r = run_command(s, {"fibration", "c", "nodal_cubic"});
    REQUIRE(r.status == 0);
    CHECK(contains(r.report, "cells: 3"));
    CHECK(contains(r.report, "o-poset-size: 2"));
    CHECK(contains(r.report, "interiorly-free: yes"));

    std::string emitted;
    for (const auto& [name, content] : r.artifacts)
        if (name.size() > 6 && name.substr(name.size() - 6) == ".scene") emitted = content;
    REQUIRE(!emitted.empty());
    Scene round = parse_scene(emitted);
    CHECK(round.complexes.at("nodal_cubic_c") == s.complexes.at("cubic"));
}

TEST_CASE("poly and pi1 commands agree with the library on the loop") {
    Scene s = parse_scene(slurp(scenes_dir() / "nodal_cubic.scene"));

    RunResult p = run_command(s, {"pi1", "cubic"});
    CHECK(p.status == 0);
    CHECK(contains(p.report, "free: yes"));
    CHECK(contains(p.report, "h1-rank: 1"));

    RunResult t = run_command(s, {"pi1", "point_complex"});
    CHECK(t.status == 0);
    CHECK(contains(t.report, "generators: 0"));
    CHECK(contains(t.report, "relators: 0"));
    CHECK(contains(t.report, "h1-rank: 0"));

    RunResult o = run_command(s, {"poly", "o-poset", "cubic"});
    CHECK(contains(o.report, "o-poset-size: 2"));
    RunResult f = run_command(s, {"poly", "interior-free", "cubic"});
    CHECK(contains(f.report, "interiorly-free: yes"));
    RunResult z = run_command(s, {"poly", "realize", "cubic"});
    CHECK(contains(z.report, "h1-rank: 1"));
    CHECK(contains(z.report, "skeleton: 2 vertices, 2 edges, 0 triangles"));
}

TEST_CASE("strata cospecialization over the node family") {
    Scene s = parse_scene(slurp(scenes_dir() / "basics.scene"));
    RunResult r = run_command(s, {"strata", "cospec", "node_family", "-", "0"});
    REQUIRE(r.status == 0);
    CHECK(contains(r.report, "special-strata: 3"));
    CHECK(contains(r.report, "generic-strata: 1"));
    CHECK(contains(r.report, "map: 2 -> 0"));

    RunResult viachart = run_command(s, {"strata", "cospec", "node_chart", "-", "0"});
    CHECK(viachart.status == 0);
    CHECK(contains(viachart.report, "special-strata: 3"));

    RunResult bad = run_command(s, {"strata", "cospec", "node_family", "0", "-"});
    CHECK(bad.status == 2);
}

TEST_CASE("tate towers run through the scene front end") {
    Scene s = parse_scene(slurp(scenes_dir() / "tate.scene"));

    RunResult lift = run_command(s, {"tempered", "lift", "c2", "a2"});
    REQUIRE(lift.status == 0);
    CHECK(contains(lift.report, "group-order: 4"));
    CHECK(contains(lift.report, "kernel-rank: 1"));
    CHECK(contains(lift.report, "exactness: certified, kernel index 4"));

    RunResult tw = run_command(s, {"tempered", "tower", "tate"});
    REQUIRE(tw.status == 0);
    CHECK(contains(tw.report, "levels: 2"));
    CHECK(contains(tw.report, "|G|=4"));
    CHECK(contains(tw.report, "|G|=16"));
    CHECK(contains(tw.report, "kernel rank 1"));

    RunResult good = run_command(s, {"tempered", "tower", "good"});
    REQUIRE(good.status == 0);
    CHECK(contains(good.report, "kernel rank 0"));

    RunResult co = run_command(s, {"tempered", "cospec", "tate", "good", "col2", "col4"});
    REQUIRE(co.status == 0);
    CHECK(contains(co.report, "all-iso: no"));

    RunResult ident = run_command(s, {"tempered", "cospec", "tate", "tate", "id_c2", "id_c4"});
    REQUIRE(ident.status == 0);
    CHECK(contains(ident.report, "all-iso: yes"));

    RunResult rev = run_command(s, {"tempered", "cospec", "good", "tate", "vpick2", "vpick4"});
    CHECK(rev.status == 2);
    CHECK(contains(rev.report, "equivariant"));
}

TEST_CASE("tower genmap entries are validated at parse time") {
    std::string text = slurp(scenes_dir() / "tate.scene");
    CHECK(contains(thrown_message([&] {
                       parse_scene(text + "tower broken\n  level c2 a2 0\n  level c4 a4 0\n"
                                          "  connect wrap42 genmap g0\nend\n");
                   }),
                   "genmap needs one entry"));
    CHECK(contains(thrown_message([&] {
                       parse_scene(text + "tower broken\n  level c2 a2 0\n"
                                          "  connect wrap42 genmap g0 g1\nend\n");
                   }),
                   "connect line before its two levels"));
}
