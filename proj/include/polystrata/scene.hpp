#pragma once

// Scene files and the batch command front end.
//
// A scene is a line-oriented catalogue of named entities: monoids, maps,
// log points, fiber charts, polystable charts, pieces, descent data,
// complexes, morphisms, group actions and towers. Entities must be declared
// before they are referenced. Commands run against a parsed scene and
// return a key:value report plus named artifacts (canonical text, DOT and
// re-parsable complex listings). Identical scene and flags give
// byte-identical output.

#include <cctype>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dot.hpp"
#include "fibration.hpp"
#include "monoid.hpp"
#include "monoid_map.hpp"
#include "pi1.hpp"
#include "strata.hpp"
#include "tempered.hpp"

namespace polystrata {

struct SceneTower {
    std::vector<TowerLevelInput> levels;
    std::vector<TowerConnectionInput> connections;
};

struct Scene {
    std::map<std::string, AffineMonoid> monoids;
    std::map<std::string, MonoidMap> maps;
    std::map<std::string, LogPointChart> logpoints;
    std::map<std::string, FiberChartDatum> fibers;
    std::map<std::string, PolystableChart> charts;
    std::map<std::string, KetPieceDatum> pieces;
    std::map<std::string, DescentDatum> descents;
    std::map<std::string, Complex> complexes;
    std::map<std::string, ComplexMorphism> morphisms;
    std::map<std::string, GaloisActionDatum> actions;
    std::map<std::string, SceneTower> towers;
};

namespace detail {

struct SceneLine {
    size_t no = 0;
    std::vector<std::string> tokens;
};

[[noreturn]] inline void scene_fail(size_t line, const std::string& msg) {
    fail_validation("line " + std::to_string(line) + ": " + msg);
}

inline std::vector<SceneLine> scene_lines(const std::string& text) {
    std::vector<SceneLine> out;
    std::istringstream in(text);
    std::string raw;
    size_t no = 0;
    while (std::getline(in, raw)) {
        ++no;
        if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
        std::istringstream ls(raw);
        SceneLine line{no, {}};
        std::string tok;
        while (ls >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) out.push_back(std::move(line));
    }
    return out;
}

inline long long scene_int(const std::string& tok, size_t line) {
    size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        scene_fail(line, "expected an integer, got '" + tok + "'");
    }
    if (used != tok.size()) scene_fail(line, "expected an integer, got '" + tok + "'");
    return v;
}

inline size_t scene_index(const std::string& tok, size_t line) {
    long long v = scene_int(tok, line);
    if (v < 0) scene_fail(line, "expected a nonnegative integer, got '" + tok + "'");
    return static_cast<size_t>(v);
}

inline void check_identifier(const std::string& id, size_t line) {
    if (id.empty()) scene_fail(line, "empty identifier");
    for (char c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            scene_fail(line, "identifier '" + id + "' has characters outside [A-Za-z0-9_.-]");
}

// "[0]" or "[(2,1,...)]", the printed form of an object
inline LambdaObject parse_lambda(const std::string& tok, size_t line) {
    if (tok == "[0]") return LambdaObject::point();
    if (tok.size() >= 5 && tok.substr(0, 2) == "[(" && tok.substr(tok.size() - 2) == ")]") {
        LambdaObject n;
        std::string body = tok.substr(2, tok.size() - 4);
        std::istringstream in(body);
        std::string part;
        while (std::getline(in, part, ','))
            n.blocks.push_back(static_cast<int>(scene_int(part, line)));
        if (!n.blocks.empty() && body.back() != ',') {
            n.validate();
            return n;
        }
    }
    scene_fail(line, "malformed object '" + tok + "', expected [0] or [(n1,n2,...)]");
}

// <cell> full | <cell> collapse | <cell> keep i j ...
inline PolyRef parse_polyref(const LambdaObject& ambient, const std::vector<std::string>& toks,
                             size_t from, size_t line) {
    if (toks.size() < from + 2) scene_fail(line, "expected '<cell> full|collapse|keep ...'");
    PolyRef r;
    r.ambient = ambient;
    r.cell = scene_index(toks[from], line);
    const std::string& mode = toks[from + 1];
    if (mode == "full") {
        r.kept.resize(ambient.weight());
        std::iota(r.kept.begin(), r.kept.end(), 0);
        if (toks.size() != from + 2) scene_fail(line, "unexpected tokens after 'full'");
    } else if (mode == "collapse") {
        if (toks.size() != from + 2) scene_fail(line, "unexpected tokens after 'collapse'");
    } else if (mode == "keep") {
        for (size_t i = from + 2; i < toks.size(); ++i)
            r.kept.push_back(static_cast<int>(scene_int(toks[i], line)));
    } else {
        scene_fail(line, "unknown poly mode '" + mode + "'");
    }
    return r;
}

inline std::string polyref_spec(const PolyRef& r) {
    std::string s = std::to_string(r.cell);
    if (static_cast<int>(r.kept.size()) == r.ambient.weight()) {
        bool standard = true;
        for (size_t i = 0; i < r.kept.size(); ++i)
            if (r.kept[i] != static_cast<int>(i)) standard = false;
        if (standard) return s + " full";
    }
    if (r.kept.empty()) return s + " collapse";
    s += " keep";
    for (int k : r.kept) s += " " + std::to_string(k);
    return s;
}

class SceneParser {
  public:
    explicit SceneParser(const std::string& text) : lines_(scene_lines(text)) {}

    Scene parse() {
        while (pos_ < lines_.size()) {
            const SceneLine& l = lines_[pos_];
            const std::string& kw = l.tokens[0];
            if (kw == "monoid") parse_monoid();
            else if (kw == "map") parse_map();
            else if (kw == "logpoint") parse_logpoint();
            else if (kw == "fiber") parse_fiber();
            else if (kw == "chart") parse_chart();
            else if (kw == "piece") parse_piece();
            else if (kw == "descent") parse_descent();
            else if (kw == "complex") parse_complex();
            else if (kw == "morphism") parse_morphism();
            else if (kw == "action") parse_action();
            else if (kw == "tower") parse_tower();
            else scene_fail(l.no, "unknown entity kind '" + kw + "'");
        }
        return std::move(scene_);
    }

  private:
    Scene scene_;
    std::vector<SceneLine> lines_;
    size_t pos_ = 0;

    const SceneLine& cur() const { return lines_[pos_]; }

    // opening line of an entity: returns its id and advances
    std::string open(const std::string& kind, size_t min_tokens) {
        const SceneLine& l = cur();
        if (l.tokens.size() < min_tokens)
            scene_fail(l.no, "truncated " + kind + " declaration");
        check_identifier(l.tokens[1], l.no);
        ++pos_;
        return l.tokens[1];
    }

    // next body line of a block entity, or null at the closing 'end'
    const SceneLine* body(const std::string& kind, size_t start) {
        if (pos_ >= lines_.size())
            scene_fail(start, "missing 'end' for " + kind + " block");
        const SceneLine& l = cur();
        ++pos_;
        if (l.tokens.size() == 1 && l.tokens[0] == "end") return nullptr;
        return &l;
    }

    template <class M>
    void store(M& reg, const std::string& kind, const std::string& id, size_t line,
               typename M::mapped_type value) {
        if (!reg.emplace(id, std::move(value)).second)
            scene_fail(line, "duplicate " + kind + " '" + id + "'");
    }

    template <class M>
    const typename M::mapped_type& ref(const M& reg, const std::string& kind,
                                       const std::string& id, size_t line) const {
        auto it = reg.find(id);
        if (it == reg.end()) scene_fail(line, "unknown " + kind + " '" + id + "'");
        return it->second;
    }

    // rethrows construction failures with the entity name and line attached
    template <class F>
    auto build(const std::string& kind, const std::string& id, size_t line, F f) {
        try {
            return f();
        } catch (const Error& e) {
            throw Error(e.kind(),
                        "in " + kind + " '" + id + "' (line " + std::to_string(line) + "): " +
                            e.what());
        }
    }

    Vec parse_vec(const std::vector<std::string>& toks, size_t from, size_t line) {
        Vec v;
        for (size_t i = from; i < toks.size(); ++i) v.push_back(scene_int(toks[i], line));
        return v;
    }

    void parse_monoid() {
        size_t start = cur().no;
        std::string id = open("monoid", 4);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] == "standard") {
            const PolystableChart& c = ref(scene_.charts, "chart", t[3], start);
            store(scene_.monoids, "monoid", id, start, standard_monoid(c));
            return;
        }
        if (t[2] != "dim") scene_fail(start, "expected 'dim <n>' or 'standard <chart>'");
        size_t dim = scene_index(t[3], start);
        Mat gens;
        while (const SceneLine* l = body("monoid", start)) {
            if (l->tokens[0] != "gen") scene_fail(l->no, "expected 'gen <ints>' or 'end'");
            Vec row = parse_vec(l->tokens, 1, l->no);
            if (row.size() != dim)
                scene_fail(l->no, "generator has " + std::to_string(row.size()) +
                                      " coordinates, monoid is " + std::to_string(dim) +
                                      "-dimensional");
            gens.push_back(std::move(row));
        }
        store(scene_.monoids, "monoid", id, start,
              build("monoid", id, start, [&] { return AffineMonoid(dim, gens); }));
    }

    void parse_map() {
        size_t start = cur().no;
        std::string id = open("map", 4);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] == "identity") {
            const AffineMonoid& m = ref(scene_.monoids, "monoid", t[3], start);
            store(scene_.maps, "map", id, start, MonoidMap::identity(m));
            return;
        }
        if (t[2] == "standard-structure") {
            const PolystableChart& c = ref(scene_.charts, "chart", t[3], start);
            store(scene_.maps, "map", id, start,
                  build("map", id, start, [&] { return standard_structure(c); }));
            return;
        }
        if (t.size() < 6 || t[2] != "source" || t[4] != "target")
            scene_fail(start, "expected 'source <monoid> target <monoid>'");
        const AffineMonoid& src = ref(scene_.monoids, "monoid", t[3], start);
        const AffineMonoid& dst = ref(scene_.monoids, "monoid", t[5], start);
        Mat rows;
        while (const SceneLine* l = body("map", start)) {
            if (l->tokens[0] != "row") scene_fail(l->no, "expected 'row <ints>' or 'end'");
            rows.push_back(parse_vec(l->tokens, 1, l->no));
        }
        store(scene_.maps, "map", id, start,
              build("map", id, start, [&] { return MonoidMap(src, dst, rows); }));
    }

    void parse_logpoint() {
        size_t start = cur().no;
        std::string id = open("logpoint", 4);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] != "monoid") scene_fail(start, "expected 'monoid <id>'");
        const AffineMonoid& m = ref(scene_.monoids, "monoid", t[3], start);
        store(scene_.logpoints, "logpoint", id, start,
              build("logpoint", id, start, [&] { return LogPointChart(m); }));
    }

    void parse_fiber() {
        size_t start = cur().no;
        std::string id = open("fiber", 8);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] != "base" || t[4] != "total" || t[6] != "structure")
            scene_fail(start, "expected 'base <logpoint> total <monoid> structure <map>'");
        const LogPointChart& b = ref(scene_.logpoints, "logpoint", t[3], start);
        const AffineMonoid& m = ref(scene_.monoids, "monoid", t[5], start);
        const MonoidMap& s = ref(scene_.maps, "map", t[7], start);
        store(scene_.fibers, "fiber", id, start,
              build("fiber", id, start, [&] { return FiberChartDatum(b, m, s); }));
    }

    void parse_chart() {
        size_t start = cur().no;
        std::string id = open("chart", 4);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] != "base") scene_fail(start, "expected 'base <monoid>'");
        const AffineMonoid& base = ref(scene_.monoids, "monoid", t[3], start);
        std::vector<PolystableChart::Block> blocks;
        while (const SceneLine* l = body("chart", start)) {
            if (l->tokens[0] != "block" || l->tokens.size() < 2)
                scene_fail(l->no, "expected 'block <length> <base element>' or 'end'");
            PolystableChart::Block b;
            b.length = static_cast<int>(scene_int(l->tokens[1], l->no));
            b.a = parse_vec(l->tokens, 2, l->no);
            blocks.push_back(std::move(b));
        }
        store(scene_.charts, "chart", id, start,
              build("chart", id, start, [&] { return PolystableChart(base, blocks); }));
    }

    void parse_piece() {
        size_t start = cur().no;
        std::string id = open("piece", 2);
        std::vector<PolystableChart> charts;
        std::optional<MonoidMap> covering;
        std::vector<I64> primes;
        while (const SceneLine* l = body("piece", start)) {
            const std::string& kw = l->tokens[0];
            if (kw == "chart" && l->tokens.size() == 2) {
                charts.push_back(ref(scene_.charts, "chart", l->tokens[1], l->no));
            } else if (kw == "covering" && l->tokens.size() == 2) {
                covering = ref(scene_.maps, "map", l->tokens[1], l->no);
            } else if (kw == "primes") {
                for (size_t i = 1; i < l->tokens.size(); ++i)
                    primes.push_back(scene_int(l->tokens[i], l->no));
            } else {
                scene_fail(l->no, "expected 'chart', 'covering', 'primes' or 'end'");
            }
        }
        if (charts.empty()) scene_fail(start, "piece '" + id + "' has no charts");
        store(scene_.pieces, "piece", id, start, build("piece", id, start, [&] {
                  MonoidMap cov =
                      covering ? *covering : trivial_covering(standard_monoid(charts.back()));
                  return KetPieceDatum(charts, cov, primes);
              }));
    }

    void parse_descent() {
        size_t start = cur().no;
        std::string id = open("descent", 2);
        std::vector<KetPieceDatum> pieces;
        std::vector<DescentOverlap> overlaps;
        std::vector<Complex> overlap_complexes;
        while (const SceneLine* l = body("descent", start)) {
            const std::string& kw = l->tokens[0];
            if (kw == "piece" && l->tokens.size() == 2) {
                if (!overlaps.empty())
                    scene_fail(l->no, "piece lines must precede overlap lines");
                pieces.push_back(ref(scene_.pieces, "piece", l->tokens[1], l->no));
            } else if (kw == "overlap" && l->tokens.size() == 4) {
                const KetPieceDatum& p = ref(scene_.pieces, "piece", l->tokens[3], l->no);
                overlap_complexes.push_back(
                    build("descent", id, l->no, [&] { return c_of_piece(p); }));
                overlaps.push_back(DescentOverlap{scene_index(l->tokens[1], l->no),
                                                  scene_index(l->tokens[2], l->no), p, {}, {}});
            } else if ((kw == "first" || kw == "second") && !overlaps.empty()) {
                DescentOverlap& o = overlaps.back();
                const Complex& oc = overlap_complexes.back();
                auto& side = kw == "first" ? o.to_first : o.to_second;
                if (side.size() >= oc.cell_count())
                    scene_fail(l->no, "more '" + kw + "' lines than overlap cells");
                side.push_back(
                    parse_polyref(oc.cell_type(side.size()), l->tokens, 1, l->no));
            } else {
                scene_fail(l->no, "expected 'piece', 'overlap', 'first', 'second' or 'end'");
            }
        }
        store(scene_.descents, "descent", id, start, build("descent", id, start, [&] {
                  return DescentDatum(pieces, overlaps);
              }));
    }

    void parse_complex() {
        size_t start = cur().no;
        std::string id = open("complex", 3);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        const std::string& form = t[2];
        if (form == "point") {
            store(scene_.complexes, "complex", id, start, Complex::point());
        } else if (form == "representable" && t.size() == 4) {
            LambdaObject n = parse_lambda(t[3], start);
            store(scene_.complexes, "complex", id, start,
                  build("complex", id, start, [&] { return Complex::representable(n); }));
        } else if (form == "box" && t.size() == 5) {
            const Complex& a = ref(scene_.complexes, "complex", t[3], start);
            const Complex& b = ref(scene_.complexes, "complex", t[4], start);
            store(scene_.complexes, "complex", id, start,
                  build("complex", id, start, [&] { return box_product(a, b); }));
        } else if (form == "union" && t.size() == 5) {
            const Complex& a = ref(scene_.complexes, "complex", t[3], start);
            const Complex& b = ref(scene_.complexes, "complex", t[4], start);
            store(scene_.complexes, "complex", id, start,
                  build("complex", id, start, [&] { return disjoint_union(a, b); }));
        } else if (form == "glue" && t.size() == 4) {
            const DescentDatum& d = ref(scene_.descents, "descent", t[3], start);
            store(scene_.complexes, "complex", id, start,
                  build("complex", id, start, [&] { return c_global(d).complex; }));
        } else if (form == "piece" && t.size() == 4) {
            const KetPieceDatum& p = ref(scene_.pieces, "piece", t[3], start);
            store(scene_.complexes, "complex", id, start,
                  build("complex", id, start, [&] { return c_of_piece(p); }));
        } else if (form == "raw") {
            parse_raw_complex(id, start);
        } else {
            scene_fail(start, "unknown complex form '" + form + "'");
        }
    }

    // cell lines fix the types; att lines give, per cell and per injection
    // key, the attached poly of the target cell
    void parse_raw_complex(const std::string& id, size_t start) {
        std::vector<Complex::CellData> cells;
        std::vector<std::map<std::string, PolyRef>> att;
        std::vector<std::map<std::string, LambdaObject>> keys;
        while (const SceneLine* l = body("complex", start)) {
            const std::string& kw = l->tokens[0];
            if (kw == "cell" && l->tokens.size() == 2) {
                if (!att.empty() && !att.back().empty())
                    scene_fail(l->no, "cell lines must precede att lines");
                LambdaObject n = parse_lambda(l->tokens[1], l->no);
                cells.push_back({n, "c" + std::to_string(cells.size())});
                att.emplace_back();
                std::map<std::string, LambdaObject> by_key;
                std::string idk = LambdaMorphism::identity(n).key();
                for (const LambdaMorphism& io : injections_into(n))
                    if (io.key() != idk) by_key.emplace(io.key(), io.source);
                keys.push_back(std::move(by_key));
            } else if (kw == "att" && l->tokens.size() >= 5) {
                size_t cell = scene_index(l->tokens[1], l->no);
                if (cell >= cells.size()) scene_fail(l->no, "att cell index out of range");
                auto it = keys[cell].find(l->tokens[2]);
                if (it == keys[cell].end())
                    scene_fail(l->no, "'" + l->tokens[2] + "' is not an injection into " +
                                          cells[cell].type.to_string());
                PolyRef r = parse_polyref(it->second, l->tokens, 3, l->no);
                if (!att[cell].emplace(l->tokens[2], std::move(r)).second)
                    scene_fail(l->no, "duplicate attachment for '" + l->tokens[2] + "'");
            } else {
                scene_fail(l->no, "expected 'cell', 'att' or 'end'");
            }
        }
        store(scene_.complexes, "complex", id, start, build("complex", id, start, [&] {
                  return Complex(cells, att);
              }));
    }

    void parse_morphism() {
        size_t start = cur().no;
        std::string id = open("morphism", 4);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] == "identity") {
            const Complex& c = ref(scene_.complexes, "complex", t[3], start);
            store(scene_.morphisms, "morphism", id, start, ComplexMorphism::identity(c));
            return;
        }
        if (t.size() < 6 || t[2] != "source" || t[4] != "target")
            scene_fail(start, "expected 'source <complex> target <complex>'");
        const Complex& src = ref(scene_.complexes, "complex", t[3], start);
        const Complex& dst = ref(scene_.complexes, "complex", t[5], start);
        std::vector<PolyRef> images;
        while (const SceneLine* l = body("morphism", start)) {
            if (l->tokens[0] != "to")
                scene_fail(l->no, "expected 'to <cell> full|collapse|keep ...' or 'end'");
            if (images.size() >= src.cell_count())
                scene_fail(l->no, "more 'to' lines than source cells");
            images.push_back(parse_polyref(src.cell_type(images.size()), l->tokens, 1, l->no));
        }
        if (images.size() != src.cell_count())
            scene_fail(start, "morphism '" + id + "' needs one 'to' line per source cell (" +
                                  std::to_string(src.cell_count()) + ")");
        store(scene_.morphisms, "morphism", id, start, build("morphism", id, start, [&] {
                  return ComplexMorphism(src, dst, images);
              }));
    }

    void parse_action() {
        size_t start = cur().no;
        std::string id = open("action", 6);
        const std::vector<std::string>& t = lines_[pos_ - 1].tokens;
        if (t[2] != "complex" || t[4] != "degree")
            scene_fail(start, "expected 'complex <id> degree <n>'");
        const Complex& c = ref(scene_.complexes, "complex", t[3], start);
        size_t degree = scene_index(t[5], start);
        std::vector<std::vector<int>> perms;
        std::vector<ComplexMorphism> gens;
        while (const SceneLine* l = body("action", start)) {
            if (l->tokens[0] != "generator" || l->tokens.size() != degree + 3 ||
                l->tokens[degree + 1] != "morphism")
                scene_fail(l->no, "expected 'generator <" + std::to_string(degree) +
                                      " ints> morphism <id>' or 'end'");
            std::vector<int> p;
            for (size_t i = 1; i <= degree; ++i)
                p.push_back(static_cast<int>(scene_int(l->tokens[i], l->no)));
            perms.push_back(std::move(p));
            gens.push_back(ref(scene_.morphisms, "morphism", l->tokens[degree + 2], l->no));
        }
        store(scene_.actions, "action", id, start, build("action", id, start, [&] {
                  return GaloisActionDatum::from_generators(c, static_cast<int>(degree), perms,
                                                            gens);
              }));
    }

    // genmap entries give the image of each generator of the finer group as
    // a coarse element: 'id', 'g<k>' for the k-th coarse generator, or a
    // plain element index; the map extends along the stored words
    std::vector<size_t> parse_genmap(const PermGroup& fine, const PermGroup& coarse,
                                     const std::vector<std::string>& toks, size_t from,
                                     size_t line) {
        std::vector<size_t> gen_images;
        for (size_t i = from; i < toks.size(); ++i) {
            const std::string& tok = toks[i];
            size_t e = 0;
            if (tok == "id") {
                e = coarse.identity();
            } else if (tok.size() > 1 && tok[0] == 'g') {
                size_t k = scene_index(tok.substr(1), line);
                if (k >= coarse.gen_index.size())
                    scene_fail(line, "coarse group has no generator '" + tok + "'");
                e = coarse.gen_index[k];
            } else {
                e = scene_index(tok, line);
                if (e >= coarse.size()) scene_fail(line, "element index out of range");
            }
            gen_images.push_back(e);
        }
        if (gen_images.size() != fine.gen_index.size())
            scene_fail(line, "genmap needs one entry per finer-group generator (" +
                                 std::to_string(fine.gen_index.size()) + ")");
        std::vector<size_t> out(fine.size(), coarse.identity());
        for (size_t e = 0; e < fine.size(); ++e) {
            size_t acc = coarse.identity();
            for (size_t l : fine.words[e]) acc = coarse.mul(acc, gen_images.at(l));
            out[e] = acc;
        }
        return out;
    }

    void parse_tower() {
        size_t start = cur().no;
        std::string id = open("tower", 2);
        SceneTower tw;
        while (const SceneLine* l = body("tower", start)) {
            const std::string& kw = l->tokens[0];
            if (kw == "level" && l->tokens.size() == 4) {
                const Complex& c = ref(scene_.complexes, "complex", l->tokens[1], l->no);
                const GaloisActionDatum& a = ref(scene_.actions, "action", l->tokens[2], l->no);
                size_t base = scene_index(l->tokens[3], l->no);
                tw.levels.push_back({c, a, base});
            } else if (kw == "connect" && l->tokens.size() >= 3 && l->tokens[2] == "genmap") {
                if (tw.levels.size() < 2)
                    scene_fail(l->no, "connect line before its two levels");
                if (tw.connections.size() + 2 != tw.levels.size())
                    scene_fail(l->no, "each connect line must follow the level it refines");
                const ComplexMorphism& m =
                    ref(scene_.morphisms, "morphism", l->tokens[1], l->no);
                const PermGroup& fine = tw.levels.back().action.group;
                const PermGroup& coarse = tw.levels[tw.levels.size() - 2].action.group;
                tw.connections.push_back(
                    {m, parse_genmap(fine, coarse, l->tokens, 3, l->no)});
            } else {
                scene_fail(l->no, "expected 'level', 'connect' or 'end'");
            }
        }
        if (tw.levels.empty()) scene_fail(start, "tower '" + id + "' has no levels");
        if (tw.connections.size() + 1 != tw.levels.size())
            scene_fail(start, "tower '" + id + "' is missing a connect line");
        store(scene_.towers, "tower", id, start, std::move(tw));
    }
};

} // namespace detail

inline Scene parse_scene(const std::string& text) {
    return detail::SceneParser(text).parse();
}

// Re-parsable listing of a complex; parse_scene applied to the result
// reproduces an equal complex under the given name.
inline std::string complex_scene_text(const std::string& id, const Complex& c) {
    std::string s = "complex " + id + " raw\n";
    for (size_t i = 0; i < c.cell_count(); ++i)
        s += "  cell " + c.cell_type(i).to_string() + "\n";
    for (size_t i = 0; i < c.cell_count(); ++i)
        for (const auto& [key, ref] : c.attachments(i))
            s += "  att " + std::to_string(i) + " " + key + " " + detail::polyref_spec(ref) +
                 "\n";
    s += "end\n";
    return s;
}

struct RunOptions {
    std::optional<size_t> bound;
    std::vector<I64> primes;
    unsigned long long seed = 0; // reserved; no command draws randomness
};

struct RunResult {
    int status = 0; // 0 success, 2 rejected input, 3 undecided or out of budget
    std::string report;
    std::vector<std::pair<std::string, std::string>> artifacts;
};

inline int status_for(ErrorKind k) {
    return k == ErrorKind::undecided || k == ErrorKind::resource ? 3 : 2;
}

namespace detail {

inline std::string yesno(bool b) { return b ? "yes" : "no"; }

inline size_t command_index(const std::string& tok) {
    size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(tok, &used);
    } catch (const std::exception&) {
        used = tok.size() + 1;
    }
    if (used != tok.size())
        fail_validation("expected a nonnegative integer argument, got '" + tok + "'");
    return static_cast<size_t>(v);
}

inline std::string artifact_stem(const std::vector<std::string>& args) {
    std::string s;
    for (const std::string& a : args) {
        if (!s.empty()) s += '-';
        for (char c : a)
            s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
                         c == '-'
                     ? c
                     : '_';
    }
    return s;
}

template <class M>
const typename M::mapped_type& named(const M& reg, const std::string& kind,
                                     const std::string& id) {
    auto it = reg.find(id);
    if (it == reg.end()) fail_validation("unknown " + kind + " '" + id + "'");
    return it->second;
}

// face spec over a monoid: '-' for the smallest face, else comma-separated
// generator indices
inline Face parse_face(const AffineMonoid& m, const std::string& spec) {
    if (spec == "-") return m.units_face();
    std::vector<size_t> idx;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(part, &used);
        } catch (const std::exception&) {
            used = part.size() + 1;
        }
        if (used != part.size())
            fail_validation("malformed face spec '" + spec +
                            "', expected '-' or comma-separated generator indices");
        idx.push_back(v);
    }
    return m.face(idx);
}

inline void run_monoid_analyze(const Scene& s, const std::vector<std::string>& args,
                               RunResult& out) {
    const AffineMonoid& m = named(s.monoids, "monoid", args[2]);
    std::string& r = out.report;
    r += "ambient-dim: " + std::to_string(m.ambient_dim()) + "\n";
    r += "generators: " + std::to_string(m.generators().size()) + "\n";
    r += "envelope-rank: " + std::to_string(m.group_envelope().rank()) + "\n";
    r += "units-rank: " + std::to_string(m.units().rank()) + "\n";
    r += "sharp: " + yesno(m.is_sharp()) + "\n";
    r += "saturated: " + yesno(m.is_saturated()) + "\n";
    FacePoset fp = m.face_poset();
    r += "faces: " + std::to_string(fp.faces.size()) + "\n";
    std::vector<std::string> labels;
    for (size_t i = 0; i < fp.faces.size(); ++i) {
        labels.push_back(fp.faces[i].to_string());
        r += "face " + std::to_string(i) + ": " + labels.back() + "\n";
    }
    for (auto [lo, hi] : fp.order.covers())
        r += "cover: " + std::to_string(lo) + " < " + std::to_string(hi) + "\n";
    out.artifacts.emplace_back(artifact_stem(args) + ".dot",
                               poset_dot("faces of " + args[2], fp.order, labels));
}

inline void run_map_classify(const Scene& s, const std::vector<std::string>& args,
                             const RunOptions& opt, RunResult& out) {
    const MonoidMap& h = named(s.maps, "map", args[2]);
    Classification c = classify_map(h, opt.bound, opt.primes);
    std::string& r = out.report;
    r += "bound: " + std::to_string(c.bound) + "\n";
    std::string ps;
    for (I64 p : c.primes) ps += (ps.empty() ? "" : ",") + std::to_string(p);
    r += "primes: " + (ps.empty() ? "(none)" : ps) + "\n";
    r += "local: " + c.local.to_string() + "\n";
    r += "exact: " + c.exact.to_string() + "\n";
    r += "kummer: " + c.kummer.to_string() + "\n";
    r += "l-kummer: " + c.l_kummer.to_string() + "\n";
    r += "integral: " + c.integral.to_string() + "\n";
    r += "saturated: " + c.saturated.to_string() + "\n";
    for (const Verdict* v : {&c.local, &c.exact, &c.kummer, &c.l_kummer, &c.integral,
                             &c.saturated})
        if (v->status == Status::undecided) out.status = 3;
}

inline void report_o_poset(const Complex& c, const std::string& name, RunResult& out,
                           const std::string& dot_name) {
    CellPoset cp = c.cell_poset();
    std::string& r = out.report;
    r += "o-poset-size: " + std::to_string(cp.order.size()) + "\n";
    for (size_t i = 0; i < cp.members.size(); ++i) {
        r += "class " + std::to_string(i) + ": " + cp.labels[i] + " cells";
        for (size_t m : cp.members[i]) r += " " + std::to_string(m);
        r += "\n";
    }
    for (auto [lo, hi] : cp.order.covers())
        r += "cover: " + std::to_string(lo) + " < " + std::to_string(hi) + "\n";
    out.artifacts.emplace_back(dot_name, poset_dot(name, cp.order, cp.labels));
}

inline void run_poly(const Scene& s, const std::vector<std::string>& args, RunResult& out) {
    const std::string& sub = args[1];
    const Complex& c = named(s.complexes, "complex", args[2]);
    if (sub == "o-poset") {
        report_o_poset(c, "o-poset of " + args[2], out, artifact_stem(args) + ".dot");
    } else if (sub == "interior-free") {
        out.report += "interiorly-free: " + yesno(c.is_interiorly_free()) + "\n";
    } else if (sub == "realize") {
        TwoSkeleton sk = two_skeleton(c);
        out.report += "skeleton: " + sk.to_string() + "\n";
        for (size_t e = 0; e < sk.edges.size(); ++e)
            out.report += "edge " + std::to_string(e) + ": " +
                          std::to_string(sk.edges[e].tail) + " -> " +
                          std::to_string(sk.edges[e].head) + "\n";
        for (size_t t = 0; t < sk.triangles.size(); ++t)
            out.report += "triangle " + std::to_string(t) + ": " +
                          std::to_string(sk.triangles[t].ab) + " " +
                          std::to_string(sk.triangles[t].bc) + " " +
                          std::to_string(sk.triangles[t].ac) + "\n";
        out.report += "h1-rank: " + std::to_string(h1_rank(sk)) + "\n";
        out.artifacts.emplace_back(artifact_stem(args) + ".dot",
                                   skeleton_dot("realization of " + args[2], sk));
    } else {
        fail_validation("unknown poly subcommand '" + sub + "'");
    }
}

inline void run_fibration_c(const Scene& s, const std::vector<std::string>& args,
                            RunResult& out) {
    const std::string& id = args[2];
    Complex c;
    if (auto it = s.descents.find(id); it != s.descents.end()) {
        c = c_global(it->second).complex;
        out.report += "source: descent datum\n";
    } else if (auto ji = s.pieces.find(id); ji != s.pieces.end()) {
        c = c_of_piece(ji->second);
        out.report += "source: piece over its closed point\n";
    } else {
        fail_validation("unknown descent or piece '" + id + "'");
    }
    out.report += "cells: " + std::to_string(c.cell_count()) + "\n";
    out.report += "interiorly-free: " + yesno(c.is_interiorly_free()) + "\n";
    report_o_poset(c, "o-poset of " + id, out, artifact_stem(args) + ".dot");
    out.report += "complex:\n" + c.to_string();
    out.artifacts.emplace_back(artifact_stem(args) + ".scene",
                               complex_scene_text(id + "_c", c));
}

inline void run_strata_cospec(const Scene& s, const std::vector<std::string>& args,
                              RunResult& out) {
    const std::string& id = args[2];
    std::optional<MonoidMap> family;
    if (auto it = s.maps.find(id); it != s.maps.end()) family = it->second;
    else if (auto jt = s.charts.find(id); jt != s.charts.end())
        family = standard_structure(jt->second);
    else fail_validation("unknown map or chart '" + id + "'");
    Face special = parse_face(family->source(), args[3]);
    Face generic = parse_face(family->source(), args[4]);
    Cospecialization co = cospecialize_strata(*family, special, generic);
    out.report += "special-strata: " + std::to_string(co.special.strata.size()) + "\n";
    out.report += "generic-strata: " + std::to_string(co.generic.strata.size()) + "\n";
    for (size_t i = 0; i < co.map.size(); ++i)
        out.report += "map: " + std::to_string(i) + " -> " + std::to_string(co.map[i]) + "\n";
    out.report += co.to_string();
    auto labels = [](const StrataPoset& p) {
        std::vector<std::string> ls;
        for (const Face& f : p.strata) ls.push_back(f.to_string());
        return ls;
    };
    out.artifacts.emplace_back(
        artifact_stem(args) + ".dot",
        paired_poset_dot("cospecialization of " + id, co.special.order, labels(co.special),
                         co.generic.order, labels(co.generic), co.map));
}

inline void run_pi1(const Scene& s, const std::vector<std::string>& args, RunResult& out) {
    const Complex& c = named(s.complexes, "complex", args[1]);
    size_t basepoint = args.size() > 2 ? command_index(args[2]) : 0;
    TwoSkeleton sk = two_skeleton(c);
    GroupPresentation p = pi1_presentation(sk, basepoint);
    out.report += "skeleton: " + sk.to_string() + "\n";
    out.report += "presentation: " + p.to_string() + "\n";
    out.report += "generators: " + std::to_string(p.generators.size()) + "\n";
    out.report += "relators: " + std::to_string(p.relators.size()) + "\n";
    out.report += "free: " + yesno(p.is_free()) + "\n";
    lin::QuotientShape ab = p.abelian_invariants();
    std::string tor;
    for (auto t : ab.torsion) tor += (tor.empty() ? "" : ",") + std::to_string(t);
    out.report += "abelianization: free rank " + std::to_string(ab.free_rank) + ", torsion " +
                  (tor.empty() ? "(none)" : tor) + "\n";
    out.report += "h1-rank: " + std::to_string(h1_rank(sk)) + "\n";
    out.artifacts.emplace_back(artifact_stem(args) + ".dot",
                               skeleton_dot("realization of " + args[1], sk));
}

inline void report_extension(const ExtensionPresentation& e, RunResult& out) {
    out.report += "group-order: " + std::to_string(e.group.size()) + "\n";
    out.report += "generators: " + std::to_string(e.pi.generators.size()) + "\n";
    out.report += "relators: " + std::to_string(e.pi.relators.size()) + "\n";
    out.report += "kernel-rank: " + std::to_string(e.kernel_rank()) + "\n";
    out.report += "hash: " + presentation_hash(e.pi) + "\n";
    out.report += "presentation: " + e.pi.to_string() + "\n";
    for (size_t k = 0; k < e.kernel_generators.size(); ++k)
        out.report += "kernel " + std::to_string(k) + ": " +
                      word_text(e.pi, e.kernel_generators[k]) + "\n";
    for (size_t g = 0; g < e.pi.generators.size(); ++g)
        out.report += "quotient " + e.pi.generators[g] + ": element " +
                      std::to_string(e.quotient[g]) + "\n";
}

inline void run_tempered_lift(const Scene& s, const std::vector<std::string>& args,
                              RunResult& out) {
    const Complex& c = named(s.complexes, "complex", args[2]);
    const GaloisActionDatum& a = named(s.actions, "action", args[3]);
    size_t basepoint = args.size() > 4 ? command_index(args[4]) : 0;
    ExtensionPresentation ext = lift_extension(c, a, basepoint);
    report_extension(ext, out);
    if (ext.group.size() <= 24) {
        size_t idx = verify_exact(ext);
        out.report += "exactness: certified, kernel index " + std::to_string(idx) + "\n";
    } else {
        out.report += "exactness: enumeration skipped (group order " +
                      std::to_string(ext.group.size()) + " above 24)\n";
    }
}

inline void run_tempered_tower(const Scene& s, const std::vector<std::string>& args,
                               RunResult& out) {
    const SceneTower& st = named(s.towers, "tower", args[2]);
    TemperedTower tw = build_tower(st.levels, st.connections);
    out.report += "levels: " + std::to_string(tw.levels.size()) + "\n";
    out.report += tw.report();
    std::vector<std::string> level_labels, conn_labels;
    for (size_t i = 0; i < tw.levels.size(); ++i) {
        const ExtensionPresentation& e = tw.levels[i].extension;
        out.report += "level " + std::to_string(i) + " presentation: " + e.pi.to_string() +
                      "\n";
        level_labels.push_back("level " + std::to_string(i) + "\\n|G|=" +
                               std::to_string(e.group.size()));
    }
    for (size_t i = 0; i < tw.connections.size(); ++i) {
        const GroupPresentation& below = tw.levels[i].extension.pi;
        const auto& ind = tw.connections[i].induced;
        for (size_t g = 0; g < ind.size(); ++g)
            out.report += "connection " + std::to_string(i) + " " +
                          tw.levels[i + 1].extension.pi.generators[g] + " -> " +
                          word_text(below, ind[g]) + "\n";
        conn_labels.push_back(std::to_string(ind.size()) + " generators");
    }
    out.artifacts.emplace_back(artifact_stem(args) + ".dot",
                               tower_dot(args[2], level_labels, conn_labels));
}

inline void run_tempered_cospec(const Scene& s, const std::vector<std::string>& args,
                                RunResult& out) {
    const SceneTower& sfrom = named(s.towers, "tower", args[2]);
    const SceneTower& sto = named(s.towers, "tower", args[3]);
    std::vector<ComplexMorphism> per_level;
    for (size_t i = 4; i < args.size(); ++i)
        per_level.push_back(named(s.morphisms, "morphism", args[i]));
    TemperedTower from = build_tower(sfrom.levels, sfrom.connections);
    TemperedTower to = build_tower(sto.levels, sto.connections);
    TowerCospecialization co = cospecialize_tower(from, to, per_level);
    out.report += "levels: " + std::to_string(co.maps.size()) + "\n";
    for (size_t i = 0; i < co.maps.size(); ++i) {
        out.report += "level " + std::to_string(i) + " iso: " +
                      yesno(co.level_iso[i] != 0) + "\n";
        const GroupPresentation& fine = from.levels[i].extension.pi;
        const GroupPresentation& coarse = to.levels[i].extension.pi;
        for (size_t g = 0; g < co.maps[i].size(); ++g)
            out.report += "level " + std::to_string(i) + " " + fine.generators[g] + " -> " +
                          word_text(coarse, co.maps[i][g]) + "\n";
    }
    out.report += "all-iso: " + yesno(co.all_iso()) + "\n";
}

inline void dispatch(const Scene& s, const std::vector<std::string>& args,
                     const RunOptions& opt, RunResult& out) {
    auto need = [&](size_t n) {
        if (args.size() < n) fail_validation("command is missing arguments");
    };
    need(1);
    const std::string& cmd = args[0];
    if (cmd == "monoid") {
        need(3);
        if (args[1] != "analyze")
            fail_validation("unknown monoid subcommand '" + args[1] + "'");
        run_monoid_analyze(s, args, out);
    } else if (cmd == "map") {
        need(3);
        if (args[1] != "classify")
            fail_validation("unknown map subcommand '" + args[1] + "'");
        run_map_classify(s, args, opt, out);
    } else if (cmd == "poly") {
        need(3);
        run_poly(s, args, out);
    } else if (cmd == "fibration") {
        need(3);
        if (args[1] != "c") fail_validation("unknown fibration subcommand '" + args[1] + "'");
        run_fibration_c(s, args, out);
    } else if (cmd == "strata") {
        need(5);
        if (args[1] != "cospec")
            fail_validation("unknown strata subcommand '" + args[1] + "'");
        run_strata_cospec(s, args, out);
    } else if (cmd == "pi1") {
        need(2);
        run_pi1(s, args, out);
    } else if (cmd == "tempered") {
        need(3);
        if (args[1] == "lift") {
            need(4);
            run_tempered_lift(s, args, out);
        } else if (args[1] == "tower") {
            run_tempered_tower(s, args, out);
        } else if (args[1] == "cospec") {
            need(4);
            run_tempered_cospec(s, args, out);
        } else {
            fail_validation("unknown tempered subcommand '" + args[1] + "'");
        }
    } else {
        fail_validation("unknown command '" + cmd + "'");
    }
}

} // namespace detail

inline RunResult run_command(const Scene& scene, const std::vector<std::string>& args,
                             const RunOptions& opt = {}) {
    RunResult out;
    std::string header = "command:";
    for (const std::string& a : args) header += " " + a;
    out.report = header + "\n";
    try {
        detail::dispatch(scene, args, opt, out);
    } catch (const Error& e) {
        out.status = status_for(e.kind());
        out.report += "error: " + std::string(e.what()) + "\n";
        out.artifacts.clear();
        return out;
    }
    out.artifacts.emplace_back(detail::artifact_stem(args) + ".txt", out.report);
    return out;
}

} // namespace polystrata
