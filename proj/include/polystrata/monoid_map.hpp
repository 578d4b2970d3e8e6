#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polystrata/monoid.hpp"

namespace polystrata {

// Outcome of a (possibly bounded) decision procedure. The brute-force
// criteria quantify over all monoid elements, so a search that runs out of
// room reports *_at_bound or undecided instead of guessing.
enum class Status { yes, no, yes_at_bound, no_at_bound, undecided };

struct Verdict {
    Status status = Status::undecided;
    size_t bound = 0;    // search bound behind the *_at_bound / undecided states
    std::string witness; // counterexample or short justification

    bool holds() const { return status == Status::yes || status == Status::yes_at_bound; }
    bool definitive() const { return status == Status::yes || status == Status::no; }

    std::string to_string() const {
        std::string s;
        switch (status) {
            case Status::yes: s = "yes"; break;
            case Status::no: s = "no"; break;
            case Status::yes_at_bound: s = "yes at bound " + std::to_string(bound); break;
            case Status::no_at_bound: s = "no at bound " + std::to_string(bound); break;
            case Status::undecided: s = "undecided at bound " + std::to_string(bound); break;
        }
        if (!witness.empty()) s += " [" + witness + "]";
        return s;
    }
};

inline Verdict verdict_yes(std::string note = "") { return {Status::yes, 0, std::move(note)}; }
inline Verdict verdict_no(std::string witness) { return {Status::no, 0, std::move(witness)}; }

class MonoidMap {
  public:
    // matrix has one row per target coordinate and one column per source
    // coordinate; v maps to matrix * v.
    MonoidMap(AffineMonoid source, AffineMonoid target, Mat matrix)
        : source_(std::move(source)), target_(std::move(target)), matrix_(std::move(matrix)) {
        require(matrix_.size() == target_.ambient_dim(), ErrorKind::validation,
                "map matrix needs one row per target coordinate");
        for (const auto& row : matrix_)
            require(row.size() == source_.ambient_dim(), ErrorKind::validation,
                    "map matrix needs one column per source coordinate");
        for (const auto& g : source_.generators())
            if (!target_.contains(apply(g)))
                fail_validation("generator " + lin::vec_to_string(g) +
                                " does not map into the target monoid");
    }

    static MonoidMap identity(const AffineMonoid& m) {
        return MonoidMap(m, m, lin::mat_identity(m.ambient_dim()));
    }

    const AffineMonoid& source() const { return source_; }
    const AffineMonoid& target() const { return target_; }
    const Mat& matrix() const { return matrix_; }

    Vec apply(const Vec& v) const { return lin::mat_apply(matrix_, v); }

    // Induced map of group envelopes in canonical bases: row i is the image
    // of the i-th source envelope basis vector, in target envelope
    // coordinates. Total on the envelope since generators land in the target.
    Mat envelope_matrix() const {
        Mat h;
        for (const auto& b : source_.group_envelope().basis) {
            auto c = target_.env_coords(apply(b));
            require(c.has_value(), ErrorKind::internal,
                    "envelope image escaped the target envelope");
            h.push_back(*c);
        }
        return h;
    }

  private:
    AffineMonoid source_, target_;
    Mat matrix_;
};

inline MonoidMap compose(const MonoidMap& outer, const MonoidMap& inner) {
    require(outer.source().same_submonoid(inner.target()), ErrorKind::validation,
            "composition needs the inner target to equal the outer source");
    return MonoidMap(inner.source(), outer.target(),
                     lin::mat_mul(outer.matrix(), inner.matrix()));
}

struct Classification {
    Verdict local, exact, kummer, l_kummer, integral, saturated;
    size_t bound = 0;       // element bound used by the brute-force criteria
    std::vector<I64> primes; // restriction set for the l_kummer flag
};

namespace detail {

// f is local when the only generators hitting target units are source units.
// Preimages of faces are faces and faces are spanned by the generators they
// contain, so the generator check is complete.
inline Verdict decide_local(const MonoidMap& h) {
    LatticeGroup punits = h.source().units();
    LatticeGroup qunits = h.target().units();
    for (const auto& g : h.source().generators()) {
        if (punits.contains(g)) continue;
        if (qunits.contains(h.apply(g)))
            return verdict_no("non-unit generator " + lin::vec_to_string(g) +
                              " maps to a unit");
    }
    return verdict_yes();
}

// Canonical generators of { x in source envelope : image in the target cone },
// in source envelope coordinates. This is the saturation of the exactness
// preimage; full-dimensional because it contains the source cone.
inline Mat exactness_hull_generators(const MonoidMap& h, size_t rp) {
    Mat hmat = h.envelope_matrix();
    Mat a_rows;
    for (const auto& phi : h.target().envelope_cone().facets) {
        Vec a = lin::mat_apply(hmat, phi);
        if (!lin::vec_is_zero(a)) a_rows.push_back(a);
    }
    if (a_rows.empty()) {
        Mat out;
        for (const auto& row : lin::mat_identity(rp)) {
            out.push_back(row);
            out.push_back(lin::vec_neg(row));
        }
        return out;
    }
    Mat lineality = lin::kernel_lattice(a_rows);
    auto split = lin::split_by(lineality, rp);
    Mat abar;
    for (const auto& a : a_rows) abar.push_back(lin::mat_apply(split.section, a));
    Mat cone_gens;
    for (const auto& row : lineality) {
        cone_gens.push_back(row);
        cone_gens.push_back(lin::vec_neg(row));
    }
    // extreme rays of { y : abar . y >= 0 } are the facets of cone(abar)
    for (const auto& r : cone::build_cone(abar, split.codim).facets)
        cone_gens.push_back(lin::vec_mat(r, split.section));
    return canonical_fs_generators(cone::build_cone(cone_gens, rp));
}

inline Verdict decide_exact(const MonoidMap& h, size_t bound) {
    const AffineMonoid& p = h.source();
    const AffineMonoid& q = h.target();
    size_t rp = p.group_envelope().rank();
    if (rp == 0) return verdict_yes();
    Mat hull = exactness_hull_generators(h, rp);
    std::vector<Vec> outside;
    for (const auto& k : hull)
        if (!p.contains_env(k)) outside.push_back(k);
    if (outside.empty()) return verdict_yes();
    auto ambient_image = [&](const Vec& env_coords) {
        return h.apply(p.ambient_from_env(env_coords));
    };
    for (const auto& k : outside)
        if (q.contains(ambient_image(k)))
            return verdict_no("preimage element " + lin::vec_to_string(p.ambient_from_env(k)) +
                              " lies outside the source");
    // The saturated hull sticks out of the source only at points whose images
    // miss the target monoid; scan the hull itself up to the bound.
    AffineMonoid hull_monoid(rp, hull);
    for (const auto& x : hull_monoid.elements_up_to(bound)) {
        if (p.contains_env(x)) continue;
        if (q.contains(ambient_image(x)))
            return verdict_no("preimage element " + lin::vec_to_string(p.ambient_from_env(x)) +
                              " lies outside the source");
    }
    return {Status::yes_at_bound, bound, ""};
}

inline Verdict decide_kummer(const MonoidMap& h) {
    const AffineMonoid& p = h.source();
    const AffineMonoid& q = h.target();
    size_t rp = p.group_envelope().rank();
    size_t rq = q.group_envelope().rank();
    Mat hmat = h.envelope_matrix();
    if (lin::rank(hmat) < (I64)rp)
        return verdict_no("envelope map has a kernel");
    Mat img_gens;
    for (const auto& g : p.generators()) {
        auto c = q.env_coords(h.apply(g));
        require(c.has_value(), ErrorKind::internal, "generator image escaped the target envelope");
        if (!lin::vec_is_zero(*c)) img_gens.push_back(*c);
    }
    Mat sat = lin::saturate_rows(hmat, rq);
    Mat span = lin::saturate_rows(img_gens, rq);
    std::optional<cone::ConeData> img_cone;
    if (!span.empty()) {
        Mat in_span;
        for (const auto& g : img_gens) {
            auto t = lin::solve_in_rows(span, g);
            require(t.has_value(), ErrorKind::internal, "image generator outside its own span");
            in_span.push_back(*t);
        }
        img_cone = cone::build_cone(in_span, span.size());
    }
    for (const auto& gen : q.generators()) {
        auto qc = q.env_coords(gen);
        require(qc.has_value(), ErrorKind::internal, "target generator outside its envelope");
        if (!lin::in_row_lattice(sat, *qc))
            return verdict_no("no multiple of " + lin::vec_to_string(gen) +
                              " lies in the image lattice");
        std::optional<Vec> t;
        if (!span.empty()) t = lin::solve_in_rows(span, *qc);
        if (!t.has_value() || !cone::cone_contains(*img_cone, *t))
            return verdict_no(lin::vec_to_string(gen) + " lies outside the image cone");
    }
    return verdict_yes();
}

inline std::vector<I64> integers_with_factors_in(const std::vector<I64>& primes, I64 limit) {
    std::set<I64> out{1};
    bool grew = true;
    while (grew) {
        grew = false;
        for (I64 v : std::vector<I64>(out.begin(), out.end()))
            for (I64 pr : primes) {
                I64 w = lin::checked_mul(v, pr);
                if (w <= limit && out.insert(w).second) grew = true;
            }
    }
    return {out.begin(), out.end()};
}

inline Verdict decide_l_kummer(const MonoidMap& h, const Verdict& kummer,
                               const std::vector<I64>& primes, size_t bound) {
    if (primes.empty()) return kummer; // no restriction requested
    if (!kummer.holds()) return verdict_no("not Kummer");
    const AffineMonoid& p = h.source();
    const AffineMonoid& q = h.target();
    size_t rq = q.group_envelope().rank();
    Mat hmat = h.envelope_matrix();
    Mat img = lin::hermite_rows(hmat);
    auto shape = lin::quotient_shape(hmat, rq);
    require(shape.free_rank == 0, ErrorKind::internal, "Kummer image must have finite index");
    I64 exponent = shape.torsion.empty() ? 1 : shape.torsion.back();
    auto restricted = [&](I64 n) {
        for (I64 pr : primes)
            while (n % pr == 0) n /= pr;
        return n == 1;
    };
    struct GenOrder { Vec qc; I64 order; };
    std::vector<GenOrder> orders;
    for (const auto& gen : q.generators()) {
        Vec qc = *q.env_coords(gen);
        I64 o = 0;
        for (I64 d = 1; d <= exponent; ++d) {
            if (exponent % d != 0) continue;
            if (lin::in_row_lattice(img, lin::vec_scale(d, qc))) { o = d; break; }
        }
        require(o > 0, ErrorKind::internal, "finite order expected in the image quotient");
        if (!restricted(o))
            return verdict_no("order of " + lin::vec_to_string(gen) + " modulo the image is " +
                              std::to_string(o) + ", not a product of the allowed primes");
        orders.push_back({std::move(qc), o});
    }
    if (p.is_saturated()) return verdict_yes();
    // Non-saturated source: the lattice multiple may miss the monoid itself,
    // so hunt for an allowed multiplier directly.
    std::vector<I64> allowed = integers_with_factors_in(primes, (I64)bound);
    for (const auto& go : orders) {
        auto x1 = lin::solve_rows_any(hmat, lin::vec_scale(go.order, go.qc));
        require(x1.has_value(), ErrorKind::internal, "order certificate failed");
        bool found = false;
        for (I64 k : allowed)
            if (p.contains_env(lin::vec_scale(k, *x1))) { found = true; break; }
        if (!found)
            return {Status::undecided, bound,
                    "no allowed multiple of " + lin::vec_to_string(go.qc) +
                    " found in the image of the source"};
    }
    return verdict_yes();
}

inline bool is_group(const AffineMonoid& m) {
    return m.units().rank() == m.group_envelope().rank();
}

// Shared data for the bounded integrality / saturation searches.
struct BruteForce {
    std::vector<Vec> ep, eq;  // source / target elements, <= bound generator terms
    std::vector<Vec> pool;    // larger source pool backing witness searches
    bool pool_doubled = true; // pool really reaches 2x the bound
    std::set<Vec> image_values;
    bool q_sharp = false;
    I64 min_image_degree = 0; // over nonzero source generators

    BruteForce(const MonoidMap& h, size_t bound) {
        ep = h.source().elements_up_to(bound);
        eq = h.target().elements_up_to(bound);
        try {
            pool = h.source().elements_up_to(2 * bound);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::resource) throw;
            pool = ep;
            pool_doubled = false;
        }
        for (const auto& x : pool) image_values.insert(h.apply(x));
        q_sharp = h.target().is_sharp();
        min_image_degree = std::numeric_limits<I64>::max();
        for (const auto& g : h.source().generators())
            min_image_degree = std::min(min_image_degree, h.target().sharp_degree(h.apply(g)));
        if (h.source().generators().empty()) min_image_degree = 1;
    }

    // True when every source element with image of target-degree <= deg has
    // at most 2*bound generator terms, i.e. the pool search was complete.
    bool certified(I64 deg, size_t bound) const {
        return q_sharp && pool_doubled && min_image_degree >= 1 &&
               deg <= (I64)(2 * bound) * min_image_degree;
    }
};

inline Verdict decide_integral(const MonoidMap& h, size_t bound) {
    const AffineMonoid& p = h.source();
    const AffineMonoid& q = h.target();
    if (is_group(p)) return verdict_yes("source is a group");
    BruteForce bf(h, bound);
    require(bf.ep.size() * bf.eq.size() <= 2000000, ErrorKind::resource,
            "integrality search space too large at this bound");
    // bucket pairs (q-element, p-element) by the common value q + h(p)
    std::map<Vec, std::vector<std::pair<size_t, size_t>>> buckets;
    for (size_t qi = 0; qi < bf.eq.size(); ++qi)
        for (size_t pi = 0; pi < bf.ep.size(); ++pi)
            buckets[lin::vec_add(bf.eq[qi], h.apply(bf.ep[pi]))].push_back({qi, pi});
    bool missed = false;
    std::string miss_witness;
    size_t pair_budget = 500000;
    for (const auto& [value, list] : buckets) {
        (void)value;
        for (size_t i = 0; i < list.size(); ++i)
            for (size_t j = i + 1; j < list.size(); ++j) {
                require(pair_budget-- > 0, ErrorKind::resource,
                        "integrality search exceeded the pair budget");
                const Vec& q1 = bf.eq[list[i].first];
                const Vec& p1 = bf.ep[list[i].second];
                const Vec& q2 = bf.eq[list[j].first];
                const Vec& p2 = bf.ep[list[j].second];
                // want g' in Q, g1, g2 in P with q1 = g' + h(g1), q2 = g' + h(g2);
                // any such g' divides both q1 and q2 in Q
                std::vector<Vec> gprimes;
                bool gp_complete = false;
                if (bf.q_sharp) {
                    gprimes = q.divisors_of(q1);
                    gp_complete = true;
                } else {
                    for (const auto& c : bf.eq)
                        if (q.divides(c, q1)) gprimes.push_back(c);
                }
                bool found = false;
                for (const auto& gp : gprimes) {
                    if (!q.divides(gp, q2)) continue;
                    if (bf.image_values.count(lin::vec_sub(q1, gp)) &&
                        bf.image_values.count(lin::vec_sub(q2, gp))) {
                        found = true;
                        break;
                    }
                }
                if (found) continue;
                std::string w = "pair (" + lin::vec_to_string(q1) + ", " + lin::vec_to_string(p1) +
                                ") ~ (" + lin::vec_to_string(q2) + ", " + lin::vec_to_string(p2) +
                                ") has no common refinement";
                if (gp_complete && bf.certified(q.sharp_degree(q1), bound) &&
                    bf.certified(q.sharp_degree(q2), bound))
                    return verdict_no(w);
                if (!missed) {
                    missed = true;
                    miss_witness = std::move(w);
                }
            }
    }
    if (missed) return {Status::no_at_bound, bound, miss_witness};
    return {Status::yes_at_bound, bound, ""};
}

inline std::vector<I64> primes_up_to(I64 n) {
    std::vector<I64> out;
    for (I64 v = 2; v <= n; ++v) {
        bool ok = true;
        for (I64 d = 2; d * d <= v; ++d)
            if (v % d == 0) { ok = false; break; }
        if (ok) out.push_back(v);
    }
    return out;
}

inline Verdict decide_tsuji(const MonoidMap& h, size_t bound) {
    const AffineMonoid& p = h.source();
    const AffineMonoid& q = h.target();
    if (is_group(p)) return verdict_yes("source is a group");
    if (is_group(q)) return verdict_yes("target is a group");
    BruteForce bf(h, bound);
    require(bf.ep.size() * bf.eq.size() <= 1000000, ErrorKind::resource,
            "saturation search space too large at this bound");
    std::vector<I64> primes = primes_up_to(std::max<I64>(3, (I64)bound));
    std::vector<Vec> pool_images;
    pool_images.reserve(bf.pool.size());
    for (const auto& c : bf.pool) pool_images.push_back(h.apply(c));
    bool missed = false;
    std::string miss_witness;
    for (const auto& b : bf.eq) {
        // candidates c with h(c) | b, shared across all (p, a)
        std::vector<size_t> cand;
        for (size_t ci = 0; ci < bf.pool.size(); ++ci)
            if (q.divides(pool_images[ci], b)) cand.push_back(ci);
        for (I64 pr : primes) {
            Vec pb = lin::vec_scale(pr, b);
            for (const auto& a : bf.ep) {
                if (!q.divides(h.apply(a), pb)) continue;
                bool found = false;
                for (size_t ci : cand)
                    if (p.divides(a, lin::vec_scale(pr, bf.pool[ci]))) { found = true; break; }
                if (found) continue;
                std::string w = "a=" + lin::vec_to_string(a) + ", b=" + lin::vec_to_string(b) +
                                ", p=" + std::to_string(pr);
                if (bf.certified(q.sharp_degree(b), bound))
                    return verdict_no(w);
                if (!missed) {
                    missed = true;
                    miss_witness = std::move(w);
                }
            }
        }
    }
    if (missed) return {Status::no_at_bound, bound, miss_witness};
    return {Status::yes_at_bound, bound, ""};
}

inline Verdict combine_saturated(const Verdict& integral, const Verdict& tsuji, size_t bound) {
    if (integral.status == Status::no)
        return verdict_no("not integral: " + integral.witness);
    if (tsuji.status == Status::no) return verdict_no(tsuji.witness);
    if (integral.status == Status::no_at_bound)
        return {Status::no_at_bound, bound, "not integral: " + integral.witness};
    if (tsuji.status == Status::no_at_bound)
        return {Status::no_at_bound, bound, tsuji.witness};
    if (integral.status == Status::yes && tsuji.status == Status::yes)
        return verdict_yes();
    return {Status::yes_at_bound, bound, ""};
}

} // namespace detail

// Default element bound for the brute-force criteria:
// 2 x (largest coordinate in sight) x (largest ambient dimension).
inline size_t default_classification_bound(const MonoidMap& h) {
    I64 coord = 1;
    auto scan = [&](const Mat& m) {
        for (const auto& row : m)
            for (I64 v : row) coord = std::max(coord, std::abs(v));
    };
    scan(h.source().generators());
    scan(h.target().generators());
    scan(h.matrix());
    size_t dim = std::max<size_t>({1, h.source().ambient_dim(), h.target().ambient_dim()});
    return (size_t)(2 * coord) * dim;
}

inline Classification classify_map(const MonoidMap& h, std::optional<size_t> bound = {},
                                   std::vector<I64> primes = {}) {
    size_t b = bound.value_or(default_classification_bound(h));
    require(b >= 1, ErrorKind::validation, "classification bound must be positive");
    for (I64 pr : primes) {
        bool ok = pr >= 2;
        for (I64 d = 2; ok && d * d <= pr; ++d)
            if (pr % d == 0) ok = false;
        require(ok, ErrorKind::validation, "prime restriction set must contain primes");
    }
    Classification c;
    c.bound = b;
    c.primes = primes;
    c.local = detail::decide_local(h);
    c.exact = detail::decide_exact(h, b);
    c.kummer = detail::decide_kummer(h);
    c.l_kummer = detail::decide_l_kummer(h, c.kummer, primes, b);
    c.integral = detail::decide_integral(h, b);
    c.saturated = detail::combine_saturated(c.integral, detail::decide_tsuji(h, b), b);
    return c;
}

// Sends a face to the smallest target face containing its image. For Kummer
// maps that face is the saturation of the image and the induced map of face
// posets is an order isomorphism.
inline Face kummer_face_transport(const MonoidMap& h, const Face& f) {
    require(h.source().same_submonoid(f.parent()), ErrorKind::validation,
            "face does not belong to the source of the map");
    Verdict k = detail::decide_kummer(h);
    if (!k.holds()) fail_validation("face transport needs a Kummer map: " + k.witness);
    Mat images;
    for (const auto& g : f.generator_subset()) images.push_back(h.apply(g));
    return h.target().smallest_face_containing(images);
}

// Restriction of h to the preimage of a target face, with the same matrix.
// Integrality and saturation descend to such restrictions.
struct FaceRestriction {
    Face source_face;
    MonoidMap map;
};

inline FaceRestriction restrict_to_face_preimage(const MonoidMap& h, const Face& target_face) {
    require(h.target().same_submonoid(target_face.parent()), ErrorKind::validation,
            "face does not belong to the target of the map");
    AffineMonoid fm = target_face.monoid();
    std::vector<size_t> idx;
    const Mat& gens = h.source().generators();
    for (size_t i = 0; i < gens.size(); ++i)
        if (fm.contains(h.apply(gens[i]))) idx.push_back(i);
    Face sf = h.source().face(idx);
    return {sf, MonoidMap(sf.monoid(), std::move(fm), h.matrix())};
}

} // namespace polystrata
