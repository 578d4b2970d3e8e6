#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polystrata/monoid_map.hpp"

namespace polystrata {

// Amalgamated sum of Q <- P -> Q'. The envelope pushout is the quotient of
// env(Q) + env(Q') by the differences of the two images of env(P); its
// torsion consists of units and is split off into `torsion`, leaving a
// torsion-free model carrying the whole divisibility structure. The monoid
// itself is the saturation of the image of Q + Q'.
//
// Ambient coordinates of the amalgam are quotient coordinates, so the
// structure maps are presented on the envelope presentations of the factors.
struct PushoutResult {
    AffineMonoid amalgam;
    std::vector<I64> torsion; // invariant factors of the collapsed unit torsion
    MonoidMap from_first;     // env presentation of Q  -> amalgam
    MonoidMap from_second;    // env presentation of Q' -> amalgam
};

inline PushoutResult pushout(const MonoidMap& f, const MonoidMap& g) {
    require(f.source().same_submonoid(g.source()), ErrorKind::validation,
            "pushout needs the two maps to share their source");
    const AffineMonoid& q1 = f.target();
    const AffineMonoid& q2 = g.target();
    size_t r1 = q1.group_envelope().rank();
    size_t r2 = q2.group_envelope().rank();
    size_t n = r1 + r2;
    Mat fenv = f.envelope_matrix();
    Mat genv = g.envelope_matrix();
    Mat relations;
    for (size_t i = 0; i < fenv.size(); ++i) {
        Vec row(n, 0);
        for (size_t j = 0; j < r1; ++j) row[j] = fenv[i][j];
        for (size_t j = 0; j < r2; ++j) row[r1 + j] = lin::checked_mul(-1, genv[i][j]);
        relations.push_back(row);
    }
    std::vector<I64> torsion = lin::quotient_shape(relations, n).torsion;
    Mat sat = lin::saturate_rows(relations, n);
    auto split = lin::split_by(sat, n);
    size_t m = split.codim;
    auto project_block = [&](const AffineMonoid& q, size_t offset, size_t width) {
        Mat gens;
        AffineMonoid pres = q.env_presentation();
        for (const auto& gvec : pres.generators()) {
            Vec padded(n, 0);
            for (size_t j = 0; j < width; ++j) padded[offset + j] = gvec[j];
            gens.push_back(lin::mat_apply(split.proj, padded));
        }
        return gens;
    };
    Mat gens1 = project_block(q1, 0, r1);
    Mat gens2 = project_block(q2, r1, r2);
    Mat all = gens1;
    all.insert(all.end(), gens2.begin(), gens2.end());
    AffineMonoid amalgam = AffineMonoid(m, all).saturate();
    auto block_matrix = [&](size_t offset, size_t width) {
        Mat mt(m, Vec(width, 0));
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < width; ++j) mt[i][j] = split.proj[i][offset + j];
        return mt;
    };
    MonoidMap h1(q1.env_presentation(), amalgam, block_matrix(0, r1));
    MonoidMap h2(q2.env_presentation(), amalgam, block_matrix(r1, r2));
    return {std::move(amalgam), std::move(torsion), std::move(h1), std::move(h2)};
}

inline bool is_restricted_integer(I64 n, const std::vector<I64>& primes) {
    if (n <= 0) return false;
    for (I64 p : primes)
        while (n % p == 0) n /= p;
    return n == 1;
}

// Smallest n for which the cobase change of h along multiplication by n on
// its source becomes a saturated morphism; the classifications for
// n = 1, 2, ... are kept as an explicit trail. A cutoff overrun is reported,
// not guessed away.
struct SaturationIndexResult {
    bool found = false;
    size_t index = 0;
    size_t cutoff = 0;
    std::vector<Verdict> attempts; // saturation verdict of the n-th cobase change

    std::string to_string() const {
        if (found) return "saturation index " + std::to_string(index);
        return "no saturation index up to " + std::to_string(cutoff);
    }
};

inline SaturationIndexResult saturation_index(const MonoidMap& h, size_t cutoff = 24,
                                              std::optional<size_t> bound = {}) {
    require(cutoff >= 1, ErrorKind::validation, "cutoff must be positive");
    size_t b = bound.value_or(default_classification_bound(h));
    Verdict integral = detail::decide_integral(h, b);
    if (!integral.holds())
        fail_validation("saturation index is defined for integral morphisms only: " +
                        integral.to_string());
    const AffineMonoid& p = h.source();
    SaturationIndexResult result;
    result.cutoff = cutoff;
    for (size_t nn = 1; nn <= cutoff; ++nn) {
        Mat mul = lin::mat_identity(p.ambient_dim());
        for (auto& row : mul)
            for (auto& v : row) v = lin::checked_mul(v, (I64)nn);
        PushoutResult po = pushout(h, MonoidMap(p, p, mul));
        Classification c = classify_map(po.from_second, bound);
        result.attempts.push_back(c.saturated);
        if (c.saturated.holds()) {
            result.found = true;
            result.index = nn;
            return result;
        }
    }
    return result;
}

} // namespace polystrata
