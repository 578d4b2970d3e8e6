#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "polystrata/error.hpp"

// Finite posets as explicit relation matrices, with a canonical fingerprint
// for isomorphism checks (used to compare cell posets against strata posets).

namespace polystrata {

class Poset {
  public:
    Poset() = default;
    explicit Poset(std::vector<std::vector<bool>> leq) : leq_(std::move(leq)) {
        validate();
    }

    size_t size() const { return leq_.size(); }
    bool leq(size_t i, size_t j) const { return leq_[i][j]; }

    static Poset discrete(size_t n) {
        std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
        for (size_t i = 0; i < n; ++i) m[i][i] = true;
        return Poset(std::move(m));
    }

    // Covering pairs (i, j): i < j with nothing strictly between.
    std::vector<std::pair<size_t, size_t>> covers() const {
        std::vector<std::pair<size_t, size_t>> out;
        for (size_t i = 0; i < size(); ++i)
            for (size_t j = 0; j < size(); ++j) {
                if (i == j || !leq_[i][j]) continue;
                bool direct = true;
                for (size_t k = 0; k < size() && direct; ++k)
                    if (k != i && k != j && leq_[i][k] && leq_[k][j]) direct = false;
                if (direct) out.emplace_back(i, j);
            }
        return out;
    }

    std::vector<size_t> minimal_elements() const {
        std::vector<size_t> out;
        for (size_t i = 0; i < size(); ++i) {
            bool min = true;
            for (size_t j = 0; j < size(); ++j)
                if (j != i && leq_[j][i]) { min = false; break; }
            if (min) out.push_back(i);
        }
        return out;
    }

    std::vector<size_t> maximal_elements() const {
        std::vector<size_t> out;
        for (size_t i = 0; i < size(); ++i) {
            bool max = true;
            for (size_t j = 0; j < size(); ++j)
                if (j != i && leq_[i][j]) { max = false; break; }
            if (max) out.push_back(i);
        }
        return out;
    }

    Poset product(const Poset& o) const {
        size_t n = size(), m = o.size();
        std::vector<std::vector<bool>> r(n * m, std::vector<bool>(n * m, false));
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < m; ++b)
                for (size_t c = 0; c < n; ++c)
                    for (size_t d = 0; d < m; ++d)
                        r[a * m + b][c * m + d] = leq_[a][c] && o.leq_[b][d];
        return Poset(std::move(r));
    }

    bool is_monotone_map(const std::vector<size_t>& f, const Poset& target) const {
        for (size_t i = 0; i < size(); ++i)
            for (size_t j = 0; j < size(); ++j)
                if (leq_[i][j] && !target.leq(f[i], f[j])) return false;
        return true;
    }

    bool is_order_isomorphism(const std::vector<size_t>& f, const Poset& target) const {
        if (f.size() != size() || target.size() != size()) return false;
        std::vector<bool> hit(size(), false);
        for (size_t v : f) {
            if (v >= size() || hit[v]) return false;
            hit[v] = true;
        }
        for (size_t i = 0; i < size(); ++i)
            for (size_t j = 0; j < size(); ++j)
                if (leq_[i][j] != target.leq(f[i], f[j])) return false;
        return true;
    }

    // Canonical relation-matrix string: invariant under relabeling, equal for
    // isomorphic posets. Color refinement, then individualize one element of
    // the smallest ambiguous class and recurse; the minimum over all branches
    // is label-independent because the branch set is.
    std::string canonical_fingerprint() const {
        size_t n = size();
        if (n == 0) return "poset:0:";
        std::string best;
        size_t leaves = 0;
        canon_search(refine(std::vector<size_t>(n, 0)), best, leaves);
        return "poset:" + std::to_string(n) + ":" + best;
    }

    bool isomorphic_to(const Poset& o) const {
        if (size() != o.size()) return false;
        return canonical_fingerprint() == o.canonical_fingerprint();
    }

  private:
    std::vector<std::vector<bool>> leq_;

    void validate() const {
        size_t n = leq_.size();
        for (const auto& row : leq_)
            require(row.size() == n, ErrorKind::internal, "poset matrix not square");
        for (size_t i = 0; i < n; ++i)
            require(leq_[i][i], ErrorKind::internal, "poset relation not reflexive");
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (i != j && leq_[i][j] && leq_[j][i])
                    fail_internal("poset relation not antisymmetric");
                if (!leq_[i][j]) continue;
                for (size_t k = 0; k < n; ++k)
                    if (leq_[j][k] && !leq_[i][k])
                        fail_internal("poset relation not transitive");
            }
    }

    std::vector<size_t> refine(std::vector<size_t> color) const {
        size_t n = size();
        for (size_t round = 0; round <= n; ++round) {
            // signature: own color + sorted colors of strict lower/upper sets
            std::vector<std::string> sig(n);
            for (size_t i = 0; i < n; ++i) {
                std::vector<size_t> down, up;
                for (size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    if (leq_[j][i]) down.push_back(color[j]);
                    if (leq_[i][j]) up.push_back(color[j]);
                }
                std::sort(down.begin(), down.end());
                std::sort(up.begin(), up.end());
                std::string s = std::to_string(color[i]) + "|";
                for (size_t c : down) s += std::to_string(c) + ",";
                s += "|";
                for (size_t c : up) s += std::to_string(c) + ",";
                sig[i] = s;
            }
            std::vector<std::string> sorted = sig;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            std::vector<size_t> next(n);
            for (size_t i = 0; i < n; ++i)
                next[i] = size_t(std::lower_bound(sorted.begin(), sorted.end(), sig[i]) - sorted.begin());
            if (next == color) break;
            color = next;
        }
        return color;
    }

    std::string render(const std::vector<size_t>& p) const {
        std::string s;
        s.reserve(p.size() * p.size());
        for (size_t i : p)
            for (size_t j : p) s += leq_[i][j] ? '1' : '0';
        return s;
    }

    // Swapping u and v leaves the relation unchanged, so branches that
    // individualize one or the other are interchangeable.
    bool twins(size_t u, size_t v) const {
        if (leq_[u][v] != leq_[v][u]) return false;
        for (size_t k = 0; k < size(); ++k) {
            if (k == u || k == v) continue;
            if (leq_[u][k] != leq_[v][k] || leq_[k][u] != leq_[k][v]) return false;
        }
        return true;
    }

    void canon_search(const std::vector<size_t>& color, std::string& best, size_t& leaves) const {
        size_t n = size();
        std::map<size_t, std::vector<size_t>> classes;
        for (size_t i = 0; i < n; ++i) classes[color[i]].push_back(i);
        const std::vector<size_t>* branch_class = nullptr;
        for (auto& [c, members] : classes) {
            (void)c;
            if (members.size() < 2) continue;
            if (!branch_class || members.size() < branch_class->size()) branch_class = &members;
        }
        if (!branch_class) {
            // discrete: colors are exactly the ranks 0..n-1
            require(++leaves <= 100000, ErrorKind::resource,
                    "poset fingerprint: too many symmetric labelings");
            std::vector<size_t> perm(n);
            for (size_t i = 0; i < n; ++i) perm[color[i]] = i;
            std::string s = render(perm);
            if (best.empty() || s < best) best = s;
            return;
        }
        for (size_t idx = 0; idx < branch_class->size(); ++idx) {
            size_t v = (*branch_class)[idx];
            bool redundant = false;
            for (size_t prev = 0; prev < idx && !redundant; ++prev)
                redundant = twins((*branch_class)[prev], v);
            if (redundant) continue;
            std::vector<size_t> next = color;
            next[v] = n + 1 + color[v];
            canon_search(refine(std::move(next)), best, leaves);
        }
    }
};

} // namespace polystrata
