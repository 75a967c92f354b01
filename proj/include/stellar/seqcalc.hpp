#ifndef STELLAR_SEQCALC_HPP
#define STELLAR_SEQCALC_HPP

/**
 * Division sequences: faces of a sequence, vertex sets, combinatorial
 * equivalence, additive families, and division by families.
 *
 * A sequence s0⋯sm acts on complexes leftmost-outermost. Its faces are
 * defined recursively, internally to the sequence: t is a face when either
 * t consists of atoms and no face-entry s_j is contained in t, or some
 * s_i ∈ t with (t∖{s_i})∪s_i a face of the tail and no face-entry up to i
 * contained in t.
 */

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stellar/complex.hpp"

namespace stellar {

namespace detail {

inline bool all_atoms(HfSet t) {
    for (HfSet v : t.elements())
        if (!v.is_atom()) return false;
    return true;
}

class SeqFaceOracle {
public:
    explicit SeqFaceOracle(const DivSeq& seq) : seq_(seq) {
        const std::size_t m = seq_.size();
        entry_face_.assign(m, false);
        for (std::size_t j = m; j-- > 0;)
            entry_face_[j] = is_face(seq_[j], j + 1);
    }

    /// t a face of the suffix seq[i..)?
    bool is_face(HfSet t, std::size_t i) {
        if (t.is_atom() || !t.valid()) return false;
        auto key = std::make_pair(t.raw(), i);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        bool result = compute(t, i);
        memo_.emplace(key, result);
        return result;
    }

    bool entry_is_face(std::size_t j) const { return entry_face_[j]; }

private:
    bool compute(HfSet t, std::size_t i) {
        const std::size_t m = seq_.size();
        if (all_atoms(t)) {
            for (std::size_t j = i; j < m; ++j)
                if (entry_face_[j] && is_subset(seq_[j], t)) return false;
            return true;
        }
        for (std::size_t k = i; k < m; ++k) {
            if (!t.contains(seq_[k])) continue;
            bool blocked = false;
            for (std::size_t j = i; j <= k; ++j)
                if (entry_face_[j] && is_subset(seq_[j], t)) {
                    blocked = true;
                    break;
                }
            if (blocked) continue;
            HfSet rest = seq_[k];
            auto without = set_difference(t, singleton(seq_[k]));
            HfSet expanded = without ? set_union(*without, seq_[k]) : rest;
            if (is_face(expanded, k + 1)) return true;
        }
        return false;
    }

    struct KeyHash {
        std::size_t operator()(const std::pair<const void*, std::size_t>& k) const noexcept {
            return std::hash<const void*>{}(k.first) * 31 ^ k.second;
        }
    };

    const DivSeq& seq_;
    std::vector<bool> entry_face_;
    std::unordered_map<std::pair<const void*, std::size_t>, bool, KeyHash> memo_;
};

} // namespace detail

/// The internal face predicate for sequences.
inline bool is_face_of_seq(HfSet t, const DivSeq& seq) {
    detail::SeqFaceOracle oracle(seq);
    return oracle.is_face(t, 0);
}

/// The complex of all faces of seq over the declared alphabet. Equals
/// subdivide_seq(full complex on Ur, seq).
inline Complex faces_of_seq(const DivSeq& seq, const Urelements& ur) {
    return subdivide_seq(full_complex(ur), seq);
}

/// vr(seq) over a finite alphabet: the union of all faces.
inline std::vector<HfSet> vr_of_seq(const DivSeq& seq, const Urelements& ur) {
    return faces_of_seq(seq, ur).vertices();
}

/// Operational equality on sequences: equal face complexes over Ur.
inline Complex equiv_fingerprint(const DivSeq& seq, const Urelements& ur) {
    return faces_of_seq(seq, ur);
}

enum class RewriteResult { Proven, Unknown };

namespace detail {

inline DivSeq erase_at(const DivSeq& s, std::size_t i) {
    DivSeq out;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (j != i) out.push_back(s[j]);
    return out;
}

/// Single rewriting steps valid under the combinatorial equivalence:
/// (a) drop an entry that is not a face of its tail, (b) swap adjacent
/// entries whose union is not a face of the tail or that are disjoint.
/// Rule (c), congruence under prefixing, is what lets both apply at any
/// position.
inline std::vector<DivSeq> rewrite_neighbors(const DivSeq& s) {
    std::vector<DivSeq> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        DivSeq tail(s.begin() + i + 1, s.end());
        if (!is_face_of_seq(s[i], tail)) out.push_back(erase_at(s, i));
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        HfSet a = s[i], b = s[i + 1];
        if (is_member(a, b) || is_member(b, a)) continue;
        DivSeq tail(s.begin() + i + 2, s.end());
        if (!sets_intersect(a, b) || !is_face_of_seq(set_union(a, b), tail)) {
            DivSeq t = s;
            std::swap(t[i], t[i + 1]);
            out.push_back(t);
        }
    }
    return out;
}

inline std::string seq_key(const DivSeq& s) {
    std::string k;
    for (HfSet x : s) {
        const void* p = x.raw();
        k.append(reinterpret_cast<const char*>(&p), sizeof(p));
    }
    return k;
}

} // namespace detail

/// Bounded bidirectional search for a rewrite proof of seq1 ≡ seq2.
/// Proven is sound; Unknown is inconclusive.
inline RewriteResult rewrite_equiv(const DivSeq& seq1, const DivSeq& seq2,
                                   int depth_limit = 12) {
    using detail::seq_key;
    if (seq_key(seq1) == seq_key(seq2)) return RewriteResult::Proven;
    std::unordered_map<std::string, int> side;  // 1 = from seq1, 2 = from seq2
    std::deque<std::pair<DivSeq, int>> frontier1{{seq1, 0}}, frontier2{{seq2, 0}};
    side[seq_key(seq1)] = 1;
    side[seq_key(seq2)] = 2;
    const std::size_t kMaxVisited = 200000;

    auto expand = [&](std::deque<std::pair<DivSeq, int>>& frontier, int tag,
                      int budget) -> bool {
        std::size_t n = frontier.size();
        while (n-- > 0) {
            auto [s, d] = frontier.front();
            frontier.pop_front();
            if (d >= budget) {
                frontier.emplace_back(s, d);
                continue;
            }
            for (DivSeq& nb : detail::rewrite_neighbors(s)) {
                std::string k = seq_key(nb);
                auto it = side.find(k);
                if (it != side.end()) {
                    if (it->second != tag) return true;
                    continue;
                }
                if (side.size() > kMaxVisited) continue;
                side.emplace(std::move(k), tag);
                frontier.emplace_back(std::move(nb), d + 1);
            }
        }
        return false;
    };

    int half = (depth_limit + 1) / 2;
    for (int round = 0; round < half; ++round) {
        if (expand(frontier1, 1, round + 1)) return RewriteResult::Proven;
        if (round < depth_limit / 2 && expand(frontier2, 2, round + 1))
            return RewriteResult::Proven;
    }
    return RewriteResult::Unknown;
}

// ---------------------------------------------------------------------------
// Additive families
// ---------------------------------------------------------------------------

/// A family of faces closed under unions that remain faces. Stored in
/// canonical order; `in_complex` validates membership and the closure.
struct AdditiveFamily {
    std::vector<HfSet> members;

    static AdditiveFamily in_complex(std::vector<HfSet> members,
                                     const Complex& ctx) {
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()),
                      members.end());
        for (HfSet s : members)
            if (!ctx.has_face(s))
                throw NotAdditive("member " + to_text(s) +
                                  " is not a face of the context");
        for (HfSet s1 : members)
            for (HfSet s2 : members) {
                HfSet u = set_union(s1, s2);
                if (ctx.has_face(u) &&
                    !std::binary_search(members.begin(), members.end(), u))
                    throw NotAdditive("union " + to_text(u) +
                                      " is a face but not a member");
            }
        AdditiveFamily fam;
        fam.members = std::move(members);
        return fam;
    }

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }

    bool contains(HfSet s) const {
        return std::binary_search(members.begin(), members.end(), s);
    }

    bool upward_closed_in(const Complex& ctx) const {
        for (HfSet s : members)
            for (HfSet t : ctx.faces())
                if (is_subset(s, t) && !contains(t)) return false;
        return true;
    }
};

/// Closes a seed family under unions that are faces of ctx.
inline std::vector<HfSet> additive_closure(std::vector<HfSet> seed,
                                           const Complex& ctx) {
    std::sort(seed.begin(), seed.end());
    seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<HfSet> add;
        for (HfSet a : seed)
            for (HfSet b : seed) {
                HfSet u = set_union(a, b);
                if (ctx.has_face(u) &&
                    !std::binary_search(seed.begin(), seed.end(), u))
                    add.push_back(u);
            }
        if (!add.empty()) {
            for (HfSet u : add) seed.push_back(u);
            std::sort(seed.begin(), seed.end());
            seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
            changed = true;
        }
    }
    return seed;
}

namespace detail {

inline void enumerate_nondecreasing(std::vector<HfSet>& remaining, DivSeq& acc,
                                    const std::function<bool(const DivSeq&)>& fn,
                                    bool& stop) {
    if (stop) return;
    if (remaining.empty()) {
        if (!fn(acc)) stop = true;
        return;
    }
    // choose any remaining element that has no remaining proper subset;
    // canonical order of `remaining` makes the first choice lexicographic
    for (std::size_t i = 0; i < remaining.size() && !stop; ++i) {
        bool minimal = true;
        for (std::size_t j = 0; j < remaining.size(); ++j)
            if (j != i && is_proper_subset(remaining[j], remaining[i])) {
                minimal = false;
                break;
            }
        if (!minimal) continue;
        HfSet pick = remaining[i];
        remaining.erase(remaining.begin() + i);
        acc.push_back(pick);
        enumerate_nondecreasing(remaining, acc, fn, stop);
        acc.pop_back();
        remaining.insert(remaining.begin() + i, pick);
    }
}

} // namespace detail

/// Visits every injective listing of S in which s ⊆ t implies s comes
/// first. The callback returns false to stop early. The first listing
/// visited picks the canonically least available element at each step.
inline void for_each_nondecreasing_enumeration(
    const std::vector<HfSet>& members,
    const std::function<bool(const DivSeq&)>& fn) {
    std::vector<HfSet> remaining = members;
    std::sort(remaining.begin(), remaining.end());
    DivSeq acc;
    bool stop = false;
    detail::enumerate_nondecreasing(remaining, acc, fn, stop);
}

inline std::vector<DivSeq> nondecreasing_enumerations(
    const std::vector<HfSet>& members) {
    std::vector<DivSeq> out;
    for_each_nondecreasing_enumeration(members, [&](const DivSeq& s) {
        out.push_back(s);
        return true;
    });
    return out;
}

inline DivSeq canonical_nondecreasing_enumeration(
    const std::vector<HfSet>& members) {
    DivSeq out;
    for_each_nondecreasing_enumeration(members, [&](const DivSeq& s) {
        out = s;
        return false;
    });
    return out;
}

/// Division by an additive family: apply any non-decreasing enumeration.
/// With `check_all_enumerations`, every enumeration is applied and compared.
inline Complex divide_by_family(const Complex& ctx, const AdditiveFamily& fam,
                                bool check_all_enumerations = false) {
    if (fam.empty()) return ctx;
    Complex result = subdivide_seq(ctx, canonical_nondecreasing_enumeration(fam.members));
    if (check_all_enumerations) {
        for_each_nondecreasing_enumeration(fam.members, [&](const DivSeq& e) {
            if (subdivide_seq(ctx, e) != result)
                throw InternalCheckFailed(
                    "division by an additive family depended on the enumeration");
            return true;
        });
    }
    return result;
}

/// The face description of TA for additive T: x ∪ X is a face of TA iff
/// (a) no t ∈ T is contained in x, (b) x ∪ ⋃X is a face of A, (c) X is a
/// ⊆-chain, (d) t ⊆ x ∪ s with s ∈ X implies t ⊆ s.
inline bool linear_face_predicate(const std::vector<HfSet>& x,
                                  const std::vector<HfSet>& X,
                                  const AdditiveFamily& T, const Complex& a) {
    auto contained_in_x = [&](HfSet t) {
        for (HfSet v : t.elements()) {
            if (std::find(x.begin(), x.end(), v) == x.end()) return false;
        }
        return true;
    };
    for (HfSet t : T.members)
        if (contained_in_x(t)) return false;  // (a)
    std::vector<HfSet> unionxX = x;
    for (HfSet s : X)
        for (HfSet v : s.elements()) unionxX.push_back(v);
    if (unionxX.empty()) return false;
    if (!a.has_face(HfSet::set(unionxX))) return false;  // (b)
    for (HfSet s1 : X)
        for (HfSet s2 : X)
            if (!is_subset(s1, s2) && !is_subset(s2, s1)) return false;  // (c)
    for (HfSet s : X)
        for (HfSet t : T.members) {
            bool t_in_xs = true;
            for (HfSet v : t.elements())
                if (std::find(x.begin(), x.end(), v) == x.end() && !s.contains(v)) {
                    t_in_xs = false;
                    break;
                }
            if (t_in_xs && !is_subset(t, s)) return false;  // (d)
        }
    return true;
}

} // namespace stellar

#endif
