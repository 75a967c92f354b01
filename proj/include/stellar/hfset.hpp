#ifndef STELLAR_HFSET_HPP
#define STELLAR_HFSET_HPP

/**
 * Hereditarily finite sets over a finite alphabet of urelements.
 *
 * Values are interned: two HfSet handles compare equal iff they are
 * extensionally equal, and equality/hashing are pointer operations.
 * The canonical order sorts by rank (nesting depth), then cardinality,
 * then lexicographically on children; atoms sort by name.
 */

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stellar/errors.hpp"

namespace stellar {

class HfSet;

namespace detail {

struct HfNode {
    bool atom;
    int rank;          // 0 for atoms, 1 + max child rank for sets
    std::string name;  // atoms only
    std::vector<const HfNode*> elems;  // sets only; canonically sorted, unique
    std::size_t hash;
};

int node_compare(const HfNode* a, const HfNode* b);

struct NodeKeyHash {
    std::size_t operator()(const std::vector<const HfNode*>& v) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ull;
        for (const HfNode* p : v)
            h = h * 1099511628211ull ^ std::hash<const void*>{}(p);
        return h;
    }
};

struct HfPool {
    std::mutex mu;
    std::deque<HfNode> nodes;
    std::unordered_map<std::string, const HfNode*> atoms;
    std::unordered_map<std::vector<const HfNode*>, const HfNode*, NodeKeyHash> sets;

    static HfPool& instance() {
        static HfPool pool;
        return pool;
    }

    const HfNode* intern_atom(std::string_view name) {
        std::lock_guard<std::mutex> lock(mu);
        std::string key(name);
        auto it = atoms.find(key);
        if (it != atoms.end()) return it->second;
        nodes.push_back(HfNode{true, 0, key, {}, std::hash<std::string>{}(key)});
        const HfNode* n = &nodes.back();
        atoms.emplace(std::move(key), n);
        return n;
    }

    const HfNode* intern_set(std::vector<const HfNode*> elems) {
        // callers pass sorted, deduplicated, nonempty element lists
        std::lock_guard<std::mutex> lock(mu);
        auto it = sets.find(elems);
        if (it != sets.end()) return it->second;
        int rank = 0;
        std::size_t h = 0xcbf29ce484222325ull;
        for (const HfNode* e : elems) {
            rank = std::max(rank, e->rank);
            h = h * 1099511628211ull ^ e->hash;
        }
        nodes.push_back(HfNode{false, rank + 1, {}, elems, h});
        const HfNode* n = &nodes.back();
        sets.emplace(std::move(elems), n);
        return n;
    }
};

inline int node_compare(const HfNode* a, const HfNode* b) {
    if (a == b) return 0;
    if (a->rank != b->rank) return a->rank < b->rank ? -1 : 1;
    if (a->atom) return a->name.compare(b->name) < 0 ? -1 : 1;
    if (a->elems.size() != b->elems.size())
        return a->elems.size() < b->elems.size() ? -1 : 1;
    for (std::size_t i = 0; i < a->elems.size(); ++i) {
        int c = node_compare(a->elems[i], b->elems[i]);
        if (c != 0) return c;
    }
    return 0;  // structurally equal sets are interned to one node
}

} // namespace detail

/// Handle to an interned hereditarily finite set (or urelement atom).
/// Default-constructed handles are invalid and only usable as sentinels.
class HfSet {
public:
    HfSet() : node_(nullptr) {}

    static HfSet atom(std::string_view name) {
        if (name.empty()) throw ParseError("atom name must be nonempty");
        return HfSet(detail::HfPool::instance().intern_atom(name));
    }

    static HfSet set(std::vector<HfSet> elems) {
        if (elems.empty())
            throw EmptyResult("the empty set is not a member of Fin+");
        std::vector<const detail::HfNode*> nodes;
        nodes.reserve(elems.size());
        for (HfSet e : elems) nodes.push_back(e.require());
        std::sort(nodes.begin(), nodes.end(),
                  [](const detail::HfNode* a, const detail::HfNode* b) {
                      return detail::node_compare(a, b) < 0;
                  });
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        return HfSet(detail::HfPool::instance().intern_set(std::move(nodes)));
    }

    bool valid() const { return node_ != nullptr; }
    bool is_atom() const { return require()->atom; }
    bool is_set() const { return !require()->atom; }
    int rank() const { return require()->rank; }

    const std::string& atom_name() const {
        if (!is_atom()) throw StellarError("TypeError", "not an atom");
        return node_->name;
    }

    std::size_t size() const {
        if (is_atom()) throw StellarError("TypeError", "atoms have no elements");
        return node_->elems.size();
    }

    /// Elements in canonical order. Only valid on sets.
    std::vector<HfSet> elements() const {
        if (is_atom()) throw StellarError("TypeError", "atoms have no elements");
        std::vector<HfSet> out;
        out.reserve(node_->elems.size());
        for (const detail::HfNode* e : node_->elems) out.push_back(HfSet(e));
        return out;
    }

    bool contains(HfSet x) const {
        if (is_atom()) return false;
        const detail::HfNode* key = x.require();
        auto& v = node_->elems;
        auto it = std::lower_bound(v.begin(), v.end(), key,
                                   [](const detail::HfNode* a, const detail::HfNode* b) {
                                       return detail::node_compare(a, b) < 0;
                                   });
        return it != v.end() && *it == key;
    }

    friend bool operator==(HfSet a, HfSet b) { return a.node_ == b.node_; }
    friend bool operator!=(HfSet a, HfSet b) { return a.node_ != b.node_; }
    friend bool operator<(HfSet a, HfSet b) {
        return detail::node_compare(a.require(), b.require()) < 0;
    }

    std::size_t hash() const { return require()->hash; }
    const detail::HfNode* raw() const { return node_; }

private:
    explicit HfSet(const detail::HfNode* n) : node_(n) {}
    const detail::HfNode* require() const {
        if (!node_) throw StellarError("InvalidHandle", "use of an invalid HfSet");
        return node_;
    }
    const detail::HfNode* node_;
};

struct HfSetHash {
    std::size_t operator()(HfSet s) const noexcept {
        return std::hash<const void*>{}(s.raw());
    }
};

// ---------------------------------------------------------------------------
// Extensional operations
// ---------------------------------------------------------------------------

inline bool is_member(HfSet x, HfSet s) { return s.is_set() && s.contains(x); }

inline bool is_subset(HfSet s, HfSet t) {
    if (s.is_atom() || t.is_atom()) return false;
    for (HfSet e : s.elements())
        if (!t.contains(e)) return false;
    return true;
}

inline bool is_proper_subset(HfSet s, HfSet t) { return s != t && is_subset(s, t); }

inline HfSet set_union(HfSet s, HfSet t) {
    std::vector<HfSet> elems = s.elements();
    for (HfSet e : t.elements()) elems.push_back(e);
    return HfSet::set(std::move(elems));
}

inline HfSet singleton(HfSet x) { return HfSet::set({x}); }

/// Difference s \ t; empty results are reported as nullopt since the empty
/// set is not a Fin+ value.
inline std::optional<HfSet> set_difference(HfSet s, HfSet t) {
    std::vector<HfSet> elems;
    for (HfSet e : s.elements())
        if (!t.contains(e)) elems.push_back(e);
    if (elems.empty()) return std::nullopt;
    return HfSet::set(std::move(elems));
}

inline std::optional<HfSet> set_intersection(HfSet s, HfSet t) {
    std::vector<HfSet> elems;
    for (HfSet e : s.elements())
        if (t.contains(e)) elems.push_back(e);
    if (elems.empty()) return std::nullopt;
    return HfSet::set(std::move(elems));
}

inline bool sets_intersect(HfSet s, HfSet t) {
    for (HfSet e : s.elements())
        if (t.contains(e)) return true;
    return false;
}

/// All members, members of members, and so on, in canonical order.
/// tc(a) is empty for an atom a.
inline std::vector<HfSet> transitive_closure(HfSet s) {
    std::vector<HfSet> out;
    if (s.is_atom()) return out;
    std::vector<HfSet> stack = s.elements();
    std::unordered_map<const void*, bool> seen;
    while (!stack.empty()) {
        HfSet x = stack.back();
        stack.pop_back();
        if (seen[x.raw()]) continue;
        seen[x.raw()] = true;
        out.push_back(x);
        if (x.is_set())
            for (HfSet e : x.elements()) stack.push_back(e);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline bool in_transitive_closure(HfSet x, HfSet t) {
    if (t.is_atom()) return false;
    if (t.contains(x)) return true;
    for (HfSet e : t.elements())
        if (e.is_set() && in_transitive_closure(x, e)) return true;
    return false;
}

/// Support sp(s) = tc(s) ∩ Ur, as a set of atoms. For an atom a the support
/// is {a}.
inline HfSet support(HfSet s) {
    if (s.is_atom()) return HfSet::set({s});
    std::vector<HfSet> atoms;
    for (HfSet x : transitive_closure(s))
        if (x.is_atom()) atoms.push_back(x);
    return HfSet::set(std::move(atoms));
}

// ---------------------------------------------------------------------------
// The urelement alphabet
// ---------------------------------------------------------------------------

/// The alphabet Ur, fixed per session/file. All checked construction and
/// parsing goes through this; an undeclared atom is an error.
class Urelements {
public:
    Urelements() = default;

    explicit Urelements(const std::vector<std::string>& names) {
        if (names.empty())
            throw ValidationError("the urelement alphabet must be nonempty");
        for (const std::string& n : names) {
            HfSet a = HfSet::atom(n);
            if (std::find(atoms_.begin(), atoms_.end(), a) != atoms_.end())
                throw ValidationError("duplicate urelement '" + n + "'");
            atoms_.push_back(a);
        }
        std::sort(atoms_.begin(), atoms_.end());
    }

    const std::vector<HfSet>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    bool declared(HfSet a) const {
        return a.is_atom() &&
               std::binary_search(atoms_.begin(), atoms_.end(), a);
    }

    HfSet atom(std::string_view name) const {
        HfSet a = HfSet::atom(name);
        if (!declared(a))
            throw UndeclaredAtom("atom '" + std::string(name) +
                                 "' is not in the declared alphabet");
        return a;
    }

    /// Every urelement mentioned anywhere inside s must be declared.
    void check(HfSet s) const {
        for (HfSet a : support(s).elements())
            if (!declared(a))
                throw UndeclaredAtom("atom '" + a.atom_name() +
                                     "' is not in the declared alphabet");
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (HfSet a : atoms_) out.push_back(a.atom_name());
        return out;
    }

private:
    std::vector<HfSet> atoms_;
};

// ---------------------------------------------------------------------------
// Text encoding: atoms as bare identifiers, sets as sorted bracket lists
// ---------------------------------------------------------------------------

inline std::string to_text(HfSet s) {
    if (s.is_atom()) return s.atom_name();
    std::string out = "{";
    bool first = true;
    for (HfSet e : s.elements()) {
        if (!first) out += ",";
        first = false;
        out += to_text(e);
    }
    out += "}";
    return out;
}

namespace detail {

inline HfSet parse_hfset(std::string_view text, std::size_t& pos,
                         const Urelements& ur) {
    auto skip_ws = [&] {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
            ++pos;
    };
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of input");
    if (text[pos] == '{') {
        ++pos;
        std::vector<HfSet> elems;
        skip_ws();
        if (pos < text.size() && text[pos] == '}')
            throw ParseError("the empty set is not a Fin+ value");
        while (true) {
            elems.push_back(parse_hfset(text, pos, ur));
            skip_ws();
            if (pos >= text.size()) throw ParseError("missing '}'");
            if (text[pos] == ',') {
                ++pos;
                continue;
            }
            if (text[pos] == '}') {
                ++pos;
                return HfSet::set(std::move(elems));
            }
            throw ParseError("expected ',' or '}' at position " +
                             std::to_string(pos));
        }
    }
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ',' && text[pos] != '{' &&
           text[pos] != '}' && text[pos] != ' ' && text[pos] != '\t')
        ++pos;
    if (start == pos) throw ParseError("expected an atom or '{'");
    return ur.atom(text.substr(start, pos - start));
}

} // namespace detail

inline HfSet parse_hfset(std::string_view text, const Urelements& ur) {
    std::size_t pos = 0;
    HfSet s = detail::parse_hfset(text, pos, ur);
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos != text.size())
        throw ParseError("trailing characters after set expression");
    return s;
}

} // namespace stellar

#endif
