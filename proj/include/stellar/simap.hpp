#ifndef STELLAR_SIMAP_HPP
#define STELLAR_SIMAP_HPP

/**
 * Grounded simplicial maps between divided complexes.
 *
 * A map is kept in two forms: the evaluated vertex function (SimplicialMap)
 * and a provenance expression tree (MapExpr). Class membership — weld
 * compositions W, neat welds N, weld-division maps D, combinatorial
 * isomorphisms, purity of division steps — is certified by the tree shape
 * and the constructions used, never inferred from the vertex function.
 * Every constructor evaluates eagerly and verifies its result.
 */

#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stellar/seqcalc.hpp"

namespace stellar {

// ---------------------------------------------------------------------------
// Evaluated vertex functions
// ---------------------------------------------------------------------------

class SimplicialMap {
public:
    SimplicialMap() = default;

    SimplicialMap(Complex domain, Complex codomain,
                  std::unordered_map<HfSet, HfSet, HfSetHash> vmap)
        : domain_(std::move(domain)), codomain_(std::move(codomain)),
          vmap_(std::move(vmap)) {
        for (HfSet v : domain_.vertices())
            if (!vmap_.count(v))
                throw ValidationError("vertex map is not total: missing " +
                                      to_text(v));
    }

    const Complex& domain() const { return domain_; }
    const Complex& codomain() const { return codomain_; }

    HfSet apply(HfSet v) const {
        auto it = vmap_.find(v);
        if (it == vmap_.end())
            throw ValidationError("vertex " + to_text(v) +
                                  " is not in the domain");
        return it->second;
    }

    /// Pointwise image of a face.
    HfSet image(HfSet face) const {
        std::vector<HfSet> out;
        for (HfSet v : face.elements()) out.push_back(apply(v));
        return HfSet::set(std::move(out));
    }

    bool same_function(const SimplicialMap& other) const {
        if (domain_ != other.domain_ || codomain_ != other.codomain_)
            return false;
        for (HfSet v : domain_.vertices())
            if (apply(v) != other.apply(v)) return false;
        return true;
    }

    bool is_identity() const {
        if (domain_ != codomain_) return false;
        for (HfSet v : domain_.vertices())
            if (apply(v) != v) return false;
        return true;
    }

    /// u(f): codomain vertices with exactly one preimage vertex.
    std::vector<HfSet> unique_cover() const {
        std::unordered_map<HfSet, int, HfSetHash> count;
        for (HfSet v : domain_.vertices()) ++count[apply(v)];
        std::vector<HfSet> out;
        for (auto& [w, n] : count)
            if (n == 1) out.push_back(w);
        std::sort(out.begin(), out.end());
        return out;
    }

    bool face_in_unique_cover(HfSet s) const {
        std::unordered_map<HfSet, int, HfSetHash> count;
        for (HfSet v : domain_.vertices()) ++count[apply(v)];
        for (HfSet w : s.elements()) {
            auto it = count.find(w);
            if (it == count.end() || it->second != 1) return false;
        }
        return true;
    }

    /// f⁻¹(s): the faces of the domain with pointwise image s.
    std::vector<HfSet> preimage_family(HfSet s) const {
        std::vector<HfSet> out;
        for (HfSet t : domain_.faces())
            if (image(t) == s) out.push_back(t);
        return out;
    }

    std::vector<HfSet> preimage_family(const std::vector<HfSet>& faces) const {
        std::vector<HfSet> out;
        for (HfSet t : domain_.faces()) {
            HfSet img = image(t);
            if (std::find(faces.begin(), faces.end(), img) != faces.end())
                out.push_back(t);
        }
        return out;
    }

private:
    Complex domain_, codomain_;
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap_;
};

/// Result of the groundedness check: either a certificate or the violated
/// condition with the offending face.
struct GroundedCheck {
    bool ok = false;
    std::string violation;  // empty on success
    explicit operator bool() const { return ok; }
};

/// Verifies (S1): faces map to faces with sp(f(t)) ⊆ sp(t), and
/// (S2): every codomain face s has a preimage face t with f(t) = s and
/// sp(t) = sp(s).
inline GroundedCheck check_grounded(const SimplicialMap& f) {
    for (HfSet v : f.domain().vertices()) {
        HfSet w = f.apply(v);
        if (!f.codomain().has_vertex(w))
            return {false, "vertex " + to_text(v) + " maps outside the codomain"};
    }
    for (HfSet t : f.domain().faces()) {
        HfSet img = f.image(t);
        if (!f.codomain().has_face(img))
            return {false, "(S1) image of " + to_text(t) + " = " + to_text(img) +
                               " is not a face"};
        if (!is_subset(support(img), support(t)))
            return {false, "(S1) support of image of " + to_text(t) + " grows"};
    }
    for (HfSet s : f.codomain().faces()) {
        bool found = false;
        for (HfSet t : f.domain().faces())
            if (f.image(t) == s && support(t) == support(s)) {
                found = true;
                break;
            }
        if (!found)
            return {false, "(S2) no support-preserving preimage of " + to_text(s)};
    }
    return {true, {}};
}

// ---------------------------------------------------------------------------
// Provenance expression trees
// ---------------------------------------------------------------------------

enum class MapKind {
    Identity,
    Weld,
    PiIota,
    TypedIso,
    LemmaIso,   // an assignment isomorphism justified by a named lemma
    Divide,
    DivideFamily,
    Compose,
    Raw,
};

class MapExpr;

namespace detail {

struct MapNode {
    MapKind kind;
    SimplicialMap eval;

    // class flags, derived from the construction
    bool in_w = false;   // composition of weld maps
    bool in_n = false;   // composition of neat welds
    bool in_d = false;   // weld-division map
    bool comb_iso = false;
    bool pure = false;   // for divisions: divisor inside u(child); for
                         // composites: all division steps pure

    // parameters (populated per kind)
    HfSet apex, divisor;
    std::vector<HfSet> family;
    std::vector<std::pair<HfSet, HfSet>> assignment;
    int iso_type = 0;  // 1, 2, 3 (=3a), 4 (=3b)
    std::string label;

    std::shared_ptr<const MapNode> child, left, right;
};

} // namespace detail

/// Immutable handle to a map expression node.
class MapExpr {
public:
    MapExpr() = default;
    explicit MapExpr(std::shared_ptr<const detail::MapNode> n) : n_(std::move(n)) {}

    bool valid() const { return n_ != nullptr; }
    const detail::MapNode& node() const { return *n_; }
    std::shared_ptr<const detail::MapNode> ptr() const { return n_; }

    MapKind kind() const { return n_->kind; }
    const SimplicialMap& eval() const { return n_->eval; }
    const Complex& domain() const { return n_->eval.domain(); }
    const Complex& codomain() const { return n_->eval.codomain(); }

    bool in_w() const { return n_->in_w; }
    bool in_n() const { return n_->in_n; }
    bool in_d() const { return n_->in_d; }
    bool is_comb_iso() const { return n_->comb_iso; }
    bool pure() const { return n_->pure; }
    const std::string& label() const { return n_->label; }

private:
    std::shared_ptr<const detail::MapNode> n_;
};

namespace detail {

inline MapExpr finish(MapNode node) {
    return MapExpr(std::make_shared<const MapNode>(std::move(node)));
}

inline std::unordered_map<HfSet, HfSet, HfSetHash> identity_vmap(const Complex& a) {
    std::unordered_map<HfSet, HfSet, HfSetHash> m;
    for (HfSet v : a.vertices()) m.emplace(v, v);
    return m;
}

} // namespace detail

inline MapExpr identity_map(const Complex& a) {
    detail::MapNode n;
    n.kind = MapKind::Identity;
    n.eval = SimplicialMap(a, a, detail::identity_vmap(a));
    n.in_w = n.in_n = n.in_d = n.comb_iso = n.pure = true;
    return detail::finish(std::move(n));
}

inline bool is_vertex_anywhere(HfSet t, const Complex& a) {
    // t ∈ tc(Vr(A)): t is a vertex or occurs inside one
    if (a.has_vertex(t)) return true;
    for (HfSet v : a.vertices())
        if (v.is_set() && (v == t || in_transitive_closure(t, v))) return true;
    return false;
}

/// Weld map π^A_{p,t} : tA → A, identity on Vr(A), t ↦ p. If t is not a
/// face of A the map is the identity.
inline MapExpr weld(const Complex& a, HfSet p, HfSet t) {
    if (t.is_atom() || !t.contains(p))
        throw BadApex("apex " + to_text(p) + " is not an element of " + to_text(t));
    if (a.has_vertex(t))
        throw VertexClash("divisor " + to_text(t) + " is already a vertex");
    Complex dom = subdivide(a, t);
    auto vmap = detail::identity_vmap(a);
    if (a.has_face(t)) {
        if (t.size() == 1) vmap.erase(t.elements()[0]);
        vmap[t] = p;
    }
    detail::MapNode n;
    n.kind = MapKind::Weld;
    n.eval = SimplicialMap(dom, a, std::move(vmap));
    n.apex = p;
    n.divisor = t;
    n.in_w = n.in_d = n.pure = true;
    // a single weld is a neat π_ι iff its divisor family {t} is upward closed
    bool upward = true;
    for (HfSet f : a.faces())
        if (t != f && is_subset(t, f)) upward = false;
    n.in_n = !a.has_face(t) || upward;
    // identity welds and vertex renamings (type 3b) are isomorphisms
    n.comb_iso = !a.has_face(t) || t.size() == 1;
    return detail::finish(std::move(n));
}

/// π_ι : SA → A for an additive family S and a choice ι(s) ∈ s. The map is
/// flagged neat iff S is upward closed; the weld factorization along a
/// non-decreasing enumeration is checked against the direct assignment.
inline MapExpr pi_iota(
    const Complex& a, const AdditiveFamily& fam,
    const std::function<HfSet(HfSet)>& iota = nullptr) {
    std::vector<std::pair<HfSet, HfSet>> choices;
    for (HfSet s : fam.members) {
        HfSet target = iota ? iota(s) : s.elements().front();
        if (!s.contains(target))
            throw BadIota("ι(" + to_text(s) + ") = " + to_text(target) +
                          " is not an element");
        choices.emplace_back(s, target);
    }
    Complex dom = divide_by_family(a, fam);
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap;
    for (HfSet v : dom.vertices()) {
        auto it = std::find_if(choices.begin(), choices.end(),
                               [&](auto& p) { return p.first == v; });
        vmap[v] = it == choices.end() ? v : it->second;
    }
    SimplicialMap eval(dom, a, std::move(vmap));

    // factor through single welds and compare
    DivSeq enumeration = canonical_nondecreasing_enumeration(fam.members);
    Complex cur = a;
    SimplicialMap composite(a, a, detail::identity_vmap(a));
    for (auto it = enumeration.rbegin(); it != enumeration.rend(); ++it) {
        HfSet s = *it;
        HfSet target;
        for (auto& [k, v] : choices)
            if (k == s) target = v;
        MapExpr w = weld(cur, target, s);
        Complex next = w.domain();
        std::unordered_map<HfSet, HfSet, HfSetHash> vm;
        for (HfSet v : next.vertices()) vm[v] = composite.apply(w.eval().apply(v));
        composite = SimplicialMap(next, a, std::move(vm));
        cur = next;
    }
    if (!composite.same_function(eval))
        throw InternalCheckFailed("π_ι differs from its weld factorization");

    detail::MapNode n;
    n.kind = MapKind::PiIota;
    n.eval = std::move(eval);
    n.family = fam.members;
    for (auto& [s, v] : choices) n.assignment.emplace_back(s, v);
    n.in_w = n.in_d = n.pure = true;
    n.in_n = fam.upward_closed_in(a);
    n.comb_iso = fam.empty();
    return detail::finish(std::move(n));
}

/// Expands a PiIota node into its single-weld factorization.
inline std::vector<MapExpr> weld_factorization(const MapExpr& piiota) {
    if (piiota.kind() != MapKind::PiIota)
        throw UnsupportedProvenance("weld_factorization expects a π_ι node");
    const auto& node = piiota.node();
    DivSeq enumeration = canonical_nondecreasing_enumeration(node.family);
    Complex cur = piiota.codomain();
    std::vector<MapExpr> welds;  // outermost first: π_ι = welds[k-1] ∘ ⋯ ∘ welds[0]? see below
    for (auto it = enumeration.rbegin(); it != enumeration.rend(); ++it) {
        HfSet s = *it;
        HfSet target;
        for (auto& [k, v] : node.assignment)
            if (k == s) target = v;
        MapExpr w = weld(cur, target, s);
        welds.push_back(w);
        cur = w.domain();
    }
    // composition order: π_ι = welds[0] ∘ welds[1] ∘ ⋯ (welds[0] applied last)
    return welds;
}

// ---------------------------------------------------------------------------
// Isomorphisms
// ---------------------------------------------------------------------------

namespace detail {

/// Completes a partial assignment by the identity, checks bijectivity and
/// groundedness in both directions, and wraps the result.
inline MapExpr make_iso(const Complex& dom, const Complex& cod,
                        const std::vector<std::pair<HfSet, HfSet>>& assignment,
                        MapKind kind, int iso_type, std::string label) {
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap, inverse;
    for (HfSet v : dom.vertices()) {
        HfSet w = v;
        for (auto& [from, to] : assignment)
            if (from == v) w = to;
        vmap[v] = w;
    }
    SimplicialMap eval(dom, cod, vmap);
    for (HfSet v : dom.vertices()) {
        HfSet w = eval.apply(v);
        if (!cod.has_vertex(w))
            throw InternalCheckFailed(label + ": image vertex " + to_text(w) +
                                      " missing from the codomain");
        if (inverse.count(w))
            throw InternalCheckFailed(label + ": not injective at " + to_text(w));
        inverse[w] = v;
    }
    if (inverse.size() != cod.vertices().size())
        throw InternalCheckFailed(label + ": not surjective");
    GroundedCheck fwd = check_grounded(eval);
    if (!fwd)
        throw InternalCheckFailed(label + " forward: " + fwd.violation);
    GroundedCheck bwd = check_grounded(SimplicialMap(cod, dom, inverse));
    if (!bwd)
        throw InternalCheckFailed(label + " inverse: " + bwd.violation);

    MapNode n;
    n.kind = kind;
    n.eval = std::move(eval);
    n.assignment = assignment;
    n.iso_type = iso_type;
    n.label = std::move(label);
    n.in_d = n.comb_iso = n.pure = true;
    n.in_w = n.in_n = n.eval.is_identity();
    return finish(std::move(n));
}

inline HfSet union_with(const std::optional<HfSet>& base, HfSet extra) {
    std::vector<HfSet> elems;
    if (base) elems = base->elements();
    elems.push_back(extra);
    return HfSet::set(std::move(elems));
}

} // namespace detail

/// The inverse of an isomorphism node.
inline MapExpr invert_iso(const MapExpr& f) {
    if (!f.is_comb_iso())
        throw UnsupportedProvenance("only combinatorial isomorphisms invert");
    std::vector<std::pair<HfSet, HfSet>> assignment;
    for (HfSet v : f.domain().vertices()) {
        HfSet w = f.eval().apply(v);
        if (w != v) assignment.emplace_back(w, v);
    }
    return detail::make_iso(f.codomain(), f.domain(), assignment,
                            MapKind::LemmaIso, 0, "inverse of " + (f.label().empty() ? std::string("iso") : f.label()));
}

/// Type 1: for r, s ⊆ t with r ∪ s ≠ ∅, r ∩ s = ∅, and t not occurring in
/// the context, the assignment  t → s∪{t}, r∪{t} → t  between
/// (r∪{t})(r∪s)tA and (s∪{t})(r∪s)tA.
inline MapExpr typed_iso_1(const Complex& a, std::optional<HfSet> r,
                           std::optional<HfSet> s, HfSet t) {
    if (!r && !s) throw SideConditionFailed("type 1 requires r ∪ s ≠ ∅");
    if (r && !is_subset(*r, t)) throw SideConditionFailed("type 1 requires r ⊆ t");
    if (s && !is_subset(*s, t)) throw SideConditionFailed("type 1 requires s ⊆ t");
    if (r && s && sets_intersect(*r, *s))
        throw SideConditionFailed("type 1 requires r ∩ s = ∅");
    if (is_vertex_anywhere(t, a))
        throw SideConditionFailed("type 1 requires t outside tc(Vr(A))");
    HfSet rt = detail::union_with(r, t);
    HfSet st = detail::union_with(s, t);
    HfSet rs = r && s ? set_union(*r, *s) : (r ? *r : *s);
    Complex b1 = subdivide_seq(a, {rt, rs, t});
    Complex b2 = subdivide_seq(a, {st, rs, t});
    std::vector<std::pair<HfSet, HfSet>> assignment{{t, st}, {rt, t}};
    MapExpr e = detail::make_iso(b1, b2, assignment, MapKind::TypedIso, 1,
                                 "type 1 isomorphism");
    return e;
}

/// Type 2: for s, t with s ∉ t, t ∉ s, neither occurring in the context,
/// the assignment  (s∖t)∪{t} → (t∖s)∪{s}  between ((s∖t)∪{t})stA and
/// ((t∖s)∪{s})tsA.
inline MapExpr typed_iso_2(const Complex& a, HfSet s, HfSet t) {
    if (is_member(s, t) || is_member(t, s))
        throw SideConditionFailed("type 2 requires s ∉ t and t ∉ s");
    if (is_vertex_anywhere(s, a) || is_vertex_anywhere(t, a))
        throw SideConditionFailed("type 2 requires s, t outside tc(Vr(A))");
    HfSet st = detail::union_with(set_difference(s, t), t);  // (s∖t)∪{t}
    HfSet ts = detail::union_with(set_difference(t, s), s);  // (t∖s)∪{s}
    Complex b1 = subdivide_seq(a, {st, s, t});
    Complex b2 = subdivide_seq(a, {ts, t, s});
    return detail::make_iso(b1, b2, {{st, ts}}, MapKind::TypedIso, 2,
                            "type 2 isomorphism");
}

/// Type 3a: renaming x to {x}, from A to {x}A.
inline MapExpr typed_iso_3a(const Complex& a, HfSet x) {
    HfSet sx = singleton(x);
    if (is_vertex_anywhere(sx, a))
        throw SideConditionFailed("type 3a requires {x} outside tc(Vr(A))");
    Complex b = subdivide(a, sx);
    return detail::make_iso(a, b, {{x, sx}}, MapKind::TypedIso, 3,
                            "type 3a isomorphism");
}

/// Type 3b: renaming {x} back to x, from {x}A to A. A special weld map.
inline MapExpr typed_iso_3b(const Complex& a, HfSet x) {
    HfSet sx = singleton(x);
    if (is_vertex_anywhere(sx, a))
        throw SideConditionFailed("type 3b requires {x} outside tc(Vr(A))");
    Complex b = subdivide(a, sx);
    MapExpr e = detail::make_iso(b, a, {{sx, x}}, MapKind::TypedIso, 4,
                                 "type 3b isomorphism");
    // a type 3b map is a weld
    auto n = std::make_shared<detail::MapNode>(e.node());
    n->in_w = true;
    n->apex = x;
    n->divisor = sx;
    return MapExpr(std::move(n));
}

/// Existence of the special vertices of typed isomorphisms, decided from
/// the context alone: for type 1 the t-vertex needs t a face and r ≠ ∅
/// (the other vertex needs s ≠ ∅); for type 2 the renamed vertex needs
/// s ∪ t a face with s ∩ t ≠ ∅.
struct VertexExistence {
    bool first = false;   // type 1: t in Vr(B1); type 2: (s∖t)∪{t} in Vr(B1)
    bool second = false;  // type 1: r∪{t} in Vr(B1)
};

inline VertexExistence vertex_existence_1(const Complex& a,
                                          const std::optional<HfSet>& r,
                                          const std::optional<HfSet>& s, HfSet t) {
    VertexExistence out;
    out.first = a.has_face(t) && r.has_value();
    out.second = a.has_face(t) && s.has_value();
    return out;
}

inline VertexExistence vertex_existence_2(const Complex& a, HfSet s, HfSet t) {
    VertexExistence out;
    out.first = a.has_face(set_union(s, t)) && sets_intersect(s, t);
    return out;
}

// ---------------------------------------------------------------------------
// Division and composition of maps
// ---------------------------------------------------------------------------

/// sf : (f⁻¹(s))·dom(f) → s·cod(f), sending each face in f⁻¹(s) to the new
/// vertex s and acting as f elsewhere. If s is not a face of the codomain,
/// sf = f. The step is pure iff s ⊆ u(f).
inline MapExpr divide_map(const MapExpr& f, HfSet s) {
    if (s.is_atom()) throw ValidationError("divisors must be Fin+ sets");
    if (!f.codomain().has_face(s)) return f;
    const SimplicialMap& base = f.eval();
    std::vector<HfSet> fam_members = base.preimage_family(s);
    AdditiveFamily fam = AdditiveFamily::in_complex(fam_members, base.domain());
    Complex dom = divide_by_family(base.domain(), fam);
    Complex cod = subdivide(base.codomain(), s);
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap;
    for (HfSet v : dom.vertices())
        vmap[v] = fam.contains(v) ? s : base.apply(v);
    detail::MapNode n;
    n.kind = MapKind::Divide;
    n.eval = SimplicialMap(dom, cod, std::move(vmap));
    n.divisor = s;
    n.child = f.ptr();
    n.in_d = f.in_d();
    n.comb_iso = f.is_comb_iso();
    n.pure = f.pure() && base.face_in_unique_cover(s);
    n.in_w = n.in_n = false;
    return detail::finish(std::move(n));
}

/// Sf via a non-decreasing enumeration of S, checked against the direct
/// description: domain f⁻¹(S)·dom(f), codomain S·cod(f), x → f(x).
inline MapExpr divide_map_by_family(const MapExpr& f, const AdditiveFamily& fam) {
    if (fam.empty()) return f;
    AdditiveFamily checked = AdditiveFamily::in_complex(fam.members, f.codomain());
    DivSeq enumeration = canonical_nondecreasing_enumeration(checked.members);
    MapExpr cur = f;
    bool pure = f.pure();
    for (auto it = enumeration.rbegin(); it != enumeration.rend(); ++it) {
        cur = divide_map(cur, *it);
        pure = pure && cur.pure();
    }
    // direct description of Sf
    std::vector<HfSet> pre = f.eval().preimage_family(checked.members);
    AdditiveFamily prefam = AdditiveFamily::in_complex(pre, f.domain());
    Complex dom = divide_by_family(f.domain(), prefam);
    Complex cod = divide_by_family(f.codomain(), checked);
    if (cur.domain() != dom || cur.codomain() != cod)
        throw InternalCheckFailed("family division: domain or codomain mismatch");
    for (HfSet v : dom.vertices()) {
        HfSet expect = prefam.contains(v) ? f.eval().image(v) : f.eval().apply(v);
        if (cur.eval().apply(v) != expect)
            throw InternalCheckFailed("family division differs from the direct description");
    }
    detail::MapNode n;
    n.kind = MapKind::DivideFamily;
    n.eval = cur.eval();
    n.family = checked.members;
    n.child = f.ptr();
    n.in_d = f.in_d();
    n.comb_iso = f.is_comb_iso();
    n.pure = pure;
    return detail::finish(std::move(n));
}

/// f ∘ g; domains are matched by complex (fingerprint) equality.
inline MapExpr compose(const MapExpr& f, const MapExpr& g) {
    if (f.domain() != g.codomain())
        throw DomainMismatch("dom(f) differs from cod(g)");
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap;
    for (HfSet v : g.domain().vertices())
        vmap[v] = f.eval().apply(g.eval().apply(v));
    detail::MapNode n;
    n.kind = MapKind::Compose;
    n.eval = SimplicialMap(g.domain(), f.codomain(), std::move(vmap));
    n.left = f.ptr();
    n.right = g.ptr();
    n.in_w = f.in_w() && g.in_w();
    n.in_n = f.in_n() && g.in_n();
    n.in_d = f.in_d() && g.in_d();
    n.comb_iso = f.is_comb_iso() && g.is_comb_iso();
    n.pure = f.pure() && g.pure();
    return detail::finish(std::move(n));
}

/// A raw vertex map given by a partial assignment (identity elsewhere).
/// Carries no class certificate; check_grounded reports its status.
inline MapExpr raw_map(const Complex& dom, const Complex& cod,
                       const std::vector<std::pair<HfSet, HfSet>>& assignment) {
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap;
    for (HfSet v : dom.vertices()) {
        HfSet w = v;
        for (auto& [from, to] : assignment)
            if (from == v) w = to;
        vmap[v] = w;
    }
    detail::MapNode n;
    n.kind = MapKind::Raw;
    n.eval = SimplicialMap(dom, cod, std::move(vmap));
    n.assignment = assignment;
    return detail::finish(std::move(n));
}

// ---------------------------------------------------------------------------
// The collapse of grouped faces onto their bases (a weld-division map)
// ---------------------------------------------------------------------------

/// Given a non-decreasing sequence  p⃗ (r₁ s₁₁…s₁n₁) ⋯ (r_m s_m1…s_mn_m)
/// of faces of the context with r_i ⊆ s_ij, builds the weld-division map
///
///   p⃗ (r₁ s₁*) ⋯ (r_m s_m*) · Q  →  p⃗ r₁ ⋯ r_m · Q,   s_ij → r_i,
///
/// as an explicit composition of renaming isomorphisms, welds, and pure
/// divisions. Every division step is verified pure.
struct CollapseGroup {
    HfSet base;                 // r_i
    std::vector<HfSet> members; // s_i1 … s_in_i, each strictly containing base
};

inline MapExpr collapse_groups(const DivSeq& prefix,
                               const std::vector<CollapseGroup>& groups,
                               const Complex& qctx) {
    auto subseq = [&](const DivSeq& s) { return subdivide_seq(qctx, s); };
    auto primed = [](HfSet base, HfSet member) {
        auto diff = set_difference(member, base);
        std::vector<HfSet> elems = diff ? diff->elements() : std::vector<HfSet>{};
        elems.push_back(base);
        return HfSet::set(std::move(elems));
    };

    // full input sequence, for the domain
    DivSeq full = prefix;
    for (const auto& g : groups) {
        full.push_back(g.base);
        for (HfSet s : g.members) {
            if (s == g.base || !is_proper_subset(g.base, s))
                throw PreconditionFailed("collapse groups need base ⊊ member");
            full.push_back(s);
        }
    }
    MapExpr acc;  // composite so far; domain is always subseq(full)
    DivSeq cur = full;

    auto apply_step = [&](MapExpr step) {
        acc = acc.valid() ? compose(step, acc) : step;
    };

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const CollapseGroup& g = groups[gi];
        // prefix entries to divide by at this group: p⃗ r₁ … r_{gi}
        DivSeq outer = prefix;
        for (std::size_t k = 0; k < gi; ++k) outer.push_back(groups[k].base);
        // suffix: untouched later groups over the context
        DivSeq suffix;
        for (std::size_t k = gi + 1; k < groups.size(); ++k) {
            suffix.push_back(groups[k].base);
            for (HfSet s : groups[k].members) suffix.push_back(s);
        }
        const std::size_t nmem = g.members.size();

        // phase A: rename s_ij to s'_ij = (s_ij ∖ r_i) ∪ {r_i}, moving each
        // past r_i; the base renaming is divided by everything to its left
        for (std::size_t j = 0; j < nmem; ++j) {
            HfSet sij = g.members[j];
            HfSet sp = primed(g.base, sij);
            DivSeq rest;  // s_{i,j+1} … s_{i,n_i} then the suffix
            for (std::size_t k = j + 1; k < nmem; ++k) rest.push_back(g.members[k]);
            for (HfSet x : suffix) rest.push_back(x);
            DivSeq dom0 = {g.base, sij};
            dom0.insert(dom0.end(), rest.begin(), rest.end());
            DivSeq cod0 = {sp, g.base};
            cod0.insert(cod0.end(), rest.begin(), rest.end());
            MapExpr step = detail::make_iso(subseq(dom0), subseq(cod0),
                                            {{sij, sp}}, MapKind::LemmaIso, 0,
                                            "commutation renaming");
            // divide by the already-primed members and the outer prefix
            DivSeq left = outer;
            for (std::size_t k = 0; k < j; ++k)
                left.push_back(primed(g.base, g.members[k]));
            for (auto it = left.rbegin(); it != left.rend(); ++it) {
                step = divide_map(step, *it);
                if (!step.pure())
                    throw InternalCheckFailed("impure division in collapse phase A");
            }
            apply_step(step);
            // bookkeeping: cur has ... base sij rest → sp base rest
            for (std::size_t k = 0; k < cur.size(); ++k)
                if (cur[k] == g.base && k + 1 < cur.size() && cur[k + 1] == sij) {
                    cur[k] = sp;
                    cur[k + 1] = g.base;
                    break;
                }
            if (acc.codomain() != subseq(cur))
                throw InternalCheckFailed("collapse phase A lost track of the sequence");
        }

        // phase B: weld each primed member onto the base, dividing by the
        // outer prefix
        for (std::size_t j = 0; j < nmem; ++j) {
            HfSet sp = primed(g.base, g.members[j]);
            DivSeq rest;  // remaining primed members, the base, the suffix
            for (std::size_t k = j + 1; k < nmem; ++k)
                rest.push_back(primed(g.base, g.members[k]));
            rest.push_back(g.base);
            for (HfSet x : suffix) rest.push_back(x);
            MapExpr step = weld(subseq(rest), g.base, sp);
            for (auto it = outer.rbegin(); it != outer.rend(); ++it) {
                step = divide_map(step, *it);
                if (!step.pure())
                    throw InternalCheckFailed("impure division in collapse phase B");
            }
            apply_step(step);
            cur.erase(std::find(cur.begin(), cur.end(), sp));
            if (acc.codomain() != subseq(cur))
                throw InternalCheckFailed("collapse phase B lost track of the sequence");
        }
    }

    if (!acc.valid()) acc = identity_map(subseq(full));

    // verify against the direct assignment
    DivSeq target = prefix;
    for (const auto& g : groups) target.push_back(g.base);
    Complex dom = subseq(full), cod = subseq(target);
    std::unordered_map<HfSet, HfSet, HfSetHash> vmap;
    for (HfSet v : dom.vertices()) {
        HfSet w = v;
        for (const auto& g : groups)
            for (HfSet s : g.members)
                if (v == s) w = g.base;
        vmap[v] = w;
    }
    SimplicialMap expect(dom, cod, std::move(vmap));
    if (!acc.eval().same_function(expect))
        throw InternalCheckFailed("collapse differs from the direct assignment");
    return acc;
}

} // namespace stellar

#endif
