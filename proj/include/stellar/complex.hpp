#ifndef STELLAR_COMPLEX_HPP
#define STELLAR_COMPLEX_HPP

/**
 * Simplicial complexes with HfSet faces and stellar subdivision.
 *
 * Faces are stored explicitly (no implicit subset closure); `validate`
 * enforces closure and the no-self-membership condition s ∉ tc(t).
 * Subdividing by s replaces every face t ⊇ s by its shatter set
 * { y ∪ {s} : s ∪ y = t, s ⊄ y }, with the new vertex equal to the set s
 * itself. Dividing by a non-face leaves the complex unchanged.
 */

#include <algorithm>
#include <cstdlib>
#include <unordered_set>
#include <vector>

#include "stellar/hfset.hpp"

namespace stellar {

class Complex {
public:
    Complex() = default;

    /// Wraps a face list without checking the complex invariants.
    /// Faces are canonicalized (sorted, deduplicated).
    static Complex unchecked(std::vector<HfSet> faces) {
        Complex c;
        std::sort(faces.begin(), faces.end());
        faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
        c.faces_ = std::move(faces);
        return c;
    }

    /// Checks subset closure, no-self-membership, and Vr(A) ∩ A = ∅.
    static Complex validate(std::vector<HfSet> faces) {
        Complex c = unchecked(std::move(faces));
        for (HfSet t : c.faces_) {
            if (t.is_atom())
                throw ValidationError("face " + to_text(t) + " is an atom");
            if (t.size() > 1) {
                // every maximal proper subset must be present
                std::vector<HfSet> elems = t.elements();
                for (std::size_t i = 0; i < elems.size(); ++i) {
                    std::vector<HfSet> rest;
                    for (std::size_t j = 0; j < elems.size(); ++j)
                        if (j != i) rest.push_back(elems[j]);
                    HfSet sub = HfSet::set(std::move(rest));
                    if (!c.has_face(sub))
                        throw NotSubsetClosed("face " + to_text(sub) +
                                              " of " + to_text(t) +
                                              " is missing");
                }
            }
        }
        for (HfSet s : c.faces_)
            for (HfSet t : c.faces_)
                if (in_transitive_closure(s, t))
                    throw SelfMembership("face " + to_text(s) +
                                         " lies in tc(" + to_text(t) + ")");
        return c;
    }

    const std::vector<HfSet>& faces() const { return faces_; }
    std::size_t size() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }

    bool has_face(HfSet s) const {
        return std::binary_search(faces_.begin(), faces_.end(), s);
    }

    /// Vertices in canonical order.
    std::vector<HfSet> vertices() const {
        std::vector<HfSet> out;
        std::unordered_set<const void*> seen;
        for (HfSet f : faces_)
            for (HfSet v : f.elements())
                if (seen.insert(v.raw()).second) out.push_back(v);
        std::sort(out.begin(), out.end());
        return out;
    }

    bool has_vertex(HfSet v) const {
        for (HfSet f : faces_)
            if (f.contains(v)) return true;
        return false;
    }

    /// Maximal faces under inclusion.
    std::vector<HfSet> maximal_faces() const {
        std::vector<HfSet> out;
        for (HfSet f : faces_) {
            bool maximal = true;
            for (HfSet g : faces_)
                if (f != g && is_subset(f, g)) {
                    maximal = false;
                    break;
                }
            if (maximal) out.push_back(f);
        }
        return out;
    }

    std::size_t max_face_cardinality() const {
        std::size_t d = 0;
        for (HfSet f : faces_) d = std::max(d, f.size());
        return d;
    }

    friend bool operator==(const Complex& a, const Complex& b) {
        return a.faces_ == b.faces_;
    }
    friend bool operator!=(const Complex& a, const Complex& b) {
        return !(a == b);
    }

private:
    std::vector<HfSet> faces_;  // canonical order
};

/// The full complex on the declared alphabet: all nonempty subsets of Ur.
inline Complex full_complex(const Urelements& ur) {
    const std::vector<HfSet>& atoms = ur.atoms();
    std::vector<HfSet> faces;
    for (std::size_t mask = 1; mask < (std::size_t(1) << atoms.size()); ++mask) {
        std::vector<HfSet> elems;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (mask & (std::size_t(1) << i)) elems.push_back(atoms[i]);
        faces.push_back(HfSet::set(std::move(elems)));
    }
    return Complex::unchecked(std::move(faces));
}

/// Size guardrail for complexes produced by subdivision; subdivision is
/// exponential and desk-scale instances exercise the calculus fully.
/// Initialized from STELLAR_MAX_FACES, default 200.
inline std::size_t& max_faces_limit() {
    static std::size_t limit = [] {
        if (const char* env = std::getenv("STELLAR_MAX_FACES")) {
            char* end = nullptr;
            unsigned long v = std::strtoul(env, &end, 10);
            if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        }
        return std::size_t{200};
    }();
    return limit;
}

/// Stellar subdivision sA. If s is not a face of A, sA = A.
inline Complex subdivide(const Complex& a, HfSet s) {
    if (!s.valid() || s.is_atom())
        throw ValidationError("divisors must be Fin+ sets");
    if (!a.has_face(s)) return a;
    if (a.size() > max_faces_limit())
        throw GuardrailExceeded("complex exceeds the face limit (" +
                                std::to_string(max_faces_limit()) +
                                "); raise STELLAR_MAX_FACES to override");
    std::vector<HfSet> out;
    for (HfSet t : a.faces()) {
        if (!is_subset(s, t)) {
            out.push_back(t);
            continue;
        }
        // shatter t: faces (t \ s) ∪ w ∪ {s} for every proper subset w of s
        std::vector<HfSet> core;
        for (HfSet v : t.elements())
            if (!s.contains(v)) core.push_back(v);
        std::vector<HfSet> selems = s.elements();
        const std::size_t n = selems.size();
        for (std::size_t mask = 0; mask + 1 < (std::size_t(1) << n); ++mask) {
            std::vector<HfSet> face = core;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::size_t(1) << i)) face.push_back(selems[i]);
            face.push_back(s);
            out.push_back(HfSet::set(std::move(face)));
        }
    }
    return Complex::unchecked(std::move(out));
}

/// Division sequences act leftmost-outermost: s0 s1 ⋯ sl A = s0(s1⋯(sl A)).
using DivSeq = std::vector<HfSet>;

inline Complex subdivide_seq(const Complex& a, const DivSeq& seq) {
    Complex c = a;
    for (auto it = seq.rbegin(); it != seq.rend(); ++it)
        c = subdivide(c, *it);
    return c;
}

/// Recovers the ground complex {sp(s) | s ∈ A} of a divided complex.
inline Complex ground_of(const Complex& a) {
    std::vector<HfSet> faces;
    faces.reserve(a.size());
    for (HfSet s : a.faces()) faces.push_back(support(s));
    return Complex::unchecked(std::move(faces));
}

/// Whether every face of A is a set of atoms.
inline bool is_grounded(const Complex& a) {
    for (HfSet f : a.faces())
        for (HfSet v : f.elements())
            if (!v.is_atom()) return false;
    return true;
}

/// Face-structure membership: s ∈ D^A_σ iff sp(s) ⊆ σ.
inline bool in_face_structure(HfSet s, HfSet sigma, const Complex& a) {
    if (!a.has_face(s))
        throw PreconditionFailed("argument " + to_text(s) +
                                 " is not a face of the complex");
    return is_subset(support(s), sigma);
}

} // namespace stellar

#endif
