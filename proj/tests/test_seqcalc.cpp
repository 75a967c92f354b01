#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "stellar/seqcalc.hpp"

using namespace stellar;

namespace {

Urelements ur3() { return Urelements({"a", "b", "c"}); }

} // namespace

TEST_CASE("face of a sequence: base cases") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet abc = HfSet::set({a, b, c});
    REQUIRE(is_face_of_seq(HfSet::set({a, b}), {abc}));
    REQUIRE_FALSE(is_face_of_seq(abc, {abc}));
    // {a, m} with m = {a,b,c}: {a} ∪ m is a face of the empty sequence
    REQUIRE(is_face_of_seq(HfSet::set({a, abc}), {abc}));
    // everything over the empty sequence
    REQUIRE(is_face_of_seq(HfSet::set({a}), {}));
    REQUIRE_FALSE(is_face_of_seq(HfSet::set({abc}), {}));
}

TEST_CASE("conservativity: sequence faces against divided complexes") {
    Urelements ur = ur3();
    std::mt19937 rng(17);
    auto complexes = oracles::all_grounded_complexes(ur);
    std::uniform_int_distribution<std::size_t> pick_complex(0, complexes.size() - 1);
    for (int trial = 0; trial < 120; ++trial) {
        Complex ground = complexes[pick_complex(rng)];
        if (ground.empty()) continue;
        Complex c = ground;
        DivSeq seq;
        std::uniform_int_distribution<int> len(0, 3);
        int steps = len(rng);
        for (int i = 0; i < steps; ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
            HfSet divisor = c.faces()[pick(rng)];
            seq.insert(seq.begin(), divisor);
            c = subdivide(c, divisor);
        }
        std::vector<HfSet> candidates = c.faces();
        auto verts = c.vertices();
        if (verts.size() <= 8)
            for (HfSet sub : oracles::all_nonempty_subsets(verts))
                candidates.push_back(sub);
        for (HfSet t : candidates) {
            bool lhs = is_face_of_seq(t, seq) && ground.has_face(support(t));
            REQUIRE(lhs == c.has_face(t));
        }
    }
}

TEST_CASE("faces of a sequence form a subset-closed complex") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    DivSeq seq = {HfSet::set({a, b}), HfSet::set({a, b, c})};
    Complex f = faces_of_seq(seq, ur);
    REQUIRE(f == subdivide_seq(full_complex(ur), seq));
    REQUIRE_NOTHROW(Complex::validate(f.faces()));
    // subset closure via the sequence predicate itself
    for (HfSet t : f.faces())
        if (t.size() > 1)
            for (HfSet v : t.elements()) {
                auto rest = set_difference(t, singleton(v));
                if (rest) REQUIRE(is_face_of_seq(*rest, seq));
            }
}

TEST_CASE("faces over the alphabet") {
    Urelements ur({"a", "b"});
    Complex f = faces_of_seq({}, ur);
    REQUIRE(f == full_complex(ur));
    HfSet ab = HfSet::set({ur.atom("a"), ur.atom("b")});
    REQUIRE(faces_of_seq({ab}, ur).size() == 5);
}

TEST_CASE("vertex sets of sequences") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet abc = HfSet::set({a, b, c});
    REQUIRE(vr_of_seq({}, ur) == std::vector<HfSet>{a, b, c});
    REQUIRE(vr_of_seq({abc}, ur) == std::vector<HfSet>{a, b, c, abc});
    // dividing twice by the same set: the second entry is no longer a face
    REQUIRE(vr_of_seq({abc, abc}, ur) == std::vector<HfSet>{a, b, c, abc});
}

TEST_CASE("fingerprint equality and inequality") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet ab = HfSet::set({a, b}), ac = HfSet::set({a, c});
    REQUIRE(equiv_fingerprint({HfSet::set({a}), HfSet::set({b})}, ur) ==
            equiv_fingerprint({HfSet::set({b}), HfSet::set({a})}, ur));
    REQUIRE(equiv_fingerprint({ab, ab}, ur) == equiv_fingerprint({ab}, ur));
    // union is a face and intersection is nonempty: orders differ
    REQUIRE(equiv_fingerprint({ab, ac}, ur) != equiv_fingerprint({ac, ab}, ur));
}

TEST_CASE("bounded rewriting") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b");
    HfSet sa = HfSet::set({a}), sb = HfSet::set({b});
    REQUIRE(rewrite_equiv({sa, sb}, {sb, sa}, 12) == RewriteResult::Proven);
    REQUIRE(rewrite_equiv({sa, sb}, {sa, sb}, 0) == RewriteResult::Proven);
    HfSet ab = HfSet::set({a, b});
    REQUIRE(rewrite_equiv({ab, ab}, {ab}, 12) == RewriteResult::Proven);
}

TEST_CASE("rewriting is sound for fingerprints") {
    Urelements ur = ur3();
    std::mt19937 rng(23);
    Complex full = full_complex(ur);
    std::uniform_int_distribution<std::size_t> pick(0, full.size() - 1);
    std::uniform_int_distribution<int> len(0, 3);
    for (int trial = 0; trial < 150; ++trial) {
        DivSeq s1, s2;
        for (int i = 0, n = len(rng); i < n; ++i) s1.push_back(full.faces()[pick(rng)]);
        for (int i = 0, n = len(rng); i < n; ++i) s2.push_back(full.faces()[pick(rng)]);
        if (rewrite_equiv(s1, s2, 8) == RewriteResult::Proven)
            REQUIRE(equiv_fingerprint(s1, ur) == equiv_fingerprint(s2, ur));
    }
}

TEST_CASE("additive family validation") {
    Urelements ur = ur3();
    Complex delta = full_complex(ur);
    HfSet ab = HfSet::set({ur.atom("a"), ur.atom("b")});
    HfSet ac = HfSet::set({ur.atom("a"), ur.atom("c")});
    HfSet abc = HfSet::set({ur.atom("a"), ur.atom("b"), ur.atom("c")});
    REQUIRE_NOTHROW(AdditiveFamily::in_complex({ab, ac, abc}, delta));
    REQUIRE_THROWS_AS(AdditiveFamily::in_complex({ab, ac}, delta), NotAdditive);
    REQUIRE_NOTHROW(AdditiveFamily::in_complex({ab, abc}, delta));
    REQUIRE(AdditiveFamily::in_complex({ab, abc}, delta).upward_closed_in(delta));
    REQUIRE_FALSE(AdditiveFamily::in_complex({ab}, delta).upward_closed_in(delta));
}

TEST_CASE("non-decreasing enumerations") {
    Urelements ur = ur3();
    HfSet ab = HfSet::set({ur.atom("a"), ur.atom("b")});
    HfSet ac = HfSet::set({ur.atom("a"), ur.atom("c")});
    HfSet abc = HfSet::set({ur.atom("a"), ur.atom("b"), ur.atom("c")});
    {
        auto enums = nondecreasing_enumerations({ab, abc});
        REQUIRE(enums.size() == 1);
        REQUIRE(enums[0] == DivSeq{ab, abc});
    }
    {
        auto enums = nondecreasing_enumerations({ab, ac});
        REQUIRE(enums.size() == 2);
    }
    {
        Complex delta = full_complex(ur);
        auto enums = nondecreasing_enumerations(delta.faces());
        REQUIRE(enums.size() == oracles::linear_extension_count(delta.faces()));
        // lexicographically minimal first
        REQUIRE(enums[0] == canonical_nondecreasing_enumeration(delta.faces()));
    }
}

TEST_CASE("division by a family is enumeration independent") {
    Urelements ur = ur3();
    Complex delta = full_complex(ur);
    std::vector<HfSet> big;
    for (HfSet f : delta.faces())
        if (f.size() >= 2) big.push_back(f);
    AdditiveFamily fam = AdditiveFamily::in_complex(big, delta);
    Complex bary = divide_by_family(delta, fam, /*check_all_enumerations=*/true);
    REQUIRE(bary.size() == 25);
    AdditiveFamily empty = AdditiveFamily::in_complex({}, delta);
    REQUIRE(divide_by_family(delta, empty) == delta);
    Urelements ur2({"a", "b"});
    Complex seg = full_complex(ur2);
    HfSet ab = HfSet::set({ur2.atom("a"), ur2.atom("b")});
    REQUIRE(divide_by_family(seg, AdditiveFamily::in_complex({ab}, seg)) ==
            subdivide(seg, ab));
}

TEST_CASE("vertex formula for family divisions") {
    // vr(TA) = T ∪ (Vr(A) ∖ {y : {y} ∈ T})
    Urelements ur = ur3();
    std::mt19937 rng(31);
    auto complexes = oracles::all_grounded_complexes(ur);
    std::uniform_int_distribution<std::size_t> pick_complex(0, complexes.size() - 1);
    for (int trial = 0; trial < 100; ++trial) {
        Complex a = complexes[pick_complex(rng)];
        if (a.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
        std::vector<HfSet> seed;
        for (int i = 0; i < 2; ++i) seed.push_back(a.faces()[pick(rng)]);
        AdditiveFamily fam =
            AdditiveFamily::in_complex(additive_closure(seed, a), a);
        Complex ta = divide_by_family(a, fam);
        std::vector<HfSet> expect = fam.members;
        for (HfSet v : a.vertices())
            if (!fam.contains(singleton(v))) expect.push_back(v);
        std::sort(expect.begin(), expect.end());
        REQUIRE(ta.vertices() == expect);
    }
}

TEST_CASE("linear face predicate matches membership") {
    Urelements ur = ur3();
    Complex delta = full_complex(ur);
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet ab = HfSet::set({a, b});
    HfSet abc = HfSet::set({a, b, c});
    AdditiveFamily T = AdditiveFamily::in_complex({ab, abc}, delta);
    Complex ta = divide_by_family(delta, T);
    // {c} ∪ {{a,b}} fails condition (d): {a,b,c} ⊆ {c} ∪ {a,b} but ⊄ {a,b}
    REQUIRE_FALSE(linear_face_predicate({c}, {ab}, T, delta));
    REQUIRE_FALSE(ta.has_face(HfSet::set({c, ab})));
    REQUIRE_FALSE(linear_face_predicate({a, b}, {}, T, delta));
    REQUIRE(linear_face_predicate({}, {ab, abc}, T, delta));
    REQUIRE(ta.has_face(HfSet::set({ab, abc})));
}

TEST_CASE("linear face predicate exhaustively") {
    Urelements ur = ur3();
    std::mt19937 rng(41);
    auto complexes = oracles::all_grounded_complexes(ur);
    std::uniform_int_distribution<std::size_t> pick_complex(0, complexes.size() - 1);
    for (int trial = 0; trial < 60; ++trial) {
        Complex a = complexes[pick_complex(rng)];
        if (a.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
        std::vector<HfSet> seed{a.faces()[pick(rng)], a.faces()[pick(rng)]};
        AdditiveFamily T =
            AdditiveFamily::in_complex(additive_closure(seed, a), a);
        if (T.size() > 5) continue;
        Complex ta = divide_by_family(a, T);
        auto verts = a.vertices();
        // enumerate x over subsets of Vr(A), X over subsets of T
        for (std::size_t xm = 0; xm < (std::size_t(1) << verts.size()); ++xm) {
            std::vector<HfSet> x;
            for (std::size_t i = 0; i < verts.size(); ++i)
                if (xm & (std::size_t(1) << i)) x.push_back(verts[i]);
            for (std::size_t Xm = 0; Xm < (std::size_t(1) << T.size()); ++Xm) {
                std::vector<HfSet> X;
                for (std::size_t i = 0; i < T.size(); ++i)
                    if (Xm & (std::size_t(1) << i)) X.push_back(T.members[i]);
                if (x.empty() && X.empty()) continue;
                std::vector<HfSet> elems = x;
                for (HfSet s : X) elems.push_back(s);
                bool expect = ta.has_face(HfSet::set(elems));
                REQUIRE(linear_face_predicate(x, X, T, a) == expect);
            }
        }
    }
}

TEST_CASE("sequence vertices are atoms or face-entries of their tails") {
    Urelements ur = ur3();
    std::mt19937 rng(61);
    Complex full = full_complex(ur);
    std::uniform_int_distribution<std::size_t> pick(0, full.size() - 1);
    for (int trial = 0; trial < 100; ++trial) {
        DivSeq seq;
        std::uniform_int_distribution<int> len(0, 4);
        for (int i = 0, n = len(rng); i < n; ++i)
            seq.push_back(full.faces()[pick(rng)]);
        for (HfSet v : vr_of_seq(seq, ur)) {
            if (v.is_atom()) continue;
            bool found = false;
            for (std::size_t i = 0; i < seq.size() && !found; ++i) {
                DivSeq tail(seq.begin() + i + 1, seq.end());
                if (seq[i] == v && is_face_of_seq(v, tail)) found = true;
            }
            REQUIRE(found);
        }
    }
}
