#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stellar/hfset.hpp"

using namespace stellar;

namespace {

Urelements ur3() { return Urelements({"a", "b", "c"}); }

HfSet random_hfset(std::mt19937& rng, const Urelements& ur, int depth) {
    std::uniform_int_distribution<int> coin(0, 99);
    if (depth == 0 || coin(rng) < 40) {
        std::uniform_int_distribution<std::size_t> pick(0, ur.size() - 1);
        return ur.atoms()[pick(rng)];
    }
    std::uniform_int_distribution<int> width(1, 3);
    std::vector<HfSet> elems;
    int n = width(rng);
    for (int i = 0; i < n; ++i) elems.push_back(random_hfset(rng, ur, depth - 1));
    return HfSet::set(std::move(elems));
}

} // namespace

TEST_CASE("extensional equality through interning") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b");
    HfSet s1 = HfSet::set({a, b});
    HfSet s2 = HfSet::set({b, a, b});
    REQUIRE(s1 == s2);
    REQUIRE(s1.size() == 2);
    HfSet nested1 = HfSet::set({s1, a});
    HfSet nested2 = HfSet::set({a, HfSet::set({b, a})});
    REQUIRE(nested1 == nested2);
    REQUIRE(nested1 != s1);
}

TEST_CASE("canonical order: rank, then cardinality, then children") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet ab = HfSet::set({a, b});
    REQUIRE(a < b);
    REQUIRE(c < ab);                       // rank 0 before rank 1
    REQUIRE(ab < HfSet::set({ab, c}));     // rank 1 before rank 2
    REQUIRE(HfSet::set({a}) < ab);         // cardinality
    REQUIRE(ab < HfSet::set({a, c}));      // lexicographic children
    std::vector<HfSet> elems = HfSet::set({ab, c}).elements();
    REQUIRE(elems.front() == c);
    REQUIRE(elems.back() == ab);
}

TEST_CASE("support") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    REQUIRE(support(HfSet::set({a, b})) == HfSet::set({a, b}));
    REQUIRE(support(HfSet::set({HfSet::set({a, b}), c})) == HfSet::set({a, b, c}));
    REQUIRE(support(HfSet::set({HfSet::set({HfSet::set({a})})})) == HfSet::set({a}));
    REQUIRE(support(a) == HfSet::set({a}));
}

TEST_CASE("transitive closure") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b");
    REQUIRE(transitive_closure(HfSet::set({a})) == std::vector<HfSet>{a});
    {
        auto tc = transitive_closure(HfSet::set({HfSet::set({a}), b}));
        std::vector<HfSet> expect{a, b, HfSet::set({a})};
        std::sort(expect.begin(), expect.end());
        REQUIRE(tc == expect);
    }
    {
        auto tc = transitive_closure(HfSet::set({HfSet::set({a, b})}));
        std::vector<HfSet> expect{a, b, HfSet::set({a, b})};
        std::sort(expect.begin(), expect.end());
        REQUIRE(tc == expect);
    }
}

TEST_CASE("tc respects union") {
    Urelements ur = ur3();
    std::mt19937 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        HfSet s = random_hfset(rng, ur, 3);
        HfSet t = random_hfset(rng, ur, 3);
        if (s.is_atom() || t.is_atom()) continue;
        auto tu = transitive_closure(set_union(s, t));
        std::vector<HfSet> expect = transitive_closure(s);
        for (HfSet x : transitive_closure(t)) expect.push_back(x);
        std::sort(expect.begin(), expect.end());
        expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
        REQUIRE(tu == expect);
    }
}

TEST_CASE("support properties hold on random values") {
    Urelements ur = ur3();
    std::mt19937 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        HfSet s = random_hfset(rng, ur, 3);
        HfSet t = random_hfset(rng, ur, 3);
        if (t.is_set()) {
            for (HfSet e : t.elements())
                REQUIRE(is_subset(support(e), support(t)));
        }
        if (s.is_set() && t.is_set()) {
            REQUIRE(support(set_union(s, t)) ==
                    set_union(support(s), support(t)));
            if (is_subset(s, t)) REQUIRE(is_subset(support(s), support(t)));
        }
        REQUIRE(support(singleton(s)) == support(s));
    }
}

TEST_CASE("set operations") {
    Urelements ur = ur3();
    HfSet a = ur.atom("a"), b = ur.atom("b");
    REQUIRE(set_union(HfSet::set({a}), HfSet::set({b})) == HfSet::set({a, b}));
    REQUIRE(is_subset(HfSet::set({a}), HfSet::set({a, b})));
    REQUIRE_FALSE(is_subset(HfSet::set({a, b}), HfSet::set({a})));
    REQUIRE_FALSE(set_difference(HfSet::set({a, b}), HfSet::set({a, b})).has_value());
    REQUIRE(set_difference(HfSet::set({a, b}), HfSet::set({a})) == HfSet::set({b}));
    REQUIRE(is_member(a, HfSet::set({a, b})));
    REQUIRE_FALSE(is_member(HfSet::set({a}), HfSet::set({a, b})));
}

TEST_CASE("empty set is rejected") {
    REQUIRE_THROWS_AS(HfSet::set({}), EmptyResult);
}

TEST_CASE("undeclared atoms are rejected") {
    Urelements ur = ur3();
    REQUIRE_THROWS_AS(ur.atom("zz"), UndeclaredAtom);
    REQUIRE_THROWS_AS(parse_hfset("{a,zz}", ur), UndeclaredAtom);
    HfSet d = HfSet::atom("d");
    REQUIRE_THROWS_AS(ur.check(HfSet::set({d})), UndeclaredAtom);
}

TEST_CASE("text round trip") {
    Urelements ur = ur3();
    HfSet v = parse_hfset("{{a,b},c}", ur);
    REQUIRE(v == HfSet::set({HfSet::set({ur.atom("a"), ur.atom("b")}), ur.atom("c")}));
    std::mt19937 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        HfSet s = random_hfset(rng, ur, 4);
        REQUIRE(parse_hfset(to_text(s), ur) == s);
    }
    REQUIRE_THROWS_AS(parse_hfset("{}", ur), ParseError);
    REQUIRE_THROWS_AS(parse_hfset("{a,", ur), ParseError);
    REQUIRE_THROWS_AS(parse_hfset("a}", ur), ParseError);
}
