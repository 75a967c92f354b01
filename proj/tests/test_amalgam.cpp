#include <catch2/catch_amalgamated.hpp>

#include "gen.hpp"
#include "stellar/amalgam.hpp"

using namespace stellar;

namespace {
const bool raised_guardrail = [] {
    max_faces_limit() = 100000;
    return true;
}();
}

namespace {

struct Fixture {
    Urelements ur{std::vector<std::string>{"a", "b", "c"}};
    HfSet a = ur.atom("a"), b = ur.atom("b"), c = ur.atom("c");
    HfSet ab = HfSet::set({a, b}), ac = HfSet::set({a, c}),
          bc = HfSet::set({b, c});
    HfSet m = HfSet::set({a, b, c});
    Complex delta = full_complex(ur);
};

// T built to satisfy (II) and (III) against S: close p-containing seeds
// under unions with S-members and internal unions.
std::vector<HfSet> close_T(std::vector<HfSet> seeds,
                           const std::vector<HfSet>& S, HfSet p,
                           const Complex& q) {
    std::vector<HfSet> T;
    for (HfSet t : seeds)
        if (t.contains(p)) T.push_back(t);
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<HfSet> add;
        auto push = [&](HfSet u) {
            if (q.has_face(u) &&
                std::find(T.begin(), T.end(), u) == T.end() &&
                std::find(add.begin(), add.end(), u) == add.end())
                add.push_back(u);
        };
        for (HfSet t1 : T)
            for (HfSet t2 : T) push(set_union(t1, t2));
        for (HfSet t : T)
            for (HfSet s : S) push(set_union(t, s));
        if (!add.empty()) {
            changed = true;
            for (HfSet u : add) T.push_back(u);
        }
    }
    std::sort(T.begin(), T.end());
    return T;
}

} // namespace

TEST_CASE("base amalgamation of two edge welds") {
    Fixture fx;
    MapExpr pi = weld(fx.delta, fx.b, fx.ab);
    MapExpr gp = weld(fx.delta, fx.c, fx.bc);
    AmalgamationResult r = amalgamate_base(pi, gp);
    REQUIRE(compose(pi, r.f).eval().same_function(compose(gp, r.g).eval()));
    REQUIRE(r.f.in_d());
    REQUIRE(r.g.in_n());
    REQUIRE(check_grounded(r.f.eval()).ok);
}

TEST_CASE("base amalgamation degenerate weld") {
    Fixture fx;
    Urelements ur4({"a", "b", "c", "d"});
    HfSet ad = HfSet::set({ur4.atom("a"), ur4.atom("d")});
    MapExpr pi = weld(fx.delta, ur4.atom("a"), ad);  // identity: ad not a face
    MapExpr gp = weld(fx.delta, fx.b, fx.m);
    AmalgamationResult r = amalgamate_base(pi, gp);
    REQUIRE(r.g.eval().is_identity());
    REQUIRE(r.f.eval().same_function(gp.eval()));
}

TEST_CASE("base amalgamation of a weld against itself") {
    Fixture fx;
    MapExpr pi = weld(fx.delta, fx.b, fx.m);
    AmalgamationResult r = amalgamate_base(pi, pi);
    REQUIRE(compose(pi, r.f).eval().same_function(compose(pi, r.g).eval()));
    REQUIRE(r.g.in_n());
}

TEST_CASE("amalgamation over weld chains") {
    gen::Rng rng(1234);
    Fixture fx;
    for (int n = 1; n <= 3; ++n) {
        for (int trial = 0; trial < 8; ++trial) {
            MapExpr fp = gen::random_weld_chain(rng, fx.delta, n);
            MapExpr gp = gen::random_d_map(rng, fx.delta, 2);
            AmalgamationResult r = amalgamate_over_welds(fp, gp);
            REQUIRE(compose(fp, r.f).eval().same_function(
                compose(gp, r.g).eval()));
            REQUIRE(r.g.in_n());
        }
    }
}

TEST_CASE("separating order on small instances") {
    Fixture fx;
    {
        // S = {{a}}, T = {{a,b}}
        HfSet sa = HfSet::set({fx.a});
        SeparatingOrder ord = separating_order({sa}, {fx.ab}, fx.delta);
        REQUIRE(ord.before(sa, fx.ab));
    }
    {
        // forced chain S = T = {{a,b,c}}
        SeparatingOrder ord = separating_order({fx.m}, {fx.m}, fx.delta);
        REQUIRE(ord.order.size() == 1);
    }
    {
        // barycentric-style families over the triangle
        std::vector<HfSet> S{fx.ab, fx.m};
        std::vector<HfSet> T{fx.ab, fx.m};
        SeparatingOrder ord = separating_order(S, T, fx.delta);
        REQUIRE(ord.order.size() == 2);
        REQUIRE(ord.before(fx.ab, fx.m));
    }
    {
        // (V) failure is reported
        HfSet sa = HfSet::set({fx.a});
        REQUIRE_THROWS_AS(separating_order({fx.ab}, {HfSet::set({fx.b, fx.c})},
                                           fx.delta),
                          PreconditionFailed);
        (void)sa;
    }
}

TEST_CASE("main lemma certificate: trivial and small cases") {
    Fixture fx;
    {
        // T = ∅: identity certificate
        AdditiveFamily S = AdditiveFamily::in_complex({fx.ab}, fx.delta);
        AdditiveFamily T = AdditiveFamily::in_complex({}, fx.delta);
        PureCertificate cert = main_lemma_certificate(S, T, fx.a, fx.delta);
        REQUIRE(cert.composite.eval().is_identity());
    }
    {
        // S = T = {{a,b,c}}, p = a
        AdditiveFamily S = AdditiveFamily::in_complex({fx.m}, fx.delta);
        AdditiveFamily T = AdditiveFamily::in_complex({fx.m}, fx.delta);
        PureCertificate cert = main_lemma_certificate(S, T, fx.a, fx.delta);
        REQUIRE(cert.composite.pure());
        for (const MapExpr& g : cert.generators) {
            bool ok = g.in_w() || g.is_comb_iso() || g.pure();
            REQUIRE(ok);
        }
    }
    {
        // S = {{a,b}}, T = {{a,b},{a,b,c}}, p = a
        AdditiveFamily S = AdditiveFamily::in_complex({fx.ab}, fx.delta);
        AdditiveFamily T = AdditiveFamily::in_complex({fx.ab, fx.m}, fx.delta);
        PureCertificate cert = main_lemma_certificate(S, T, fx.a, fx.delta);
        REQUIRE(cert.composite.pure());
        // composition equals S·π_{p,T} exactly (also verified internally)
        MapExpr target = divide_map_by_family(
            pi_iota(fx.delta, T, [&](HfSet) { return fx.a; }), S);
        REQUIRE(cert.composite.eval().same_function(target.eval()));
    }
}

TEST_CASE("main lemma rejects broken preconditions") {
    Fixture fx;
    AdditiveFamily S = AdditiveFamily::in_complex({fx.ab}, fx.delta);
    AdditiveFamily T = AdditiveFamily::in_complex({fx.ac, fx.m}, fx.delta);
    // (III) fails: a ∈ all of T, but try p = b
    REQUIRE_THROWS_AS(main_lemma_certificate(S, T, fx.b, fx.delta),
                      PreconditionFailed);
    // (II) fails: S = {{b}}, T = {{a,c}} — {b}∪{a,c} = m is a face ∉ T
    AdditiveFamily S2 = AdditiveFamily::in_complex({HfSet::set({fx.b})}, fx.delta);
    AdditiveFamily T2 = AdditiveFamily::in_complex({fx.ac}, fx.delta);
    REQUIRE_THROWS_AS(main_lemma_certificate(S2, T2, fx.a, fx.delta),
                      PreconditionFailed);
}

TEST_CASE("preimage family description") {
    // π^{-1}(S) = (S∖T) ∪ {s(X)} ∪ {u̲(X)} with X chains in T
    Fixture fx;
    AdditiveFamily T = AdditiveFamily::in_complex({fx.ab, fx.m}, fx.delta);
    AdditiveFamily S = AdditiveFamily::in_complex({fx.ab}, fx.delta);
    MapExpr pi = pi_iota(fx.delta, T, [&](HfSet) { return fx.a; });
    std::vector<HfSet> pre = pi.eval().preimage_family(S.members);
    std::sort(pre.begin(), pre.end());
    // expected: s(X) and (s∖{p})(X) for s = {a,b}, p = a, X chains in T with
    // s ⊆ min X; S∖T is empty here
    std::vector<HfSet> expect;
    std::vector<std::vector<HfSet>> chains = {
        {fx.ab}, {fx.m}, {fx.ab, fx.m}};
    for (auto& X : chains) {
        if (!is_subset(fx.ab, X.front())) continue;
        std::vector<HfSet> withs{fx.b};  // s ∖ {p}
        for (HfSet x : X) withs.push_back(x);
        expect.push_back(HfSet::set(withs));
    }
    std::sort(expect.begin(), expect.end());
    expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
    REQUIRE(pre == expect);
}

TEST_CASE("random main lemma instances") {
    gen::Rng rng(777);
    Urelements ur({"a", "b", "c"});
    int done = 0;
    for (int trial = 0; trial < 60 && done < 12; ++trial) {
        Complex ground = gen::random_ground(rng, ur);
        Complex q = gen::random_divided(rng, ground, 1);
        auto verts = q.vertices();
        HfSet p = verts[rng.below(verts.size())];
        // S: random additive family; T: seeds containing p closed up
        AdditiveFamily S = gen::random_additive(rng, q, 2);
        std::vector<HfSet> seeds;
        for (HfSet f : q.faces())
            if (f.contains(p) && rng.chance(0.3)) seeds.push_back(f);
        std::vector<HfSet> Tm = close_T(seeds, S.members, p, q);
        if (Tm.size() > 4 || S.size() > 4) continue;
        AdditiveFamily T = AdditiveFamily::in_complex(Tm, q);
        PureCertificate cert = main_lemma_certificate(S, T, p, q);
        REQUIRE(cert.composite.pure());
        ++done;
    }
    REQUIRE(done >= 12);
}

TEST_CASE("coinitiality of basic shapes") {
    Fixture fx;
    {
        MapExpr w = weld(fx.delta, fx.b, fx.m);
        CoinitialityResult r = coinitiality(w);
        REQUIRE(r.f.eval().is_identity());
        REQUIRE(r.w.in_w());
    }
    {
        // a divided weld
        MapExpr d = divide_map(weld(fx.delta, fx.b, fx.m), fx.ab);
        CoinitialityResult r = coinitiality(d);
        REQUIRE(r.w.in_w());
        REQUIRE(compose(d, r.f).eval().same_function(r.w.eval()));
    }
    {
        // an isomorphism inverts
        MapExpr iso = typed_iso_2(fx.delta, fx.ac, fx.bc);
        CoinitialityResult r = coinitiality(iso);
        REQUIRE(compose(iso, r.f).eval().is_identity());
    }
}

TEST_CASE("coinitiality of composed divided welds") {
    Fixture fx;
    MapExpr d1 = divide_map(weld(fx.delta, fx.b, fx.m), fx.ab);
    // second divided weld over the codomain of d1's domain chain
    MapExpr w2 = weld(d1.domain(), fx.a, HfSet::set({fx.a, fx.ab}));
    MapExpr g = compose(d1, w2);
    CoinitialityResult r = coinitiality(g);
    REQUIRE(r.w.in_w());
    REQUIRE(compose(g, r.f).eval().same_function(r.w.eval()));
}

TEST_CASE("full amalgamation") {
    Fixture fx;
    {
        // two welds
        MapExpr fp = weld(fx.delta, fx.b, fx.ab);
        MapExpr gp = weld(fx.delta, fx.c, fx.bc);
        AmalgamationResult r = amalgamate(fp, gp);
        REQUIRE(compose(fp, r.f).eval().same_function(compose(gp, r.g).eval()));
        REQUIRE(r.g.in_n());
    }
    {
        // a divided weld against a weld
        MapExpr fp = divide_map(weld(fx.delta, fx.b, fx.m), fx.ab);
        MapExpr gp = weld(subdivide(fx.delta, fx.ab), fx.a,
                          HfSet::set({fx.a, fx.ab}));
        REQUIRE(fp.codomain() == gp.codomain());
        AmalgamationResult r = amalgamate(fp, gp);
        REQUIRE(compose(fp, r.f).eval().same_function(compose(gp, r.g).eval()));
        REQUIRE(r.g.in_n());
    }
    {
        // f' = g'
        MapExpr fp = weld(fx.delta, fx.a, fx.ab);
        AmalgamationResult r = amalgamate(fp, fp);
        REQUIRE(compose(fp, r.f).eval().same_function(compose(fp, r.g).eval()));
    }
}

TEST_CASE("random amalgamations") {
    gen::Rng rng(4242);
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    for (int trial = 0; trial < 10; ++trial) {
        MapExpr fp = gen::random_weld_chain(rng, delta, rng.range(1, 2));
        MapExpr gp = gen::random_d_map(rng, delta, 2);
        AmalgamationResult r = amalgamate(fp, gp);
        REQUIRE(compose(fp, r.f).eval().same_function(compose(gp, r.g).eval()));
        REQUIRE(r.g.in_n());
    }
}
