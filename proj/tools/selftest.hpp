#ifndef STELLAR_SELFTEST_HPP
#define STELLAR_SELFTEST_HPP

// The selftest property suite: seeded randomized checks of the documented
// invariants over alphabets of up to four urelements. One pass/fail line
// per property; exit status 0 iff everything passed.

#include <cstdio>
#include <functional>
#include <random>

#include "stellar/amalgam.hpp"
#include "stellar/limit.hpp"

namespace stellar {
namespace selftest {

struct Ctx {
    std::mt19937_64 rng;
    int scale = 1;

    std::size_t below(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    bool chance(double p) {
        return std::uniform_real_distribution<double>(0, 1)(rng) < p;
    }
    HfSet pick_face(const Complex& c) { return c.faces()[below(c.size())]; }

    Urelements alphabet() {
        static const std::vector<std::vector<std::string>> choices = {
            {"a", "b"}, {"a", "b", "c"}, {"a", "b", "c", "d"}};
        return Urelements(choices[below(choices.size())]);
    }

    Complex ground(const Urelements& ur) {
        Complex full = full_complex(ur);
        if (chance(0.5)) return full;
        std::vector<HfSet> faces;
        HfSet seed = pick_face(full);
        for (HfSet f : full.faces())
            if (is_subset(f, seed) || chance(0.2)) faces.push_back(f);
        // close under subsets
        std::vector<HfSet> closed;
        for (HfSet f : full.faces())
            for (HfSet g : faces)
                if (is_subset(f, g)) {
                    closed.push_back(f);
                    break;
                }
        return Complex::unchecked(closed);
    }

    Complex divided(const Complex& g, int steps) {
        Complex c = g;
        for (int i = 0; i < steps; ++i) c = subdivide(c, pick_face(c));
        return c;
    }

    AdditiveFamily additive(const Complex& ctx, int seeds) {
        std::vector<HfSet> s;
        for (int i = 0; i < seeds; ++i) s.push_back(pick_face(ctx));
        return AdditiveFamily::in_complex(additive_closure(s, ctx), ctx);
    }

    MapExpr weld_on(const Complex& a) {
        HfSet t = pick_face(a);
        return weld(a, t.elements()[below(t.size())], t);
    }

    MapExpr d_map(const Complex& a, int budget) {
        if (budget <= 0) return identity_map(a);
        switch (below(4)) {
            case 0:
                return weld_on(a);
            case 1:
                return pi_iota(a, additive(a, 2));
            case 2: {
                MapExpr w = weld_on(a);
                return compose(w, d_map(w.domain(), budget - 1));
            }
            default: {
                MapExpr f = d_map(a, budget / 2);
                return compose(f, d_map(f.domain(), budget - 1 - budget / 2));
            }
        }
    }
};

inline bool check_support_properties(Ctx& c) {
    for (int i = 0; i < 200 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex g = c.ground(ur);
        Complex a = c.divided(g, 2);
        for (HfSet f : a.faces()) {
            if (!g.has_face(support(f))) return false;
            for (HfSet v : f.elements())
                if (!is_subset(support(v), support(f))) return false;
        }
        if (ground_of(a) != g) return false;
    }
    return true;
}

inline bool check_conservativity(Ctx& c) {
    for (int i = 0; i < 60 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex g = c.ground(ur);
        Complex cur = g;
        DivSeq seq;
        int steps = int(c.below(3));
        for (int k = 0; k < steps; ++k) {
            HfSet d = c.pick_face(cur);
            seq.insert(seq.begin(), d);
            cur = subdivide(cur, d);
        }
        for (HfSet t : cur.faces())
            if (!(is_face_of_seq(t, seq) && g.has_face(support(t)))) return false;
        Complex all = subdivide_seq(full_complex(ur), seq);
        for (HfSet t : all.faces()) {
            bool lhs = g.has_face(support(t));
            if (lhs != cur.has_face(t)) return false;
        }
    }
    return true;
}

inline bool check_commutation(Ctx& c) {
    for (int i = 0; i < 40 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex a = c.ground(ur);
        HfSet s = c.pick_face(a), t = c.pick_face(a);
        if (s == t) continue;
        if (!a.has_face(set_union(s, t)) || !sets_intersect(s, t)) {
            if (subdivide_seq(a, {s, t}) != subdivide_seq(a, {t, s}))
                return false;
        }
    }
    return true;
}

inline bool check_enumeration_independence(Ctx& c) {
    for (int i = 0; i < 40 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex a = c.divided(c.ground(ur), 1);
        AdditiveFamily fam = c.additive(a, 2);
        if (fam.size() > 5) continue;
        divide_by_family(a, fam, /*check_all_enumerations=*/true);
    }
    return true;
}

inline bool check_groundedness_corpus(Ctx& c) {
    for (int i = 0; i < 60 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex a = c.divided(c.ground(ur), 1);
        MapExpr f = c.d_map(a, 2);
        if (c.chance(0.5)) f = divide_map(f, c.pick_face(f.codomain()));
        if (!check_grounded(f.eval()).ok) return false;
        if (!f.in_d()) return false;
    }
    return true;
}

inline bool check_functoriality(Ctx& c) {
    for (int i = 0; i < 30 * c.scale; ++i) {
        Urelements ur = c.alphabet();
        Complex a = c.divided(c.ground(ur), 1);
        MapExpr f = c.d_map(a, 2);
        MapExpr g = c.d_map(f.domain(), 2);
        AdditiveFamily S = c.additive(a, 2);
        MapExpr lhs = divide_map_by_family(compose(f, g), S);
        AdditiveFamily preS = AdditiveFamily::in_complex(
            f.eval().preimage_family(S.members), f.domain());
        MapExpr rhs =
            compose(divide_map_by_family(f, S), divide_map_by_family(g, preS));
        if (!lhs.eval().same_function(rhs.eval())) return false;
    }
    return true;
}

inline bool check_iso_round_trips(Ctx& c) {
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    HfSet a = ur.atom("a"), b = ur.atom("b");
    HfSet m = HfSet::set({a, b, ur.atom("c")});
    MapExpr t1 = typed_iso_1(delta, HfSet::set({a}), HfSet::set({b}), m);
    MapExpr t1r = typed_iso_1(delta, HfSet::set({b}), HfSet::set({a}), m);
    if (!compose(t1r, t1).eval().is_identity()) return false;
    MapExpr t3a = typed_iso_3a(delta, a);
    MapExpr t3b = typed_iso_3b(delta, a);
    return compose(t3b, t3a).eval().is_identity() &&
           compose(t3a, t3b).eval().is_identity();
}

inline bool check_amalgamation(Ctx& c) {
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    for (int i = 0; i < 6 * c.scale; ++i) {
        MapExpr fp = identity_map(delta);
        int welds = 1 + int(c.below(2));
        for (int k = 0; k < welds; ++k)
            fp = compose(fp, c.weld_on(fp.domain()));
        MapExpr gp = c.d_map(delta, 2);
        AmalgamationResult r = amalgamate(fp, gp);
        if (!compose(fp, r.f).eval().same_function(compose(gp, r.g).eval()))
            return false;
        if (!r.g.in_n()) return false;
    }
    return true;
}

inline bool check_coinitiality(Ctx& c) {
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    for (int i = 0; i < 4 * c.scale; ++i) {
        MapExpr w = c.weld_on(delta);
        MapExpr g = divide_map(w, c.pick_face(w.codomain()));
        CoinitialityResult r = coinitiality(g);
        if (!r.w.in_w()) return false;
        if (!compose(g, r.f).eval().same_function(r.w.eval())) return false;
    }
    return true;
}

inline bool check_tower(Ctx& c) {
    (void)c;
    Urelements ur({"a", "b", "c"});
    Tower t = Tower::build(full_complex(ur), 2);
    for (std::size_t n = 1; n < t.stages().size(); ++n)
        if (t.epsilon(n) > (2.0 / 3.0) * t.epsilon(n - 1) + 1e-9) return false;
    QuotientReport rep = quotient_report(t, 40);
    return rep.all_ok;
}

} // namespace selftest

inline int run_selftest(std::uint64_t seed, bool quick) {
    using Check = std::pair<const char*, bool (*)(selftest::Ctx&)>;
    const Check checks[] = {
        {"support and ground recovery", selftest::check_support_properties},
        {"sequence-face conservativity", selftest::check_conservativity},
        {"subdivision commutation", selftest::check_commutation},
        {"enumeration independence", selftest::check_enumeration_independence},
        {"groundedness of generated maps", selftest::check_groundedness_corpus},
        {"functoriality of family division", selftest::check_functoriality},
        {"typed isomorphism round trips", selftest::check_iso_round_trips},
        {"projective amalgamation", selftest::check_amalgamation},
        {"coinitiality", selftest::check_coinitiality},
        {"tower decay and quotient report", selftest::check_tower},
    };
    std::size_t saved = max_faces_limit();
    max_faces_limit() = 100000;
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        selftest::Ctx ctx{std::mt19937_64(seed), quick ? 1 : 2};
        bool ok = false;
        std::string note;
        try {
            ok = fn(ctx);
        } catch (const std::exception& e) {
            note = e.what();
        }
        std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name,
                    note.empty() ? "" : " — ", note.c_str());
        if (!ok) ++failures;
    }
    max_faces_limit() = saved;
    return failures == 0 ? 0 : 1;
}

} // namespace stellar

#endif
