#include <catch2/catch_amalgamated.hpp>

#include "gen.hpp"
#include "stellar/json_io.hpp"

using namespace stellar;
using nlohmann::json;

TEST_CASE("hfset json round trip") {
    Urelements ur({"a", "b", "c"});
    HfSet s = parse_hfset("{{a,b},c}", ur);
    json j = io::to_json(s);
    REQUIRE(io::hfset_from_json(j, ur) == s);
    // unsorted input is tolerated
    json unsorted = json::parse(R"([["b","a"],"c","a"])");
    HfSet v = io::hfset_from_json(unsorted, ur);
    REQUIRE(v == HfSet::set({HfSet::set({ur.atom("a"), ur.atom("b")}),
                             ur.atom("c"), ur.atom("a")}));
    REQUIRE_THROWS_AS(io::hfset_from_json(json::array(), ur), ParseError);
    REQUIRE_THROWS_AS(io::hfset_from_json(json::parse(R"(["zz"])"), ur),
                      UndeclaredAtom);
}

TEST_CASE("complex json round trip and validation") {
    json j = json::parse(
        R"({"urelements":["a","b","c"],"faces":[["a"],["b"],["a","b"]]})");
    io::LoadedComplex lc = io::complex_from_json(j);
    REQUIRE(lc.complex.size() == 3);
    json out = io::to_json(lc.complex, lc.ur);
    io::LoadedComplex lc2 = io::complex_from_json(out);
    REQUIRE(lc2.complex == lc.complex);
    json bad = json::parse(R"({"urelements":["a","b"],"faces":[["a","b"]]})");
    REQUIRE_THROWS_AS(io::complex_from_json(bad), NotSubsetClosed);
}

TEST_CASE("sequence json") {
    Urelements ur({"a", "b", "c"});
    DivSeq seq{HfSet::set({ur.atom("a"), ur.atom("b")}),
               HfSet::set({ur.atom("a"), ur.atom("b"), ur.atom("c")})};
    json j = io::to_json(seq);
    REQUIRE(io::seq_from_json(j, ur) == seq);
}

TEST_CASE("map expressions round trip through json") {
    gen::Rng rng(606);
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    for (int trial = 0; trial < 25; ++trial) {
        MapExpr f = rng.chance(0.5) ? gen::random_d_map(rng, delta, 3)
                                    : gen::random_divided_map(rng, delta, 2);
        json j = io::to_json(f, ur);
        io::LoadedMap back = io::map_from_json(j);
        REQUIRE(back.map.eval().same_function(f.eval()));
        REQUIRE(back.map.in_d() == f.in_d());
        REQUIRE(back.map.in_w() == f.in_w());
        REQUIRE(back.map.in_n() == f.in_n());
    }
}

TEST_CASE("typed isos round trip through json") {
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    HfSet m = HfSet::set({ur.atom("a"), ur.atom("b"), ur.atom("c")});
    MapExpr iso = typed_iso_1(delta, HfSet::set({ur.atom("a")}),
                              HfSet::set({ur.atom("b")}), m);
    json j = io::to_json(iso, ur);
    io::LoadedMap back = io::map_from_json(j);
    REQUIRE(back.map.is_comb_iso());
    REQUIRE(back.map.eval().same_function(iso.eval()));
}

TEST_CASE("raw maps round trip and stay uncertified") {
    Urelements ur({"a", "b", "c"});
    Complex delta = full_complex(ur);
    MapExpr raw = raw_map(delta, delta, {{ur.atom("a"), ur.atom("b")}});
    json j = io::to_json(raw, ur);
    io::LoadedMap back = io::map_from_json(j);
    REQUIRE(back.map.kind() == MapKind::Raw);
    REQUIRE_FALSE(back.map.in_d());
}
