#ifndef STELLAR_JSON_IO_HPP
#define STELLAR_JSON_IO_HPP

/**
 * JSON encodings.
 *
 * HfSet: atom = string, set = array (canonically sorted on output,
 * tolerated unsorted on input). Complex: {"urelements": [...],
 * "faces": [...]}. DivSeq: array of HfSet encodings, leftmost outermost.
 * Maps: {"urelements": [...], "expr": {nested constructors}}, where raw
 * maps carry an explicit assignment.
 */

#include <json.hpp>

#include "stellar/simap.hpp"

namespace stellar {
namespace io {

using nlohmann::json;

inline json to_json(HfSet s) {
    if (s.is_atom()) return s.atom_name();
    json arr = json::array();
    for (HfSet e : s.elements()) arr.push_back(to_json(e));
    return arr;
}

inline HfSet hfset_from_json(const json& j, const Urelements& ur) {
    if (j.is_string()) return ur.atom(j.get<std::string>());
    if (j.is_array()) {
        if (j.empty()) throw ParseError("the empty set is not a Fin+ value");
        std::vector<HfSet> elems;
        for (const json& e : j) elems.push_back(hfset_from_json(e, ur));
        return HfSet::set(std::move(elems));
    }
    throw ParseError("an HfSet is a string (atom) or an array (set)");
}

inline json to_json(const Complex& c) {
    json faces = json::array();
    for (HfSet f : c.faces()) faces.push_back(to_json(f));
    return faces;
}

inline json to_json(const Complex& c, const Urelements& ur) {
    json out;
    out["urelements"] = ur.names();
    out["faces"] = to_json(c);
    return out;
}

inline Urelements urelements_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("\"urelements\" must be an array");
    std::vector<std::string> names;
    for (const json& n : j) names.push_back(n.get<std::string>());
    return Urelements(names);
}

inline Complex complex_faces_from_json(const json& j, const Urelements& ur,
                                       bool validate = true) {
    if (!j.is_array()) throw ParseError("\"faces\" must be an array");
    std::vector<HfSet> faces;
    for (const json& f : j) faces.push_back(hfset_from_json(f, ur));
    return validate ? Complex::validate(faces) : Complex::unchecked(faces);
}

struct LoadedComplex {
    Urelements ur;
    Complex complex;
};

inline LoadedComplex complex_from_json(const json& j) {
    if (!j.contains("urelements") || !j.contains("faces"))
        throw ParseError("a complex file needs \"urelements\" and \"faces\"");
    LoadedComplex out;
    out.ur = urelements_from_json(j.at("urelements"));
    out.complex = complex_faces_from_json(j.at("faces"), out.ur);
    return out;
}

inline json to_json(const DivSeq& seq) {
    json arr = json::array();
    for (HfSet s : seq) arr.push_back(to_json(s));
    return arr;
}

inline DivSeq seq_from_json(const json& j, const Urelements& ur) {
    if (!j.is_array()) throw ParseError("a sequence must be an array");
    DivSeq out;
    for (const json& e : j) {
        HfSet s = hfset_from_json(e, ur);
        if (s.is_atom()) throw ParseError("sequence entries must be sets");
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Map expressions
// ---------------------------------------------------------------------------

inline json expr_to_json(const MapExpr& e) {
    const auto& n = e.node();
    json out;
    switch (e.kind()) {
        case MapKind::Identity:
            out["op"] = "identity";
            out["complex"] = to_json(e.domain());
            break;
        case MapKind::Weld:
            out["op"] = "weld";
            out["complex"] = to_json(e.codomain());
            out["apex"] = to_json(n.apex);
            out["divisor"] = to_json(n.divisor);
            break;
        case MapKind::PiIota: {
            out["op"] = "pi_iota";
            out["complex"] = to_json(e.codomain());
            json fam = json::array();
            for (HfSet s : n.family) fam.push_back(to_json(s));
            out["family"] = fam;
            json iota = json::array();
            for (auto& [s, v] : n.assignment)
                iota.push_back(json::array({to_json(s), to_json(v)}));
            out["iota"] = iota;
            break;
        }
        case MapKind::TypedIso: {
            out["op"] = "iso";
            static const char* kinds[] = {"", "1", "2", "3a", "3b"};
            out["type"] = kinds[n.iso_type];
            json params = json::object();
            // parameters are recoverable from the assignment for reloading;
            // keep the verified raw form
            out["domain"] = to_json(e.domain());
            out["codomain"] = to_json(e.codomain());
            json as = json::array();
            for (auto& [a, b] : n.assignment)
                as.push_back(json::array({to_json(a), to_json(b)}));
            out["assignment"] = as;
            break;
        }
        case MapKind::LemmaIso: {
            out["op"] = "lemma_iso";
            out["label"] = n.label;
            out["domain"] = to_json(e.domain());
            out["codomain"] = to_json(e.codomain());
            json as = json::array();
            for (auto& [a, b] : n.assignment)
                as.push_back(json::array({to_json(a), to_json(b)}));
            out["assignment"] = as;
            break;
        }
        case MapKind::Divide:
            out["op"] = "divide";
            out["by"] = to_json(n.divisor);
            out["child"] = expr_to_json(MapExpr(n.child));
            break;
        case MapKind::DivideFamily: {
            out["op"] = "divide_family";
            json fam = json::array();
            for (HfSet s : n.family) fam.push_back(to_json(s));
            out["family"] = fam;
            out["child"] = expr_to_json(MapExpr(n.child));
            break;
        }
        case MapKind::Compose:
            out["op"] = "compose";
            out["left"] = expr_to_json(MapExpr(n.left));
            out["right"] = expr_to_json(MapExpr(n.right));
            break;
        case MapKind::Raw: {
            out["op"] = "raw";
            out["domain"] = to_json(e.domain());
            out["codomain"] = to_json(e.codomain());
            json as = json::array();
            for (auto& [a, b] : n.assignment)
                as.push_back(json::array({to_json(a), to_json(b)}));
            out["assignment"] = as;
            break;
        }
    }
    return out;
}

inline std::vector<std::pair<HfSet, HfSet>> assignment_from_json(
    const json& j, const Urelements& ur) {
    std::vector<std::pair<HfSet, HfSet>> out;
    for (const json& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw ParseError("assignments are arrays of [from, to] pairs");
        out.emplace_back(hfset_from_json(pair[0], ur),
                         hfset_from_json(pair[1], ur));
    }
    return out;
}

inline MapExpr expr_from_json(const json& j, const Urelements& ur) {
    std::string op = j.at("op").get<std::string>();
    auto cx = [&](const char* key) {
        return complex_faces_from_json(j.at(key), ur, /*validate=*/false);
    };
    if (op == "identity") return identity_map(cx("complex"));
    if (op == "weld")
        return weld(cx("complex"), hfset_from_json(j.at("apex"), ur),
                    hfset_from_json(j.at("divisor"), ur));
    if (op == "pi_iota") {
        Complex a = cx("complex");
        std::vector<HfSet> members;
        for (const json& f : j.at("family"))
            members.push_back(hfset_from_json(f, ur));
        AdditiveFamily fam = AdditiveFamily::in_complex(members, a);
        if (j.contains("iota")) {
            auto pairs = assignment_from_json(j.at("iota"), ur);
            return pi_iota(a, fam, [pairs](HfSet s) {
                for (auto& [k, v] : pairs)
                    if (k == s) return v;
                throw BadIota("ι is missing a member choice");
            });
        }
        return pi_iota(a, fam);
    }
    if (op == "iso" || op == "lemma_iso") {
        Complex dom = cx("domain"), codom = cx("codomain");
        auto assignment = assignment_from_json(j.at("assignment"), ur);
        std::string label =
            j.contains("label") ? j.at("label").get<std::string>() : op;
        return detail::make_iso(dom, codom, assignment,
                                op == "iso" ? MapKind::TypedIso
                                            : MapKind::LemmaIso,
                                0, label);
    }
    if (op == "divide")
        return divide_map(expr_from_json(j.at("child"), ur),
                          hfset_from_json(j.at("by"), ur));
    if (op == "divide_family") {
        MapExpr child = expr_from_json(j.at("child"), ur);
        std::vector<HfSet> members;
        for (const json& f : j.at("family"))
            members.push_back(hfset_from_json(f, ur));
        return divide_map_by_family(
            child, AdditiveFamily::in_complex(members, child.codomain()));
    }
    if (op == "compose")
        return compose(expr_from_json(j.at("left"), ur),
                       expr_from_json(j.at("right"), ur));
    if (op == "raw")
        return raw_map(cx("domain"), cx("codomain"),
                       assignment_from_json(j.at("assignment"), ur));
    throw ParseError("unknown map constructor \"" + op + "\"");
}

inline json to_json(const MapExpr& e, const Urelements& ur) {
    json out;
    out["urelements"] = ur.names();
    out["expr"] = expr_to_json(e);
    json table = json::array();
    for (HfSet v : e.domain().vertices())
        table.push_back(json::array({to_json(v), to_json(e.eval().apply(v))}));
    out["vertex_table"] = table;
    out["classes"] = {{"in_w", e.in_w()},
                      {"in_n", e.in_n()},
                      {"in_d", e.in_d()},
                      {"comb_iso", e.is_comb_iso()},
                      {"pure", e.pure()}};
    return out;
}

struct LoadedMap {
    Urelements ur;
    MapExpr map;
};

inline LoadedMap map_from_json(const json& j) {
    if (!j.contains("urelements") || !j.contains("expr"))
        throw ParseError("a map file needs \"urelements\" and \"expr\"");
    LoadedMap out;
    out.ur = urelements_from_json(j.at("urelements"));
    out.map = expr_from_json(j.at("expr"), out.ur);
    return out;
}

} // namespace io
} // namespace stellar

#endif
