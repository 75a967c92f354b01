// Command-line front end: parse complexes, sequences, and maps, run the
// subdivision/amalgamation/limit engines, and emit machine-readable reports.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "stellar/amalgam.hpp"
#include "stellar/json_io.hpp"
#include "stellar/limit.hpp"
#include "selftest.hpp"

using namespace stellar;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

json read_json_arg(const std::string& file, const std::string& inline_json,
                   const char* what) {
    if (!inline_json.empty()) return json::parse(inline_json);
    if (!file.empty()) return read_json_file(file);
    throw ParseError(std::string("missing ") + what);
}

void write_output(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    out << text;
}

HfSet parse_set_arg(const std::string& text, const Urelements& ur) {
    if (!text.empty() && (text[0] == '[' || text[0] == '"'))
        return io::hfset_from_json(json::parse(text), ur);
    return parse_hfset(text, ur);
}

DivSeq parse_seq_arg(const std::string& text, const Urelements& ur) {
    json j = json::parse(text);
    return io::seq_from_json(j, ur);
}

std::vector<HfSet> parse_family_arg(const std::string& text,
                                    const Urelements& ur) {
    json j = json::parse(text);
    if (!j.is_array()) throw ParseError("a family is a JSON array of sets");
    std::vector<HfSet> out;
    for (const json& e : j) out.push_back(io::hfset_from_json(e, ur));
    return out;
}

void check_alphabet_guardrail(const Urelements& ur, bool force) {
    if (ur.size() > 5 && !force)
        throw GuardrailExceeded(
            "amalgamation engines default to |Ur| ≤ 5; pass --force to override");
}

json error_json(const StellarError& e) {
    return json{{"error", e.kind()}, {"message", e.what()}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stellar — stellar subdivisions, weld-division maps, and "
                 "projective amalgamation over hereditarily finite sets"};
    app.require_subcommand(1);

    std::string complex_file, inline_complex, by_arg, seq_arg, out_path;
    std::string seq1_arg, seq2_arg, ur_arg;
    std::string map_file, left_file, right_file, f_file, g_file;
    std::string apex_arg, divisor_arg, family_arg, s_arg, t_arg, p_arg;
    std::string ground_file, mesh_path, report_path, schedule_file;
    std::string out_dir;
    int depth_limit = 12, blocks = 0;
    std::size_t samples = 100, max_faces = 0;
    std::uint64_t seed = 1;
    bool force = false, quick = false;
    int stage = -1;

    auto add_max_faces = [&](CLI::App* cmd) {
        cmd->add_option("--max-faces", max_faces,
                        "override the complex size guardrail");
    };

    // --- subdivide ---------------------------------------------------------
    auto* sub = app.add_subcommand("subdivide", "stellar subdivision of a complex");
    sub->add_option("--complex", complex_file, "complex JSON file");
    sub->add_option("--inline-complex", inline_complex, "complex JSON literal");
    sub->add_option("--by", by_arg, "divisor, e.g. '{a,b}'");
    sub->add_option("--seq", seq_arg, "division sequence (JSON array)");
    sub->add_option("--out", out_path, "output file (default stdout)");
    add_max_faces(sub);

    // --- faces -------------------------------------------------------------
    auto* faces = app.add_subcommand("faces", "faces of a division sequence");
    faces->add_option("--seq", seq_arg, "division sequence (JSON array)")->required();
    faces->add_option("--urelements", ur_arg, "comma-separated alphabet")->required();
    faces->add_option("--out", out_path, "output file");
    add_max_faces(faces);

    // --- equiv -------------------------------------------------------------
    auto* equiv = app.add_subcommand("equiv", "combinatorial equivalence of sequences");
    equiv->add_option("--seq1", seq1_arg)->required();
    equiv->add_option("--seq2", seq2_arg)->required();
    equiv->add_option("--urelements", ur_arg, "comma-separated alphabet")->required();
    equiv->add_option("--depth", depth_limit, "rewrite depth limit (default 12)");
    equiv->add_option("--out", out_path);
    add_max_faces(equiv);

    // --- check-map ---------------------------------------------------------
    auto* checkmap = app.add_subcommand("check-map", "grounded simplicial check");
    checkmap->add_option("--map", map_file, "map JSON file")->required();
    checkmap->add_option("--out", out_path);
    add_max_faces(checkmap);

    // --- weld --------------------------------------------------------------
    auto* weldc = app.add_subcommand("weld", "build a weld map");
    weldc->add_option("--complex", complex_file)->required();
    weldc->add_option("--apex", apex_arg)->required();
    weldc->add_option("--divisor", divisor_arg)->required();
    weldc->add_option("--out", out_path);
    add_max_faces(weldc);

    // --- divide ------------------------------------------------------------
    auto* divc = app.add_subcommand("divide", "divide a map by a face or family");
    divc->add_option("--map", map_file)->required();
    divc->add_option("--by", by_arg, "single divisor");
    divc->add_option("--family", family_arg, "additive family (JSON array)");
    divc->add_option("--out", out_path);
    add_max_faces(divc);

    // --- compose -----------------------------------------------------------
    auto* compc = app.add_subcommand("compose", "compose two maps");
    compc->add_option("--left", left_file)->required();
    compc->add_option("--right", right_file)->required();
    compc->add_option("--out", out_path);
    add_max_faces(compc);

    // --- amalgamate ---------------------------------------------------------
    auto* amal = app.add_subcommand("amalgamate", "projective amalgamation");
    amal->add_option("--f", f_file)->required();
    amal->add_option("--g", g_file)->required();
    amal->add_option("--out", out_dir, "output directory");
    amal->add_flag("--force", force, "lift the |Ur| ≤ 5 guardrail");
    add_max_faces(amal);

    // --- certify-pure ------------------------------------------------------
    auto* cert = app.add_subcommand("certify-pure",
                                    "pure weld-division certificate for S·π_{p,T}");
    cert->add_option("--complex", complex_file)->required();
    cert->add_option("--S", s_arg)->required();
    cert->add_option("--T", t_arg)->required();
    cert->add_option("--p", p_arg)->required();
    cert->add_option("--out", out_path);
    cert->add_flag("--force", force);
    add_max_faces(cert);

    // --- coinit ------------------------------------------------------------
    auto* coin = app.add_subcommand("coinit", "complete a map into the weld category");
    coin->add_option("--map", map_file)->required();
    coin->add_option("--out", out_dir, "output directory");
    coin->add_flag("--force", force);
    add_max_faces(coin);

    // --- limit -------------------------------------------------------------
    auto* lim = app.add_subcommand("limit", "finite-stage tower and quotient report");
    lim->add_option("--ground", ground_file)->required();
    lim->add_option("--blocks", blocks, "number of barycentric blocks")->required();
    lim->add_option("--schedule", schedule_file, "schedule JSON file");
    lim->add_option("--report", report_path, "report JSON output");
    lim->add_option("--mesh", mesh_path, "OFF mesh output (final stage)");
    lim->add_option("--samples", samples, "thread pair samples");
    lim->add_option("--seed", seed);

    // --- export-mesh -------------------------------------------------------
    std::string mesh_format = "off";
    auto* mesh = app.add_subcommand("export-mesh", "OFF export of a tower stage");
    mesh->add_option("--ground", ground_file)->required();
    mesh->add_option("--blocks", blocks)->required();
    mesh->add_option("--stage", stage, "stage index (default final)");
    mesh->add_option("--format", mesh_format, "off (default) or json");
    mesh->add_option("--out", out_path);

    // --- selftest ----------------------------------------------------------
    auto* self = app.add_subcommand("selftest", "run the property suite (|Ur| ≤ 4)");
    self->add_option("--seed", seed);
    self->add_flag("--quick", quick, "smaller sample counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (max_faces > 0) max_faces_limit() = max_faces;

        if (*sub) {
            json j = read_json_arg(complex_file, inline_complex, "--complex");
            io::LoadedComplex lc = io::complex_from_json(j);
            Complex result = lc.complex;
            if (!seq_arg.empty())
                result = subdivide_seq(result, parse_seq_arg(seq_arg, lc.ur));
            if (!by_arg.empty())
                result = subdivide(result, parse_set_arg(by_arg, lc.ur));
            write_output(io::to_json(result, lc.ur), out_path);
        } else if (*faces) {
            Urelements ur = [&] {
                std::vector<std::string> names;
                std::string cur;
                for (char ch : ur_arg) {
                    if (ch == ',') {
                        names.push_back(cur);
                        cur.clear();
                    } else if (!isspace(static_cast<unsigned char>(ch)))
                        cur += ch;
                }
                if (!cur.empty()) names.push_back(cur);
                return Urelements(names);
            }();
            DivSeq seq = parse_seq_arg(seq_arg, ur);
            write_output(io::to_json(faces_of_seq(seq, ur), ur), out_path);
        } else if (*equiv) {
            Urelements ur = [&] {
                std::vector<std::string> names;
                std::string cur;
                for (char ch : ur_arg) {
                    if (ch == ',') {
                        names.push_back(cur);
                        cur.clear();
                    } else if (!isspace(static_cast<unsigned char>(ch)))
                        cur += ch;
                }
                if (!cur.empty()) names.push_back(cur);
                return Urelements(names);
            }();
            DivSeq a = parse_seq_arg(seq1_arg, ur), b = parse_seq_arg(seq2_arg, ur);
            bool fingerprints = equiv_fingerprint(a, ur) == equiv_fingerprint(b, ur);
            RewriteResult rw = rewrite_equiv(a, b, depth_limit);
            json out{{"fingerprint_equal", fingerprints},
                     {"rewrite", rw == RewriteResult::Proven ? "Proven" : "Unknown"},
                     {"depth_limit", depth_limit}};
            write_output(out, out_path);
        } else if (*checkmap) {
            io::LoadedMap lm = io::map_from_json(read_json_file(map_file));
            GroundedCheck check = check_grounded(lm.map.eval());
            json out{{"grounded", check.ok}};
            if (!check.ok) out["violation"] = check.violation;
            out["classes"] = {{"in_w", lm.map.in_w()},
                              {"in_n", lm.map.in_n()},
                              {"in_d", lm.map.in_d()},
                              {"comb_iso", lm.map.is_comb_iso()}};
            write_output(out, out_path);
            return check.ok ? 0 : 1;
        } else if (*weldc) {
            io::LoadedComplex lc = io::complex_from_json(read_json_file(complex_file));
            MapExpr w = weld(lc.complex, parse_set_arg(apex_arg, lc.ur),
                             parse_set_arg(divisor_arg, lc.ur));
            write_output(io::to_json(w, lc.ur), out_path);
        } else if (*divc) {
            io::LoadedMap lm = io::map_from_json(read_json_file(map_file));
            MapExpr result = lm.map;
            if (!family_arg.empty()) {
                auto fam = parse_family_arg(family_arg, lm.ur);
                result = divide_map_by_family(
                    result, AdditiveFamily::in_complex(fam, result.codomain()));
            } else if (!by_arg.empty()) {
                result = divide_map(result, parse_set_arg(by_arg, lm.ur));
            } else {
                throw ParseError("divide needs --by or --family");
            }
            write_output(io::to_json(result, lm.ur), out_path);
        } else if (*compc) {
            io::LoadedMap l = io::map_from_json(read_json_file(left_file));
            io::LoadedMap r = io::map_from_json(read_json_file(right_file));
            write_output(io::to_json(compose(l.map, r.map), l.ur), out_path);
        } else if (*amal) {
            io::LoadedMap lf = io::map_from_json(read_json_file(f_file));
            io::LoadedMap lg = io::map_from_json(read_json_file(g_file));
            check_alphabet_guardrail(lf.ur, force);
            AmalgamationResult r = amalgamate(lf.map, lg.map);
            bool verified = compose(lf.map, r.f).eval().same_function(
                compose(lg.map, r.g).eval());
            json report{{"verified", verified},
                        {"f_in_d", r.f.in_d()},
                        {"g_neat", r.g.in_n()},
                        {"checks",
                         json::array({"f'∘f = g'∘g pointwise",
                                      "g is a neat weld composition"})},
                        {"amalgam_domain", io::to_json(r.f.domain(), lf.ur)}};
            if (out_dir.empty()) {
                report["f"] = io::to_json(r.f, lf.ur);
                report["g"] = io::to_json(r.g, lf.ur);
                write_output(report, "");
            } else {
                write_output(io::to_json(r.f, lf.ur), out_dir + "/f.json");
                write_output(io::to_json(r.g, lf.ur), out_dir + "/g.json");
                write_output(io::to_json(r.f.domain(), lf.ur),
                             out_dir + "/amalgam.json");
                write_output(report, out_dir + "/report.json");
            }
        } else if (*cert) {
            io::LoadedComplex lc = io::complex_from_json(read_json_file(complex_file));
            check_alphabet_guardrail(lc.ur, force);
            AdditiveFamily S = AdditiveFamily::in_complex(
                parse_family_arg(s_arg, lc.ur), lc.complex);
            AdditiveFamily T = AdditiveFamily::in_complex(
                parse_family_arg(t_arg, lc.ur), lc.complex);
            HfSet p = parse_set_arg(p_arg, lc.ur);
            PureCertificate c = main_lemma_certificate(S, T, p, lc.complex);
            json gens = json::array();
            for (const MapExpr& g : c.generators)
                gens.push_back(io::expr_to_json(g));
            json out{{"urelements", lc.ur.names()},
                     {"generators", gens},
                     {"pure", c.composite.pure()},
                     {"target_verified", true}};
            write_output(out, out_path);
        } else if (*coin) {
            io::LoadedMap lm = io::map_from_json(read_json_file(map_file));
            check_alphabet_guardrail(lm.ur, force);
            CoinitialityResult r = coinitiality(lm.map);
            json report{{"verified",
                         compose(lm.map, r.f).eval().same_function(r.w.eval())},
                        {"witness_in_w", r.w.in_w()}};
            if (out_dir.empty()) {
                report["f"] = io::to_json(r.f, lm.ur);
                report["weld_chain"] = io::to_json(r.w, lm.ur);
                write_output(report, "");
            } else {
                write_output(io::to_json(r.f, lm.ur), out_dir + "/f.json");
                write_output(io::to_json(r.w, lm.ur), out_dir + "/weld_chain.json");
                write_output(report, out_dir + "/report.json");
            }
        } else if (*lim) {
            io::LoadedComplex lc = io::complex_from_json(read_json_file(ground_file));
            Schedule sched;
            if (!schedule_file.empty()) {
                json js = read_json_file(schedule_file);
                for (const json& step : js) {
                    ScheduleStep st;
                    if (step.at("op") == "block") {
                        st.kind = ScheduleStep::Block;
                    } else {
                        st.kind = ScheduleStep::Weld;
                        st.face = io::hfset_from_json(step.at("face"), lc.ur);
                        if (step.contains("apex"))
                            st.apex = io::hfset_from_json(step.at("apex"), lc.ur);
                    }
                    sched.push_back(st);
                }
            }
            Tower t = Tower::build(lc.complex, blocks, sched);
            QuotientReport rep = quotient_report(t, samples, seed);
            json out;
            out["stages"] = t.stages().size();
            out["epsilon"] = rep.eps_table;
            json samples_json = json::array();
            for (const QuotientSample& s : rep.samples)
                samples_json.push_back({{"seed", s.seed},
                                        {"sp_frozen", s.sp_frozen},
                                        {"sp_geometric", s.sp_geometric},
                                        {"equal", s.supports_equal}});
            out["support_table"] = samples_json;
            json pairs_json = json::array();
            for (const QuotientPair& p : rep.pairs)
                pairs_json.push_back({{"x", p.seed_x},
                                      {"y", p.seed_y},
                                      {"related", p.related},
                                      {"persistent", p.persistent},
                                      {"distance", p.distance},
                                      {"ok", p.ok}});
            out["pair_distance_table"] = pairs_json;
            out["related_pairs"] = rep.related_count;
            out["persistent_pairs"] = rep.persistent_count;
            out["all_ok"] = rep.all_ok;
            write_output(out, report_path);
            if (!mesh_path.empty())
                write_text(export_off(t, t.depth()), mesh_path);
            return rep.all_ok ? 0 : 1;
        } else if (*mesh) {
            io::LoadedComplex lc = io::complex_from_json(read_json_file(ground_file));
            Tower t = Tower::build(lc.complex, blocks);
            std::size_t n = stage < 0 ? t.depth() : std::size_t(stage);
            write_text(mesh_format == "json" ? export_mesh_json(t, n)
                                             : export_off(t, n),
                       out_path);
        } else if (*self) {
            return run_selftest(seed, quick);
        }
    } catch (const StellarError& e) {
        std::cerr << error_json(e).dump(2) << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << json{{"error", "ParseError"}, {"message", e.what()}}.dump(2)
                  << "\n";
        return 1;
    }
    return 0;
}
