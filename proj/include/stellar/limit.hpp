#ifndef STELLAR_LIMIT_HPP
#define STELLAR_LIMIT_HPP

/**
 * Finite-stage approximation of the projective Fraïssé tower over a fixed
 * ground complex: scheduled weld steps and full barycentric blocks, the
 * realizing assignments (standard-simplex start, centroid refinement),
 * diameter decay, threads and the R-relation, the quotient report, and
 * mesh export.
 *
 * Tower stages use an id-based representation: a vertex is an integer
 * whose provenance (ground atom, weld vertex, or block barycenter) fixes
 * its HfSet name; names are materialized only while stages stay small.
 * A barycentric block is recorded as one checkpoint standing for the
 * #faces single welds of its non-decreasing enumeration.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stellar/complex.hpp"
#include "stellar/seqcalc.hpp"

namespace stellar {

using VertexId = std::uint32_t;
using IdFace = std::vector<VertexId>;  // sorted

namespace detail {

struct IdFaceHash {
    std::size_t operator()(const IdFace& f) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (VertexId v : f) h = (h ^ v) * 1099511628211ull;
        return h;
    }
};

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace detail

/// One checkpoint stage of the tower.
struct TowerStage {
    std::vector<std::vector<double>> pos;  // vertex id -> point in R^dim
    std::vector<IdFace> faces;             // sorted id-faces, sorted list
    std::unordered_set<IdFace, detail::IdFaceHash> face_set;
    std::vector<VertexId> proj;            // projection to the previous stage
    std::vector<std::vector<VertexId>> sp; // vertex -> sorted ground atom ids
    std::vector<HfSet> name;               // optional (small stages only)
    std::size_t weld_count = 0;            // single welds this step stands for
    bool is_block = false;
    double eps = 0;

    bool has_face(const IdFace& f) const { return face_set.count(f) > 0; }

    double face_diameter(const IdFace& f) const {
        double d = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            for (std::size_t j = i + 1; j < f.size(); ++j)
                d = std::max(d, detail::dist(pos[f[i]], pos[f[j]]));
        return d;
    }

    void finalize() {
        std::sort(faces.begin(), faces.end());
        face_set.clear();
        for (const IdFace& f : faces) face_set.insert(f);
        eps = 0;
        for (const IdFace& f : faces) eps = std::max(eps, face_diameter(f));
    }

    std::vector<IdFace> maximal_faces() const {
        std::vector<IdFace> out;
        for (const IdFace& f : faces) {
            bool maximal = true;
            for (const IdFace& g : faces)
                if (f != g && std::includes(g.begin(), g.end(), f.begin(), f.end()))
                    maximal = false;
            if (maximal) out.push_back(f);
        }
        return out;
    }
};

struct ScheduleStep {
    enum Kind { Weld, Block } kind = Block;
    HfSet face;  // Weld only: the divisor, named by its HfSet value
    HfSet apex;  // Weld only: must be an element of `face`
};

using Schedule = std::vector<ScheduleStep>;

class Tower {
public:
    static constexpr std::size_t kNameCap = 20000;

    /// Builds the tower: `blocks` barycentric blocks when the schedule is
    /// empty, otherwise the given schedule (welds by named faces plus
    /// blocks). ι for blocks is the least vertex of each face.
    static Tower build(const Complex& ground, int blocks,
                       const Schedule& schedule = {}) {
        if (!is_grounded(ground) || ground.empty())
            throw ScheduleInvalid("the ground must be a nonempty grounded complex");
        Complex::validate(ground.faces());
        Tower t;
        t.ground_ = ground;
        t.atoms_ = ground.vertices();
        t.stages_.push_back(t.stage0());
        Schedule sched = schedule;
        if (sched.empty())
            for (int i = 0; i < blocks; ++i) sched.push_back({ScheduleStep::Block, {}, {}});
        for (const ScheduleStep& step : sched) {
            if (step.kind == ScheduleStep::Block)
                t.stages_.push_back(t.block_stage(t.stages_.back()));
            else
                t.stages_.push_back(t.weld_stage(t.stages_.back(), step));
        }
        return t;
    }

    const Complex& ground() const { return ground_; }
    const std::vector<HfSet>& atoms() const { return atoms_; }
    const std::vector<TowerStage>& stages() const { return stages_; }
    std::size_t depth() const { return stages_.size() - 1; }
    double epsilon(std::size_t n) const { return stages_.at(n).eps; }

    /// The HfSet view of a stage, available while names are materialized.
    Complex stage_complex(std::size_t n) const {
        const TowerStage& st = stages_.at(n);
        if (st.name.empty())
            throw GuardrailExceeded("stage too large for the HfSet view");
        std::vector<HfSet> faces;
        for (const IdFace& f : st.faces) {
            std::vector<HfSet> elems;
            for (VertexId v : f) elems.push_back(st.name[v]);
            faces.push_back(HfSet::set(std::move(elems)));
        }
        return Complex::unchecked(std::move(faces));
    }

    /// Projects a stage-n vertex down to stage m ≤ n.
    VertexId project(std::size_t n, VertexId v, std::size_t m) const {
        while (n > m) {
            v = stages_[n].proj.at(v);
            --n;
        }
        return v;
    }

private:
    Complex ground_;
    std::vector<HfSet> atoms_;
    std::vector<TowerStage> stages_;

    std::vector<VertexId> atom_ids(HfSet atomset) const {
        std::vector<VertexId> out;
        for (HfSet a : atomset.elements()) {
            auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
            out.push_back(static_cast<VertexId>(it - atoms_.begin()));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    TowerStage stage0() const {
        TowerStage st;
        const std::size_t dim = atoms_.size();
        for (std::size_t i = 0; i < dim; ++i) {
            std::vector<double> p(dim, 0.0);
            p[i] = 1.0;  // the standard-basis embedding
            st.pos.push_back(std::move(p));
            st.sp.push_back({static_cast<VertexId>(i)});
            st.name.push_back(atoms_[i]);
        }
        for (HfSet f : ground_.faces()) st.faces.push_back(atom_ids(f));
        st.weld_count = 0;
        st.finalize();
        return st;
    }

    static std::vector<double> centroid(const TowerStage& st, const IdFace& f) {
        std::vector<double> c(st.pos[0].size(), 0.0);
        for (VertexId v : f)
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += st.pos[v][i];
        for (double& x : c) x /= double(f.size());
        return c;
    }

    static std::vector<VertexId> support_union(const TowerStage& st,
                                               const IdFace& f) {
        std::vector<VertexId> out;
        for (VertexId v : f)
            out.insert(out.end(), st.sp[v].begin(), st.sp[v].end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// A full barycentric block: new vertices are the faces of the previous
    /// stage, new faces are the nonempty chains, ι is the least vertex.
    TowerStage block_stage(const TowerStage& prev) const {
        TowerStage st;
        const std::size_t nf = prev.faces.size();
        std::unordered_map<IdFace, VertexId, detail::IdFaceHash> index;
        for (std::size_t i = 0; i < nf; ++i)
            index.emplace(prev.faces[i], static_cast<VertexId>(i));
        st.pos.reserve(nf);
        st.proj.reserve(nf);
        st.sp.reserve(nf);
        bool keep_names = !prev.name.empty() && nf <= kNameCap;
        for (std::size_t i = 0; i < nf; ++i) {
            const IdFace& f = prev.faces[i];
            st.pos.push_back(centroid(prev, f));
            st.proj.push_back(f.front());  // ι: the least vertex
            st.sp.push_back(support_union(prev, f));
            if (keep_names) {
                std::vector<HfSet> elems;
                for (VertexId v : f) elems.push_back(prev.name[v]);
                st.name.push_back(HfSet::set(std::move(elems)));
            }
        }
        // chains of the face poset, built upward from their maximum
        std::vector<std::vector<VertexId>> proper_sub(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const IdFace& f = prev.faces[i];
            const std::size_t k = f.size();
            for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << k); ++mask) {
                IdFace sub;
                for (std::size_t b = 0; b < k; ++b)
                    if (mask & (std::size_t(1) << b)) sub.push_back(f[b]);
                auto it = index.find(sub);
                if (it != index.end()) proper_sub[i].push_back(it->second);
            }
        }
        IdFace chain;
        std::function<void(VertexId)> emit = [&](VertexId top) {
            chain.push_back(top);
            IdFace face = chain;
            std::sort(face.begin(), face.end());
            st.faces.push_back(std::move(face));
            for (VertexId s : proper_sub[top]) emit(s);
            chain.pop_back();
        };
        for (std::size_t i = 0; i < nf; ++i) emit(static_cast<VertexId>(i));
        st.weld_count = nf;
        st.is_block = true;
        st.finalize();
        return st;
    }

    TowerStage weld_stage(const TowerStage& prev, const ScheduleStep& step) const {
        if (prev.name.empty())
            throw ScheduleInvalid("scheduled welds need a named (small) stage");
        // resolve the named face
        IdFace divisor;
        for (std::size_t v = 0; v < prev.name.size(); ++v)
            if (step.face.is_set() && step.face.contains(prev.name[v]))
                divisor.push_back(static_cast<VertexId>(v));
        if (!step.face.valid() || divisor.size() != step.face.size() ||
            !prev.has_face(divisor))
            throw ScheduleInvalid("scheduled divisor is not a face: " +
                                  (step.face.valid() ? to_text(step.face) : "?"));
        VertexId apex = divisor.front();
        if (step.apex.valid()) {
            bool found = false;
            for (VertexId v : divisor)
                if (prev.name[v] == step.apex) {
                    apex = v;
                    found = true;
                }
            if (!found)
                throw ScheduleInvalid("scheduled apex is not in the divisor");
        }

        TowerStage st;
        const bool rename = divisor.size() == 1;
        const std::size_t nv = prev.pos.size();
        VertexId fresh = static_cast<VertexId>(rename ? divisor[0] : nv);
        st.pos = prev.pos;
        st.sp = prev.sp;
        st.name = prev.name;
        st.proj.resize(nv);
        for (std::size_t v = 0; v < nv; ++v) st.proj[v] = static_cast<VertexId>(v);
        std::vector<HfSet> delems;
        for (VertexId v : divisor) delems.push_back(prev.name[v]);
        HfSet newname = HfSet::set(delems);
        if (rename) {
            st.name[fresh] = newname;
            st.proj[fresh] = divisor[0];
        } else {
            st.pos.push_back(centroid(prev, divisor));
            st.sp.push_back(support_union(prev, divisor));
            st.name.push_back(newname);
            st.proj.push_back(apex);
        }
        for (const IdFace& f : prev.faces) {
            if (!std::includes(f.begin(), f.end(), divisor.begin(), divisor.end())) {
                st.faces.push_back(f);
                continue;
            }
            IdFace core;
            for (VertexId v : f)
                if (!std::binary_search(divisor.begin(), divisor.end(), v))
                    core.push_back(v);
            const std::size_t k = divisor.size();
            for (std::size_t mask = 0; mask + 1 < (std::size_t(1) << k); ++mask) {
                IdFace nf = core;
                for (std::size_t b = 0; b < k; ++b)
                    if (mask & (std::size_t(1) << b)) nf.push_back(divisor[b]);
                nf.push_back(fresh);
                std::sort(nf.begin(), nf.end());
                st.faces.push_back(std::move(nf));
            }
        }
        if (rename) {
            // the renamed vertex keeps its slot; faces already reference it
            std::sort(st.faces.begin(), st.faces.end());
            st.faces.erase(std::unique(st.faces.begin(), st.faces.end()),
                           st.faces.end());
        }
        st.weld_count = 1;
        st.finalize();
        return st;
    }
};

/// ε per block boundary for a pure-block tower, streaming the final block
/// so that deep towers need not materialize their last stage.
inline std::vector<double> block_epsilons(const Complex& ground, int blocks) {
    Tower t = Tower::build(ground, 0);
    std::vector<double> eps{t.epsilon(0)};
    if (blocks == 0) return eps;
    // materialize all but the last block
    Tower full = Tower::build(ground, blocks - 1);
    for (std::size_t n = 1; n < full.stages().size(); ++n)
        eps.push_back(full.epsilon(n));
    // stream the chains of the last materialized stage
    const TowerStage& st = full.stages().back();
    const std::size_t nf = st.faces.size();
    std::unordered_map<IdFace, std::size_t, detail::IdFaceHash> index;
    for (std::size_t i = 0; i < nf; ++i) index.emplace(st.faces[i], i);
    std::vector<std::vector<double>> bary(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        std::vector<double> c(st.pos[0].size(), 0.0);
        for (VertexId v : st.faces[i])
            for (std::size_t d = 0; d < c.size(); ++d) c[d] += st.pos[v][d];
        for (double& x : c) x /= double(st.faces[i].size());
        bary[i] = std::move(c);
    }
    std::vector<std::vector<std::size_t>> proper_sub(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        const IdFace& f = st.faces[i];
        const std::size_t k = f.size();
        for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << k); ++mask) {
            IdFace sub;
            for (std::size_t b = 0; b < k; ++b)
                if (mask & (std::size_t(1) << b)) sub.push_back(f[b]);
            auto it = index.find(sub);
            if (it != index.end()) proper_sub[i].push_back(it->second);
        }
    }
    double worst = 0;
    std::vector<std::size_t> chain;
    std::function<void(std::size_t)> walk = [&](std::size_t top) {
        chain.push_back(top);
        for (std::size_t a : chain) {
            double d = detail::dist(bary[a], bary[top]);
            worst = std::max(worst, d);
        }
        for (std::size_t s : proper_sub[top]) walk(s);
        chain.pop_back();
    };
    for (std::size_t i = 0; i < nf; ++i) walk(i);
    eps.push_back(worst);
    return eps;
}

// ---------------------------------------------------------------------------
// Realizing assignments over HfSet complexes (the small-scale view)
// ---------------------------------------------------------------------------

using RealizingAssignment =
    std::unordered_map<HfSet, std::vector<double>, HfSetHash>;

/// The standard-basis embedding x^v of Appendix-style realizations.
inline RealizingAssignment standard_assignment(const Complex& ground) {
    RealizingAssignment r;
    auto verts = ground.vertices();
    for (std::size_t i = 0; i < verts.size(); ++i) {
        std::vector<double> p(verts.size(), 0.0);
        p[i] = 1.0;
        r.emplace(verts[i], std::move(p));
    }
    return r;
}

/// Refines an assignment along one subdivision: the new vertex s sits at
/// the centroid (1/#s)·Σ_{v∈s} r(v); with s = {x} the old vertex x drops.
inline RealizingAssignment refine_assignment(const RealizingAssignment& r,
                                             const Complex& a, HfSet s) {
    if (!a.has_face(s))
        throw PreconditionFailed("refinement requires a face divisor");
    RealizingAssignment out = r;
    std::vector<double> c;
    for (HfSet v : s.elements()) {
        const std::vector<double>& p = r.at(v);
        if (c.empty()) c.assign(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) c[i] += p[i];
    }
    for (double& x : c) x /= double(s.size());
    if (s.size() == 1) out.erase(s.elements()[0]);
    out.emplace(s, std::move(c));
    return out;
}

// ---------------------------------------------------------------------------
// Threads, the R-relation, and the quotient report
// ---------------------------------------------------------------------------

/// A finite thread (x_0, …, x_N) with π_n(x_{n+1}) = x_n at the recorded
/// checkpoint stages, specified by a seed vertex at the final stage.
struct LimitThread {
    std::vector<VertexId> at;

    static LimitThread from_seed(const Tower& t, VertexId final_vertex) {
        LimitThread th;
        th.at.assign(t.stages().size(), 0);
        th.at.back() = final_vertex;
        for (std::size_t n = t.stages().size() - 1; n > 0; --n)
            th.at[n - 1] = t.stages()[n].proj.at(th.at[n]);
        return th;
    }
};

/// R-relatedness through stage n: {x_k, y_k} lies in a face of A_k for all
/// k ≤ n (true when the projections coincide, since vertices are faces).
inline bool r_related(const Tower& t, const LimitThread& x, const LimitThread& y,
                      std::size_t n) {
    for (std::size_t k = 0; k <= n; ++k) {
        VertexId a = x.at[k], b = y.at[k];
        if (a == b) continue;
        IdFace f{std::min(a, b), std::max(a, b)};
        if (!t.stages()[k].has_face(f)) return false;
    }
    return true;
}

/// The vertex set of the closed star of v.
inline std::vector<VertexId> star_vertices(const TowerStage& st, VertexId v) {
    std::vector<VertexId> out;
    for (const IdFace& f : st.faces)
        if (std::binary_search(f.begin(), f.end(), v))
            out.insert(out.end(), f.begin(), f.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Pairs with disjoint closed stars at stage n cannot merge later; they are
/// the finite-stage witnesses of definitive separation.
inline bool stars_disjoint(const TowerStage& st, VertexId a, VertexId b) {
    std::vector<VertexId> sa = star_vertices(st, a), sb = star_vertices(st, b);
    std::vector<VertexId> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(common));
    return common.empty();
}

struct QuotientSample {
    VertexId seed;
    std::vector<std::string> sp_frozen;     // ∪ sp(pr_n(x)) at the final stage
    std::vector<std::string> sp_geometric;  // support of g_N(x)
    bool supports_equal = false;
};

struct QuotientPair {
    VertexId seed_x, seed_y;
    bool related = false;     // at every stage
    bool persistent = false;  // separation witnessed two checkpoints early:
                              // the projections already have disjoint closed
                              // stars at stage N−2
    double distance = 0;      // |g_N(x) − g_N(y)|
    bool ok = true;           // the distance matches the classification
};

struct QuotientReport {
    std::vector<double> eps_table;
    double final_eps = 0;
    std::vector<QuotientSample> samples;
    std::vector<QuotientPair> pairs;
    std::size_t related_count = 0, persistent_count = 0;
    bool all_ok = true;
};

/// Samples thread pairs and checks the quotient picture: related pairs stay
/// within ε_N, star-disjoint pairs separate beyond ε_N, and the frozen
/// support equals the geometric support of the image point.
inline QuotientReport quotient_report(const Tower& t, std::size_t pair_samples,
                                      std::uint64_t seed = 17) {
    const double tol = 1e-9;
    QuotientReport rep;
    for (const TowerStage& st : t.stages()) rep.eps_table.push_back(st.eps);
    rep.final_eps = rep.eps_table.back();
    const TowerStage& fin = t.stages().back();
    const std::size_t n = t.stages().size() - 1;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<VertexId> pick(
        0, static_cast<VertexId>(fin.pos.size() - 1));

    auto sp_names = [&](const std::vector<VertexId>& sp) {
        std::vector<std::string> out;
        for (VertexId i : sp) out.push_back(t.atoms()[i].atom_name());
        return out;
    };
    auto geometric_support = [&](const std::vector<double>& p) {
        std::vector<VertexId> out;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i] > tol) out.push_back(static_cast<VertexId>(i));
        return out;
    };

    std::unordered_set<VertexId> seen;
    std::vector<VertexId> seeds;
    auto add_seed = [&](VertexId v) {
        if (seen.insert(v).second) seeds.push_back(v);
    };
    while (seeds.size() < std::max<std::size_t>(2, pair_samples / 4)) {
        VertexId v = pick(rng);
        add_seed(v);
        // also seed a face neighbour so that related pairs get sampled
        for (const IdFace& f : fin.faces)
            if (f.size() == 2 && (f[0] == v || f[1] == v)) {
                add_seed(f[0] == v ? f[1] : f[0]);
                break;
            }
        if (seen.size() >= fin.pos.size()) break;
    }
    for (VertexId s : seeds) {
        QuotientSample smp;
        smp.seed = s;
        smp.sp_frozen = sp_names(fin.sp[s]);
        smp.sp_geometric = sp_names(geometric_support(fin.pos[s]));
        smp.supports_equal = smp.sp_frozen == smp.sp_geometric;
        rep.all_ok = rep.all_ok && smp.supports_equal;
        rep.samples.push_back(std::move(smp));
    }

    // separation witness stage: two checkpoints before the final one
    const std::size_t wit = n >= 2 ? n - 2 : 0;
    const TowerStage& wst = t.stages()[wit];
    std::vector<std::vector<VertexId>> stars(seeds.size());
    std::vector<LimitThread> threads(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        threads[i] = LimitThread::from_seed(t, seeds[i]);
        stars[i] = star_vertices(wst, threads[i].at[wit]);
    }
    std::size_t made = 0;
    for (std::size_t i = 0; i < seeds.size() && made < pair_samples; ++i)
        for (std::size_t j = i + 1; j < seeds.size() && made < pair_samples; ++j) {
            QuotientPair pr;
            pr.seed_x = seeds[i];
            pr.seed_y = seeds[j];
            pr.related = r_related(t, threads[i], threads[j], n);
            std::vector<VertexId> common;
            std::set_intersection(stars[i].begin(), stars[i].end(),
                                  stars[j].begin(), stars[j].end(),
                                  std::back_inserter(common));
            pr.persistent = common.empty();
            pr.distance = detail::dist(fin.pos[seeds[i]], fin.pos[seeds[j]]);
            if (pr.related) {
                ++rep.related_count;
                pr.ok = pr.distance <= rep.final_eps + tol;
            } else if (pr.persistent) {
                ++rep.persistent_count;
                pr.ok = pr.distance > rep.final_eps - tol;
            }
            rep.all_ok = rep.all_ok && pr.ok;
            rep.pairs.push_back(pr);
            ++made;
        }
    return rep;
}

/// Finite-stage transitivity evidence: for sampled triples related pairwise
/// through the final stage, checks whether the triple spans a face at every
/// stage. Failures are reported as non-persistent triples, never as errors.
struct TransitivityEvidence {
    std::size_t tested = 0;
    std::size_t persistent = 0;      // triple face present at every stage
    std::size_t non_persistent = 0;  // pairwise survives, triple face lost
};

inline TransitivityEvidence transitivity_evidence(const Tower& t,
                                                  std::size_t samples,
                                                  std::uint64_t seed = 23) {
    TransitivityEvidence ev;
    const TowerStage& fin = t.stages().back();
    const std::size_t n = t.stages().size() - 1;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<VertexId> pick(
        0, static_cast<VertexId>(fin.pos.size() - 1));
    for (std::size_t trial = 0; trial < samples * 50 && ev.tested < samples;
         ++trial) {
        VertexId x = pick(rng), y = pick(rng), z = pick(rng);
        if (x == y || y == z || x == z) continue;
        LimitThread tx = LimitThread::from_seed(t, x);
        LimitThread ty = LimitThread::from_seed(t, y);
        LimitThread tz = LimitThread::from_seed(t, z);
        if (!r_related(t, tx, ty, n) || !r_related(t, ty, tz, n)) continue;
        ++ev.tested;
        bool spans = true;
        for (std::size_t k = 0; k <= n && spans; ++k) {
            IdFace f{tx.at[k], ty.at[k], tz.at[k]};
            std::sort(f.begin(), f.end());
            f.erase(std::unique(f.begin(), f.end()), f.end());
            spans = t.stages()[k].has_face(f);
        }
        if (spans)
            ++ev.persistent;
        else
            ++ev.non_persistent;
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Mesh export
// ---------------------------------------------------------------------------

namespace detail {

/// Maps the standard simplex in R^m (m ≤ 4) affinely into R^3.
inline std::array<double, 3> to3d(const std::vector<double>& p) {
    static const double corners[4][3] = {{0, 0, 0},
                                         {1, 0, 0},
                                         {0.5, std::sqrt(3.0) / 2.0, 0},
                                         {0.5, std::sqrt(3.0) / 6.0,
                                          std::sqrt(6.0) / 3.0}};
    std::array<double, 3> out{0, 0, 0};
    for (std::size_t i = 0; i < p.size(); ++i)
        for (int d = 0; d < 3; ++d) out[d] += p[i] * corners[i][d];
    return out;
}

} // namespace detail

/// OFF encoding of stage n: embedded vertices and maximal faces.
inline std::string export_off(const Tower& t, std::size_t n) {
    const TowerStage& st = t.stages().at(n);
    if (t.atoms().size() > 4)
        throw DimensionTooHigh("mesh export needs a ground on at most 4 vertices");
    std::vector<IdFace> maximal = st.maximal_faces();
    std::ostringstream os;
    os << "OFF\n" << st.pos.size() << " " << maximal.size() << " 0\n";
    os.setf(std::ios::fixed);
    os.precision(9);
    for (const auto& p : st.pos) {
        auto q = detail::to3d(p);
        os << q[0] << " " << q[1] << " " << q[2] << "\n";
    }
    for (const IdFace& f : maximal) {
        os << f.size();
        for (VertexId v : f) os << " " << v;
        os << "\n";
    }
    return os.str();
}

/// JSON encoding of stage n: barycentric vertex coordinates and the maximal
/// faces, as plain arrays.
inline std::string export_mesh_json(const Tower& t, std::size_t n) {
    const TowerStage& st = t.stages().at(n);
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(9);
    os << "{\n  \"vertices\": [";
    for (std::size_t v = 0; v < st.pos.size(); ++v) {
        os << (v ? ", [" : "[");
        for (std::size_t i = 0; i < st.pos[v].size(); ++i)
            os << (i ? ", " : "") << st.pos[v][i];
        os << "]";
    }
    os << "],\n  \"faces\": [";
    std::vector<IdFace> maximal = st.maximal_faces();
    for (std::size_t i = 0; i < maximal.size(); ++i) {
        os << (i ? ", [" : "[");
        for (std::size_t j = 0; j < maximal[i].size(); ++j)
            os << (j ? ", " : "") << maximal[i][j];
        os << "]";
    }
    os << "]\n}\n";
    return os.str();
}

} // namespace stellar

#endif
