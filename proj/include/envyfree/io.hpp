#ifndef ENVYFREE_IO_HPP
#define ENVYFREE_IO_HPP

#include "envyfree/choice.hpp"
#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/lattice.hpp"
#include "envyfree/market.hpp"
#include "envyfree/solution.hpp"
#include "envyfree/tarski.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace envyfree {

using json = nlohmann::json;

/// A lattice as someone else drew it: the nodes claimed envy-free, which of
/// them are claimed stable, and the claimed cover edges (indices into nodes).
struct ReferenceLattice {
    struct Node {
        std::vector<std::string> contracts;
        bool stable = false;
    };
    std::string label;
    std::optional<std::size_t> envy_free_count;
    std::optional<std::size_t> stable_count;
    std::vector<Node> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> covers; // (lower, upper)
};

struct MarketDocument {
    MarketSpec spec;
    std::optional<ReferenceLattice> reference;
};

// ---------------------------------------------------------------------------
// Market files
// ---------------------------------------------------------------------------

namespace detail {

inline const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_string()) throw ParseError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

inline long long int_field(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_number_integer()) throw ParseError(where + ": field '" + key + "' must be an integer");
    return v.get<long long>();
}

inline std::vector<std::string> id_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ParseError(where + ": expected an array of ids");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ParseError(where + ": ids must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline const json& array_field(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_array()) throw ParseError(where + ": field '" + key + "' must be an array");
    return v;
}

inline ReferenceLattice parse_reference(const json& r) {
    const std::string where = "reference";
    ReferenceLattice ref;
    if (r.contains("label")) ref.label = string_field(r, "label", where);
    if (r.contains("envy_free_count")) ref.envy_free_count = static_cast<std::size_t>(int_field(r, "envy_free_count", where));
    if (r.contains("stable_count")) ref.stable_count = static_cast<std::size_t>(int_field(r, "stable_count", where));
    const auto& nodes = array_field(r, "nodes", where);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto w = where + ".nodes[" + std::to_string(i) + "]";
        ReferenceLattice::Node n;
        n.contracts = id_list(field(nodes[i], "contracts", w), w);
        if (nodes[i].contains("stable")) {
            if (!nodes[i]["stable"].is_boolean()) throw ParseError(w + ": 'stable' must be a boolean");
            n.stable = nodes[i]["stable"].get<bool>();
        }
        ref.nodes.push_back(std::move(n));
    }
    if (r.contains("covers")) {
        for (const auto& e : array_field(r, "covers", where)) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
                throw ParseError(where + ".covers: each cover is a [lower, upper] pair of node indices");
            const auto lo = e[0].get<std::size_t>(), up = e[1].get<std::size_t>();
            if (lo >= ref.nodes.size() || up >= ref.nodes.size())
                throw ParseError(where + ".covers: node index out of range");
            ref.covers.emplace_back(lo, up);
        }
    }
    return ref;
}

} // namespace detail

inline MarketDocument parse_market_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed market document: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("market document must be a JSON object");

    MarketDocument out;
    auto& spec = out.spec;
    const auto& contracts = detail::array_field(doc, "contracts", "market");
    for (std::size_t i = 0; i < contracts.size(); ++i) {
        const auto w = "contracts[" + std::to_string(i) + "]";
        spec.contracts.push_back({detail::string_field(contracts[i], "id", w), detail::string_field(contracts[i], "doctor", w),
                                  detail::string_field(contracts[i], "hospital", w)});
    }
    const auto& hospitals = detail::array_field(doc, "hospitals", "market");
    for (std::size_t i = 0; i < hospitals.size(); ++i) {
        const auto w = "hospitals[" + std::to_string(i) + "]";
        HospitalSpec h;
        h.id = detail::string_field(hospitals[i], "id", w);
        h.quota = detail::int_field(hospitals[i], "quota", w);
        h.ranking = detail::id_list(detail::field(hospitals[i], "ranking", w), w + ".ranking");
        spec.hospitals.push_back(std::move(h));
    }
    const auto& doctors = detail::array_field(doc, "doctors", "market");
    for (std::size_t i = 0; i < doctors.size(); ++i) {
        const auto w = "doctors[" + std::to_string(i) + "]";
        DoctorSpec d;
        d.id = detail::string_field(doctors[i], "id", w);
        const auto kind = detail::string_field(doctors[i], "kind", w);
        if (kind == "responsive") {
            ResponsiveDoctorSpec r;
            r.quota = detail::int_field(doctors[i], "quota", w);
            r.ranking = detail::id_list(detail::field(doctors[i], "ranking", w), w + ".ranking");
            d.choice = std::move(r);
        } else if (kind == "table") {
            TableDoctorSpec t;
            const auto& rows = detail::array_field(doctors[i], "table", w);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto rw = w + ".table[" + std::to_string(r) + "]";
                t.rows.push_back({detail::id_list(detail::field(rows[r], "given", rw), rw + ".given"),
                                  detail::id_list(detail::field(rows[r], "chosen", rw), rw + ".chosen")});
            }
            d.choice = std::move(t);
        } else {
            throw ParseError(w + ": unknown doctor kind '" + kind + "' (expected responsive or table)");
        }
        spec.doctors.push_back(std::move(d));
    }
    if (doc.contains("reference")) out.reference = detail::parse_reference(doc["reference"]);
    return out;
}

inline MarketSpec parse_market_spec(std::string_view text) { return parse_market_document(text).spec; }

inline json to_json(const ReferenceLattice& ref) {
    json j;
    j["label"] = ref.label;
    if (ref.envy_free_count) j["envy_free_count"] = *ref.envy_free_count;
    if (ref.stable_count) j["stable_count"] = *ref.stable_count;
    j["nodes"] = json::array();
    for (const auto& n : ref.nodes) j["nodes"].push_back({{"contracts", n.contracts}, {"stable", n.stable}});
    j["covers"] = json::array();
    for (const auto& [lo, up] : ref.covers) j["covers"].push_back({lo, up});
    return j;
}

inline json to_json(const MarketSpec& spec) {
    json j;
    j["contracts"] = json::array();
    for (const auto& c : spec.contracts) j["contracts"].push_back({{"id", c.id}, {"doctor", c.doctor}, {"hospital", c.hospital}});
    j["hospitals"] = json::array();
    for (const auto& h : spec.hospitals) j["hospitals"].push_back({{"id", h.id}, {"quota", h.quota}, {"ranking", h.ranking}});
    j["doctors"] = json::array();
    for (const auto& d : spec.doctors) {
        json dj{{"id", d.id}};
        if (const auto* r = std::get_if<ResponsiveDoctorSpec>(&d.choice)) {
            dj["kind"] = "responsive";
            dj["quota"] = r->quota;
            dj["ranking"] = r->ranking;
        } else {
            dj["kind"] = "table";
            dj["table"] = json::array();
            for (const auto& row : std::get<TableDoctorSpec>(d.choice).rows)
                dj["table"].push_back({{"given", row.given}, {"chosen", row.chosen}});
        }
        j["doctors"].push_back(std::move(dj));
    }
    return j;
}

inline json to_json(const MarketDocument& doc) {
    auto j = to_json(doc.spec);
    if (doc.reference) j["reference"] = to_json(*doc.reference);
    return j;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json ids_json(const Market& m, const ContractSet& s) { return m.ids_of(s); }

inline json to_json(const Market& m, const PropertyWitness& w) {
    json j{{"property", property_name(w.property)}, {"doctor", m.doctor(w.doctor).id}};
    j["subsets"] = json::array();
    for (const auto& s : w.subsets) j["subsets"].push_back(ids_json(m, s));
    j["choices"] = json::array();
    for (const auto& s : w.choices) j["choices"].push_back(ids_json(m, s));
    return j;
}

inline const char* status_name(CheckStatus s) {
    switch (s) {
    case CheckStatus::passed: return "pass";
    case CheckStatus::failed: return "fail";
    case CheckStatus::skipped: return "skipped";
    }
    return "?";
}

/// `m` may be null when the report only carries structural errors.
inline json to_json(const Market* m, const ValidationReport& rep) {
    json j;
    j["ok"] = rep.ok();
    j["structural_errors"] = rep.structural_errors;
    j["agents"] = json::array();
    for (const auto& a : rep.agents) {
        json aj{{"kind", a.kind == AgentKind::doctor ? "doctor" : "hospital"}, {"id", a.id}};
        aj["checks"] = json::array();
        for (const auto& c : a.checks) {
            json cj{{"property", c.property}, {"status", status_name(c.status)}, {"fatal", c.fatal}, {"sampled", c.sampled}};
            cj["witness"] = (c.witness && m) ? to_json(*m, *c.witness) : json(nullptr);
            if (!c.note.empty()) cj["note"] = c.note;
            aj["checks"].push_back(std::move(cj));
        }
        j["agents"].push_back(std::move(aj));
    }
    return j;
}

inline json to_json(const Market& m, const EnvyWitness& w) {
    return {{"envious", m.doctor(w.envious).id},
            {"envied", m.doctor(w.envied).id},
            {"held", m.contract(w.held).id},
            {"desired", m.contract(w.desired).id},
            {"hospital", m.hospital(w.hospital).id}};
}

inline json envy_json(const Market& m, const std::vector<EnvyWitness>& ws) {
    json j = json::array();
    for (const auto& w : ws) j.push_back(to_json(m, w));
    return j;
}

inline json to_json(const Market& m, const AllocationViolation& v) {
    if (v.kind == AllocationViolation::Kind::duplicate_pair)
        return {{"kind", "duplicate-pair"},
                {"doctor", m.doctor(v.doctor).id},
                {"hospital", m.hospital(v.hospital).id},
                {"contracts", ids_json(m, v.contracts)}};
    return {{"kind", "quota-exceeded"},
            {"hospital", m.hospital(v.hospital).id},
            {"contracts", ids_json(m, v.contracts)},
            {"quota", v.quota}};
}

inline json to_json(const Market& m, const ClassificationReport& r) {
    json j;
    j["allocation"] = ids_json(m, r.allocation);
    j["is_allocation"] = r.is_allocation;
    j["violations"] = json::array();
    for (const auto& v : r.violations) j["violations"].push_back(to_json(m, v));
    j["is_individually_rational"] = r.is_ir;
    j["is_envy_free"] = r.is_envy_free;
    j["is_stable"] = r.is_stable;
    j["blocking"] = ids_json(m, r.blocking);
    j["envy"] = envy_json(m, r.envy);
    return j;
}

inline json to_json(const Market& m, const LatticeGraph& g) {
    json j;
    j["nodes"] = json::array();
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        j["nodes"].push_back({{"index", i},
                              {"contracts", ids_json(m, g.nodes[i])},
                              {"stable", static_cast<bool>(g.stable_mask[i])},
                              {"height", g.height[i]}});
    j["covers"] = json::array();
    for (const auto& [lo, up] : g.covers) j["covers"].push_back({lo, up});
    j["bottom"] = g.bottom;
    return j;
}

inline json to_json(const Market& m, const TarskiTrace& t) {
    json j;
    j["steps"] = json::array();
    for (const auto& s : t.steps) {
        json per = json::object();
        for (std::size_t d = 0; d < s.per_doctor.size(); ++d) per[m.doctor(d).id] = ids_json(m, s.per_doctor[d]);
        j["steps"].push_back({{"allocation", ids_json(m, s.allocation)},
                              {"blocking", ids_json(m, s.blocking)},
                              {"starred", ids_json(m, s.starred)},
                              {"per_doctor", std::move(per)}});
    }
    j["fixed_point"] = ids_json(m, t.fixed_point);
    j["iterations"] = t.iterations;
    return j;
}

inline json to_json(const Market& m, const LadReport& r) {
    json j;
    j["lad_applicable"] = r.lad_applicable;
    j["lad_failures"] = json::array();
    for (const auto& w : r.lad_failures) j["lad_failures"].push_back(to_json(m, w));
    j["start"] = ids_json(m, r.start);
    j["hospital_optimal"] = ids_json(m, r.hospital_optimal);
    j["fixed_point_equals_join"] = {{"fixed_point", ids_json(m, r.fixed_point)},
                                    {"join_with_hospital_optimal", ids_json(m, r.join_with_hospital_optimal)},
                                    {"iterations", r.iterations},
                                    {"holds", r.fixed_point_is_join}};
    j["stable_if_dominating_hospital_optimal"] = {{"dominates_hospital_optimal", r.dominates_hospital_optimal},
                                                  {"start_is_stable", r.start_is_stable},
                                                  {"holds", r.stable_if_dominating}};
    json cv = json::array();
    for (const auto& v : r.count_violations)
        cv.push_back({{"doctor", m.doctor(v.doctor).id},
                      {"stable", ids_json(m, v.stable)},
                      {"envy_free_count", v.envy_free_count},
                      {"stable_count", v.stable_count}});
    j["counts_bounded_by_stable"] = {{"holds", r.counts_bounded()}, {"violations", std::move(cv)}};
    json rv = json::array();
    for (const auto& v : r.rural_violations)
        rv.push_back({{"kind", v.kind == AgentKind::doctor ? "doctor" : "hospital"},
                      {"agent", v.kind == AgentKind::doctor ? m.doctor(v.agent).id : m.hospital(v.agent).id},
                      {"counts", v.counts}});
    j["rural_hospitals"] = {{"holds", r.rural_hospitals()}, {"violations", std::move(rv)}};
    j["stable_set"] = json::array();
    for (const auto& s : r.stable_set) j["stable_set"].push_back(ids_json(m, s));
    return j;
}

// ---------------------------------------------------------------------------
// Text renderings
// ---------------------------------------------------------------------------

inline std::string braces(const Market& m, const ContractSet& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& id : m.ids_of(s)) {
        if (!first) out += ", ";
        out += id;
        first = false;
    }
    return out + "}";
}

/// One block per step, contracts sorted.
inline std::string render_trace(const Market& m, const TarskiTrace& t) {
    std::ostringstream os;
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
        const auto& s = t.steps[k];
        os << "step " << k << "\n";
        os << "  allocation: " << braces(m, s.allocation) << "\n";
        os << "  blocking:   " << braces(m, s.blocking) << "\n";
        os << "  starred:    " << braces(m, s.starred) << "\n";
        for (std::size_t d = 0; d < s.per_doctor.size(); ++d)
            os << "  " << m.doctor(d).id << ": " << braces(m, s.per_doctor[d]) << "\n";
    }
    os << "fixed point after " << t.iterations << " iteration(s): " << braces(m, t.fixed_point) << "\n";
    return os.str();
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace detail

/// Graphviz rendering of the lattice, bottom at the bottom. Stable nodes are
/// bold and filled; nodes of equal height share a rank.
inline std::string to_dot(const Market& m, const LatticeGraph& g, std::string_view trailer_comment = {}) {
    std::ostringstream os;
    os << "digraph envy_free_lattice {\n";
    os << "  rankdir=BT;\n";
    os << "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        os << "  n" << i << " [label=\"" << detail::dot_escape(braces(m, g.nodes[i])) << "\"";
        if (g.stable_mask[i]) os << ", style=\"bold,filled\", fillcolor=\"lightgray\"";
        os << "];\n";
    }
    std::map<std::size_t, std::vector<std::size_t>> by_height;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) by_height[g.height[i]].push_back(i);
    for (const auto& [h, ns] : by_height) {
        os << "  { rank=same;";
        for (auto i : ns) os << " n" << i << ";";
        os << " }\n";
    }
    for (const auto& [lo, up] : g.covers) os << "  n" << lo << " -> n" << up << ";\n";
    os << "}\n";
    if (!trailer_comment.empty()) {
        os << "/*\n";
        std::istringstream lines{std::string(trailer_comment)};
        std::string line;
        while (std::getline(lines, line)) {
            // "*/" inside the report would close the comment early.
            for (std::size_t p; (p = line.find("*/")) != std::string::npos;) line.replace(p, 2, "* /");
            os << line << "\n";
        }
        os << "*/\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Reconciliation against a reference lattice
// ---------------------------------------------------------------------------

struct ReconciliationRow {
    std::string claim;
    std::string computed;
    bool match = false;
    json witness; // null when nothing needs explaining
};

struct Reconciliation {
    std::string label;
    std::vector<ReconciliationRow> rows;

    std::size_t mismatches() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.match; }));
    }
};

namespace detail {

// Why Y is not Blair-above Y': the doctors whose choice from Y ∪ Y' differs from Y_d.
inline json dominance_failure(const Market& m, const ContractSet& y, const ContractSet& yp) {
    json out = json::array();
    const auto both = y | yp;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) {
        const auto c = choose_doctor(m, d, both);
        const auto own = restrict_to_doctor(m, y, d);
        if (c != own)
            out.push_back({{"doctor", m.doctor(d).id},
                           {"offered", ids_json(m, restrict_to_doctor(m, both, d))},
                           {"chosen", ids_json(m, c)},
                           {"held_in_upper", ids_json(m, own)}});
    }
    return out;
}

inline json classification_witness(const Market& m, const ContractSet& y) {
    const auto r = classify(m, y);
    json w = to_json(m, r);
    if (r.is_allocation && !r.is_ir) {
        json ir = json::array();
        for (std::size_t d = 0; d < m.doctors().size(); ++d) {
            const auto c = choose_doctor(m, d, y);
            if (c != restrict_to_doctor(m, y, d))
                ir.push_back({{"agent", m.doctor(d).id}, {"holds", ids_json(m, restrict_to_doctor(m, y, d))}, {"chooses", ids_json(m, c)}});
        }
        for (std::size_t h = 0; h < m.hospitals().size(); ++h) {
            const auto c = choose_hospital(m, h, y);
            if (c != restrict_to_hospital(m, y, h))
                ir.push_back({{"agent", m.hospital(h).id}, {"holds", ids_json(m, restrict_to_hospital(m, y, h))}, {"chooses", ids_json(m, c)}});
        }
        w["ir_failures"] = std::move(ir);
    }
    return w;
}

inline std::string verdict_text(const ClassificationReport& r) {
    if (!r.is_allocation) return "not an allocation";
    if (!r.is_ir) return "not individually rational";
    if (!r.is_envy_free) return "not envy-free (" + std::to_string(r.envy.size()) + " justified-envy witness(es))";
    if (!r.is_stable) return "envy-free, not stable (" + std::to_string(r.blocking.size()) + " blocking contract(s))";
    return "stable";
}

} // namespace detail

/// Compares a computed lattice with a reference drawing, itemizing every
/// disagreement together with the classification that explains it.
inline Reconciliation reconcile(const Market& m, const LatticeGraph& g, const ReferenceLattice& ref) {
    Reconciliation out;
    out.label = ref.label.empty() ? "reference" : ref.label;
    const auto stable_count = static_cast<std::size_t>(std::count(g.stable_mask.begin(), g.stable_mask.end(), true));

    // Count rows carry the set differences behind any disagreement.
    std::vector<ContractSet> claimed, claimed_stable;
    for (const auto& n : ref.nodes) {
        ContractSet s;
        bool known = true;
        for (const auto& id : n.contracts) {
            if (auto x = m.find_contract(id)) s.insert(*x);
            else known = false;
        }
        if (!known) continue;
        claimed.push_back(s);
        if (n.stable) claimed_stable.push_back(s);
    }
    auto difference = [&](bool stable_only, const std::vector<ContractSet>& claims) {
        json only_computed = json::array(), only_claimed = json::array();
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            if ((!stable_only || g.stable_mask[i]) && std::find(claims.begin(), claims.end(), g.nodes[i]) == claims.end())
                only_computed.push_back(ids_json(m, g.nodes[i]));
        for (const auto& c : claims) {
            const auto it = std::find(g.nodes.begin(), g.nodes.end(), c);
            const bool computed = it != g.nodes.end() && (!stable_only || g.stable_mask[static_cast<std::size_t>(it - g.nodes.begin())]);
            if (!computed) only_claimed.push_back(ids_json(m, c));
        }
        return json{{"computed_not_claimed", std::move(only_computed)}, {"claimed_not_computed", std::move(only_claimed)}};
    };

    if (ref.envy_free_count) {
        const bool ok = *ref.envy_free_count == g.nodes.size();
        out.rows.push_back({"envy-free allocations: " + std::to_string(*ref.envy_free_count),
                            std::to_string(g.nodes.size()), ok, ok ? json(nullptr) : difference(false, claimed)});
    }
    if (ref.stable_count) {
        const bool ok = *ref.stable_count == stable_count;
        out.rows.push_back({"stable allocations: " + std::to_string(*ref.stable_count), std::to_string(stable_count), ok,
                            ok ? json(nullptr) : difference(true, claimed_stable)});
    }

    std::vector<std::optional<ContractSet>> ref_sets;
    std::vector<std::optional<std::size_t>> ref_to_node;
    for (const auto& n : ref.nodes) {
        std::string label = "{";
        for (std::size_t i = 0; i < n.contracts.size(); ++i) label += (i ? ", " : "") + n.contracts[i];
        label += "}";
        ContractSet s;
        json unknown = json::array();
        for (const auto& id : n.contracts) {
            if (auto x = m.find_contract(id)) s.insert(*x);
            else unknown.push_back(id);
        }
        if (!unknown.empty()) {
            out.rows.push_back({label + " is envy-free", "names a contract outside the market", false,
                                {{"unknown_contracts", std::move(unknown)}}});
            ref_sets.emplace_back();
            ref_to_node.emplace_back();
            continue;
        }
        ref_sets.emplace_back(s);
        const auto it = std::find(g.nodes.begin(), g.nodes.end(), s);
        ref_to_node.push_back(it == g.nodes.end() ? std::nullopt
                                                   : std::optional<std::size_t>(static_cast<std::size_t>(it - g.nodes.begin())));
        const auto r = classify(m, s);
        const bool ef_ok = r.is_envy_free;
        out.rows.push_back({braces(m, s) + " is envy-free", detail::verdict_text(r), ef_ok,
                            ef_ok ? json(nullptr) : detail::classification_witness(m, s)});
        if (ef_ok) {
            const bool st_ok = r.is_stable == n.stable;
            out.rows.push_back({braces(m, s) + (n.stable ? " is stable" : " is not stable"), detail::verdict_text(r), st_ok,
                                st_ok ? json(nullptr) : detail::classification_witness(m, s)});
        }
    }

    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (std::find(ref_to_node.begin(), ref_to_node.end(), std::optional<std::size_t>(i)) != ref_to_node.end()) continue;
        const auto r = classify(m, g.nodes[i]);
        out.rows.push_back({braces(m, g.nodes[i]) + " absent from " + out.label, detail::verdict_text(r), false,
                            detail::classification_witness(m, g.nodes[i])});
    }

    std::set<std::pair<std::size_t, std::size_t>> matched;
    for (const auto& [rlo, rup] : ref.covers) {
        if (!ref_sets[rlo] || !ref_sets[rup]) continue;
        const auto& lo = *ref_sets[rlo];
        const auto& up = *ref_sets[rup];
        const std::string claim = braces(m, up) + " covers " + braces(m, lo);
        const auto glo = ref_to_node[rlo], gup = ref_to_node[rup];
        if (glo && gup) {
            const std::pair<std::size_t, std::size_t> e{*glo, *gup};
            if (std::binary_search(g.covers.begin(), g.covers.end(), e)) {
                matched.insert(e);
                out.rows.push_back({claim, "cover", true, nullptr});
                continue;
            }
        }
        json why;
        std::string computed;
        if (!glo || !gup) {
            computed = "endpoint not envy-free";
            why = json::array();
            if (!glo) why.push_back(detail::classification_witness(m, lo));
            if (!gup) why.push_back(detail::classification_witness(m, up));
        } else if (!detail::dominates_unchecked(m, up, lo)) {
            computed = "no Blair dominance";
            why = {{"dominance_failures", detail::dominance_failure(m, up, lo)}};
        } else {
            computed = "dominance holds but is not a cover";
            json between = json::array();
            for (std::size_t k = 0; k < g.nodes.size(); ++k)
                if (k != *glo && k != *gup && detail::dominates_unchecked(m, up, g.nodes[k]) &&
                    detail::dominates_unchecked(m, g.nodes[k], lo))
                    between.push_back(ids_json(m, g.nodes[k]));
            why = {{"intermediate", std::move(between)}};
        }
        out.rows.push_back({claim, computed, false, std::move(why)});
    }
    for (const auto& e : g.covers) {
        if (matched.count(e)) continue;
        const auto& lo = g.nodes[e.first];
        const auto& up = g.nodes[e.second];
        const auto drawn = [&](std::size_t node) {
            return std::find(ref_to_node.begin(), ref_to_node.end(), std::optional<std::size_t>(node)) != ref_to_node.end();
        };
        out.rows.push_back({braces(m, up) + " covers " + braces(m, lo) + " (not drawn in " + out.label + ")", "cover", false,
                            {{"lower_drawn", drawn(e.first)}, {"upper_drawn", drawn(e.second)}}});
    }
    return out;
}

inline json to_json(const Reconciliation& r) {
    json j;
    j["label"] = r.label;
    j["mismatches"] = r.mismatches();
    j["rows"] = json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"claim", row.claim},
                             {"computed", row.computed},
                             {"verdict", row.match ? "match" : "mismatch"},
                             {"witness", row.witness}});
    return j;
}

/// Three-column text table: claim, computed result, verdict. Witnesses of
/// mismatches follow the row as compact JSON.
inline std::string render_reconciliation(const Reconciliation& r) {
    std::size_t w1 = 5, w2 = 8;
    for (const auto& row : r.rows) {
        w1 = std::max(w1, row.claim.size());
        w2 = std::max(w2, row.computed.size());
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    std::ostringstream os;
    os << "reconciliation against " << r.label << ": " << r.mismatches() << " mismatch(es) in " << r.rows.size()
       << " claim(s)\n";
    os << pad("claim", w1) << " | " << pad("computed", w2) << " | verdict\n";
    os << std::string(w1, '-') << "-+-" << std::string(w2, '-') << "-+---------\n";
    for (const auto& row : r.rows) {
        os << pad(row.claim, w1) << " | " << pad(row.computed, w2) << " | " << (row.match ? "match" : "mismatch") << "\n";
        if (!row.match && !row.witness.is_null()) os << "    witness: " << row.witness.dump() << "\n";
    }
    return os.str();
}

} // namespace envyfree

#endif
