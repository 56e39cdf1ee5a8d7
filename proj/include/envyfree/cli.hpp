#ifndef ENVYFREE_CLI_HPP
#define ENVYFREE_CLI_HPP

#include "envyfree/choice.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/generate.hpp"
#include "envyfree/io.hpp"
#include "envyfree/lattice.hpp"
#include "envyfree/market.hpp"
#include "envyfree/solution.hpp"
#include "envyfree/tarski.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace envyfree::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRefused = 1;
inline constexpr int kExitFatal = 2;

inline constexpr const char* kEnumerationCapVar = "ENVYFREE_ENUM_CAP";

/// Raised when the market file fails validation; carries the report.
class ValidationFailed : public Error {
public:
    ValidationFailed(json report) : Error("market failed validation"), report_(std::move(report)) {}
    const json& report() const noexcept { return report_; }

private:
    json report_;
};

struct LoadedMarket {
    Market market;
    std::optional<ReferenceLattice> reference;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Parses and validates a market file; fatal validation failures abort.
inline LoadedMarket load_market(const std::string& path) {
    auto doc = parse_market_document(read_file(path));
    Market m;
    try {
        m = Market::from_spec(doc.spec);
    } catch (const StructuralError& e) {
        ValidationReport rep;
        rep.structural_errors = e.problems();
        throw ValidationFailed(to_json(nullptr, rep));
    }
    auto rep = validate_market(m);
    if (rep.has_fatal()) throw ValidationFailed(to_json(&m, rep));
    return {std::move(m), std::move(doc.reference)};
}

inline ContractSet parse_ids(const Market& m, const std::string& list) {
    ContractSet s;
    std::stringstream ss(list);
    std::string id;
    while (std::getline(ss, id, ',')) {
        const auto b = id.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = id.find_last_not_of(" \t");
        s.insert(m.contract_index(id.substr(b, e - b + 1)));
    }
    return s;
}

inline std::vector<std::string> split_ids(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string id;
    while (std::getline(ss, id, ',')) {
        const auto b = id.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = id.find_last_not_of(" \t");
        out.push_back(id.substr(b, e - b + 1));
    }
    return out;
}

inline EnumerationOptions enumeration_options() {
    EnumerationOptions opt;
    if (const char* v = std::getenv(kEnumerationCapVar)) {
        char* end = nullptr;
        const auto cap = std::strtoull(v, &end, 10);
        if (end == v || *end != '\0') throw PreconditionError(std::string(kEnumerationCapVar) + " must be a nonnegative integer");
        opt.cap = static_cast<std::size_t>(cap);
    }
    return opt;
}

inline const char* mark(bool b) { return b ? "yes" : "no"; }

inline void emit(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

inline std::optional<SolutionClass> parse_class(const std::string& s) {
    if (s == "allocation") return SolutionClass::allocation;
    if (s == "ir") return SolutionClass::individually_rational;
    if (s == "envy-free") return SolutionClass::envy_free;
    if (s == "stable") return SolutionClass::stable;
    return std::nullopt;
}

/// Runs one CLI invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Envy-free allocations, Blair lattices and Tarski re-equilibration for matching markets with contracts",
                 "envyfree"};
    app.require_subcommand(1, 1);

    std::string file, allocation, left, right, from, stable, retire, klass, format = "json", out_path;
    bool count_only = false, trace = false;
    GenParams gen;
    std::size_t doctor_quota_max = 2, hospital_quota_max = 2;

    auto* validate = app.add_subcommand("validate", "Validate a market file and print the report");
    validate->add_option("file", file)->required();

    auto* check = app.add_subcommand("check", "Classify one allocation");
    check->add_option("file", file)->required();
    check->add_option("--allocation", allocation, "comma-separated contract ids")->required();

    auto* enumerate_cmd = app.add_subcommand("enumerate", "List every allocation of a class");
    enumerate_cmd->add_option("file", file)->required();
    enumerate_cmd->add_option("--class", klass)->required()->check(CLI::IsMember({"allocation", "ir", "envy-free", "stable"}));
    enumerate_cmd->add_flag("--count-only", count_only);

    auto* lattice_cmd = app.add_subcommand("lattice", "Hasse diagram of the envy-free lattice");
    lattice_cmd->add_option("file", file)->required();
    lattice_cmd->add_option("--format", format)->check(CLI::IsMember({"dot", "json"}));

    auto* join_cmd = app.add_subcommand("join", "Join of two envy-free allocations");
    auto* meet_cmd = app.add_subcommand("meet", "Meet of two envy-free allocations");
    for (auto* sub : {join_cmd, meet_cmd}) {
        sub->add_option("file", file)->required();
        sub->add_option("--left", left)->required();
        sub->add_option("--right", right)->required();
    }

    auto* tarski_cmd = app.add_subcommand("tarski", "Iterate the Tarski operator to a stable allocation");
    tarski_cmd->add_option("file", file)->required();
    tarski_cmd->add_option("--from", from)->required();
    tarski_cmd->add_flag("--trace", trace);

    auto* vacancy_cmd = app.add_subcommand("vacancy-chain", "Retire doctors from a stable allocation and re-equilibrate");
    vacancy_cmd->add_option("file", file)->required();
    vacancy_cmd->add_option("--stable", stable)->required();
    vacancy_cmd->add_option("--retire", retire)->required();
    vacancy_cmd->add_flag("--trace", trace);

    auto* random_cmd = app.add_subcommand("random", "Write a random responsive market");
    random_cmd->add_option("--doctors", gen.doctors)->required();
    random_cmd->add_option("--hospitals", gen.hospitals)->required();
    random_cmd->add_option("--contracts", gen.contracts)->required();
    random_cmd->add_option("--seed", gen.seed)->required();
    random_cmd->add_option("--out", out_path)->required();
    random_cmd->add_option("--doctor-quota-max", doctor_quota_max);
    random_cmd->add_option("--hospital-quota-max", hospital_quota_max);
    random_cmd->add_option("--acceptability", gen.acceptability);

    auto* verify_cmd = app.add_subcommand("verify-lad", "Check the LAD-conditional predictions at one allocation");
    verify_cmd->add_option("file", file)->required();
    verify_cmd->add_option("--from", from)->required();

    std::vector<std::string> argv_store{"envyfree"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFatal;
    }

    auto fail = [&](int code, const char* kind, const std::string& message, json extra = json::object()) {
        json j{{"error", {{"kind", kind}, {"message", message}}}};
        for (auto& [k, v] : extra.items()) j["error"][k] = v;
        emit(out, j);
        err << "envyfree: " << message << "\n";
        return code;
    };

    try {
        if (*random_cmd) {
            gen.doctor_quota_max = doctor_quota_max;
            gen.hospital_quota_max = hospital_quota_max;
            const auto spec = generate_responsive_market(gen);
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw PreconditionError("cannot write '" + out_path + "'");
            f << to_json(spec).dump(2) << "\n";
            emit(out, {{"written", out_path}, {"contracts", spec.contracts.size()}});
            return kExitOk;
        }

        if (*validate) {
            const auto doc = parse_market_document(read_file(file));
            std::optional<Market> m;
            ValidationReport rep;
            try {
                m = Market::from_spec(doc.spec);
                rep = validate_market(*m);
            } catch (const StructuralError& e) {
                rep.structural_errors = e.problems();
            }
            emit(out, to_json(m ? &*m : nullptr, rep));
            err << (rep.ok() ? "market is valid" : "market failed validation") << "\n";
            return rep.ok() ? kExitOk : kExitFatal;
        }

        const auto loaded = load_market(file);
        const auto& m = loaded.market;

        if (*check) {
            const auto r = classify(m, parse_ids(m, allocation));
            emit(out, to_json(m, r));
            err << "allocation " << mark(r.is_allocation) << ", IR " << mark(r.is_ir) << ", envy-free " << mark(r.is_envy_free)
                << ", stable " << mark(r.is_stable) << ", blocking " << braces(m, r.blocking) << "\n";
            return kExitOk;
        }

        if (*enumerate_cmd) {
            const auto c = *parse_class(klass);
            const auto all = enumerate(m, c, enumeration_options());
            json j{{"class", class_name(c)}, {"count", all.size()}};
            if (!count_only) {
                j["allocations"] = json::array();
                for (const auto& y : all) j["allocations"].push_back(ids_json(m, y));
            }
            emit(out, j);
            return kExitOk;
        }

        if (*lattice_cmd) {
            const auto g = hasse(m, enumeration_options());
            std::optional<Reconciliation> rec;
            if (loaded.reference) rec = reconcile(m, g, *loaded.reference);
            if (format == "dot") {
                out << to_dot(m, g, rec ? render_reconciliation(*rec) : std::string{});
            } else {
                auto j = to_json(m, g);
                if (rec) j["reconciliation"] = to_json(*rec);
                emit(out, j);
            }
            if (rec) err << rec->mismatches() << " mismatch(es) against " << rec->label << "\n";
            return kExitOk;
        }

        if (*join_cmd) {
            const auto y = join(m, parse_ids(m, left), parse_ids(m, right));
            emit(out, {{"join", ids_json(m, y)}});
            return kExitOk;
        }

        if (*meet_cmd) {
            const auto ef = enumerate(m, SolutionClass::envy_free, enumeration_options());
            const auto y = meet(m, parse_ids(m, left), parse_ids(m, right), ef);
            emit(out, {{"meet", ids_json(m, y)}});
            return kExitOk;
        }

        if (*tarski_cmd) {
            const auto t = tarski_fixed_point(m, parse_ids(m, from));
            if (trace) out << render_trace(m, t);
            else emit(out, to_json(m, t));
            return kExitOk;
        }

        if (*vacancy_cmd) {
            try {
                const auto r = vacancy_chain(m, RetirementEvent{split_ids(retire), parse_ids(m, stable)});
                if (trace) {
                    out << "retired: " << retire << "\n";
                    out << "restriction: " << braces(r.reduced, r.restriction) << "\n";
                    out << render_trace(r.reduced, r.trace);
                } else {
                    emit(out, {{"reduced_market", to_json(r.reduced.spec())},
                               {"restriction", ids_json(r.reduced, r.restriction)},
                               {"trace", to_json(r.reduced, r.trace)}});
                }
                return kExitOk;
            } catch (const RestrictionNotEnvyFree& e) {
                return fail(kExitRefused, "restriction-not-envy-free", e.what(),
                            {{"restriction", ids_json(e.reduced(), e.restriction())},
                             {"individually_rational", e.individually_rational()},
                             {"envy", envy_json(e.reduced(), e.envy())}});
            }
        }

        if (*verify_cmd) {
            const auto r = verify_lad_predictions(m, parse_ids(m, from), enumeration_options());
            emit(out, to_json(m, r));
            err << (r.lad_applicable ? "LAD holds for every doctor" : "LAD fails for some doctor: predictions are descriptive only")
                << "\n";
            return kExitOk;
        }
    } catch (const ValidationFailed& e) {
        emit(out, {{"error", {{"kind", "validation"}, {"message", e.what()}}}, {"report", e.report()}});
        err << "envyfree: " << e.what() << "\n";
        return kExitFatal;
    } catch (const ParseError& e) {
        return fail(kExitFatal, "parse", e.what());
    } catch (const StructuralError& e) {
        return fail(kExitFatal, "structural", e.what(), {{"problems", e.problems()}});
    } catch (const CapExceeded& e) {
        return fail(kExitRefused, "cap-exceeded", e.what(), {{"cap", e.cap()}});
    } catch (const PreconditionError& e) {
        return fail(kExitRefused, "precondition", e.what());
    } catch (const ModelViolation& e) {
        return fail(kExitRefused, "model-violation", e.what());
    }
    return kExitFatal;
}

} // namespace envyfree::cli

#endif
