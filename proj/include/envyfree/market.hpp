#ifndef ENVYFREE_MARKET_HPP
#define ENVYFREE_MARKET_HPP

#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace envyfree {

// ---------------------------------------------------------------------------
// Id-level description of a market, as read from a market file.
// ---------------------------------------------------------------------------

struct ContractSpec {
    std::string id;
    std::string doctor;
    std::string hospital;
};

struct HospitalSpec {
    std::string id;
    long long quota = 1;
    std::vector<std::string> ranking; // acceptable contracts, best first
};

struct ResponsiveDoctorSpec {
    long long quota = 1;
    std::vector<std::string> ranking;
};

struct TableRow {
    std::vector<std::string> given;
    std::vector<std::string> chosen;
};

struct TableDoctorSpec {
    std::vector<TableRow> rows;
};

struct DoctorSpec {
    std::string id;
    std::variant<ResponsiveDoctorSpec, TableDoctorSpec> choice;
};

struct MarketSpec {
    std::vector<ContractSpec> contracts;
    std::vector<HospitalSpec> hospitals;
    std::vector<DoctorSpec> doctors;
};

// ---------------------------------------------------------------------------
// Indexed, structurally valid market.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kUnranked = std::numeric_limits<std::size_t>::max();

// Largest |X_d| a table doctor may have; rows are indexed by a 32-bit local mask.
inline constexpr std::size_t kMaxTableContracts = 20;

struct Contract {
    std::string id;
    std::size_t doctor;
    std::size_t hospital;
};

/// Greedy quota doctor: scans `ranking` best-first and signs a contract when it
/// is offered, its hospital is not yet signed and fewer than `quota` contracts
/// are signed. This is the greedy rule of a truncated partition matroid, so the
/// induced choice function is substitutable, consistent and satisfies LAD.
struct ResponsiveRule {
    std::size_t quota;
    std::vector<std::size_t> ranking; // global contract indices
};

/// Extensional choice function. `chosen[mask]` is the local mask chosen from
/// the local offer set `mask`, where bit i stands for Doctor::contracts[i].
struct ChoiceTable {
    std::vector<std::uint32_t> chosen;
};

struct Doctor {
    std::string id;
    std::vector<std::size_t> contracts; // X_d, ascending global indices
    ContractSet contract_set;
    std::variant<ResponsiveRule, ChoiceTable> rule;

    bool is_table() const { return std::holds_alternative<ChoiceTable>(rule); }
};

struct Hospital {
    std::string id;
    std::size_t quota;
    std::vector<std::size_t> ranking; // global contract indices, best first
    std::vector<std::size_t> contracts; // X_h, ascending global indices
    ContractSet contract_set;
};

class Market {
public:
    Market() = default;

    /// Builds the indexed market; throws StructuralError listing every problem.
    static Market from_spec(MarketSpec spec) {
        Market m;
        m.build(std::move(spec));
        return m;
    }

    const MarketSpec& spec() const noexcept { return spec_; }
    const std::vector<Contract>& contracts() const noexcept { return contracts_; }
    const std::vector<Doctor>& doctors() const noexcept { return doctors_; }
    const std::vector<Hospital>& hospitals() const noexcept { return hospitals_; }
    const Contract& contract(std::size_t x) const { return contracts_.at(x); }
    const Doctor& doctor(std::size_t d) const { return doctors_.at(d); }
    const Hospital& hospital(std::size_t h) const { return hospitals_.at(h); }
    std::size_t contract_count() const noexcept { return contracts_.size(); }
    const ContractSet& all_contracts() const noexcept { return all_; }

    std::optional<std::size_t> find_contract(std::string_view id) const { return lookup(contract_ix_, id); }
    std::optional<std::size_t> find_doctor(std::string_view id) const { return lookup(doctor_ix_, id); }
    std::optional<std::size_t> find_hospital(std::string_view id) const { return lookup(hospital_ix_, id); }

    std::size_t contract_index(std::string_view id) const { return require(find_contract(id), "contract", id); }
    std::size_t doctor_index(std::string_view id) const { return require(find_doctor(id), "doctor", id); }
    std::size_t hospital_index(std::string_view id) const { return require(find_hospital(id), "hospital", id); }

    ContractSet set_of(const std::vector<std::string>& ids) const {
        ContractSet s;
        for (const auto& id : ids) s.insert(contract_index(id));
        return s;
    }

    /// Contract ids of `s`, sorted as strings (the wire form of an allocation).
    std::vector<std::string> ids_of(const ContractSet& s) const {
        std::vector<std::string> out;
        s.for_each([&](std::size_t x) { out.push_back(contracts_.at(x).id); });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Position of x in its hospital's ranking, or kUnranked if unacceptable.
    std::size_t hospital_rank(std::size_t x) const { return rank_.at(x); }
    bool acceptable_to_hospital(std::size_t x) const { return rank_.at(x) != kUnranked; }

    /// x ≻_h y for two contracts naming the same hospital. An unranked
    /// contract is below the empty set and hence below every ranked one.
    bool hospital_prefers(std::size_t x, std::size_t y) const { return rank_.at(x) < rank_.at(y); }

    /// Deterministic order on allocations: by size, then by sorted id list.
    bool canonical_less(const ContractSet& a, const ContractSet& b) const {
        const auto sa = a.size(), sb = b.size();
        if (sa != sb) return sa < sb;
        return ids_of(a) < ids_of(b);
    }

    void canonical_sort(std::vector<ContractSet>& sets) const {
        std::vector<std::pair<std::vector<std::string>, std::size_t>> keyed;
        keyed.reserve(sets.size());
        for (std::size_t i = 0; i < sets.size(); ++i) keyed.emplace_back(ids_of(sets[i]), i);
        std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
            if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
            return a.first < b.first;
        });
        std::vector<ContractSet> out;
        out.reserve(sets.size());
        for (const auto& k : keyed) out.push_back(std::move(sets[k.second]));
        sets = std::move(out);
    }

private:
    using Index = std::unordered_map<std::string, std::size_t>;

    static std::optional<std::size_t> lookup(const Index& ix, std::string_view id) {
        auto it = ix.find(std::string(id));
        if (it == ix.end()) return std::nullopt;
        return it->second;
    }

    static std::size_t require(std::optional<std::size_t> v, const char* kind, std::string_view id) {
        if (!v) throw PreconditionError(std::string("unknown ") + kind + " id '" + std::string(id) + "'");
        return *v;
    }

    void build(MarketSpec spec);

    MarketSpec spec_;
    std::vector<Contract> contracts_;
    std::vector<Doctor> doctors_;
    std::vector<Hospital> hospitals_;
    std::vector<std::size_t> rank_;
    ContractSet all_;
    Index contract_ix_, doctor_ix_, hospital_ix_;
};

namespace detail {

inline std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

// Local index of every contract within its doctor's X_d.
inline std::optional<std::uint32_t> local_mask(const std::vector<std::string>& ids,
                                               const std::unordered_map<std::string, std::size_t>& local,
                                               std::vector<std::string>& problems, const std::string& where) {
    std::uint32_t mask = 0;
    bool ok = true;
    for (const auto& id : ids) {
        auto it = local.find(id);
        if (it == local.end()) {
            problems.push_back(where + ": contract " + quoted(id) + " does not name this doctor");
            ok = false;
            continue;
        }
        const auto b = std::uint32_t{1} << it->second;
        if (mask & b) {
            problems.push_back(where + ": contract " + quoted(id) + " listed twice");
            ok = false;
        }
        mask |= b;
    }
    if (!ok) return std::nullopt;
    return mask;
}

} // namespace detail

inline void Market::build(MarketSpec spec) {
    std::vector<std::string> problems;
    spec_ = std::move(spec);

    for (std::size_t h = 0; h < spec_.hospitals.size(); ++h) {
        const auto& hs = spec_.hospitals[h];
        if (hs.id.empty()) problems.push_back("hospital #" + std::to_string(h) + " has an empty id");
        if (!hospital_ix_.emplace(hs.id, h).second) problems.push_back("duplicate hospital id " + detail::quoted(hs.id));
    }
    for (std::size_t d = 0; d < spec_.doctors.size(); ++d) {
        const auto& ds = spec_.doctors[d];
        if (ds.id.empty()) problems.push_back("doctor #" + std::to_string(d) + " has an empty id");
        if (!doctor_ix_.emplace(ds.id, d).second) problems.push_back("duplicate doctor id " + detail::quoted(ds.id));
    }

    hospitals_.resize(spec_.hospitals.size());
    doctors_.resize(spec_.doctors.size());
    for (std::size_t h = 0; h < hospitals_.size(); ++h) hospitals_[h].id = spec_.hospitals[h].id;
    for (std::size_t d = 0; d < doctors_.size(); ++d) doctors_[d].id = spec_.doctors[d].id;

    for (std::size_t x = 0; x < spec_.contracts.size(); ++x) {
        const auto& cs = spec_.contracts[x];
        if (cs.id.empty()) problems.push_back("contract #" + std::to_string(x) + " has an empty id");
        if (!contract_ix_.emplace(cs.id, x).second) problems.push_back("duplicate contract id " + detail::quoted(cs.id));
        auto d = lookup(doctor_ix_, cs.doctor);
        auto h = lookup(hospital_ix_, cs.hospital);
        if (!d) problems.push_back("contract " + detail::quoted(cs.id) + " names unknown doctor " + detail::quoted(cs.doctor));
        if (!h) problems.push_back("contract " + detail::quoted(cs.id) + " names unknown hospital " + detail::quoted(cs.hospital));
        contracts_.push_back(Contract{cs.id, d.value_or(0), h.value_or(0)});
        all_.insert(x);
        if (d && h) {
            doctors_[*d].contracts.push_back(x);
            doctors_[*d].contract_set.insert(x);
            hospitals_[*h].contracts.push_back(x);
            hospitals_[*h].contract_set.insert(x);
        }
    }
    if (!problems.empty()) throw StructuralError(std::move(problems));

    rank_.assign(contracts_.size(), kUnranked);
    for (std::size_t h = 0; h < hospitals_.size(); ++h) {
        const auto& hs = spec_.hospitals[h];
        const std::string where = "hospital " + detail::quoted(hs.id);
        if (hs.quota < 1) problems.push_back(where + ": quota must be at least 1, got " + std::to_string(hs.quota));
        hospitals_[h].quota = hs.quota < 1 ? 1 : static_cast<std::size_t>(hs.quota);
        for (std::size_t r = 0; r < hs.ranking.size(); ++r) {
            auto x = lookup(contract_ix_, hs.ranking[r]);
            if (!x) {
                problems.push_back(where + ": ranking lists unknown contract " + detail::quoted(hs.ranking[r]));
                continue;
            }
            if (contracts_[*x].hospital != h) {
                problems.push_back(where + ": ranking lists contract " + detail::quoted(hs.ranking[r]) +
                                   " of another hospital");
                continue;
            }
            if (rank_[*x] != kUnranked) {
                problems.push_back(where + ": contract " + detail::quoted(hs.ranking[r]) + " ranked twice");
                continue;
            }
            rank_[*x] = r;
            hospitals_[h].ranking.push_back(*x);
        }
    }

    for (std::size_t d = 0; d < doctors_.size(); ++d) {
        const auto& ds = spec_.doctors[d];
        auto& doc = doctors_[d];
        const std::string where = "doctor " + detail::quoted(ds.id);
        if (const auto* resp = std::get_if<ResponsiveDoctorSpec>(&ds.choice)) {
            ResponsiveRule rule;
            if (resp->quota < 1) problems.push_back(where + ": quota must be at least 1, got " + std::to_string(resp->quota));
            rule.quota = resp->quota < 1 ? 1 : static_cast<std::size_t>(resp->quota);
            ContractSet seen;
            for (const auto& id : resp->ranking) {
                auto x = lookup(contract_ix_, id);
                if (!x) {
                    problems.push_back(where + ": ranking lists unknown contract " + detail::quoted(id));
                } else if (contracts_[*x].doctor != d) {
                    problems.push_back(where + ": ranking lists contract " + detail::quoted(id) + " of another doctor");
                } else if (seen.contains(*x)) {
                    problems.push_back(where + ": contract " + detail::quoted(id) + " ranked twice");
                } else {
                    seen.insert(*x);
                    rule.ranking.push_back(*x);
                }
            }
            doc.rule = std::move(rule);
            continue;
        }

        const auto& table = std::get<TableDoctorSpec>(ds.choice);
        const auto n = doc.contracts.size();
        if (n > kMaxTableContracts) {
            problems.push_back(where + ": table doctors may name at most " + std::to_string(kMaxTableContracts) +
                               " contracts, this one names " + std::to_string(n));
            continue;
        }
        std::unordered_map<std::string, std::size_t> local;
        for (std::size_t i = 0; i < n; ++i) local.emplace(contracts_[doc.contracts[i]].id, i);

        const std::size_t rows = std::size_t{1} << n;
        ChoiceTable ct;
        ct.chosen.assign(rows, 0);
        std::vector<bool> filled(rows, false);
        filled[0] = true;
        bool ok = true;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::string rw = where + " table row " + std::to_string(r);
            auto given = detail::local_mask(row.given, local, problems, rw + " 'given'");
            auto chosen = detail::local_mask(row.chosen, local, problems, rw + " 'chosen'");
            if (!given || !chosen) {
                ok = false;
                continue;
            }
            if ((*chosen & ~*given) != 0) {
                problems.push_back(rw + ": chosen set is not a subset of the given set");
                ok = false;
                continue;
            }
            if (*given == 0) {
                if (*chosen != 0) {
                    problems.push_back(rw + ": the empty offer set must choose nothing");
                    ok = false;
                }
                continue;
            }
            if (filled[*given]) {
                problems.push_back(rw + ": duplicate row for this offer set");
                ok = false;
                continue;
            }
            filled[*given] = true;
            ct.chosen[*given] = *chosen;
        }
        if (ok) {
            std::size_t missing = 0;
            std::string first;
            for (std::size_t mask = 1; mask < rows; ++mask) {
                if (filled[mask]) continue;
                if (missing++ == 0) {
                    first = "{";
                    for (std::size_t i = 0; i < n; ++i)
                        if (mask & (std::size_t{1} << i)) first += (first.size() > 1 ? "," : "") + contracts_[doc.contracts[i]].id;
                    first += "}";
                }
            }
            if (missing > 0)
                problems.push_back(where + ": choice table is incomplete, " + std::to_string(missing) +
                                   " nonempty offer set(s) missing, first " + first);
        }
        doc.rule = std::move(ct);
    }

    if (!problems.empty()) throw StructuralError(std::move(problems));
}

// ---------------------------------------------------------------------------
// Restriction and allocation axioms
// ---------------------------------------------------------------------------

inline ContractSet restrict_to_doctor(const Market& m, const ContractSet& y, std::size_t d) {
    return y & m.doctor(d).contract_set;
}

inline ContractSet restrict_to_hospital(const Market& m, const ContractSet& y, std::size_t h) {
    return y & m.hospital(h).contract_set;
}

/// Y_a for an agent id; a doctor and a hospital sharing an id is ambiguous.
inline ContractSet restrict(const Market& m, const ContractSet& y, std::string_view agent) {
    auto d = m.find_doctor(agent);
    auto h = m.find_hospital(agent);
    if (d && h) throw PreconditionError("agent id '" + std::string(agent) + "' names both a doctor and a hospital");
    if (d) return restrict_to_doctor(m, y, *d);
    if (h) return restrict_to_hospital(m, y, *h);
    throw PreconditionError("unknown agent id '" + std::string(agent) + "'");
}

struct AllocationViolation {
    enum class Kind { duplicate_pair, quota_exceeded };
    Kind kind;
    std::size_t doctor = 0;   // duplicate_pair only
    std::size_t hospital = 0;
    ContractSet contracts;    // the offending contracts
    std::size_t quota = 0;    // quota_exceeded only
};

struct AllocationCheck {
    bool ok = true;
    std::vector<AllocationViolation> violations;
    explicit operator bool() const noexcept { return ok; }
};

inline AllocationCheck check_allocation(const Market& m, const ContractSet& y) {
    AllocationCheck out;
    if (!y.is_subset_of(m.all_contracts())) throw PreconditionError("set names contracts outside the market");
    std::map<std::pair<std::size_t, std::size_t>, ContractSet> pairs;
    y.for_each([&](std::size_t x) {
        const auto& c = m.contract(x);
        pairs[{c.doctor, c.hospital}].insert(x);
    });
    for (const auto& [key, set] : pairs) {
        if (set.size() > 1)
            out.violations.push_back({AllocationViolation::Kind::duplicate_pair, key.first, key.second, set, 0});
    }
    for (std::size_t h = 0; h < m.hospitals().size(); ++h) {
        auto yh = restrict_to_hospital(m, y, h);
        if (yh.size() > m.hospital(h).quota)
            out.violations.push_back({AllocationViolation::Kind::quota_exceeded, 0, h, yh, m.hospital(h).quota});
    }
    out.ok = out.violations.empty();
    return out;
}

inline bool is_allocation(const Market& m, const ContractSet& y) { return check_allocation(m, y).ok; }

/// Σ_h |Y_h| = Σ_d |Y_d| = |Y|.
inline bool contract_count_identity(const Market& m, const ContractSet& y) {
    std::size_t by_doctor = 0, by_hospital = 0;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) by_doctor += restrict_to_doctor(m, y, d).size();
    for (std::size_t h = 0; h < m.hospitals().size(); ++h) by_hospital += restrict_to_hospital(m, y, h).size();
    return by_doctor == y.size() && by_hospital == y.size();
}

} // namespace envyfree

#endif
