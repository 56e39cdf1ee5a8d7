#ifndef ENVYFREE_SOLUTION_HPP
#define ENVYFREE_SOLUTION_HPP

#include "envyfree/choice.hpp"
#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/market.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace envyfree {

/// Doctor `envious` (d') has justified envy towards `envied` (d) at Y:
/// held ∈ Y_d, desired ∈ X_{d'} \ Y, both at `hospital`,
/// desired ≻_h held and desired ∈ C_{d'}(Y ∪ {desired}).
struct EnvyWitness {
    std::size_t envious;
    std::size_t envied;
    std::size_t held;
    std::size_t desired;
    std::size_t hospital;

    friend bool operator==(const EnvyWitness&, const EnvyWitness&) = default;
};

struct ClassificationReport {
    ContractSet allocation;
    bool is_allocation = false;
    std::vector<AllocationViolation> violations;
    bool is_ir = false;
    bool is_envy_free = false;
    bool is_stable = false;
    ContractSet blocking;
    std::vector<EnvyWitness> envy;
};

namespace detail {

inline void require_allocation(const Market& m, const ContractSet& y, const char* op) {
    if (!is_allocation(m, y)) throw PreconditionError(std::string(op) + ": input is not an allocation");
}

inline bool is_ir_unchecked(const Market& m, const ContractSet& y) {
    for (std::size_t d = 0; d < m.doctors().size(); ++d)
        if (choose_doctor(m, d, y) != restrict_to_doctor(m, y, d)) return false;
    for (std::size_t h = 0; h < m.hospitals().size(); ++h)
        if (choose_hospital(m, h, y) != restrict_to_hospital(m, y, h)) return false;
    return true;
}

// Hospital half of the blocking test, by responsiveness: a vacancy and x ≻_h ∅,
// or a full hospital holding some contract worse than x.
inline bool hospital_accepts_addition(const Market& m, const ContractSet& y, std::size_t x) {
    if (!m.acceptable_to_hospital(x)) return false;
    const auto h = m.contract(x).hospital;
    const auto yh = restrict_to_hospital(m, y, h);
    if (yh.size() < m.hospital(h).quota) return true;
    bool worse_held = false;
    yh.for_each([&](std::size_t held) { worse_held = worse_held || m.hospital_prefers(x, held); });
    return worse_held;
}

inline ContractSet blocking_unchecked(const Market& m, const ContractSet& y) {
    ContractSet out;
    const auto outside = m.all_contracts() - y;
    outside.for_each([&](std::size_t x) {
        auto with_x = y;
        with_x.insert(x);
        if (!choose_doctor(m, m.contract(x).doctor, with_x).contains(x)) return;
        if (hospital_accepts_addition(m, y, x)) out.insert(x);
    });
    return out;
}

inline std::vector<EnvyWitness> envy_unchecked(const Market& m, const ContractSet& y) {
    std::vector<EnvyWitness> out;
    y.for_each([&](std::size_t held) {
        const auto h = m.contract(held).hospital;
        for (auto desired : m.hospital(h).ranking) {
            if (!m.hospital_prefers(desired, held)) break;
            if (y.contains(desired)) continue;
            const auto envious = m.contract(desired).doctor;
            auto with = y;
            with.insert(desired);
            if (choose_doctor(m, envious, with).contains(desired))
                out.push_back({envious, m.contract(held).doctor, held, desired, h});
        }
    });
    return out;
}

} // namespace detail

/// C_a(Y) = Y_a for every doctor and hospital.
inline bool is_individually_rational(const Market& m, const ContractSet& y) {
    detail::require_allocation(m, y, "is_individually_rational");
    return detail::is_ir_unchecked(m, y);
}

/// ℬ^Y: contracts outside Y that both parties would add.
inline ContractSet blocking_contracts(const Market& m, const ContractSet& y) {
    detail::require_allocation(m, y, "blocking_contracts");
    return detail::blocking_unchecked(m, y);
}

/// Every justified-envy instance at Y, self-envy included. Ordered by held
/// contract index, then by the hospital's ranking of the desired contract.
inline std::vector<EnvyWitness> justified_envy_witnesses(const Market& m, const ContractSet& y) {
    detail::require_allocation(m, y, "justified_envy_witnesses");
    return detail::envy_unchecked(m, y);
}

inline bool is_envy_free(const Market& m, const ContractSet& y) {
    detail::require_allocation(m, y, "is_envy_free");
    return detail::is_ir_unchecked(m, y) && detail::envy_unchecked(m, y).empty();
}

inline bool is_stable(const Market& m, const ContractSet& y) {
    detail::require_allocation(m, y, "is_stable");
    return detail::is_ir_unchecked(m, y) && detail::blocking_unchecked(m, y).empty();
}

/// Full classification. Accepts any subset of X; non-allocations come back
/// with is_allocation = false and their violations listed.
inline ClassificationReport classify(const Market& m, const ContractSet& y) {
    ClassificationReport r;
    r.allocation = y;
    auto check = check_allocation(m, y);
    r.is_allocation = check.ok;
    r.violations = std::move(check.violations);
    if (!r.is_allocation) return r;
    r.is_ir = detail::is_ir_unchecked(m, y);
    r.blocking = detail::blocking_unchecked(m, y);
    r.envy = detail::envy_unchecked(m, y);
    r.is_envy_free = r.is_ir && r.envy.empty();
    r.is_stable = r.is_ir && r.blocking.empty();
    return r;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

enum class SolutionClass { allocation, individually_rational, envy_free, stable };

inline const char* class_name(SolutionClass c) {
    switch (c) {
    case SolutionClass::allocation: return "allocation";
    case SolutionClass::individually_rational: return "ir";
    case SolutionClass::envy_free: return "envy-free";
    case SolutionClass::stable: return "stable";
    }
    return "?";
}

inline bool belongs(const Market& m, const ContractSet& y, SolutionClass c) {
    switch (c) {
    case SolutionClass::allocation: return true;
    case SolutionClass::individually_rational: return detail::is_ir_unchecked(m, y);
    case SolutionClass::envy_free: return detail::is_ir_unchecked(m, y) && detail::envy_unchecked(m, y).empty();
    case SolutionClass::stable: return detail::is_ir_unchecked(m, y) && detail::blocking_unchecked(m, y).empty();
    }
    return false;
}

inline constexpr std::size_t kDefaultEnumerationCap = 22;

struct EnumerationOptions {
    std::size_t cap = kDefaultEnumerationCap; // maximum |X|
};

/// All allocations of the class, canonically sorted. Depth-first over
/// doctor–hospital pairs, each contributing at most one of its contracts,
/// pruning on hospital quotas.
inline std::vector<ContractSet> enumerate(const Market& m, SolutionClass c, const EnumerationOptions& opt = {}) {
    if (m.contract_count() > opt.cap)
        throw CapExceeded("enumeration refused: market has " + std::to_string(m.contract_count()) +
                              " contracts, cap is " + std::to_string(opt.cap),
                          opt.cap);

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> pair_map;
    for (std::size_t x = 0; x < m.contract_count(); ++x)
        pair_map[{m.contract(x).doctor, m.contract(x).hospital}].push_back(x);
    std::vector<const std::vector<std::size_t>*> pairs;
    for (const auto& [key, xs] : pair_map) pairs.push_back(&xs);

    std::vector<std::size_t> load(m.hospitals().size(), 0);
    std::vector<ContractSet> out;
    ContractSet current;

    auto dfs = [&](auto&& self, std::size_t i) -> void {
        if (i == pairs.size()) {
            if (belongs(m, current, c)) out.push_back(current);
            return;
        }
        self(self, i + 1);
        for (auto x : *pairs[i]) {
            const auto h = m.contract(x).hospital;
            if (load[h] == m.hospital(h).quota) break;
            ++load[h];
            current.insert(x);
            self(self, i + 1);
            current.erase(x);
            --load[h];
        }
    };
    dfs(dfs, 0);
    m.canonical_sort(out);
    return out;
}

} // namespace envyfree

#endif
