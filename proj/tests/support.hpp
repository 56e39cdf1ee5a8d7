#ifndef ENVYFREE_TESTS_SUPPORT_HPP
#define ENVYFREE_TESTS_SUPPORT_HPP

#include "envyfree/cli.hpp"
#include "envyfree/generate.hpp"
#include "envyfree/io.hpp"
#include "envyfree/market.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#ifndef ENVYFREE_DATA_DIR
#error "ENVYFREE_DATA_DIR must point at the golden market files"
#endif

namespace envyfree::test {

inline std::string data_path(const std::string& name) { return std::string(ENVYFREE_DATA_DIR) + "/" + name; }

inline MarketDocument load_document(const std::string& name) {
    return parse_market_document(cli::read_file(data_path(name)));
}

inline Market load(const std::string& name) { return Market::from_spec(load_document(name).spec); }

inline Market lad_counterexample() { return load("lad_counterexample.market.json"); }
inline Market twin_contracts() { return load("twin_contracts.market.json"); }

inline ContractSet ids(const Market& m, std::initializer_list<const char*> list) {
    ContractSet s;
    for (const auto* id : list) s.insert(m.contract_index(id));
    return s;
}

/// Small random responsive market used by the property suites: at most three
/// doctors, three hospitals and ten contracts.
inline GenParams small_params(std::uint64_t seed) {
    GenParams p;
    p.seed = seed;
    std::uint64_t s = seed * 0x9e3779b97f4a7c15ULL + 1;
    auto next = [&](std::uint64_t n) {
        s ^= s >> 33;
        s *= 0xff51afd7ed558ccdULL;
        s ^= s >> 29;
        return s % n;
    };
    p.doctors = 1 + next(3);
    p.hospitals = 1 + next(3);
    p.contracts = 2 + next(9);
    p.doctor_quota_max = 1 + next(3);
    p.hospital_quota_max = 1 + next(3);
    p.acceptability = next(4) == 0 ? 1.0 : 0.85;
    return p;
}

/// One table doctor "d" over the given contracts, each at its own quota-1
/// hospital that accepts it. Rows not listed choose the whole offer.
inline MarketSpec table_spec(const std::vector<std::string>& contracts, const std::vector<TableRow>& rows) {
    MarketSpec spec;
    TableDoctorSpec t;
    for (const auto& c : contracts) {
        spec.contracts.push_back({c, "d", "h_" + c});
        spec.hospitals.push_back({"h_" + c, 1, {c}});
    }
    const auto n = contracts.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::string> given;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) given.push_back(contracts[i]);
        bool listed = false;
        for (const auto& r : rows) {
            auto a = r.given, b = given;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a == b) listed = true;
        }
        if (!listed) t.rows.push_back({given, given});
    }
    for (const auto& r : rows) t.rows.push_back(r);
    spec.doctors.push_back({"d", t});
    return spec;
}

inline Market small_market(std::uint64_t seed) { return Market::from_spec(generate_responsive_market(small_params(seed))); }

} // namespace envyfree::test

#endif
