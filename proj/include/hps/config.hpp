#pragma once

#include <cstdint>
#include <filesystem>

#include "hps/pool.hpp"
#include "hps/search.hpp"
#include "hps/trace.hpp"
#include "hps/training.hpp"

namespace hps {

/// Everything the `hps` tool can be configured with. The JSON file has one
/// object per section; keys inside a section mirror the struct fields and
/// anything omitted keeps its default:
///
///   { "search": {...}, "qc": {...}, "score": {...}, "domain": {...},
///     "pool": {...}, "training": {...}, "checker": {"steps_per_ms": N} }
///
/// Unknown sections or keys are rejected so typos do not pass silently.
struct EngineConfig {
    SearchConfig search;
    PoolConfig pool;
    TrainingConfig training;
    std::int64_t steps_per_ms = 10'000;

    void validate() const;
};

ojson to_json(const Domain& d);
ojson to_json(const QcConfig& q);
ojson to_json(const ScoreConfig& s);
ojson to_json(const PoolConfig& p);
ojson to_json(const TrainingConfig& t);
/// Search fields plus nested "qc", "score" and "domain" objects.
ojson to_json(const SearchConfig& s);
ojson to_json(const EngineConfig& e);

void update_from_json(Domain& d, const ojson& j);
void update_from_json(QcConfig& q, const ojson& j);
void update_from_json(ScoreConfig& s, const ojson& j);
void update_from_json(PoolConfig& p, const ojson& j);
void update_from_json(TrainingConfig& t, const ojson& j);
void update_from_json(SearchConfig& s, const ojson& j);
void update_from_json(EngineConfig& e, const ojson& j);

/// Throws ContractViolation on unknown keys, wrong types or invalid values.
EngineConfig load_engine_config(const std::filesystem::path& path);

} // namespace hps
