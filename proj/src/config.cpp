#include "hps/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hps/error.hpp"

namespace hps {

namespace {

// Reads known keys from one section and complains about the rest.
class Section {
public:
    Section(const ojson& j, std::string name) : j_(j), name_(std::move(name))
    {
        if (!j_.is_object())
            throw ContractViolation("config: section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& field)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return;
        try {
            field = it->template get<T>();
        } catch (const ojson::exception&) {
            throw ContractViolation("config: '" + name_ + "." + key + "' has the wrong type");
        }
    }

    template <typename T>
    void read_optional(const char* key, std::optional<T>& field)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return;
        if (it->is_null()) {
            field.reset();
            return;
        }
        T v{};
        read(key, v);
        field = v;
    }

    const ojson* child(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                throw ContractViolation("config: unknown key '" + name_ + "." + it.key() + "'");
    }

private:
    const ojson& j_;
    std::string name_;
    std::set<std::string> seen_;
};

} // namespace

void EngineConfig::validate() const
{
    search.validate();
    pool.validate();
    training.validate();
    if (steps_per_ms < 1)
        throw ContractViolation("config: checker.steps_per_ms must be >= 1");
}

ojson to_json(const Domain& d)
{
    return ojson{{"int_lo", d.int_lo}, {"int_hi", d.int_hi}, {"max_list_len", d.max_list_len},
        {"list_elem_lo", d.list_elem_lo}, {"list_elem_hi", d.list_elem_hi}, {"node_budget", d.node_budget}};
}

ojson to_json(const QcConfig& q)
{
    ojson j{{"trials", q.trials}, {"seed", q.seed}, {"gen_int_lo", q.gen_int_lo}, {"gen_int_hi", q.gen_int_hi},
        {"gen_max_list_len", q.gen_max_list_len}};
    j["gen_elem_lo"] = q.gen_elem_lo ? ojson(*q.gen_elem_lo) : ojson(nullptr);
    j["gen_elem_hi"] = q.gen_elem_hi ? ojson(*q.gen_elem_hi) : ojson(nullptr);
    return j;
}

ojson to_json(const ScoreConfig& s)
{
    return ojson{{"temperature", s.temperature}};
}

ojson to_json(const PoolConfig& p)
{
    return ojson{{"max_concurrent", p.max_concurrent}, {"check_timeout_ms", p.check_timeout_ms},
        {"queue_capacity", p.queue_capacity}};
}

ojson to_json(const TrainingConfig& t)
{
    return ojson{{"iterations", t.iterations}, {"group_size", t.group_size}, {"fallback_after", t.fallback_after},
        {"completion_budget", t.completion_budget}, {"replay_ratio", t.replay_ratio}, {"seed", t.seed}};
}

ojson to_json(const SearchConfig& s)
{
    return ojson{{"decompose_iters", s.decompose_iters}, {"max_open_lemmas", s.max_open_lemmas},
        {"complete_iters", s.complete_iters}, {"wall_budget_secs", s.wall_budget_secs},
        {"k_parallel", s.k_parallel}, {"target_strategy", std::string(strategy_name(s.target_strategy))},
        {"seed", s.seed}, {"check_timeout_ms", s.check_timeout_ms}, {"fail_fast", s.fail_fast},
        {"record_necessity", s.record_necessity}, {"qc", to_json(s.qc)}, {"score", to_json(s.score)},
        {"domain", to_json(s.domain)}};
}

ojson to_json(const EngineConfig& e)
{
    ojson search = to_json(e.search);
    const ojson qc = search["qc"];
    const ojson score = search["score"];
    const ojson domain = search["domain"];
    search.erase("qc");
    search.erase("score");
    search.erase("domain");
    return ojson{{"search", search}, {"qc", qc}, {"score", score}, {"domain", domain}, {"pool", to_json(e.pool)},
        {"training", to_json(e.training)}, {"checker", {{"steps_per_ms", e.steps_per_ms}}}};
}

void update_from_json(Domain& d, const ojson& j)
{
    Section s(j, "domain");
    s.read("int_lo", d.int_lo);
    s.read("int_hi", d.int_hi);
    s.read("max_list_len", d.max_list_len);
    s.read("list_elem_lo", d.list_elem_lo);
    s.read("list_elem_hi", d.list_elem_hi);
    s.read("node_budget", d.node_budget);
    s.finish();
}

void update_from_json(QcConfig& q, const ojson& j)
{
    Section s(j, "qc");
    s.read("trials", q.trials);
    s.read("seed", q.seed);
    s.read("gen_int_lo", q.gen_int_lo);
    s.read("gen_int_hi", q.gen_int_hi);
    s.read("gen_max_list_len", q.gen_max_list_len);
    s.read_optional("gen_elem_lo", q.gen_elem_lo);
    s.read_optional("gen_elem_hi", q.gen_elem_hi);
    s.finish();
}

void update_from_json(ScoreConfig& sc, const ojson& j)
{
    Section s(j, "score");
    s.read("temperature", sc.temperature);
    s.finish();
}

void update_from_json(PoolConfig& p, const ojson& j)
{
    Section s(j, "pool");
    s.read("max_concurrent", p.max_concurrent);
    s.read("check_timeout_ms", p.check_timeout_ms);
    s.read("queue_capacity", p.queue_capacity);
    s.finish();
}

void update_from_json(TrainingConfig& t, const ojson& j)
{
    Section s(j, "training");
    s.read("iterations", t.iterations);
    s.read("group_size", t.group_size);
    s.read("fallback_after", t.fallback_after);
    s.read("completion_budget", t.completion_budget);
    s.read("replay_ratio", t.replay_ratio);
    s.read("seed", t.seed);
    s.finish();
}

void update_from_json(SearchConfig& c, const ojson& j)
{
    Section s(j, "search");
    s.read("decompose_iters", c.decompose_iters);
    s.read("max_open_lemmas", c.max_open_lemmas);
    s.read("complete_iters", c.complete_iters);
    s.read("wall_budget_secs", c.wall_budget_secs);
    s.read("k_parallel", c.k_parallel);
    std::string strategy(strategy_name(c.target_strategy));
    s.read("target_strategy", strategy);
    const auto parsed = parse_strategy(strategy);
    if (!parsed)
        throw ContractViolation("config: target_strategy must be 'footprint' or 'score'");
    c.target_strategy = *parsed;
    s.read("seed", c.seed);
    s.read("check_timeout_ms", c.check_timeout_ms);
    s.read("fail_fast", c.fail_fast);
    s.read("record_necessity", c.record_necessity);
    if (const auto* q = s.child("qc"))
        update_from_json(c.qc, *q);
    if (const auto* sc = s.child("score"))
        update_from_json(c.score, *sc);
    if (const auto* d = s.child("domain"))
        update_from_json(c.domain, *d);
    s.finish();
}

void update_from_json(EngineConfig& e, const ojson& j)
{
    Section s(j, "<root>");
    if (const auto* v = s.child("search"))
        update_from_json(e.search, *v);
    if (const auto* v = s.child("qc"))
        update_from_json(e.search.qc, *v);
    if (const auto* v = s.child("score"))
        update_from_json(e.search.score, *v);
    if (const auto* v = s.child("domain"))
        update_from_json(e.search.domain, *v);
    if (const auto* v = s.child("pool"))
        update_from_json(e.pool, *v);
    if (const auto* v = s.child("training"))
        update_from_json(e.training, *v);
    if (const auto* v = s.child("checker")) {
        Section c(*v, "checker");
        c.read("steps_per_ms", e.steps_per_ms);
        c.finish();
    }
    s.finish();
}

EngineConfig load_engine_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw ContractViolation("config: cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    ojson j;
    try {
        j = ojson::parse(ss.str());
    } catch (const ojson::parse_error& e) {
        throw ContractViolation("config: " + path.string() + ": " + e.what());
    }
    EngineConfig e;
    update_from_json(e, j);
    e.validate();
    return e;
}

} // namespace hps
