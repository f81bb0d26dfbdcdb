#include "witforge/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

namespace witforge::mutation {

StrategyClass class_of(MutationKind kind) {
    switch (kind) {
        case MutationKind::pivot: return StrategyClass::pivot;
        case MutationKind::trap: return StrategyClass::trap;
        default: return StrategyClass::add;
    }
}

const char* to_string(StrategyClass cls) {
    switch (cls) {
        case StrategyClass::pivot: return "pivot";
        case StrategyClass::trap: return "trap";
        case StrategyClass::add: return "add";
    }
    return "pivot";
}

const char* to_string(MutationKind kind) {
    switch (kind) {
        case MutationKind::pivot: return "pivot";
        case MutationKind::trap: return "trap";
        case MutationKind::add_related: return "add(related)";
        case MutationKind::add_unrelated: return "add(unrelated)";
    }
    return "pivot";
}

const char* wire_mutation_type(MutationKind kind) {
    switch (kind) {
        case MutationKind::pivot: return "pivot";
        case MutationKind::trap: return "trap";
        case MutationKind::add_related: return "related";
        case MutationKind::add_unrelated: return "unrelated";
    }
    return "pivot";
}

std::optional<MutationKind> kind_from_string(const std::string& s) {
    if (s == "pivot") return MutationKind::pivot;
    if (s == "trap") return MutationKind::trap;
    if (s == "add(related)" || s == "related") return MutationKind::add_related;
    if (s == "add(unrelated)" || s == "unrelated") return MutationKind::add_unrelated;
    return std::nullopt;
}

void StageDistribution::validate() const {
    if (pivot < 0 || trap < 0 || add < 0) {
        throw ConfigError("stage distribution has a negative weight");
    }
    const double sum = pivot + trap + add;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("stage distribution sums to " + std::to_string(sum) + ", expected 1");
    }
}

int MutationCampaign::accepted_count() const {
    int n = 0;
    for (const auto& node : tree) {
        if (node.accepted && node.parent) ++n;
    }
    return n;
}

MutationKind sample_strategy(MutationCampaign& c) {
    const StageDistribution& dist = c.stage == Stage::early ? c.config.early : c.config.late;
    dist.validate();
    const double roll = c.rng.next_double();
    StrategyClass cls;
    if (roll < dist.pivot) {
        cls = StrategyClass::pivot;
    } else if (roll < dist.pivot + dist.trap) {
        cls = StrategyClass::trap;
    } else {
        cls = StrategyClass::add;
    }
    if (cls == StrategyClass::pivot) return MutationKind::pivot;
    if (cls == StrategyClass::trap) return MutationKind::trap;
    return c.rng.next_double() < 0.5 ? MutationKind::add_related : MutationKind::add_unrelated;
}

bool should_switch_stage(const MutationCampaign& c) {
    if (c.stage == Stage::late) return true;  // latched
    int accepted_pivots = 0;
    for (const auto& node : c.tree) {
        if (node.accepted && node.strategy &&
            class_of(*node.strategy) == StrategyClass::pivot) {
            ++accepted_pivots;
        }
    }
    return accepted_pivots >= c.config.pivot_quota ||
           static_cast<int>(c.pool.size()) >= c.config.pool_quota;
}

bool mutation_contract_holds(const schema::TaskSpec& parent, const schema::TaskSpec& candidate,
                             MutationKind kind) {
    std::set<std::string> child_names;
    for (const auto& o : candidate.object_list) child_names.insert(o.object_name);

    if (class_of(kind) == StrategyClass::pivot) {
        std::set<std::string> parent_names;
        for (const auto& o : parent.object_list) parent_names.insert(o.object_name);
        for (const auto& name : schema::extract_quoted_names(parent.task_success_criteria)) {
            if (parent_names.count(name) && !child_names.count(name)) return false;
        }
        return true;
    }
    // trap and add are additive only
    for (const auto& o : parent.object_list) {
        if (!child_names.count(o.object_name)) return false;
    }
    return true;
}

namespace {

struct CandidateOutcome {
    MutationNode node;
    std::optional<verify::GateDecision> gate;
};

// Mutate -> verify refinement loop for a single sampled (task, strategy).
MutationNode refine_candidate(MutationCampaign& c, const CampaignContext& ctx, int parent_id,
                              MutationKind kind) {
    const schema::TaskSpec& parent = c.tree[parent_id].task;
    const json parent_json = schema::to_json(parent);

    MutationNode node;
    node.parent = parent_id;
    node.strategy = kind;

    json previous_raw;
    std::string feedback;
    std::optional<schema::TaskSpec> candidate;

    auto mutate_once = [&]() {
        json payload = {{"task", parent_json},
                        {"mutation_type", wire_mutation_type(kind)}};
        if (!previous_raw.is_null()) {
            payload["previous_attempt"] = previous_raw;
            payload["feedback"] = feedback;
        }
        agents::AgentRequest req =
            agents::build_prompt(agents::AgentRole::mutator, payload, ctx.prompt_config);
        req.seed = c.rng.next_u64();
        const agents::AgentReply reply = agents::invoke(ctx.backend, req);
        candidate.reset();
        if (reply.extracted_json) {
            try {
                candidate = schema::parse_task_json(*reply.extracted_json);
                previous_raw = *reply.extracted_json;
            } catch (const schema::SchemaError& e) {
                feedback = std::string("the candidate task JSON is malformed: ") + e.what();
            }
        } else {
            feedback = "the reply did not contain a parseable task JSON";
        }
    };

    mutate_once();
    const int rounds = c.config.max_refinement_rounds;
    for (int round = 1; round <= rounds; ++round) {
        if (!candidate) {
            node.reject_reasons = {kMalformedReplyCode};
            if (round < rounds) mutate_once();
            continue;
        }

        agents::AgentRequest vreq = agents::build_prompt(
            agents::AgentRole::verifier, schema::to_json(*candidate), ctx.prompt_config);
        const agents::AgentReply vreply = agents::invoke(ctx.backend, vreq);
        ++node.rounds_used;

        std::optional<verify::VerificationReport> report;
        if (vreply.extracted_json) {
            try {
                report = verify::VerificationReport::from_json(*vreply.extracted_json);
            } catch (const verify::ReportError& e) {
                feedback = std::string("verifier reply malformed: ") + e.what();
            }
        } else {
            feedback = "verifier reply contained no JSON";
        }

        if (report) {
            verify::GateDecision gate =
                verify::gate_decision(*candidate, *report, ctx.gate_options);
            schema::TaskSpec resolved = *candidate;
            if (gate.accepted() && ctx.resolver) {
                resolved = verify::resolve_assets(*candidate, *report, *ctx.resolver, gate);
            }
            if (gate.accepted()) {
                node.task = resolved;
                node.report = report->to_json();
                node.accepted = true;

                // never trust generator output: re-validate and enforce the
                // additive-only contract locally, downgrading on violation
                const auto validation = schema::validate_task(node.task);
                if (!validation.error_free()) {
                    node.accepted = false;
                    for (const auto& v : validation.errors()) {
                        node.reject_reasons.push_back(v.code);
                    }
                } else if (!mutation_contract_holds(parent, node.task, kind)) {
                    node.accepted = false;
                    node.reject_reasons = {kMutationContractCode};
                } else {
                    node.difficulty = gate.operational_difficulty;
                    node.delta = *node.difficulty - c.tree[parent_id].difficulty.value_or(1);
                    node.reject_reasons.clear();
                }
                return node;
            }
            feedback = gate.feedback;
            node.reject_reasons = gate.reasons;
            node.task = *candidate;
            node.report = report->to_json();
        } else {
            node.reject_reasons = {kMalformedReplyCode};
        }

        if (round < rounds) mutate_once();
    }

    node.accepted = false;
    if (candidate && node.task.object_list.empty()) node.task = *candidate;
    return node;
}

}  // namespace

void step(MutationCampaign& c, const CampaignContext& ctx) {
    if (c.remaining_steps <= 0 || c.stalled) return;

    const int parent_id = c.pool[c.rng.next_below(c.pool.size())];
    const MutationKind kind = sample_strategy(c);
    const auto key = std::make_pair(parent_id, class_of(kind));

    if (c.apply_count[key] >= 2) {
        ++c.total_skips;
        ++c.consecutive_skips;
        if (c.consecutive_skips >= c.config.stall_skip_limit) {
            c.stalled = true;
            throw CampaignStall("campaign stalled after " +
                                std::to_string(c.consecutive_skips) + " consecutive skips");
        }
        return;  // skips are free: remaining_steps is untouched
    }
    c.consecutive_skips = 0;

    MutationNode node = refine_candidate(c, ctx, parent_id, kind);
    node.id = static_cast<int>(c.tree.size());
    if (node.accepted) {
        c.pool.push_back(node.id);
        ++c.apply_count[key];
    }
    c.tree.push_back(std::move(node));

    --c.remaining_steps;
    if (c.stage == Stage::early && should_switch_stage(c)) c.stage = Stage::late;
}

MutationCampaign new_campaign(const schema::TaskSpec& seed_task, int seed_difficulty,
                              const CampaignConfig& config, std::uint64_t rng_seed) {
    config.early.validate();
    config.late.validate();
    if (config.max_refinement_rounds < 1) throw ConfigError("R must be >= 1");
    if (config.steps < 0) throw ConfigError("steps must be >= 0");

    MutationCampaign c;
    c.config = config;
    c.rng_seed = rng_seed;
    c.rng = Rng(rng_seed);
    c.remaining_steps = config.steps;

    MutationNode seed;
    seed.id = 0;
    seed.task = seed_task;
    seed.accepted = true;
    seed.difficulty = seed_difficulty;
    c.tree.push_back(std::move(seed));
    c.pool = {0};
    return c;
}

MutationCampaign run_campaign(const schema::TaskSpec& seed_task, int seed_difficulty,
                              const CampaignConfig& config, std::uint64_t rng_seed,
                              const CampaignContext& ctx) {
    MutationCampaign c = new_campaign(seed_task, seed_difficulty, config, rng_seed);
    while (c.remaining_steps > 0) {
        try {
            step(c, ctx);
        } catch (const CampaignStall&) {
            break;  // recorded on the campaign; the caller reports it
        }
    }
    return c;
}

Moments moments_of(const std::vector<double>& values) {
    Moments m;
    m.count = static_cast<int>(values.size());
    if (values.empty()) return m;
    double sum = 0.0;
    double hi = values.front(), lo = values.front();
    for (const double v : values) {
        sum += v;
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (const double v : values) sq += (v - mean) * (v - mean);
    m.mean = mean;
    m.max = hi;
    m.min = lo;
    m.std_dev = std::sqrt(sq / static_cast<double>(values.size()));  // population std
    return m;
}

DeltaStatistics delta_statistics(const std::vector<MutationCampaign>& campaigns) {
    std::vector<double> pivot, trap, add;
    for (const auto& c : campaigns) {
        for (const auto& node : c.tree) {
            if (!node.accepted || !node.strategy || !node.delta) continue;
            switch (class_of(*node.strategy)) {
                case StrategyClass::pivot: pivot.push_back(*node.delta); break;
                case StrategyClass::trap: trap.push_back(*node.delta); break;
                case StrategyClass::add: add.push_back(*node.delta); break;
            }
        }
    }
    DeltaStatistics stats;
    stats.pivot = moments_of(pivot);
    stats.trap = moments_of(trap);
    stats.add = moments_of(add);
    return stats;
}

namespace {

std::string cell(const std::optional<double>& v, bool integral) {
    if (!v) return "-";
    char buf[32];
    if (integral) {
        std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(*v));
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f", *v);
    }
    return buf;
}

json moments_json(const Moments& m) {
    json j = {{"count", m.count}};
    j["mean"] = m.mean ? json(*m.mean) : json(nullptr);
    j["max"] = m.max ? json(*m.max) : json(nullptr);
    j["min"] = m.min ? json(*m.min) : json(nullptr);
    j["std"] = m.std_dev ? json(*m.std_dev) : json(nullptr);
    return j;
}

}  // namespace

std::string DeltaStatistics::to_table() const {
    std::ostringstream out;
    const Moments* cols[] = {&pivot, &trap, &add};
    out << "        Pivot     Trap      Add\n";
    out << "count";
    for (const auto* m : cols) {
        out << "  " << std::setw(7) << m->count;
    }
    out << "\n";
    const struct {
        const char* label;
        std::optional<double> Moments::*field;
        bool integral;
    } rows[] = {{"mean ", &Moments::mean, false},
                {"max  ", &Moments::max, true},
                {"min  ", &Moments::min, true},
                {"std  ", &Moments::std_dev, false}};
    for (const auto& row : rows) {
        out << row.label;
        for (const auto* m : cols) {
            out << "  " << std::setw(7) << cell(m->*(row.field), row.integral);
        }
        out << "\n";
    }
    return out.str();
}

json DeltaStatistics::to_json() const {
    return {{"pivot", moments_json(pivot)},
            {"trap", moments_json(trap)},
            {"add", moments_json(add)}};
}

namespace {

json node_to_json(const MutationNode& node) {
    json j = json::object();
    j["id"] = node.id;
    j["parent"] = node.parent ? json(*node.parent) : json(nullptr);
    j["strategy"] = node.strategy ? json(to_string(*node.strategy)) : json(nullptr);
    j["verdict"] = node.accepted ? "accepted" : "rejected";
    j["rounds_used"] = node.rounds_used;
    j["difficulty"] = node.difficulty ? json(*node.difficulty) : json(nullptr);
    j["delta"] = node.delta ? json(*node.delta) : json(nullptr);
    j["reject_reasons"] = node.reject_reasons;
    j["report"] = node.report ? *node.report : json(nullptr);
    j["task"] = schema::to_json(node.task);
    return j;
}

MutationNode node_from_json(const json& j) {
    MutationNode node;
    node.id = j.at("id").get<int>();
    if (!j.at("parent").is_null()) node.parent = j["parent"].get<int>();
    if (!j.at("strategy").is_null()) {
        node.strategy = kind_from_string(j["strategy"].get<std::string>());
    }
    node.accepted = j.at("verdict").get<std::string>() == "accepted";
    node.rounds_used = j.value("rounds_used", 0);
    if (!j.at("difficulty").is_null()) node.difficulty = j["difficulty"].get<int>();
    if (!j.at("delta").is_null()) node.delta = j["delta"].get<int>();
    if (j.contains("reject_reasons")) {
        node.reject_reasons = j["reject_reasons"].get<std::vector<std::string>>();
    }
    if (j.contains("report") && !j["report"].is_null()) node.report = j["report"];
    node.task = schema::parse_task_json(j.at("task"));
    return node;
}

}  // namespace

json tree_to_json(const MutationCampaign& c) {
    json nodes = json::array();
    for (const auto& node : c.tree) nodes.push_back(node_to_json(node));
    return {{"rng_seed", c.rng_seed},
            {"stage", c.stage == Stage::early ? "early" : "late"},
            {"total_skips", c.total_skips},
            {"stalled", c.stalled},
            {"nodes", std::move(nodes)}};
}

std::vector<MutationNode> tree_from_json(const json& doc) {
    std::vector<MutationNode> tree;
    for (const auto& j : doc.at("nodes")) tree.push_back(node_from_json(j));
    return tree;
}

std::string export_tree(const MutationCampaign& c, TreeFormat format) {
    if (format == TreeFormat::json_format) {
        return tree_to_json(c).dump(2) + "\n";
    }
    // accepted nodes render green, rejected red
    std::ostringstream out;
    out << "digraph mutation_tree {\n";
    out << "  rankdir=TB;\n";
    out << "  node [style=filled, fontname=\"Helvetica\"];\n";
    for (const auto& node : c.tree) {
        out << "  n" << node.id << " [label=\"" << node.id << "(";
        if (node.difficulty) {
            out << *node.difficulty;
        } else {
            out << "-";
        }
        out << ")\", fillcolor=\"" << (node.accepted ? "#4caf50" : "#ef5350") << "\"];\n";
    }
    for (const auto& node : c.tree) {
        if (!node.parent) continue;
        out << "  n" << *node.parent << " -> n" << node.id << " [label=\""
            << (node.strategy ? to_string(*node.strategy) : "?") << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace witforge::mutation
