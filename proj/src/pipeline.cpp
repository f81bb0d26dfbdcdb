#include "witforge/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "witforge/rng.hpp"

namespace witforge::pipeline {

namespace fs = std::filesystem;

namespace {

// Logical per-role call counters; these land in the manifest instead of
// wall-clock timings so that identical runs stay byte-identical.
class CountingBackend : public agents::AgentBackend {
public:
    explicit CountingBackend(agents::AgentBackend& inner) : inner_(inner) {}

    const char* name() const override { return inner_.name(); }
    std::size_t token_budget() const override { return inner_.token_budget(); }

    json counters() const {
        json out = json::object();
        static const agents::AgentRole roles[] = {
            agents::AgentRole::seed_generator, agents::AgentRole::verifier,
            agents::AgentRole::mutator, agents::AgentRole::scene_generator,
            agents::AgentRole::metric_generator};
        for (const auto role : roles) {
            out[agents::to_string(role)] = counts_[static_cast<std::size_t>(role)].load();
        }
        return out;
    }

protected:
    agents::AgentReply invoke_impl(const agents::AgentRequest& req) override {
        counts_[static_cast<std::size_t>(req.role)].fetch_add(1);
        return agents::invoke(inner_, req);
    }

private:
    agents::AgentBackend& inner_;
    std::array<std::atomic<std::uint64_t>, 5> counts_{};
};

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string padded(int id) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", id);
    return buf;
}

}  // namespace

std::string slugify_name(const std::string& name) {
    std::string slug;
    bool pending_sep = false;
    for (const char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending_sep && !slug.empty()) slug.push_back('_');
            pending_sep = false;
            slug.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            pending_sep = true;
        }
    }
    return slug.empty() ? "task" : slug;
}

BackendHandle make_backend(const PipelineConfig& config) {
    BackendHandle handle;
    switch (config.backend) {
        case BackendKind::mock: {
            agents::MockBackend::Options options = config.mock;
            options.workspace = config.workspace;
            handle.owned = std::make_unique<agents::MockBackend>(options);
            break;
        }
        case BackendKind::http: {
            agents::HttpOptions options = config.http;
            options.token_budget = config.token_budget;
            handle.owned = std::make_unique<agents::HttpBackend>(options);
            break;
        }
        case BackendKind::replay:
            handle.owned = std::make_unique<agents::ReplayBackend>(config.replay_path);
            break;
    }
    handle.use = handle.owned.get();
    if (!config.transcript_path.empty() && config.backend != BackendKind::replay) {
        handle.recorder =
            std::make_unique<agents::RecordingBackend>(*handle.owned, config.transcript_path);
        handle.use = handle.recorder.get();
    }
    return handle;
}

std::unique_ptr<verify::AssetResolver> make_resolver(const PipelineConfig& config) {
    std::map<std::string, std::string> index;
    if (!config.asset_index_path.empty()) {
        index = verify::LocalIndexResolver::load_index(config.asset_index_path);
    }
    return std::make_unique<verify::LocalIndexResolver>(std::move(index), config.asset_remote);
}

std::vector<SeedOutcome> run_seed_stage(const PipelineConfig& config,
                                        agents::AgentBackend& backend,
                                        verify::AssetResolver& resolver,
                                        std::uint64_t stage_seed) {
    agents::AgentRequest req = agents::build_prompt(
        agents::AgentRole::seed_generator, json{{"num_tasks", config.num_seeds}},
        config.prompt_config());
    req.seed = stage_seed;
    const agents::AgentReply reply = agents::invoke(backend, req);

    std::vector<SeedOutcome> outcomes;
    if (!reply.extracted_json || !reply.extracted_json->is_array()) {
        return outcomes;  // nothing usable; the manifest records zero seeds
    }

    std::set<std::string> used_slugs;
    for (const auto& doc : *reply.extracted_json) {
        SeedOutcome outcome;
        try {
            outcome.task = schema::parse_task_json(doc);
        } catch (const schema::SchemaError& e) {
            outcome.slug = "unparseable_" + std::to_string(outcomes.size());
            outcome.gate.verdict = verify::Verdict::rejected;
            outcome.gate.reasons = {"SCHEMA_ERROR"};
            outcome.gate.feedback = e.what();
            outcomes.push_back(std::move(outcome));
            continue;
        }

        std::string slug = slugify_name(outcome.task.task_name);
        for (int n = 2; used_slugs.count(slug); ++n) {
            slug = slugify_name(outcome.task.task_name) + "_" + std::to_string(n);
        }
        used_slugs.insert(slug);
        outcome.slug = slug;

        const auto validation = schema::validate_task(outcome.task, config.validation_options());
        if (!validation.error_free()) {
            outcome.gate.verdict = verify::Verdict::rejected;
            for (const auto& v : validation.errors()) {
                outcome.validation_errors.push_back(v.code);
                outcome.gate.reasons.push_back(v.code);
            }
            outcomes.push_back(std::move(outcome));
            continue;
        }

        agents::AgentRequest vreq = agents::build_prompt(
            agents::AgentRole::verifier, schema::to_json(outcome.task), config.prompt_config());
        const agents::AgentReply vreply = agents::invoke(backend, vreq);
        if (!vreply.extracted_json) {
            outcome.gate.verdict = verify::Verdict::rejected;
            outcome.gate.reasons = {mutation::kMalformedReplyCode};
            outcomes.push_back(std::move(outcome));
            continue;
        }
        try {
            const auto report = verify::VerificationReport::from_json(*vreply.extracted_json);
            verify::GateOptions gate_options;
            gate_options.strict_feasibility = config.strict_feasibility;
            outcome.gate = verify::gate_decision(outcome.task, report, gate_options);
            if (outcome.gate.accepted()) {
                outcome.task = verify::resolve_assets(outcome.task, report, resolver, outcome.gate);
            }
        } catch (const verify::ReportError& e) {
            outcome.gate.verdict = verify::Verdict::rejected;
            outcome.gate.reasons = {mutation::kMalformedReplyCode};
            outcome.gate.feedback = e.what();
        }
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

namespace {

SceneOutcome generate_scene(const PipelineConfig& config, agents::AgentBackend& backend,
                            const mutation::MutationNode& node) {
    SceneOutcome outcome;
    outcome.node_id = node.id;
    const int max_attempts = 1 + config.scene_retries;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        outcome.attempts = attempt;
        json payload = {{"task", schema::to_json(node.task)}, {"attempt", attempt}};
        agents::AgentRequest req = agents::build_prompt(agents::AgentRole::scene_generator,
                                                        payload, config.prompt_config());
        const agents::AgentReply reply = agents::invoke(backend, req);
        if (!reply.extracted_json) {
            outcome.violation_codes = {mutation::kMalformedReplyCode};
            continue;
        }
        scene::SceneConfig parsed;
        try {
            parsed = scene::SceneConfig::from_json(*reply.extracted_json);
        } catch (const scene::SceneError&) {
            outcome.violation_codes = {mutation::kMalformedReplyCode};
            continue;
        }
        parsed.workspace = config.workspace;  // placements validate against the run's table
        const auto validation = scene::validate_scene(parsed);
        outcome.scene = std::move(parsed);
        if (validation.ok()) {
            outcome.ok = true;
            outcome.violation_codes.clear();
            return outcome;
        }
        outcome.violation_codes.clear();
        for (const auto& v : validation.violations) outcome.violation_codes.push_back(v.code);
    }
    return outcome;  // scene_pending
}

FamilyResult process_family(const PipelineConfig& config, agents::AgentBackend& backend,
                            verify::AssetResolver& resolver, const SeedOutcome& seed,
                            std::uint64_t campaign_seed) {
    FamilyResult result;
    result.slug = seed.slug;

    verify::GateOptions gate_options;
    gate_options.strict_feasibility = config.strict_feasibility;
    mutation::CampaignContext ctx{backend, config.prompt_config(), &resolver, gate_options};
    result.campaign =
        mutation::run_campaign(seed.task, seed.gate.operational_difficulty.value_or(1),
                               config.campaign_config(), campaign_seed, ctx);

    for (const int node_id : result.campaign.pool) {
        result.scenes.push_back(generate_scene(config, backend, result.campaign.tree[node_id]));
    }

    // one metric per family, generated from the seed and bound to every member
    json payload = {{"task", schema::to_json(seed.task)}};
    agents::AgentRequest req = agents::build_prompt(agents::AgentRole::metric_generator, payload,
                                                    config.prompt_config());
    const agents::AgentReply reply = agents::invoke(backend, req);
    auto source = agents::extract_fenced_block(reply.raw_text, "metric");
    if (!source && reply.raw_text.rfind("metric", 0) == 0) source = reply.raw_text;
    if (!source) {
        result.metric_error = "reply carried no metric program";
        return result;
    }
    result.metric_source = *source;

    result.family.seed_id = padded(0);
    for (const int node_id : result.campaign.pool) {
        result.family.member_ids.push_back(padded(node_id));
    }
    result.family.metric_id = "metric.wit";

    try {
        const auto program = metriclang::parse_metric(result.metric_source);
        std::map<std::string, schema::TaskSpec> tasks;
        for (const int node_id : result.campaign.pool) {
            tasks[padded(node_id)] = result.campaign.tree[node_id].task;
        }
        metriclang::bind(program, result.family, tasks);
        result.metric_bound = true;
    } catch (const std::exception& e) {
        result.metric_error = e.what();
    }
    return result;
}

json histogram_of(const std::vector<int>& difficulties) {
    json buckets = json::array({0, 0, 0, 0, 0});  // scores 1..5
    for (const int d : difficulties) {
        if (d >= 1 && d <= 5) buckets[d - 1] = buckets[d - 1].get<int>() + 1;
    }
    return buckets;
}

json family_stats_json(const FamilyResult& result) {
    std::vector<int> difficulties;
    for (const auto& node : result.campaign.tree) {
        if (node.accepted && node.difficulty) difficulties.push_back(*node.difficulty);
    }
    int scenes_ok = 0;
    for (const auto& s : result.scenes) scenes_ok += s.ok ? 1 : 0;
    return {{"delta_statistics", mutation::delta_statistics({result.campaign}).to_json()},
            {"difficulty_histogram", histogram_of(difficulties)},
            {"accepted_mutations", result.campaign.accepted_count()},
            {"rejected_mutations",
             static_cast<int>(result.campaign.tree.size()) - 1 -
                 result.campaign.accepted_count()},
            {"skips", result.campaign.total_skips},
            {"stalled", result.campaign.stalled},
            {"scenes_ok", scenes_ok},
            {"scenes_pending", static_cast<int>(result.scenes.size()) - scenes_ok},
            {"metric_bound", result.metric_bound},
            {"family",
             {{"seed", result.family.seed_id},
              {"members", result.family.member_ids},
              {"metric", result.family.metric_id}}}};
}

void persist_family(const fs::path& dir, const FamilyResult& result) {
    write_file(dir / "seed.task.json", schema::canonical_json(result.campaign.seed().task));
    for (const int node_id : result.campaign.pool) {
        write_file(dir / "pool" / (padded(node_id) + ".task.json"),
                   schema::canonical_json(result.campaign.tree[node_id].task));
    }
    write_file(dir / "tree.json", mutation::tree_to_json(result.campaign).dump(2) + "\n");
    write_file(dir / "tree.dot", mutation::export_tree(result.campaign, mutation::TreeFormat::dot));

    for (const auto& s : result.scenes) {
        if (s.ok) {
            write_file(dir / "scenes" / (padded(s.node_id) + ".scene.json"),
                       s.scene.to_json().dump(2) + "\n");
        } else {
            const json pending = {{"node", s.node_id},
                                  {"attempts", s.attempts},
                                  {"violations", s.violation_codes},
                                  {"last_scene", s.scene.to_json()}};
            write_file(dir / "scenes" / (padded(s.node_id) + ".scene_pending.json"),
                       pending.dump(2) + "\n");
        }
    }

    if (!result.metric_source.empty()) write_file(dir / "metric.wit", result.metric_source);
    write_file(dir / "stats.json", family_stats_json(result).dump(2) + "\n");
}

}  // namespace

json RunManifest::to_json() const {
    json doc = {{"rng_seed", rng_seed},
                {"config", config_snapshot},
                {"counts", counts},
                {"stage_calls", stage_calls},
                {"seeds", seeds},
                {"families", families}};
    doc["transcript"] = transcript_path.empty() ? json(nullptr) : json(transcript_path);
    return doc;
}

RunManifest run_full(const PipelineConfig& config) {
    config.validate();
    const std::uint64_t root_seed = config.rng_seed ? *config.rng_seed : std::random_device{}();

    BackendHandle handle = make_backend(config);
    CountingBackend backend(*handle.use);
    auto resolver = make_resolver(config);

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);

    std::vector<SeedOutcome> seed_outcomes;
    try {
        seed_outcomes =
            run_seed_stage(config, backend, *resolver, splitmix64(root_seed ^ 0x5eed5eedULL));
    } catch (const std::exception& e) {
        // the failed stage still leaves a manifest behind before propagating
        RunManifest failed;
        failed.rng_seed = root_seed;
        failed.config_snapshot = config.snapshot();
        failed.stage_calls = backend.counters();
        failed.seeds = json::array();
        failed.counts = {{"seeds_proposed", 0}, {"seeds_accepted", 0},
                         {"seeds_rejected", 0},  {"mutations_accepted", 0},
                         {"mutations_rejected", 0}, {"skips", 0},
                         {"stalls", 0},          {"scenes_ok", 0},
                         {"scenes_pending", 0},  {"metrics_bound", 0},
                         {"tasks_total", 0}};
        json doc = failed.to_json();
        doc["error"] = e.what();
        write_file(out_dir / "manifest.json", doc.dump(2) + "\n");
        throw;
    }

    std::vector<const SeedOutcome*> accepted;
    for (const auto& outcome : seed_outcomes) {
        if (outcome.gate.accepted()) accepted.push_back(&outcome);
    }

    // campaigns are independent and deterministic per seed, so they run in a
    // worker pool; results land in slots ordered by seed index
    std::vector<FamilyResult> results(accepted.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= accepted.size()) break;
            try {
                results[i] = process_family(config, backend, *resolver, *accepted[i],
                                            splitmix64(root_seed + 1000003ULL * (i + 1)));
            } catch (const std::exception& e) {
                // fail-soft: a single family's failure never aborts siblings
                results[i].slug = accepted[i]->slug;
                results[i].error = e.what();
                if (results[i].campaign.tree.empty()) {
                    results[i].campaign = mutation::new_campaign(
                        accepted[i]->task, accepted[i]->gate.operational_difficulty.value_or(1),
                        config.campaign_config(), 0);
                }
            }
        }
    };
    const int worker_count =
        std::max(1, std::min<int>(config.workers, static_cast<int>(accepted.size())));
    std::vector<std::thread> threads;
    for (int i = 0; i < worker_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    // persistence, in deterministic seed order
    int mutations_accepted = 0, mutations_rejected = 0, skips = 0, stalls = 0;
    int scenes_ok = 0, scenes_pending = 0, metrics_bound = 0;
    std::vector<int> difficulties;
    json seeds_json = json::array();

    for (const auto& outcome : seed_outcomes) {
        json entry = {{"name", outcome.task.task_name.empty() ? outcome.slug
                                                              : outcome.task.task_name},
                      {"slug", outcome.slug},
                      {"gate", outcome.gate.to_json()}};
        seeds_json.push_back(std::move(entry));
    }

    for (std::size_t i = 0; i < results.size(); ++i) {
        const FamilyResult& family = results[i];
        persist_family(out_dir / family.slug, family);
        write_file(out_dir / family.slug / "gate.json",
                   accepted[i]->gate.to_json().dump(2) + "\n");

        mutations_accepted += family.campaign.accepted_count();
        mutations_rejected +=
            static_cast<int>(family.campaign.tree.size()) - 1 - family.campaign.accepted_count();
        skips += family.campaign.total_skips;
        stalls += family.campaign.stalled ? 1 : 0;
        for (const auto& s : family.scenes) (s.ok ? scenes_ok : scenes_pending) += 1;
        metrics_bound += family.metric_bound ? 1 : 0;
        for (const auto& node : family.campaign.tree) {
            if (node.accepted && node.difficulty) difficulties.push_back(*node.difficulty);
        }
    }

    std::vector<mutation::MutationCampaign> campaigns;
    for (const auto& family : results) campaigns.push_back(family.campaign);
    json families = json::array();
    for (const auto& family : results) {
        json entry = {{"seed", family.slug},
                      {"accepted_mutations", family.campaign.accepted_count()},
                      {"stalled", family.campaign.stalled},
                      {"metric_bound", family.metric_bound}};
        if (!family.error.empty()) entry["error"] = family.error;
        families.push_back(std::move(entry));
    }
    const json stats = {{"delta_statistics", mutation::delta_statistics(campaigns).to_json()},
                        {"difficulty_histogram", histogram_of(difficulties)},
                        {"families", families},
                        {"total_tasks", static_cast<int>(difficulties.size())}};
    write_file(out_dir / "stats.json", stats.dump(2) + "\n");

    RunManifest manifest;
    manifest.families = families;
    manifest.rng_seed = root_seed;
    manifest.config_snapshot = config.snapshot();
    manifest.stage_calls = backend.counters();
    manifest.seeds = seeds_json;
    manifest.transcript_path = config.transcript_path;
    manifest.counts = {{"seeds_proposed", static_cast<int>(seed_outcomes.size())},
                       {"seeds_accepted", static_cast<int>(accepted.size())},
                       {"seeds_rejected",
                        static_cast<int>(seed_outcomes.size() - accepted.size())},
                       {"mutations_accepted", mutations_accepted},
                       {"mutations_rejected", mutations_rejected},
                       {"skips", skips},
                       {"stalls", stalls},
                       {"scenes_ok", scenes_ok},
                       {"scenes_pending", scenes_pending},
                       {"metrics_bound", metrics_bound},
                       {"tasks_total",
                        static_cast<int>(accepted.size()) + mutations_accepted}};
    write_file(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

StatsReport recompute_stats(const std::string& run_dir) {
    StatsReport report;
    const fs::path dir(run_dir);
    const json manifest = json::parse(read_file(dir / "manifest.json"));

    auto note_mismatch = [&](const std::string& what) { report.mismatches.push_back(what); };

    std::vector<mutation::MutationCampaign> campaigns;
    std::vector<int> difficulties;
    int mutations_accepted = 0, mutations_rejected = 0, scenes_ok = 0, scenes_pending = 0;
    int families_seen = 0, metrics_bound = 0;

    auto family_errored = [&](const std::string& slug) {
        if (!manifest.contains("families")) return false;
        for (const auto& f : manifest["families"]) {
            if (f.value("seed", "") == slug) return f.contains("error");
        }
        return false;
    };

    for (const auto& seed : manifest.at("seeds")) {
        if (seed.at("gate").at("verdict") != "accepted") continue;
        ++families_seen;
        const std::string slug = seed.at("slug").get<std::string>();
        const fs::path family_dir = dir / slug;
        if (!fs::exists(family_dir / "tree.json")) {
            note_mismatch("missing tree.json for " + family_dir.string());
            continue;
        }
        mutation::MutationCampaign campaign;
        campaign.tree = mutation::tree_from_json(json::parse(read_file(family_dir / "tree.json")));
        for (const auto& node : campaign.tree) {
            if (node.accepted) campaign.pool.push_back(node.id);
        }
        campaigns.push_back(campaign);

        int accepted_here = 0;
        for (const auto& node : campaign.tree) {
            if (!node.parent && node.accepted) {
                if (node.difficulty) difficulties.push_back(*node.difficulty);
                continue;
            }
            if (node.accepted) {
                ++accepted_here;
                ++mutations_accepted;
                if (node.difficulty) difficulties.push_back(*node.difficulty);
            } else {
                ++mutations_rejected;
            }
        }

        // pool artifacts must match the accepted set exactly
        std::size_t pool_files = 0;
        if (fs::exists(family_dir / "pool")) {
            for (const auto& entry : fs::directory_iterator(family_dir / "pool")) {
                if (entry.path().extension() == ".json") ++pool_files;
            }
        }
        if (pool_files != static_cast<std::size_t>(accepted_here + 1)) {
            note_mismatch(family_dir.string() + ": pool has " + std::to_string(pool_files) +
                          " tasks, tree says " + std::to_string(accepted_here + 1));
        }

        if (fs::exists(family_dir / "scenes")) {
            for (const auto& entry : fs::directory_iterator(family_dir / "scenes")) {
                const std::string name = entry.path().filename().string();
                if (name.ends_with(".scene_pending.json")) {
                    ++scenes_pending;
                } else if (name.ends_with(".scene.json")) {
                    ++scenes_ok;
                }
            }
        }

        // one metric per family, re-bound offline against every member
        if (!fs::exists(family_dir / "metric.wit")) {
            if (!family_errored(slug)) {
                note_mismatch(family_dir.string() + ": metric.wit missing");
            }
        } else {
            try {
                const auto program =
                    metriclang::parse_metric(read_file(family_dir / "metric.wit"));
                schema::TaskFamily family;
                family.metric_id = "metric.wit";
                std::map<std::string, schema::TaskSpec> tasks;
                for (const auto& node : campaign.tree) {
                    if (!node.accepted) continue;
                    const std::string id = padded(node.id);
                    tasks[id] = node.task;
                    family.member_ids.push_back(id);
                    if (!node.parent) family.seed_id = id;
                }
                metriclang::bind(program, family, tasks);
                ++metrics_bound;
            } catch (const std::exception& e) {
                note_mismatch(family_dir.string() + ": metric does not bind: " + e.what());
            }
        }
    }

    const json& counts = manifest.at("counts");
    auto check_count = [&](const char* key, int got) {
        if (counts.at(key).get<int>() != got) {
            note_mismatch(std::string(key) + ": manifest says " +
                          std::to_string(counts.at(key).get<int>()) + ", artifacts say " +
                          std::to_string(got));
        }
    };
    check_count("mutations_accepted", mutations_accepted);
    check_count("mutations_rejected", mutations_rejected);
    check_count("scenes_ok", scenes_ok);
    check_count("scenes_pending", scenes_pending);
    check_count("seeds_accepted", families_seen);
    check_count("metrics_bound", metrics_bound);

    const auto stats = mutation::delta_statistics(campaigns);
    report.stats = {{"delta_statistics", stats.to_json()},
                    {"difficulty_histogram", histogram_of(difficulties)},
                    {"total_tasks", static_cast<int>(difficulties.size())}};
    report.table = stats.to_table();
    return report;
}

}  // namespace witforge::pipeline
