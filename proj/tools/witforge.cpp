#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "witforge/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using witforge::pipeline::PipelineConfig;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw witforge::pipeline::ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct GlobalArgs {
    std::string config_path;
    std::string backend;
    std::string output_dir;
    std::optional<std::uint64_t> rng;
};

PipelineConfig load_config(const GlobalArgs& args) {
    PipelineConfig config = args.config_path.empty()
                                ? PipelineConfig{}
                                : PipelineConfig::from_toml_file(args.config_path);
    if (!args.backend.empty()) {
        const auto kind = witforge::pipeline::backend_from_string(args.backend);
        if (!kind) throw witforge::pipeline::ConfigError("unknown backend: " + args.backend);
        config.backend = *kind;
    }
    if (args.rng) config.rng_seed = *args.rng;
    if (!args.output_dir.empty()) config.output_dir = args.output_dir;
    config.validate();
    return config;
}

json validation_json(const witforge::schema::ValidationOutcome& outcome) {
    json violations = json::array();
    for (const auto& v : outcome.violations) {
        violations.push_back(
            {{"code", v.code},
             {"severity", v.severity == witforge::schema::Severity::error ? "error" : "warning"},
             {"path", v.path},
             {"message", v.message}});
    }
    return violations;
}

int cmd_seed(const PipelineConfig& config) {
    auto handle = witforge::pipeline::make_backend(config);
    auto resolver = witforge::pipeline::make_resolver(config);
    const std::uint64_t stage_seed =
        witforge::splitmix64(config.rng_seed.value_or(0) ^ 0x5eed5eedULL);
    const auto outcomes =
        witforge::pipeline::run_seed_stage(config, *handle.use, *resolver, stage_seed);

    fs::create_directories(config.output_dir);
    json summary = json::array();
    for (const auto& outcome : outcomes) {
        if (outcome.gate.accepted()) {
            std::ofstream out(fs::path(config.output_dir) / (outcome.slug + ".task.json"));
            out << witforge::schema::canonical_json(outcome.task);
        }
        summary.push_back({{"slug", outcome.slug}, {"gate", outcome.gate.to_json()}});
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_verify(const PipelineConfig& config, const std::string& task_path, bool strict) {
    const auto task = witforge::schema::parse_task(read_file(task_path));
    // legacy documents may omit task_success_criteria; --strict applies the
    // pipeline-level requirement
    auto options = config.validation_options();
    options.require_success_criteria = strict;
    const auto validation = witforge::schema::validate_task(task, options);
    const auto completeness = witforge::verify::completeness_check(task);

    json out = {{"violations", validation_json(validation)},
                {"completeness",
                 {{"complete", completeness.complete},
                  {"missing_objects", completeness.missing_objects}}}};
    std::cout << out.dump(2) << "\n";
    return validation.error_free() && completeness.complete ? kExitOk : kExitValidation;
}

int cmd_mutate(const PipelineConfig& config, const std::string& seed_task_path, int difficulty) {
    auto handle = witforge::pipeline::make_backend(config);
    auto resolver = witforge::pipeline::make_resolver(config);
    const auto seed_task = witforge::schema::parse_task(read_file(seed_task_path));

    witforge::verify::GateOptions gate_options;
    gate_options.strict_feasibility = config.strict_feasibility;
    witforge::mutation::CampaignContext ctx{*handle.use, config.prompt_config(), resolver.get(),
                                            gate_options};
    const auto campaign = witforge::mutation::run_campaign(
        seed_task, difficulty, config.campaign_config(), config.rng_seed.value_or(0), ctx);

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir / "pool");
    for (const int node_id : campaign.pool) {
        char name[32];
        std::snprintf(name, sizeof(name), "%03d.task.json", node_id);
        std::ofstream out(out_dir / "pool" / name);
        out << witforge::schema::canonical_json(campaign.tree[node_id].task);
    }
    std::ofstream(out_dir / "tree.json")
        << witforge::mutation::tree_to_json(campaign).dump(2) << "\n";
    std::ofstream(out_dir / "tree.dot")
        << witforge::mutation::export_tree(campaign, witforge::mutation::TreeFormat::dot);
    const json manifest = {
        {"config", config.snapshot()},
        {"rng_seed", campaign.rng_seed},
        {"accepted", campaign.accepted_count()},
        {"rejected",
         static_cast<int>(campaign.tree.size()) - 1 - campaign.accepted_count()},
        {"skips", campaign.total_skips},
        {"stalled", campaign.stalled}};
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
    std::cout << manifest.dump(2) << "\n";
    return kExitOk;
}

int cmd_scene_validate(const PipelineConfig& config, const std::string& scene_path,
                       bool use_config_workspace) {
    auto scene = witforge::scene::SceneConfig::parse(read_file(scene_path));
    if (use_config_workspace) scene.workspace = config.workspace;
    const auto outcome = witforge::scene::validate_scene(scene);
    std::cout << json{{"violations", validation_json(outcome)}}.dump(2) << "\n";
    return outcome.ok() ? kExitOk : kExitValidation;
}

int cmd_metric_parse(const std::string& metric_path) {
    try {
        witforge::metriclang::parse_metric(read_file(metric_path));
    } catch (const std::exception& e) {
        std::cout << json{{"ok", false}, {"error", e.what()}}.dump(2) << "\n";
        return kExitValidation;
    }
    std::cout << json{{"ok", true}}.dump(2) << "\n";
    return kExitOk;
}

int cmd_metric_eval(const PipelineConfig& config, const std::string& metric_path,
                    const std::string& snapshot_path) {
    const auto program = witforge::metriclang::parse_metric(read_file(metric_path));
    const auto snapshot = witforge::ObjsSnapshot::parse(read_file(snapshot_path));
    const auto result = witforge::metriclang::evaluate(program, snapshot, config.workspace);

    json milestones = json::object();
    for (const auto& [name, hit] : result.milestone_flags) milestones[name] = hit;
    json out = {{"success", result.success},
                {"progress", result.progress},
                {"milestones", std::move(milestones)},
                {"trace", result.trace}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_run(const PipelineConfig& config) {
    const auto manifest = witforge::pipeline::run_full(config);
    std::cout << manifest.counts.dump(2) << "\n";
    std::cerr << "run written to " << config.output_dir << "\n";
    return kExitOk;
}

int cmd_stats(const std::string& run_dir) {
    const auto report = witforge::pipeline::recompute_stats(run_dir);
    std::cout << report.table;
    std::cout << report.stats.dump(2) << "\n";
    if (!report.mismatches.empty()) {
        for (const auto& m : report.mismatches) std::cerr << "mismatch: " << m << "\n";
        return kExitValidation;
    }
    return kExitOk;
}

int cmd_tree_export(const std::string& tree_path, const std::string& format,
                    const std::string& out_path) {
    witforge::mutation::MutationCampaign campaign;
    campaign.tree = witforge::mutation::tree_from_json(json::parse(read_file(tree_path)));
    for (const auto& node : campaign.tree) {
        if (node.accepted) campaign.pool.push_back(node.id);
    }
    const auto fmt = format == "json" ? witforge::mutation::TreeFormat::json_format
                                      : witforge::mutation::TreeFormat::dot;
    const std::string text = witforge::mutation::export_tree(campaign, fmt);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream(out_path) << text;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"witforge: mutate-and-verify benchmark task generation"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    GlobalArgs global;
    std::uint64_t rng_value = 0;
    bool rng_given = false;
    app.add_option("--config", global.config_path, "Pipeline config TOML");
    app.add_option("--backend", global.backend, "Agent backend: mock|http|replay");
    app.add_option("--out", global.output_dir, "Output directory");
    app.add_option("--rng", rng_value, "Root RNG seed")->each([&](const std::string&) {
        rng_given = true;
    });

    auto* seed_cmd = app.add_subcommand("seed", "Generate and gate seed tasks");

    std::string verify_path;
    bool verify_strict = false;
    auto* verify_cmd = app.add_subcommand("verify", "Validate a task document locally");
    verify_cmd->add_option("task", verify_path, "Task JSON file")->required();
    verify_cmd->add_flag("--strict", verify_strict, "Require task_success_criteria");

    std::string mutate_seed_path;
    int mutate_difficulty = 2;
    int mutate_steps = -1;
    auto* mutate_cmd = app.add_subcommand("mutate", "Run one mutation campaign");
    mutate_cmd->add_option("--seed-task", mutate_seed_path, "Seed task JSON")->required();
    mutate_cmd->add_option("--steps", mutate_steps, "Mutation attempts (N)");
    mutate_cmd->add_option("--difficulty", mutate_difficulty, "Seed difficulty 1..5");

    auto* scene_cmd = app.add_subcommand("scene", "Scene utilities");
    std::string scene_path;
    bool scene_config_ws = false;
    auto* scene_validate = scene_cmd->add_subcommand("validate", "Validate a scene JSON");
    scene_validate->add_option("scene", scene_path, "Scene JSON file")->required();
    scene_validate->add_flag("--config-workspace", scene_config_ws,
                             "Validate against the configured workspace instead of the file's");

    auto* metric_cmd = app.add_subcommand("metric", "Metric utilities");
    std::string metric_path, snapshot_path;
    auto* metric_parse = metric_cmd->add_subcommand("parse", "Parse and type-check a metric");
    metric_parse->add_option("metric", metric_path, "Metric source file")->required();
    auto* metric_eval = metric_cmd->add_subcommand("eval", "Evaluate a metric on a snapshot");
    metric_eval->add_option("--metric", metric_path, "Metric source file")->required();
    metric_eval->add_option("--snapshot", snapshot_path, "Snapshot JSON file")->required();

    auto* run_cmd = app.add_subcommand("run", "Full pipeline: seeds, campaigns, scenes, metrics");

    std::string stats_dir;
    auto* stats_cmd = app.add_subcommand("stats", "Recompute statistics for a run directory");
    stats_cmd->add_option("run_dir", stats_dir, "Run directory")->required();

    auto* tree_cmd = app.add_subcommand("tree", "Mutation tree utilities");
    std::string tree_path, tree_format = "dot", tree_out;
    auto* tree_export = tree_cmd->add_subcommand("export", "Re-export a tree.json");
    tree_export->add_option("--tree", tree_path, "tree.json path")->required();
    tree_export->add_option("--format", tree_format, "dot|json");
    tree_export->add_option("-o,--output", tree_out, "Output file (stdout when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (rng_given) global.rng = rng_value;
        PipelineConfig config = load_config(global);
        if (mutate_cmd->parsed() && mutate_steps >= 0) config.steps = mutate_steps;

        if (seed_cmd->parsed()) return cmd_seed(config);
        if (verify_cmd->parsed()) return cmd_verify(config, verify_path, verify_strict);
        if (mutate_cmd->parsed()) return cmd_mutate(config, mutate_seed_path, mutate_difficulty);
        if (scene_cmd->parsed() && scene_validate->parsed()) {
            return cmd_scene_validate(config, scene_path, scene_config_ws);
        }
        if (metric_cmd->parsed() && metric_parse->parsed()) return cmd_metric_parse(metric_path);
        if (metric_cmd->parsed() && metric_eval->parsed()) {
            return cmd_metric_eval(config, metric_path, snapshot_path);
        }
        if (run_cmd->parsed()) return cmd_run(config);
        if (stats_cmd->parsed()) return cmd_stats(stats_dir);
        if (tree_cmd->parsed() && tree_export->parsed()) {
            return cmd_tree_export(tree_path, tree_format, tree_out);
        }
        std::cerr << "no subcommand selected\n";
        return kExitConfig;
    } catch (const witforge::schema::SyntaxError& e) {
        std::cerr << "syntax error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const witforge::schema::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const witforge::metriclang::SyntaxError& e) {
        std::cerr << "metric syntax error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const witforge::metriclang::TypeError& e) {
        std::cerr << "metric type error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const witforge::scene::SceneError& e) {
        std::cerr << "scene error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
