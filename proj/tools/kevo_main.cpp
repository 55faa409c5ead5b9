#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kevo/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kevo: strategy-coordinated evolution of GPU kernels"};
    app.require_subcommand(1);

    std::string manifest_path;
    kevo::CliOptions run_options;
    auto* run = app.add_subcommand("run", "launch an evolution run from a manifest");
    run->add_option("--manifest", manifest_path, "run manifest JSON file")->required();
    run->add_flag("--dry-run", run_options.dry_run,
                  "validate the manifest and print the plan without running");
    run->add_option("--max-generations", run_options.max_generations,
                    "stop after this many generations this session (0 = run to completion)");

    std::string checkpoint_path;
    auto* resume = app.add_subcommand("resume", "continue a run from a checkpoint");
    resume->add_option("--checkpoint", checkpoint_path, "checkpoint JSON file")->required();

    std::string report_dir;
    bool report_json = false;
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("dir", report_dir, "run output directory")->required();
    report->add_flag("--json", report_json, "emit machine-readable JSON");

    auto* pool = app.add_subcommand("pool", "manage the strategy pool");
    pool->require_subcommand(1);
    std::string pool_file;
    std::string pool_path;
    auto* pool_import = pool->add_subcommand("import", "import records or external strategies");
    pool_import->add_option("file", pool_file, "JSONL file to import")->required();
    pool_import->add_option("--pool", pool_path, "pool store file")->required();
    auto* pool_export = pool->add_subcommand("export", "export pool records");
    pool_export->add_option("file", pool_file, "destination JSONL file")->required();
    pool_export->add_option("--pool", pool_path, "pool store file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return kevo::cmd_run(manifest_path, run_options, std::cout, std::cerr);
    if (resume->parsed())
        return kevo::cmd_resume(checkpoint_path, std::cout, std::cerr);
    if (report->parsed())
        return kevo::cmd_report(report_dir, report_json, std::cout, std::cerr);
    if (pool->parsed()) {
        if (pool_import->parsed())
            return kevo::cmd_pool_import(pool_file, pool_path, std::cout, std::cerr);
        if (pool_export->parsed())
            return kevo::cmd_pool_export(pool_file, pool_path, std::cout, std::cerr);
    }
    return kevo::kExitValidation;
}
