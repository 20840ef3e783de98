#include "ttlforge/cli/commands.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    using namespace ttlforge::cli;

    CLI::App app{"ttlforge: test-time learning sessions and meta-prompt training"};
    app.require_subcommand(1);

    RunTtlOptions run;
    auto* run_cmd = app.add_subcommand("run-ttl", "Run one session of K episodes on a task");
    run_cmd->add_option("--config", run.config, "Config file")->required();
    run_cmd->add_option("--task", run.task, "Task id")->required();
    run_cmd->add_option("--policy", run.policy, "seed | static | pool:ID | FILE");
    run_cmd->add_option("--seed", run.seed, "Run seed");
    run_cmd->add_option("--out", run.out, "Runs root (default: config output_dir)");
    run_cmd->add_option("--label", run.label, "Method label used by report");

    MetaTrainOptions train;
    auto* train_cmd = app.add_subcommand("meta-train", "Evolve the meta-prompt; resumes an existing run");
    train_cmd->add_option("--config", train.config, "Config file")->required();
    train_cmd->add_option("--out", train.out, "Runs root (default: config output_dir)");
    train_cmd->add_option("--run-id", train.run_id, "Override the config run_id");

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a frozen policy on a split");
    eval_cmd->add_option("--config", eval.config, "Config file")->required();
    eval_cmd->add_option("--policy", eval.policy, "seed | static | pool:ID | FILE");
    eval_cmd->add_option("--split", eval.split, "train | val | test (default: eval_tasks)")
        ->check(CLI::IsMember({"train", "val", "test"}));
    eval_cmd->add_option("--seed", eval.seed, "Run seed");
    eval_cmd->add_option("--out", eval.out, "Runs root (default: config output_dir)");
    eval_cmd->add_option("--csv", eval.csv, "CSV path (default: <run>/report/eval.csv)");
    eval_cmd->add_option("--label", eval.label, "Method label used by report");

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Aggregate labelled sessions into tables");
    report_cmd->add_option("runs_dir", report.runs_dir, "Runs directory");
    report_cmd->add_option("--out", report.runs_dir, "Runs directory");
    report_cmd->add_option("--csv", report.csv, "CSV path (default: <runs_dir>/report.csv)");

    SelectExpertOptions select;
    auto* select_cmd = app.add_subcommand("select-expert", "Re-run expert selection on a training run");
    select_cmd->add_option("--config", select.config, "Config file")->required();
    select_cmd->add_option("--out", select.out, "Runs root (default: config output_dir)");
    select_cmd->add_option("--run-id", select.run_id, "Override the config run_id");
    select_cmd->add_option("--mode", select.mode, "raw | zscore")->check(CLI::IsMember({"raw", "zscore"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*run_cmd) return cmd_run_ttl(run, std::cout, std::cerr);
    if (*train_cmd) return cmd_meta_train(train, std::cout, std::cerr);
    if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
    if (*report_cmd) {
        if (report.runs_dir.empty()) {
            std::cerr << "error: report needs a runs directory\n";
            return kExitUsage;
        }
        return cmd_report(report, std::cout, std::cerr);
    }
    if (*select_cmd) return cmd_select_expert(select, std::cout, std::cerr);
    return kExitUsage;
}
