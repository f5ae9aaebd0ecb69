#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "replaygan/pipeline.hpp"

namespace pl = replaygan::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"replaygan: feature-replay WGAN-GP for mixed-type clinical time series"};
    app.require_subcommand(1);

    pl::SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Sample a surrogate cohort and write it as CSV");
    std::string sim_config;
    c_sim->add_option("--config", sim_config, "SimConfig JSON file");
    c_sim->add_option("--n-patients", sim.n_patients, "Cohort size (default config only)");
    c_sim->add_option("--length-lo", sim.length_lo, "Shortest record, multiple of 10");
    c_sim->add_option("--length-hi", sim.length_hi, "Longest record, multiple of 10");
    c_sim->add_option("--seed", sim.seed, "Random seed");
    c_sim->add_option("--out", sim.out_dir, "Output directory")->required();

    pl::TrainOptions tr;
    auto* c_train = app.add_subcommand("train", "Train a generator on a cohort CSV");
    std::string train_config, train_variant;
    std::int64_t train_epochs = -1, train_batch = -1, train_buffer = -1;
    c_train->add_option("--data", tr.data_csv, "Training cohort CSV")->required();
    c_train->add_option("--config", train_config, "TrainConfig JSON file");
    c_train->add_option("--variant", train_variant,
                        "wgan_gp_baseline | vae_wgan_gp | ours_bilstm | ours_eot | mbd | mm | mc");
    c_train->add_option("--epochs", train_epochs, "Override epoch count");
    c_train->add_option("--batch-size", train_batch, "Override batch size");
    c_train->add_option("--buffer-capacity", train_buffer, "Override buffer capacity");
    c_train->add_option("--seed", tr.seed, "Random seed");
    c_train->add_option("--out", tr.out_dir, "Output directory")->required();

    pl::GenerateOptions gen;
    auto* c_gen = app.add_subcommand("generate", "Synthesize a cohort from a checkpoint");
    c_gen->add_option("--checkpoint", gen.checkpoint_path, "Checkpoint file from train")->required();
    c_gen->add_option("--n-patients", gen.n_patients, "Synthetic patients to emit");
    c_gen->add_option("--months", gen.months, "Record length in months (default 60)");
    c_gen->add_option("--seed", gen.seed, "Random seed");
    c_gen->add_option("--out", gen.out_dir, "Output directory")->required();

    pl::EvaluateOptions ev;
    auto* c_eval = app.add_subcommand("evaluate", "Diversity, fidelity and correlation report");
    c_eval->add_option("--real", ev.real_csv, "Real cohort CSV")->required();
    c_eval->add_option("--syn", ev.syn_csv, "Synthetic cohort CSV")->required();
    c_eval->add_option("--clusters", ev.clusters, "k-means clusters for the log-cluster metric");
    c_eval->add_option("--repeats", ev.repeats, "Log-cluster repeats");
    c_eval->add_option("--sample-n", ev.sample_n, "Rows sampled per side per repeat");
    c_eval->add_option("--test-iterations", ev.test_iterations, "Statistical test iterations");
    c_eval->add_option("--test-batch", ev.test_batch, "Statistical test batch size");
    c_eval->add_option("--seed", ev.seed, "Random seed");
    c_eval->add_option("--out", ev.out_dir, "Output directory")->required();

    pl::PrivacyOptions pv;
    auto* c_priv = app.add_subcommand("privacy", "Leakage distance and disclosure risk");
    c_priv->add_option("--real", pv.real_csv, "Real cohort CSV")->required();
    c_priv->add_option("--syn", pv.syn_csv, "Synthetic cohort CSV")->required();
    c_priv->add_option("--out", pv.out_dir, "Output directory")->required();

    pl::UtilityOptions ut;
    auto* c_util = app.add_subcommand("utility", "Downstream RL utility comparison");
    std::string rl_config;
    c_util->add_option("--real", ut.real_csv, "Real cohort CSV")->required();
    c_util->add_option("--syn", ut.syn_csv, "Synthetic cohort CSV")->required();
    c_util->add_option("--rl-config", rl_config, "RLSpec JSON file");
    c_util->add_option("--seed", ut.seed, "Random seed");
    c_util->add_option("--out", ut.out_dir, "Output directory")->required();

    pl::ReportOptions rep;
    auto* c_rep = app.add_subcommand("report", "Aggregate fragments in a directory into report.md");
    c_rep->add_option("--dir", rep.dir, "Directory with command outputs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        pl::CommandResult result;
        if (c_sim->parsed()) {
            if (!sim_config.empty()) sim.config_path = sim_config;
            result = pl::cmd_simulate(sim);
        } else if (c_train->parsed()) {
            if (!train_config.empty()) tr.config_path = train_config;
            if (!train_variant.empty()) tr.variant = train_variant;
            if (train_epochs > 0) tr.epochs = train_epochs;
            if (train_batch > 0) tr.batch_size = train_batch;
            if (train_buffer > 0) tr.buffer_capacity = train_buffer;
            result = pl::cmd_train(tr);
        } else if (c_gen->parsed()) {
            result = pl::cmd_generate(gen);
        } else if (c_eval->parsed()) {
            result = pl::cmd_evaluate(ev);
        } else if (c_priv->parsed()) {
            result = pl::cmd_privacy(pv);
        } else if (c_util->parsed()) {
            if (!rl_config.empty()) ut.rl_config_path = rl_config;
            result = pl::cmd_utility(ut);
        } else if (c_rep->parsed()) {
            result = pl::cmd_report(rep);
        }
        for (const auto& f : result.outputs) std::cout << result.out_dir << "/" << f << "\n";
        return 0;
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
}
