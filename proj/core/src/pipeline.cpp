#include "replaygan/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "replaygan/checkpoint.hpp"
#include "replaygan/config_json.hpp"
#include "replaygan/correlations.hpp"
#include "replaygan/csv.hpp"
#include "replaygan/fidelity.hpp"
#include "replaygan/privacy.hpp"
#include "replaygan/report.hpp"
#include "replaygan/rl_utility.hpp"
#include "replaygan/trainer.hpp"

namespace replaygan::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Tracks files written by a command; removes them when the command
/// fails partway so no partial outputs survive.
class OutputTracker {
  public:
    explicit OutputTracker(const std::string& out_dir) : dir_(out_dir) { fs::create_directories(dir_); }

    std::string path(const std::string& rel) {
        written_.push_back(rel);
        return (dir_ / rel).string();
    }

    void discard_all() {
        for (const auto& rel : written_) {
            std::error_code ec;
            fs::remove(dir_ / rel, ec);
        }
    }

    const std::vector<std::string>& written() const { return written_; }
    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    std::vector<std::string> written_;
};

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    return json::parse(f);
}

void write_manifest(OutputTracker& out, const std::string& command, std::uint64_t seed, const json& config,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
    json manifest;
    manifest["command"] = command;
    manifest["seed"] = seed;
    manifest["config"] = config;
    manifest["config_hash"] = fnv1a64(config.dump());
    manifest["schema_hash"] = cli_schema().content_hash();
    json jin = json::object();
    for (const auto& [name, path] : inputs) jin[name] = {{"path", path}, {"hash", file_hash(path)}};
    manifest["inputs"] = std::move(jin);
    json jout = json::object();
    for (const auto& rel : out.written()) jout[rel] = file_hash((out.dir() / rel).string());
    manifest["outputs"] = std::move(jout);
    report::write_text_file(out.path("manifest.json"), manifest.dump(2) + "\n");
}

template <typename Fn>
CommandResult run_command(const std::string& out_dir, Fn&& body) {
    OutputTracker out(out_dir);
    try {
        body(out);
    } catch (...) {
        out.discard_all();
        throw;
    }
    CommandResult res;
    res.out_dir = out_dir;
    res.outputs = out.written();
    return res;
}

void write_matrix_csv(const std::string& path, const Tensor& m, const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "variable";
    for (const auto& l : labels) os << "," << l;
    os << "\n";
    for (std::int64_t i = 0; i < m.dim(0); ++i) {
        os << labels[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < m.dim(1); ++j) os << "," << format_double(m.at2(i, j));
        os << "\n";
    }
    report::write_text_file(path, os.str());
}

std::vector<std::string> variable_labels(const VariableSchema& schema) {
    std::vector<std::string> out;
    for (const auto& v : schema.variables) out.push_back(v.name);
    return out;
}

void write_trace_csv(const std::string& path, const train::TrainTrace& trace) {
    static const char* kComponents[] = {"wasserstein", "gradient_penalty", "adversarial",
                                        "alignment",   "kl",               "reconstruction",
                                        "feature_matching"};
    std::ostringstream os;
    os << "iteration,epoch,phase,phase_step,total";
    for (const char* c : kComponents) os << "," << c;
    os << ",l_corr_logged,wall_ms\n";
    for (const auto& r : trace.rows) {
        os << r.iteration << "," << r.epoch << "," << r.phase << "," << r.phase_step << "," << format_double(r.total);
        for (const char* c : kComponents) {
            auto it = r.components.find(c);
            os << ",";
            if (it != r.components.end()) os << format_double(it->second);
        }
        os << ",";
        if (r.phase == "generator") os << format_double(r.l_corr_logged);
        os << "," << format_double(r.wall_ms) << "\n";
    }
    report::write_text_file(path, os.str());
}

void write_heatmap_outputs(OutputTracker& out, const std::string& stem, const Tensor& grid,
                           const VariableSchema& schema, const rlutil::RLSpec& spec) {
    const auto& spec_a = schema.variables[static_cast<std::size_t>(*schema.index_of(spec.action_var_a))];
    const auto& spec_b = schema.variables[static_cast<std::size_t>(*schema.index_of(spec.action_var_b))];
    write_matrix_csv(out.path(stem + ".csv"), grid, spec_a.levels);
    report::write_text_file(out.path(stem + ".svg"),
                            report::heatmap_svg(grid, spec_a.levels, spec_b.levels,
                                                spec.action_var_a + " x " + spec.action_var_b, 0.0, 1.0));
}

}  // namespace

const VariableSchema& cli_schema() {
    static const VariableSchema schema = art_hiv_schema();
    return schema;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot hash missing file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a64(bytes.data(), bytes.size());
}

CommandResult cmd_simulate(const SimulateOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        SimConfig config;
        if (opt.config_path)
            config = sim_config_from_json(load_json_file(*opt.config_path));
        else
            config = default_surrogate_config(opt.n_patients, opt.length_lo, opt.length_hi, opt.seed);
        config.seed = opt.seed;

        const auto& schema = cli_schema();
        auto problems = validate_sim_config(config, schema);
        if (!problems.empty()) throw std::invalid_argument("invalid simulation config: " + problems.front());

        Cohort cohort = sample_cohort(config, schema);
        write_cohort_csv_file(out.path("cohort.csv"), cohort, schema);
        write_manifest(out, "simulate", opt.seed, sim_config_to_json(config), {});
    });
}

CommandResult cmd_train(const TrainOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        train::TrainConfig config;
        if (opt.config_path) config = train_config_from_json(load_json_file(*opt.config_path));
        if (opt.variant) config.variant = train::variant_from_string(*opt.variant);
        if (opt.epochs) config.epochs = *opt.epochs;
        if (opt.batch_size) config.batch_size = *opt.batch_size;
        if (opt.buffer_capacity) config.buffer_capacity = *opt.buffer_capacity;
        config.seed = opt.seed;

        const auto& schema = cli_schema();
        Cohort cohort = read_cohort_csv_file(opt.data_csv, schema);
        auto result = train::train(config, cohort, schema);

        save_checkpoint(out.path("checkpoint.bin"), result.bundle, result.buffer);
        write_trace_csv(out.path("trace.csv"), result.trace);
        {
            std::vector<double> l_corr;
            for (const auto& r : result.trace.rows)
                if (r.phase == "generator") l_corr.push_back(r.l_corr_logged);
            report::write_text_file(out.path("l_corr.svg"),
                                    report::line_svg({{train::to_string(config.variant), l_corr}},
                                                     "logged correlation loss per generator step", "ln L_corr"));
        }
        write_manifest(out, "train", opt.seed, train_config_to_json(config), {{"data", opt.data_csv}});
    });
}

CommandResult cmd_generate(const GenerateOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        auto loaded = load_checkpoint(opt.checkpoint_path, cli_schema().content_hash());
        Cohort syn = train::generate_cohort(loaded.bundle, loaded.buffer, opt.n_patients, opt.months, opt.seed);
        write_cohort_csv_file(out.path("synthetic.csv"), syn, loaded.bundle.schema);
        json config;
        config["n_patients"] = opt.n_patients;
        config["months"] = opt.months;
        config["variant"] = train::to_string(loaded.bundle.variant);
        write_manifest(out, "generate", opt.seed, config, {{"checkpoint", opt.checkpoint_path}});
    });
}

CommandResult cmd_evaluate(const EvaluateOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        const auto& schema = cli_schema();
        Cohort real = read_cohort_csv_file(opt.real_csv, schema);
        Cohort syn = read_cohort_csv_file(opt.syn_csv, schema);

        auto u = fidelity::log_cluster(real, syn, schema, opt.clusters, opt.repeats, opt.sample_n, opt.seed);
        auto cat = fidelity::category_coverage(real, syn, schema);
        auto table = fidelity::run_test_table(real, syn, schema, opt.test_iterations, opt.test_batch, opt.seed);

        json metrics;
        metrics["log_cluster"] = {{"mean", u.mean}, {"stddev", u.stddev}, {"per_repeat", u.per_repeat}};
        metrics["cat"] = cat.cat;
        metrics["cat_per_variable"] = cat.per_variable;
        report::write_text_file(out.path("metrics.json"), metrics.dump(2) + "\n");

        {
            std::ostringstream os;
            os << "variable,ks,t,f,three_sigma\n";
            for (const auto& v : schema.variables) {
                const auto& c = table.per_variable.at(v.name);
                os << v.name << "," << c.ks << ",";
                if (c.t >= 0) os << c.t;
                os << "," << c.f << ",";
                if (c.three_sigma >= 0) os << c.three_sigma;
                os << "\n";
            }
            report::write_text_file(out.path("test_table.csv"), os.str());
        }

        const auto labels = variable_labels(schema);
        auto rep_real = corr::correlation_report(real, schema);
        auto rep_syn = corr::correlation_report(syn, schema);
        write_matrix_csv(out.path("real_static_tau.csv"), rep_real.static_tau, labels);
        write_matrix_csv(out.path("real_trend_tau.csv"), rep_real.trend_tau, labels);
        write_matrix_csv(out.path("real_cycle_tau.csv"), rep_real.cycle_tau, labels);
        write_matrix_csv(out.path("syn_static_tau.csv"), rep_syn.static_tau, labels);
        write_matrix_csv(out.path("syn_trend_tau.csv"), rep_syn.trend_tau, labels);
        write_matrix_csv(out.path("syn_cycle_tau.csv"), rep_syn.cycle_tau, labels);
        for (const auto& [name, matrix] :
             {std::pair<std::string, const Tensor*>{"real_static_tau", &rep_real.static_tau},
              {"syn_static_tau", &rep_syn.static_tau},
              {"real_trend_tau", &rep_real.trend_tau},
              {"syn_trend_tau", &rep_syn.trend_tau},
              {"real_cycle_tau", &rep_real.cycle_tau},
              {"syn_cycle_tau", &rep_syn.cycle_tau}})
            report::write_text_file(out.path(name + ".svg"), report::heatmap_svg(*matrix, labels, labels, name, -1.0, 1.0));

        // per-variable distribution plots
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            std::string stem = "var_" + std::to_string(v);
            if (spec.is_numeric()) {
                std::vector<double> rv, sv;
                for (const auto& rec : real.records)
                    for (const auto& row : rec.rows) rv.push_back(row[static_cast<std::size_t>(v)]);
                for (const auto& rec : syn.records)
                    for (const auto& row : rec.rows) sv.push_back(row[static_cast<std::size_t>(v)]);
                report::write_text_file(out.path(stem + "_kde.svg"), report::kde_svg(rv, sv, spec.name));
            } else {
                std::vector<double> rf(static_cast<std::size_t>(spec.level_count()), 0.0);
                std::vector<double> sf(static_cast<std::size_t>(spec.level_count()), 0.0);
                std::int64_t rn = 0, sn = 0;
                for (const auto& rec : real.records)
                    for (const auto& row : rec.rows) {
                        ++rf[static_cast<std::size_t>(row[static_cast<std::size_t>(v)])];
                        ++rn;
                    }
                for (const auto& rec : syn.records)
                    for (const auto& row : rec.rows) {
                        ++sf[static_cast<std::size_t>(row[static_cast<std::size_t>(v)])];
                        ++sn;
                    }
                for (auto& x : rf) x /= static_cast<double>(rn);
                for (auto& x : sf) x /= static_cast<double>(sn);
                report::write_text_file(out.path(stem + "_bar.svg"),
                                        report::barplot_svg(spec.levels, rf, sf, spec.name));
            }
        }

        json config;
        config["clusters"] = opt.clusters;
        config["repeats"] = opt.repeats;
        config["sample_n"] = opt.sample_n;
        config["test_iterations"] = opt.test_iterations;
        config["test_batch"] = opt.test_batch;
        write_manifest(out, "evaluate", opt.seed, config, {{"real", opt.real_csv}, {"syn", opt.syn_csv}});
    });
}

CommandResult cmd_privacy(const PrivacyOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        const auto& schema = cli_schema();
        Cohort real = read_cohort_csv_file(opt.real_csv, schema);
        Cohort syn = read_cohort_csv_file(opt.syn_csv, schema);

        const double min_dist = privacy::min_euclidean_distance(real, syn, schema);
        auto risk = privacy::disclosure_risk(real, syn, schema, schema.quasi_identifiers);

        json result;
        result["min_euclidean_distance"] = min_dist;
        result["record_leaked"] = min_dist == 0.0;
        result["disclosure_risk"] = risk.risk;
        result["risk_threshold"] = privacy::kRiskThreshold;
        result["passes_threshold"] = risk.passes_threshold;
        result["synthetic_count"] = risk.synthetic_count;
        json classes = json::array();
        for (const auto& c : risk.classes)
            classes.push_back({{"levels", c.levels},
                               {"real_count", c.real_count},
                               {"syn_count", c.syn_count},
                               {"in_both", c.in_both}});
        result["equivalence_classes"] = std::move(classes);
        report::write_text_file(out.path("privacy.json"), result.dump(2) + "\n");
        write_manifest(out, "privacy", 0, json::object(), {{"real", opt.real_csv}, {"syn", opt.syn_csv}});
    });
}

CommandResult cmd_utility(const UtilityOptions& opt) {
    return run_command(opt.out_dir, [&](OutputTracker& out) {
        const auto& schema = cli_schema();
        Cohort real = read_cohort_csv_file(opt.real_csv, schema);
        Cohort syn = read_cohort_csv_file(opt.syn_csv, schema);

        rlutil::RLSpec spec;
        if (opt.rl_config_path) spec = rl_spec_from_json(load_json_file(*opt.rl_config_path));

        Tensor map_real = rlutil::policy_heatmap_for_cohort(real, schema, spec, opt.seed);
        Tensor map_syn = rlutil::policy_heatmap_for_cohort(syn, schema, spec, opt.seed);
        auto cmp = rlutil::compare_policies(map_real, map_syn);

        write_heatmap_outputs(out, "heatmap_real", map_real, schema, spec);
        write_heatmap_outputs(out, "heatmap_syn", map_syn, schema, spec);
        json result;
        result["total_variation"] = cmp.total_variation;
        result["top1_match"] = cmp.top1_match;
        report::write_text_file(out.path("comparison.json"), result.dump(2) + "\n");
        write_manifest(out, "utility", opt.seed, rl_spec_to_json(spec),
                       {{"real", opt.real_csv}, {"syn", opt.syn_csv}});
    });
}

CommandResult cmd_report(const ReportOptions& opt) {
    return run_command(opt.dir, [&](OutputTracker& out) {
        std::ostringstream md;
        md << "# Synthesis evaluation report\n\n";

        auto maybe_embed_json = [&md, &opt](const std::string& file, const std::string& heading) {
            const fs::path p = fs::path(opt.dir) / file;
            if (!fs::exists(p)) return;
            std::ifstream f(p);
            md << "## " << heading << "\n\n```json\n" << f.rdbuf() << "```\n\n";
        };
        auto maybe_embed_csv = [&md, &opt](const std::string& file, const std::string& heading) {
            const fs::path p = fs::path(opt.dir) / file;
            if (!fs::exists(p)) return;
            std::ifstream f(p);
            md << "## " << heading << "\n\n";
            std::string line;
            bool header = true;
            while (std::getline(f, line)) {
                std::string row = "| ";
                for (char c : line) row += c == ',' ? std::string(" | ") : std::string(1, c);
                md << row << " |\n";
                if (header) {
                    std::size_t cols = std::count(line.begin(), line.end(), ',') + 1;
                    md << "|";
                    for (std::size_t i = 0; i < cols; ++i) md << " --- |";
                    md << "\n";
                    header = false;
                }
            }
            md << "\n";
        };

        maybe_embed_json("metrics.json", "Diversity and fidelity metrics");
        maybe_embed_csv("test_table.csv", "Statistical test pass counts (out of 100)");
        maybe_embed_json("privacy.json", "Disclosure risk");
        maybe_embed_json("comparison.json", "Policy comparison");

        md << "## Figures\n\n";
        std::vector<std::string> svgs;
        for (const auto& entry : fs::directory_iterator(opt.dir))
            if (entry.path().extension() == ".svg") svgs.push_back(entry.path().filename().string());
        std::sort(svgs.begin(), svgs.end());
        for (const auto& name : svgs) md << "![" << name << "](" << name << ")\n\n";

        report::write_text_file(out.path("report.md"), md.str());
    });
}

}  // namespace replaygan::pipeline
