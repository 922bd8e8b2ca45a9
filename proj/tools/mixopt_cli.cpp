// mixopt: regroup a corpus, train with dynamic mixture weights, and run
// the standalone cost-model and lemma checks.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixopt/config.hpp"
#include "mixopt/corpus.hpp"
#include "mixopt/costmodel.hpp"
#include "mixopt/error.hpp"
#include "mixopt/experiment.hpp"
#include "mixopt/regroup.hpp"
#include "mixopt/synthetic.hpp"
#include "mixopt/theory.hpp"
#include "mixopt/types.hpp"

namespace {

using json = nlohmann::json;

enum ExitCode { kOk = 0, kConfig = 1, kData = 2, kNumerical = 3 };

void print_run_summary(const mixopt::ExperimentReport& report) {
    std::cout << "chosen k: " << report.chosen_k << '\n';
    for (const auto& c : report.selection.candidates) {
        std::cout << "  k=" << c.k << " silhouette=" << c.silhouette << " inertia=" << c.inertia << '\n';
    }
    const auto& last = report.logs.back();
    std::cout << "final weights:";
    for (double w : last.weights_used.values()) std::cout << ' ' << std::fixed << std::setprecision(4) << w;
    std::cout << std::defaultfloat << "\nfinal weighted eval loss: " << report.final_eval_loss_weighted
              << "\noutputs in " << report.output_dir.string() << '\n';
}

int cmd_cost(const mixopt::cost::CostParams& params, const std::string& json_out, bool show_prose) {
    using namespace mixopt::cost;
    const CostReport report = compare(params);
    std::cout << std::left << std::setw(10) << "method" << std::right << std::setw(16) << "total_flops"
              << std::setw(16) << "overhead" << std::setw(14) << "overhead_%" << std::setw(12) << "consistent";
    if (show_prose) std::cout << std::setw(18) << "prose_total";
    std::cout << '\n';
    for (const auto& row : report.methods) {
        std::cout << std::left << std::setw(10) << to_string(row.method) << std::right << std::scientific
                  << std::setprecision(6) << std::setw(16) << row.total_flops << std::setw(16)
                  << row.relative_overhead << std::setw(14) << 100.0 * row.relative_overhead << std::setw(12)
                  << (row.consistent ? "yes" : "NO");
        if (show_prose) std::cout << std::setw(18) << row.prose_total_flops;
        std::cout << '\n';
    }
    std::cout << std::defaultfloat << "m < sqrt(D_e): " << (report.randb_cheaper_than_dga_eval ? "true" : "false")
              << '\n';

    if (!json_out.empty()) {
        json methods = json::array();
        for (const auto& row : report.methods) {
            json item = {{"method", to_string(row.method)},
                         {"total_flops", row.total_flops},
                         {"relative_overhead", row.relative_overhead},
                         {"overhead_from_total", row.overhead_from_total},
                         {"consistent", row.consistent}};
            if (show_prose) item["prose_total_flops"] = row.prose_total_flops;
            methods.push_back(item);
        }
        const json doc = {{"params",
                           {{"N", params.N},
                            {"D_t", params.D_t},
                            {"D_e", params.D_e},
                            {"m", params.m},
                            {"T", params.T},
                            {"delta", params.delta}}},
                          {"methods", methods},
                          {"m_below_sqrt_De", report.randb_cheaper_than_dga_eval}};
        if (json_out == "-") {
            std::cout << doc.dump(2) << '\n';
        } else {
            std::ofstream(json_out) << doc.dump(2) << '\n';
        }
    }
    return kOk;
}

int cmd_theory(const mixopt::theory::TheoryCheckOptions& options, const std::string& json_out) {
    const auto checks = mixopt::theory::run_theory_checks(options);
    json items = json::array();
    bool all = true;
    for (const auto& c : checks) {
        std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << " trials=" << c.trials
                  << " violations=" << c.violations << " worst_margin=" << c.worst_margin << '\n';
        items.push_back({{"name", c.name},
                         {"trials", c.trials},
                         {"violations", c.violations},
                         {"worst_margin", c.worst_margin},
                         {"passed", c.passed()}});
        all = all && c.passed();
    }
    const json doc = {{"seed", options.seed}, {"checks", items}, {"all_passed", all}};
    if (json_out == "-") {
        std::cout << doc.dump(2) << '\n';
    } else if (!json_out.empty()) {
        std::ofstream(json_out) << doc.dump(2) << '\n';
    }
    return all ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-mixture optimization: semantic regrouping and gradient-based rebalancing"};
    app.require_subcommand(1);

    // run
    std::string run_config;
    auto* run = app.add_subcommand("run", "Full pipeline: regroup, then train with the configured strategy");
    run->add_option("config", run_config, "Experiment config file")->required()->check(CLI::ExistingFile);

    // train
    std::string train_config, train_partition;
    auto* train = app.add_subcommand("train", "Train on an existing partition file");
    train->add_option("config", train_config, "Experiment config file")->required()->check(CLI::ExistingFile);
    train->add_option("--partition", train_partition, "Partition record file")->required()->check(CLI::ExistingFile);

    // regroup
    std::string rg_manifest, rg_out = "partition.jsonl", rg_report;
    std::vector<int> rg_candidates;
    std::uint64_t rg_seed = 0;
    bool rg_normalize = false, rg_exact = false;
    int rg_cap = 2048;
    auto* rg = app.add_subcommand("regroup", "Cluster train embeddings and choose k by silhouette");
    rg->add_option("manifest", rg_manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
    rg->add_option("-k,--k-candidates", rg_candidates, "Candidate cluster counts")->required()->delimiter(',');
    rg->add_option("--seed", rg_seed, "Random seed");
    rg->add_flag("--normalize", rg_normalize, "Unit-normalize embeddings before clustering");
    rg->add_option("--silhouette-cap", rg_cap, "Points sampled for the silhouette score");
    rg->add_flag("--exact", rg_exact, "Use every point for the silhouette score");
    rg->add_option("-o,--out", rg_out, "Partition file to write");
    rg->add_option("--report", rg_report, "Write the k-selection report as JSON (- for stdout)");

    // cost
    mixopt::cost::CostParams cost_params;
    std::string cost_json;
    bool show_prose = false;
    auto* cost = app.add_subcommand("cost", "Tabulate FLOPs and relative overhead of mixing methods");
    cost->add_option("--N", cost_params.N, "Model parameters")->required();
    cost->add_option("--Dt", cost_params.D_t, "Training tokens")->required();
    cost->add_option("--De", cost_params.D_e, "Evaluation tokens")->required();
    cost->add_option("--m", cost_params.m, "Number of skills")->required();
    cost->add_option("--T", cost_params.T, "Reweighting rounds")->required();
    cost->add_option("--delta", cost_params.delta, "Fraction of training tokens used for reweighting")->required();
    cost->add_option("--json", cost_json, "Also write JSON to this path ('-' for stdout)");
    cost->add_flag("--show-prose-variant", show_prose, "Also evaluate the derivation-text formulas");

    // theory-check
    mixopt::theory::TheoryCheckOptions theory_opts;
    std::string theory_json;
    auto* theory = app.add_subcommand("theory-check", "Monte-Carlo checks of the regret, stability and greedy-step lemmas");
    theory->add_option("--seed", theory_opts.seed, "Random seed");
    theory->add_option("--regret-trials", theory_opts.regret_bound_trials, "Regret bound instances");
    theory->add_option("--oracle-trials", theory_opts.regret_oracle_trials, "Enumeration cross-check instances");
    theory->add_option("--stability-trials", theory_opts.stability_trials, "Stability instances");
    theory->add_option("--greedy-trials", theory_opts.greedy_trials, "Greedy dominance instances");
    theory->add_option("--json", theory_json, "Write a JSON summary to this path ('-' for stdout)");

    // make-synthetic
    std::string syn_out;
    std::uint64_t syn_seed = 0;
    mixopt::synthetic::NoisyDomainOptions syn_opts;
    auto* syn = app.add_subcommand("make-synthetic", "Write the noisy-domain classification corpus");
    syn->add_option("manifest", syn_out, "Manifest path to write")->required();
    syn->add_option("--seed", syn_seed, "Random seed");
    syn->add_option("--domains", syn_opts.domains, "Number of domains");
    syn->add_option("--noisy-domain", syn_opts.noisy_domain, "Domain with random labels");
    syn->add_option("--train-per-domain", syn_opts.train_per_domain, "Train examples per domain");
    syn->add_option("--eval-per-domain", syn_opts.eval_per_domain, "Eval examples per clean domain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*run) {
            print_run_summary(mixopt::run_experiment(mixopt::load_config(run_config)));
        } else if (*train) {
            const auto cfg = mixopt::load_config(train_config);
            print_run_summary(mixopt::run_experiment(cfg, mixopt::load_partition(train_partition)));
        } else if (*rg) {
            const auto corpus = mixopt::load_corpus(rg_manifest);
            mixopt::RegroupOptions opts;
            opts.k_candidates = rg_candidates;
            opts.seed = mixopt::derive_seed(rg_seed, "clustering");
            opts.normalize = rg_normalize;
            opts.silhouette.sample_cap = rg_cap;
            opts.silhouette.exact = rg_exact;
            const auto result = mixopt::regroup(corpus, opts);
            mixopt::save_partition(result.partition, rg_out);
            for (const auto& c : result.report.candidates) {
                std::cout << "k=" << c.k << " silhouette=" << c.silhouette << " inertia=" << c.inertia << '\n';
            }
            std::cout << "chosen k: " << result.report.chosen_k << " -> " << rg_out << '\n';
            if (rg_report == "-") {
                std::cout << mixopt::selection_json(result.report) << '\n';
            } else if (!rg_report.empty()) {
                std::ofstream(rg_report) << mixopt::selection_json(result.report) << '\n';
            }
        } else if (*cost) {
            return cmd_cost(cost_params, cost_json, show_prose);
        } else if (*theory) {
            return cmd_theory(theory_opts, theory_json);
        } else if (*syn) {
            const auto corpus = mixopt::synthetic::noisy_domain_corpus(syn_opts, syn_seed);
            mixopt::save_corpus(corpus, syn_out);
            std::cout << "wrote " << corpus.size() << " examples to " << syn_out << '\n';
        }
    } catch (const mixopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const mixopt::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const mixopt::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
