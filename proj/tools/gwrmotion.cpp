// gwrmotion: runs the experiment protocols and writes CSV tables plus a run manifest.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gwr/error.hpp"
#include "gwr/experiment.hpp"
#include "gwr/sequence_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string hierarchy_path;
    std::optional<std::size_t> threads;
};

class Run {
public:
    Run(std::string verb, const Options& opt) : verb_(std::move(verb)), opt_(opt) {
        config_ = opt.config_path.empty() ? gwr::ExperimentConfig{} : gwr::load_experiment_config(opt.config_path);
        if (opt.threads) config_.threads = *opt.threads;
        config_.validate();
        fs::create_directories(opt.out_dir);
    }

    const gwr::ExperimentConfig& config() const { return config_; }
    std::uint64_t seed() const { return opt_.seed; }

    std::ofstream open(const std::string& relative) {
        const fs::path path = fs::path(opt_.out_dir) / relative;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream out(path);
        if (!out) throw gwr::Error("cannot write " + path.string());
        outputs_.push_back(relative);
        return out;
    }

    fs::path output_path(const std::string& relative) {
        outputs_.push_back(relative);
        return fs::path(opt_.out_dir) / relative;
    }

    // Hierarchy from --hierarchy, or trained with the first presentation order.
    gwr::Hierarchy hierarchy(const gwr::PreparedData& data) {
        if (!opt_.hierarchy_path.empty()) {
            std::ifstream in(opt_.hierarchy_path);
            if (!in) throw gwr::Error("cannot open hierarchy " + opt_.hierarchy_path);
            return gwr::Hierarchy::load(in);
        }
        const auto order = gwr::presentation_order(data.train.patterns.size(), 0, opt_.seed);
        gwr::Hierarchy h = gwr::train_incremental(config_, data, order);
        auto out = open("hierarchy.gwrh");
        h.save(out);
        return h;
    }

    void write_manifest() {
        nlohmann::json m;
        m["tool"] = "gwrmotion";
        m["version"] = GWRMOTION_VERSION;
        m["verb"] = verb_;
        m["seed"] = opt_.seed;
        m["config_hash"] = gwr::config_hash(config_);
        m["config"] = nlohmann::json::parse(gwr::dump_experiment_config(config_));
        m["hierarchy_input"] = opt_.hierarchy_path;
        m["outputs"] = outputs_;
        std::ofstream out(fs::path(opt_.out_dir) / "run_manifest.json");
        out << m.dump(2) << '\n';
    }

private:
    std::string verb_;
    Options opt_;
    gwr::ExperimentConfig config_;
    std::vector<std::string> outputs_;
};

void cmd_train(Run& run) {
    const auto data = gwr::prepare_data(run.config(), run.seed());
    const auto result = gwr::run_incremental(run.config(), data, run.seed());
    for (std::size_t k = 0; k < result.per_order.size(); ++k) {
        auto out = run.open("incremental_order_" + std::to_string(k) + ".csv");
        gwr::write_incremental_order_csv(out, result.per_order[k]);
        auto seq = run.open("incremental_sequences_" + std::to_string(k) + ".csv");
        gwr::write_incremental_sequences_csv(seq, result.per_order[k]);
    }
    auto avg = run.open("incremental.csv");
    gwr::write_incremental_average_csv(avg, result.averaged);
    auto snap = run.open("hierarchy.gwrh");
    result.hierarchies.front().save(snap);
    const auto& last = result.averaged.back();
    std::cout << "final C.P.E. " << last.cpe << "  P.E. " << last.pe << "  neurons " << last.neurons[0] << '/'
              << last.neurons[1] << '/' << last.neurons[2] << '\n';
}

void cmd_sweep_at(Run& run) {
    const auto data = gwr::prepare_data(run.config(), run.seed());
    const auto h = run.hierarchy(data);
    const auto rows = gwr::sweep_activation_threshold(run.config(), data, h);
    auto out = run.open("sweep_at.csv");
    gwr::write_threshold_csv(out, rows);
    for (const auto& r : rows) std::cout << "a_T " << r.activation_threshold << "  neurons " << r.neurons << "  mse " << r.mse << '\n';
}

void cmd_sweep_horizon(Run& run) {
    const auto data = gwr::prepare_data(run.config(), run.seed());
    const auto h = run.hierarchy(data);
    const auto rows = gwr::sweep_horizon(run.config(), data, h);
    auto out = run.open("sweep_horizon.csv");
    gwr::write_horizon_csv(out, rows);
    for (const auto& r : rows) std::cout << "h " << r.horizon << "  mae " << r.mae << " +- " << r.mae_std << '\n';
}

void cmd_sweep_loss(Run& run) {
    const auto data = gwr::prepare_data(run.config(), run.seed());
    const auto rows = gwr::sweep_data_loss(run.config(), data, run.seed());
    auto out = run.open("sweep_loss.csv");
    gwr::write_loss_csv(out, rows);
    for (const auto& r : rows) std::cout << "loss " << r.loss_fraction << "  mse " << r.mse << '\n';
}

void cmd_delay_demo(Run& run) {
    const auto data = gwr::prepare_data(run.config(), run.seed());
    const auto h = run.hierarchy(data);
    const auto rows = gwr::run_delay_demo(run.config(), data, h, run.seed());
    for (const auto& r : rows) {
        auto out = run.open("delay/" + r.sequence + (r.mode == gwr::DelayMode::Fixed ? "_fixed" : "_variable") + ".csv");
        gwr::write_lag_csv(out, r.report);
    }
    auto summary = run.open("delay_summary.csv");
    gwr::write_delay_summary_csv(summary, rows);
    for (const auto& r : rows) {
        std::cout << r.sequence << (r.mode == gwr::DelayMode::Fixed ? " fixed    " : " variable ") << "mae "
                  << r.report.mae << "  baseline " << r.report.baseline_mae << '\n';
    }
}

void cmd_gen_data(Run& run) {
    auto data = gwr::prepare_data(run.config(), run.seed());
    // Held-out demonstrations go last so a files-source config with the
    // same heldout_per_pattern reproduces the split.
    gwr::Dataset all;
    for (std::size_t p = 0; p < data.train.patterns.size(); ++p) {
        gwr::PatternDemos merged = std::move(data.train.patterns[p]);
        auto& held = data.heldout.patterns[p];
        for (std::size_t i = 0; i < held.demos.size(); ++i) {
            merged.demos.push_back(std::move(held.demos[i]));
            merged.subjects.push_back(held.subjects[i]);
            merged.repetitions.push_back(held.repetitions[i]);
        }
        all.patterns.push_back(std::move(merged));
    }
    gwr::save_dataset(run.output_path("dataset"), all);
    std::cout << "wrote " << all.sequence_count() << " sequences\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical GWR motion prediction experiments"};
    app.require_subcommand(1);
    Options opt;

    struct Verb {
        const char* name;
        const char* help;
        void (*fn)(Run&);
        bool takes_hierarchy;
    };
    const std::vector<Verb> verbs = {
        {"train", "incremental training over presentation orders (C.P.E./P.E. per epoch)", cmd_train, false},
        {"sweep-at", "P-GWR activation-threshold sweep on frozen lower layers", cmd_sweep_at, true},
        {"sweep-horizon", "recursive prediction error for each horizon", cmd_sweep_horizon, true},
        {"sweep-loss", "training under random chunk dropout", cmd_sweep_loss, false},
        {"delay-demo", "fixed and variable delay compensation on held-out demonstrations", cmd_delay_demo, true},
        {"gen-data", "write the synthetic suite as a dataset directory", cmd_gen_data, false},
    };
    std::vector<CLI::App*> subs;
    for (const auto& v : verbs) {
        CLI::App* sub = app.add_subcommand(v.name, v.help);
        sub->add_option("config,--config", opt.config_path, "JSON experiment config (defaults apply when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "master seed")->capture_default_str();
        sub->add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
        if (v.takes_hierarchy) {
            sub->add_option("--hierarchy", opt.hierarchy_path, "trained hierarchy snapshot; trained from scratch if absent")
                ->check(CLI::ExistingFile);
        }
        subs.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < verbs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            Run run(verbs[i].name, opt);
            verbs[i].fn(run);
            run.write_manifest();
            return 0;
        } catch (const gwr::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 1;
}
