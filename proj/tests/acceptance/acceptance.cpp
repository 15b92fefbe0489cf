// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cycle.hpp"
#include "gwr/delay.hpp"
#include "gwr/experiment.hpp"
#include "gwr/gwr_network.hpp"
#include "gwr/predictive_gwr.hpp"

namespace fs = std::filesystem;
using namespace gwr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

// Exhaustive oracle: plain squared distances, smallest (distance, id) wins.
std::pair<NeuronId, NeuronId> oracle(const PrototypeGraph& g, std::span<const double> q) {
    std::vector<std::pair<double, NeuronId>> d;
    for (std::size_t i = 0; i < g.neuron_count(); ++i) {
        const auto w = g.row(i).first(g.match_width());
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += (q[k] - w[k]) * (q[k] - w[k]);
        d.emplace_back(s, g.ids()[i]);
    }
    std::sort(d.begin(), d.end());
    return {d[0].second, d[1].second};
}

// Grows a network toward `target` neurons on random inputs; some networks
// get exact duplicate rows so that ties are exercised.
template <typename Train>
void grow(PrototypeGraph& g, std::size_t target, std::mt19937_64& rng, Train train) {
    for (int i = 0; i < 4000 && g.neuron_count() < target; ++i) train();
    if (rng() % 4 == 0 && g.neuron_count() > 2) {
        const std::size_t src = rng() % g.neuron_count();
        const std::size_t dst = rng() % g.neuron_count();
        const auto from = g.row(src);
        std::vector<double> copy(from.begin(), from.end());
        std::copy(copy.begin(), copy.end(), g.mutable_row(dst).begin());
    }
}

Outcome criterion_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    std::size_t queries = 0, mismatches = 0, max_neurons = 0;
    GwrParams p;
    p.activation_threshold = 0.999999;
    p.firing_threshold = 0.99;
    for (int net = 0; net < 50; ++net) {
        const std::size_t d = 1 + rng() % 24;
        const std::size_t target = 2 + rng() % 99;
        p.max_neurons = target;
        auto vec = [&](std::size_t len) {
            std::vector<double> v(len);
            for (auto& x : v) x = n(rng);
            return v;
        };

        auto plain = GwrNetwork::init(vec(d), vec(d), p);
        PrototypeGraph& pg = plain.mutable_graph();
        grow(pg, target, rng, [&] { plain.train_step(vec(d)); });

        const std::size_t order = 1 + rng() % 3;
        const PredictiveLayout layout{order, std::max<std::size_t>(1, d / order), 1};
        auto sample = [&] { return RegressorSample{vec(layout.input_size()), vec(layout.output_size())}; };
        auto pred = PredictiveGwrNetwork::init(sample(), sample(), layout, p);
        PrototypeGraph& qg = pred.mutable_graph();
        grow(qg, target, rng, [&] { pred.train_step(sample()); });
        max_neurons = std::max({max_neurons, pg.neuron_count(), qg.neuron_count()});

        for (int i = 0; i < 1000; ++i) {
            // Every tenth query sits exactly on a prototype.
            auto q = vec(d);
            if (i % 10 == 0) {
                const auto w = pg.row(rng() % pg.neuron_count());
                q.assign(w.begin(), w.end());
            }
            const auto [b, s] = oracle(pg, q);
            const auto m = plain.find_bmus(q);
            mismatches += (m.best != b || m.second != s || pg.find_best(q).id != b);

            auto r = vec(layout.input_size());
            if (i % 10 == 0) {
                const auto w = qg.row(rng() % qg.neuron_count()).first(layout.input_size());
                r.assign(w.begin(), w.end());
            }
            const auto [pb, ps] = oracle(qg, r);
            const auto pm = pred.find_bmus(r);
            mismatches += (pm.best != pb || pm.second != ps);
            queries += 2;
        }
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < 10.0 && max_neurons <= 100,
            std::to_string(queries) + " queries on 50 GWR + 50 P-GWR networks (up to " + std::to_string(max_neurons) +
                " neurons), " + std::to_string(mismatches) + " mismatches, " + num(t) + " s"};
}

// ---------------------------------------------------------------- 2

Outcome criterion_firing() {
    const GwrParams p;
    const double target = p.firing_fixed_point();
    bool bounded = true;
    std::optional<std::size_t> reached;
    double h = 1.0;
    for (std::size_t i = 1; i <= 200; ++i) {
        h = decay_firing(h, p.firing_rho_bmu, p.firing_kappa);
        bounded = bounded && h >= target - 1e-9 && h <= 1.0;
        if (!reached && std::abs(h - target) < 1e-6) reached = i;
    }
    return {bounded && reached.has_value(),
            "h* = " + num(target) + ", within 1e-6 after " + (reached ? std::to_string(*reached) : "never") +
                " iterations, bounded: " + (bounded ? "yes" : "no")};
}

// ---------------------------------------------------------------- 3

Outcome criterion_cycles() {
    bool pass = true;
    std::string detail;
    for (const std::size_t period : {4u, 7u}) {
        const auto r = gwr::testing::learn_cycle(period, 3, 8);
        pass = pass && r.one_step_mse < 1e-6 && r.recursive_mse < 1e-6;
        detail += "period " + std::to_string(period) + ": one-step " + num(r.one_step_mse) + ", horizon-8 " +
                  num(r.recursive_mse) + " (" + std::to_string(r.neurons) + " neurons, " + std::to_string(r.epochs) +
                  " epochs); ";
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// ---------------------------------------------------------------- 4

struct DeskRun {
    ExperimentConfig config;
    PreparedData data;
    IncrementalResult result;
    double seconds = 0.0;
};

Outcome criterion_incremental(const DeskRun& run) {
    const auto& avg = run.result.averaged;
    const std::size_t epochs = run.config.protocol.epochs_per_sequence;
    const std::size_t blocks = avg.size() / epochs;
    if (blocks < 2) return {false, "fewer than two patterns introduced"};
    const double after_two = avg[2 * epochs - 1].cpe;
    const double final_cpe = avg.back().cpe;
    const double ratio = final_cpe / after_two;

    // Spike: the first epoch of a block rises above the end of the previous
    // one. Decay: the block ends below its first epoch.
    std::size_t spiking = 0;
    std::size_t decaying = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const double first = avg[b * epochs].cpe;
        const double last = avg[(b + 1) * epochs - 1].cpe;
        spiking += b == 0 || first > avg[b * epochs - 1].cpe;
        decaying += last < first;
    }
    const bool pass = ratio <= 1.25 && spiking == blocks && decaying == blocks && run.seconds < 600.0;
    return {pass, std::to_string(blocks) + " patterns x " + std::to_string(epochs) + " epochs x " +
                      std::to_string(run.result.per_order.size()) + " orders: C.P.E. " + num(after_two) + " -> " +
                      num(final_cpe) + " (ratio " + num(ratio) + "), spike " + std::to_string(spiking) + "/" +
                      std::to_string(blocks) + ", decay " + std::to_string(decaying) + "/" + std::to_string(blocks) +
                      ", " + num(run.seconds) + " s"};
}

// ---------------------------------------------------------------- 5

Outcome criterion_threshold(const DeskRun& run) {
    ExperimentConfig c = run.config;
    c.sweeps.activation_thresholds = {0.5, 0.7, 0.9, 0.99};
    const auto rows = sweep_activation_threshold(c, run.data, run.result.hierarchies.front());
    bool increasing = true;
    std::string counts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) increasing = increasing && rows[i].neurons > rows[i - 1].neurons;
        counts += (i ? "/" : "") + std::to_string(rows[i].neurons);
    }
    const double ratio = rows.back().mse / rows.front().mse;
    return {increasing && ratio <= 0.5,
            "neurons " + counts + ", MSE(0.99)/MSE(0.5) = " + num(rows.back().mse) + "/" + num(rows.front().mse) +
                " = " + num(ratio)};
}

// ---------------------------------------------------------------- 6

Outcome criterion_horizon(const DeskRun& run) {
    ExperimentConfig c = run.config;
    c.sweeps.horizons.clear();
    for (std::size_t h = 1; h <= 20; ++h) c.sweeps.horizons.push_back(h);
    const auto rows = sweep_horizon(c, run.data, run.result.hierarchies.front());
    double running_max = 0.0;
    std::size_t violations = 0;
    for (const auto& r : rows) {
        violations += r.mae < 0.95 * running_max;
        running_max = std::max(running_max, r.mae);
    }
    const double ratio = rows.back().mae / rows.front().mae;
    return {violations == 0 && ratio <= 5.0,
            "MAE(1) = " + num(rows.front().mae) + ", MAE(20) = " + num(rows.back().mae) + " (ratio " + num(ratio) +
                "), " + std::to_string(violations) + " drops beyond 5%"};
}

// ---------------------------------------------------------------- 7

Outcome criterion_loss(const fs::path& configs) {
    const auto t0 = Clock::now();
    const auto c = load_experiment_config(configs / "loss.json");
    const auto data = prepare_data(c, 1);
    const auto rows = sweep_data_loss(c, data, 1);
    const std::vector<double> expected = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::map<double, double> mse;
    std::vector<double> emitted;
    for (const auto& r : rows) {
        mse[r.loss_fraction] = r.mse;
        emitted.push_back(r.loss_fraction);
    }
    if (emitted != expected) return {false, "curve does not cover the required loss fractions"};
    const double m0 = mse[0.0], m30 = mse[0.3], m95 = mse[0.95];
    return {m30 <= 1.5 * m0 && m95 > m30,
            "MSE 0% " + num(m0) + ", 30% " + num(m30) + " (ratio " + num(m30 / m0) + "), 95% " + num(m95) + ", " +
                std::to_string(rows.size()) + " fractions, " + num(seconds_since(t0)) + " s"};
}

// ---------------------------------------------------------------- 8

Outcome criterion_delay(const DeskRun& run) {
    ExperimentConfig c = run.config;
    c.delay.fixed = {600.0, 0.0, 100.0};
    const auto rows = run_delay_demo(c, run.data, run.result.hierarchies.front(), 1);
    std::map<std::string, std::pair<double, double>> per_pattern;  // summed mae, baseline
    for (const auto& r : rows) {
        if (r.mode != DelayMode::Fixed) continue;
        if (r.horizon_frames != 6) return {false, "fixed delay horizon is not 6 frames"};
        per_pattern[r.pattern].first += r.report.mae;
        per_pattern[r.pattern].second += r.report.baseline_mae;
    }
    std::size_t better = 0;
    double worst = 0.0;
    for (const auto& [label, m] : per_pattern) {
        better += m.first < m.second;
        worst = std::max(worst, m.first / m.second);
    }

    // Selection against a brute-force argmin, ties to the smallest index.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    std::size_t mismatches = 0;
    for (int t = 0; t < 10000; ++t) {
        PredictionBuffer b;
        const std::size_t len = 1 + rng() % 7;
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0 && rng() % 5 == 0) {
                b.predictions.push_back(b.predictions[rng() % i]);
                continue;
            }
            std::vector<double> v(kJointCount);
            for (auto& x : v) x = n(rng);
            b.predictions.push_back(v);
        }
        std::vector<double> q(kJointCount);
        for (auto& x : q) x = n(rng);
        if (rng() % 5 == 0) q = b.predictions[rng() % len];
        std::size_t best = 0;
        double best_d = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            double d = 0.0;
            for (std::size_t k = 0; k < kJointCount; ++k) d += (q[k] - b.predictions[i][k]) * (q[k] - b.predictions[i][k]);
            if (i == 0 || d < best_d) {
                best = i;
                best_d = d;
            }
        }
        const auto choice = select_command(q, b);
        mismatches += choice.index != best || choice.command != b.predictions[best];
    }
    return {!per_pattern.empty() && better == per_pattern.size() && mismatches == 0,
            "compensated beats pass-through on " + std::to_string(better) + "/" + std::to_string(per_pattern.size()) +
                " patterns (worst MAE ratio " + num(worst) + "); selection mismatches " + std::to_string(mismatches) +
                "/10000"};
}

// ---------------------------------------------------------------- 9

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
    }
    return files;
}

Outcome criterion_determinism(const DeskRun& run, const fs::path& cli, const fs::path& configs, const fs::path& work) {
    const fs::path config = configs / "smoke.json";
    fs::remove_all(work);
    auto invoke = [&](const std::string& verb, const fs::path& out, const std::string& extra) {
        const std::string cmd = "\"" + cli.string() + "\" " + verb + " \"" + config.string() + "\" --seed 7 --out-dir \"" +
                                out.string() + "\" " + extra + " > \"" + (work / "log.txt").string() + "\" 2>&1";
        return std::system(cmd.c_str()) == 0;
    };

    const std::vector<std::string> verbs = {"train", "sweep-at", "sweep-horizon", "sweep-loss", "delay-demo", "gen-data"};
    std::size_t identical = 0;
    std::size_t files = 0;
    std::string failures;
    fs::create_directories(work);
    for (const auto& verb : verbs) {
        const fs::path a = work / (verb + "_a");
        const fs::path b = work / (verb + "_b");
        if (!invoke(verb, a, "") || !invoke(verb, b, "")) {
            failures += " " + verb + "(exit)";
            continue;
        }
        const auto ta = read_tree(a);
        const auto tb = read_tree(b);
        files += ta.size();
        if (ta == tb && !ta.empty()) {
            ++identical;
        } else {
            failures += " " + verb;
        }
    }

    // A saved snapshot must reproduce the outputs of the hierarchy it came from.
    bool reuse = invoke("sweep-horizon", work / "reuse", "--hierarchy \"" + (work / "train_a" / "hierarchy.gwrh").string() + "\"");
    if (reuse) {
        const auto fresh = read_tree(work / "sweep-horizon_a");
        const auto loaded = read_tree(work / "reuse");
        reuse = fresh.at("sweep_horizon.csv") == loaded.at("sweep_horizon.csv");
    }

    // Lossless round trip of the desk-scale hierarchy and its networks.
    const Hierarchy& h = run.result.hierarchies.front();
    std::stringstream first;
    h.save(first);
    const std::string text = first.str();
    std::stringstream in(text);
    const Hierarchy back = Hierarchy::load(in);
    std::stringstream second;
    back.save(second);
    std::stringstream net_text;
    h.predictor()->save(net_text);
    const bool snapshot = back == h && second.str() == text &&
                          PredictiveGwrNetwork::load(net_text) == *h.predictor();

    const bool pass = identical == verbs.size() && reuse && snapshot;
    return {pass, std::to_string(identical) + "/" + std::to_string(verbs.size()) + " CLI verbs bit-identical across runs (" +
                      std::to_string(files) + " files)" + (failures.empty() ? "" : ", differing:" + failures) +
                      "; snapshot reuse " + (reuse ? "identical" : "differs") + "; hierarchy round trip " +
                      (snapshot ? "lossless" : "lossy")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    fs::path cli;
    fs::path configs;
    fs::path work = fs::temp_directory_path() / "gwrmotion_acceptance";
    std::vector<int> only;
    app.add_option("--cli", cli, "path to the gwrmotion executable")->required();
    app.add_option("--configs", configs, "directory holding desk.json, loss.json and smoke.json")->required();
    app.add_option("--work", work, "scratch directory for CLI runs");
    app.add_option("--only", only, "run only these criteria");
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

    std::optional<DeskRun> desk;
    auto desk_run = [&]() -> const DeskRun& {
        if (!desk) {
            DeskRun r;
            r.config = load_experiment_config(configs / "desk.json");
            const auto t0 = Clock::now();
            r.data = prepare_data(r.config, 1);
            r.result = run_incremental(r.config, r.data, 1);
            r.seconds = seconds_since(t0);
            desk = std::move(r);
        }
        return *desk;
    };

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"GWR oracle equivalence", criterion_oracle},
        {"firing dynamics", criterion_firing},
        {"exact-cycle prediction", criterion_cycles},
        {"incremental stability", [&] { return criterion_incremental(desk_run()); }},
        {"threshold sweep", [&] { return criterion_threshold(desk_run()); }},
        {"horizon sweep", [&] { return criterion_horizon(desk_run()); }},
        {"data-loss robustness", [&] { return criterion_loss(configs); }},
        {"delay compensation", [&] { return criterion_delay(desk_run()); }},
        {"determinism and persistence", [&] { return criterion_determinism(desk_run(), cli, configs, work); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        if (!wanted(k)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", k, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
