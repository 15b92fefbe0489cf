#include "gwr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "gwr/error.hpp"
#include "gwr/number_format.hpp"
#include "gwr/sequence_io.hpp"

namespace gwr {

using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

void read_double(const json& j, const char* key, double& out, const std::string& where) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    out = v.get<double>();
}

void read_count(const json& j, const char* key, std::size_t& out, const std::string& where) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + " must be a non-negative integer");
    out = v.get<std::size_t>();
}

GwrParams params_from_json(const json& j, GwrParams p, const std::string& where) {
    check_keys(j,
               {"activation_threshold", "firing_threshold", "learning_rate_bmu", "learning_rate_neighbor",
                "firing_rho_bmu", "firing_rho_neighbor", "firing_kappa", "max_edge_age", "max_epochs", "max_neurons"},
               where);
    read_double(j, "activation_threshold", p.activation_threshold, where);
    read_double(j, "firing_threshold", p.firing_threshold, where);
    read_double(j, "learning_rate_bmu", p.learning_rate_bmu, where);
    read_double(j, "learning_rate_neighbor", p.learning_rate_neighbor, where);
    read_double(j, "firing_rho_bmu", p.firing_rho_bmu, where);
    read_double(j, "firing_rho_neighbor", p.firing_rho_neighbor, where);
    read_double(j, "firing_kappa", p.firing_kappa, where);
    read_count(j, "max_edge_age", p.max_edge_age, where);
    read_count(j, "max_epochs", p.max_epochs, where);
    if (j.contains("max_neurons")) {
        if (j.at("max_neurons").is_null()) {
            p.max_neurons.reset();
        } else {
            std::size_t cap = 0;
            read_count(j, "max_neurons", cap, where);
            p.max_neurons = cap;
        }
    }
    return p;
}

json params_to_json(const GwrParams& p) {
    json j;
    j["activation_threshold"] = p.activation_threshold;
    j["firing_threshold"] = p.firing_threshold;
    j["learning_rate_bmu"] = p.learning_rate_bmu;
    j["learning_rate_neighbor"] = p.learning_rate_neighbor;
    j["firing_rho_bmu"] = p.firing_rho_bmu;
    j["firing_rho_neighbor"] = p.firing_rho_neighbor;
    j["firing_kappa"] = p.firing_kappa;
    j["max_edge_age"] = p.max_edge_age;
    j["max_epochs"] = p.max_epochs;
    j["max_neurons"] = p.max_neurons ? json(*p.max_neurons) : json(nullptr);
    return j;
}

DelayModel delay_from_json(const json& j, DelayModel d, const std::string& where) {
    check_keys(j, {"latency_ms", "jitter_ms", "frame_period_ms"}, where);
    read_double(j, "latency_ms", d.latency_ms, where);
    read_double(j, "jitter_ms", d.jitter_ms, where);
    read_double(j, "frame_period_ms", d.frame_period_ms, where);
    return d;
}

json delay_to_json(const DelayModel& d) {
    return {{"latency_ms", d.latency_ms}, {"jitter_ms", d.jitter_ms}, {"frame_period_ms", d.frame_period_ms}};
}

template <typename T>
std::vector<T> list_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be a list");
    std::vector<T> out;
    for (const auto& v : j) {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError(where + " entries must be numbers");
        } else {
            if (!v.is_number_unsigned()) throw ConfigError(where + " entries must be non-negative integers");
        }
        out.push_back(v.get<T>());
    }
    return out;
}

ExperimentConfig config_from_json(const json& root) {
    ExperimentConfig c;
    check_keys(root, {"dataset", "hierarchy", "protocol", "sweeps", "delay", "threads"}, "config");
    read_count(root, "threads", c.threads, "config");

    if (root.contains("dataset")) {
        const json& d = root.at("dataset");
        check_keys(d, {"source", "directory", "synthetic", "eval_sequences_per_pattern", "heldout_per_pattern"},
                   "dataset");
        if (d.contains("source")) {
            const std::string source = d.at("source").get<std::string>();
            if (source == "synthetic") {
                c.dataset.source = DatasetSource::Synthetic;
            } else if (source == "files") {
                c.dataset.source = DatasetSource::Files;
            } else {
                throw ConfigError("dataset.source must be 'synthetic' or 'files'");
            }
        }
        if (d.contains("directory")) c.dataset.directory = d.at("directory").get<std::string>();
        read_count(d, "eval_sequences_per_pattern", c.dataset.eval_sequences_per_pattern, "dataset");
        read_count(d, "heldout_per_pattern", c.dataset.heldout_per_pattern, "dataset");
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            const std::string where = "dataset.synthetic";
            check_keys(s, {"patterns", "subjects", "repetitions", "duration_s", "noise_std", "subject_jitter", "fps"},
                       where);
            SyntheticSuiteSpec& spec = c.dataset.synthetic;
            if (s.contains("patterns")) {
                if (!s.at("patterns").is_array()) throw ConfigError(where + ".patterns must be a list");
                spec.patterns.clear();
                for (const auto& label : s.at("patterns")) spec.patterns.push_back(MotionPattern::parse(label.get<std::string>()));
            }
            read_count(s, "subjects", spec.subjects, where);
            read_count(s, "repetitions", spec.repetitions, where);
            read_double(s, "duration_s", spec.duration_s, where);
            read_double(s, "noise_std", spec.noise_std, where);
            read_double(s, "subject_jitter", spec.subject_jitter, where);
            read_double(s, "fps", spec.fps, where);
        }
    }

    if (root.contains("hierarchy")) {
        const json& h = root.at("hierarchy");
        check_keys(h, {"frame_dim", "tau1", "tau2", "output_steps", "prediction_horizon", "layers"}, "hierarchy");
        read_count(h, "frame_dim", c.hierarchy.frame_dim, "hierarchy");
        read_count(h, "tau1", c.hierarchy.tau1, "hierarchy");
        read_count(h, "tau2", c.hierarchy.tau2, "hierarchy");
        read_count(h, "output_steps", c.hierarchy.output_steps, "hierarchy");
        read_count(h, "prediction_horizon", c.hierarchy.prediction_horizon, "hierarchy");
        if (h.contains("layers")) {
            const json& layers = h.at("layers");
            if (!layers.is_array() || layers.size() != 3) throw ConfigError("hierarchy.layers must list 3 layers");
            for (std::size_t l = 0; l < 3; ++l) {
                c.hierarchy.layers[l] =
                    params_from_json(layers[l], c.hierarchy.layers[l], "hierarchy.layers[" + std::to_string(l) + "]");
            }
        }
    }

    if (root.contains("protocol")) {
        const json& p = root.at("protocol");
        check_keys(p, {"epochs_per_sequence", "presentation_orders"}, "protocol");
        read_count(p, "epochs_per_sequence", c.protocol.epochs_per_sequence, "protocol");
        read_count(p, "presentation_orders", c.protocol.presentation_orders, "protocol");
    }

    if (root.contains("sweeps")) {
        const json& s = root.at("sweeps");
        check_keys(s, {"activation_thresholds", "horizons", "loss_fractions", "loss_chunk_frames", "loss_epochs"},
                   "sweeps");
        if (s.contains("activation_thresholds")) {
            c.sweeps.activation_thresholds = list_from_json<double>(s.at("activation_thresholds"), "sweeps.activation_thresholds");
        }
        if (s.contains("horizons")) c.sweeps.horizons = list_from_json<std::size_t>(s.at("horizons"), "sweeps.horizons");
        if (s.contains("loss_fractions")) {
            c.sweeps.loss_fractions = list_from_json<double>(s.at("loss_fractions"), "sweeps.loss_fractions");
        }
        read_count(s, "loss_chunk_frames", c.sweeps.loss_chunk_frames, "sweeps");
        read_count(s, "loss_epochs", c.sweeps.loss_epochs, "sweeps");
    }

    if (root.contains("delay")) {
        const json& d = root.at("delay");
        check_keys(d, {"fixed", "variable"}, "delay");
        if (d.contains("fixed")) c.delay.fixed = delay_from_json(d.at("fixed"), c.delay.fixed, "delay.fixed");
        if (d.contains("variable")) c.delay.variable = delay_from_json(d.at("variable"), c.delay.variable, "delay.variable");
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json root;
    json dataset;
    dataset["source"] = c.dataset.source == DatasetSource::Synthetic ? "synthetic" : "files";
    dataset["directory"] = c.dataset.directory.generic_string();
    dataset["eval_sequences_per_pattern"] = c.dataset.eval_sequences_per_pattern;
    dataset["heldout_per_pattern"] = c.dataset.heldout_per_pattern;
    json patterns = json::array();
    for (const auto& p : c.dataset.synthetic.patterns) patterns.push_back(p.label());
    dataset["synthetic"] = {{"patterns", patterns},
                            {"subjects", c.dataset.synthetic.subjects},
                            {"repetitions", c.dataset.synthetic.repetitions},
                            {"duration_s", c.dataset.synthetic.duration_s},
                            {"noise_std", c.dataset.synthetic.noise_std},
                            {"subject_jitter", c.dataset.synthetic.subject_jitter},
                            {"fps", c.dataset.synthetic.fps}};
    root["dataset"] = dataset;

    json layers = json::array();
    for (const auto& p : c.hierarchy.layers) layers.push_back(params_to_json(p));
    root["hierarchy"] = {{"frame_dim", c.hierarchy.frame_dim},
                         {"tau1", c.hierarchy.tau1},
                         {"tau2", c.hierarchy.tau2},
                         {"output_steps", c.hierarchy.output_steps},
                         {"prediction_horizon", c.hierarchy.prediction_horizon},
                         {"layers", layers}};
    root["protocol"] = {{"epochs_per_sequence", c.protocol.epochs_per_sequence},
                        {"presentation_orders", c.protocol.presentation_orders}};
    root["sweeps"] = {{"activation_thresholds", c.sweeps.activation_thresholds},
                      {"horizons", c.sweeps.horizons},
                      {"loss_fractions", c.sweeps.loss_fractions},
                      {"loss_chunk_frames", c.sweeps.loss_chunk_frames},
                      {"loss_epochs", c.sweeps.loss_epochs}};
    root["delay"] = {{"fixed", delay_to_json(c.delay.fixed)}, {"variable", delay_to_json(c.delay.variable)}};
    root["threads"] = c.threads;
    return root;
}

}  // namespace

void ExperimentConfig::validate() const {
    hierarchy.validate();
    if (hierarchy.frame_dim != kJointCount) {
        throw ConfigError("motion datasets carry " + std::to_string(kJointCount) + " joints per frame, hierarchy expects " +
                          std::to_string(hierarchy.frame_dim));
    }
    if (protocol.epochs_per_sequence < 1) throw ConfigError("epochs_per_sequence must be at least 1");
    if (protocol.presentation_orders < 1) throw ConfigError("presentation_orders must be at least 1");
    if (sweeps.loss_chunk_frames < 1) throw ConfigError("loss_chunk_frames must be at least 1");
    if (sweeps.loss_epochs < 1) throw ConfigError("loss_epochs must be at least 1");
    for (const double a : sweeps.activation_thresholds) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("swept activation thresholds must lie in (0, 1)");
    }
    for (const std::size_t h : sweeps.horizons) {
        if (h < 1) throw ConfigError("swept horizons must be at least 1");
    }
    if (hierarchy.output_steps > 1 && !sweeps.horizons.empty() &&
        *std::max_element(sweeps.horizons.begin(), sweeps.horizons.end()) > hierarchy.output_steps) {
        throw ConfigError("vector-mode prediction cannot be swept past output_steps");
    }
    for (const double f : sweeps.loss_fractions) {
        if (!(f >= 0.0 && f <= 0.95)) throw ConfigError("loss fractions must lie in [0, 0.95]");
    }
    if (dataset.source == DatasetSource::Files && dataset.directory.empty()) {
        throw ConfigError("dataset.directory is required for the files source");
    }
    if (dataset.source == DatasetSource::Synthetic) {
        if (dataset.synthetic.patterns.empty()) throw ConfigError("synthetic suite needs at least one pattern");
        if (dataset.synthetic.subjects < 1 || dataset.synthetic.repetitions < 1) {
            throw ConfigError("synthetic suite needs at least one subject and repetition");
        }
        if (!(dataset.synthetic.fps > 0.0)) throw ConfigError("synthetic fps must be positive");
    }
    delay.fixed.validate();
    delay.variable.validate();
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
    ExperimentConfig c;
    try {
        c = config_from_json(json::parse(json_text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str());
}

std::string dump_experiment_config(const ExperimentConfig& config) { return config_to_json(config).dump(2); }

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : config_to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- data

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t held = config.dataset.heldout_per_pattern;
    PreparedData out;
    if (config.dataset.source == DatasetSource::Synthetic) {
        SyntheticSuiteSpec spec = config.dataset.synthetic;
        const std::size_t train_reps = spec.repetitions;
        spec.repetitions += held;
        Dataset all = generate_suite(spec, seed);
        for (auto& p : all.patterns) {
            PatternDemos train{p.label, {}, {}, {}};
            PatternDemos test{p.label, {}, {}, {}};
            for (std::size_t i = 0; i < p.demos.size(); ++i) {
                PatternDemos& dst = p.repetitions[i] < train_reps ? train : test;
                dst.demos.push_back(std::move(p.demos[i]));
                dst.subjects.push_back(p.subjects[i]);
                dst.repetitions.push_back(p.repetitions[i]);
            }
            out.train.patterns.push_back(std::move(train));
            out.heldout.patterns.push_back(std::move(test));
        }
        return out;
    }

    Dataset all = load_dataset(config.dataset.directory);
    for (auto& p : all.patterns) {
        if (p.demos.size() <= held) {
            throw ConfigError("pattern '" + p.label + "' has " + std::to_string(p.demos.size()) +
                              " demonstrations, not enough to hold out " + std::to_string(held));
        }
        const std::size_t keep = p.demos.size() - held;
        PatternDemos train{p.label, {}, {}, {}};
        PatternDemos test{p.label, {}, {}, {}};
        for (std::size_t i = 0; i < p.demos.size(); ++i) {
            PatternDemos& dst = i < keep ? train : test;
            dst.demos.push_back(std::move(p.demos[i]));
            dst.subjects.push_back(p.subjects[i]);
            dst.repetitions.push_back(p.repetitions[i]);
        }
        out.train.patterns.push_back(std::move(train));
        out.heldout.patterns.push_back(std::move(test));
    }
    return out;
}

namespace {

std::size_t eval_count(const PatternDemos& p, std::size_t eval_per_pattern) {
    return eval_per_pattern == 0 ? p.demos.size() : std::min(eval_per_pattern, p.demos.size());
}

void require_pattern_index(const Dataset& data, std::size_t p) {
    if (p >= data.patterns.size()) {
        throw ConfigError("pattern index " + std::to_string(p) + " outside a dataset of " +
                          std::to_string(data.patterns.size()) + " patterns");
    }
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(var / static_cast<double>(v.size()));
    return m;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

// Mean of the per-sequence errors of one pattern.
PatternError evaluate_pattern(const Hierarchy& h, const PatternDemos& p, std::size_t eval_per_pattern,
                              std::size_t horizon) {
    PatternError sum;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < eval_count(p, eval_per_pattern); ++i) {
        const FrameSeries frames = FrameSeries::from(p.demos[i]);
        const SequenceForecast f = h.forecast(frames, horizon);
        const ForecastErrors e = score_forecast(h, frames, f, horizon);
        if (e.against_input.frames == 0) continue;
        sum.mse += e.against_input.mse;
        sum.pe += e.against_representation.mse;
        sum.mae += e.against_input.mae;
        ++counted;
    }
    if (counted == 0) {
        throw DomainError("pattern '" + p.label + "' has no sequence long enough to score a " +
                          std::to_string(horizon) + "-frame prediction");
    }
    const double n = static_cast<double>(counted);
    return {sum.mse / n, sum.pe / n, sum.mae / n};
}

}  // namespace

PatternError evaluate_patterns(const Hierarchy& hierarchy, const Dataset& data, std::span<const std::size_t> patterns,
                               std::size_t eval_per_pattern, std::size_t horizon) {
    if (patterns.empty()) throw DomainError("no patterns to evaluate");
    PatternError sum;
    for (const std::size_t p : patterns) {
        require_pattern_index(data, p);
        const PatternError e = evaluate_pattern(hierarchy, data.patterns[p], eval_per_pattern, horizon);
        sum.mse += e.mse;
        sum.pe += e.pe;
        sum.mae += e.mae;
    }
    const double n = static_cast<double>(patterns.size());
    return {sum.mse / n, sum.pe / n, sum.mae / n};
}

// ---------------------------------------------------------------- parallelism

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- incremental

std::vector<std::size_t> presentation_order(std::size_t patterns, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> order(patterns);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (k == 0) return order;
    std::mt19937_64 rng(derive_seed(seed, 500 + k));
    // Fisher-Yates with an explicit draw so the permutation does not depend
    // on the standard library's shuffle implementation.
    for (std::size_t i = patterns; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

Hierarchy train_incremental(const ExperimentConfig& config, const PreparedData& data, std::span<const std::size_t> order,
                            std::vector<MetricsRecord>* records, std::size_t order_index) {
    config.validate();
    if (order.empty()) throw ConfigError("presentation order is empty");
    Hierarchy h(config.hierarchy);
    const std::size_t horizon = config.hierarchy.prediction_horizon;
    const std::size_t epochs = config.protocol.epochs_per_sequence;
    std::vector<std::size_t> introduced;
    std::size_t global_epoch = 0;
    std::uint64_t steps = 0;

    for (std::size_t block = 0; block < order.size(); ++block) {
        const std::size_t p = order[block];
        require_pattern_index(data.train, p);
        const PatternDemos& demos = data.train.patterns[p];
        if (demos.demos.empty()) throw ConfigError("pattern '" + demos.label + "' has no training demonstrations");
        introduced.push_back(p);
        std::vector<double> first_trace;
        std::vector<double> last_trace;
        const std::size_t first_record = records ? records->size() : 0;

        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            std::vector<double> trace;
            for (const auto& seq : demos.demos) {
                const TrainingReport r = h.train_on_sequence(FrameSeries::from(seq), 1);
                steps += r.layers[0].steps + r.layers[1].steps + r.layers[2].steps;
                trace.insert(trace.end(), r.predictor_online_errors.begin(), r.predictor_online_errors.end());
            }
            if (epoch == 0) first_trace = trace;
            if (epoch + 1 == epochs) last_trace = std::move(trace);

            if (records) {
                MetricsRecord rec;
                rec.order = order_index;
                rec.epoch = global_epoch;
                rec.block = block;
                rec.pattern = demos.label;
                double mse_sum = 0.0;
                double pe_sum = 0.0;
                for (const std::size_t q : introduced) {
                    const PatternError e =
                        evaluate_pattern(h, data.train.patterns[q], config.dataset.eval_sequences_per_pattern, horizon);
                    rec.sequence_mse.push_back(e.mse);
                    mse_sum += e.mse;
                    pe_sum += e.pe;
                }
                rec.cpe = mse_sum / static_cast<double>(introduced.size());
                rec.pe = pe_sum / static_cast<double>(introduced.size());
                rec.neurons = h.neuron_counts();
                rec.train_steps = steps;
                records->push_back(std::move(rec));
            }
            ++global_epoch;
        }

        if (records) {
            const double threshold = 2.0 * median(last_trace);
            std::size_t windows = first_trace.size();
            for (std::size_t i = 0; i < first_trace.size(); ++i) {
                if (first_trace[i] <= threshold) {
                    windows = i;
                    break;
                }
            }
            (*records)[first_record].adaptation_windows = windows;
        }
    }
    return h;
}

IncrementalResult run_incremental(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed) {
    config.validate();
    const std::size_t orders = config.protocol.presentation_orders;
    IncrementalResult result;
    result.per_order.resize(orders);
    for (std::size_t k = 0; k < orders; ++k) {
        result.orders.push_back(presentation_order(data.train.patterns.size(), k, seed));
    }
    std::vector<std::optional<Hierarchy>> finals(orders);
    parallel_for(orders, config.threads, [&](std::size_t k) {
        finals[k].emplace(train_incremental(config, data, result.orders[k], &result.per_order[k], k));
    });
    for (auto& h : finals) result.hierarchies.push_back(std::move(*h));

    const std::size_t epochs = result.per_order.front().size();
    for (std::size_t e = 0; e < epochs; ++e) {
        AveragedRecord avg;
        avg.epoch = e;
        avg.block = result.per_order.front()[e].block;
        std::vector<double> cpe;
        std::vector<double> pe;
        std::array<std::vector<double>, 3> neurons;
        for (const auto& records : result.per_order) {
            cpe.push_back(records[e].cpe);
            pe.push_back(records[e].pe);
            for (std::size_t l = 0; l < 3; ++l) neurons[l].push_back(static_cast<double>(records[e].neurons[l]));
        }
        const Moments c = moments(cpe);
        const Moments p = moments(pe);
        avg.cpe = c.mean;
        avg.cpe_std = c.std;
        avg.pe = p.mean;
        avg.pe_std = p.std;
        for (std::size_t l = 0; l < 3; ++l) {
            const Moments n = moments(neurons[l]);
            avg.neurons[l] = n.mean;
            avg.neurons_std[l] = n.std;
        }
        result.averaged.push_back(avg);
    }
    return result;
}

// ---------------------------------------------------------------- sweeps

std::vector<ThresholdRow> sweep_activation_threshold(const ExperimentConfig& config, const PreparedData& data,
                                                     const Hierarchy& trained) {
    config.validate();
    if (config.sweeps.activation_thresholds.empty()) throw ConfigError("activation threshold list is empty");
    if (!trained.lower_layers_trained()) throw StateError("GWR1 and GWR2 must be trained before the threshold sweep");
    if (!(trained.config() == config.hierarchy)) {
        // Only the predictor parameters may differ; the lower layers must be compatible.
        const auto& a = trained.config();
        if (a.frame_dim != config.hierarchy.frame_dim || a.tau1 != config.hierarchy.tau1 ||
            a.tau2 != config.hierarchy.tau2 || a.output_steps != config.hierarchy.output_steps) {
            throw ConfigError("trained hierarchy does not match the configured architecture");
        }
    }
    for (const double a : config.sweeps.activation_thresholds) {
        GwrParams p = config.hierarchy.layers[2];
        p.activation_threshold = a;
        p.validate();
    }

    // Windows depend only on the frozen lower layers, so encode them once.
    std::vector<std::vector<std::vector<RegressorSample>>> windows(data.train.patterns.size());
    for (std::size_t p = 0; p < data.train.patterns.size(); ++p) {
        for (const auto& seq : data.train.patterns[p].demos) windows[p].push_back(trained.encode_windows(FrameSeries::from(seq)));
    }

    std::vector<std::size_t> all(data.train.patterns.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto& thresholds = config.sweeps.activation_thresholds;
    std::vector<ThresholdRow> rows(thresholds.size());
    parallel_for(thresholds.size(), config.threads, [&](std::size_t i) {
        Hierarchy h = trained;
        GwrParams p = config.hierarchy.layers[2];
        p.activation_threshold = thresholds[i];
        h.reset_predictor(p);
        for (std::size_t pattern = 0; pattern < windows.size(); ++pattern) {
            for (std::size_t epoch = 0; epoch < config.protocol.epochs_per_sequence; ++epoch) {
                for (const auto& w : windows[pattern]) h.train_predictor(w);
            }
        }
        rows[i].activation_threshold = thresholds[i];
        rows[i].neurons = h.neuron_counts()[2];
        rows[i].mse = evaluate_patterns(h, data.train, all, config.dataset.eval_sequences_per_pattern,
                                        config.hierarchy.prediction_horizon)
                          .mse;
    });
    return rows;
}

std::vector<HorizonRow> sweep_horizon(const ExperimentConfig& config, const PreparedData& data, const Hierarchy& trained) {
    config.validate();
    if (config.sweeps.horizons.empty()) throw ConfigError("horizon list is empty");
    if (!trained.trained()) throw StateError("hierarchy must be trained before the horizon sweep");
    for (const std::size_t h : config.sweeps.horizons) {
        if (h < 1) throw ConfigError("horizons must be at least 1");
    }
    const std::size_t max_h = *std::max_element(config.sweeps.horizons.begin(), config.sweeps.horizons.end());

    // Per-sequence stats for every horizon; sequences weigh equally.
    std::vector<std::vector<ErrorStats>> per_sequence;
    for (const auto& p : data.train.patterns) {
        for (std::size_t i = 0; i < eval_count(p, config.dataset.eval_sequences_per_pattern); ++i) {
            const FrameSeries frames = FrameSeries::from(p.demos[i]);
            const SequenceForecast f = trained.forecast(frames, max_h);
            std::vector<ErrorStats> stats;
            for (const std::size_t h : config.sweeps.horizons) stats.push_back(score_forecast(trained, frames, f, h).against_input);
            per_sequence.push_back(std::move(stats));
        }
    }

    std::vector<HorizonRow> rows;
    for (std::size_t k = 0; k < config.sweeps.horizons.size(); ++k) {
        HorizonRow row;
        row.horizon = config.sweeps.horizons[k];
        std::vector<double> mae;
        std::vector<double> mse;
        std::vector<double> spread;
        for (const auto& stats : per_sequence) {
            if (stats[k].frames == 0) continue;
            mae.push_back(stats[k].mae);
            mse.push_back(stats[k].mse);
            spread.push_back(stats[k].mae_std);
        }
        if (mae.empty()) {
            throw DomainError("no evaluation sequence is long enough for horizon " + std::to_string(row.horizon));
        }
        row.mae = moments(mae).mean;
        row.mse = moments(mse).mean;
        row.mae_std = moments(spread).mean;
        rows.push_back(row);
    }
    return rows;
}

std::vector<LossRow> sweep_data_loss(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed) {
    config.validate();
    const auto& fractions = config.sweeps.loss_fractions;
    if (fractions.empty()) throw ConfigError("loss fraction list is empty");
    for (const double f : fractions) {
        if (!(f >= 0.0 && f <= 0.95)) throw ConfigError("loss fractions must lie in [0, 0.95]");
    }
    for (const auto& p : data.train.patterns) {
        for (const auto& seq : p.demos) {
            if (seq.size() < config.sweeps.loss_chunk_frames) throw ConfigError("sequence shorter than one loss chunk");
        }
    }
    const std::size_t warmup = config.hierarchy.warmup_frames();
    const std::size_t patterns = data.train.patterns.size();

    struct Cell {
        double mse_sum = 0.0;
        std::size_t evaluated = 0;
        double achieved_sum = 0.0;
        std::size_t presentations = 0;
    };
    // One job per (fraction, pattern): a fresh hierarchy learns the pattern
    // for loss_epochs epochs and is scored on clean data after each epoch.
    std::vector<Cell> cells(fractions.size() * patterns);
    parallel_for(cells.size(), config.threads, [&](std::size_t job) {
        const std::size_t fi = job / patterns;
        const std::size_t p = job % patterns;
        const PatternDemos& demos = data.train.patterns[p];
        const std::size_t only[] = {p};
        Hierarchy h(config.hierarchy);
        Cell& cell = cells[job];
        for (std::size_t epoch = 0; epoch < config.sweeps.loss_epochs; ++epoch) {
            for (std::size_t d = 0; d < demos.demos.size(); ++d) {
                // The corruption seed ignores the fraction, so every fraction
                // draws from the same random streams.
                const std::uint64_t s = derive_seed(seed, 2'000'000 + (p * 1000 + d) * 1000 + epoch);
                const DropoutResult r = corrupt_dropout(demos.demos[d], fractions[fi], config.sweeps.loss_chunk_frames, s);
                cell.achieved_sum += r.achieved_fraction;
                ++cell.presentations;
                if (r.sequence.size() < warmup) continue;
                h.train_on_sequence(FrameSeries::from(r.sequence), 1);
            }
            if (!h.trained()) continue;
            cell.mse_sum += evaluate_patterns(h, data.train, only, config.dataset.eval_sequences_per_pattern,
                                              config.hierarchy.prediction_horizon)
                                .mse;
            ++cell.evaluated;
        }
    });

    std::vector<LossRow> rows;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        LossRow row;
        row.loss_fraction = fractions[fi];
        double mse_sum = 0.0;
        double achieved_sum = 0.0;
        std::size_t presentations = 0;
        for (std::size_t p = 0; p < patterns; ++p) {
            const Cell& cell = cells[fi * patterns + p];
            achieved_sum += cell.achieved_sum;
            presentations += cell.presentations;
            row.evaluated_epochs += cell.evaluated;
            if (cell.evaluated > 0) {
                mse_sum += cell.mse_sum / static_cast<double>(cell.evaluated);
                ++row.evaluated_patterns;
            }
        }
        row.achieved_fraction = achieved_sum / static_cast<double>(presentations);
        row.mse = row.evaluated_patterns ? mse_sum / static_cast<double>(row.evaluated_patterns)
                                         : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------- delay demo

std::vector<DelaySummaryRow> run_delay_demo(const ExperimentConfig& config, const PreparedData& data,
                                            const Hierarchy& trained, std::uint64_t seed) {
    config.validate();
    if (!trained.trained()) throw StateError("hierarchy must be trained before the delay demo");
    std::vector<DelaySummaryRow> rows;
    std::size_t index = 0;
    for (const auto& p : data.heldout.patterns) {
        for (std::size_t i = 0; i < p.demos.size(); ++i) {
            const MotionSequence& seq = p.demos[i];
            const FrameSeries frames = FrameSeries::from(seq);
            const std::string name = p.label + "_s" + std::to_string(p.subjects[i] + 1) + "_r" +
                                     std::to_string(p.repetitions[i] + 1);
            for (const DelayMode mode : {DelayMode::Fixed, DelayMode::Variable}) {
                const DelayModel& model = mode == DelayMode::Fixed ? config.delay.fixed : config.delay.variable;
                if (std::abs(model.frame_period_ms * seq.fps - 1000.0) > 1e-6) {
                    throw ConfigError("delay frame period " + format_exact(model.frame_period_ms) +
                                      " ms does not match sequence '" + name + "' at " + format_exact(seq.fps) + " fps");
                }
                DelaySummaryRow row;
                row.sequence = name;
                row.pattern = p.label;
                row.mode = mode;
                row.horizon_frames = model.horizon_frames();
                row.report = run_pipeline(trained, frames, model, mode, derive_seed(seed, 3'000'000 + index));
                rows.push_back(std::move(row));
            }
            ++index;
        }
    }
    if (rows.empty()) throw ConfigError("no held-out demonstrations for the delay demo");
    return rows;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string fmt(double v) { return format_exact(v); }

}  // namespace

void write_incremental_order_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << "order,epoch,block,pattern,cpe,pe,neurons_gwr1,neurons_gwr2,neurons_pgwr,train_steps,adaptation_windows\n";
    for (const auto& r : records) {
        out << r.order << ',' << r.epoch << ',' << r.block << ',' << r.pattern << ',' << fmt(r.cpe) << ',' << fmt(r.pe)
            << ',' << r.neurons[0] << ',' << r.neurons[1] << ',' << r.neurons[2] << ',' << r.train_steps << ','
            << r.adaptation_windows << '\n';
    }
}

void write_incremental_sequences_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << "order,epoch,position,mse\n";
    for (const auto& r : records) {
        for (std::size_t k = 0; k < r.sequence_mse.size(); ++k) {
            out << r.order << ',' << r.epoch << ',' << k << ',' << fmt(r.sequence_mse[k]) << '\n';
        }
    }
}

void write_incremental_average_csv(std::ostream& out, const std::vector<AveragedRecord>& records) {
    out << "epoch,block,cpe,cpe_std,pe,pe_std,neurons_gwr1,neurons_gwr1_std,neurons_gwr2,neurons_gwr2_std,"
           "neurons_pgwr,neurons_pgwr_std\n";
    for (const auto& r : records) {
        out << r.epoch << ',' << r.block << ',' << fmt(r.cpe) << ',' << fmt(r.cpe_std) << ',' << fmt(r.pe) << ','
            << fmt(r.pe_std);
        for (std::size_t l = 0; l < 3; ++l) out << ',' << fmt(r.neurons[l]) << ',' << fmt(r.neurons_std[l]);
        out << '\n';
    }
}

void write_threshold_csv(std::ostream& out, const std::vector<ThresholdRow>& rows) {
    out << "activation_threshold,neurons,mse\n";
    for (const auto& r : rows) out << fmt(r.activation_threshold) << ',' << r.neurons << ',' << fmt(r.mse) << '\n';
}

void write_horizon_csv(std::ostream& out, const std::vector<HorizonRow>& rows) {
    out << "horizon,mae,mae_std,mse\n";
    for (const auto& r : rows) out << r.horizon << ',' << fmt(r.mae) << ',' << fmt(r.mae_std) << ',' << fmt(r.mse) << '\n';
}

void write_loss_csv(std::ostream& out, const std::vector<LossRow>& rows) {
    out << "loss_fraction,achieved_fraction,mse,evaluated_patterns,evaluated_epochs\n";
    for (const auto& r : rows) {
        out << fmt(r.loss_fraction) << ',' << fmt(r.achieved_fraction) << ',' << fmt(r.mse) << ','
            << r.evaluated_patterns << ',' << r.evaluated_epochs << '\n';
    }
}

void write_delay_summary_csv(std::ostream& out, const std::vector<DelaySummaryRow>& rows) {
    out << "sequence,pattern,mode,horizon_frames,rows,mae,baseline_mae,mse,baseline_mse\n";
    for (const auto& r : rows) {
        out << r.sequence << ',' << r.pattern << ',' << (r.mode == DelayMode::Fixed ? "fixed" : "variable") << ','
            << r.horizon_frames << ',' << r.report.rows.size() << ',' << fmt(r.report.mae) << ','
            << fmt(r.report.baseline_mae) << ',' << fmt(r.report.mse) << ',' << fmt(r.report.baseline_mse) << '\n';
    }
}

}  // namespace gwr
