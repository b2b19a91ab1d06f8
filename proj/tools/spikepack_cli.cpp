// spikepack: experiment driver for the packed-spike neuron library.
//
// Subcommands: equiv, mi, train, convert, infer, simulate, report.
// Every run echoes its effective configuration into the output directory as
// run_config.txt (CLI11 INI syntax, reloadable via --config). Reports are CSV
// or JSON per --format. Exit codes: 0 success, 1 property violation, 2 usage,
// 3 I/O.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikepack/converter.hpp"
#include "spikepack/info_metrics.hpp"
#include "spikepack/io.hpp"
#include "spikepack/network.hpp"
#include "spikepack/neurons.hpp"
#include "spikepack/neurosim.hpp"
#include "spikepack/spike_tensor.hpp"
#include "spikepack/synthetic.hpp"
#include "spikepack/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace spikepack;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format = "csv";  // csv | json
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << values[i];
    }
    return os.str();
}

// Effective run configuration, echoed so a run can be replayed byte for byte.
// The output directory itself is deliberately omitted: replaying into a fresh
// directory must produce identical files.
void echo_config(const Globals& g, const std::string& cmd,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
    fs::create_directories(g.out_dir);
    std::ofstream os(fs::path(g.out_dir) / "run_config.txt");
    if (!os) throw std::runtime_error("cannot write run_config.txt");
    os << "seed=" << g.seed << "\n";
    os << "format=" << g.format << "\n";
    os << "[" << cmd << "]\n";
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
}

// One tabular report, rendered as CSV or as a JSON array of row objects.
void write_table(const Globals& g, const std::string& stem,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    const fs::path base = fs::path(g.out_dir) / stem;
    if (g.format == "csv") {
        std::ofstream os(base.string() + ".csv");
        if (!os) throw std::runtime_error("cannot write report: " + base.string());
        os << join(header) << "\n";
        for (const auto& row : rows) os << join(row) << "\n";
    } else {
        ordered_json j = ordered_json::array();
        for (const auto& row : rows) {
            ordered_json obj;
            for (std::size_t i = 0; i < header.size() && i < row.size(); ++i)
                obj[header[i]] = row[i];
            j.push_back(std::move(obj));
        }
        std::ofstream os(base.string() + ".json");
        if (!os) throw std::runtime_error("cannot write report: " + base.string());
        os << j.dump(2) << "\n";
    }
}

std::uint8_t container_kind(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::size_t steps;
    double tau;
    std::uint32_t layers;
    return spikepack::detail::read_container_header(is, &steps, &tau, &layers);
}

NetworkSpec make_snn_mlp(std::size_t in_features, const std::vector<std::size_t>& hidden,
                         std::size_t classes, std::size_t steps, double tau, double theta,
                         std::uint64_t seed) {
    NetworkSpec net;
    net.steps = steps;
    net.tau = tau;
    std::mt19937_64 rng(seed);
    std::size_t fan_in = in_features;
    std::vector<std::size_t> widths = hidden;
    widths.push_back(classes);
    for (std::size_t l = 0; l < widths.size(); ++l) {
        LayerSpec layer;
        layer.kind = LayerKind::Dense;
        layer.in_features = fan_in;
        layer.out_features = widths[l];
        layer.in_shape = {fan_in, 1, 1};
        layer.bias.assign(widths[l], 0.0);
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        layer.weights.resize(widths[l] * fan_in);
        for (double& w : layer.weights) w = init(rng);
        if (l + 1 < widths.size()) layer.theta_out.assign(widths[l], theta);
        fan_in = widths[l];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// --- equiv ---

struct EquivOpts {
    std::size_t cases = 100000;
    std::vector<double> taus{1.5, 2.0, 3.0};
    std::size_t max_steps = 16;
    std::string comparator = "at-least";
    double theta = 1.0;
    bool exhaustive_roundtrip = false;
};

int run_equiv(const Globals& g, const EquivOpts& o) {
    for (double tau : o.taus)
        if (!(tau > 1.0)) throw CLI::ValidationError("--tau", "tau must exceed 1");
    if (!(o.theta > 0.0)) throw CLI::ValidationError("--theta", "theta must be positive");
    if (o.max_steps < 1 || o.max_steps > kMaxTimeSteps)
        throw CLI::ValidationError("--max-steps", "time steps must be in [1, 64]");
    const Comparator cmp = o.comparator == "strictly-greater" ? Comparator::StrictlyGreater
                                                              : Comparator::AtLeast;
    echo_config(g, "equiv",
                {{"cases", std::to_string(o.cases)},
                 {"tau", join(o.taus)},
                 {"max-steps", std::to_string(o.max_steps)},
                 {"comparator", o.comparator},
                 {"theta", num(o.theta)},
                 {"exhaustive-roundtrip", o.exhaustive_roundtrip ? "true" : "false"}});

    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::size_t mismatches = 0;
    std::vector<std::vector<std::string>> counterexamples;
    for (std::size_t i = 0; i < o.cases; ++i) {
        NeuronConfig cfg;
        cfg.tau = o.taus[rng() % o.taus.size()];
        cfg.steps = 1 + rng() % o.max_steps;
        cfg.theta = {o.theta};
        cfg.comparator = cmp;
        const double range = TemporalWeights::make(cfg.tau, cfg.steps).sum();
        double v_g;
        if (rng() % 4 == 0) {
            // exact code points stress the comparator boundary
            v_g = o.theta * std::floor(unit(rng) * range);
        } else {
            v_g = o.theta * range * (unit(rng) * 1.2 - 0.1);
        }
        const PackedSpikes serial = spikepack_decode_serial({v_g}, cfg);
        const PackedSpikes parallel = spikepack_quantize_parallel({v_g}, cfg);
        if (serial.bits[0] != parallel.bits[0]) {
            ++mismatches;
            if (counterexamples.size() < 16)
                counterexamples.push_back({"serial-vs-parallel", num(cfg.tau),
                                           std::to_string(cfg.steps), num(v_g),
                                           std::to_string(serial.bits[0]),
                                           std::to_string(parallel.bits[0])});
        }
    }

    // round-trip over the integer lattice k * theta, tau = 2
    std::size_t rt_cases = 0;
    std::size_t rt_failures = 0;
    const std::size_t rt_max = o.exhaustive_roundtrip ? 12 : 8;
    for (std::size_t t = 1; t <= rt_max; ++t) {
        NeuronConfig cfg;
        cfg.tau = 2.0;
        cfg.steps = t;
        cfg.theta = {o.theta};
        cfg.comparator = cmp;
        const TemporalWeights ladder = TemporalWeights::make(2.0, t);
        const std::uint64_t limit = std::uint64_t{1} << t;
        for (std::uint64_t k = 0; k < limit; ++k) {
            ++rt_cases;
            const PackedSpikes word =
                spikepack_quantize_parallel({static_cast<double>(k) * o.theta}, cfg);
            const double back = evaluate_word(word.bits[0], ladder);
            if (back != static_cast<double>(k)) {
                ++rt_failures;
                if (counterexamples.size() < 16)
                    counterexamples.push_back({"round-trip", "2", std::to_string(t),
                                               num(static_cast<double>(k) * o.theta),
                                               std::to_string(k), num(back)});
            }
        }
    }

    write_table(g, "equiv_report",
                {"check", "tau", "steps", "v_g", "expected", "actual"}, counterexamples);
    write_table(g, "equiv_summary",
                {"check", "cases", "failures"},
                {{"serial-vs-parallel", std::to_string(o.cases), std::to_string(mismatches)},
                 {"round-trip", std::to_string(rt_cases), std::to_string(rt_failures)}});
    std::cout << mismatches << " mismatches / " << o.cases << " cases\n";
    std::cout << rt_failures << " round-trip failures / " << rt_cases << " cases\n";
    return mismatches + rt_failures == 0 ? 0 : 1;
}

// --- mi ---

struct MiOpts {
    std::vector<std::size_t> pre_neurons{16};
    std::vector<std::size_t> steps{16};
    double spike_prob = 0.5;
    double sigma2 = 1.0;
    double tau = 2.0;
    std::size_t samples = 100000;
    double theta = 0.0;  // 0 = six-sigma rule
    double lif_theta = 1.0;
    bool skip_mc = false;
};

int run_mi(const Globals& g, const MiOpts& o) {
    if (o.samples == 0) throw CLI::ValidationError("--samples", "sample budget must be positive");
    echo_config(g, "mi",
                {{"pre-neurons", join(o.pre_neurons)},
                 {"steps", join(o.steps)},
                 {"spike-prob", num(o.spike_prob)},
                 {"sigma2", num(o.sigma2)},
                 {"tau", num(o.tau)},
                 {"samples", std::to_string(o.samples)},
                 {"theta", num(o.theta)},
                 {"lif-theta", num(o.lif_theta)},
                 {"skip-mc", o.skip_mc ? "true" : "false"}});

    std::vector<std::vector<std::string>> rows;
    for (std::size_t n : o.pre_neurons)
        for (std::size_t t : o.steps) {
            MiExperimentConfig cfg;
            cfg.pre_neurons = n;
            cfg.steps = t;
            cfg.spike_prob = o.spike_prob;
            cfg.weight_variance = o.sigma2;
            cfg.tau = o.tau;
            cfg.samples = o.samples;
            cfg.seed = g.seed;
            cfg.lif_theta = o.lif_theta;
            if (o.theta > 0.0) {
                cfg.theta_rule = ThetaRule::Explicit;
                cfg.theta_explicit = o.theta;
            }
            const double analytic_sp = analytic_mi_spikepack(cfg);
            const double lif_bound = analytic_mi_lif_bound(cfg, cfg.lif_theta);
            // a 2^T-word alphabet needs on the order of 2^T * 16 draws
            const bool low_budget =
                t >= 16 && o.samples < (std::size_t{1} << std::min<std::size_t>(t, 20)) * 16;
            if (low_budget)
                std::cerr << "warning: sample budget " << o.samples
                          << " is low for T=" << t << "\n";
            std::string mc_sp = "", mc_sp_err = "", mc_lif = "", mc_lif_err = "";
            if (!o.skip_mc) {
                const MiEstimate sp = monte_carlo_mi(cfg, MiModel::SpikePack);
                const MiEstimate lif = monte_carlo_mi(cfg, MiModel::Lif);
                mc_sp = num(sp.bits);
                mc_sp_err = num(sp.stderr_bits);
                mc_lif = num(lif.bits);
                mc_lif_err = num(lif.stderr_bits);
            }
            rows.push_back({std::to_string(n), std::to_string(t), num(resolve_theta(cfg)),
                            num(analytic_sp), num(lif_bound), mc_sp, mc_sp_err, mc_lif,
                            mc_lif_err, low_budget ? "1" : "0"});
        }
    write_table(g, "mi_report",
                {"pre_neurons", "steps", "theta", "analytic_spikepack_bits", "lif_bound_bits",
                 "mc_spikepack_bits", "mc_spikepack_stderr", "mc_lif_bits", "mc_lif_stderr",
                 "low_budget"},
                rows);
    return 0;
}

// --- train ---

struct TrainOpts {
    std::string kind = "snn";  // snn | ann
    std::size_t classes = 3;
    std::size_t per_class = 200;
    double radius = 3.0;
    double spread = 0.6;
    std::vector<std::size_t> hidden{16};
    std::size_t steps = 8;
    double tau = 2.0;
    double theta = 0.5;
    double lr = 0.05;
    std::size_t epochs = 40;
    std::size_t batch = 16;
    double train_frac = 0.8;
    std::string model_out = "model.bin";
    std::string data_out = "dataset.csv";
};

int run_train(const Globals& g, const TrainOpts& o) {
    if (o.kind != "snn" && o.kind != "ann")
        throw CLI::ValidationError("--kind", "kind must be snn or ann");
    if (!(o.train_frac > 0.0 && o.train_frac < 1.0))
        throw CLI::ValidationError("--train-frac", "train fraction must lie in (0, 1)");
    echo_config(g, "train",
                {{"kind", o.kind},
                 {"classes", std::to_string(o.classes)},
                 {"per-class", std::to_string(o.per_class)},
                 {"radius", num(o.radius)},
                 {"spread", num(o.spread)},
                 {"hidden", join(o.hidden)},
                 {"steps", std::to_string(o.steps)},
                 {"tau", num(o.tau)},
                 {"theta", num(o.theta)},
                 {"lr", num(o.lr)},
                 {"epochs", std::to_string(o.epochs)},
                 {"batch", std::to_string(o.batch)},
                 {"train-frac", num(o.train_frac)},
                 {"model-out", o.model_out},
                 {"data-out", o.data_out}});

    const Dataset data = make_blobs(o.classes, o.per_class, o.radius, o.spread, g.seed);
    const std::size_t split =
        static_cast<std::size_t>(o.train_frac * static_cast<double>(data.size()));
    const Dataset train = dataset_slice(data, 0, split);
    const Dataset test = dataset_slice(data, split, data.size());
    save_csv_dataset((fs::path(g.out_dir) / o.data_out).string(), data);

    TrainHyper hyper{o.lr, o.epochs, o.batch, g.seed};
    double train_acc = 0.0, test_acc = 0.0;
    if (o.kind == "ann") {
        const AnnSpec initial = make_mlp({2, 1, 1}, o.hidden, o.classes, g.seed + 1);
        const AnnSpec ann = train_ann(initial, train, hyper);
        save_ann((fs::path(g.out_dir) / o.model_out).string(), ann);
        train_acc = ann_accuracy(ann, train);
        test_acc = ann_accuracy(ann, test);
    } else {
        const NetworkSpec initial =
            make_snn_mlp(2, o.hidden, o.classes, o.steps, o.tau, o.theta, g.seed + 1);
        const TrainResult result = train_toy(initial, train, hyper);
        save_network((fs::path(g.out_dir) / o.model_out).string(), result.net);
        save_loss_curve_csv((fs::path(g.out_dir) / "loss_curve.csv").string(), result.curve);
        train_acc = result.curve.back().accuracy;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const ForwardTrace fwd = network_forward(test.features[i], result.net);
            const std::size_t pred = static_cast<std::size_t>(
                std::max_element(fwd.logits.begin(), fwd.logits.end()) - fwd.logits.begin());
            if (pred == test.labels[i]) ++correct;
        }
        test_acc = static_cast<double>(correct) / static_cast<double>(test.size());
    }
    write_table(g, "train_report", {"kind", "train_samples", "test_samples", "train_accuracy",
                                    "test_accuracy"},
                {{o.kind, std::to_string(train.size()), std::to_string(test.size()),
                  num(train_acc), num(test_acc)}});
    std::cout << "train accuracy " << train_acc << ", test accuracy " << test_acc << "\n";
    return 0;
}

// --- convert ---

struct ConvertOpts {
    std::string ann_path;
    std::string data_path;
    std::string mode = "spikepack";  // spikepack | lif
    std::size_t steps = 8;
    double tau = 2.0;
    double percentile = 99.9;
    double calib_frac = 0.1;
    double lif_tau = 1000.0;
    std::string model_out = "snn.bin";
};

int run_convert(const Globals& g, const ConvertOpts& o) {
    if (o.mode != "spikepack" && o.mode != "lif")
        throw CLI::ValidationError("--mode", "mode must be spikepack or lif");
    if (!(o.calib_frac > 0.0 && o.calib_frac <= 1.0))
        throw CLI::ValidationError("--calib-frac", "calibration fraction must lie in (0, 1]");
    echo_config(g, "convert",
                {{"ann", o.ann_path},
                 {"data", o.data_path},
                 {"mode", o.mode},
                 {"steps", std::to_string(o.steps)},
                 {"tau", num(o.tau)},
                 {"percentile", num(o.percentile)},
                 {"calib-frac", num(o.calib_frac)},
                 {"lif-tau", num(o.lif_tau)},
                 {"model-out", o.model_out}});

    const AnnSpec ann = load_ann(o.ann_path);
    const Dataset data = load_csv_dataset(o.data_path);
    if (data.size() == 0) throw std::runtime_error("calibration dataset is empty: " + o.data_path);
    const std::size_t calib_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(o.calib_frac * static_cast<double>(data.size())));
    std::vector<std::vector<double>> calib(data.features.begin(),
                                           data.features.begin() + calib_n);

    CalibrationReport report;
    NetworkSpec net;
    if (o.mode == "spikepack") {
        report = calibrate(ann, calib, o.steps, o.tau, o.percentile);
        net = convert(ann, report, o.steps, o.tau);
    } else {
        report = calibrate_rate(ann, calib, o.steps, o.percentile);
        net = convert_lif(ann, report, o.steps, o.lif_tau);
    }
    save_network((fs::path(g.out_dir) / o.model_out).string(), net);
    {
        std::ofstream os(fs::path(g.out_dir) / "calibration.json");
        os << calibration_report_json(report).dump(2) << "\n";
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t l = 0; l < report.layers.size(); ++l)
        for (std::size_t c = 0; c < report.layers[l].size(); ++c) {
            const ChannelCalibration& cal = report.layers[l][c];
            rows.push_back({std::to_string(l), std::to_string(c), num(cal.max_activation),
                            num(cal.percentile_value), num(cal.theta),
                            num(cal.overflow_fraction), cal.dead ? "1" : "0"});
        }
    write_table(g, "convert_report",
                {"layer", "channel", "max_activation", "percentile_value", "theta",
                 "overflow_fraction", "dead"},
                rows);
    return 0;
}

// --- infer ---

struct InferOpts {
    std::string model;
    std::string data_path;
    std::string engine = "auto";  // auto | packed | lif | ann
    std::size_t limit = 0;
    std::string tag;
};

int run_infer(const Globals& g, const InferOpts& o) {
    if (o.engine != "auto" && o.engine != "packed" && o.engine != "lif" && o.engine != "ann")
        throw CLI::ValidationError("--engine", "engine must be auto, packed, lif or ann");
    echo_config(g, "infer",
                {{"model", o.model},
                 {"data", o.data_path},
                 {"engine", o.engine},
                 {"limit", std::to_string(o.limit)},
                 {"tag", o.tag}});

    const Dataset data = load_csv_dataset(o.data_path);
    if (data.size() == 0) throw std::runtime_error("dataset is empty: " + o.data_path);
    const std::size_t n = o.limit == 0 ? data.size() : std::min(o.limit, data.size());

    std::string engine = o.engine;
    if (engine == "auto") engine = container_kind(o.model) == 1 ? "ann" : "packed";

    std::size_t correct = 0;
    std::size_t steps = 1;
    std::vector<double> rate_sum;
    if (engine == "ann") {
        const AnnSpec ann = load_ann(o.model);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> logits = ann_forward(ann, data.features[i]);
            const std::size_t pred = static_cast<std::size_t>(
                std::max_element(logits.begin(), logits.end()) - logits.begin());
            if (pred == data.labels[i]) ++correct;
        }
    } else {
        const NetworkSpec net = load_network(o.model);
        steps = net.steps;
        rate_sum.assign(net.layers.size() > 0 ? net.layers.size() - 1 : 0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> logits;
            std::vector<double> rates;
            if (engine == "packed") {
                ForwardTrace fwd = network_forward(data.features[i], net);
                logits = std::move(fwd.logits);
                rates = std::move(fwd.firing_rates);
            } else {
                LifForwardTrace fwd = network_forward_lif(data.features[i], net);
                logits = std::move(fwd.logits);
                rates = std::move(fwd.firing_rates);
            }
            const std::size_t pred = static_cast<std::size_t>(
                std::max_element(logits.begin(), logits.end()) - logits.begin());
            if (pred == data.labels[i]) ++correct;
            for (std::size_t l = 0; l < rates.size(); ++l) rate_sum[l] += rates[l];
        }
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(n);
    std::string rates_joined;
    for (std::size_t l = 0; l < rate_sum.size(); ++l) {
        if (l) rates_joined += ';';
        rates_joined += num(rate_sum[l] / static_cast<double>(n));
    }
    const std::string stem = o.tag.empty() ? "infer_report" : "infer_report_" + o.tag;
    write_table(g, stem, {"engine", "steps", "samples", "accuracy", "mean_firing_rates"},
                {{engine, std::to_string(steps), std::to_string(n), num(accuracy),
                  rates_joined}});
    std::cout << "accuracy " << accuracy << " (" << engine << ", " << n << " samples)\n";
    return 0;
}

// --- simulate ---

struct SimOpts {
    std::string model;
    std::string data_path;
    std::string trace_path;
    std::size_t layer_index = 0;
    std::string neuron = "spikepack";  // spikepack | lif
    std::size_t limit = 16;
    SimConfig sim;
    std::string tag;
};

int run_simulate(const Globals& g, const SimOpts& o) {
    if (o.neuron != "spikepack" && o.neuron != "lif")
        throw CLI::ValidationError("--neuron", "neuron must be spikepack or lif");
    echo_config(g, "simulate",
                {{"model", o.model},
                 {"data", o.data_path},
                 {"trace", o.trace_path},
                 {"layer-index", std::to_string(o.layer_index)},
                 {"neuron", o.neuron},
                 {"limit", std::to_string(o.limit)},
                 {"pes", std::to_string(o.sim.num_pes)},
                 {"neuron-units", std::to_string(o.sim.neuron_units)},
                 {"detector-width", std::to_string(o.sim.detector_width)},
                 {"clock-hz", num(o.sim.clock_hz)},
                 {"tag", o.tag}});
    const NeuronKind kind = o.neuron == "lif" ? NeuronKind::Lif : NeuronKind::SpikePack;

    const NetworkSpec net = load_network(o.model);
    SimTrace trace;
    if (!o.trace_path.empty()) {
        std::ifstream is(o.trace_path, std::ios::binary);
        if (!is) throw std::runtime_error("cannot open: " + o.trace_path);
        const PackedSpikes spikes = read_packed(is);
        if (o.layer_index >= net.layers.size())
            throw CLI::ValidationError("--layer-index", "layer index out of range");
        trace = simulate_layer(spikes, net.layers[o.layer_index], o.sim, kind);
    } else {
        const Dataset data = load_csv_dataset(o.data_path);
        if (data.size() == 0) throw std::runtime_error("dataset is empty: " + o.data_path);
        const std::size_t n = o.limit == 0 ? data.size() : std::min(o.limit, data.size());
        std::vector<std::vector<double>> batch(data.features.begin(),
                                               data.features.begin() + n);
        trace = simulate_network(net, batch, o.sim, kind);
    }
    const std::string stem = o.tag.empty() ? "simulate_report" : "simulate_report_" + o.tag;
    if (g.format == "json") {
        std::ofstream os(fs::path(g.out_dir) / (stem + ".json"));
        if (!os) throw std::runtime_error("cannot write report");
        os << sim_trace_json(trace).dump(2) << "\n";
    } else {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t l = 0; l < trace.layers.size(); ++l) {
            const LayerSimBreakdown& b = trace.layers[l];
            rows.push_back({std::to_string(l), std::to_string(b.active_spikes),
                            std::to_string(b.encoder_cycles), std::to_string(b.pe_cycles),
                            std::to_string(b.neuron_cycles),
                            std::to_string(b.pipeline_fill_cycles), num(b.energy_joules)});
        }
        rows.push_back({"total", "", "", "", "", std::to_string(trace.total_cycles),
                        num(trace.energy_joules)});
        write_table(g, stem,
                    {"layer", "active_spikes", "encoder_cycles", "pe_cycles", "neuron_cycles",
                     "cycles", "energy_joules"},
                    rows);
    }
    std::cout << "cycles " << trace.total_cycles << ", latency " << trace.latency_seconds
              << " s, energy " << trace.energy_joules << " J\n";
    return 0;
}

// --- report ---

struct ReportOpts {
    std::string dir;
};

int run_report(const Globals& g, const ReportOpts& o) {
    const fs::path dir = o.dir.empty() ? fs::path(g.out_dir) : fs::path(o.dir);
    echo_config(g, "report", {{"dir", o.dir}});
    if (!fs::exists(dir)) throw std::runtime_error("no such directory: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path p = entry.path();
        if (p.extension() != ".csv") continue;
        if (p.filename().string().rfind("summary", 0) == 0) continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());

    const std::vector<std::string> wanted = {"steps",           "accuracy",
                                            "loss",            "cycles",
                                            "latency_seconds", "energy_joules"};
    std::vector<std::vector<std::string>> rows;
    for (const fs::path& p : files) {
        std::ifstream is(p);
        std::string line;
        std::vector<std::string> header;
        std::vector<std::string> last;
        std::size_t data_rows = 0;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::istringstream row(line);
            std::string cell;
            while (std::getline(row, cell, ',')) cells.push_back(cell);
            if (header.empty()) {
                header = std::move(cells);
            } else {
                last = std::move(cells);
                ++data_rows;
            }
        }
        std::vector<std::string> out{p.filename().string(), std::to_string(data_rows)};
        for (const std::string& col : wanted) {
            std::string value;
            for (std::size_t i = 0; i < header.size() && i < last.size(); ++i)
                if (header[i] == col) value = last[i];
            out.push_back(value);
        }
        rows.push_back(std::move(out));
    }
    write_table(g, "summary",
                {"file", "rows", "steps", "accuracy", "loss", "cycles", "latency_seconds",
                 "energy_joules"},
                rows);
    std::cout << rows.size() << " report files summarized\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"packed-spike neuron experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key-value config file; flags override file values");

    Globals g;
    const char* env_out = std::getenv("SPIKEPACK_OUT_DIR");
    g.out_dir = env_out ? env_out : ".";
    app.add_option("--seed", g.seed, "global RNG seed");
    app.add_option("--out", g.out_dir, "output directory for reports and artifacts");
    app.add_option("--format", g.format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));

    EquivOpts eq;
    auto* equiv = app.add_subcommand("equiv", "serial/parallel equivalence and round-trip suites")
                      ->configurable();
    equiv->add_option("--cases", eq.cases, "randomized case count");
    equiv->add_option("--tau", eq.taus, "decay factors to sample")->delimiter(',');
    equiv->add_option("--max-steps", eq.max_steps, "largest T to sample");
    equiv->add_option("--comparator", eq.comparator, "firing comparator")
        ->check(CLI::IsMember({"at-least", "strictly-greater"}));
    equiv->add_option("--theta", eq.theta, "base threshold");
    equiv->add_flag("--exhaustive-roundtrip", eq.exhaustive_roundtrip,
                    "round-trip every integer code up to T=12");

    MiOpts mi;
    auto* cmi = app.add_subcommand("mi", "mutual-information analysis, analytic and Monte Carlo")
                    ->configurable();
    cmi->add_option("--pre-neurons", mi.pre_neurons, "pre-synaptic neuron counts")->delimiter(',');
    cmi->add_option("--steps", mi.steps, "time-step counts")->delimiter(',');
    cmi->add_option("--spike-prob", mi.spike_prob, "input Bernoulli rate");
    cmi->add_option("--sigma2", mi.sigma2, "weight variance");
    cmi->add_option("--tau", mi.tau, "decay factor");
    cmi->add_option("--samples", mi.samples, "Monte Carlo sample budget");
    cmi->add_option("--theta", mi.theta, "explicit threshold (0 = six-sigma rule)");
    cmi->add_option("--lif-theta", mi.lif_theta, "LIF threshold");
    cmi->add_flag("--skip-mc", mi.skip_mc, "analytic columns only");

    TrainOpts tr;
    auto* ctr = app.add_subcommand("train", "train a toy model on synthetic blobs")
                    ->configurable();
    ctr->add_option("--kind", tr.kind, "snn (direct) or ann (conversion source)");
    ctr->add_option("--classes", tr.classes, "class count");
    ctr->add_option("--per-class", tr.per_class, "samples per class");
    ctr->add_option("--radius", tr.radius, "blob circle radius");
    ctr->add_option("--spread", tr.spread, "blob standard deviation");
    ctr->add_option("--hidden", tr.hidden, "hidden layer widths")->delimiter(',');
    ctr->add_option("--steps", tr.steps, "time steps (snn)");
    ctr->add_option("--tau", tr.tau, "decay factor (snn)");
    ctr->add_option("--theta", tr.theta, "hidden threshold (snn)");
    ctr->add_option("--lr", tr.lr, "learning rate");
    ctr->add_option("--epochs", tr.epochs, "epochs");
    ctr->add_option("--batch", tr.batch, "minibatch size");
    ctr->add_option("--train-frac", tr.train_frac, "training split fraction");
    ctr->add_option("--model-out", tr.model_out, "model file name (under --out)");
    ctr->add_option("--data-out", tr.data_out, "dataset file name (under --out)");

    ConvertOpts cv;
    auto* ccv = app.add_subcommand("convert", "calibrate and convert a trained ANN")
                    ->configurable();
    ccv->add_option("--ann", cv.ann_path, "ANN container path")->required();
    ccv->add_option("--data", cv.data_path, "calibration dataset CSV")->required();
    ccv->add_option("--mode", cv.mode, "spikepack or lif");
    ccv->add_option("--steps", cv.steps, "time steps");
    ccv->add_option("--tau", cv.tau, "decay factor");
    ccv->add_option("--percentile", cv.percentile, "activation clipping percentile");
    ccv->add_option("--calib-frac", cv.calib_frac, "fraction of the dataset used to calibrate");
    ccv->add_option("--lif-tau", cv.lif_tau, "LIF leak constant (lif mode)");
    ccv->add_option("--model-out", cv.model_out, "converted model file name (under --out)");

    InferOpts in;
    auto* cin_ = app.add_subcommand("infer", "run a model over a dataset")->configurable();
    cin_->add_option("--model", in.model, "model container path")->required();
    cin_->add_option("--data", in.data_path, "dataset CSV")->required();
    cin_->add_option("--engine", in.engine, "auto, packed, lif or ann");
    cin_->add_option("--limit", in.limit, "sample cap (0 = all)");
    cin_->add_option("--tag", in.tag, "report file name suffix");

    SimOpts sm;
    auto* csm = app.add_subcommand("simulate", "cycle/energy model of the event-driven processor")
                    ->configurable();
    csm->add_option("--model", sm.model, "SNN container path")->required();
    csm->add_option("--data", sm.data_path, "input batch CSV");
    csm->add_option("--trace", sm.trace_path, "packed spike stream (single-layer mode)");
    csm->add_option("--layer-index", sm.layer_index, "layer fed by --trace");
    csm->add_option("--neuron", sm.neuron, "spikepack or lif");
    csm->add_option("--limit", sm.limit, "input batch cap");
    csm->add_option("--pes", sm.sim.num_pes, "processing elements");
    csm->add_option("--neuron-units", sm.sim.neuron_units, "neuron units");
    csm->add_option("--detector-width", sm.sim.detector_width, "spike detector width");
    csm->add_option("--clock-hz", sm.sim.clock_hz, "clock frequency");
    csm->add_option("--tag", sm.tag, "report file name suffix");

    ReportOpts rp;
    auto* crp = app.add_subcommand("report", "summarize the CSV reports in a directory")
                    ->configurable();
    crp->add_option("--dir", rp.dir, "directory to scan (default: --out)");

    int rc = 0;
    equiv->callback([&] { rc = run_equiv(g, eq); });
    cmi->callback([&] { rc = run_mi(g, mi); });
    ctr->callback([&] { rc = run_train(g, tr); });
    ccv->callback([&] { rc = run_convert(g, cv); });
    cin_->callback([&] { rc = run_infer(g, in); });
    csm->callback([&] { rc = run_simulate(g, sm); });
    crp->callback([&] { rc = run_report(g, rp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}
