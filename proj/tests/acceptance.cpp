// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.
//
// Criterion 10 drives the command-line binary named by SPIKEPACK_CLI_BIN.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "spikepack/converter.hpp"
#include "spikepack/info_metrics.hpp"
#include "spikepack/io.hpp"
#include "spikepack/network.hpp"
#include "spikepack/neurons.hpp"
#include "spikepack/neurosim.hpp"
#include "spikepack/synthetic.hpp"
#include "spikepack/training.hpp"

namespace fs = std::filesystem;
using namespace spikepack;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << std::fixed << v;
    return os.str();
}

// --- 1: serial/parallel equivalence ---

Outcome criterion_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double taus[] = {1.5, 2.0, 3.0};
    std::size_t mismatches = 0;
    const std::size_t cases = 100000;
    for (std::size_t i = 0; i < cases; ++i) {
        NeuronConfig cfg;
        cfg.tau = taus[rng() % 3];
        cfg.steps = 1 + rng() % 16;
        cfg.theta = {0.25 + unit(rng)};
        const double range = TemporalWeights::make(cfg.tau, cfg.steps).sum();
        double v_g;
        if (rng() % 4 == 0)
            v_g = cfg.theta[0] * std::floor(unit(rng) * range);
        else
            v_g = cfg.theta[0] * range * (unit(rng) * 1.2 - 0.1);
        if (spikepack_decode_serial({v_g}, cfg).bits[0] !=
            spikepack_quantize_parallel({v_g}, cfg).bits[0])
            ++mismatches;
    }
    const double dt = seconds_since(start);
    Outcome out;
    out.pass = mismatches == 0 && dt < 10.0;
    out.detail = std::to_string(mismatches) + " mismatches / " + std::to_string(cases) +
                 " cases, " + fmt(dt, 2) + " s";
    return out;
}

// --- 2: round-trip exactness ---

Outcome criterion_roundtrip() {
    std::size_t failures = 0;
    std::size_t cases = 0;
    const double theta = 0.5;  // dyadic, so k * theta is exactly representable
    for (std::size_t t = 1; t <= 12; ++t) {
        NeuronConfig cfg;
        cfg.tau = 2.0;
        cfg.steps = t;
        cfg.theta = {theta};
        const TemporalWeights ladder = TemporalWeights::make(2.0, t);
        for (std::uint64_t k = 0; k < (std::uint64_t{1} << t); ++k) {
            ++cases;
            const PackedSpikes word =
                spikepack_quantize_parallel({static_cast<double>(k) * theta}, cfg);
            if (evaluate_word(word.bits[0], ladder) != static_cast<double>(k)) ++failures;
        }
    }
    Outcome out;
    out.pass = failures == 0;
    out.detail = std::to_string(failures) + " failures / " + std::to_string(cases) +
                 " integer codes, T <= 12";
    return out;
}

// --- 3: closed-form and Monte Carlo values for the reference configuration ---

Outcome criterion_reference_numbers() {
    const auto start = Clock::now();
    MiExperimentConfig cfg;
    cfg.pre_neurons = 16;
    cfg.steps = 16;
    cfg.spike_prob = 0.5;
    cfg.weight_variance = 1.0;
    cfg.tau = 2.0;
    cfg.samples = 1000000;
    cfg.seed = 7;

    const double analytic = analytic_mi_spikepack(cfg);
    const double bound = analytic_mi_lif_bound(cfg, 1.0);
    const MiEstimate mc = monte_carlo_mi(cfg, MiModel::SpikePack);
    const double dt = seconds_since(start);

    const bool analytic_ok = std::abs(analytic - 15.21) <= 0.01;
    const bool bound_ok = std::abs(bound - 14.096) <= 0.02;
    const bool mc_ok = std::abs(mc.bits - analytic) <= 0.15;
    Outcome out;
    out.pass = analytic_ok && bound_ok && mc_ok && dt < 120.0;
    out.detail = "analytic " + fmt(analytic) + " (target 15.21 +- 0.01: " +
                 (analytic_ok ? "ok" : "FAIL") + "), lif bound " + fmt(bound) +
                 " (target 14.096 +- 0.02: " + (bound_ok ? "ok" : "FAIL") +
                 "), mc " + fmt(mc.bits) + " (within 0.15 of analytic: " +
                 (mc_ok ? "ok" : "FAIL") + "), " + fmt(dt, 1) + " s";
    return out;
}

// --- 4: Monte Carlo ordering over the (N, T) grid ---

Outcome criterion_grid_ordering() {
    const auto start = Clock::now();
    Outcome out;
    std::string worst;
    for (std::size_t n : {4u, 8u, 16u})
        for (std::size_t t : {4u, 8u, 16u}) {
            MiExperimentConfig cfg;
            cfg.pre_neurons = n;
            cfg.steps = t;
            cfg.samples = 200000;
            cfg.seed = 13;
            const MiEstimate sp = monte_carlo_mi(cfg, MiModel::SpikePack);
            const MiEstimate lif = monte_carlo_mi(cfg, MiModel::Lif);
            if (!(sp.bits > lif.bits)) {
                out.pass = false;
                worst += " N=" + std::to_string(n) + ",T=" + std::to_string(t) + ": sp " +
                         fmt(sp.bits) + " <= lif " + fmt(lif.bits);
            }
        }
    const double dt = seconds_since(start);
    out.pass = out.pass && dt < 300.0;
    out.detail = out.pass ? "sp > lif at all 9 grid points, " + fmt(dt, 1) + " s"
                          : "ordering violated:" + worst + ", " + fmt(dt, 1) + " s";
    return out;
}

// --- shared conversion artifacts for criteria 5 and 8 ---

struct ToyConversion {
    AnnSpec folded;
    Dataset train, test;
    double ann_acc = 0.0;
};

ToyConversion build_toy_conversion() {
    ToyConversion toy;
    const Dataset data = make_blobs(3, 200, 3.0, 0.9, 17);
    toy.train = dataset_slice(data, 0, 480);
    toy.test = dataset_slice(data, 480, data.size());
    TrainHyper hyper;
    hyper.lr = 0.05;
    hyper.epochs = 80;
    hyper.batch = 16;
    hyper.seed = 5;
    const AnnSpec ann = train_ann(make_mlp({2, 1, 1}, {16}, 3, 9), toy.train, hyper);
    toy.folded = fold_ann(ann);
    toy.ann_acc = ann_accuracy(toy.folded, toy.test);
    return toy;
}

double snn_accuracy(const NetworkSpec& net, const Dataset& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace fwd = network_forward(data.features[i], net);
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(fwd.logits.begin(), fwd.logits.end()) - fwd.logits.begin());
        if (pred == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

Outcome criterion_conversion(const ToyConversion& toy) {
    const auto start = Clock::now();
    Outcome out;
    if (toy.ann_acc < 0.97) {
        out.pass = false;
        out.detail = "ann accuracy " + fmt(toy.ann_acc) + " below 0.97";
        return out;
    }
    const std::size_t calib_n = toy.train.size() / 10;
    const std::vector<std::vector<double>> calib(toy.train.features.begin(),
                                                 toy.train.features.begin() + calib_n);
    std::string curve = "ann " + fmt(toy.ann_acc);
    double prev = -1.0;
    double acc8 = 0.0;
    bool monotone = true;
    for (std::size_t t : {2u, 4u, 6u, 8u}) {
        const CalibrationReport report = calibrate(toy.folded, calib, t, 2.0, 99.9);
        const NetworkSpec net = convert(toy.folded, report, t, 2.0);
        const double acc = snn_accuracy(net, toy.test);
        curve += ", T=" + std::to_string(t) + " " + fmt(acc);
        if (acc + 1e-12 < prev) monotone = false;
        prev = acc;
        if (t == 8) acc8 = acc;
    }
    const double dt = seconds_since(start);
    const bool close = std::abs(toy.ann_acc - acc8) < 0.01;
    out.pass = monotone && close && dt < 120.0;
    out.detail = curve + (monotone ? "" : " (non-monotone)") +
                 (close ? "" : " (gap at T=8 exceeds 1%)") + ", " + fmt(dt, 1) + " s";
    return out;
}

// --- 6: straight-through gradient vs finite differences ---

Outcome criterion_gradients() {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unit(0.0, 2.0);
    std::uniform_real_distribution<double> gauss(-1.0, 1.0);
    double max_rel = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        NetworkSpec net;
        net.steps = 8;
        net.tau = 2.0;
        const std::size_t depth = 1 + rng() % 3;
        std::size_t fan_in = 1 + rng() % 5;
        for (std::size_t l = 0; l < depth; ++l) {
            LayerSpec layer;
            layer.kind = LayerKind::Dense;
            layer.in_features = fan_in;
            layer.out_features = 1 + rng() % 5;
            layer.in_shape = {fan_in, 1, 1};
            layer.weights.resize(layer.out_features * fan_in);
            layer.bias.resize(layer.out_features);
            for (double& w : layer.weights) w = gauss(rng);
            for (double& b : layer.bias) b = gauss(rng);
            if (l + 1 < depth) {
                layer.theta_out.resize(layer.out_features);
                for (double& th : layer.theta_out) th = 0.25 + std::abs(gauss(rng));
            }
            fan_in = layer.out_features;
            net.layers.push_back(std::move(layer));
        }
        std::vector<double> input(net.layers[0].in_features);
        for (double& v : input) v = unit(rng);
        const std::size_t label = rng() % net.layers.back().out_features;

        const TapedForward fwd = forward_with_tape(input, net, ForwardMode::Relaxed);
        std::vector<double> loss_grad;
        spikepack::detail::softmax_xent(fwd.logits, label, &loss_grad);
        const Gradients g = backward(loss_grad, fwd.tape, net);

        auto loss_at = [&] {
            const TapedForward f = forward_with_tape(input, net, ForwardMode::Relaxed);
            return spikepack::detail::softmax_xent(f.logits, label, nullptr);
        };
        const double h = 1e-5;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            for (std::size_t k = 0; k < std::min<std::size_t>(net.layers[l].weights.size(), 4);
                 ++k) {
                double& slot = net.layers[l].weights[k];
                const double saved = slot;
                slot = saved + h;
                const double up = loss_at();
                slot = saved - h;
                const double down = loss_at();
                slot = saved;
                const double fd = (up - down) / (2.0 * h);
                const double scale = std::max({1e-4, std::abs(fd), std::abs(g.weights[l][k])});
                max_rel = std::max(max_rel, std::abs(fd - g.weights[l][k]) / scale);
            }
        }
    }
    Outcome out;
    out.pass = max_rel < 1e-5;
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << max_rel;
    out.detail = "max relative error " + os.str() + " over 100 configurations";
    return out;
}

// --- 7: state footprint scaling in T ---

Outcome criterion_state_footprint() {
    NetworkSpec net;
    net.tau = 2.0;
    LayerSpec l1;
    l1.kind = LayerKind::Dense;
    l1.in_features = 8;
    l1.out_features = 32;
    l1.in_shape = {8, 1, 1};
    l1.weights.assign(256, 0.05);
    l1.bias.assign(32, 0.1);
    l1.theta_out.assign(32, 0.25);
    LayerSpec l2;
    l2.kind = LayerKind::Dense;
    l2.in_features = 32;
    l2.out_features = 4;
    l2.in_shape = {32, 1, 1};
    l2.weights.assign(128, 0.05);
    l2.bias.assign(4, 0.0);
    net.layers = {l1, l2};

    const std::vector<double> input{1, 2, 1, 3, 2, 1, 0.5, 2};
    const std::vector<std::size_t> ts{4, 8, 16, 32, 64};
    std::vector<double> packed_bytes, lif_bytes;
    for (std::size_t t : ts) {
        net.steps = t;
        const ForwardTrace sp = network_forward(input, net);
        packed_bytes.push_back(static_cast<double>(sp.layer_spikes[0].footprint_bytes()));
        NetworkSpec lif_net = net;
        lif_net.tau = 1000.0;
        const LifForwardTrace lf = network_forward_lif(input, lif_net);
        lif_bytes.push_back(static_cast<double>(lf.layer_spikes[0].footprint_bytes()));
    }
    const bool constant = std::all_of(packed_bytes.begin(), packed_bytes.end(),
                                      [&](double b) { return b == packed_bytes[0]; });

    // least squares fit of lif_bytes against T
    const double n = static_cast<double>(ts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = static_cast<double>(ts[i]);
        const double y = lif_bytes[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double r = (n * sxy - sx * sy) /
                     std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    const double r2 = r * r;

    Outcome out;
    out.pass = constant && slope > 0.0 && r2 > 0.99;
    out.detail = std::string("packed state ") + (constant ? "constant" : "VARIES") +
                 " at " + std::to_string(static_cast<std::size_t>(packed_bytes[0])) +
                 " B; lif slope " + fmt(slope, 2) + " B/step, R^2 " + fmt(r2, 5);
    return out;
}

// --- 8: simulator direction ---

Outcome criterion_simulator(const ToyConversion& toy) {
    const auto start = Clock::now();
    const std::size_t calib_n = toy.train.size() / 10;
    const std::vector<std::vector<double>> calib(toy.train.features.begin(),
                                                 toy.train.features.begin() + calib_n);
    const std::size_t steps = 8;
    const NetworkSpec sp_net =
        convert(toy.folded, calibrate(toy.folded, calib, steps, 2.0, 99.9), steps, 2.0);
    const NetworkSpec lif_net =
        convert_lif(toy.folded, calibrate_rate(toy.folded, calib, steps, 99.9), steps, 1000.0);

    SimConfig cfg;
    const std::vector<std::vector<double>> batch(toy.test.features.begin(),
                                                 toy.test.features.begin() + 32);
    const SimTrace sp = simulate_network(sp_net, batch, cfg, NeuronKind::SpikePack);
    const SimTrace lif = simulate_network(lif_net, batch, cfg, NeuronKind::Lif);
    const bool faster = sp.latency_seconds < lif.latency_seconds;
    const bool cheaper = sp.energy_joules < lif.energy_joules;

    // sparsity sweep: drop bits from a fixed packed input, latency must not rise
    bool monotone = true;
    const LayerSpec& probe = sp_net.layers[1];
    std::uint64_t prev_cycles = UINT64_MAX;
    for (std::size_t keep : {16u, 12u, 8u, 4u, 1u}) {
        PackedSpikes spikes;
        spikes.steps = steps;
        spikes.bits.assign(probe.in_features, 0);
        std::size_t placed = 0;
        for (std::size_t i = 0; i < spikes.bits.size() && placed < keep; ++i)
            for (std::size_t b = 0; b < steps && placed < keep; ++b, ++placed)
                spikes.bits[i] |= std::uint64_t{1} << b;
        const SimTrace t = simulate_layer(spikes, probe, cfg, NeuronKind::SpikePack);
        if (t.total_cycles > prev_cycles) monotone = false;
        prev_cycles = t.total_cycles;
    }
    const double dt = seconds_since(start);
    Outcome out;
    out.pass = faster && cheaper && monotone && dt < 60.0;
    out.detail = "latency sp " + fmt(sp.latency_seconds * 1e6, 2) + " us vs lif " +
                 fmt(lif.latency_seconds * 1e6, 2) + " us, energy sp " +
                 fmt(sp.energy_joules * 1e9, 2) + " nJ vs lif " +
                 fmt(lif.energy_joules * 1e9, 2) + " nJ" +
                 (monotone ? ", sparsity sweep monotone" : ", SPARSITY SWEEP NOT MONOTONE");
    return out;
}

// --- 9: SOP fixtures ---

Outcome criterion_sop() {
    const bool ok = sop(0.1, 1000.0, 4) == 400.0 && sop(0.5, 2.0e6, 16) == 1.6e7 &&
                    sop(0.25, 128.0, 8) == 256.0;
    Outcome out;
    out.pass = ok;
    out.detail = ok ? "3 fixtures exact" : "fixture mismatch";
    return out;
}

// --- 10: CLI determinism ---

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status < 0 ? status : WEXITSTATUS(status);
}

bool read_file(const fs::path& p, std::string* out) {
    std::ifstream is(p, std::ios::binary);
    if (!is) return false;
    std::ostringstream buf;
    buf << is.rdbuf();
    *out = buf.str();
    return true;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string* why) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    std::size_t b_count = 0;
    for (const auto& e : fs::directory_iterator(b)) {
        (void)e;
        ++b_count;
    }
    if (b_count != names.size()) {
        *why = "file count differs under " + a.filename().string();
        return false;
    }
    for (const fs::path& name : names) {
        std::string x, y;
        if (!read_file(a / name, &x) || !read_file(b / name, &y) || x != y) {
            *why = name.string() + " differs";
            return false;
        }
    }
    return true;
}

Outcome criterion_cli_determinism() {
    Outcome out;
    const char* cli_env = std::getenv("SPIKEPACK_CLI_BIN");
    if (!cli_env) {
        out.pass = false;
        out.detail = "SPIKEPACK_CLI_BIN not set";
        return out;
    }
    const std::string cli = cli_env;
    const fs::path base =
        fs::temp_directory_path() / ("spikepack_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    fs::create_directories(base);

    const fs::path train_a = base / "train_a";
    const std::string model = (train_a / "model.bin").string();
    const std::string dataset = (train_a / "dataset.csv").string();
    const fs::path conv_a = base / "convert_a";
    const std::string snn = (conv_a / "snn.bin").string();
    const fs::path infer_a = base / "infer_a";

    const std::vector<std::pair<std::string, std::string>> runs = {
        {"equiv", "--seed 5 equiv --cases 2000"},
        {"mi", "--seed 5 mi --pre-neurons 4 --steps 4 --samples 20000"},
        {"train", "--seed 5 train --kind ann --per-class 60 --epochs 10"},
        {"convert", "--seed 5 convert --ann " + model + " --data " + dataset + " --steps 6"},
        {"infer", "--seed 5 infer --model " + snn + " --data " + dataset + " --limit 50"},
        {"simulate", "--seed 5 simulate --model " + snn + " --data " + dataset + " --limit 4"},
        {"report", "--seed 5 report --dir " + infer_a.string()}};

    std::string failures;
    for (const auto& [name, args] : runs) {
        const fs::path dir_a = base / (name + "_a");
        const fs::path dir_b = base / (name + "_b");
        const int rc_a = run_cli(cli, "--out " + dir_a.string() + " " + args);
        const int rc_b = run_cli(cli, "--out " + dir_b.string() + " " + args);
        if (rc_a != 0 || rc_b != 0) {
            failures += " " + name + " exited " + std::to_string(rc_a) + "/" +
                        std::to_string(rc_b);
            continue;
        }
        std::string why;
        if (!dirs_identical(dir_a, dir_b, &why)) failures += " " + name + ": " + why;
    }
    fs::remove_all(base);
    out.pass = failures.empty();
    out.detail = out.pass ? "7 subcommands byte-identical across reruns" : failures;
    return out;
}

}  // namespace

int main() {
    const ToyConversion toy = build_toy_conversion();
    const std::vector<std::pair<std::string, Outcome>> results = {
        {"serial/parallel equivalence", criterion_equivalence()},
        {"integer round-trip exactness", criterion_roundtrip()},
        {"reference-configuration information values", criterion_reference_numbers()},
        {"Monte Carlo ordering on the (N,T) grid", criterion_grid_ordering()},
        {"conversion fidelity vs T", criterion_conversion(toy)},
        {"gradient vs finite differences", criterion_gradients()},
        {"state footprint scaling", criterion_state_footprint()},
        {"simulator latency/energy direction", criterion_simulator(toy)},
        {"SOP fixtures", criterion_sop()},
        {"CLI determinism", criterion_cli_determinism()},
    };

    bool all = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& [name, outcome] = results[i];
        all = all && outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << name
                  << ": " << outcome.detail << "\n";
    }
    return all ? 0 : 1;
}
