#include "spikepack/converter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spikepack/synthetic.hpp"

using namespace spikepack;

namespace {

AnnLayer dense_layer(std::size_t out, std::size_t in, Activation act) {
    AnnLayer l;
    l.kind = AnnLayerKind::Dense;
    l.act = act;
    l.affine.kind = LayerKind::Dense;
    l.affine.out_features = out;
    l.affine.in_features = in;
    l.affine.in_shape = {in, 1, 1};
    l.affine.weights.assign(out * in, 0.0);
    l.affine.bias.assign(out, 0.0);
    return l;
}

}  // namespace

TEST(Converter, BatchNormFolding) {
    AnnSpec ann;
    ann.in_shape = {3, 1, 1};
    AnnLayer affine = dense_layer(2, 3, Activation::None);
    affine.affine.weights = {1.0, -0.5, 2.0, 0.0, 1.0, 1.0};
    affine.affine.bias = {0.5, -1.0};
    AnnLayer bn;
    bn.kind = AnnLayerKind::BatchNorm;
    bn.act = Activation::Relu;
    bn.bn_gamma = {2.0, 0.5};
    bn.bn_beta = {0.1, -0.2};
    bn.bn_mean = {1.0, 0.0};
    bn.bn_var = {4.0, 1.0};
    bn.bn_eps = 0.0;
    ann.layers = {affine, bn};

    const AnnSpec folded = fold_ann(ann);
    ASSERT_EQ(folded.layers.size(), 1u);
    EXPECT_EQ(folded.layers[0].act, Activation::Relu);

    // reference: y = relu(gamma * (Wx + b - mean) / sqrt(var) + beta)
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int iter = 0; iter < 20; ++iter) {
        const std::vector<double> x{unit(rng), unit(rng), unit(rng)};
        const std::vector<double> got = ann_forward(folded, x);
        for (std::size_t m = 0; m < 2; ++m) {
            double pre = affine.affine.bias[m];
            for (std::size_t n = 0; n < 3; ++n)
                pre += affine.affine.weights[m * 3 + n] * x[n];
            const double norm = bn.bn_gamma[m] * (pre - bn.bn_mean[m]) /
                                    std::sqrt(bn.bn_var[m]) +
                                bn.bn_beta[m];
            EXPECT_NEAR(got[m], std::max(0.0, norm), 1e-12);
        }
    }
}

TEST(Converter, AvgPoolAsConv) {
    AnnSpec ann;
    ann.in_shape = {1, 4, 4};
    AnnLayer pool;
    pool.kind = AnnLayerKind::AvgPool;
    pool.pool_k = 2;
    pool.pool_stride = 2;
    ann.layers = {pool};

    const AnnSpec folded = fold_ann(ann);
    std::vector<double> x(16);
    for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i + 1);
    const std::vector<double> y = ann_forward(folded, x);
    ASSERT_EQ(y.size(), 4u);
    EXPECT_DOUBLE_EQ(y[0], (1 + 2 + 5 + 6) / 4.0);
    EXPECT_DOUBLE_EQ(y[1], (3 + 4 + 7 + 8) / 4.0);
    EXPECT_DOUBLE_EQ(y[2], (9 + 10 + 13 + 14) / 4.0);
    EXPECT_DOUBLE_EQ(y[3], (11 + 12 + 15 + 16) / 4.0);
}

TEST(Converter, PercentileIndexing) {
    std::vector<double> v(100);
    for (std::size_t i = 0; i < 100; ++i) v[i] = static_cast<double>(i + 1);
    std::vector<double> c;
    c = v;
    EXPECT_DOUBLE_EQ(spikepack::detail::percentile_value(c, 99.0), 99.0);
    c = v;
    EXPECT_DOUBLE_EQ(spikepack::detail::percentile_value(c, 100.0), 100.0);
    c = v;
    EXPECT_DOUBLE_EQ(spikepack::detail::percentile_value(c, 99.9), 100.0);
    c = v;
    EXPECT_DOUBLE_EQ(spikepack::detail::percentile_value(c, 50.0), 50.0);
}

TEST(Converter, CalibrationThetaAndOverflow) {
    // identity hidden layer: activations equal the raw inputs
    AnnSpec ann;
    ann.in_shape = {1, 1, 1};
    AnnLayer hidden = dense_layer(1, 1, Activation::Relu);
    hidden.affine.weights = {1.0};
    AnnLayer out = dense_layer(1, 1, Activation::None);
    out.affine.weights = {1.0};
    out.affine.in_shape = {1, 1, 1};
    ann.layers = {hidden, out};
    const AnnSpec folded = fold_ann(ann);

    std::vector<std::vector<double>> calib;
    for (std::size_t i = 1; i <= 100; ++i) calib.push_back({static_cast<double>(i)});

    const std::size_t steps = 4;
    const CalibrationReport report = calibrate(folded, calib, steps, 2.0, 99.0);
    ASSERT_EQ(report.layers.size(), 1u);
    const ChannelCalibration& cal = report.layers[0][0];
    EXPECT_DOUBLE_EQ(cal.max_activation, 100.0);
    EXPECT_DOUBLE_EQ(cal.percentile_value, 99.0);
    EXPECT_DOUBLE_EQ(cal.theta, 99.0 / 15.0);  // percentile / (2^T - 1)
    EXPECT_DOUBLE_EQ(cal.overflow_fraction, 0.01);
    EXPECT_FALSE(cal.dead);
    EXPECT_DOUBLE_EQ(report.code_range, 15.0);

    const CalibrationReport rate = calibrate_rate(folded, calib, steps, 99.0);
    EXPECT_DOUBLE_EQ(rate.layers[0][0].theta, 99.0 / 4.0);  // percentile / T
}

TEST(Converter, DeadChannelFallback) {
    AnnSpec ann;
    ann.in_shape = {1, 1, 1};
    AnnLayer hidden = dense_layer(2, 1, Activation::Relu);
    hidden.affine.weights = {1.0, -1.0};  // second unit never fires on positive input
    AnnLayer out = dense_layer(1, 2, Activation::None);
    out.affine.weights = {1.0, 1.0};
    out.affine.in_shape = {2, 1, 1};
    ann.layers = {hidden, out};
    const AnnSpec folded = fold_ann(ann);

    std::vector<std::vector<double>> calib{{1.0}, {2.0}, {3.0}};
    const CalibrationReport report = calibrate(folded, calib, 4, 2.0, 99.9);
    EXPECT_FALSE(report.layers[0][0].dead);
    EXPECT_TRUE(report.layers[0][1].dead);
    EXPECT_GT(report.layers[0][1].theta, 0.0);
}

TEST(Converter, WeightFoldingUsesProducerTheta) {
    AnnSpec ann;
    ann.in_shape = {1, 1, 1};
    AnnLayer hidden = dense_layer(2, 1, Activation::Relu);
    hidden.affine.weights = {1.0, 2.0};
    AnnLayer out = dense_layer(1, 2, Activation::None);
    out.affine.weights = {3.0, 5.0};
    out.affine.in_shape = {2, 1, 1};
    ann.layers = {hidden, out};
    const AnnSpec folded = fold_ann(ann);

    std::vector<std::vector<double>> calib{{1.0}, {4.0}, {8.0}};
    const CalibrationReport report = calibrate(folded, calib, 4, 2.0, 100.0);
    const NetworkSpec net = convert(folded, report, 4, 2.0);

    ASSERT_EQ(net.layers.size(), 2u);
    const double th0 = report.layers[0][0].theta;
    const double th1 = report.layers[0][1].theta;
    EXPECT_DOUBLE_EQ(net.layers[1].weights[0], 3.0 * th0);
    EXPECT_DOUBLE_EQ(net.layers[1].weights[1], 5.0 * th1);
    EXPECT_DOUBLE_EQ(net.layers[1].input_scale, 1.0);
    EXPECT_EQ(net.layers[0].theta_out, (std::vector<double>{th0, th1}));
    EXPECT_TRUE(net.layers[1].theta_out.empty());
}

TEST(Converter, ConvertedNetworkTracksAnnAccuracy) {
    const Dataset data = make_blobs(3, 150, 3.0, 0.5, 11);
    const Dataset train = dataset_slice(data, 0, 330);
    const Dataset test = dataset_slice(data, 330, data.size());

    TrainHyper hyper;
    hyper.lr = 0.05;
    hyper.epochs = 60;
    hyper.batch = 16;
    hyper.seed = 3;
    const AnnSpec ann =
        train_ann(make_mlp({2, 1, 1}, {16}, 3, 21), train, hyper);
    const AnnSpec folded = fold_ann(ann);
    const double ann_acc = ann_accuracy(folded, test);
    EXPECT_GT(ann_acc, 0.95);

    std::vector<std::vector<double>> calib(train.features.begin(),
                                           train.features.begin() + 33);
    const CalibrationReport report = calibrate(folded, calib, 8, 2.0, 99.9);
    const NetworkSpec net = convert(folded, report, 8, 2.0);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const ForwardTrace fwd = network_forward(test.features[i], net);
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(fwd.logits.begin(), fwd.logits.end()) - fwd.logits.begin());
        if (pred == test.labels[i]) ++correct;
    }
    const double snn_acc = static_cast<double>(correct) / static_cast<double>(test.size());
    EXPECT_NEAR(snn_acc, ann_acc, 0.03);
}

TEST(Converter, ConvertLifSetsLeak) {
    AnnSpec ann;
    ann.in_shape = {1, 1, 1};
    AnnLayer hidden = dense_layer(1, 1, Activation::Relu);
    hidden.affine.weights = {1.0};
    AnnLayer out = dense_layer(1, 1, Activation::None);
    out.affine.weights = {1.0};
    out.affine.in_shape = {1, 1, 1};
    ann.layers = {hidden, out};
    const AnnSpec folded = fold_ann(ann);

    std::vector<std::vector<double>> calib{{2.0}, {4.0}};
    const CalibrationReport report = calibrate_rate(folded, calib, 8, 100.0);
    const NetworkSpec net = convert_lif(folded, report, 8, 500.0);
    EXPECT_DOUBLE_EQ(net.tau, 500.0);
    EXPECT_EQ(net.steps, 8u);
    EXPECT_DOUBLE_EQ(net.layers[0].theta_out[0], 4.0 / 8.0);
}

TEST(Converter, RejectsUnfoldedNetworks) {
    AnnSpec ann;
    ann.in_shape = {1, 1, 1};
    AnnLayer bn;
    bn.kind = AnnLayerKind::BatchNorm;
    ann.layers = {bn};
    EXPECT_THROW(ann_forward(ann, {1.0}), std::invalid_argument);
    EXPECT_THROW(fold_ann(ann), std::invalid_argument);  // BN with no preceding affine
}
