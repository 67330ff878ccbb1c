#pragma once

// Finite-difference check of a loss back-propagated through the network.

#include <random>

#include "censrank/losses.hpp"
#include "censrank/neural.hpp"
#include "oracles.hpp"

namespace censrank::gradcheck {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

/// Small random network (4 inputs, hidden 6 and 5, dropout off) and a batch of
/// 8 records over T = 5 bins with ties and censoring. With `bn_mode` eval the
/// batch-norm layers run on (warmed-up) running statistics.
inline GradCheckResult network_gradient_check(LossKind loss, std::uint64_t seed, Mode bn_mode,
                                              double h = 1e-6) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    constexpr int n = 8, T = 5, d = 4;
    Dataset data;
    data.grid = TimeGrid(1.0, T);
    for (int i = 0; i < n; ++i) {
        SurvivalRecord r;
        for (int j = 0; j < d; ++j) r.features.push_back(z(rng));
        r.time = static_cast<double>(rng() % T);
        r.observed = rng() % 3 != 0;
        data.records.push_back(r);
    }
    data.records[0].time = 0.0;
    data.records[0].observed = true;
    data.records[1].time = T - 1;

    LossConfig cfg;
    cfg.kind = loss;
    cfg.wm_smoothing = 1.0;
    const auto ctx = LossContext::build(cfg, data);

    NetworkConfig nc;
    nc.input_dim = d;
    nc.hidden_dims = {6, 5};
    nc.head = uses_softmax(loss) ? HeadKind::softmax : HeadKind::scalar_linear;
    nc.num_bins = T;
    nc.dropout_rate = 0.0;
    nc.l2_coefficient = 1e-3;
    nc.seed = seed;
    Network net(nc);
    const Eigen::MatrixXd x = feature_matrix(data);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);

    if (bn_mode == Mode::eval) {
        Eigen::MatrixXd warm = Eigen::MatrixXd::NullaryExpr(16, d, [&] { return 1.5 * z(rng) + 0.3; });
        for (int i = 0; i < 5; ++i) net.forward(warm, Mode::train);
    }

    auto objective = [&]() {
        const auto out = net.forward(x, bn_mode);
        return batch_objective(ctx, out, rows)->value + net.l2_penalty();
    };

    const auto out = net.forward(x, bn_mode);
    const auto obj = batch_objective(ctx, out, rows);
    const auto grads = net.backward(obj->grad);
    auto params = net.parameters();

    GradCheckResult res;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& m = *params[p];
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double keep = m.data()[i];
            m.data()[i] = keep + h;
            const double up = objective();
            m.data()[i] = keep - h;
            const double down = objective();
            m.data()[i] = keep;
            const double numeric = (up - down) / (2 * h);
            res.max_relative_error =
                std::max(res.max_relative_error, oracle::relative_error(grads[p].data()[i], numeric));
            ++res.checked;
        }
    }
    return res;
}

}  // namespace censrank::gradcheck
