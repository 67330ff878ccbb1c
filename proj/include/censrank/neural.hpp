#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "censrank/error.hpp"
#include "censrank/rng.hpp"

namespace censrank {

enum class HeadKind { scalar_linear, softmax };

struct NetworkConfig {
    int input_dim = 1;
    std::vector<int> hidden_dims{100, 100, 100};
    HeadKind head = HeadKind::scalar_linear;
    int num_bins = 1;  // softmax width T
    double dropout_rate = 0.5;
    double l2_coefficient = 0.0;
    bool batch_norm = true;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;
    std::uint64_t seed = 0;

    int output_dim() const { return head == HeadKind::softmax ? num_bins : 1; }

    void validate() const {
        if (input_dim < 1) throw InvalidArgument("NetworkConfig: input_dim must be >= 1");
        for (int h : hidden_dims)
            if (h < 1) throw InvalidArgument("NetworkConfig: hidden widths must be >= 1");
        if (head == HeadKind::softmax && num_bins < 1) throw InvalidArgument("NetworkConfig: softmax head needs T >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("NetworkConfig: dropout must be in [0,1)");
        if (!(l2_coefficient >= 0.0)) throw InvalidArgument("NetworkConfig: l2 coefficient must be >= 0");
    }
};

enum class Mode { train, eval };

/// Feed-forward network: [affine -> batch norm -> ReLU -> dropout] per hidden
/// layer, then an affine head (optionally softmax). An empty `hidden_dims`
/// gives a plain linear model.
///
/// Weights are stored input-major (fan_in x fan_out) so a batch X (n x d) maps
/// to X * W + b. Batch-norm running statistics use the biased batch variance;
/// they are seeded from the first training batch, then updated as an
/// exponential moving average with `bn_momentum`.
class Network {
public:
    Network() = default;

    explicit Network(NetworkConfig cfg) : cfg_(std::move(cfg)), dropout_rng_(derive_seed(cfg_.seed, {1})) {
        cfg_.validate();
        Rng init(derive_seed(cfg_.seed, {0}));
        int fan_in = cfg_.input_dim;
        auto dims = cfg_.hidden_dims;
        dims.push_back(cfg_.output_dim());
        for (std::size_t l = 0; l < dims.size(); ++l) {
            const double bound = std::sqrt(6.0 / fan_in);
            Eigen::MatrixXd w(fan_in, dims[l]);
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(init) - 1.0) * bound;
            weights_.push_back(std::move(w));
            biases_.push_back(Eigen::MatrixXd::Zero(1, dims[l]));
            if (l + 1 < dims.size()) {
                gamma_.push_back(Eigen::MatrixXd::Ones(1, dims[l]));
                beta_.push_back(Eigen::MatrixXd::Zero(1, dims[l]));
                running_mean_.push_back(Eigen::MatrixXd::Zero(1, dims[l]));
                running_var_.push_back(Eigen::MatrixXd::Ones(1, dims[l]));
            }
            fan_in = dims[l];
        }
    }

    const NetworkConfig& config() const { return cfg_; }
    std::size_t num_hidden() const { return cfg_.hidden_dims.size(); }

    /// Forward pass that caches intermediates for `backward`. In train mode
    /// batch norm uses batch statistics (and updates the running ones) and
    /// dropout is active; in eval mode neither happens.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Mode mode) {
        check_input(x);
        if (mode == Mode::train && cfg_.batch_norm && !cfg_.hidden_dims.empty() && x.rows() < 2)
            throw InvalidArgument("forward: batch norm in train mode needs at least 2 rows");
        Cache c;
        c.mode = mode;
        c.input = x;
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            LayerCache lc;
            Eigen::MatrixXd z = (a * weights_[l]).rowwise() + biases_[l].row(0);
            Eigen::MatrixXd y;
            if (cfg_.batch_norm) {
                Eigen::RowVectorXd mean, var;
                if (mode == Mode::train) {
                    mean = z.colwise().mean();
                    var = (z.rowwise() - mean).array().square().colwise().mean();
                    const double m = bn_updates_ == 0 ? 1.0 : cfg_.bn_momentum;
                    running_mean_[l] = (1.0 - m) * running_mean_[l] + m * mean;
                    running_var_[l] = (1.0 - m) * running_var_[l] + m * var;
                } else {
                    mean = running_mean_[l].row(0);
                    var = running_var_[l].row(0);
                }
                lc.inv_std = (var.array() + cfg_.bn_epsilon).rsqrt().matrix();
                lc.xhat = ((z.rowwise() - mean).array().rowwise() * lc.inv_std.array()).matrix();
                y = (lc.xhat.array().rowwise() * gamma_[l].row(0).array()).matrix().rowwise() + beta_[l].row(0);
            } else {
                y = z;
            }
            lc.relu_mask = (y.array() > 0.0).cast<double>().matrix();
            Eigen::MatrixXd h = y.cwiseMax(0.0);
            if (mode == Mode::train && cfg_.dropout_rate > 0.0) {
                const double keep = 1.0 - cfg_.dropout_rate;
                lc.dropout_mask.resize(h.rows(), h.cols());
                for (Eigen::Index col = 0; col < h.cols(); ++col)
                    for (Eigen::Index r = 0; r < h.rows(); ++r)
                        lc.dropout_mask(r, col) = uniform01(dropout_rng_) < keep ? 1.0 / keep : 0.0;
                h = h.cwiseProduct(lc.dropout_mask);
            }
            lc.input = std::move(a);
            c.layers.push_back(std::move(lc));
            if (l + 1 == num_hidden() && mode == Mode::train && cfg_.batch_norm) ++bn_updates_;
            a = std::move(h);
        }
        Eigen::MatrixXd logits = (a * weights_.back()).rowwise() + biases_.back().row(0);
        c.head_input = std::move(a);
        Eigen::MatrixXd out = cfg_.head == HeadKind::softmax ? softmax(logits) : logits;
        c.output = out;
        cache_ = std::move(c);
        return out;
    }

    /// Eval-mode forward without touching any state.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const {
        check_input(x);
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            Eigen::MatrixXd y = (a * weights_[l]).rowwise() + biases_[l].row(0);
            if (cfg_.batch_norm) {
                const Eigen::RowVectorXd inv_std = (running_var_[l].array() + cfg_.bn_epsilon).rsqrt().matrix();
                y = (((y.rowwise() - running_mean_[l].row(0)).array().rowwise() * (inv_std.array() * gamma_[l].row(0).array()))
                         .matrix())
                        .rowwise() +
                    beta_[l].row(0);
            }
            a = y.cwiseMax(0.0);
        }
        Eigen::MatrixXd logits = (a * weights_.back()).rowwise() + biases_.back().row(0);
        return cfg_.head == HeadKind::softmax ? softmax(logits) : logits;
    }

    /// Parameter gradients of (loss + l2 * sum ||W||^2), given dLoss/dOutputs
    /// for the cached forward pass. Order matches `parameters()`.
    std::vector<Eigen::MatrixXd> backward(const Eigen::MatrixXd& grad_out) const {
        if (!cache_) throw StateError("backward called without a cached forward pass");
        const Cache& c = *cache_;
        if (grad_out.rows() != c.output.rows() || grad_out.cols() != c.output.cols())
            throw InvalidArgument("backward: gradient shape does not match the cached outputs");

        Eigen::MatrixXd d;
        if (cfg_.head == HeadKind::softmax) {
            const Eigen::VectorXd inner = (grad_out.cwiseProduct(c.output)).rowwise().sum();
            d = c.output.cwiseProduct(grad_out.colwise() - inner);
        } else {
            d = grad_out;
        }

        const std::size_t H = num_hidden();
        std::vector<Eigen::MatrixXd> gw(H + 1), gb(H + 1), gg(H), gbeta(H);
        gw[H] = c.head_input.transpose() * d + 2.0 * cfg_.l2_coefficient * weights_[H];
        gb[H] = d.colwise().sum();
        Eigen::MatrixXd da = d * weights_[H].transpose();

        for (std::size_t l = H; l-- > 0;) {
            const LayerCache& lc = c.layers[l];
            Eigen::MatrixXd dh = da;
            if (lc.dropout_mask.size() > 0) dh = dh.cwiseProduct(lc.dropout_mask);
            Eigen::MatrixXd dy = dh.cwiseProduct(lc.relu_mask);
            Eigen::MatrixXd dz;
            if (cfg_.batch_norm) {
                gg[l] = (dy.cwiseProduct(lc.xhat)).colwise().sum();
                gbeta[l] = dy.colwise().sum();
                const Eigen::MatrixXd dxhat = (dy.array().rowwise() * gamma_[l].row(0).array()).matrix();
                if (c.mode == Mode::train) {
                    const double n = static_cast<double>(dy.rows());
                    const Eigen::RowVectorXd sum_dx = dxhat.colwise().sum();
                    const Eigen::RowVectorXd sum_dx_xhat = dxhat.cwiseProduct(lc.xhat).colwise().sum();
                    Eigen::MatrixXd t = (n * dxhat).rowwise() - sum_dx;
                    t -= (lc.xhat.array().rowwise() * sum_dx_xhat.array()).matrix();
                    dz = (t.array().rowwise() * (lc.inv_std.array() / n)).matrix();
                } else {
                    dz = (dxhat.array().rowwise() * lc.inv_std.array()).matrix();
                }
            } else {
                dz = dy;
            }
            gw[l] = lc.input.transpose() * dz + 2.0 * cfg_.l2_coefficient * weights_[l];
            gb[l] = dz.colwise().sum();
            da = dz * weights_[l].transpose();
        }

        std::vector<Eigen::MatrixXd> grads;
        for (std::size_t l = 0; l < H; ++l) {
            grads.push_back(std::move(gw[l]));
            grads.push_back(std::move(gb[l]));
            if (cfg_.batch_norm) {
                grads.push_back(std::move(gg[l]));
                grads.push_back(std::move(gbeta[l]));
            }
        }
        grads.push_back(std::move(gw[H]));
        grads.push_back(std::move(gb[H]));
        return grads;
    }

    /// Mutable views of every trainable tensor: per hidden layer W, b, gamma,
    /// beta (the last two only with batch norm), then head W, b.
    std::vector<Eigen::MatrixXd*> parameters() { return collect_parameters<Eigen::MatrixXd*>(*this); }
    std::vector<const Eigen::MatrixXd*> parameters() const { return collect_parameters<const Eigen::MatrixXd*>(*this); }

    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            const auto pre = "hidden" + std::to_string(l) + ".";
            names.push_back(pre + "weight");
            names.push_back(pre + "bias");
            if (cfg_.batch_norm) {
                names.push_back(pre + "bn_scale");
                names.push_back(pre + "bn_shift");
            }
        }
        names.push_back("head.weight");
        names.push_back("head.bias");
        return names;
    }

    double l2_penalty() const {
        double s = 0.0;
        for (const auto& w : weights_) s += w.squaredNorm();
        return cfg_.l2_coefficient * s;
    }

    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::MatrixXd>& biases() const { return biases_; }
    std::vector<Eigen::MatrixXd>& running_mean() { return running_mean_; }
    std::vector<Eigen::MatrixXd>& running_var() { return running_var_; }
    const std::vector<Eigen::MatrixXd>& running_mean() const { return running_mean_; }
    const std::vector<Eigen::MatrixXd>& running_var() const { return running_var_; }

    void clear_cache() { cache_.reset(); }

    static Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
        Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
        p = p.array().exp().matrix();
        const Eigen::VectorXd sums = p.rowwise().sum();
        return p.array().colwise() / sums.array();
    }

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);

private:
    struct LayerCache {
        Eigen::MatrixXd input, xhat, relu_mask, dropout_mask;
        Eigen::RowVectorXd inv_std;
    };
    struct Cache {
        Mode mode = Mode::eval;
        Eigen::MatrixXd input, head_input, output;
        std::vector<LayerCache> layers;
    };

    template <class Ptr, class Self>
    static std::vector<Ptr> collect_parameters(Self& self) {
        std::vector<Ptr> p;
        for (std::size_t l = 0; l < self.num_hidden(); ++l) {
            p.push_back(&self.weights_[l]);
            p.push_back(&self.biases_[l]);
            if (self.cfg_.batch_norm) {
                p.push_back(&self.gamma_[l]);
                p.push_back(&self.beta_[l]);
            }
        }
        p.push_back(&self.weights_.back());
        p.push_back(&self.biases_.back());
        return p;
    }

    void check_input(const Eigen::MatrixXd& x) const {
        if (x.cols() != cfg_.input_dim)
            throw InvalidArgument("forward: batch has " + std::to_string(x.cols()) + " columns, network expects " +
                                  std::to_string(cfg_.input_dim));
        if (x.rows() < 1) throw InvalidArgument("forward: empty batch");
    }

    NetworkConfig cfg_;
    std::vector<Eigen::MatrixXd> weights_, biases_, gamma_, beta_, running_mean_, running_var_;
    Rng dropout_rng_;
    long bn_updates_ = 0;  // the first update copies the batch statistics
    std::optional<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    long step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<Eigen::MatrixXd> m, v;
};

inline AdamState make_adam(const std::vector<Eigen::MatrixXd*>& params, double learning_rate) {
    if (!(learning_rate > 0.0)) throw InvalidArgument("Adam: learning rate must be positive");
    AdamState s;
    s.learning_rate = learning_rate;
    for (auto* p : params) {
        s.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        s.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
    return s;
}

/// One bias-corrected Adam update. Throws TrainingDiverged (epoch -1) on a
/// non-finite gradient, leaving parameters and state untouched.
inline void adam_step(AdamState& s, const std::vector<Eigen::MatrixXd*>& params,
                      const std::vector<Eigen::MatrixXd>& grads) {
    if (params.size() != grads.size() || params.size() != s.m.size())
        throw InvalidArgument("adam_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols())
            throw InvalidArgument("adam_step: gradient shape mismatch");
        if (!grads[i].allFinite()) throw TrainingDiverged("non-finite gradient", -1);
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i].cwiseProduct(grads[i]);
        const auto mhat = s.m[i].array() / c1;
        const auto vhat = s.v[i].array() / c2;
        params[i]->array() -= s.learning_rate * mhat / (vhat.sqrt() + s.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// JSON document:
//   { "format": "censrank-mlp", "version": 1,
//     "config": {...NetworkConfig...},
//     "bn_updates": n,
//     "tensors": [ {"name": ..., "rows": r, "cols": c, "data": [row-major doubles]} ... ] }
// Tensor order: parameters() followed by hidden<l>.running_mean / running_var.
// Doubles are written with round-trip precision.

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json tensor_json(const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline void load_tensor(const nlohmann::json& j, const std::string& name, Eigen::MatrixXd& m) {
    if (j.at("name").get<std::string>() != name)
        throw ParseError("checkpoint: expected tensor '" + name + "', found '" + j.at("name").get<std::string>() + "'");
    if (j.at("rows").get<Eigen::Index>() != m.rows() || j.at("cols").get<Eigen::Index>() != m.cols())
        throw ParseError("checkpoint: tensor '" + name + "' has the wrong shape");
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != m.size()) throw ParseError("checkpoint: tensor '" + name + "' truncated");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++].get<double>();
}

}  // namespace detail

inline nlohmann::json Network::to_json() const {
    nlohmann::json cfg = {{"input_dim", cfg_.input_dim},
                          {"hidden_dims", cfg_.hidden_dims},
                          {"head", cfg_.head == HeadKind::softmax ? "softmax" : "scalar_linear"},
                          {"num_bins", cfg_.num_bins},
                          {"dropout_rate", cfg_.dropout_rate},
                          {"l2_coefficient", cfg_.l2_coefficient},
                          {"batch_norm", cfg_.batch_norm},
                          {"bn_momentum", cfg_.bn_momentum},
                          {"bn_epsilon", cfg_.bn_epsilon},
                          {"seed", cfg_.seed}};
    nlohmann::json tensors = nlohmann::json::array();
    const auto names = parameter_names();
    const auto params = parameters();
    for (std::size_t i = 0; i < params.size(); ++i) tensors.push_back(detail::tensor_json(names[i], *params[i]));
    if (cfg_.batch_norm) {
        for (std::size_t l = 0; l < num_hidden(); ++l) {
            tensors.push_back(detail::tensor_json("hidden" + std::to_string(l) + ".running_mean", running_mean_[l]));
            tensors.push_back(detail::tensor_json("hidden" + std::to_string(l) + ".running_var", running_var_[l]));
        }
    }
    return {{"format", "censrank-mlp"}, {"version", kCheckpointVersion}, {"config", cfg},
            {"bn_updates", bn_updates_},  {"tensors", tensors}};
}

inline Network Network::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "censrank-mlp") throw ParseError("checkpoint: not a censrank-mlp document");
    if (j.value("version", 0) != kCheckpointVersion)
        throw ParseError("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
    const auto& c = j.at("config");
    NetworkConfig cfg;
    cfg.input_dim = c.at("input_dim").get<int>();
    cfg.hidden_dims = c.at("hidden_dims").get<std::vector<int>>();
    cfg.head = c.at("head").get<std::string>() == "softmax" ? HeadKind::softmax : HeadKind::scalar_linear;
    cfg.num_bins = c.at("num_bins").get<int>();
    cfg.dropout_rate = c.at("dropout_rate").get<double>();
    cfg.l2_coefficient = c.at("l2_coefficient").get<double>();
    cfg.batch_norm = c.at("batch_norm").get<bool>();
    cfg.bn_momentum = c.at("bn_momentum").get<double>();
    cfg.bn_epsilon = c.at("bn_epsilon").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    Network net(cfg);
    net.bn_updates_ = j.value("bn_updates", 0L);
    const auto& tensors = j.at("tensors");
    const auto names = net.parameter_names();
    auto params = net.parameters();
    const std::size_t expected = params.size() + (cfg.batch_norm ? 2 * net.num_hidden() : 0);
    if (tensors.size() != expected) throw ParseError("checkpoint: wrong tensor count");
    std::size_t k = 0;
    for (std::size_t i = 0; i < params.size(); ++i) detail::load_tensor(tensors[k++], names[i], *params[i]);
    if (cfg.batch_norm) {
        for (std::size_t l = 0; l < net.num_hidden(); ++l) {
            detail::load_tensor(tensors[k++], "hidden" + std::to_string(l) + ".running_mean", net.running_mean_[l]);
            detail::load_tensor(tensors[k++], "hidden" + std::to_string(l) + ".running_var", net.running_var_[l]);
        }
    }
    return net;
}

}  // namespace censrank
