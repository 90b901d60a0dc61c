#include "fsd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fsd {

Vec3 predict_force(const RnnModel& m, HeadKind head, const AeroSequenceSample& s,
                   const DroneParams& p) {
    const VecX out = rnn_forward(m, s.inputs);
    if (head == HeadKind::Vanilla) return Vec3(out[0], out[1], out[2]);
    const double alpha_w = out[0];
    const double gamma = gamma_from_raw(out[1], m.gamma_floor);
    return reconstruct_force(alpha_w, gamma, s.velocity, s.attitude, p).force;
}

double sample_loss_and_grad(const RnnModel& m, HeadKind head,
                            const AeroSequenceSample& s, const DroneParams& p,
                            RnnGrads& grads) {
    RnnCache cache;
    const VecX out = rnn_forward(m, s.inputs, &cache);

    Vec3 f_hat;
    VecX d_out(out.size());
    if (head == HeadKind::Vanilla) {
        f_hat = Vec3(out[0], out[1], out[2]);
        const Vec3 diff = f_hat - s.label;
        for (int i = 0; i < 3; ++i) d_out[i] = 2.0 * diff[i];
    } else {
        const double alpha_w = out[0];
        const double gamma = gamma_from_raw(out[1], m.gamma_floor);
        const ReconstructResult rec =
            reconstruct_force(alpha_w, gamma, s.velocity, s.attitude, p);
        f_hat = rec.force;
        const Vec3 diff = f_hat - s.label;
        d_out[0] = 2.0 * diff.dot(rec.d_force_d_alpha_w);
        d_out[1] = 2.0 * diff.dot(rec.d_force_d_gamma) * d_gamma_d_raw(out[1]);
    }
    rnn_backward(m, cache, d_out, grads);
    return (f_hat - s.label).squaredNorm();
}

namespace {

struct AdamState {
    RnnGrads m1, m2;
    long step{0};
    void init(const RnnModel& model) {
        m1.init_zero(model);
        m2.init_zero(model);
    }
};

void adam_update(RnnModel& model, RnnGrads& grad, AdamState& adam, double lr,
                 double clip_norm) {
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double norm = grad.norm();
    if (clip_norm > 0.0 && norm > clip_norm) grad.scale(clip_norm / norm);

    ++adam.step;
    auto params = model.param_ptrs();
    auto g = grad.param_ptrs();
    auto m1 = adam.m1.param_ptrs();
    auto m2 = adam.m2.param_ptrs();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        *m1[i] = beta1 * *m1[i] + (1.0 - beta1) * *g[i];
        *m2[i] = beta2 * *m2[i] + (1.0 - beta2) * *g[i] * *g[i];
        const double mhat = *m1[i] / bc1;
        const double vhat = *m2[i] / bc2;
        *params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

double mean_loss(const RnnModel& m, HeadKind head,
                 const std::vector<AeroSequenceSample>& samples,
                 const DroneParams& p) {
    double total = 0.0;
    for (const auto& s : samples)
        total += (predict_force(m, head, s, p) - s.label).squaredNorm();
    return total / static_cast<double>(samples.size());
}

}  // namespace

TrainResult train_bptt(RnnModel model, HeadKind head,
                       const std::vector<AeroSequenceSample>& samples,
                       const DroneParams& p, const TrainConfig& cfg) {
    if (samples.empty()) throw std::runtime_error("train_bptt: empty dataset");
    if (cfg.episodes <= 0 || cfg.validation_split <= 0.0 || cfg.validation_split >= 1.0)
        throw std::runtime_error("train_bptt: invalid config");

    // contiguous split: windows overlap, shuffling would leak
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(samples.size() * cfg.validation_split));
    const std::size_t n_train = samples.size() - n_val;
    if (n_train == 0) throw std::runtime_error("train_bptt: no training samples");
    std::vector<AeroSequenceSample> train(samples.begin(), samples.begin() + n_train);
    std::vector<AeroSequenceSample> val(samples.begin() + n_train, samples.end());

    std::mt19937_64 rng(cfg.seed);
    AdamState adam;
    adam.init(model);

    TrainResult result;
    result.model = model;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    RnnGrads grads;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        std::shuffle(order.begin(), order.end(), rng);
        double ep_loss = 0.0;
        std::size_t i = 0;
        while (i < n_train) {
            const std::size_t bsz =
                std::min<std::size_t>(cfg.batch_size, n_train - i);
            grads.init_zero(model);
            double batch_loss = 0.0;
            for (std::size_t k = 0; k < bsz; ++k)
                batch_loss += sample_loss_and_grad(model, head, train[order[i + k]], p, grads);
            grads.scale(1.0 / static_cast<double>(bsz));
            batch_loss /= static_cast<double>(bsz);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_bptt: loss diverged (NaN/inf)");
            adam_update(model, grads, adam, cfg.learning_rate, cfg.grad_clip_norm);
            ep_loss += batch_loss * static_cast<double>(bsz);
            i += bsz;
        }
        ep_loss /= static_cast<double>(n_train);
        const double v_loss = mean_loss(model, head, val, p);
        result.train_loss.push_back(ep_loss);
        result.val_loss.push_back(v_loss);
        if (v_loss < best_val) {
            best_val = v_loss;
            result.model = model;
            result.best_episode = ep;
        }
    }
    return result;
}

double evaluate_rmse(const RnnModel& m, HeadKind head,
                     const std::vector<AeroSequenceSample>& samples,
                     const DroneParams& p) {
    if (samples.empty()) throw std::runtime_error("evaluate_rmse: empty dataset");
    double total = 0.0;
    for (const auto& s : samples)
        total += (predict_force(m, head, s, p) - s.label).squaredNorm();
    return std::sqrt(total / (3.0 * static_cast<double>(samples.size())));
}

}  // namespace fsd
