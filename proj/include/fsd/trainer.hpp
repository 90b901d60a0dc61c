#pragma once

#include "fsd/aero.hpp"
#include "fsd/dataset.hpp"
#include "fsd/rnn.hpp"

#include <cstdint>
#include <vector>

namespace fsd {

enum class HeadKind { Parnn, Vanilla };

struct TrainConfig {
    int episodes{800};
    double learning_rate{3e-3};
    int batch_size{64};
    double grad_clip_norm{1.0};
    std::uint64_t seed{1};
    double validation_split{0.2};  // trailing contiguous fraction
};

struct TrainResult {
    RnnModel model;  // best on validation
    std::vector<double> train_loss;  // per episode
    std::vector<double> val_loss;
    int best_episode{-1};
};

// Predicted force for one sample (through the reconstruction for paRNN).
Vec3 predict_force(const RnnModel& m, HeadKind head, const AeroSequenceSample& s,
                   const DroneParams& p);

// Squared-error loss and parameter gradient for one sample.
double sample_loss_and_grad(const RnnModel& m, HeadKind head,
                            const AeroSequenceSample& s, const DroneParams& p,
                            RnnGrads& grads);

TrainResult train_bptt(RnnModel model, HeadKind head,
                       const std::vector<AeroSequenceSample>& samples,
                       const DroneParams& p, const TrainConfig& cfg);

// RMSE convention: sqrt(mean ||f_hat - f||^2 / 3).
double evaluate_rmse(const RnnModel& m, HeadKind head,
                     const std::vector<AeroSequenceSample>& samples,
                     const DroneParams& p);

}  // namespace fsd
