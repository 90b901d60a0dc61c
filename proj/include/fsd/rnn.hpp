#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fsd {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Two stacked tanh recurrent layers plus a linear output head.
// paRNN head: 2 outputs (alpha_w raw, gamma raw -> softplus + floor).
// Vanilla head: 3 outputs (force components, identity).
struct RnnModel {
    int input_dim{8};
    int hidden_dim{8};
    int output_dim{2};

    MatX w1, u1;  // layer 1 input / recurrent weights
    VecX b1;
    MatX w2, u2;  // layer 2
    VecX b2;
    MatX wo;      // output head
    VecX bo;

    // Per-feature normalization frozen at training time.
    VecX feat_mean, feat_scale;

    double gamma_floor{0.05};

    void init(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);
    VecX normalize(const VecX& x) const;

    std::vector<double*> param_ptrs();
    std::vector<const double*> param_ptrs() const;
    int param_count() const;
};

struct RnnCache {
    std::vector<VecX> x;   // normalized inputs per step
    std::vector<VecX> h1;  // post-activation, h[0] is the zero initial state
    std::vector<VecX> h2;
    VecX out;              // raw head output
};

// Forward pass over a sequence of raw (unnormalized) input rows.
// Sequence is seq[t] of length >= 1; hidden state starts at zero.
VecX rnn_forward(const RnnModel& m, const std::vector<VecX>& seq,
                 RnnCache* cache = nullptr);

// Backpropagation through time. d_out is dL/d(raw head output).
// Gradients are accumulated into grads (layout matching param_ptrs()).
struct RnnGrads {
    MatX w1, u1;
    VecX b1;
    MatX w2, u2;
    VecX b2;
    MatX wo;
    VecX bo;

    void init_zero(const RnnModel& m);
    void add_scaled(const RnnGrads& other, double s);
    double norm() const;
    void scale(double s);
    std::vector<double*> param_ptrs();
};

void rnn_backward(const RnnModel& m, const RnnCache& cache, const VecX& d_out,
                  RnnGrads& grads);

// softplus head for gamma, with floor
double gamma_from_raw(double raw, double floor);
double d_gamma_d_raw(double raw);

// Flat text/JSON persistence.
void save_model(const RnnModel& m, const std::string& path);
RnnModel load_model(const std::string& path);

}  // namespace fsd
