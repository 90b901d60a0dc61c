#include "fsd/rnn.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace fsd {

using nlohmann::json;

void RnnModel::init(int in_dim, int hid_dim, int out_dim, std::uint64_t seed) {
    input_dim = in_dim;
    hidden_dim = hid_dim;
    output_dim = out_dim;
    std::mt19937_64 rng(seed);
    auto randmat = [&](int rows, int cols, double scale) {
        std::uniform_real_distribution<double> dist(-scale, scale);
        MatX m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
        return m;
    };
    const double s_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s_h = 1.0 / std::sqrt(static_cast<double>(hid_dim));
    w1 = randmat(hid_dim, in_dim, s_in);
    u1 = randmat(hid_dim, hid_dim, s_h);
    b1 = VecX::Zero(hid_dim);
    w2 = randmat(hid_dim, hid_dim, s_h);
    u2 = randmat(hid_dim, hid_dim, s_h);
    b2 = VecX::Zero(hid_dim);
    wo = randmat(out_dim, hid_dim, s_h);
    bo = VecX::Zero(out_dim);
    feat_mean = VecX::Zero(in_dim);
    feat_scale = VecX::Ones(in_dim);
}

VecX RnnModel::normalize(const VecX& x) const {
    return (x - feat_mean).cwiseQuotient(feat_scale);
}

std::vector<double*> RnnModel::param_ptrs() {
    std::vector<double*> out;
    for (MatX* m : {&w1, &u1, &w2, &u2, &wo})
        for (Eigen::Index i = 0; i < m->size(); ++i) out.push_back(m->data() + i);
    for (VecX* v : {&b1, &b2, &bo})
        for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back(v->data() + i);
    return out;
}

std::vector<const double*> RnnModel::param_ptrs() const {
    std::vector<const double*> out;
    for (const MatX* m : {&w1, &u1, &w2, &u2, &wo})
        for (Eigen::Index i = 0; i < m->size(); ++i) out.push_back(m->data() + i);
    for (const VecX* v : {&b1, &b2, &bo})
        for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back(v->data() + i);
    return out;
}

int RnnModel::param_count() const {
    return static_cast<int>(w1.size() + u1.size() + w2.size() + u2.size() +
                            wo.size() + b1.size() + b2.size() + bo.size());
}

VecX rnn_forward(const RnnModel& m, const std::vector<VecX>& seq, RnnCache* cache) {
    if (seq.empty()) throw std::invalid_argument("rnn_forward: empty sequence");
    if (!m.w1.allFinite() || !m.u1.allFinite() || !m.w2.allFinite() ||
        !m.u2.allFinite() || !m.wo.allFinite())
        throw std::invalid_argument("rnn_forward: non-finite weights");

    VecX h1 = VecX::Zero(m.hidden_dim);
    VecX h2 = VecX::Zero(m.hidden_dim);
    if (cache) {
        cache->x.clear();
        cache->h1.assign(1, h1);
        cache->h2.assign(1, h2);
    }
    for (const VecX& raw : seq) {
        const VecX x = m.normalize(raw);
        h1 = (m.w1 * x + m.u1 * h1 + m.b1).array().tanh();
        h2 = (m.w2 * h1 + m.u2 * h2 + m.b2).array().tanh();
        if (cache) {
            cache->x.push_back(x);
            cache->h1.push_back(h1);
            cache->h2.push_back(h2);
        }
    }
    VecX out = m.wo * h2 + m.bo;
    if (cache) cache->out = out;
    return out;
}

void RnnGrads::init_zero(const RnnModel& m) {
    w1 = MatX::Zero(m.w1.rows(), m.w1.cols());
    u1 = MatX::Zero(m.u1.rows(), m.u1.cols());
    b1 = VecX::Zero(m.b1.size());
    w2 = MatX::Zero(m.w2.rows(), m.w2.cols());
    u2 = MatX::Zero(m.u2.rows(), m.u2.cols());
    b2 = VecX::Zero(m.b2.size());
    wo = MatX::Zero(m.wo.rows(), m.wo.cols());
    bo = VecX::Zero(m.bo.size());
}

void RnnGrads::add_scaled(const RnnGrads& o, double s) {
    w1 += s * o.w1; u1 += s * o.u1; b1 += s * o.b1;
    w2 += s * o.w2; u2 += s * o.u2; b2 += s * o.b2;
    wo += s * o.wo; bo += s * o.bo;
}

double RnnGrads::norm() const {
    double sq = w1.squaredNorm() + u1.squaredNorm() + b1.squaredNorm() +
                w2.squaredNorm() + u2.squaredNorm() + b2.squaredNorm() +
                wo.squaredNorm() + bo.squaredNorm();
    return std::sqrt(sq);
}

void RnnGrads::scale(double s) {
    w1 *= s; u1 *= s; b1 *= s;
    w2 *= s; u2 *= s; b2 *= s;
    wo *= s; bo *= s;
}

std::vector<double*> RnnGrads::param_ptrs() {
    std::vector<double*> out;
    for (MatX* m : {&w1, &u1, &w2, &u2, &wo})
        for (Eigen::Index i = 0; i < m->size(); ++i) out.push_back(m->data() + i);
    for (VecX* v : {&b1, &b2, &bo})
        for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back(v->data() + i);
    return out;
}

void rnn_backward(const RnnModel& m, const RnnCache& cache, const VecX& d_out,
                  RnnGrads& g) {
    const int steps = static_cast<int>(cache.x.size());
    g.wo += d_out * cache.h2[steps].transpose();
    g.bo += d_out;

    VecX dh2 = m.wo.transpose() * d_out;
    VecX dh1 = VecX::Zero(m.hidden_dim);
    for (int t = steps; t >= 1; --t) {
        const VecX& h2t = cache.h2[t];
        const VecX da2 = dh2.cwiseProduct(VecX::Ones(m.hidden_dim) - h2t.cwiseProduct(h2t));
        g.w2 += da2 * cache.h1[t].transpose();
        g.u2 += da2 * cache.h2[t - 1].transpose();
        g.b2 += da2;
        dh1 += m.w2.transpose() * da2;
        dh2 = m.u2.transpose() * da2;

        const VecX& h1t = cache.h1[t];
        const VecX da1 = dh1.cwiseProduct(VecX::Ones(m.hidden_dim) - h1t.cwiseProduct(h1t));
        g.w1 += da1 * cache.x[t - 1].transpose();
        g.u1 += da1 * cache.h1[t - 1].transpose();
        g.b1 += da1;
        dh1 = m.u1.transpose() * da1;
    }
}

double gamma_from_raw(double raw, double floor) {
    // softplus with overflow guard
    const double sp = (raw > 30.0) ? raw : std::log1p(std::exp(raw));
    return sp + floor;
}

double d_gamma_d_raw(double raw) {
    return 1.0 / (1.0 + std::exp(-raw));
}

namespace {

json mat_to_json(const MatX& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

MatX mat_from_json(const json& j) {
    const auto rows = j.size();
    const auto cols = j.at(0).size();
    MatX m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    return m;
}

json vec_to_json(const VecX& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

VecX vec_from_json(const json& j) {
    VecX v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace

void save_model(const RnnModel& m, const std::string& path) {
    json j;
    j["input_dim"] = m.input_dim;
    j["hidden_dim"] = m.hidden_dim;
    j["output_dim"] = m.output_dim;
    j["gamma_floor"] = m.gamma_floor;
    j["w1"] = mat_to_json(m.w1);
    j["u1"] = mat_to_json(m.u1);
    j["b1"] = vec_to_json(m.b1);
    j["w2"] = mat_to_json(m.w2);
    j["u2"] = mat_to_json(m.u2);
    j["b2"] = vec_to_json(m.b2);
    j["wo"] = mat_to_json(m.wo);
    j["bo"] = vec_to_json(m.bo);
    j["feat_mean"] = vec_to_json(m.feat_mean);
    j["feat_scale"] = vec_to_json(m.feat_scale);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << j.dump();
}

RnnModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j = json::parse(in);
    RnnModel m;
    m.input_dim = j.at("input_dim").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    m.output_dim = j.at("output_dim").get<int>();
    m.gamma_floor = j.at("gamma_floor").get<double>();
    m.w1 = mat_from_json(j.at("w1"));
    m.u1 = mat_from_json(j.at("u1"));
    m.b1 = vec_from_json(j.at("b1"));
    m.w2 = mat_from_json(j.at("w2"));
    m.u2 = mat_from_json(j.at("u2"));
    m.b2 = vec_from_json(j.at("b2"));
    m.wo = mat_from_json(j.at("wo"));
    m.bo = vec_from_json(j.at("bo"));
    m.feat_mean = vec_from_json(j.at("feat_mean"));
    m.feat_scale = vec_from_json(j.at("feat_scale"));
    return m;
}

}  // namespace fsd
