#include <doctest.h>

#include "fsd/aero.hpp"
#include "fsd/plant.hpp"
#include "fsd/rnn.hpp"
#include "fsd/trainer.hpp"

#include <cstdio>
#include <random>

using namespace fsd;

namespace {

std::vector<VecX> random_seq(std::mt19937_64& rng, int len, int dim) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<VecX> seq(len);
    for (auto& x : seq) {
        x = VecX(dim);
        for (int i = 0; i < dim; ++i) x[i] = dist(rng);
    }
    return seq;
}

// plain recurrence written out step by step, no caching machinery
VecX naive_forward(const RnnModel& m, const std::vector<VecX>& seq) {
    VecX h1 = VecX::Zero(m.hidden_dim);
    VecX h2 = VecX::Zero(m.hidden_dim);
    for (const auto& raw : seq) {
        const VecX x = m.normalize(raw);
        h1 = (m.w1 * x + m.u1 * h1 + m.b1).array().tanh();
        h2 = (m.w2 * h1 + m.u2 * h2 + m.b2).array().tanh();
    }
    return m.wo * h2 + m.bo;
}

}  // namespace

TEST_CASE("rnn_forward") {
    RnnModel m;
    m.init(8, 8, 2, 5);
    std::mt19937_64 rng(11);

    SUBCASE("zero weights give the bias through the head") {
        RnnModel z;
        z.init(8, 8, 2, 5);
        for (double* ptr : z.param_ptrs()) *ptr = 0.0;
        z.bo = VecX::Zero(2);
        const VecX out = rnn_forward(z, random_seq(rng, 10, 8));
        CHECK(out.norm() == 0.0);
        CHECK(gamma_from_raw(out[1], z.gamma_floor) ==
              doctest::Approx(std::log(2.0) + z.gamma_floor));
    }
    SUBCASE("matches a naive recurrence") {
        for (int k = 0; k < 20; ++k) {
            const auto seq = random_seq(rng, 10, 8);
            const VecX out = rnn_forward(m, seq);
            CHECK((out - naive_forward(m, seq)).norm() < 1e-14);
        }
    }
    SUBCASE("deterministic") {
        const auto seq = random_seq(rng, 10, 8);
        const VecX a = rnn_forward(m, seq);
        const VecX b = rnn_forward(m, seq);
        CHECK((a - b).norm() == 0.0);
        RnnModel m2;
        m2.init(8, 8, 2, 5);
        CHECK((rnn_forward(m2, seq) - a).norm() == 0.0);
    }
    SUBCASE("cache shapes") {
        const auto seq = random_seq(rng, 10, 8);
        RnnCache cache;
        rnn_forward(m, seq, &cache);
        CHECK(cache.h1.size() == 11);
        CHECK(cache.h2.size() == 11);
        CHECK(cache.h1[0].norm() == 0.0);
        CHECK(cache.x.size() == 10);
    }
}

TEST_CASE("gamma head") {
    CHECK(gamma_from_raw(0.0, 0.05) == doctest::Approx(std::log(2.0) + 0.05));
    CHECK(gamma_from_raw(-50.0, 0.05) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(gamma_from_raw(40.0, 0.05) == doctest::Approx(40.05).epsilon(1e-9));
    const double h = 1e-6;
    for (double r : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
        const double fd = (gamma_from_raw(r + h, 0.0) - gamma_from_raw(r - h, 0.0)) / (2 * h);
        CHECK(d_gamma_d_raw(r) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("rnn_backward matches finite differences") {
    RnnModel m;
    m.init(8, 6, 2, 17);
    std::mt19937_64 rng(13);
    const auto seq = random_seq(rng, 10, 8);
    const VecX w = VecX::Random(2);  // fixed projection defines a scalar loss

    RnnCache cache;
    rnn_forward(m, seq, &cache);
    RnnGrads grads;
    grads.init_zero(m);
    rnn_backward(m, cache, w, grads);

    auto params = m.param_ptrs();
    auto gptrs = grads.param_ptrs();
    REQUIRE(params.size() == gptrs.size());
    const double h = 1e-6;
    double worst = 0.0;
    std::uniform_int_distribution<size_t> pick(0, params.size() - 1);
    for (int k = 0; k < 200; ++k) {
        const size_t i = pick(rng);
        const double save = *params[i];
        *params[i] = save + h;
        const double lp = w.dot(rnn_forward(m, seq));
        *params[i] = save - h;
        const double lm = w.dot(rnn_forward(m, seq));
        *params[i] = save;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(*gptrs[i] - fd) / (1e-8 + std::abs(fd) + std::abs(*gptrs[i]));
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("model persistence round trip") {
    RnnModel m;
    m.init(8, 8, 3, 77);
    m.feat_mean = VecX::Random(8);
    m.feat_scale = (VecX::Random(8).array().abs() + 0.5).matrix();
    const std::string path = "/tmp/fsd_test_model.json";
    save_model(m, path);
    const RnnModel back = load_model(path);
    std::remove(path.c_str());
    auto a = m.param_ptrs();
    auto b = back.param_ptrs();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    CHECK((m.feat_mean - back.feat_mean).norm() == 0.0);
    CHECK((m.feat_scale - back.feat_scale).norm() == 0.0);
    CHECK(back.output_dim == 3);
}

namespace {

// synthetic corpus where the true perturbation is exactly representable:
// constant alpha_w and gamma across all samples
std::vector<AeroSequenceSample> synthetic_samples(double alpha_w, double gamma,
                                                  const DroneParams& p, int n,
                                                  std::uint64_t seed,
                                                  double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<AeroSequenceSample> out;
    out.reserve(n);
    while (static_cast<int>(out.size()) < n) {
        AeroSequenceSample s;
        s.velocity = Vec3(7.0 * dist(rng), 7.0 * dist(rng), 3.0 * dist(rng));
        if (s.velocity.norm() < 1.0) continue;
        const EulerZyx e{0.4 * dist(rng), 0.4 * dist(rng), 2.5 * dist(rng)};
        s.attitude = rotation_from_euler(e);
        const Vec3 n_v = s.velocity.normalized();
        const Vec3 nrm = body_normal(s.attitude);
        if (n_v.cross(nrm).norm() < 1e-2) continue;
        const double alpha = std::asin(std::clamp(n_v.dot(nrm), -1.0, 1.0));
        s.inputs.resize(10);
        for (auto& x : s.inputs) {
            x = VecX(8);
            x << s.velocity.x(), s.velocity.y(), s.velocity.z(), e.roll, e.pitch,
                e.yaw, s.velocity.norm(), alpha;
        }
        s.label = reconstruct_force(alpha_w, gamma, s.velocity, s.attitude, p).force;
        if (noise > 0.0)
            s.label += noise * Vec3(gauss(rng), gauss(rng), gauss(rng));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("trainer") {
    DroneParams p;
    SUBCASE("zero learning rate leaves the model untouched") {
        auto samples = synthetic_samples(0.1, 1.2, p, 64, 3);
        RnnModel m;
        m.init(8, 8, 2, 9);
        fit_normalization(m, samples);
        const RnnModel before = m;
        TrainConfig cfg;
        cfg.episodes = 3;
        cfg.learning_rate = 0.0;
        const auto res = train_bptt(m, HeadKind::Parnn, samples, p, cfg);
        auto a = before.param_ptrs();
        auto b = res.model.param_ptrs();
        for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    }
    SUBCASE("sample gradient matches finite differences through reconstruction") {
        auto samples = synthetic_samples(0.15, 1.3, p, 8, 5);
        RnnModel m;
        m.init(8, 6, 2, 21);
        fit_normalization(m, samples);
        std::mt19937_64 rng(19);
        auto params = m.param_ptrs();
        std::uniform_int_distribution<size_t> pick(0, params.size() - 1);
        const double h = 1e-6;
        double worst = 0.0;
        for (const auto& s : samples) {
            RnnGrads grads;
            grads.init_zero(m);
            sample_loss_and_grad(m, HeadKind::Parnn, s, p, grads);
            auto gptrs = grads.param_ptrs();
            for (int k = 0; k < 20; ++k) {
                const size_t i = pick(rng);
                const double save = *params[i];
                *params[i] = save + h;
                const double lp =
                    (predict_force(m, HeadKind::Parnn, s, p) - s.label).squaredNorm();
                *params[i] = save - h;
                const double lm =
                    (predict_force(m, HeadKind::Parnn, s, p) - s.label).squaredNorm();
                *params[i] = save;
                const double fd = (lp - lm) / (2.0 * h);
                const double rel =
                    std::abs(*gptrs[i] - fd) / (1e-7 + std::abs(fd) + std::abs(*gptrs[i]));
                worst = std::max(worst, rel);
            }
        }
        CHECK(worst < 1e-4);
    }
    SUBCASE("learns a constant perturbation") {
        auto samples = synthetic_samples(0.12, 1.25, p, 400, 7);
        RnnModel m;
        m.init(8, 8, 2, 13);
        fit_normalization(m, samples);
        TrainConfig cfg;
        cfg.episodes = 150;
        cfg.seed = 13;
        const auto res = train_bptt(m, HeadKind::Parnn, samples, p, cfg);
        // recover the physical parameters on held-out style inputs
        auto probe = synthetic_samples(0.12, 1.25, p, 50, 99);
        double max_aw_err = 0.0, max_g_err = 0.0;
        for (const auto& s : probe) {
            const VecX out = rnn_forward(res.model, s.inputs);
            max_aw_err = std::max(max_aw_err, std::abs(out[0] - 0.12));
            max_g_err = std::max(
                max_g_err,
                std::abs(gamma_from_raw(out[1], res.model.gamma_floor) - 1.25));
        }
        CHECK(max_aw_err < 0.05);
        CHECK(max_g_err < 0.1);
        CHECK(res.best_episode >= 0);
        CHECK(evaluate_rmse(res.model, HeadKind::Parnn, probe, p) < 0.1);
    }
    SUBCASE("physics head is more noise robust than the direct head") {
        auto noisy = synthetic_samples(0.1, 1.2, p, 400, 17, 0.4);
        auto clean = synthetic_samples(0.1, 1.2, p, 120, 171);
        TrainConfig cfg;
        cfg.episodes = 120;
        cfg.seed = 3;
        RnnModel mp;
        mp.init(8, 8, 2, 31);
        fit_normalization(mp, noisy);
        const auto parnn = train_bptt(mp, HeadKind::Parnn, noisy, p, cfg);
        RnnModel mv;
        mv.init(8, 8, 3, 31);
        fit_normalization(mv, noisy);
        const auto vanilla = train_bptt(mv, HeadKind::Vanilla, noisy, p, cfg);
        const double rp = evaluate_rmse(parnn.model, HeadKind::Parnn, clean, p);
        const double rv = evaluate_rmse(vanilla.model, HeadKind::Vanilla, clean, p);
        CHECK(rp <= rv);
    }
    SUBCASE("training is deterministic") {
        auto samples = synthetic_samples(0.1, 1.2, p, 100, 23);
        TrainConfig cfg;
        cfg.episodes = 10;
        RnnModel m1;
        m1.init(8, 8, 2, 2);
        fit_normalization(m1, samples);
        RnnModel m2 = m1;
        const auto r1 = train_bptt(m1, HeadKind::Parnn, samples, p, cfg);
        const auto r2 = train_bptt(m2, HeadKind::Parnn, samples, p, cfg);
        auto a = r1.model.param_ptrs();
        auto b = r2.model.param_ptrs();
        for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
        CHECK(r1.val_loss == r2.val_loss);
    }
}
