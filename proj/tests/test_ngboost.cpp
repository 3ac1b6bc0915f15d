#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pvcast/errors.hpp"
#include "pvcast/model_io.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/util.hpp"

using namespace pvcast;

namespace {

Dataset make_dataset(const Matrix& X, const std::vector<double>& y) {
    Dataset d;
    d.X = X;
    d.y = y;
    for (std::size_t c = 0; c < X.cols(); ++c)
        d.feature_names.push_back("f" + std::to_string(c));
    d.row_timestamps.assign(y.size(), 0);
    return d;
}

Dataset line_dataset(int m, std::uint64_t seed, double noise) {
    Rng rng(seed);
    Matrix X(m, 1);
    std::vector<double> y(m);
    for (int i = 0; i < m; ++i) {
        X(i, 0) = rng.uniform(-3, 3);
        y[i] = X(i, 0) + noise * rng.normal();
    }
    return make_dataset(X, y);
}

}  // namespace

TEST_CASE("theta0 closed forms") {
    bool floored = false;
    DistParams p = fit_theta0(std::vector<double>{0, 2}, Family::Normal,
                              ScoreRule::LogScore, &floored);
    CHECK(p.mu == doctest::Approx(1.0));
    CHECK(p.scale() == doctest::Approx(1.0));
    CHECK(!floored);

    p = fit_theta0(std::vector<double>{5, 5, 5}, Family::Normal, ScoreRule::LogScore,
                   &floored);
    CHECK(p.mu == doctest::Approx(5.0));
    CHECK(p.scale() == doctest::Approx(1e-6));
    CHECK(floored);

    p = fit_theta0(std::vector<double>{0, 0, 3}, Family::Laplace, ScoreRule::LogScore);
    CHECK(p.mu == doctest::Approx(0.0));
    CHECK(p.scale() == doctest::Approx(1.0));
}

TEST_CASE("theta0 minimizes the crps objective too") {
    const std::vector<double> y{0.2, 0.9, 1.4, 2.2, 3.1};
    for (const Family family : {Family::Normal, Family::Laplace}) {
        const DistParams p = fit_theta0(y, family, ScoreRule::Crps);
        double base = 0.0;
        for (const double v : y) base += score(p, ScoreRule::Crps, v);
        // no nearby parameter beats the fit
        for (const double dmu : {-0.05, 0.05}) {
            for (const double dls : {-0.05, 0.05}) {
                DistParams q = p;
                q.mu += dmu;
                q.log_scale += dls;
                double s = 0.0;
                for (const double v : y) s += score(q, ScoreRule::Crps, v);
                CHECK(s >= base - 1e-8);
            }
        }
    }
}

TEST_CASE("constant features collapse to the ML normal") {
    Matrix X(50, 1, 7.0);  // constant column
    Rng rng(17);
    std::vector<double> y(50);
    for (auto& v : y) v = rng.uniform(0, 4);
    const Dataset d = make_dataset(X, y);
    NgbConfig cfg;
    cfg.n_stages = 30;
    cfg.learning_rate = 0.5;
    const NgbModel model = train(d, cfg);

    const DistParams at0 = predict_dist(model, std::vector<double>{7.0});
    const DistParams at1 = predict_dist(model, std::vector<double>{-2.0});
    CHECK(at0.mu == at1.mu);  // no split can distinguish inputs
    CHECK(at0.log_scale == at1.log_scale);
    CHECK(at0.mu == doctest::Approx(mean_of(y)).epsilon(1e-6));
    CHECK(at0.scale() == doctest::Approx(population_std(y)).epsilon(1e-3));
}

TEST_CASE("noise-free line is fitted tightly") {
    const Dataset d = line_dataset(200, 4, 0.0);
    NgbConfig cfg;
    cfg.n_stages = 200;
    cfg.learning_rate = 0.1;
    cfg.max_depth = 3;
    const NgbModel model = train(d, cfg);
    double sse = 0.0;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
        const double e = predict_dist(model, d.X.row(i)).mu - d.y[i];
        sse += e * e;
    }
    const double rmse = std::sqrt(sse / static_cast<double>(d.y.size()));
    CHECK(rmse <= 0.05 * population_std(d.y));
}

TEST_CASE("predicted scale tracks heteroscedastic noise") {
    Rng rng(11);
    const int m = 1500;
    Matrix X(m, 1);
    std::vector<double> y(m), true_scale(m);
    for (int i = 0; i < m; ++i) {
        const double x = rng.uniform(-2, 2);
        X(i, 0) = x;
        true_scale[i] = 0.1 * (1.0 + x * x);
        y[i] = std::sin(x) + true_scale[i] * rng.normal();
    }
    const Dataset d = make_dataset(X, y);
    NgbConfig cfg;
    cfg.n_stages = 300;
    cfg.learning_rate = 0.1;
    const NgbModel model = train(d, cfg);
    std::vector<double> predicted(m);
    for (int i = 0; i < m; ++i) predicted[i] = predict_dist(model, X.row(i)).scale();
    CHECK(pearson(predicted, true_scale) > 0.5);
}

TEST_CASE("staged scores are non-increasing and sized stages+1") {
    const Dataset d = line_dataset(300, 5, 0.2);
    NgbConfig cfg;
    cfg.n_stages = 60;
    cfg.learning_rate = 0.2;
    const NgbModel model = train(d, cfg);
    const std::vector<double> trace = staged_scores(model, d);
    REQUIRE(trace.size() == model.stages.size() + 1);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i] <= trace[i - 1] + 1e-9);
    }
    CHECK(trace.back() <= trace.front());

    // zero-stage model: the trace is just the theta0 score
    NgbConfig zero = cfg;
    zero.n_stages = 1;
    NgbModel stub = train(d, zero);
    stub.stages.clear();
    const std::vector<double> t0 = staged_scores(stub, d);
    REQUIRE(t0.size() == 1);
    double manual = 0.0;
    for (const double v : d.y) manual += score(stub.theta0, cfg.rule, v);
    CHECK(t0[0] == doctest::Approx(manual / static_cast<double>(d.y.size())));
}

TEST_CASE("prediction replays the stagewise accumulation exactly") {
    const Dataset d = line_dataset(250, 6, 0.3);
    NgbConfig cfg;
    cfg.n_stages = 40;
    cfg.learning_rate = 0.15;
    const NgbModel model = train(d, cfg);
    Rng rng(8);
    for (int probe = 0; probe < 20; ++probe) {
        const std::vector<double> x{rng.uniform(-3, 3)};
        double mu = model.theta0.mu;
        double ls = model.theta0.log_scale;
        for (const NgbStage& stage : model.stages) {
            mu -= cfg.learning_rate * stage.rho * predict_tree(stage.tree_mu, x);
            ls -= cfg.learning_rate * stage.rho * predict_tree(stage.tree_log_scale, x);
        }
        const DistParams p = predict_dist(model, x);
        CHECK(std::abs(p.mu - mu) <= 1e-12 * std::max(1.0, std::abs(mu)));
        CHECK(std::abs(p.log_scale - ls) <= 1e-12 * std::max(1.0, std::abs(ls)));
        const auto [raw_mu, raw_ls] = predict_raw(model, x);
        CHECK(raw_mu == p.mu);
        CHECK(raw_ls == p.log_scale);
    }
}

TEST_CASE("removing the last stage shifts theta by its exact contribution") {
    const Dataset d = line_dataset(200, 9, 0.25);
    NgbConfig cfg;
    cfg.n_stages = 25;
    cfg.learning_rate = 0.2;
    NgbModel model = train(d, cfg);
    REQUIRE(!model.stages.empty());
    const std::vector<double> x{0.37};
    const DistParams with = predict_dist(model, x);
    const NgbStage last = model.stages.back();
    model.stages.pop_back();
    const DistParams without = predict_dist(model, x);
    CHECK(with.mu == doctest::Approx(without.mu - cfg.learning_rate * last.rho *
                                                      predict_tree(last.tree_mu, x))
                         .epsilon(1e-12));
    CHECK(with.log_scale ==
          doctest::Approx(without.log_scale - cfg.learning_rate * last.rho *
                                                  predict_tree(last.tree_log_scale, x))
              .epsilon(1e-12));
}

TEST_CASE("rho values are nonnegative and dimensions are checked") {
    const Dataset d = line_dataset(150, 10, 0.2);
    NgbConfig cfg;
    cfg.n_stages = 15;
    const NgbModel model = train(d, cfg);
    for (const NgbStage& s : model.stages) CHECK(s.rho >= 0.0);
    CHECK_THROWS_AS(predict_dist(model, std::vector<double>{1.0, 2.0}), DataError);
}

TEST_CASE("training is deterministic") {
    const Dataset d = line_dataset(300, 12, 0.4);
    NgbConfig cfg;
    cfg.n_stages = 30;
    cfg.learning_rate = 0.1;
    const NgbModel a = train(d, cfg);
    const NgbModel b = train(d, cfg);
    REQUIRE(a.stages.size() == b.stages.size());
    CHECK(a.theta0.mu == b.theta0.mu);
    for (std::size_t i = 0; i < a.stages.size(); ++i) {
        CHECK(a.stages[i].rho == b.stages[i].rho);
    }
    Rng rng(2);
    for (int probe = 0; probe < 10; ++probe) {
        const std::vector<double> x{rng.uniform(-3, 3)};
        CHECK(predict_dist(a, x).mu == predict_dist(b, x).mu);
        CHECK(predict_dist(a, x).log_scale == predict_dist(b, x).log_scale);
    }
}

TEST_CASE("crps rule and laplace family also train monotonically") {
    const Dataset d = line_dataset(400, 13, 0.3);
    for (const Family family : {Family::Normal, Family::Laplace}) {
        for (const ScoreRule rule : {ScoreRule::LogScore, ScoreRule::Crps}) {
            NgbConfig cfg;
            cfg.n_stages = 25;
            cfg.learning_rate = 0.1;
            cfg.family = family;
            cfg.rule = rule;
            const NgbModel model = train(d, cfg);
            const std::vector<double> trace = staged_scores(model, d);
            for (std::size_t i = 1; i < trace.size(); ++i) {
                CHECK(trace[i] <= trace[i - 1] + 1e-9);
            }
        }
    }
}

TEST_CASE("model json round trip preserves predictions") {
    const Dataset d = line_dataset(200, 14, 0.2);
    NgbConfig cfg;
    cfg.n_stages = 20;
    cfg.learning_rate = 0.1;
    cfg.family = Family::Laplace;
    cfg.rule = ScoreRule::Crps;
    const NgbModel model = train(d, cfg);
    const std::string path = "/tmp/pvcast_test_ngb_roundtrip.json";
    save_ngb_model(model, path);
    const NgbModel back = load_ngb_model(path);
    CHECK(back.config.family == Family::Laplace);
    CHECK(back.config.rule == ScoreRule::Crps);
    CHECK(back.feature_names == model.feature_names);
    Rng rng(15);
    for (int probe = 0; probe < 25; ++probe) {
        const std::vector<double> x{rng.uniform(-3, 3)};
        const DistParams p = predict_dist(model, x);
        const DistParams q = predict_dist(back, x);
        CHECK(std::abs(p.mu - q.mu) <= 1e-12);
        CHECK(std::abs(p.log_scale - q.log_scale) <= 1e-12);
    }
    std::remove(path.c_str());
}
