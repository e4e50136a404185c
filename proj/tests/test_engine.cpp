#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "casmart/engine.hpp"
#include "casmart/experiment.hpp"

using namespace casmart;

namespace {

EngineConfig quick(Method m, std::size_t budget, std::uint64_t seed)
{
    EngineConfig c;
    c.method = m;
    c.budget = budget;
    c.seed = seed;
    c.restarts = 2;
    c.n_candidates = 64;
    return c;
}

SearchSpace unit_square() { return SearchSpace::continuous(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)); }

double plane(const Eigen::VectorXd& x) { return x[0] + 2.0 * x[1]; }

/// Feeds the initial design from a plane so the model is confident, then
/// stops with the first probe staged.
Session confident_session(std::uint64_t seed)
{
    EngineConfig c = quick(Method::cas, 10, seed);
    c.fixed_noise_variance = 1e-4;
    Session s(c, unit_square());
    while (s.phase() == Session::Phase::initializing) {
        const auto x = s.ask();
        s.tell(x, plane(x));
    }
    return s;
}

bool same_trace(const RunTrace& a, const RunTrace& b)
{
    if (a.records.size() != b.records.size() || a.initial.size() != b.initial.size())
        return false;
    for (std::size_t i = 0; i < a.initial.size(); ++i)
        if (a.initial[i].x != b.initial[i].x || a.initial[i].y != b.initial[i].y)
            return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto &r = a.records[i], &s = b.records[i];
        if (r.decision != s.decision || r.mode != s.mode || r.probe.x != s.probe.x || r.probe.y != s.probe.y ||
            r.evaluations_used != s.evaluations_used || r.test_rmse != s.test_rmse || r.test_crps != s.test_crps)
            return false;
        if (r.perturbed.has_value() != s.perturbed.has_value())
            return false;
        if (r.perturbed && r.perturbed->x != s.perturbed->x)
            return false;
    }
    return a.initial_rmse == b.initial_rmse;
}

} // namespace

TEST(Engine, ConfigValidation)
{
    EngineConfig c;
    c.budget = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = EngineConfig{};
    c.credible_level = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = EngineConfig{};
    c.flat.std = 2.0; // narrower than the kernel's largest prior std (10)
    EXPECT_THROW(c.validate(), ConfigError);
    c.method = Method::ei; // the flat prior is unused by baselines
    EXPECT_NO_THROW(c.validate());
    EXPECT_THROW(parse_method("random"), ConfigError);
    for (auto m : all_methods())
        EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(Engine, StreamsAreIndependentAndStable)
{
    EXPECT_EQ(stream_seed(7, stream::noise), stream_seed(7, stream::noise));
    EXPECT_NE(stream_seed(7, stream::noise), stream_seed(7, stream::perturbation));
    EXPECT_NE(stream_seed(7, stream::noise), stream_seed(8, stream::noise));
}

TEST(Engine, InitialDesignSixHump)
{
    const auto obj = make_six_hump();
    EngineConfig c = quick(Method::cas, 5, 3);
    Session a(c, obj.space), b(c, obj.space);
    std::vector<Eigen::VectorXd> pts;
    while (a.phase() == Session::Phase::initializing) {
        const auto x = a.ask();
        EXPECT_EQ(x, b.ask());
        EXPECT_TRUE(obj.space.contains(x));
        for (const auto& p : pts)
            EXPECT_NE(p, x);
        pts.push_back(x);
        a.tell(x, six_hump(x));
        b.tell(x, six_hump(x));
    }
    EXPECT_EQ(pts.size(), 5u);
}

TEST(Engine, InitialDesignGriewank)
{
    const auto obj = make_griewank();
    EngineConfig c = quick(Method::ei, 3, 1);
    c.n_init = 10;
    const auto trace = run(c, obj);
    ASSERT_EQ(trace.initial.size(), 10u);
    for (const auto& o : trace.initial)
        EXPECT_TRUE(obj.space.contains(o.x));
}

TEST(Engine, SeedsShiftTheSobolDesign)
{
    const auto obj = make_six_hump();
    Session a(quick(Method::cas, 5, 1), obj.space), b(quick(Method::cas, 5, 2), obj.space);
    EXPECT_NE(a.initial_sobol_skip(), b.initial_sobol_skip());
    EXPECT_NE(a.ask(), b.ask());
}

TEST(Engine, NoSurpriseStep)
{
    auto s = confident_session(1);
    const auto x = s.ask();
    const auto rec = s.tell(x, plane(x));
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->decision, Decision::no_surprise);
    EXPECT_EQ(rec->evaluations_used, 1);
    EXPECT_EQ(s.mode(), SearchMode::explore);
    EXPECT_EQ(s.train_y().back(), plane(x));
}

TEST(Engine, RefutedSurpriseKeepsOnlyThePerturbedPoint)
{
    auto s = confident_session(2);
    const auto probe = s.ask();
    EXPECT_FALSE(s.tell(probe, plane(probe) + 10.0).has_value());
    EXPECT_EQ(s.phase(), Session::Phase::verify);

    const auto xp = s.ask();
    EXPECT_NE(xp, probe);
    EXPECT_LT((xp - probe).norm(), 0.2);
    const std::size_t before = s.train_y().size();
    const auto rec = s.tell(xp, plane(xp));
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->decision, Decision::surprise_refuted);
    EXPECT_EQ(rec->evaluations_used, 2);
    EXPECT_FALSE(rec->probe_added);
    EXPECT_EQ(s.mode(), SearchMode::explore);
    ASSERT_EQ(s.train_y().size(), before + 1);
    EXPECT_EQ(s.train_y().back(), plane(xp));
    for (Eigen::Index i = 0; i < s.train_unit().rows(); ++i)
        EXPECT_NE(Eigen::VectorXd(s.train_unit().row(i).transpose()), probe);
    EXPECT_EQ(s.evaluations_used(), 2u);
}

TEST(Engine, ConfirmedSurpriseAddsBothAndExploits)
{
    auto s = confident_session(3);
    const auto probe = s.ask();
    s.tell(probe, plane(probe) + 10.0);
    const auto xp = s.ask();
    const std::size_t before = s.train_y().size();
    const auto rec = s.tell(xp, plane(xp) + 10.0);
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->decision, Decision::surprise_confirmed);
    EXPECT_TRUE(rec->probe_added);
    EXPECT_EQ(s.train_y().size(), before + 2);
    EXPECT_EQ(s.mode(), SearchMode::exploit);

    // The exploitation draw lands near the verified point.
    const auto xe = s.ask();
    EXPECT_LT((xe - xp).norm(), 0.2);
    const auto next = s.tell(xe, plane(xe));
    ASSERT_TRUE(next.has_value());
    EXPECT_EQ(next->decision, Decision::exploit_continue);
    EXPECT_EQ(next->mode, SearchMode::exploit);
    EXPECT_EQ(next->evaluations_used, 1);
}

TEST(Engine, SurpriseOnTheLastEvaluationIsUnverified)
{
    EngineConfig c = quick(Method::cas, 1, 4);
    c.fixed_noise_variance = 1e-4;
    Session s(c, unit_square());
    while (s.phase() == Session::Phase::initializing) {
        const auto x = s.ask();
        s.tell(x, plane(x));
    }
    const auto x = s.ask();
    const auto rec = s.tell(x, plane(x) + 10.0);
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->decision, Decision::surprise_unverified);
    EXPECT_TRUE(s.done());
    EXPECT_EQ(s.trace().evaluations(), 1u);
}

TEST(Engine, ProtocolErrors)
{
    auto s = confident_session(5);
    const auto x = s.ask();
    EXPECT_THROW(s.tell(x + Eigen::Vector2d(0.01, 0.0), 1.0), ProtocolError);
    EXPECT_THROW(s.tell(Eigen::Vector3d(0, 0, 0), 1.0), ProtocolError);
    EXPECT_THROW(s.tell(x, std::nan("")), InputError);

    EngineConfig c = quick(Method::ei, 1, 0);
    Session d(c, unit_square());
    while (!d.done()) {
        const auto p = d.ask();
        d.tell(p, plane(p));
    }
    EXPECT_THROW(d.ask(), ProtocolError);
    EXPECT_THROW(d.tell(Eigen::Vector2d(0, 0), 0.0), ProtocolError);
}

TEST(Engine, BudgetAccounting)
{
    const auto obj = make_six_hump();
    for (auto m : all_methods())
        for (std::uint64_t seed : {0u, 1u}) {
            auto c = quick(m, 15, seed);
            c.direction = Direction::minimize;
            const auto t = run(c, obj);
            EXPECT_EQ(t.evaluations(), 15u) << to_string(m);
            EXPECT_EQ(t.per_evaluation(false).size(), 16u);
            for (const auto& r : t.records) {
                EXPECT_TRUE(obj.space.contains(r.probe.x));
                if (r.perturbed) {
                    EXPECT_TRUE(obj.space.contains(r.perturbed->x));
                }
                EXPECT_EQ(r.evaluations_used == 2, r.perturbed.has_value());
            }
        }
}

TEST(Engine, ModeTransitionsFollowTheStateMachine)
{
    const auto obj = make_demo_1d();
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto c = quick(Method::cas, 25, seed);
        Eigen::MatrixXd init(2, 1);
        init << -1.0, 2.0;
        c.initial_points = init;
        const auto t = run(c, obj);
        SearchMode expected = SearchMode::explore;
        for (const auto& r : t.records) {
            EXPECT_EQ(r.mode, expected);
            switch (r.decision) {
            case Decision::no_surprise:
            case Decision::surprise_refuted:
            case Decision::surprise_unverified:
                EXPECT_EQ(r.mode, SearchMode::explore);
                expected = SearchMode::explore;
                break;
            case Decision::surprise_confirmed:
                EXPECT_EQ(r.mode, SearchMode::explore);
                EXPECT_TRUE(r.perturbed->surprise->flagged);
                expected = SearchMode::exploit;
                break;
            case Decision::exploit_continue:
                EXPECT_EQ(r.mode, SearchMode::exploit);
                expected = r.probe.surprise->flagged ? SearchMode::exploit : SearchMode::explore;
                break;
            case Decision::baseline_acquisition:
                ADD_FAILURE() << "baseline decision in a surprise run";
            }
            if (r.decision == Decision::surprise_refuted) {
                EXPECT_FALSE(r.perturbed->surprise->flagged);
            }
        }
    }
}

TEST(Engine, BaselinesOnlyTakeAcquisitionSteps)
{
    const auto t = run(quick(Method::ucb, 10, 3), make_six_hump());
    for (const auto& r : t.records) {
        EXPECT_EQ(r.decision, Decision::baseline_acquisition);
        EXPECT_EQ(r.mode, SearchMode::baseline);
        EXPECT_FALSE(r.probe.surprise.has_value());
    }
}

TEST(Engine, AskTellMatchesRun)
{
    const auto obj = make_demo_1d();
    auto c = quick(Method::cas, 20, 9);
    const auto test = benchmark_test_set(obj);
    const auto direct = run(c, obj, test);

    Session s(c, obj.space, test);
    auto noise = make_stream(c.seed, stream::noise);
    std::vector<Eigen::VectorXd> asked;
    while (!s.done()) {
        const auto x = s.ask();
        asked.push_back(x);
        s.tell(x, obj(x, noise));
    }
    EXPECT_TRUE(same_trace(direct, s.trace()));

    // Evaluation order seen by the caller equals the trace's order.
    std::size_t k = 0;
    for (const auto& o : direct.initial)
        EXPECT_EQ(o.x, asked.at(k++));
    for (const auto& r : direct.records) {
        EXPECT_EQ(r.probe.x, asked.at(k++));
        if (r.perturbed) {
            EXPECT_EQ(r.perturbed->x, asked.at(k++));
        }
    }
    EXPECT_EQ(k, asked.size());
}

TEST(Engine, Deterministic)
{
    const auto obj = make_six_hump();
    const auto test = benchmark_test_set(obj);
    for (auto m : {Method::cas, Method::ei}) {
        auto c = quick(m, 12, 21);
        EXPECT_TRUE(same_trace(run(c, obj, test), run(c, obj, test)));
    }
}

TEST(Engine, SurpriseMeasuresShareOneDecisionSemantics)
{
    // All three measures turn into the same interval test, so the traces
    // coincide step for step.
    const auto obj = make_demo_1d();
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto c = quick(Method::cas, 14, seed);
        const auto a = run(c, obj);
        c.method = Method::shannon;
        const auto b = run(c, obj);
        c.method = Method::bayesian;
        const auto d = run(c, obj);
        ASSERT_EQ(a.records.size(), b.records.size());
        ASSERT_EQ(a.records.size(), d.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            EXPECT_EQ(a.records[i].decision, b.records[i].decision);
            EXPECT_EQ(a.records[i].decision, d.records[i].decision);
            EXPECT_EQ(a.records[i].probe.x, b.records[i].probe.x);
        }
    }
}

TEST(Engine, PoolRunConsumesDistinctPoints)
{
    const auto table = synth_table(437, 20240601);
    auto base = quick(Method::cas, 125, 0);
    base.n_init = 25;
    base.kernel_family = KernelSpec::matern(1.5);
    base.refit_every = 25;
    base.restarts = 1;
    for (std::uint64_t seed : {0u, 1u}) {
        const auto setup = dataset_run_setup(table, base, 350, seed);
        const auto t = run(setup.engine, setup.objective, setup.test);
        EXPECT_EQ(t.evaluations(), 125u);
        std::set<std::vector<double>> seen;
        auto note = [&](const Observation& o) {
            EXPECT_TRUE(seen.insert(std::vector<double>(o.x.data(), o.x.data() + o.x.size())).second);
        };
        for (const auto& o : t.initial)
            note(o);
        for (const auto& r : t.records) {
            ASSERT_TRUE(r.probe.pool_index.has_value());
            note(r.probe);
            if (r.perturbed)
                note(*r.perturbed);
        }
        EXPECT_EQ(seen.size(), 150u);
    }
}

TEST(Engine, PoolTooSmallForTheBudget)
{
    Eigen::MatrixXd pts(6, 1);
    pts << 0, 1, 2, 3, 4, 5;
    auto c = quick(Method::ei, 5, 0);
    c.n_init = 2;
    EXPECT_THROW(Session(c, SearchSpace::pool(pts)), ConfigError);
}

TEST(Engine, DemoImprovesOnItsInitialFit)
{
    const auto obj = make_demo_1d();
    TestSet grid;
    grid.X.resize(301, 1);
    grid.y.resize(301);
    for (int i = 0; i < 301; ++i) {
        grid.X(i, 0) = -1.0 + 3.0 * i / 300.0;
        grid.y[i] = demo_1d_clean(grid.X(i, 0));
    }
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        EngineConfig c;
        c.seed = seed;
        c.budget = 12;
        Eigen::MatrixXd init(2, 1);
        init << -1.0, 2.0;
        c.initial_points = init;
        const auto t = run(c, obj, grid);
        if (t.final_rmse() <= t.initial_rmse)
            ++improved;
    }
    EXPECT_GE(improved, 27);
}
