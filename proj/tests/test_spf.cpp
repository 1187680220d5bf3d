#include "invchan/detail/stats.hpp"
#include "invchan/spf.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace invchan;

namespace {

const DelayModel kLoop = DelayModel::exp({1.0, 1.0, 0.5});
const Time kInf = 1.0 + std::log(2.0);
const Time kMin = 1.0;

const CriticalPoint& critical()
{
    static const CriticalPoint cp = critical_point(kLoop, 1e-12, 100000);
    return cp;
}

std::vector<Time> or_pulse_lengths(const Execution& e)
{
    std::vector<Time> out;
    for (const auto& [start, len] : pulses(e.signal("or"))) {
        (void)start;
        out.push_back(len);
    }
    return out;
}

} // namespace

TEST(LoopIterate, BigPulseIsCapturedAtOnce)
{
    const auto r = loop_iterate(kLoop, 2.0, 100);
    EXPECT_EQ(r.regime, Regime::Settles1);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_TRUE(r.pulse_lengths.empty());
}

TEST(LoopIterate, SmallPulseDiesAtOnce)
{
    const auto r = loop_iterate(kLoop, 0.5, 100);
    EXPECT_EQ(r.regime, Regime::Settles0);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(loop_iterate(kLoop, kInf - kMin, 100).regime, Regime::Settles0);
}

TEST(LoopIterate, MetastableAtTheCriticalPulse)
{
    const auto r = loop_iterate(kLoop, critical().delta0, 12);
    EXPECT_EQ(r.regime, Regime::Metastable);
    ASSERT_EQ(r.pulse_lengths.size(), 12u);
    for (Time d : r.pulse_lengths) {
        EXPECT_NEAR(d, critical().delta1, 1e-6);
    }
}

TEST(LoopIterate, StopRulesMatchTheLoopMap)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(kInf - kMin, kInf);
    const Time d_zero = kLoop.delta(Edge::Rising, 0.0);
    for (int k = 0; k < 500; ++k) {
        const Time d0 = u(rng);
        const auto r = loop_iterate(kLoop, d0, 100000);
        ASSERT_NE(r.regime, Regime::Metastable);
        EXPECT_EQ(r.iterations, r.pulse_lengths.size() + (r.regime == Regime::Settles1 ? 1 : 0));
        Time cur = first_loop_pulse(kLoop, d0);
        for (std::size_t n = 0; n < r.pulse_lengths.size(); ++n) {
            EXPECT_EQ(r.pulse_lengths[n], cur);
            const Time next = loop_map(kLoop, cur);
            if (n + 1 < r.pulse_lengths.size()) {
                EXPECT_GT(next, 0.0);
                EXPECT_LT(next, d_zero);
            }
            cur = next;
        }
        if (r.regime == Regime::Settles1) {
            EXPECT_GE(loop_map(kLoop, cur), d_zero);
        } else if (!r.pulse_lengths.empty()) {
            EXPECT_LE(loop_map(kLoop, r.pulse_lengths.back()), 0.0);
        }
    }
}

TEST(LoopIterate, RejectsUnsuitableChannels)
{
    EXPECT_THROW(loop_iterate(DelayModel::exp({1.0, 1.0, 0.3}), 1.0, 10), AsymmetricChannel);
    EXPECT_THROW(loop_iterate(DelayModel::pure(1.0), 1.0, 10), NonInvolutionModel);
    EXPECT_THROW(loop_iterate(DelayModel::exp({1.0, 0.0, 0.5}), 1.0, 10), NotStrictlyCausal);
    EXPECT_THROW(loop_iterate(kLoop, 0.0, 10), InvalidPulse);
}

TEST(TildeDelta1, FixedPointRelation)
{
    const Time x = tilde_delta1(kLoop);
    const Time d_zero = kLoop.delta(Edge::Rising, 0.0);
    EXPECT_LT(std::abs(kLoop.delta(Edge::Rising, -x) - 2.0 * x), 1e-12);
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, d_zero);
    // bracket endpoints straddle the root
    EXPECT_GT(kLoop.delta(Edge::Rising, -1e-9) - 2e-9, 0.0);
    EXPECT_LT(kLoop.delta(Edge::Rising, -d_zero) - 2.0 * d_zero, 0.0);
    EXPECT_NEAR(kLoop.delta(Edge::Rising, -d_zero), 0.0, 1e-12);
    // a fixed point of the loop map
    EXPECT_NEAR(loop_map(kLoop, x), x, 1e-12);
}

TEST(TildeDelta1, BelowDeltaZeroForRandomChannels)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> tau(0.2, 3.0), tp(0.05, 2.0);
    for (int k = 0; k < 50; ++k) {
        const auto m = DelayModel::exp({tau(rng), tp(rng), 0.5});
        const Time x = tilde_delta1(m);
        EXPECT_LT(x, m.delta(Edge::Rising, 0.0));
        EXPECT_LT(std::abs(m.delta(Edge::Rising, -x) - 2.0 * x), 1e-12 * (1.0 + m.delta_inf(Edge::Rising)));
    }
}

TEST(CriticalDelta0, TwoMethodsAgree)
{
    const auto& cp = critical();
    EXPECT_GT(cp.delta0, kInf - kMin);
    EXPECT_LT(cp.delta0, kInf);
    EXPECT_NEAR(cp.delta0, cp.delta0_closed, 1e-11);
    EXPECT_NEAR(first_loop_pulse(kLoop, cp.delta0_closed), cp.delta1, 1e-14);
    EXPECT_EQ(loop_iterate(kLoop, cp.delta0 - 1e-12, 100000).regime, Regime::Settles0);
    EXPECT_EQ(loop_iterate(kLoop, cp.delta0 + 1e-12, 100000).regime, Regime::Settles1);
    ASSERT_FALSE(cp.trace.empty());
    EXPECT_LE(cp.trace.back().hi - cp.trace.back().lo, 2e-12);
}

TEST(CriticalDelta0, OutcomeIsAStep)
{
    const Time c = critical().delta0;
    for (int k = 0; k <= 1000; ++k) {
        const Time d0 = 0.01 + 3.0 * k / 1000.0;
        if (std::abs(d0 - c) < 1e-9) {
            continue;
        }
        const auto r = loop_iterate(kLoop, d0, 100000);
        EXPECT_EQ(r.regime, d0 < c ? Regime::Settles0 : Regime::Settles1) << d0;
    }
}

TEST(CriticalDelta0, ScalesWithTimeUnits)
{
    const Time c1 = critical_delta0(kLoop, 1e-12, 100000);
    const Time c2 = critical_delta0(DelayModel::exp({2.0, 2.0, 0.5}), 1e-12, 100000);
    EXPECT_NEAR(c2, 2.0 * c1, 1e-9);
}

TEST(CriticalDelta0, WaveformLoopMatchesExp)
{
    std::vector<double> t, up, down;
    for (int k = 0; k <= 4000; ++k) {
        t.push_back(20.0 * k / 4000.0);
        up.push_back(-std::expm1(-t.back()));
        down.push_back(std::exp(-t.back()));
    }
    const auto w = from_waveforms(t, up, down, 1.0, 0.5);
    EXPECT_NEAR(critical_delta0(w, 1e-12, 100000), critical().delta0, 1e-5);
    EXPECT_NEAR(tilde_delta1(w), critical().delta1, 1e-5);
}

TEST(LoopMap, ExpandsAwayFromTheFixedPoint)
{
    const Time x = critical().delta1;
    const Time h = 1e-6 * 1.0;
    const double slope0 = delay_derivative(kLoop, Edge::Rising, 0.0, h);
    const Time d_zero = kLoop.delta(Edge::Rising, 0.0);
    for (int k = 1; k < 1000; ++k) {
        const Time d1 = d_zero * k / 1000.0;
        const Time lhs = std::abs(loop_map(kLoop, d1) - x);
        EXPECT_GE(lhs, (1.0 + slope0) * std::abs(d1 - x) - 1e-12) << d1;
    }
}

TEST(LoopSimulation, AgreesWithIteration)
{
    const Time c = critical().delta0;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(kInf - kMin, kInf);
    int checked = 0;
    while (checked < 50) {
        const Time d0 = u(rng);
        if (std::abs(d0 - c) < 1e-6) {
            continue;
        }
        ++checked;
        const auto r = loop_iterate(kLoop, d0, 100000);
        const Execution e = run_storage_loop(kLoop, d0, 1000.0);
        ASSERT_TRUE(e.terminated);
        const auto sim = or_pulse_lengths(e);
        ASSERT_EQ(sim.size(), r.pulse_lengths.size() + 1) << d0;
        EXPECT_DOUBLE_EQ(sim.front(), d0);
        for (std::size_t n = 0; n < r.pulse_lengths.size(); ++n) {
            EXPECT_NEAR(sim[n + 1], r.pulse_lengths[n], 1e-9);
        }
        EXPECT_EQ(e.signal("or").final_value(), r.regime == Regime::Settles1);
    }
}

TEST(LoopSimulation, PulseTrainAtTheCriticalPulse)
{
    const auto& cp = critical();
    // window before rounding noise, amplified each round trip, escapes the fixed point
    const Time horizon = kInf + 22.0 * 2.0 * cp.delta1 + cp.delta1;
    const Execution e = run_storage_loop(kLoop, cp.delta0, horizon);
    EXPECT_FALSE(e.terminated);
    const auto ps = pulses(e.signal("or"));
    ASSERT_GE(ps.size(), 21u);
    for (std::size_t n = ps.size() - 10; n < ps.size(); ++n) {
        EXPECT_NEAR(ps[n].second, cp.delta1, 1e-4);
        if (n + 1 < ps.size()) {
            const Time period = ps[n + 1].first - ps[n].first;
            EXPECT_NEAR(ps[n].second / period, 0.5, 1e-3);
        }
    }
}

TEST(StabilizationTime, Examples)
{
    EXPECT_EQ(stabilization_time(kLoop, 2.0 * kInf, 100.0), 0.0);
    EXPECT_DOUBLE_EQ(stabilization_time(kLoop, 0.1 * kMin, 100.0), 0.1 * kMin);
    const Time c = critical().delta0;
    EXPECT_LT(stabilization_time(kLoop, c + 1e-3, 1000.0), stabilization_time(kLoop, c + 1e-6, 1000.0));
    EXPECT_EQ(stabilization_time(kLoop, c, 20.0), 20.0);
}

TEST(StabilizationTime, GrowsLogarithmically)
{
    const Time c = critical().delta0;
    for (double sign : {1.0, -1.0}) {
        std::vector<double> ks, ts;
        for (int k = 3; k <= 9; ++k) {
            ks.push_back(k);
            ts.push_back(stabilization_time(kLoop, c + sign * std::pow(10.0, -k), 1000.0));
        }
        const auto fit = detail::linear_fit(ks, ts);
        EXPECT_GE(fit.r2, 0.95) << sign;
        EXPECT_GT(fit.slope, 0.0);
    }
}

TEST(HtFilter, TauBound)
{
    const double l = std::log(2.5);
    const Time bound = std::max(0.5 / l, 0.5 * (1.0 + 1.0 / 0.6) / l);
    EXPECT_NEAR(ht_tau_bound(0.5, 0.6), bound, 1e-15);
    const auto p = choose_ht_filter(0.5, 0.6);
    EXPECT_EQ(p.v_th, 0.6);
    EXPECT_EQ(p.t_p, 1.0);
    EXPECT_GT(p.tau, bound);
    EXPECT_LE(p.tau, 2.0 * bound);
    int e = 0;
    EXPECT_EQ(std::frexp(p.tau, &e), 0.5);
    // both constraints of the construction
    EXPECT_LE(0.5, -p.tau * std::log1p(-p.v_th));
    EXPECT_LE(0.5, ht_delta_tau(p.v_th, p.tau));
    for (int k = 0; k <= 100; ++k) {
        EXPECT_LE(ht_h(0.5 * k / 100.0, p.v_th, p.tau), 1.0 + 1e-15);
    }
    const auto q = choose_ht_filter(1.0, 0.5, 2.0);
    EXPECT_EQ(q.t_p, 2.0);
    EXPECT_GT(q.tau, ht_tau_bound(1.0, 0.5));
    EXPECT_LE(q.tau, 2.0 * ht_tau_bound(1.0, 0.5));
    EXPECT_THROW(choose_ht_filter(0.0, 0.5), InvalidModel);
    EXPECT_THROW(choose_ht_filter(1.0, 1.0), ThresholdOutOfRange);
}

TEST(HtFilter, BoundShrinksWithGamma)
{
    Time prev = std::numeric_limits<Time>::infinity();
    for (int k = 1; k < 100; ++k) {
        const double g = k / 100.0;
        const Time b = ht_tau_bound(1.0, g);
        EXPECT_LT(b, prev);
        EXPECT_GE(choose_ht_filter(1.0, g).tau, b);
        prev = b;
    }
}

TEST(HtFilter, SuppressesPulseTrains)
{
    const auto p = choose_ht_filter(0.5, 0.6);
    const auto m = DelayModel::exp(p);
    EXPECT_EQ(channel_output(m, false, make_pulse_train(0.0, 0.4, 0.4 / 0.5, 200)), Signal::constant(false));

    std::mt19937_64 rng(21);
    for (double delta_hat : {0.5, 2.0}) {
        for (double gamma : {0.3, 0.6, 0.9}) {
            const auto f = DelayModel::exp(choose_ht_filter(delta_hat, gamma));
            std::uniform_real_distribution<double> len(0.01 * delta_hat, delta_hat), ratio(0.01, gamma);
            for (int k = 0; k < 20; ++k) {
                const Time high = len(rng);
                const Time low = high / ratio(rng);
                EXPECT_EQ(channel_output(f, false, make_pulse_train(0.0, high, low, 300)), Signal::constant(false))
                    << delta_hat << " " << gamma << " " << high << " " << low;
            }
            // extremes of the admissible class
            EXPECT_EQ(channel_output(f, false, make_pulse_train(0.0, delta_hat, delta_hat / gamma, 300)),
                      Signal::constant(false));
        }
    }
}

TEST(SpfCircuit, Structure)
{
    const Circuit c = build_spf_circuit(kLoop, choose_ht_filter(kInf, 0.6));
    EXPECT_TRUE(validate(c).empty());
    EXPECT_FALSE(is_forward(c));
    EXPECT_THROW(build_spf_circuit(DelayModel::exp({1.0, 1.0, 0.3}), choose_ht_filter(1.0, 0.6)),
                 AsymmetricChannel);
}

TEST(SpfCircuit, LongPulseGivesACleanOne)
{
    const Circuit c = build_spf_circuit(kLoop, choose_ht_filter(kInf, 0.6));
    const Execution e = execute(c, {{"i", make_pulse(0.0, 2.0 * kInf)}}, 100.0);
    EXPECT_TRUE(e.terminated);
    const Signal& o = e.signal("o");
    ASSERT_EQ(o.size(), 1u);
    EXPECT_TRUE(o.transitions()[0].value);
}

TEST(CheckSpf, FilteredLoopPasses)
{
    const Circuit c = build_spf_circuit(kLoop, choose_ht_filter(kInf, 0.6));
    SpfCheckConfig cfg;
    cfg.epsilon = kInf;
    cfg.bound_K = 200.0;
    cfg.horizon = 300.0;
    const auto v = check_spf(c, cfg, {0.1, 0.5, 1.0, 2.0, 3.0});
    EXPECT_TRUE(v.f2);
    EXPECT_TRUE(v.f3);
    EXPECT_TRUE(v.f4);
    ASSERT_TRUE(v.f5.has_value());
    EXPECT_TRUE(*v.f5);
    EXPECT_TRUE(v.ok());
    EXPECT_EQ(v.cases.size(), 6u);
}

TEST(CheckSpf, FilteredLoopNeverEmitsShortPulses)
{
    const Time crit = critical().delta0;
    const Circuit c = build_spf_circuit(kLoop, choose_ht_filter(kInf, 0.6));
    std::vector<Time> set;
    for (int k = 1; k <= 300; ++k) {
        const Time d = 3.0 * k / 300.0;
        if (std::abs(d - crit) >= 1e-6) {
            set.push_back(d);
        }
    }
    for (double off : {1e-5, -1e-5, 2e-6, -2e-6}) {
        set.push_back(crit + off);
    }
    SpfCheckConfig cfg;
    cfg.epsilon = kInf;
    cfg.horizon = 400.0;
    const auto v = check_spf(c, cfg, set);
    EXPECT_TRUE(v.f2);
    EXPECT_TRUE(v.f3);
    EXPECT_TRUE(v.f4) << (v.failures.empty() ? "" : v.failures.front());
}

TEST(CheckSpf, WireLetsShortPulsesThrough)
{
    const Circuit wire = CircuitBuilder().input("i").gate("g", TruthTable::identity(), {"i"}).output("o", "g").build();
    SpfCheckConfig cfg;
    cfg.epsilon = 0.5;
    cfg.horizon = 10.0;
    const auto v = check_spf(wire, cfg, {0.1});
    EXPECT_TRUE(v.f2);
    EXPECT_TRUE(v.f3);
    EXPECT_FALSE(v.f4);
    EXPECT_FALSE(v.f5.has_value());
}

TEST(CheckSpf, UnfilteredLoopFailsTheBound)
{
    const Time crit = critical().delta0;
    SpfCheckConfig cfg;
    cfg.epsilon = 0.01;
    cfg.bound_K = 10.0;
    cfg.horizon = 200.0;
    const auto v = check_spf(build_storage_loop(kLoop), cfg, {0.5, crit + 1e-9});
    ASSERT_TRUE(v.f5.has_value());
    EXPECT_FALSE(*v.f5);
}

TEST(CheckSpf, RequiresOneInputOneOutput)
{
    const Circuit two = CircuitBuilder()
                            .input("a")
                            .input("b")
                            .gate("g", TruthTable::or2(), {"a", "b"})
                            .output("o", "g")
                            .build();
    EXPECT_THROW(check_spf(two, {}, {1.0}), ValidationError);
}
