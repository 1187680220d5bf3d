#pragma once

// Storage-loop analysis: the pulse-length iteration of an OR gate fed back
// through a symmetric involution channel, the critical pulse length, filter
// synthesis for the high-threshold stage and an SPF condition checker.

#include "invchan/circuit.hpp"
#include "invchan/engine.hpp"
#include "invchan/errors.hpp"
#include "invchan/involution.hpp"
#include "invchan/signal.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace invchan {

enum class Regime { Settles0, Settles1, Metastable };

inline const char* to_string(Regime r) noexcept
{
    switch (r) {
    case Regime::Settles0:
        return "Settles0";
    case Regime::Settles1:
        return "Settles1";
    case Regime::Metastable:
        return "Metastable";
    }
    return "?";
}

struct RegimeReport {
    Time delta0 = 0.0;
    Regime regime = Regime::Metastable;
    /// Completed OR pulses after the input pulse. A pulse whose rising edge
    /// gets captured never completes and is not listed.
    std::vector<Time> pulse_lengths;
    std::optional<Time> stabilization_time;
    std::size_t iterations = 0;
};

namespace detail {

inline double symmetry_tolerance(const DelayModel& m)
{
    return m.kind() == DelayModel::Kind::Exp ? 1e-9 : 1e-6;
}

inline void require_loop_model(const DelayModel& m)
{
    if (!m.is_involution()) {
        throw NonInvolutionModel("the storage loop analysis needs an involution channel");
    }
    if (!m.delta_min()) {
        throw NotStrictlyCausal("loop channel is not strictly causal");
    }
    if (!is_symmetric(m, symmetry_tolerance(m))) {
        throw AsymmetricChannel("the storage loop analysis needs delta_up == delta_down");
    }
}

// symmetric delay; the rising branch stands for both
inline Time sym_delta(const DelayModel& m, Time t) { return m.delta(Edge::Rising, t); }

/// Bisection of a continuous increasing g on [lo, hi] for g(x) = target,
/// narrowed until the bracket is <= tol or consists of adjacent doubles.
template <class G>
Time bisect_increasing(G&& g, Time lo, Time hi, Time target, Time tol)
{
    for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
        const Time mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (g(mid) < target ? lo : hi) = mid;
    }
    return std::abs(g(lo) - target) <= std::abs(g(hi) - target) ? lo : hi;
}

} // namespace detail

/// f(D) = delta(D - delta(-D)) + D - delta(-D): next pulse length in the loop.
inline Time loop_map(const DelayModel& m, Time d)
{
    const Time y = d - detail::sym_delta(m, -d);
    return detail::sym_delta(m, y) + y;
}

/// Length of the first loop pulse produced by an input pulse of length d0.
inline Time first_loop_pulse(const DelayModel& m, Time d0)
{
    const Time x = d0 - m.delta_inf(Edge::Rising);
    return x + detail::sym_delta(m, x);
}

inline RegimeReport loop_iterate(const DelayModel& m, Time delta0, std::size_t max_steps)
{
    detail::require_loop_model(m);
    if (!(delta0 > 0.0)) {
        throw InvalidPulse("input pulse length must be positive");
    }
    RegimeReport r;
    r.delta0 = delta0;
    const Time dinf = m.delta_inf(Edge::Rising);
    const Time dmin = *m.delta_min();
    if (delta0 >= dinf) {
        r.regime = Regime::Settles1;
        return r;
    }
    if (delta0 <= dinf - dmin) {
        r.regime = Regime::Settles0;
        return r;
    }
    const Time d_zero = detail::sym_delta(m, 0.0);
    Time cur = first_loop_pulse(m, delta0);
    if (cur <= 0.0) {
        r.regime = Regime::Settles0;
        return r;
    }
    while (r.iterations < max_steps) {
        const Time next = loop_map(m, cur);
        ++r.iterations;
        if (next >= d_zero) {
            r.regime = Regime::Settles1;
            return r;
        }
        r.pulse_lengths.push_back(cur);
        if (next <= 0.0) {
            r.regime = Regime::Settles0;
            return r;
        }
        cur = next;
    }
    r.regime = Regime::Metastable;
    return r;
}

/// The fixed point of the loop map: the root of delta(-x) - 2x on (0, delta(0)).
/// Bisection narrows the bracket to `tol` (0 means adjacent doubles).
inline Time tilde_delta1(const DelayModel& m, Time tol = 0.0)
{
    detail::require_loop_model(m);
    // -(delta(-x) - 2x) is increasing
    auto g = [&](Time x) { return 2.0 * x - detail::sym_delta(m, -x); };
    return detail::bisect_increasing(g, 0.0, detail::sym_delta(m, 0.0), 0.0, tol);
}

struct BisectionStep {
    Time lo = 0.0;
    Time hi = 0.0;
    Time mid = 0.0;
    Regime outcome = Regime::Metastable;
};

struct CriticalPoint {
    Time delta0 = 0.0;        ///< by bisection on the regime outcome
    Time delta0_closed = 0.0; ///< by solving first_loop_pulse(d0) = tilde_delta1
    Time delta1 = 0.0;
    std::vector<BisectionStep> trace;
};

inline CriticalPoint critical_point(const DelayModel& m, Time tol, std::size_t max_steps)
{
    detail::require_loop_model(m);
    CriticalPoint cp;
    const Time dinf = m.delta_inf(Edge::Rising);
    const Time dmin = *m.delta_min();

    Time lo = dinf - dmin;
    Time hi = dinf;
    bool exact = false;
    while (hi - lo > tol) {
        const Time mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const Regime r = loop_iterate(m, mid, max_steps).regime;
        cp.trace.push_back({lo, hi, mid, r});
        if (r == Regime::Metastable) {
            lo = hi = mid;
            exact = true;
            break;
        }
        (r == Regime::Settles0 ? lo : hi) = mid;
    }
    cp.delta0 = exact ? lo : lo + 0.5 * (hi - lo);

    cp.delta1 = tilde_delta1(m);
    auto g = [&](Time x) { return x + detail::sym_delta(m, x); };
    cp.delta0_closed = dinf + detail::bisect_increasing(g, -dmin, 0.0, cp.delta1, 0.0);

    if (std::abs(cp.delta0 - cp.delta0_closed) > 10.0 * std::max(tol, 1e-15)) {
        throw InvariantViolation("critical pulse length: outcome bisection " + std::to_string(cp.delta0) +
                                 " disagrees with the closed-form solve " + std::to_string(cp.delta0_closed));
    }
    return cp;
}

inline Time critical_delta0(const DelayModel& m, Time tol, std::size_t max_steps)
{
    return critical_point(m, tol, max_steps).delta0;
}

/// i -> or, or -> c -> or (feedback, init 0), or -> o.
inline Circuit build_storage_loop(const DelayModel& loop)
{
    return CircuitBuilder()
        .input("i")
        .gate("or", TruthTable::or2(), {"i", "c"})
        .channel("c", loop, false, "or", "or")
        .output("o", "or")
        .build();
}

/// Execution of the storage loop driven by pulse(0, delta0).
inline Execution run_storage_loop(const DelayModel& loop, Time delta0, Time horizon)
{
    return execute(build_storage_loop(loop), {{"i", make_pulse(0.0, delta0)}}, horizon);
}

/// Time of the last OR transition in the simulated loop, or `horizon` if the
/// loop has not settled by then.
inline Time stabilization_time(const DelayModel& m, Time delta0, Time horizon)
{
    detail::require_loop_model(m);
    const Execution e = run_storage_loop(m, delta0, horizon);
    if (!e.terminated) {
        return horizon;
    }
    const Signal& s = e.signal("or");
    return s.empty() ? 0.0 : s.transitions().back().time;
}

/// h(D) = v e^{-D/(v tau)} + (1 - v) e^{D/tau}; a train is suppressed where h <= 1.
inline double ht_h(Time d, double v_th, Time tau)
{
    return v_th * std::exp(-d / (v_th * tau)) + (1.0 - v_th) * std::exp(d / tau);
}

/// Root of h'(D): up to here h is decreasing.
inline Time ht_delta_tau(double v_th, Time tau) { return -tau * std::log1p(-v_th) / (1.0 + 1.0 / v_th); }

/// Smallest tau meeting both pulse-length constraints of the filter.
inline Time ht_tau_bound(Time delta_hat, double gamma)
{
    const double l = -std::log1p(-gamma);
    return std::max(delta_hat / l, delta_hat * (1.0 + 1.0 / gamma) / l);
}

/// Exp-channel with threshold gamma that maps every periodic train with pulse
/// length <= delta_hat and high/low ratio <= gamma to constant 0. tau is the
/// smallest power of two strictly above the bound.
inline ExpChannelParams choose_ht_filter(Time delta_hat, double gamma, Time t_p = 1.0)
{
    if (!(delta_hat > 0.0) || !std::isfinite(delta_hat)) {
        throw InvalidModel("filter pulse bound must be positive");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ThresholdOutOfRange("duty cycle bound must lie in (0, 1)");
    }
    int e = 0;
    std::frexp(ht_tau_bound(delta_hat, gamma), &e);
    return {std::ldexp(1.0, e), t_p, gamma};
}

/// The filtered storage loop: the loop above plus or -> ht -> o.
inline Circuit build_spf_circuit(const DelayModel& loop, const ExpChannelParams& ht)
{
    detail::require_loop_model(loop);
    Circuit c = CircuitBuilder()
                    .input("i")
                    .gate("or", TruthTable::or2(), {"i", "c"})
                    .channel("c", loop, false, "or", "or")
                    .channel("ht", DelayModel::exp(ht), false, "or", "o")
                    .output("o", "ht")
                    .build();
    require_valid(c);
    return c;
}

struct SpfCheckConfig {
    Time epsilon = 1.0;
    std::optional<Time> bound_K;
    Time horizon = 100.0;
};

struct SpfCase {
    Time delta0 = 0.0; ///< 0 for the zero input
    Signal output;
    bool terminated = false;
    std::optional<Time> shortest_pulse;
    std::optional<Time> last_transition;
};

struct SpfVerdict {
    bool f2 = false; ///< zero in, zero out
    bool f3 = false; ///< some pulse gives a non-zero output
    bool f4 = false; ///< no output pulse shorter than epsilon
    std::optional<bool> f5; ///< last output transition before T + K (only with a bound)
    std::vector<SpfCase> cases; ///< the zero input first, then the pulse set in order
    std::vector<std::string> failures;
    bool ok() const { return f2 && f3 && f4 && f5.value_or(true); }
};

inline SpfVerdict check_spf(const Circuit& c, const SpfCheckConfig& cfg, const std::vector<Time>& pulse_set)
{
    if (!(cfg.epsilon > 0.0)) {
        throw InvalidModel("epsilon must be positive");
    }
    if (c.inputs().size() != 1 || c.outputs().size() != 1) {
        throw ValidationError("an SPF circuit has exactly one input and one output port");
    }
    const std::string in = c.vertex(static_cast<std::size_t>(c.inputs().front())).id;
    const std::string out = c.vertex(static_cast<std::size_t>(c.outputs().front())).id;

    auto run = [&](Time d) {
        const Signal s = d > 0.0 ? make_pulse(0.0, d) : Signal::constant(false);
        const Execution e = execute(c, {{in, s}}, cfg.horizon);
        SpfCase k;
        k.delta0 = d;
        k.output = e.signal(out);
        k.terminated = e.terminated;
        for (const auto& [start, len] : pulses(k.output)) {
            (void)start;
            k.shortest_pulse = std::min(len, k.shortest_pulse.value_or(len));
        }
        if (!k.output.empty()) {
            k.last_transition = k.output.transitions().back().time;
        }
        return k;
    };

    SpfVerdict v;
    v.cases.push_back(run(0.0));
    v.f2 = v.cases.front().output == Signal::constant(false);
    if (!v.f2) {
        v.failures.push_back("F2: zero input produced a non-zero output");
    }
    for (Time d : pulse_set) {
        v.cases.push_back(run(d));
    }
    v.f3 = false;
    v.f4 = true;
    bool f5 = true;
    for (const auto& k : v.cases) {
        if (k.delta0 > 0.0 && k.output != Signal::constant(false)) {
            v.f3 = true;
        }
        if (k.shortest_pulse && *k.shortest_pulse < cfg.epsilon) {
            v.f4 = false;
            v.failures.push_back("F4: pulse " + std::to_string(k.delta0) + " gives an output pulse of length " +
                                 std::to_string(*k.shortest_pulse));
        }
        if (cfg.bound_K) {
            const Time deadline = k.delta0 + *cfg.bound_K;
            const bool late = !k.terminated || (k.last_transition && *k.last_transition >= deadline);
            if (late) {
                f5 = false;
                v.failures.push_back("F5: pulse " + std::to_string(k.delta0) + " still switches at or after " +
                                     std::to_string(deadline));
            }
        }
    }
    if (!v.f3) {
        v.failures.push_back("F3: no pulse in the set gives a non-zero output");
    }
    if (cfg.bound_K) {
        v.f5 = f5;
    }
    return v;
}

} // namespace invchan
