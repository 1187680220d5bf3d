#pragma once

// Empirical continuity experiments: output distance under short appended
// glitches, and measure curves of forward circuits over a pulse-length sweep.

#include "invchan/circuit.hpp"
#include "invchan/detail/stats.hpp"
#include "invchan/engine.hpp"
#include "invchan/errors.hpp"
#include "invchan/involution.hpp"
#include "invchan/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace invchan {

struct ProbePoint {
    Time epsilon = 0.0;
    Time distance = 0.0;
    /// d * epsilon for involution models, NaN for baselines
    Time bound = std::numeric_limits<Time>::quiet_NaN();
};

/// Where the worst-case glitch goes, and the factor d of the distance bound.
struct Perturbation {
    Time offset = 0.0;
    double d = 2.0;
};

/// Appends a glitch of length `eps` to the complement of the final value of
/// `base`, starting at `at` (strictly after the last transition).
inline Signal append_glitch(const Signal& base, Time at, Time eps)
{
    if (!(eps > 0.0) || !std::isfinite(at + eps)) {
        throw InvalidPulse("glitch needs a positive length and a finite start");
    }
    if (!base.empty() && !(at > base.transitions().back().time)) {
        throw InvalidPulse("glitch must start after the last transition");
    }
    if (at < 0.0) {
        throw InvalidPulse("glitch must start at or after 0");
    }
    std::vector<Transition> trs = base.transitions();
    const bool final = base.final_value();
    trs.push_back({at, !final});
    trs.push_back({at + eps, final});
    return Signal(base.initial(), std::move(trs));
}

namespace detail {

inline Time derivative_at(const DelayModel& m, Edge e, Time gap)
{
    if (std::isinf(gap)) {
        return 0.0;
    }
    const double h = 1e-6 * time_scale(m);
    if (gap - h <= m.domain_lower(e) + DelayModel::kBoundaryNudge) {
        return (m.delta(e, gap + 2.0 * h) - m.delta(e, gap + h)) / h;
    }
    return delay_derivative(m, e, gap, h);
}

} // namespace detail

/// Placement t_n + (delta_n - delta_min)+ after the last input transition t_n,
/// and d = max(2, delta'(t_n - t_{n-1} - delta_{n-1})). An empty base puts the
/// glitch at 0.
inline Perturbation optimal_perturbation(const DelayModel& model, const Signal& base)
{
    if (!model.is_involution()) {
        throw NonInvolutionModel("continuity probe needs an involution channel; use baseline_probe");
    }
    if (base.empty()) {
        return {0.0, 2.0};
    }
    const auto hist = channel_run(model, base.initial(), base).pending;
    const PendingTransition& last = hist.back();
    const Time dmin = *model.delta_min();
    Time at = last.input_time + std::max(last.delay - dmin, 0.0);
    if (!(at > last.input_time)) {
        at = std::nextafter(last.input_time, std::numeric_limits<Time>::infinity());
    }
    Time gap = std::numeric_limits<Time>::infinity();
    if (hist.size() >= 2) {
        const PendingTransition& prev = hist[hist.size() - 2];
        gap = last.input_time - prev.input_time - prev.delay;
    }
    const double slope = detail::derivative_at(model, edge_to(last.value), gap);
    return {at, std::max(2.0, slope)};
}

/// ||c(s_eps) - c(s)||_T with the glitch placed at `at`.
inline Time perturbation_distance(const DelayModel& model, const Signal& base, Time at, Time eps, Time horizon)
{
    if (eps == 0.0) {
        return 0.0;
    }
    const Signal ref = channel_output(model, base.initial(), base);
    const Signal pert = channel_output(model, base.initial(), append_glitch(base, at, eps));
    return distance(ref, pert, horizon);
}

namespace detail {

inline std::vector<ProbePoint> probe_at(const DelayModel& model, const Signal& base, std::span<const Time> epsilons,
                                        Time horizon, Time at, double d, bool with_bound)
{
    std::vector<ProbePoint> out;
    out.reserve(epsilons.size());
    for (const Time eps : epsilons) {
        if (!(eps >= 0.0) || !std::isfinite(eps)) {
            throw InvalidPulse("perturbation length must be finite and >= 0");
        }
        ProbePoint p;
        p.epsilon = eps;
        p.distance = perturbation_distance(model, base, at, eps, horizon);
        if (with_bound) {
            p.bound = d * eps;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace detail

/// Output distance caused by the worst-case glitch of each length in `epsilons`.
inline std::vector<ProbePoint> continuity_probe(const DelayModel& model, const Signal& base,
                                                std::span<const Time> epsilons, Time horizon)
{
    const Perturbation p = optimal_perturbation(model, base);
    return detail::probe_at(model, base, epsilons, horizon, p.offset, p.d, true);
}

/// Same protocol for constant-delay baselines; the glitch goes right after the
/// output settles (t_n + delay, or 0 for a constant base).
inline std::vector<ProbePoint> baseline_probe(const DelayModel& model, const Signal& base,
                                              std::span<const Time> epsilons, Time horizon)
{
    const Time at = base.empty() ? 0.0 : base.transitions().back().time + model.delta_inf(Edge::Rising);
    return detail::probe_at(model, base, epsilons, horizon, at, 2.0, false);
}

struct SweepPoint {
    Time delta = 0.0;
    Time mu = 0.0;
};

/// Measure of the output over [0, horizon] for input pulse(0, delta), per grid
/// point. delta == 0 feeds the zero signal.
inline std::vector<SweepPoint> forward_sweep(const Circuit& c, std::span<const Time> deltas, Time horizon)
{
    require_valid(c);
    if (!is_forward(c)) {
        throw NotForward("forward_sweep needs a circuit without feedback");
    }
    if (c.inputs().size() != 1 || c.outputs().size() != 1) {
        throw ValidationError("forward_sweep needs exactly one input and one output");
    }
    const std::string in = c.vertex(static_cast<std::size_t>(c.inputs().front())).id;
    const std::string out = c.vertex(static_cast<std::size_t>(c.outputs().front())).id;
    std::vector<SweepPoint> curve;
    curve.reserve(deltas.size());
    for (const Time d : deltas) {
        if (d < 0.0) {
            throw InvalidPulse("pulse length must be >= 0");
        }
        const Signal s = d == 0.0 ? Signal::constant(false) : make_pulse(0.0, d);
        const Execution e = execute(c, {{in, s}}, horizon);
        curve.push_back({d, mu(e.signal(out), horizon)});
    }
    return curve;
}

/// lo, lo + step, ... up to hi (inclusive within half a step).
inline std::vector<Time> uniform_grid(Time lo, Time hi, Time step)
{
    if (!(step > 0.0) || !(hi >= lo)) {
        throw InvalidPulse("grid needs step > 0 and hi >= lo");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
    std::vector<Time> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        g[k] = lo + static_cast<Time>(k) * step;
    }
    return g;
}

struct JumpAnalysis {
    Time max_jump = 0.0;
    Time step = 0.0;
    /// max adjacent jump divided by the grid step
    double statistic = 0.0;
    /// largest |slope| fitted anywhere on the curve
    double max_slope = 0.0;
    /// worst jump / (factor * local slope * step + slack); <= 1 means no discontinuity
    double worst_ratio = 0.0;
    Time worst_at = 0.0;
    bool ok() const noexcept { return worst_ratio <= 1.0; }
};

/// Compares each adjacent jump of the curve with least-squares slopes fitted on
/// `window` points to its left and to its right (the larger one counts). A jump
/// passes when it stays below factor * slope * step + slack.
inline JumpAnalysis analyze_jumps(std::span<const SweepPoint> curve, std::size_t window = 6, double factor = 10.0,
                                  double slack = 1e-12)
{
    JumpAnalysis a;
    if (curve.size() < 2) {
        return a;
    }
    auto fit = [&](std::size_t from, std::size_t to) {
        std::vector<double> x, y;
        for (std::size_t k = from; k < to; ++k) {
            x.push_back(curve[k].delta);
            y.push_back(curve[k].mu);
        }
        return x.size() >= 2 ? std::abs(detail::linear_fit(x, y).slope) : 0.0;
    };
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
        const Time h = curve[k + 1].delta - curve[k].delta;
        const Time jump = std::abs(curve[k + 1].mu - curve[k].mu);
        a.step = std::max(a.step, h);
        const double left = fit(k + 1 >= window ? k + 1 - window : 0, k + 1);
        const double right = fit(k + 1, std::min(curve.size(), k + 1 + window));
        const double slope = std::max(left, right);
        a.max_slope = std::max(a.max_slope, slope);
        if (jump > a.max_jump) {
            a.max_jump = jump;
            a.statistic = h > 0.0 ? jump / h : std::numeric_limits<double>::infinity();
        }
        const double ratio = jump / (factor * slope * h + slack);
        if (ratio > a.worst_ratio) {
            a.worst_ratio = ratio;
            a.worst_at = curve[k].delta;
        }
    }
    return a;
}

/// Smallest |mu - target| over the curve.
inline Time intermediate_value_gap(std::span<const SweepPoint> curve, Time target)
{
    Time best = std::numeric_limits<Time>::infinity();
    for (const auto& p : curve) {
        best = std::min(best, std::abs(p.mu - target));
    }
    return best;
}

} // namespace invchan
