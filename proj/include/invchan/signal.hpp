#pragma once

// Binary signals: an initial value at -infinity followed by a finite,
// strictly increasing list of alternating transitions at times >= 0.
// Infinite signals (pulse trains) only ever exist truncated to a horizon.

#include "invchan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace invchan {

using Time = double;

enum class Edge { Rising, Falling };

inline constexpr Edge edge_to(bool value) noexcept { return value ? Edge::Rising : Edge::Falling; }

struct Transition {
    Time time = 0.0;
    bool value = false;

    friend bool operator==(const Transition&, const Transition&) = default;
};

class Signal {
public:
    Signal() = default;

    /// Throws InvalidSignal unless the transitions are at finite times >= 0,
    /// strictly increasing, and alternate starting from !initial.
    Signal(bool initial, std::vector<Transition> transitions)
        : initial_(initial), transitions_(std::move(transitions))
    {
        bool prev = initial_;
        Time prev_time = -INFINITY;
        for (const auto& tr : transitions_) {
            if (!std::isfinite(tr.time) || tr.time < 0.0) {
                throw InvalidSignal("transition at time " + std::to_string(tr.time) + " violates t >= 0");
            }
            if (!(tr.time > prev_time)) {
                throw InvalidSignal("transition times must be strictly increasing");
            }
            if (tr.value == prev) {
                throw InvalidSignal("transitions must alternate");
            }
            prev = tr.value;
            prev_time = tr.time;
        }
    }

    static Signal constant(bool value) { return Signal(value, {}); }

    /// Alternating transitions at the given times, the first one toggling `initial`.
    static Signal from_times(bool initial, std::span<const Time> times)
    {
        std::vector<Transition> trs;
        trs.reserve(times.size());
        bool v = initial;
        for (Time t : times) {
            v = !v;
            trs.push_back({t, v});
        }
        return Signal(initial, std::move(trs));
    }

    bool initial() const noexcept { return initial_; }
    const std::vector<Transition>& transitions() const noexcept { return transitions_; }
    std::size_t size() const noexcept { return transitions_.size(); }
    bool empty() const noexcept { return transitions_.empty(); }

    /// Value after the last transition.
    bool final_value() const noexcept { return transitions_.empty() ? initial_ : transitions_.back().value; }

    /// Half-open convention: the new value already holds at the transition time.
    bool value_at(Time t) const noexcept
    {
        auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t,
                                   [](Time x, const Transition& tr) { return x < tr.time; });
        if (it == transitions_.begin()) {
            return initial_;
        }
        return std::prev(it)->value;
    }

    /// Transitions at times <= horizon.
    Signal truncated(Time horizon) const
    {
        auto it = std::upper_bound(transitions_.begin(), transitions_.end(), horizon,
                                   [](Time x, const Transition& tr) { return x < tr.time; });
        Signal out;
        out.initial_ = initial_;
        out.transitions_.assign(transitions_.begin(), it);
        return out;
    }

    Signal complement() const
    {
        Signal out = *this;
        out.initial_ = !initial_;
        for (auto& tr : out.transitions_) {
            tr.value = !tr.value;
        }
        return out;
    }

    friend bool operator==(const Signal&, const Signal&) = default;

private:
    bool initial_ = false;
    std::vector<Transition> transitions_;
};

/// Pulse of `length` at `start`: initial 0, rising at start, falling at start + length.
inline Signal make_pulse(Time start, Time length)
{
    if (!(length > 0.0) || !(start >= 0.0) || !std::isfinite(start + length)) {
        throw InvalidPulse("pulse needs start >= 0 and length > 0");
    }
    return Signal(false, {{start, true}, {start + length, false}});
}

/// Periodic train starting at `start`: `count` pulses of `high`, separated by `low`.
inline Signal make_pulse_train(Time start, Time high, Time low, std::size_t count)
{
    if (!(high > 0.0) || !(low > 0.0) || !(start >= 0.0)) {
        throw InvalidPulse("pulse train needs start >= 0 and positive high/low times");
    }
    std::vector<Transition> trs;
    trs.reserve(2 * count);
    for (std::size_t k = 0; k < count; ++k) {
        const Time rise = start + static_cast<Time>(k) * (high + low);
        trs.push_back({rise, true});
        trs.push_back({rise + high, false});
    }
    return Signal(false, std::move(trs));
}

/// Pointwise combination of two signals by a two-pointer merge, O(n + m).
template <typename Op>
Signal combine(const Signal& a, const Signal& b, Op op)
{
    const auto& ta = a.transitions();
    const auto& tb = b.transitions();
    bool va = a.initial();
    bool vb = b.initial();
    const bool init = op(va, vb);
    bool cur = init;
    std::vector<Transition> out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ta.size() || j < tb.size()) {
        Time t;
        if (j >= tb.size() || (i < ta.size() && ta[i].time < tb[j].time)) {
            t = ta[i].time;
        } else {
            t = tb[j].time;
        }
        while (i < ta.size() && ta[i].time == t) {
            va = ta[i++].value;
        }
        while (j < tb.size() && tb[j].time == t) {
            vb = tb[j++].value;
        }
        const bool v = op(va, vb);
        if (v != cur) {
            out.push_back({t, v});
            cur = v;
        }
    }
    return Signal(init, std::move(out));
}

/// Measure of {t in [0, horizon] : s(t) = 1}.
inline Time mu(const Signal& s, Time horizon)
{
    if (horizon <= 0.0) {
        return 0.0;
    }
    Time total = 0.0;
    Time since = 0.0;
    bool v = s.initial();
    for (const auto& tr : s.transitions()) {
        if (tr.time >= horizon) {
            break;
        }
        if (v) {
            total += tr.time - since;
        }
        since = tr.time;
        v = tr.value;
    }
    if (v) {
        total += horizon - since;
    }
    return total;
}

/// ||s1 - s2||_T: measure of the disagreement set on [0, horizon].
inline Time distance(const Signal& s1, const Signal& s2, Time horizon)
{
    return mu(combine(s1, s2, [](bool x, bool y) { return x != y; }), horizon);
}

/// Returns (min, max) of the two signals, pointwise.
inline std::pair<Signal, Signal> pointwise_min_max(const Signal& s1, const Signal& s2)
{
    return {combine(s1, s2, [](bool x, bool y) { return x && y; }),
            combine(s1, s2, [](bool x, bool y) { return x || y; })};
}

/// Pointwise s1 <= s2.
inline bool dominated_by(const Signal& s1, const Signal& s2)
{
    return combine(s1, s2, [](bool x, bool y) { return x && !y; }) == Signal::constant(false);
}

/// Positive pulses (rise followed by fall) as (start, length) pairs.
inline std::vector<std::pair<Time, Time>> pulses(const Signal& s)
{
    std::vector<std::pair<Time, Time>> out;
    const auto& trs = s.transitions();
    for (std::size_t k = 0; k + 1 < trs.size(); ++k) {
        if (trs[k].value && !trs[k + 1].value) {
            out.emplace_back(trs[k].time, trs[k + 1].time - trs[k].time);
        }
    }
    return out;
}

} // namespace invchan
