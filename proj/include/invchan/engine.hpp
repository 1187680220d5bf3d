#pragma once

// Channel output generation with cancellation, and the execution
// construction algorithm for whole circuits with causal-depth tracking.

#include "invchan/circuit.hpp"
#include "invchan/delay_model.hpp"
#include "invchan/errors.hpp"
#include "invchan/signal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace invchan {

struct PendingTransition {
    Time input_time = 0.0;
    Time delay = 0.0;
    Time output_time = 0.0;
    bool value = false;
    int depth = 0;
    bool canceled = false;
};

/// Incremental state of one channel: feed input transitions in time order,
/// read back the surviving pending output transitions.
class ChannelState {
public:
    ChannelState(const DelayModel& model, bool init) : model_(&model), init_(init) {}

    struct FeedResult {
        bool survived = false;
        std::size_t index = 0; ///< history index of the new pending transition
        std::optional<std::size_t> removed; ///< history index of the transition it canceled
    };

    FeedResult feed(Time t, bool value, int depth)
    {
        const Edge e = edge_to(value);
        const Time gap = t - last_input_ - last_delay_;
        Time d;
        if (model_->is_involution()) {
            // the limit at the domain boundary is -inf; reached exactly when a reset
            // is undone at the same instant
            d = gap <= model_->domain_lower(e) ? -std::numeric_limits<Time>::infinity() : model_->delta(e, gap);
        } else {
            d = model_->delta_inf(e);
        }
        const std::size_t idx = history_.size();
        history_.push_back({t, d, t + d, value, depth + 1, false});

        bool cancel = false;
        if (!survivors_.empty()) {
            const PendingTransition& last = history_[survivors_.back()];
            if (model_->kind() == DelayModel::Kind::Inertial) {
                cancel = t - last_input_ < model_->rejection_width() && survivors_.back() + 1 == idx;
            } else {
                cancel = last.output_time >= t + d;
            }
        }
        last_input_ = t;
        last_delay_ = d;

        FeedResult r;
        r.index = idx;
        if (cancel) {
            if (survivors_.size() <= fixed_) {
                throw InvariantViolation("a fixed transition was canceled");
            }
            r.removed = survivors_.back();
            history_[survivors_.back()].canceled = true;
            history_[idx].canceled = true;
            survivors_.pop_back();
        } else {
            survivors_.push_back(idx);
            r.survived = true;
        }
        return r;
    }

    /// Marks the next surviving transition as fixed; it must be history entry `idx`.
    void fix(std::size_t idx)
    {
        detail::ensure(fixed_ < survivors_.size() && survivors_[fixed_] == idx, "fixing out of order");
        ++fixed_;
    }

    bool init() const noexcept { return init_; }
    const std::vector<PendingTransition>& history() const noexcept { return history_; }
    const std::vector<std::size_t>& survivors() const noexcept { return survivors_; }

    Signal output(Time horizon = std::numeric_limits<Time>::infinity()) const
    {
        std::vector<Transition> trs;
        for (std::size_t i : survivors_) {
            if (history_[i].output_time > horizon) {
                break;
            }
            trs.push_back({history_[i].output_time, history_[i].value});
        }
        return Signal(init_, std::move(trs));
    }

private:
    const DelayModel* model_;
    bool init_;
    Time last_input_ = -std::numeric_limits<Time>::infinity();
    Time last_delay_ = 0.0;
    std::vector<PendingTransition> history_;
    std::vector<std::size_t> survivors_;
    std::size_t fixed_ = 0;
};

/// Full record of a standalone channel run.
struct ChannelRun {
    std::vector<PendingTransition> pending; ///< every generated transition, including the reset
    bool reset = false;                     ///< whether pending[0] stems from a reset
    Signal output;
};

inline ChannelRun channel_run(const DelayModel& model, bool init, const Signal& input,
                              Time horizon = std::numeric_limits<Time>::infinity())
{
    ChannelState st(model, init);
    const bool reset = input.initial() != init;
    if (reset) {
        st.feed(0.0, input.initial(), 0);
    }
    for (const auto& tr : input.transitions()) {
        st.feed(tr.time, tr.value, 0);
    }
    return {st.history(), reset, st.output(horizon)};
}

/// Output signal of a channel with initial value `init` driven by `input`,
/// restricted to times <= horizon.
inline Signal channel_output(const DelayModel& model, bool init, const Signal& input,
                             Time horizon = std::numeric_limits<Time>::infinity())
{
    return channel_run(model, init, input, horizon).output;
}

struct Execution {
    std::vector<std::string> ids; ///< by circuit vertex index
    std::vector<Signal> signals;
    std::vector<std::vector<int>> depths; ///< causal depth per transition
    Time horizon = 0.0;
    bool terminated = false;
    std::size_t iterations = 0;
    std::vector<Time> iteration_times;

    std::size_t index_of(const std::string& id) const
    {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) {
            throw IndexOutOfRange("no vertex '" + id + "' in execution");
        }
        return static_cast<std::size_t>(it - ids.begin());
    }

    const Signal& signal(const std::string& id) const { return signals[index_of(id)]; }

    friend bool operator==(const Execution&, const Execution&) = default;
};

inline int causal_depth_of(const Execution& e, const std::string& vertex, std::size_t transition)
{
    const auto& d = e.depths[e.index_of(vertex)];
    if (transition >= d.size()) {
        throw IndexOutOfRange("vertex '" + vertex + "' has " + std::to_string(d.size()) + " transitions");
    }
    return d[transition];
}

/// Smallest delta_min over all channels; throws NotStrictlyCausal if any channel is not.
inline Time circuit_delta_min(const Circuit& c)
{
    Time m = std::numeric_limits<Time>::infinity();
    for (const auto& v : c.vertices()) {
        if (const auto* ch = v.channel()) {
            const auto dm = ch->model.delta_min();
            if (!dm) {
                throw NotStrictlyCausal("channel '" + v.id + "' is not strictly causal");
            }
            m = std::min(m, *dm);
        }
    }
    return m;
}

namespace detail {

// tolerance for the runtime progress assertions, which compare computed delays
inline bool at_least(Time a, Time b) noexcept { return a >= b - 1e-9 * (1.0 + std::abs(b)); }

} // namespace detail

using InputMap = std::map<std::string, Signal>;

/// Builds the unique execution of `c` for the given input signals on [0, horizon].
inline Execution execute(const Circuit& c, const InputMap& inputs, Time horizon)
{
    require_valid(c);
    const Time dmin_c = circuit_delta_min(c);
    const std::size_t n = c.size();

    for (const auto& [id, s] : inputs) {
        const int i = c.index_of(id);
        if (i == kMissing || c.vertex(static_cast<std::size_t>(i)).kind() != VertexKind::Input) {
            throw ValidationError("signal given for '" + id + "', which is not an input port");
        }
    }

    std::vector<bool> value(n, false);
    std::vector<int> depth_max(n, 0);
    std::vector<std::vector<Transition>> trs(n);
    std::vector<std::vector<int>> deps(n);
    std::vector<std::optional<ChannelState>> chan(n);
    std::vector<const Signal*> input_sig(n, nullptr);

    for (int i : c.inputs()) {
        const auto it = inputs.find(c.vertex(static_cast<std::size_t>(i)).id);
        if (it == inputs.end()) {
            throw ValidationError("no signal for input port '" + c.vertex(static_cast<std::size_t>(i)).id + "'");
        }
        input_sig[static_cast<std::size_t>(i)] = &it->second;
        value[static_cast<std::size_t>(i)] = it->second.initial();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (const auto* ch = c.vertex(i).channel()) {
            chan[i].emplace(ch->model, ch->init);
            value[i] = ch->init;
        }
    }
    auto eval_gate = [&](std::size_t g) {
        const auto& preds = c.preds(g);
        bool arr[kMaxGateArity] = {};
        for (std::size_t k = 0; k < preds.size(); ++k) {
            arr[k] = value[static_cast<std::size_t>(preds[k])];
        }
        return c.vertex(g).gate()->table(std::span<const bool>(arr, preds.size()));
    };
    std::vector<bool> initial(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (c.vertex(i).kind() == VertexKind::Gate) {
            value[i] = eval_gate(i);
        }
        initial[i] = value[i];
    }

    struct Event {
        Time t;
        int v;
        std::size_t seq;
        bool operator>(const Event& o) const
        {
            if (t != o.t) {
                return t > o.t;
            }
            if (v != o.v) {
                return v > o.v;
            }
            return seq > o.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;

    for (int i : c.inputs()) {
        const auto& s = *input_sig[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < s.size(); ++k) {
            queue.push({s.transitions()[k].time, i, k});
        }
    }
    // implicit reset of channels whose source starts at a different value
    for (std::size_t i = 0; i < n; ++i) {
        if (!chan[i]) {
            continue;
        }
        const auto src = static_cast<std::size_t>(c.preds(i)[0]);
        if (value[src] != chan[i]->init()) {
            const auto r = chan[i]->feed(0.0, value[src], 0);
            queue.push({chan[i]->history()[r.index].output_time, static_cast<int>(i), r.index});
        }
    }

    auto alive = [&](const Event& ev) {
        const auto& ch = chan[static_cast<std::size_t>(ev.v)];
        return !ch || !ch->history()[ev.seq].canceled;
    };

    std::size_t iteration = 0;
    std::vector<Time> iteration_times;
    Time prev_t = -std::numeric_limits<Time>::infinity();
    while (true) {
        while (!queue.empty() && !alive(queue.top())) {
            queue.pop();
        }
        if (queue.empty() || queue.top().t > horizon) {
            break;
        }
        const Time t = queue.top().t;
        ++iteration;
        const int k = static_cast<int>(iteration);
        detail::ensure(t > prev_t, "iteration times must strictly increase");
        prev_t = t;
        iteration_times.push_back(t);

        // (i) fix everything at t
        std::vector<std::size_t> touched;
        while (!queue.empty() && queue.top().t == t) {
            const Event ev = queue.top();
            queue.pop();
            if (!alive(ev)) {
                continue;
            }
            const auto v = static_cast<std::size_t>(ev.v);
            int d = 0;
            bool val;
            if (chan[v]) {
                chan[v]->fix(ev.seq);
                const auto& p = chan[v]->history()[ev.seq];
                d = p.depth;
                val = p.value;
            } else {
                val = input_sig[v]->transitions()[ev.seq].value;
            }
            detail::ensure(d <= k, "causal depth exceeds iteration count");
            trs[v].push_back({t, val});
            deps[v].push_back(d);
            value[v] = val;
            depth_max[v] = std::max(depth_max[v], d);
            touched.push_back(v);
        }

        // (ii) re-evaluate gates fed by the newly fixed transitions
        std::set<std::size_t> gates;
        for (std::size_t v : touched) {
            for (int s : c.succs(v)) {
                if (c.vertex(static_cast<std::size_t>(s)).kind() == VertexKind::Gate) {
                    gates.insert(static_cast<std::size_t>(s));
                }
            }
        }
        std::vector<std::size_t> sources;
        for (std::size_t v : touched) {
            if (!chan[v]) {
                sources.push_back(v);
            }
        }
        for (std::size_t g : gates) {
            const bool nv = eval_gate(g);
            if (nv == value[g]) {
                continue;
            }
            int d = 0;
            for (int p : c.preds(g)) {
                d = std::max(d, depth_max[static_cast<std::size_t>(p)]);
            }
            detail::ensure(d <= k, "causal depth exceeds iteration count");
            trs[g].push_back({t, nv});
            deps[g].push_back(d);
            value[g] = nv;
            depth_max[g] = std::max(depth_max[g], d);
            sources.push_back(g);
        }
        std::sort(sources.begin(), sources.end());

        // (iii) run the successor channels on the new source transitions
        for (std::size_t v : sources) {
            for (int s : c.succs(v)) {
                auto& ch = chan[static_cast<std::size_t>(s)];
                if (!ch) {
                    continue;
                }
                const auto r = ch->feed(t, trs[v].back().value, deps[v].back());
                if (!r.survived) {
                    continue;
                }
                const auto& p = ch->history()[r.index];
                const Time own_min = *c.vertex(static_cast<std::size_t>(s)).channel()->model.delta_min();
                detail::ensure(detail::at_least(p.delay, own_min), "surviving transition below minimal delay");
                detail::ensure(detail::at_least(p.output_time, t + dmin_c),
                               "new transition too close to the current iteration time");
                queue.push({p.output_time, s, r.index});
            }
        }
    }

    Execution ex;
    ex.horizon = horizon;
    ex.iterations = iteration;
    ex.iteration_times = std::move(iteration_times);
    ex.terminated = queue.empty();
    ex.ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ex.ids.push_back(c.vertex(i).id);
        ex.signals.emplace_back(initial[i], trs[i]);
        ex.depths.push_back(deps[i]);
    }
    for (int o : c.outputs()) {
        const auto g = static_cast<std::size_t>(c.preds(static_cast<std::size_t>(o))[0]);
        ex.signals[static_cast<std::size_t>(o)] = ex.signals[g];
        ex.depths[static_cast<std::size_t>(o)] = ex.depths[g];
    }
    return ex;
}

struct Violation {
    std::string rule; ///< "E2", "E3", "E4", "shape"
    std::string vertex;
    Time time = 0.0;
    std::string message;

    std::string to_string() const
    {
        return rule + " at '" + vertex + "' t=" + std::to_string(time) + ": " + message;
    }
};

/// Checks the execution equations on [0, horizon].
inline std::vector<Violation> verify_execution(const Circuit& c, const Execution& e)
{
    std::vector<Violation> out;
    if (e.signals.size() != c.size()) {
        out.push_back({"shape", "", 0.0, "execution does not match circuit size"});
        return out;
    }
    const Time h = e.horizon;
    auto sig = [&](int i) -> const Signal& { return e.signals[static_cast<std::size_t>(i)]; };

    for (std::size_t i = 0; i < c.size(); ++i) {
        const Vertex& v = c.vertex(i);
        const Signal& s = e.signals[i];
        switch (v.kind()) {
        case VertexKind::Input:
            break;
        case VertexKind::Output: {
            if (!(sig(c.preds(i)[0]).truncated(h) == s.truncated(h))) {
                out.push_back({"E2", v.id, 0.0, "output port differs from its driving gate"});
            }
            break;
        }
        case VertexKind::Channel: {
            const auto& ch = *v.channel();
            const Signal expect = channel_output(ch.model, ch.init, sig(c.preds(i)[0]).truncated(h), h);
            const Signal got = s.truncated(h);
            if (!(expect == got)) {
                Time at = 0.0;
                const auto& a = expect.transitions();
                const auto& b = got.transitions();
                std::size_t k = 0;
                while (k < a.size() && k < b.size() && a[k] == b[k]) {
                    ++k;
                }
                if (k < a.size() || k < b.size()) {
                    at = k < a.size() && k < b.size() ? std::min(a[k].time, b[k].time)
                                                      : (k < a.size() ? a[k].time : b[k].time);
                }
                out.push_back({"E3", v.id, at, "channel output differs from the channel function of its input"});
            }
            break;
        }
        case VertexKind::Gate: {
            const auto& g = *v.gate();
            const auto& preds = c.preds(i);
            std::vector<Time> times;
            for (int p : preds) {
                for (const auto& tr : sig(p).transitions()) {
                    times.push_back(tr.time);
                }
            }
            for (const auto& tr : s.transitions()) {
                times.push_back(tr.time);
            }
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());
            auto eval_at = [&](auto&& value_of) {
                bool arr[kMaxGateArity] = {};
                for (std::size_t k = 0; k < preds.size(); ++k) {
                    arr[k] = value_of(sig(preds[k]));
                }
                return g.table(std::span<const bool>(arr, preds.size()));
            };
            if (eval_at([](const Signal& x) { return x.initial(); }) != s.initial()) {
                out.push_back({"E4", v.id, -std::numeric_limits<Time>::infinity(), "initial value mismatch"});
            }
            for (Time t : times) {
                if (t > h) {
                    break;
                }
                if (eval_at([t](const Signal& x) { return x.value_at(t); }) != s.value_at(t)) {
                    out.push_back({"E4", v.id, t, "gate output differs from its Boolean function"});
                }
            }
            break;
        }
        }
    }
    return out;
}

} // namespace invchan
