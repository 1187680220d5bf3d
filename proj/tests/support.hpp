#pragma once

// Shared test helpers: independent oracles and random generators. No test
// framework dependency so the acceptance runner can use them as well.

#include "invchan/circuit.hpp"
#include "invchan/engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace invchan::testing {

/// Channel output by the literal marking rule: compute every delta_n first,
/// mark all pairs n < m with t_n + delta_n >= t_m + delta_m, return the rest.
inline Signal marking_oracle(const DelayModel& m, bool init, const Signal& in)
{
    std::vector<Transition> inputs;
    if (in.initial() != init) {
        inputs.push_back({0.0, in.initial()});
    }
    inputs.insert(inputs.end(), in.transitions().begin(), in.transitions().end());

    std::vector<Time> out(inputs.size());
    Time prev_t = -INFINITY;
    Time prev_d = 0.0;
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const Edge e = edge_to(inputs[n].value);
        const Time gap = inputs[n].time - prev_t - prev_d;
        Time d;
        if (!m.is_involution()) {
            d = m.delta_inf(e);
        } else if (gap <= m.domain_lower(e)) {
            d = -INFINITY;
        } else {
            d = m.delta(e, gap);
        }
        out[n] = inputs[n].time + d;
        prev_t = inputs[n].time;
        prev_d = d;
    }
    std::vector<bool> marked(inputs.size(), false);
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        for (std::size_t k = n + 1; k < inputs.size(); ++k) {
            if (out[n] >= out[k]) {
                marked[n] = marked[k] = true;
            }
        }
    }
    std::vector<Transition> res;
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        if (!marked[n]) {
            res.push_back({out[n], inputs[n].value});
        }
    }
    return Signal(init, std::move(res));
}

/// Analog model behind the exp-channel: pure delay T_p, first-order low-pass
/// with time constant tau, comparator at V_th. Solved piecewise in closed form.
inline Signal rc_oracle(const ExpChannelParams& p, bool init, const Signal& in)
{
    // delayed input including the implicit reset at time 0
    std::vector<Transition> u;
    if (in.initial() != init) {
        u.push_back({p.t_p, in.initial()});
    }
    for (const auto& tr : in.transitions()) {
        if (!u.empty() && u.back().time == tr.time + p.t_p) {
            u.pop_back(); // reset undone at the same instant
            continue;
        }
        u.push_back({tr.time + p.t_p, tr.value});
    }
    double v = init ? 1.0 : 0.0;
    bool out = init;
    std::vector<Transition> res;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Time t0 = u[k].time;
        const Time t1 = k + 1 < u.size() ? u[k + 1].time : INFINITY;
        const double target = u[k].value ? 1.0 : 0.0;
        const bool crosses = target > v ? (v < p.v_th && p.v_th <= target) : (v >= p.v_th && p.v_th > target);
        if (crosses) {
            const Time tc = t0 + p.tau * std::log((v - target) / (p.v_th - target));
            if (tc < t1) {
                out = !out;
                res.push_back({tc, out});
            }
        }
        if (std::isfinite(t1)) {
            v = target + (v - target) * std::exp(-(t1 - t0) / p.tau);
        }
    }
    return Signal(init, std::move(res));
}

inline Signal random_signal(std::mt19937_64& rng, std::size_t max_transitions, Time span, bool initial)
{
    std::uniform_int_distribution<std::size_t> count(0, max_transitions);
    std::uniform_real_distribution<Time> when(0.0, span);
    std::vector<Time> times(count(rng));
    for (auto& t : times) {
        t = when(rng);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return Signal::from_times(initial, times);
}

inline ExpChannelParams random_exp(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> tau(0.2, 2.0), tp(0.1, 1.0), vth(0.2, 0.8);
    return {tau(rng), tp(rng), vth(rng)};
}

struct RandomCircuitConfig {
    std::size_t max_gates = 6;
    std::size_t max_inputs = 2;
    std::size_t max_arity = 3;
    std::size_t max_feedback = 2; ///< channels from gate j to gate i with j >= i
    bool allow_baselines = false;
};

/// Random valid circuit with gates g0.., inputs i0.., outputs o0 (from g0) and
/// possibly more. Channels are named c<k>.
inline Circuit random_circuit(std::mt19937_64& rng, const RandomCircuitConfig& cfg = {})
{
    std::uniform_int_distribution<std::size_t> ng(1, cfg.max_gates), ni(1, cfg.max_inputs),
        na(1, cfg.max_arity);
    const std::size_t gates = ng(rng);
    const std::size_t inputs = ni(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    CircuitBuilder b;
    std::vector<std::string> gate_ids, input_ids;
    for (std::size_t k = 0; k < inputs; ++k) {
        input_ids.push_back("i" + std::to_string(k));
        b.input(input_ids.back());
    }
    for (std::size_t k = 0; k < gates; ++k) {
        gate_ids.push_back("g" + std::to_string(k));
    }
    // shared initial value per channel source
    std::map<std::string, bool> src_init;
    auto init_of = [&](const std::string& src) {
        auto it = src_init.find(src);
        if (it == src_init.end()) {
            it = src_init.emplace(src, u(rng) < 0.5).first;
        }
        return it->second;
    };
    auto model = [&]() {
        if (cfg.allow_baselines && u(rng) < 0.15) {
            const double d = 0.3 + u(rng);
            return u(rng) < 0.5 ? DelayModel::pure(d) : DelayModel::inertial(d, d * (0.2 + 0.7 * u(rng)));
        }
        return DelayModel::exp(random_exp(rng));
    };

    std::size_t channels = 0;
    std::size_t feedback = 0;
    std::vector<bool> input_used(inputs, false);
    std::vector<std::vector<std::string>> gate_inputs(gates);
    for (std::size_t g = 0; g < gates; ++g) {
        const std::size_t arity = na(rng);
        for (std::size_t a = 0; a < arity; ++a) {
            const double r = u(rng);
            if (r < 0.25) {
                // input port straight into the gate
                const std::size_t i = std::uniform_int_distribution<std::size_t>(0, inputs - 1)(rng);
                input_used[i] = true;
                gate_inputs[g].push_back(input_ids[i]);
                continue;
            }
            std::string src;
            if (r < 0.5) {
                const std::size_t i = std::uniform_int_distribution<std::size_t>(0, inputs - 1)(rng);
                input_used[i] = true;
                src = input_ids[i];
            } else {
                std::size_t j = std::uniform_int_distribution<std::size_t>(0, gates - 1)(rng);
                if (j >= g && feedback >= cfg.max_feedback) {
                    if (g == 0) {
                        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, inputs - 1)(rng);
                        input_used[i] = true;
                        src = input_ids[i];
                    } else {
                        j = std::uniform_int_distribution<std::size_t>(0, g - 1)(rng);
                    }
                }
                if (src.empty()) {
                    feedback += j >= g ? 1 : 0;
                    src = gate_ids[j];
                }
            }
            const std::string cid = "c" + std::to_string(channels++);
            b.channel(cid, model(), init_of(src), src, gate_ids[g]);
            gate_inputs[g].push_back(cid);
        }
    }
    for (std::size_t i = 0; i < inputs; ++i) {
        if (!input_used[i]) {
            const std::string cid = "c" + std::to_string(channels++);
            b.channel(cid, model(), init_of(input_ids[i]), input_ids[i], gate_ids[0]);
            gate_inputs[0].push_back(cid);
        }
    }
    for (std::size_t g = 0; g < gates; ++g) {
        std::vector<bool> bits(std::size_t{1} << gate_inputs[g].size());
        for (std::size_t k = 0; k < bits.size(); ++k) {
            bits[k] = u(rng) < 0.5;
        }
        b.gate(gate_ids[g], TruthTable(bits), gate_inputs[g]);
    }
    b.output("o0", gate_ids[0]);
    if (gates > 1 && u(rng) < 0.5) {
        b.output("o1", gate_ids[gates - 1]);
    }
    return b.build();
}

inline InputMap random_inputs(std::mt19937_64& rng, const Circuit& c, std::size_t max_transitions, Time span)
{
    InputMap m;
    for (int i : c.inputs()) {
        m[c.vertex(static_cast<std::size_t>(i)).id] = random_signal(rng, max_transitions, span, rng() & 1u);
    }
    return m;
}

/// The storage loop without filter: i -> or, or -> c -> or, or -> o.
inline Circuit storage_loop(const DelayModel& loop)
{
    return CircuitBuilder()
        .input("i")
        .gate("or", TruthTable::or2(), {"i", "c"})
        .channel("c", loop, false, "or", "or")
        .output("o", "or")
        .build();
}

/// Feedback example with a self-loop on y: i -> x, x -> cx -> y, y -> cy -> y,
/// y -> co -> o, o drives the output port "out".
inline Circuit feedback_example(const DelayModel& m)
{
    return CircuitBuilder()
        .input("i")
        .gate("x", TruthTable::identity(), {"i"})
        .channel("cx", m, false, "x", "y")
        .channel("cy", m, false, "y", "y")
        .gate("y", TruthTable::or2(), {"cx", "cy"})
        .channel("co", m, false, "y", "o")
        .gate("o", TruthTable::identity(), {"co"})
        .output("out", "o")
        .build();
}

/// i -> g0 -> c1 -> g1 -> c2 -> g2 -> c3 -> g3 -> o, all gates buffers.
inline Circuit three_stage_chain(const DelayModel& m1, const DelayModel& m2, const DelayModel& m3)
{
    return CircuitBuilder()
        .input("i")
        .gate("g0", TruthTable::identity(), {"i"})
        .channel("c1", m1, false, "g0", "g1")
        .gate("g1", TruthTable::identity(), {"c1"})
        .channel("c2", m2, false, "g1", "g2")
        .gate("g2", TruthTable::identity(), {"c2"})
        .channel("c3", m3, false, "g2", "g3")
        .gate("g3", TruthTable::identity(), {"c3"})
        .output("o", "g3")
        .build();
}

} // namespace invchan::testing
