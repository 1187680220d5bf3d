#pragma once

// k-unrolling of a circuit into a forward circuit, z-values, and a
// differential checker comparing executions of both.

#include "invchan/circuit.hpp"
#include "invchan/engine.hpp"
#include "invchan/errors.hpp"

#include <algorithm>
#include <compare>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace invchan {

struct Infinity {
    friend bool operator==(Infinity, Infinity) = default;
};

/// Element of N_0 extended by infinity.
class ZValue {
public:
    ZValue() = default;
    ZValue(std::size_t n) : v_(n) {}
    ZValue(Infinity) : v_(Infinity{}) {}

    static ZValue infinity() { return ZValue(Infinity{}); }

    bool is_infinite() const noexcept { return std::holds_alternative<Infinity>(v_); }
    std::size_t value() const
    {
        if (is_infinite()) {
            throw IndexOutOfRange("z value is infinite");
        }
        return std::get<std::size_t>(v_);
    }

    ZValue successor() const { return is_infinite() ? *this : ZValue(value() + 1); }

    /// depth <= z
    bool admits(int depth) const { return is_infinite() || depth <= static_cast<long long>(value()); }

    std::string to_string() const { return is_infinite() ? "inf" : std::to_string(value()); }

    friend bool operator==(const ZValue&, const ZValue&) = default;
    friend std::strong_ordering operator<=>(const ZValue& a, const ZValue& b)
    {
        if (a.is_infinite() || b.is_infinite()) {
            return a.is_infinite() <=> b.is_infinite();
        }
        return a.value() <=> b.value();
    }

private:
    std::variant<std::size_t, Infinity> v_{std::size_t{0}};
};

struct UnrolledCircuit {
    Circuit circuit;
    std::string root; ///< copy of the unrolled gate
    /// unrolled vertex -> original vertex; constant stubs have no original
    std::map<std::string, std::string> correspondence;
    std::map<std::string, ZValue> z;
    /// constant stub -> source vertex (in the original) of the channel it replaces
    std::map<std::string, std::string> stubs;
};

namespace detail {

class Unroller {
public:
    explicit Unroller(const Circuit& c) : c_(c) {}

    struct Built {
        std::string id;
        ZValue z;
    };

    Built gate_or_input(std::size_t v, std::size_t k)
    {
        const Vertex& vx = c_.vertex(v);
        if (vx.kind() == VertexKind::Input) {
            if (added_inputs_.insert(vx.id).second) {
                b_.input(vx.id);
                corr_[vx.id] = vx.id;
                z_[vx.id] = ZValue::infinity();
            }
            return {vx.id, ZValue::infinity()};
        }
        const GateSpec& g = *vx.gate();
        const std::string id = fresh(vx.id);
        std::vector<std::string> inputs;
        ZValue z = ZValue::infinity();
        for (int p : c_.preds(v)) {
            const Vertex& pv = c_.vertex(static_cast<std::size_t>(p));
            if (pv.kind() == VertexKind::Input) {
                inputs.push_back(gate_or_input(static_cast<std::size_t>(p), k).id);
                continue;
            }
            const ChannelSpec& ch = *pv.channel();
            const std::string cid = fresh(pv.id);
            Built src;
            if (k == 0) {
                src.id = fresh(ch.init ? "~1" : "~0");
                src.z = ZValue(0);
                b_.gate(src.id, TruthTable::constant(ch.init), {});
                z_[src.id] = src.z;
                stubs_[src.id] = ch.from;
            } else {
                src = gate_or_input(static_cast<std::size_t>(c_.index_of(ch.from)), k - 1);
            }
            b_.channel(cid, ch.model, ch.init, src.id, id);
            corr_[cid] = pv.id;
            z_[cid] = src.z.successor();
            z = std::min(z, z_[cid]);
            inputs.push_back(cid);
        }
        b_.gate(id, g.table, std::move(inputs));
        corr_[id] = vx.id;
        z_[id] = z;
        return {id, z};
    }

    UnrolledCircuit finish(const std::string& root, const std::string& output_id)
    {
        b_.output(output_id, root);
        corr_[output_id] = output_id;
        z_[output_id] = z_[root];
        return {b_.build(), root, std::move(corr_), std::move(z_), std::move(stubs_)};
    }

private:
    std::string fresh(const std::string& base) { return base + "@" + std::to_string(++count_[base]); }

    const Circuit& c_;
    CircuitBuilder b_;
    std::map<std::string, std::size_t> count_;
    std::set<std::string> added_inputs_;
    std::map<std::string, std::string> corr_;
    std::map<std::string, ZValue> z_;
    std::map<std::string, std::string> stubs_;
};

} // namespace detail

/// C_k(v) for the gate `vertex` driving an output port (an output port id is
/// accepted as well and resolved to its driver). The single output port of the
/// result keeps the original port's id; input ports are shared, not copied.
inline UnrolledCircuit unroll(const Circuit& c, const std::string& vertex, std::size_t k)
{
    require_valid(c);
    int v = c.index_of(vertex);
    if (v == kMissing) {
        throw IndexOutOfRange("no vertex '" + vertex + "'");
    }
    if (const auto* o = c.vertex(static_cast<std::size_t>(v)).output()) {
        v = c.index_of(o->from);
    }
    const Vertex& gate = c.vertex(static_cast<std::size_t>(v));
    if (gate.kind() != VertexKind::Gate) {
        throw ValidationError("'" + gate.id + "' is not a gate");
    }
    std::string port;
    for (int s : c.succs(static_cast<std::size_t>(v))) {
        const Vertex& sv = c.vertex(static_cast<std::size_t>(s));
        if (sv.kind() == VertexKind::Output) {
            port = sv.id;
            break;
        }
    }
    if (port.empty()) {
        throw ValidationError("gate '" + gate.id + "' does not drive an output port");
    }
    detail::Unroller u(c);
    const auto root = u.gate_or_input(static_cast<std::size_t>(v), k);
    UnrolledCircuit res = u.finish(root.id, port);
    require_valid(res.circuit);
    return res;
}

struct SimulationMismatch {
    std::string vertex;   ///< in the unrolled circuit
    std::string original; ///< in the original circuit
    ZValue z;
    std::vector<Transition> only_original;
    std::vector<Transition> only_unrolled;

    std::string to_string() const
    {
        return "'" + vertex + "' vs '" + original + "' (z=" + z.to_string() + "): " +
               std::to_string(only_original.size()) + " transition(s) only in the original, " +
               std::to_string(only_unrolled.size()) + " only in the unrolled circuit";
    }
};

struct DiffReport {
    std::vector<SimulationMismatch> mismatches;
    std::size_t vertices_compared = 0;
    std::size_t transitions_compared = 0;
    bool ok() const noexcept { return mismatches.empty(); }
};

namespace detail {

inline std::vector<Transition> up_to_depth(const Signal& s, const std::vector<int>& depths, const ZValue& z)
{
    std::vector<Transition> out;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (z.admits(depths[k])) {
            out.push_back(s.transitions()[k]);
        }
    }
    return out;
}

} // namespace detail

/// Runs both circuits on the same inputs and compares, for every unrolled
/// vertex with an original, the transitions of causal depth <= its z value.
/// Times are compared exactly. Initial values must agree as well.
inline DiffReport check_simulation(const Circuit& c, const UnrolledCircuit& u, const InputMap& inputs, Time horizon)
{
    InputMap unrolled_inputs;
    for (int i : u.circuit.inputs()) {
        const std::string& id = u.circuit.vertex(static_cast<std::size_t>(i)).id;
        const auto it = inputs.find(id);
        if (it != inputs.end()) {
            unrolled_inputs.emplace(id, it->second);
        }
    }
    const Execution ec = execute(c, inputs, horizon);
    const Execution eu = execute(u.circuit, unrolled_inputs, horizon);

    DiffReport r;
    for (const auto& [uid, oid] : u.correspondence) {
        const ZValue& z = u.z.at(uid);
        const std::size_t io = ec.index_of(oid);
        const std::size_t iu = eu.index_of(uid);
        auto a = detail::up_to_depth(ec.signals[io], ec.depths[io], z);
        auto b = detail::up_to_depth(eu.signals[iu], eu.depths[iu], z);
        ++r.vertices_compared;
        r.transitions_compared += a.size();
        const bool same_init = ec.signals[io].initial() == eu.signals[iu].initial();
        if (a != b || !same_init) {
            SimulationMismatch m{uid, oid, z, {}, {}};
            auto less = [](const Transition& x, const Transition& y) {
                return x.time < y.time || (x.time == y.time && x.value < y.value);
            };
            std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m.only_original), less);
            std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(m.only_unrolled), less);
            r.mismatches.push_back(std::move(m));
        }
    }
    return r;
}

/// Time up to which each unrolled vertex provably follows its original, given
/// the original's execution: a stub agrees with the source it replaces until
/// that source first switches (not at all if their initial values differ), a
/// channel extends its driver's window by its delta_min, a gate takes the
/// minimum over its predecessors, input ports agree forever.
inline std::map<std::string, Time> agreement_windows(const UnrolledCircuit& u, const Execution& original)
{
    const Circuit& c = u.circuit;
    std::vector<std::optional<Time>> w(c.size());
    std::function<Time(std::size_t)> window = [&](std::size_t i) -> Time {
        if (w[i]) {
            return *w[i];
        }
        const Vertex& v = c.vertex(i);
        Time r = std::numeric_limits<Time>::infinity();
        if (const auto it = u.stubs.find(v.id); it != u.stubs.end()) {
            const Signal& src = original.signal(it->second);
            if (src.initial() != v.gate()->table(std::span<const bool>{})) {
                r = 0.0;
            } else if (!src.empty()) {
                r = src.transitions().front().time;
            }
        } else if (const auto* ch = v.channel()) {
            r = window(static_cast<std::size_t>(c.index_of(ch->from))) + *ch->model.delta_min();
        } else {
            for (int p : c.preds(i)) {
                r = std::min(r, window(static_cast<std::size_t>(p)));
            }
        }
        w[i] = r;
        return r;
    };
    std::map<std::string, Time> out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        out[c.vertex(i).id] = window(i);
    }
    return out;
}

/// Time-window form of the simulation property: every unrolled vertex and its
/// original carry the same transitions before the vertex's agreement window
/// closes. Mismatch entries report z for reference only.
inline DiffReport check_simulation_window(const Circuit& c, const UnrolledCircuit& u, const InputMap& inputs,
                                          Time horizon)
{
    InputMap unrolled_inputs;
    for (int i : u.circuit.inputs()) {
        const std::string& id = u.circuit.vertex(static_cast<std::size_t>(i)).id;
        if (const auto it = inputs.find(id); it != inputs.end()) {
            unrolled_inputs.emplace(id, it->second);
        }
    }
    const Execution ec = execute(c, inputs, horizon);
    const Execution eu = execute(u.circuit, unrolled_inputs, horizon);
    const auto windows = agreement_windows(u, ec);

    DiffReport r;
    for (const auto& [uid, oid] : u.correspondence) {
        const Time until = windows.at(uid);
        auto before = [&](const Signal& s) {
            std::vector<Transition> out;
            for (const auto& t : s.transitions()) {
                if (t.time < until) {
                    out.push_back(t);
                }
            }
            return out;
        };
        const Signal& so = ec.signal(oid);
        const Signal& su = eu.signal(uid);
        auto a = before(so);
        auto b = before(su);
        ++r.vertices_compared;
        r.transitions_compared += a.size();
        if (a != b || so.initial() != su.initial()) {
            SimulationMismatch m{uid, oid, u.z.at(uid), {}, {}};
            auto less = [](const Transition& x, const Transition& y) {
                return x.time < y.time || (x.time == y.time && x.value < y.value);
            };
            std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m.only_original), less);
            std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(m.only_unrolled), less);
            r.mismatches.push_back(std::move(m));
        }
    }
    return r;
}

} // namespace invchan
