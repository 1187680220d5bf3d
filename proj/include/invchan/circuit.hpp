#pragma once

// Circuit graphs: input ports, output ports, zero-time Boolean gates, and
// channels, with structural validation (C2-C7 plus the shared-initial-value
// rule for channels fanning out of one vertex).

#include "invchan/delay_model.hpp"
#include "invchan/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace invchan {

inline constexpr std::size_t kMaxGateArity = 8;

/// Boolean function stored as a truth table. Entry index is the input
/// vector read as a binary number with the first input as the MSB.
class TruthTable {
public:
    TruthTable() = default;

    explicit TruthTable(std::vector<bool> bits) : bits_(std::move(bits))
    {
        const std::size_t n = bits_.size();
        if (n == 0 || (n & (n - 1)) != 0) {
            throw InvalidModel("truth table size must be a power of two");
        }
        while ((std::size_t{1} << arity_) < n) {
            ++arity_;
        }
        if (arity_ > kMaxGateArity) {
            throw InvalidModel("gate arity above " + std::to_string(kMaxGateArity));
        }
    }

    /// Parses strings like "0111".
    static TruthTable parse(std::string_view text)
    {
        std::vector<bool> bits;
        for (char c : text) {
            if (c != '0' && c != '1') {
                throw ParseError("truth table may only contain '0' and '1': \"" + std::string(text) + "\"");
            }
            bits.push_back(c == '1');
        }
        return TruthTable(std::move(bits));
    }

    static TruthTable constant(bool v) { return TruthTable({v}); }
    static TruthTable identity() { return parse("01"); }
    static TruthTable inverter() { return parse("10"); }
    static TruthTable or2() { return parse("0111"); }
    static TruthTable and2() { return parse("0001"); }

    std::size_t arity() const noexcept { return arity_; }
    const std::vector<bool>& bits() const noexcept { return bits_; }

    bool operator()(std::span<const bool> in) const noexcept
    {
        std::size_t idx = 0;
        for (bool b : in) {
            idx = (idx << 1) | static_cast<std::size_t>(b);
        }
        return bits_[idx];
    }

    std::string to_string() const
    {
        std::string s;
        for (bool b : bits_) {
            s.push_back(b ? '1' : '0');
        }
        return s;
    }

    friend bool operator==(const TruthTable&, const TruthTable&) = default;

private:
    std::vector<bool> bits_{false};
    std::size_t arity_ = 0;
};

enum class VertexKind { Input, Output, Gate, Channel };

struct InputSpec {};

struct OutputSpec {
    std::string from;
};

struct GateSpec {
    TruthTable table;
    std::vector<std::string> inputs; ///< ordered predecessors
};

struct ChannelSpec {
    DelayModel model;
    bool init = false;
    std::string from;
    std::string to;
};

struct Vertex {
    std::string id;
    std::variant<InputSpec, OutputSpec, GateSpec, ChannelSpec> spec;

    VertexKind kind() const noexcept { return static_cast<VertexKind>(spec.index()); }
    const GateSpec* gate() const noexcept { return std::get_if<GateSpec>(&spec); }
    const ChannelSpec* channel() const noexcept { return std::get_if<ChannelSpec>(&spec); }
    const OutputSpec* output() const noexcept { return std::get_if<OutputSpec>(&spec); }
};

inline const char* to_string(VertexKind k) noexcept
{
    switch (k) {
    case VertexKind::Input: return "input";
    case VertexKind::Output: return "output";
    case VertexKind::Gate: return "gate";
    case VertexKind::Channel: return "channel";
    }
    return "?";
}

struct StructuralError {
    std::string rule;   ///< "C2".."C7", "init", "ref", "id"
    std::string vertex;
    std::string message;

    std::string to_string() const { return rule + " at '" + vertex + "': " + message; }
};

inline constexpr int kMissing = -1;

/// Immutable circuit graph. Vertices are indexed by sorted id so that every
/// derived order (event queue ties, serialization) is deterministic.
class Circuit {
public:
    Circuit() = default;

    explicit Circuit(std::vector<Vertex> vertices) : vertices_(std::move(vertices))
    {
        std::sort(vertices_.begin(), vertices_.end(), [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
            if (!index_.emplace(vertices_[k].id, static_cast<int>(k)).second) {
                duplicates_.push_back(vertices_[k].id);
            }
        }
        build_adjacency();
    }

    std::size_t size() const noexcept { return vertices_.size(); }
    const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
    const Vertex& vertex(std::size_t i) const { return vertices_.at(i); }
    const std::vector<std::string>& duplicate_ids() const noexcept { return duplicates_; }

    int index_of(const std::string& id) const
    {
        const auto it = index_.find(id);
        return it == index_.end() ? kMissing : it->second;
    }

    /// Ordered predecessors (kMissing for unresolved references).
    const std::vector<int>& preds(std::size_t i) const { return preds_.at(i); }
    const std::vector<int>& succs(std::size_t i) const { return succs_.at(i); }

    std::vector<int> of_kind(VertexKind k) const
    {
        std::vector<int> out;
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            if (vertices_[i].kind() == k) {
                out.push_back(static_cast<int>(i));
            }
        }
        return out;
    }

    std::vector<int> inputs() const { return of_kind(VertexKind::Input); }
    std::vector<int> outputs() const { return of_kind(VertexKind::Output); }

private:
    void build_adjacency()
    {
        const std::size_t n = vertices_.size();
        preds_.assign(n, {});
        succs_.assign(n, {});
        auto link = [&](const std::string& from, std::size_t to) {
            const int f = index_of(from);
            preds_[to].push_back(f);
            if (f != kMissing) {
                succs_[static_cast<std::size_t>(f)].push_back(static_cast<int>(to));
            }
        };
        for (std::size_t i = 0; i < n; ++i) {
            const Vertex& v = vertices_[i];
            if (const auto* g = v.gate()) {
                for (const auto& in : g->inputs) {
                    link(in, i);
                }
            } else if (const auto* c = v.channel()) {
                link(c->from, i);
            } else if (const auto* o = v.output()) {
                link(o->from, i);
            }
        }
        for (auto& s : succs_) {
            std::sort(s.begin(), s.end());
        }
    }

    std::vector<Vertex> vertices_;
    std::map<std::string, int> index_;
    std::vector<std::string> duplicates_;
    std::vector<std::vector<int>> preds_;
    std::vector<std::vector<int>> succs_;
};

/// Incremental construction helper.
class CircuitBuilder {
public:
    CircuitBuilder& input(std::string id)
    {
        vertices_.push_back({std::move(id), InputSpec{}});
        return *this;
    }

    CircuitBuilder& gate(std::string id, TruthTable table, std::vector<std::string> inputs)
    {
        vertices_.push_back({std::move(id), GateSpec{std::move(table), std::move(inputs)}});
        return *this;
    }

    CircuitBuilder& channel(std::string id, DelayModel model, bool init, std::string from, std::string to)
    {
        vertices_.push_back({std::move(id), ChannelSpec{std::move(model), init, std::move(from), std::move(to)}});
        return *this;
    }

    CircuitBuilder& output(std::string id, std::string from)
    {
        vertices_.push_back({std::move(id), OutputSpec{std::move(from)}});
        return *this;
    }

    /// Output ports driven directly by a channel get an identity gate
    /// "<output>$buf" in between; everything else is passed through.
    Circuit build() const
    {
        std::vector<Vertex> vs = vertices_;
        std::map<std::string, std::size_t> pos;
        for (std::size_t k = 0; k < vs.size(); ++k) {
            pos.emplace(vs[k].id, k);
        }
        std::vector<Vertex> extra;
        for (auto& v : vs) {
            auto* o = std::get_if<OutputSpec>(&v.spec);
            if (!o) {
                continue;
            }
            const auto it = pos.find(o->from);
            if (it == pos.end()) {
                continue;
            }
            auto* ch = std::get_if<ChannelSpec>(&vs[it->second].spec);
            if (!ch || ch->to != v.id) {
                continue;
            }
            const std::string buf = v.id + "$buf";
            extra.push_back({buf, GateSpec{TruthTable::identity(), {o->from}}});
            ch->to = buf;
            o->from = buf;
        }
        vs.insert(vs.end(), extra.begin(), extra.end());
        return Circuit(std::move(vs));
    }

private:
    std::vector<Vertex> vertices_;
};

inline std::vector<StructuralError> validate(const Circuit& c)
{
    std::vector<StructuralError> errs;
    auto add = [&](std::string rule, const std::string& v, std::string msg) {
        errs.push_back({std::move(rule), v, std::move(msg)});
    };
    for (const auto& id : c.duplicate_ids()) {
        add("id", id, "duplicate vertex id");
    }

    std::map<int, std::optional<bool>> fanout_init;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Vertex& v = c.vertex(i);
        const auto& preds = c.preds(i);
        const auto& succs = c.succs(i);
        for (std::size_t k = 0; k < preds.size(); ++k) {
            if (preds[k] == kMissing) {
                add("ref", v.id, "predecessor #" + std::to_string(k) + " does not exist");
            }
        }
        switch (v.kind()) {
        case VertexKind::Input:
            if (succs.empty()) {
                add("C2", v.id, "input port has no outgoing edge");
            }
            break;
        case VertexKind::Output:
            if (!succs.empty()) {
                add("C3", v.id, "output port has outgoing edges");
            }
            if (preds.size() == 1 && preds[0] != kMissing &&
                c.vertex(static_cast<std::size_t>(preds[0])).kind() != VertexKind::Gate) {
                add("C3", v.id, "output port must be driven by a gate, not by '" +
                                    c.vertex(static_cast<std::size_t>(preds[0])).id + "'");
            }
            break;
        case VertexKind::Gate: {
            const auto& g = *v.gate();
            if (g.table.arity() != preds.size()) {
                add("C5", v.id, "truth table arity " + std::to_string(g.table.arity()) + " != in-degree " +
                                    std::to_string(preds.size()));
            }
            for (int p : preds) {
                if (p == kMissing) {
                    continue;
                }
                const Vertex& pv = c.vertex(static_cast<std::size_t>(p));
                if (pv.kind() == VertexKind::Gate) {
                    add("C7", v.id, "path " + pv.id + " -> " + v.id + " connects two gates without a channel");
                } else if (pv.kind() == VertexKind::Output) {
                    add("C3", v.id, "output port '" + pv.id + "' used as a gate input");
                } else if (pv.kind() == VertexKind::Channel && pv.channel()->to != v.id) {
                    add("C4", v.id, "channel '" + pv.id + "' is declared to drive '" + pv.channel()->to + "'");
                }
            }
            break;
        }
        case VertexKind::Channel: {
            const auto& ch = *v.channel();
            if (preds.size() != 1 || preds[0] == kMissing) {
                add("C4", v.id, "channel needs exactly one existing source");
            } else {
                const Vertex& src = c.vertex(static_cast<std::size_t>(preds[0]));
                if (src.kind() == VertexKind::Channel) {
                    add("C7", v.id, "path " + src.id + " -> " + v.id + " connects two channels without a gate");
                } else if (src.kind() == VertexKind::Output) {
                    add("C3", v.id, "output port '" + src.id + "' drives a channel");
                } else {
                    auto& slot = fanout_init[preds[0]];
                    if (slot && *slot != ch.init) {
                        add("init", v.id, "channels fanning out of '" + src.id + "' have different initial values");
                    }
                    slot = ch.init;
                }
            }
            if (succs.size() != 1) {
                const int to = c.index_of(ch.to);
                if (to != kMissing && c.vertex(static_cast<std::size_t>(to)).kind() == VertexKind::Channel) {
                    add("C7", v.id, "path " + v.id + " -> " + ch.to + " connects two channels without a gate");
                } else {
                    add("C4", v.id, "channel must drive exactly one gate input (has " +
                                        std::to_string(succs.size()) + ")");
                }
            }
            break;
        }
        }
    }
    return errs;
}

inline void require_valid(const Circuit& c)
{
    const auto errs = validate(c);
    if (!errs.empty()) {
        std::string msg = "invalid circuit:";
        for (const auto& e : errs) {
            msg += "\n  " + e.to_string();
        }
        throw ValidationError(msg);
    }
}

/// Same vertex ids, kinds, tables, wiring, channel models and initial values.
inline bool structurally_equal(const Circuit& a, const Circuit& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vertex& x = a.vertex(i);
        const Vertex& y = b.vertex(i);
        if (x.id != y.id || x.kind() != y.kind()) {
            return false;
        }
        if (const auto* g = x.gate()) {
            if (!(g->table == y.gate()->table) || g->inputs != y.gate()->inputs) {
                return false;
            }
        } else if (const auto* ch = x.channel()) {
            const ChannelSpec& d = *y.channel();
            if (!(ch->model == d.model) || ch->init != d.init || ch->from != d.from || ch->to != d.to) {
                return false;
            }
        } else if (const auto* o = x.output()) {
            if (o->from != y.output()->from) {
                return false;
            }
        }
    }
    return true;
}

/// True iff the graph is acyclic.
inline bool is_forward(const Circuit& c)
{
    const std::size_t n = c.size();
    std::vector<std::size_t> indeg(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int s : c.succs(i)) {
            ++indeg[static_cast<std::size_t>(s)];
        }
    }
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indeg[i] == 0) {
            ready.push(i);
        }
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        const std::size_t i = ready.front();
        ready.pop();
        ++seen;
        for (int s : c.succs(i)) {
            if (--indeg[static_cast<std::size_t>(s)] == 0) {
                ready.push(static_cast<std::size_t>(s));
            }
        }
    }
    return seen == n;
}

} // namespace invchan
