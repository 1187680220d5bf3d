#pragma once

// Netlist JSON, signal and waveform CSV, VCD / CSV waveform export. Numbers
// are written in shortest round-trip form so re-parsing is exact.

#include "invchan/circuit.hpp"
#include "invchan/delay_model.hpp"
#include "invchan/engine.hpp"
#include "invchan/errors.hpp"
#include "invchan/signal.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace invchan::io {

using json = nlohmann::json;

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_number(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Parses the whole of `text` as a double; `what` names the field in errors.
inline double parse_number(std::string_view text, const std::string& what)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || text.empty()) {
        throw ParseError(what + ": '" + std::string(text) + "' is not a number");
    }
    return v;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + p.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view content)
{
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + p.string() + "'");
    }
    out << content;
}

namespace detail {

/// Non-empty lines split at commas, with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_rows(std::string_view text)
{
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            std::string cell(line.substr(start, comma - start));
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        rows.emplace_back(line_no, std::move(cells));
    }
    return rows;
}

inline bool parse_bit(const std::string& cell, const std::string& what)
{
    if (cell == "0") {
        return false;
    }
    if (cell == "1") {
        return true;
    }
    throw ParseError(what + ": expected 0 or 1, got '" + cell + "'");
}

} // namespace detail

// ---------------------------------------------------------------- signals

/// Header `initial,<0|1>` followed by `time,value` rows.
inline Signal parse_signal_csv(std::string_view text)
{
    const auto rows = detail::csv_rows(text);
    if (rows.empty() || rows.front().second.size() != 2 || rows.front().second[0] != "initial") {
        throw ParseError("signal csv: first line must be 'initial,<0|1>'");
    }
    const bool init = detail::parse_bit(rows.front().second[1], "signal csv line " + std::to_string(rows.front().first));
    std::vector<Transition> trs;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& [line, cells] = rows[k];
        const std::string where = "signal csv line " + std::to_string(line);
        if (cells.size() != 2) {
            throw ParseError(where + ": expected 'time,value'");
        }
        trs.push_back({parse_number(cells[0], where), detail::parse_bit(cells[1], where)});
    }
    try {
        return Signal(init, std::move(trs));
    } catch (const InvalidSignal& e) {
        throw ParseError(std::string("signal csv: ") + e.what());
    }
}

inline Signal load_signal_csv(const std::filesystem::path& p) { return parse_signal_csv(read_file(p)); }

inline std::string signal_to_csv(const Signal& s)
{
    std::string out = std::string("initial,") + (s.initial() ? "1" : "0") + "\n";
    for (const auto& t : s.transitions()) {
        out += format_number(t.time) + "," + (t.value ? "1" : "0") + "\n";
    }
    return out;
}

inline json signal_to_json(const Signal& s)
{
    json trs = json::array();
    for (const auto& t : s.transitions()) {
        trs.push_back(json::array({t.time, t.value ? 1 : 0}));
    }
    return {{"initial", s.initial() ? 1 : 0}, {"transitions", std::move(trs)}};
}

namespace detail {

inline bool json_bit(const json& j, const std::string& where)
{
    if (j.is_boolean()) {
        return j.get<bool>();
    }
    if (j.is_number_integer() && (j.get<long long>() == 0 || j.get<long long>() == 1)) {
        return j.get<long long>() == 1;
    }
    throw ParseError(where + ": expected 0, 1, true or false");
}

inline double json_number(const json& obj, const std::string& key, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(where + ": missing '" + key + "'");
    }
    if (!it->is_number()) {
        throw ParseError(where + "/" + key + ": expected a number");
    }
    return it->get<double>();
}

inline std::string json_string(const json& obj, const std::string& key, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(where + ": missing '" + key + "'");
    }
    if (!it->is_string()) {
        throw ParseError(where + "/" + key + ": expected a string");
    }
    return it->get<std::string>();
}

inline std::vector<double> json_numbers(const json& obj, const std::string& key, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        throw ParseError(where + ": '" + key + "' must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) {
            throw ParseError(where + "/" + key + ": expected numbers only");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

inline json parse_json(std::string_view text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

} // namespace detail

/// {"initial": 0|1, "transitions": [[t, v], ...]}
inline Signal signal_from_json(const json& j, const std::string& where = "signal")
{
    if (!j.is_object()) {
        throw ParseError(where + ": expected an object");
    }
    const auto it = j.find("initial");
    if (it == j.end()) {
        throw ParseError(where + ": missing 'initial'");
    }
    const bool init = detail::json_bit(*it, where + "/initial");
    std::vector<Transition> trs;
    if (const auto t = j.find("transitions"); t != j.end()) {
        if (!t->is_array()) {
            throw ParseError(where + "/transitions: expected an array");
        }
        for (std::size_t k = 0; k < t->size(); ++k) {
            const json& e = (*t)[k];
            const std::string w = where + "/transitions/" + std::to_string(k);
            if (!e.is_array() || e.size() != 2 || !e[0].is_number()) {
                throw ParseError(w + ": expected [time, value]");
            }
            trs.push_back({e[0].get<double>(), detail::json_bit(e[1], w)});
        }
    }
    try {
        return Signal(init, std::move(trs));
    } catch (const InvalidSignal& e) {
        throw ParseError(where + ": " + e.what());
    }
}

/// Input assignment: a JSON object mapping input ids to signal objects or to
/// signal CSV paths (relative to the JSON file).
inline InputMap parse_inputs_json(std::string_view text, const std::filesystem::path& base_dir = {})
{
    const json j = detail::parse_json(text, "inputs");
    if (!j.is_object()) {
        throw ParseError("inputs: expected an object mapping input ids to signals");
    }
    InputMap m;
    for (const auto& [id, v] : j.items()) {
        if (v.is_string()) {
            m.emplace(id, load_signal_csv(base_dir / v.get<std::string>()));
        } else {
            m.emplace(id, signal_from_json(v, "inputs/" + id));
        }
    }
    return m;
}

// ---------------------------------------------------------------- waveforms

/// Header `t,f_up,f_down` followed by numeric rows.
inline WaveformSamples parse_waveform_csv(std::string_view text)
{
    const auto rows = detail::csv_rows(text);
    if (rows.empty() || rows.front().second != std::vector<std::string>{"t", "f_up", "f_down"}) {
        throw ParseError("waveform csv: first line must be 't,f_up,f_down'");
    }
    WaveformSamples w;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& [line, cells] = rows[k];
        const std::string where = "waveform csv line " + std::to_string(line);
        if (cells.size() != 3) {
            throw ParseError(where + ": expected three columns");
        }
        w.t.push_back(parse_number(cells[0], where));
        w.f_up.push_back(parse_number(cells[1], where));
        w.f_down.push_back(parse_number(cells[2], where));
    }
    return w;
}

inline std::string waveform_to_csv(const WaveformSamples& w)
{
    std::string out = "t,f_up,f_down\n";
    for (std::size_t k = 0; k < w.t.size(); ++k) {
        out += format_number(w.t[k]) + "," + format_number(w.f_up[k]) + "," + format_number(w.f_down[k]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------- netlists

inline DelayModel model_from_json(const json& j, const std::string& where, const std::filesystem::path& base_dir = {})
{
    if (!j.is_object()) {
        throw ParseError(where + ": expected an object");
    }
    const std::string kind = detail::json_string(j, "kind", where);
    if (kind == "exp") {
        return DelayModel::exp({detail::json_number(j, "tau", where), detail::json_number(j, "tp", where),
                                detail::json_number(j, "vth", where)});
    }
    if (kind == "pure") {
        return DelayModel::pure(detail::json_number(j, "delay", where));
    }
    if (kind == "inertial") {
        return DelayModel::inertial(detail::json_number(j, "delay", where), detail::json_number(j, "min_pulse", where));
    }
    if (kind == "waveform") {
        WaveformSamples w;
        if (j.contains("file")) {
            w = parse_waveform_csv(read_file(base_dir / detail::json_string(j, "file", where)));
        } else {
            w.t = detail::json_numbers(j, "t", where);
            w.f_up = detail::json_numbers(j, "f_up", where);
            w.f_down = detail::json_numbers(j, "f_down", where);
        }
        return from_waveforms(w.t, w.f_up, w.f_down, detail::json_number(j, "tp", where),
                              detail::json_number(j, "vth", where));
    }
    throw ParseError(where + "/kind: unknown model kind '" + kind + "'");
}

inline json model_to_json(const DelayModel& m)
{
    if (const auto* p = m.exp_params()) {
        return {{"kind", "exp"}, {"tau", p->tau}, {"tp", p->t_p}, {"vth", p->v_th}};
    }
    if (const auto* p = m.pure_params()) {
        return {{"kind", "pure"}, {"delay", p->delay}};
    }
    if (const auto* p = m.inertial_params()) {
        return {{"kind", "inertial"}, {"delay", p->delay}, {"min_pulse", p->min_pulse}};
    }
    const WaveformShape& w = *m.waveform_shape();
    if (w.samples().t.empty()) {
        throw InvalidModel("waveform model has no recorded samples to serialize");
    }
    return {{"kind", "waveform"},   {"tp", w.t_p()},           {"vth", w.v_th()},
            {"t", w.samples().t}, {"f_up", w.samples().f_up}, {"f_down", w.samples().f_down}};
}

/// Builds the circuit described by `j`. Structure is not validated here; call
/// validate / require_valid on the result.
inline Circuit netlist_from_json(const json& j, const std::filesystem::path& base_dir = {})
{
    if (!j.is_object() || !j.contains("vertices") || !j["vertices"].is_array()) {
        throw ParseError("netlist: expected an object with a 'vertices' array");
    }
    CircuitBuilder b;
    const json& vs = j["vertices"];
    for (std::size_t k = 0; k < vs.size(); ++k) {
        const json& v = vs[k];
        const std::string where = "/vertices/" + std::to_string(k);
        if (!v.is_object()) {
            throw ParseError(where + ": expected an object");
        }
        const std::string id = detail::json_string(v, "id", where);
        const std::string kind = detail::json_string(v, "kind", where);
        if (kind == "input") {
            b.input(id);
        } else if (kind == "output") {
            b.output(id, detail::json_string(v, "from", where));
        } else if (kind == "gate") {
            const std::string table = detail::json_string(v, "table", where);
            const auto it = v.find("inputs");
            if (it == v.end() || !it->is_array()) {
                throw ParseError(where + ": 'inputs' must be an array of ids");
            }
            std::vector<std::string> ins;
            for (const auto& x : *it) {
                if (!x.is_string()) {
                    throw ParseError(where + "/inputs: expected strings");
                }
                ins.push_back(x.get<std::string>());
            }
            TruthTable t = [&] {
                try {
                    return TruthTable::parse(table);
                } catch (const Error& e) {
                    throw ParseError(where + "/table: " + e.what());
                }
            }();
            b.gate(id, std::move(t), std::move(ins));
        } else if (kind == "channel") {
            const auto init = v.find("init");
            b.channel(id, model_from_json(v.value("model", json()), where + "/model", base_dir),
                      init == v.end() ? false : detail::json_bit(*init, where + "/init"),
                      detail::json_string(v, "from", where), detail::json_string(v, "to", where));
        } else {
            throw ParseError(where + "/kind: unknown vertex kind '" + kind + "'");
        }
    }
    return b.build();
}

inline Circuit parse_netlist(std::string_view text, const std::filesystem::path& base_dir = {})
{
    return netlist_from_json(detail::parse_json(text, "netlist"), base_dir);
}

inline Circuit load_netlist(const std::filesystem::path& p)
{
    return parse_netlist(read_file(p), p.parent_path());
}

inline json netlist_to_json(const Circuit& c)
{
    json vs = json::array();
    for (const Vertex& v : c.vertices()) {
        json o{{"id", v.id}, {"kind", to_string(v.kind())}};
        if (const auto* g = v.gate()) {
            o["table"] = g->table.to_string();
            o["inputs"] = g->inputs;
        } else if (const auto* ch = v.channel()) {
            o["from"] = ch->from;
            o["to"] = ch->to;
            o["init"] = ch->init ? 1 : 0;
            o["model"] = model_to_json(ch->model);
        } else if (const auto* out = v.output()) {
            o["from"] = out->from;
        }
        vs.push_back(std::move(o));
    }
    return {{"vertices", std::move(vs)}};
}

inline std::string serialize_netlist(const Circuit& c) { return netlist_to_json(c).dump(2) + "\n"; }

// ---------------------------------------------------------------- waveform export

/// Model time unit -> VCD ticks (1 unit = 1 ns at a 1 ps timescale).
inline constexpr double kVcdTicksPerUnit = 1000.0;

namespace detail {

inline std::string vcd_code(std::size_t n)
{
    std::string s;
    do {
        s.push_back(static_cast<char>(33 + n % 94));
        n /= 94;
    } while (n > 0);
    return s;
}

inline long long vcd_ticks(Time t) { return std::llrint(t * kVcdTicksPerUnit); }

} // namespace detail

/// VCD of every vertex of the execution up to its horizon. Changes landing on
/// the same tick collapse to the last value; a horizon of 0 gives the header only.
inline std::string to_vcd(const Execution& e)
{
    std::string out = "$version invchan $end\n$timescale 1ps $end\n$scope module top $end\n";
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        out += "$var wire 1 " + detail::vcd_code(i) + " " + e.ids[i] + " $end\n";
    }
    out += "$upscope $end\n$enddefinitions $end\n";
    if (!(e.horizon > 0.0)) {
        return out;
    }
    out += "#0\n$dumpvars\n";
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        out += std::string(e.signals[i].initial() ? "1" : "0") + detail::vcd_code(i) + "\n";
    }
    out += "$end\n";

    // (tick, vertex) -> value; later transitions overwrite earlier ones on the same tick
    std::map<std::pair<long long, std::size_t>, bool> changes;
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        for (const auto& t : e.signals[i].transitions()) {
            if (t.time <= e.horizon) {
                changes[{std::max(detail::vcd_ticks(t.time), 1LL), i}] = t.value;
            }
        }
    }
    std::vector<bool> shown(e.ids.size());
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        shown[i] = e.signals[i].initial();
    }
    long long tick = 0;
    for (const auto& [key, value] : changes) {
        const auto [when, i] = key;
        if (value == shown[i]) {
            continue;
        }
        if (when != tick) {
            out += "#" + std::to_string(when) + "\n";
            tick = when;
        }
        out += std::string(value ? "1" : "0") + detail::vcd_code(i) + "\n";
        shown[i] = value;
    }
    out += "#" + std::to_string(detail::vcd_ticks(e.horizon)) + "\n";
    return out;
}

/// Long-format CSV `vertex,time,value`: one `-inf` row with the initial value
/// per vertex, then its transitions. A horizon of 0 gives the header only.
inline std::string to_csv(const Execution& e)
{
    std::string out = "vertex,time,value\n";
    if (!(e.horizon > 0.0)) {
        return out;
    }
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        out += e.ids[i] + ",-inf," + (e.signals[i].initial() ? "1" : "0") + "\n";
        for (const auto& t : e.signals[i].transitions()) {
            if (t.time <= e.horizon) {
                out += e.ids[i] + "," + format_number(t.time) + "," + (t.value ? "1" : "0") + "\n";
            }
        }
    }
    return out;
}

} // namespace invchan::io
