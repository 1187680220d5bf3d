// Command-line front end: simulation, storage-loop sweeps, critical pulse,
// unrolling, channel validation and continuity experiments.

#include "invchan/invchan.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <random>

namespace {

using namespace invchan;
using io::json;

struct Global {
    double horizon = 100.0;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string format;
};

/// Delay model either from parameters or from a channel of a netlist.
struct ModelOptions {
    std::string kind = "exp";
    double tau = 1.0;
    double tp = 1.0;
    double vth = 0.5;
    double delay = 1.0;
    double min_pulse = 0.5;
    std::string waveform;
    std::string netlist;
    std::string channel;

    void add(CLI::App* sub)
    {
        sub->add_option("--kind", kind, "exp | pure | inertial | waveform")
            ->check(CLI::IsMember({"exp", "pure", "inertial", "waveform"}));
        sub->add_option("--tau", tau, "exp time constant");
        sub->add_option("--tp", tp, "pure delay part (exp, waveform)");
        sub->add_option("--vth", vth, "threshold (exp, waveform)");
        sub->add_option("--delay", delay, "delay of pure / inertial baselines");
        sub->add_option("--min-pulse", min_pulse, "inertial rejection width");
        sub->add_option("--waveform", waveform, "CSV t,f_up,f_down (kind waveform)");
        sub->add_option("--netlist", netlist, "take the model from a channel of this netlist");
        sub->add_option("--channel", channel, "channel id in --netlist (default: the self-loop channel)");
    }

    DelayModel build() const
    {
        if (!netlist.empty()) {
            const Circuit c = io::load_netlist(netlist);
            std::vector<const ChannelSpec*> candidates;
            for (const Vertex& v : c.vertices()) {
                if (const auto* ch = v.channel()) {
                    if (channel.empty() ? ch->from == ch->to : v.id == channel) {
                        candidates.push_back(ch);
                    }
                }
            }
            if (candidates.size() != 1) {
                throw ParseError(channel.empty() ? "netlist has " + std::to_string(candidates.size()) +
                                                       " self-loop channels; pick one with --channel"
                                                 : "no channel '" + channel + "' in netlist");
            }
            return candidates.front()->model;
        }
        if (kind == "pure") {
            return DelayModel::pure(delay);
        }
        if (kind == "inertial") {
            return DelayModel::inertial(delay, min_pulse);
        }
        if (kind == "waveform") {
            if (waveform.empty()) {
                throw ParseError("--kind waveform needs --waveform FILE");
            }
            const auto w = io::parse_waveform_csv(io::read_file(waveform));
            return from_waveforms(w.t, w.f_up, w.f_down, tp, vth);
        }
        return DelayModel::exp({tau, tp, vth});
    }
};

struct Grid {
    double from = 0.01;
    double to = 3.0;
    double step = 1e-3;
    std::optional<std::string> list;

    void add(CLI::App* sub, const std::string& what)
    {
        sub->add_option("--from", from, "first " + what);
        sub->add_option("--to", to, "last " + what);
        sub->add_option("--step", step, what + " step");
        sub->add_option("--grid", list, "explicit comma-separated " + what + " values (overrides --from/--to/--step)");
    }

    std::vector<Time> values() const
    {
        if (list) {
            return parse_list(*list);
        }
        return uniform_grid(from, to, step);
    }

    static std::vector<Time> parse_list(const std::string& s)
    {
        std::vector<Time> out;
        std::size_t start = 0;
        while (start <= s.size()) {
            const std::size_t comma = s.find(',', start);
            const std::string cell = s.substr(start, comma - start);
            if (cell.find_first_not_of(" \t") != std::string::npos) {
                out.push_back(io::parse_number(cell, "grid value"));
            }
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        return out;
    }
};

class Output {
public:
    explicit Output(const Global& g) : g_(g) {}

    /// Writes `content` to out-dir/name, or to stdout without an out-dir.
    void emit(const std::string& name, const std::string& content)
    {
        if (g_.out_dir.empty()) {
            std::cout << content;
            return;
        }
        const auto p = std::filesystem::path(g_.out_dir) / name;
        io::write_file(p, content);
        files_.push_back(p.string());
    }

    void finish() const
    {
        if (!g_.out_dir.empty()) {
            std::cout << json{{"status", "ok"}, {"files", files_}}.dump() << "\n";
        }
    }

private:
    const Global& g_;
    std::vector<std::string> files_;
};

std::string pick_format(const Global& g, std::initializer_list<const char*> allowed)
{
    if (g.format.empty()) {
        return *allowed.begin();
    }
    for (const char* f : allowed) {
        if (g.format == f) {
            return g.format;
        }
    }
    std::string list;
    for (const char* f : allowed) {
        list += list.empty() ? f : std::string(", ") + f;
    }
    throw ParseError("--format must be one of: " + list);
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json z_json(const ZValue& z)
{
    return z.is_infinite() ? json("inf") : json(z.value());
}

void require_structure(const Circuit& c)
{
    if (!validate(c).empty()) {
        require_valid(c);
    }
}

InputMap load_inputs(const std::string& path, const Circuit& c)
{
    const std::filesystem::path p(path);
    if (p.extension() == ".csv") {
        if (c.inputs().size() != 1) {
            throw ParseError("a CSV signal file only fits circuits with one input; use a JSON input map");
        }
        return {{c.vertex(static_cast<std::size_t>(c.inputs().front())).id, io::load_signal_csv(p)}};
    }
    return io::parse_inputs_json(io::read_file(p), p.parent_path());
}

json report_json(const DiffReport& r, std::size_t max_listed = 20)
{
    json ms = json::array();
    for (std::size_t k = 0; k < r.mismatches.size() && k < max_listed; ++k) {
        const auto& m = r.mismatches[k];
        ms.push_back({{"vertex", m.vertex},
                      {"original", m.original},
                      {"z", z_json(m.z)},
                      {"only_original", m.only_original.size()},
                      {"only_unrolled", m.only_unrolled.size()}});
    }
    return {{"ok", r.ok()},
            {"vertices_compared", r.vertices_compared},
            {"transitions_compared", r.transitions_compared},
            {"mismatch_count", r.mismatches.size()},
            {"mismatches", std::move(ms)}};
}

// ------------------------------------------------------------------ commands

int cmd_simulate(const Global& g, const std::string& netlist, const std::string& inputs)
{
    const std::string fmt = pick_format(g, {"vcd", "csv"});
    const Circuit c = io::load_netlist(netlist);
    require_structure(c);
    const Execution e = execute(c, load_inputs(inputs, c), g.horizon);
    Output out(g);
    out.emit(fmt == "vcd" ? "waveforms.vcd" : "waveforms.csv", fmt == "vcd" ? io::to_vcd(e) : io::to_csv(e));
    out.finish();
    return 0;
}

int cmd_spf_sweep(const Global& g, const ModelOptions& mo, const Grid& grid)
{
    const std::string fmt = pick_format(g, {"csv", "json"});
    const DelayModel m = mo.build();
    std::string csv = "delta0,regime,n_pulses,stab_time\n";
    json rows = json::array();
    for (const Time d0 : grid.values()) {
        const RegimeReport rep = loop_iterate(m, d0, 100000);
        const Execution e = run_storage_loop(m, d0, g.horizon);
        const Signal& s = e.signal("or");
        const std::size_t n = pulses(s).size();
        const Time stab = !e.terminated ? g.horizon : (s.empty() ? 0.0 : s.transitions().back().time);
        csv += io::format_number(d0) + "," + to_string(rep.regime) + "," + std::to_string(n) + "," +
               io::format_number(stab) + "\n";
        rows.push_back({{"delta0", d0}, {"regime", to_string(rep.regime)}, {"n_pulses", n}, {"stab_time", stab}});
    }
    Output out(g);
    if (fmt == "csv") {
        out.emit("spf_sweep.csv", csv);
    } else {
        out.emit("spf_sweep.json", rows.dump(2) + "\n");
    }
    out.finish();
    return 0;
}

int cmd_critical(const Global& g, const ModelOptions& mo, double tol, std::size_t max_steps)
{
    pick_format(g, {"json"});
    const DelayModel m = mo.build();
    const CriticalPoint cp = critical_point(m, tol, max_steps);
    json trace = json::array();
    for (const auto& s : cp.trace) {
        trace.push_back({{"lo", s.lo}, {"hi", s.hi}, {"mid", s.mid}, {"outcome", to_string(s.outcome)}});
    }
    const json j{{"delta0", cp.delta0},
                 {"delta0_closed", cp.delta0_closed},
                 {"delta1", cp.delta1},
                 {"delta_min", number_or_null(m.delta_min().value_or(NAN))},
                 {"delta_inf", m.delta_inf(Edge::Rising)},
                 {"bisection_steps", cp.trace.size()},
                 {"trace", std::move(trace)}};
    Output out(g);
    out.emit("critical.json", j.dump(2) + "\n");
    out.finish();
    return 0;
}

int cmd_unroll(const Global& g, const std::string& netlist, const std::string& vertex, std::size_t k,
               const std::string& inputs, std::size_t random_checks)
{
    pick_format(g, {"json"});
    const Circuit c = io::load_netlist(netlist);
    require_structure(c);
    const UnrolledCircuit u = unroll(c, vertex, k);

    json z = json::object();
    for (const auto& [id, v] : u.z) {
        z[id] = z_json(v);
    }
    json j{{"root", u.root},
           {"k", k},
           {"z", std::move(z)},
           {"correspondence", u.correspondence},
           {"stubs", u.stubs}};

    json checks = json::array();
    auto run_check = [&](const std::string& label, const InputMap& in) {
        checks.push_back({{"inputs", label},
                          {"depth_bound", report_json(check_simulation(c, u, in, g.horizon))},
                          {"time_window", report_json(check_simulation_window(c, u, in, g.horizon))}});
    };
    if (!inputs.empty()) {
        run_check(inputs, load_inputs(inputs, c));
    }
    std::mt19937_64 rng(g.seed);
    for (std::size_t r = 0; r < random_checks; ++r) {
        InputMap in;
        for (int i : c.inputs()) {
            std::uniform_int_distribution<std::size_t> count(0, 4);
            std::uniform_real_distribution<Time> when(0.0, 5.0);
            std::vector<Time> times(count(rng));
            for (auto& t : times) {
                t = when(rng);
            }
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());
            in[c.vertex(static_cast<std::size_t>(i)).id] = Signal::from_times(rng() & 1u, times);
        }
        run_check("random #" + std::to_string(r), in);
    }
    if (!checks.empty()) {
        j["checks"] = std::move(checks);
    }

    Output out(g);
    if (g.out_dir.empty()) {
        j["netlist"] = io::netlist_to_json(u.circuit);
        out.emit("", j.dump(2) + "\n");
    } else {
        out.emit("unrolled.json", io::serialize_netlist(u.circuit));
        out.emit("zmap.json", j.dump(2) + "\n");
    }
    out.finish();
    return 0;
}

int cmd_validate_channel(const Global& g, const ModelOptions& mo, std::size_t points, double tol)
{
    pick_format(g, {"json"});
    const DelayModel m = mo.build();
    json j{{"kind", m.is_involution() ? "involution" : "baseline"}};
    if (!m.is_involution()) {
        j["pass"] = false;
        j["reason"] = "constant-delay baseline, not an involution channel";
    } else {
        const auto grid = involution_grid(m, points);
        const ValidationReport r = validate_involution(m, grid, tol);
        j["pass"] = r.passed;
        j["points"] = r.points;
        j["max_error_up_down"] = r.max_error_up_down;
        j["max_error_down_up"] = r.max_error_down_up;
        j["increasing"] = r.increasing;
        j["concave"] = r.concave;
        j["strictly_causal"] = m.strictly_causal();
        j["delta_min"] = number_or_null(m.delta_min().value_or(NAN));
        j["delta_inf_up"] = m.delta_inf(Edge::Rising);
        j["delta_inf_down"] = m.delta_inf(Edge::Falling);
        j["symmetric"] = is_symmetric(m);
        if (!r.reason.empty()) {
            j["reason"] = r.reason;
        }
    }
    Output out(g);
    out.emit("validate_channel.json", j.dump(2) + "\n");
    out.finish();
    return 0;
}

int cmd_continuity(const Global& g, const ModelOptions& mo, const std::string& circuit, const Grid& grid,
                   const std::string& base, const std::string& eps)
{
    const std::string fmt = pick_format(g, {"csv", "json"});
    Output out(g);
    if (!circuit.empty()) {
        const Circuit c = io::load_netlist(circuit);
        const auto deltas = grid.values();
        const auto curve = forward_sweep(c, deltas, g.horizon);
        const auto a = analyze_jumps(curve);
        if (fmt == "csv") {
            std::string csv = "delta,mu\n";
            for (const auto& p : curve) {
                csv += io::format_number(p.delta) + "," + io::format_number(p.mu) + "\n";
            }
            out.emit("forward_sweep.csv", csv);
        } else {
            json pts = json::array();
            for (const auto& p : curve) {
                pts.push_back({{"delta", p.delta}, {"mu", p.mu}});
            }
            out.emit("forward_sweep.json", json{{"curve", std::move(pts)},
                                                {"max_jump", a.max_jump},
                                                {"statistic", a.statistic},
                                                {"max_slope", a.max_slope},
                                                {"worst_ratio", a.worst_ratio},
                                                {"worst_at", a.worst_at},
                                                {"continuous", a.ok()}}
                                                   .dump(2) +
                                               "\n");
        }
        out.finish();
        return 0;
    }
    const DelayModel m = mo.build();
    const Signal s = base.empty() ? make_pulse(0.0, 2.0) : io::load_signal_csv(base);
    const auto epsilons = Grid::parse_list(eps);
    const auto pts = m.is_involution() ? continuity_probe(m, s, epsilons, g.horizon)
                                       : baseline_probe(m, s, epsilons, g.horizon);
    if (fmt == "csv") {
        std::string csv = "epsilon,distance,bound\n";
        for (const auto& p : pts) {
            csv += io::format_number(p.epsilon) + "," + io::format_number(p.distance) + "," +
                   (std::isnan(p.bound) ? std::string() : io::format_number(p.bound)) + "\n";
        }
        out.emit("continuity.csv", csv);
    } else {
        json arr = json::array();
        for (const auto& p : pts) {
            arr.push_back({{"epsilon", p.epsilon}, {"distance", p.distance}, {"bound", number_or_null(p.bound)}});
        }
        out.emit("continuity.json", arr.dump(2) + "\n");
    }
    out.finish();
    return 0;
}

// ------------------------------------------------------------------ diagnostics

int fail(int code, const std::string& kind, const std::string& message, json details = nullptr)
{
    json j{{"status", "error"}, {"exit_code", code}, {"error", kind}, {"message", message}};
    if (!details.is_null()) {
        j["diagnostics"] = std::move(details);
    }
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Involution-channel circuit simulator and short-pulse-filtration toolkit", "invchan"};
    app.require_subcommand(1);
    app.fallthrough();

    Global g;
    app.add_option("--horizon", g.horizon, "simulation horizon")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "seed for randomized checks");
    app.add_option("--out-dir", g.out_dir, "write result files here instead of stdout");
    app.add_option("--format", g.format, "output format: vcd|csv (simulate), csv|json (sweeps), json");

    std::string netlist, inputs, vertex, base, circuit;
    std::string eps = "0.1,0.01,0.001,0.0001,1e-05,1e-06";
    std::size_t k = 0, random_checks = 0, points = 1000, max_steps = 100000;
    double tol = 1e-12, vtol = 1e-9;
    ModelOptions mo;
    Grid grid;

    auto* sim = app.add_subcommand("simulate", "simulate a netlist and write waveforms");
    sim->add_option("netlist", netlist, "netlist JSON")->required();
    sim->add_option("inputs", inputs, "signal CSV (one input) or JSON input map")->required();

    auto* sweep = app.add_subcommand("spf-sweep", "storage-loop regime per input pulse length");
    mo.add(sweep);
    grid.add(sweep, "pulse length");

    auto* crit = app.add_subcommand("critical", "critical pulse length of the storage loop");
    mo.add(crit);
    crit->add_option("--tol", tol, "bisection bracket width");
    crit->add_option("--max-steps", max_steps, "loop iterations before a run counts as undecided");

    auto* unr = app.add_subcommand("unroll", "k-unrolling with z-values");
    unr->add_option("netlist", netlist, "netlist JSON")->required();
    unr->add_option("--vertex", vertex, "gate or output port to unroll")->required();
    unr->add_option("--k", k, "unrolling depth")->required();
    unr->add_option("--inputs", inputs, "compare executions on these inputs");
    unr->add_option("--random-checks", random_checks, "compare executions on this many random inputs");

    auto* val = app.add_subcommand("validate-channel", "check the involution property of a channel model");
    mo.add(val);
    val->add_option("--points", points, "grid size");
    val->add_option("--tol", vtol, "tolerance on the involution identity");

    auto* cont = app.add_subcommand("continuity", "glitch probe on a channel, or measure sweep of a forward circuit");
    mo.add(cont);
    cont->add_option("--circuit", circuit, "forward netlist to sweep (otherwise probe a single channel)");
    grid.add(cont, "pulse length");
    cont->add_option("--base", base, "base signal CSV for the probe (default: pulse(0,2))");
    cont->add_option("--eps", eps, "comma-separated glitch lengths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        return fail(2, "UsageError", e.what());
    }

    try {
        if (*sim) {
            return cmd_simulate(g, netlist, inputs);
        }
        if (*sweep) {
            return cmd_spf_sweep(g, mo, grid);
        }
        if (*crit) {
            return cmd_critical(g, mo, tol, max_steps);
        }
        if (*unr) {
            return cmd_unroll(g, netlist, vertex, k, inputs, random_checks);
        }
        if (*val) {
            return cmd_validate_channel(g, mo, points, vtol);
        }
        return cmd_continuity(g, mo, circuit, grid, base, eps);
    } catch (const ValidationError& e) {
        json errs = json::array();
        if (!netlist.empty()) {
            try {
                for (const auto& s : validate(io::load_netlist(netlist))) {
                    errs.push_back({{"rule", s.rule}, {"vertex", s.vertex}, {"message", s.message}});
                }
            } catch (const std::exception&) {
            }
        }
        return fail(2, "ValidationError", e.what(), errs.empty() ? json(nullptr) : errs);
    } catch (const ParseError& e) {
        return fail(2, "ParseError", e.what());
    } catch (const InvalidModel& e) {
        return fail(2, "InvalidModel", e.what());
    } catch (const ThresholdOutOfRange& e) {
        return fail(2, "ThresholdOutOfRange", e.what());
    } catch (const NonMonotoneWaveform& e) {
        return fail(2, "NonMonotoneWaveform", e.what());
    } catch (const InvalidPulse& e) {
        return fail(2, "InvalidPulse", e.what());
    } catch (const InvalidSignal& e) {
        return fail(2, "InvalidSignal", e.what());
    } catch (const NonInvolutionModel& e) {
        return fail(2, "NonInvolutionModel", e.what());
    } catch (const AsymmetricChannel& e) {
        return fail(2, "AsymmetricChannel", e.what());
    } catch (const NotStrictlyCausal& e) {
        return fail(2, "NotStrictlyCausal", e.what());
    } catch (const NotForward& e) {
        return fail(2, "NotForward", e.what());
    } catch (const IndexOutOfRange& e) {
        return fail(2, "IndexOutOfRange", e.what());
    } catch (const std::exception& e) {
        return fail(1, "RuntimeError", e.what());
    }
}
