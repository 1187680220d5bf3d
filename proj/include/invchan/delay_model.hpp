#pragma once

// Delay functions of single-history channels.
//
// A delay model maps the input-to-previous-output gap T of a new input
// transition to its output-to-input delay delta(T). The involution kinds
// (exp and waveform-derived) satisfy -d_up(-d_down(T)) = T; the pure and
// inertial baselines use constant delays and exist for contrast runs only.

#include "invchan/detail/monotone_spline.hpp"
#include "invchan/errors.hpp"
#include "invchan/signal.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace invchan {

struct ExpChannelParams {
    double tau = 1.0;  ///< RC time constant, > 0
    Time t_p = 1.0;    ///< pure delay; strictly causal iff > 0
    double v_th = 0.5; ///< comparator threshold in (0, 1)

    friend bool operator==(const ExpChannelParams&, const ExpChannelParams&) = default;
};

struct PureDelayParams {
    Time delay = 1.0;
    friend bool operator==(const PureDelayParams&, const PureDelayParams&) = default;
};

/// Pulses shorter than `min_pulse` vanish, everything else is delayed by `delay`.
struct InertialDelayParams {
    Time delay = 1.0;
    Time min_pulse = 0.5;
    friend bool operator==(const InertialDelayParams&, const InertialDelayParams&) = default;
};

/// Samples as supplied by the user, kept for serialization.
struct WaveformSamples {
    std::vector<double> t;
    std::vector<double> f_up;
    std::vector<double> f_down;
    friend bool operator==(const WaveformSamples&, const WaveformSamples&) = default;
};

/// Sampled switching waveforms of a slew-rate limiter: f_up rises from 0
/// towards 1, f_down falls from 1 towards 0. Beyond the last sample both are
/// continued by an exponential tail fitted to the final two samples.
class WaveformShape {
public:
    WaveformShape(detail::MonotoneSpline up, detail::MonotoneSpline down, Time t_p, double v_th,
                  WaveformSamples raw = {})
        : up_(std::move(up)), down_(std::move(down)), t_p_(t_p), v_th_(v_th), raw_(std::move(raw))
    {
        up_tail_ = tail_scale(up_.xs(), up_.ys(), 1.0);
        down_tail_ = tail_scale(down_.xs(), down_.ys(), 0.0);
    }

    Time t_p() const noexcept { return t_p_; }
    double v_th() const noexcept { return v_th_; }
    const detail::MonotoneSpline& up_spline() const noexcept { return up_; }
    const detail::MonotoneSpline& down_spline() const noexcept { return down_; }
    const WaveformSamples& samples() const noexcept { return raw_; }

    double up(Time t) const noexcept { return eval(up_, up_tail_, 1.0, t); }
    double down(Time t) const noexcept { return eval(down_, down_tail_, 0.0, t); }
    Time up_inverse(double u) const { return inverse(up_, up_tail_, 1.0, u); }
    Time down_inverse(double u) const { return inverse(down_, down_tail_, 0.0, u); }

private:
    // decay length of |f - limit| past the last sample; 0 means "already at the limit"
    static double tail_scale(const std::vector<double>& x, const std::vector<double>& y, double limit)
    {
        const std::size_t n = x.size();
        const double a = std::abs(y[n - 2] - limit);
        const double b = std::abs(y[n - 1] - limit);
        if (b <= 0.0) {
            return 0.0;
        }
        return (x[n - 1] - x[n - 2]) / std::log(a / b);
    }

    static double eval(const detail::MonotoneSpline& s, double scale, double limit, Time t) noexcept
    {
        if (t <= s.back_x()) {
            return s(t);
        }
        if (scale <= 0.0) {
            return limit;
        }
        const double gap = s.back_y() - limit;
        return limit + gap * std::exp(-(t - s.back_x()) / scale);
    }

    static Time inverse(const detail::MonotoneSpline& s, double scale, double limit, double u)
    {
        const bool in_range = s.increasing() ? u <= s.back_y() : u >= s.back_y();
        if (in_range) {
            return s.inverse(u);
        }
        if (u == limit) {
            return std::numeric_limits<Time>::infinity();
        }
        if (scale <= 0.0) {
            throw DomainError("waveform value beyond its saturated sample range");
        }
        return s.back_x() + scale * std::log((s.back_y() - limit) / (u - limit));
    }

    detail::MonotoneSpline up_;
    detail::MonotoneSpline down_;
    Time t_p_;
    double v_th_;
    WaveformSamples raw_;
    double up_tail_ = 0.0;
    double down_tail_ = 0.0;
};

/// Result of a delay evaluation; `clamped` is set when T was nudged off the domain boundary.
struct DelayEval {
    Time value = 0.0;
    bool clamped = false;
};

class DelayModel {
public:
    enum class Kind { Exp, Waveform, Pure, Inertial };

    static constexpr Time kBoundaryNudge = 1e-12;

    static DelayModel exp(const ExpChannelParams& p)
    {
        if (!(p.tau > 0.0) || !std::isfinite(p.tau)) {
            throw InvalidModel("exp channel needs tau > 0");
        }
        if (!(p.v_th > 0.0 && p.v_th < 1.0)) {
            throw ThresholdOutOfRange("exp channel threshold must lie in (0, 1)");
        }
        if (!std::isfinite(p.t_p)) {
            throw InvalidModel("exp channel needs a finite pure delay");
        }
        DelayModel m(p);
        m.inf_up_ = p.t_p - p.tau * std::log1p(-p.v_th);
        m.inf_down_ = p.t_p - p.tau * std::log(p.v_th);
        m.finish();
        return m;
    }

    static DelayModel pure(Time delay)
    {
        if (!(delay > 0.0) || !std::isfinite(delay)) {
            throw InvalidModel("pure delay must be positive");
        }
        DelayModel m(PureDelayParams{delay});
        m.inf_up_ = m.inf_down_ = delay;
        m.delta_min_ = delay;
        return m;
    }

    static DelayModel inertial(Time delay, Time min_pulse)
    {
        if (!(delay > 0.0) || !std::isfinite(delay)) {
            throw InvalidModel("inertial delay must be positive");
        }
        // a rejected pulse must still be pending when its end arrives
        if (!(min_pulse > 0.0) || min_pulse > delay) {
            throw InvalidModel("inertial channel needs 0 < min_pulse <= delay");
        }
        DelayModel m(InertialDelayParams{delay, min_pulse});
        m.inf_up_ = m.inf_down_ = delay;
        m.delta_min_ = delay;
        return m;
    }

    static DelayModel waveform(std::shared_ptr<const WaveformShape> shape)
    {
        DelayModel m(shape);
        m.inf_up_ = shape->t_p() + shape->up_inverse(shape->v_th());
        m.inf_down_ = shape->t_p() + shape->down_inverse(shape->v_th());
        m.finish();
        return m;
    }

    Kind kind() const noexcept { return static_cast<Kind>(impl_.index()); }

    /// Same kind and parameters; waveform models compare their samples, t_p and v_th.
    friend bool operator==(const DelayModel& a, const DelayModel& b)
    {
        if (a.kind() != b.kind()) {
            return false;
        }
        if (const auto* wa = a.waveform_shape()) {
            const auto* wb = b.waveform_shape();
            if (wa == wb) {
                return true;
            }
            return !wa->samples().t.empty() && wa->samples() == wb->samples() && wa->t_p() == wb->t_p() &&
                   wa->v_th() == wb->v_th();
        }
        return a.impl_ == b.impl_;
    }
    bool is_involution() const noexcept { return kind() == Kind::Exp || kind() == Kind::Waveform; }

    /// Limit of delta(T) as T -> infinity, i.e. the delay seen by an idle channel.
    Time delta_inf(Edge e) const noexcept { return e == Edge::Rising ? inf_up_ : inf_down_; }

    /// Lower end of the open domain of delta for edge `e`.
    Time domain_lower(Edge e) const noexcept
    {
        if (!is_involution()) {
            return -std::numeric_limits<Time>::infinity();
        }
        return e == Edge::Rising ? -inf_down_ : -inf_up_;
    }

    bool strictly_causal() const { return delta(Edge::Rising, 0.0) > 0.0; }

    /// Cached minimal delay; empty for non-causal involution models.
    std::optional<Time> delta_min() const noexcept
    {
        if (std::isnan(delta_min_)) {
            return std::nullopt;
        }
        return delta_min_;
    }

    /// delta_up(T) or delta_down(T). Throws DomainError at or below the domain boundary.
    Time delta(Edge e, Time gap) const { return delta_checked(e, gap).value; }

    DelayEval delta_checked(Edge e, Time gap) const
    {
        if (std::isnan(gap)) {
            throw DomainError("delay requested for NaN gap");
        }
        if (!is_involution()) {
            return {inf_up_, false};
        }
        const Time lower = domain_lower(e);
        if (gap <= lower) {
            throw DomainError("gap " + std::to_string(gap) + " is outside the delay domain (" +
                              std::to_string(lower) + ", inf)");
        }
        DelayEval out;
        if (gap < lower + kBoundaryNudge) {
            gap = lower + kBoundaryNudge;
            out.clamped = true;
        }
        out.value = raw_delta(e, gap);
        return out;
    }

    const ExpChannelParams* exp_params() const noexcept { return std::get_if<ExpChannelParams>(&impl_); }
    const InertialDelayParams* inertial_params() const noexcept
    {
        return std::get_if<InertialDelayParams>(&impl_);
    }
    const PureDelayParams* pure_params() const noexcept { return std::get_if<PureDelayParams>(&impl_); }
    const WaveformShape* waveform_shape() const noexcept
    {
        const auto* p = std::get_if<std::shared_ptr<const WaveformShape>>(&impl_);
        return p ? p->get() : nullptr;
    }

    /// Minimum pulse length for inertial baselines, 0 otherwise.
    Time rejection_width() const noexcept
    {
        const auto* p = inertial_params();
        return p ? p->min_pulse : 0.0;
    }

private:
    using Impl = std::variant<ExpChannelParams, std::shared_ptr<const WaveformShape>, PureDelayParams,
                              InertialDelayParams>;

    explicit DelayModel(Impl impl) : impl_(std::move(impl)) {}

    // log(1 - exp(-x)) for x > 0 without cancellation at either end
    static double log1mexp(double x) noexcept
    {
        return x < 0.6931471805599453 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
    }

    Time raw_delta(Edge e, Time gap) const
    {
        const bool up = e == Edge::Rising;
        const Time opposite_inf = up ? inf_down_ : inf_up_;
        const Time own_inf = up ? inf_up_ : inf_down_;
        if (std::isinf(gap)) {
            return own_inf;
        }
        if (const auto* p = exp_params()) {
            return p->tau * log1mexp((gap + opposite_inf) / p->tau) + own_inf;
        }
        const WaveformShape& w = *waveform_shape();
        if (up) {
            return -w.up_inverse(w.down(gap + opposite_inf)) + own_inf;
        }
        return -w.down_inverse(w.up(gap + opposite_inf)) + own_inf;
    }

    void finish();

    Impl impl_;
    Time inf_up_ = 0.0;
    Time inf_down_ = 0.0;
    Time delta_min_ = std::numeric_limits<Time>::quiet_NaN();
};

inline constexpr std::size_t kDeltaMinMaxIterations = 200;
inline constexpr Time kDeltaMinTolerance = 1e-12;

/// Unique positive T with delta_up(-T) = T = delta_down(-T), by bisection of
/// g(T) = -T + delta_up(-T), which is continuous and strictly decreasing.
inline Time compute_delta_min(const DelayModel& model)
{
    if (!model.is_involution()) {
        return *model.delta_min();
    }
    if (!(model.delta(Edge::Rising, 0.0) > 0.0)) {
        throw NotStrictlyCausal("delta_up(0) <= 0: channel is not strictly causal");
    }
    auto g = [&](Time t) { return -t + model.delta(Edge::Rising, -t); };
    Time lo = 0.0;
    Time hi = model.delta_inf(Edge::Falling) - 1e-9;
    if (g(hi) > 0.0) {
        return hi;
    }
    for (std::size_t k = 0; k < kDeltaMinMaxIterations && hi - lo > kDeltaMinTolerance; ++k) {
        const Time mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline void DelayModel::finish()
{
    if (!std::isfinite(inf_up_) || !std::isfinite(inf_down_)) {
        throw InvalidModel("delay limits must be finite");
    }
    if (delta(Edge::Rising, 0.0) > 0.0) {
        delta_min_ = compute_delta_min(*this);
    }
}

/// Involution channel from sampled switching waveforms: f_up rising 0 -> 1,
/// f_down falling 1 -> 0, both sampled at the shared times `t` starting at 0.
/// Consecutive duplicate values are dropped before interpolation.
inline DelayModel from_waveforms(std::span<const double> t, std::span<const double> f_up,
                                 std::span<const double> f_down, Time t_p, double v_th)
{
    if (!(v_th > 0.0 && v_th < 1.0)) {
        throw ThresholdOutOfRange("threshold must lie in (0, 1), got " + std::to_string(v_th));
    }
    if (t.size() != f_up.size() || t.size() != f_down.size() || t.size() < 3) {
        throw NonMonotoneWaveform("waveform needs at least three samples per column");
    }
    if (t.front() != 0.0) {
        throw NonMonotoneWaveform("waveform samples must start at t = 0");
    }
    auto clean = [&](std::span<const double> f, double start, bool rising) {
        if (std::abs(f.front() - start) > 1e-12) {
            throw NonMonotoneWaveform(std::string(rising ? "f_up" : "f_down") + " must start at " +
                                      std::to_string(start));
        }
        std::vector<double> xs{0.0};
        std::vector<double> ys{start};
        for (std::size_t k = 1; k < f.size(); ++k) {
            if (f[k] < 0.0 || f[k] > 1.0) {
                throw NonMonotoneWaveform("waveform values must lie in [0, 1]");
            }
            if (f[k] == ys.back()) {
                continue;
            }
            if ((f[k] > ys.back()) != rising) {
                throw NonMonotoneWaveform(std::string(rising ? "f_up" : "f_down") +
                                          " is not monotone at t = " + std::to_string(t[k]));
            }
            xs.push_back(t[k]);
            ys.push_back(f[k]);
        }
        return detail::MonotoneSpline(std::move(xs), std::move(ys));
    };
    WaveformSamples raw{{t.begin(), t.end()}, {f_up.begin(), f_up.end()}, {f_down.begin(), f_down.end()}};
    auto shape = std::make_shared<const WaveformShape>(clean(f_up, 0.0, true), clean(f_down, 1.0, false), t_p,
                                                       v_th, std::move(raw));
    return DelayModel::waveform(std::move(shape));
}

} // namespace invchan
