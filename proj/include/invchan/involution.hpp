#pragma once

// Numerical checks on delay models: involution identity, monotonicity and
// concavity by finite differences, derivative estimates, symmetry.

#include "invchan/delay_model.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace invchan {

struct ValidationReport {
    bool involution_kind = true;
    std::size_t points = 0;           ///< grid points inside both domains
    double max_error_up_down = 0.0;   ///< max |-d_up(-d_down(T)) - T|
    double max_error_down_up = 0.0;   ///< max |-d_down(-d_up(T)) - T|
    bool increasing = true;
    bool concave = true;
    bool passed = false;
    std::string reason;
};

/// Points strictly inside both delay domains, from just above the larger lower
/// bound up to `upper`.
inline std::vector<Time> involution_grid(const DelayModel& model, std::size_t n, Time upper = 10.0,
                                         Time margin = 0.01)
{
    Time lo = std::max(model.domain_lower(Edge::Rising), model.domain_lower(Edge::Falling));
    if (!std::isfinite(lo)) {
        lo = -model.delta_inf(Edge::Rising);
    }
    lo += margin;
    std::vector<Time> grid(n);
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = lo + (upper - lo) * static_cast<Time>(k) / static_cast<Time>(n - 1);
    }
    return grid;
}

inline ValidationReport validate_involution(const DelayModel& model, std::span<const Time> grid, double tol)
{
    ValidationReport rep;
    rep.involution_kind = model.is_involution();
    const Time lower = std::max(model.domain_lower(Edge::Rising), model.domain_lower(Edge::Falling));

    std::vector<Time> ts;
    for (Time t : grid) {
        if (t > lower && std::isfinite(t)) {
            ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());
    rep.points = ts.size();

    for (Time t : ts) {
        const Time a = -model.delta(Edge::Rising, -model.delta(Edge::Falling, t));
        const Time b = -model.delta(Edge::Falling, -model.delta(Edge::Rising, t));
        rep.max_error_up_down = std::max(rep.max_error_up_down, std::abs(a - t));
        rep.max_error_down_up = std::max(rep.max_error_down_up, std::abs(b - t));
    }

    for (Edge e : {Edge::Rising, Edge::Falling}) {
        double prev_slope = INFINITY;
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            const double slope =
                (model.delta(e, ts[k + 1]) - model.delta(e, ts[k])) / (ts[k + 1] - ts[k]);
            if (!(slope > 0.0)) {
                rep.increasing = false;
            }
            if (slope > prev_slope * (1.0 + 1e-6) + 1e-9) {
                rep.concave = false;
            }
            prev_slope = slope;
        }
    }

    if (!rep.involution_kind) {
        rep.reason = "baseline channel: constant delays are not involutions";
    } else if (rep.points == 0) {
        rep.reason = "no grid point inside the delay domain";
    } else if (std::max(rep.max_error_up_down, rep.max_error_down_up) > tol) {
        rep.reason = "involution error exceeds tolerance";
    }
    rep.passed = rep.involution_kind && rep.points > 0 &&
                 std::max(rep.max_error_up_down, rep.max_error_down_up) <= tol;
    return rep;
}

/// Central difference of delta_e at T.
inline double delay_derivative(const DelayModel& model, Edge e, Time t, double h)
{
    return (model.delta(e, t + h) - model.delta(e, t - h)) / (2.0 * h);
}

/// Characteristic time scale used for finite-difference step sizes.
inline Time time_scale(const DelayModel& model)
{
    if (const auto* p = model.exp_params()) {
        return p->tau;
    }
    return std::max(model.delta_inf(Edge::Rising), 1e-3);
}

/// delta_up == delta_down on a grid, within `tol` (absolute).
inline bool is_symmetric(const DelayModel& model, double tol = 1e-9)
{
    if (!model.is_involution()) {
        return true;
    }
    if (std::abs(model.delta_inf(Edge::Rising) - model.delta_inf(Edge::Falling)) > tol) {
        return false;
    }
    for (Time t : involution_grid(model, 200, 10.0 * time_scale(model))) {
        if (std::abs(model.delta(Edge::Rising, t) - model.delta(Edge::Falling, t)) > tol) {
            return false;
        }
    }
    return true;
}

} // namespace invchan
