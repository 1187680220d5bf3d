#pragma once

// Shape-preserving piecewise cubic Hermite interpolation (Fritsch-Carlson
// slopes with the Fritsch-Butland harmonic mean) on strictly monotone data,
// plus inverse evaluation by bisection inside the bracketing segment.

#include "invchan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace invchan::detail {

class MonotoneSpline {
public:
    MonotoneSpline() = default;

    /// `x` strictly increasing, `y` strictly monotone (either direction), at least 2 points.
    MonotoneSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y))
    {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) {
            throw NonMonotoneWaveform("need at least two samples with matching lengths");
        }
        increasing_ = y_.back() > y_.front();
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (!(x_[k + 1] > x_[k])) {
                throw NonMonotoneWaveform("sample times must be strictly increasing");
            }
            const bool up = y_[k + 1] > y_[k];
            const bool down = y_[k + 1] < y_[k];
            if ((increasing_ && !up) || (!increasing_ && !down)) {
                throw NonMonotoneWaveform("samples are not strictly monotone near t = " + std::to_string(x_[k]));
            }
        }
        compute_slopes();
    }

    double front_x() const noexcept { return x_.front(); }
    double back_x() const noexcept { return x_.back(); }
    double front_y() const noexcept { return y_.front(); }
    double back_y() const noexcept { return y_.back(); }
    bool increasing() const noexcept { return increasing_; }
    const std::vector<double>& xs() const noexcept { return x_; }
    const std::vector<double>& ys() const noexcept { return y_; }

    /// Evaluate at x, clamped to the sample range.
    double operator()(double x) const noexcept
    {
        if (x <= x_.front()) {
            return y_.front();
        }
        if (x >= x_.back()) {
            return y_.back();
        }
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
        return hermite(k, x);
    }

    /// x with spline(x) = y; y must lie within [min(y), max(y)]. The default
    /// tolerance bisects down to adjacent doubles, since errors in x are
    /// amplified wherever the data is flat.
    double inverse(double y, double xtol = 0.0) const
    {
        const double lo_y = std::min(y_.front(), y_.back());
        const double hi_y = std::max(y_.front(), y_.back());
        if (y < lo_y || y > hi_y) {
            throw DomainError("inverse requested outside the sampled value range");
        }
        std::size_t k;
        if (increasing_) {
            const auto it = std::upper_bound(y_.begin(), y_.end(), y);
            k = it == y_.begin() ? 0 : static_cast<std::size_t>(it - y_.begin()) - 1;
        } else {
            const auto it = std::upper_bound(y_.begin(), y_.end(), y, std::greater<>());
            k = it == y_.begin() ? 0 : static_cast<std::size_t>(it - y_.begin()) - 1;
        }
        k = std::min(k, x_.size() - 2);
        double lo = x_[k];
        double hi = x_[k + 1];
        for (int iter = 0; iter < 200 && hi - lo > xtol; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            const bool below = increasing_ ? hermite(k, mid) < y : hermite(k, mid) > y;
            (below ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    double hermite(std::size_t k, double x) const noexcept
    {
        const double h = x_[k + 1] - x_[k];
        const double s = (x - x_[k]) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1];
    }

    void compute_slopes()
    {
        const std::size_t n = x_.size();
        std::vector<double> h(n - 1);
        std::vector<double> d(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            h[k] = x_[k + 1] - x_[k];
            d[k] = (y_[k + 1] - y_[k]) / h[k];
        }
        m_.assign(n, 0.0);
        if (n == 2) {
            m_[0] = m_[1] = d[0];
            return;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            // strictly monotone data: neighbouring secants share a sign
            const double w1 = 2 * h[k] + h[k - 1];
            const double w2 = h[k] + 2 * h[k - 1];
            m_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
        m_[0] = end_slope(h[0], h[1], d[0], d[1]);
        m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }

    static double end_slope(double h0, double h1, double d0, double d1) noexcept
    {
        double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (std::signbit(m) != std::signbit(d0)) {
            m = 0.0;
        } else if (std::signbit(d0) != std::signbit(d1) && std::abs(m) > std::abs(3 * d0)) {
            m = 3 * d0;
        }
        return m;
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
    bool increasing_ = true;
};

} // namespace invchan::detail
