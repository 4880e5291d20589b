#pragma once

// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tcasym {

class Pchip {
public:
    Pchip() = default;

    Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("Pchip: need >= 2 matching samples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("Pchip: abscissae must increase");

        std::vector<double> h(n - 1), s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            s[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        if (n == 2) {
            d_[0] = d_[1] = s[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] * s[i] <= 0.0) continue;
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
        d_[0] = end_slope(h[0], h[1], s[0], s[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    }

    double operator()(double xq) const {
        if (x_.empty()) throw std::logic_error("Pchip: empty interpolant");
        if (xq < x_.front() || xq > x_.back()) throw std::out_of_range("Pchip: query outside sample range");
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (i >= x_.size() - 1) i = x_.size() - 2;
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }

private:
    // three-point end formula, shape preserving
    static double end_slope(double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) d = 0.0;
        else if (s0 * s1 <= 0.0 && std::abs(d) > std::abs(3.0 * s0)) d = 3.0 * s0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

}  // namespace tcasym
