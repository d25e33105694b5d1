#pragma once

#include "sinceeg/tensor.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace sinceeg::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double scale = std::max(norm2(a), norm2(b));
    return scale == 0.0 ? 0.0 : norm2(d) / scale;
}

struct GradCheckResult {
    double worst = 0.0;             // largest relative error over `wrt`
    std::vector<double> per_tensor;
};

// Compares reverse-mode gradients of <f(x), R> (R a fixed random projection)
// against central differences for every element of every tensor in `wrt`.
inline GradCheckResult gradcheck(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& wrt,
                                 std::uint64_t seed = 7, double h = 1e-6) {
    for (const auto& t : wrt) t.zero_grad();
    Tape tape;
    Tensor out = f(tape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<double> projection(out.numel());
    for (auto& r : projection) r = dist(rng);
    tape.backward(out, projection);

    auto objective = [&]() {
        Tape off(false);
        const Tensor y = f(off);
        double s = 0.0;
        auto d = y.data();
        for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * projection[i];
        return s;
    };

    GradCheckResult result;
    for (const auto& t : wrt) {
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) {
            auto g = t.grad();
            analytic.assign(g.begin(), g.end());
        }
        std::vector<double> numeric(t.numel());
        Tensor handle = t;
        auto x = handle.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double keep = x[i];
            x[i] = keep + h;
            const double up = objective();
            x[i] = keep - h;
            const double down = objective();
            x[i] = keep;
            numeric[i] = (up - down) / (2.0 * h);
        }
        const double err = relative_error(analytic, numeric);
        result.per_tensor.push_back(err);
        result.worst = std::max(result.worst, err);
    }
    return result;
}

// |X(f)| of a real sequence by direct summation, for cross-checking.
inline double dtft_magnitude(const std::vector<double>& x, double f) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
        acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(n));
    return std::abs(acc);
}

// Amplitude of the sinusoid at `freq` (Hz) by least squares on sin/cos.
inline double tone_amplitude(const std::vector<double>& x, double freq, double fs, std::size_t begin,
                             std::size_t end) {
    double ss = 0, cc = 0, sc = 0, xs = 0, xc = 0;
    for (std::size_t n = begin; n < end; ++n) {
        const double ph = 2.0 * std::numbers::pi * freq * static_cast<double>(n) / fs;
        const double s = std::sin(ph), c = std::cos(ph);
        ss += s * s;
        cc += c * c;
        sc += s * c;
        xs += x[n] * s;
        xc += x[n] * c;
    }
    const double det = ss * cc - sc * sc;
    const double a = (xs * cc - xc * sc) / det;
    const double b = (xc * ss - xs * sc) / det;
    return std::hypot(a, b);
}

}  // namespace sinceeg::testing
