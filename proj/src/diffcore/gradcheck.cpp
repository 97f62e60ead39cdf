#include "featfool/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "featfool/errors.hpp"

namespace featfool::diffcore {

namespace {

constexpr double kDenominatorFloor = 1e-6;

template <typename T>
double eval_at(const std::function<BasicTensor<T>(const BasicTensor<T>&)>& f, const BasicTensor<T>& x) {
    const BasicTensor<T> y = f(x);
    if (y.numel() != 1) throw ContractError("finite_diff_check: function must be scalar-valued");
    return static_cast<double>(y.item());
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(const std::function<BasicTensor<T>(const BasicTensor<T>&)>& f,
                                  const BasicTensor<T>& x, double h) {
    GradCheckReport report;
    const std::size_t n = x.numel();

    BasicTensor<T> leaf = x.detach();
    leaf.set_requires_grad(true);
    const BasicTensor<T> y = f(leaf);
    if (y.numel() != 1) throw ContractError("finite_diff_check: function must be scalar-valued");
    report.analytic.assign(n, 0.0);
    if (y.requires_grad()) {
        backward(y);
        for (std::size_t i = 0; i < n; ++i) report.analytic[i] = static_cast<double>(leaf.grad()[i]);
    }

    report.numeric.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        BasicTensor<T> plus = x.detach();
        BasicTensor<T> minus = x.detach();
        plus.values_mut()[i] += static_cast<T>(h);
        minus.values_mut()[i] -= static_cast<T>(h);
        // Use the realized step so float rounding of x +- h does not bias the slope.
        const double step = static_cast<double>(plus.values()[i]) - static_cast<double>(minus.values()[i]);
        report.numeric[i] = (eval_at(f, plus) - eval_at(f, minus)) / step;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double a = report.analytic[i];
        const double num = report.numeric[i];
        const double abs_err = std::abs(a - num);
        const double denom = std::max({std::abs(a), std::abs(num), kDenominatorFloor});
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
    }
    return report;
}

template GradCheckReport finite_diff_check<float>(const std::function<BasicTensor<float>(const BasicTensor<float>&)>&,
                                                  const BasicTensor<float>&, double);
template GradCheckReport finite_diff_check<double>(
    const std::function<BasicTensor<double>(const BasicTensor<double>&)>&, const BasicTensor<double>&, double);

}  // namespace featfool::diffcore
