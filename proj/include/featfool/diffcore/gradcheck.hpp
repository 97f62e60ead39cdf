#pragma once

#include <functional>
#include <vector>

#include "featfool/diffcore/tensor.hpp"

namespace featfool::diffcore {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

// Compares backward() gradients of a scalar function against central
// differences with step h. Per-component relative error is
// |a - n| / max(|a|, |n|, 1e-6). Meant for the 64-bit instantiation.
template <typename T>
GradCheckReport finite_diff_check(const std::function<BasicTensor<T>(const BasicTensor<T>&)>& f,
                                  const BasicTensor<T>& x, double h);

}  // namespace featfool::diffcore
