#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "shgn/tensor.hpp"

namespace shgn {

struct GradOffender {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double error = 0.0;  // |analytic - numeric| / max(1, |analytic|)
};

struct GradCheckReport {
    std::size_t checked = 0;
    double max_error = 0.0;
    std::vector<GradOffender> offenders;

    bool passed() const { return offenders.empty(); }
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

// Compares the reverse-mode gradient of a scalar function against central differences
// for every entry of every parameter. `f` must rebuild its computation from the current
// parameter values on each call. Throws Error on a non-finite value.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> params,
                           double eps = 1e-5, double tol = 1e-6);

}  // namespace shgn
