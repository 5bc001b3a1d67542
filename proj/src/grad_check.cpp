#include "shgn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "shgn/error.hpp"

namespace shgn {

namespace {

double evaluate(const std::function<Tensor()>& f) {
    NoGradGuard guard;
    const double v = f().item();
    if (!std::isfinite(v)) throw Error("grad_check: non-finite function value");
    return v;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> params, double eps,
                           double tol) {
    for (auto& p : params) p.tensor.zero_grad();
    Tensor out = f();
    if (!std::isfinite(out.item())) throw Error("grad_check: non-finite function value");
    out.backward();

    GradCheckReport report;
    for (auto& p : params) {
        const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
        auto values = p.tensor.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(analytic[i])) throw Error("grad_check: non-finite gradient in " + p.name);
            const double saved = values[i];
            values[i] = saved + eps;
            const double plus = evaluate(f);
            values[i] = saved - eps;
            const double minus = evaluate(f);
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * eps);
            const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
            report.max_error = std::max(report.max_error, err);
            ++report.checked;
            if (err > tol) report.offenders.push_back({p.name, i, analytic[i], numeric, err});
        }
    }
    return report;
}

}  // namespace shgn
