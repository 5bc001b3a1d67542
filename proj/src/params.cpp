#include "shgn/params.hpp"

#include <cmath>

#include "shgn/error.hpp"

namespace shgn {

Tensor ParamStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
    if (params_.contains(name)) throw Error("parameter '" + name + "' registered twice");
    std::vector<double> values(shape.numel(), 0.0);
    switch (init) {
        case Init::Xavier: {
            const double bound = std::sqrt(6.0 / static_cast<double>(shape.rows + shape.cols));
            for (double& v : values) v = rng.uniform(-bound, bound);
            break;
        }
        case Init::Ones:
            for (double& v : values) v = 1.0;
            break;
        case Init::Zeros:
            break;
    }
    Tensor t = Tensor::from(shape, std::move(values), true);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
}

std::vector<NamedTensor> ParamStore::named() const {
    std::vector<NamedTensor> out;
    for (const auto& [name, t] : params_) out.push_back({name, t});
    return out;
}

std::size_t ParamStore::num_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : params_) {
        Tensor handle = t;
        handle.zero_grad();
    }
}

}  // namespace shgn
