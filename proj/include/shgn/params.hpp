#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "shgn/grad_check.hpp"
#include "shgn/rng.hpp"
#include "shgn/tensor.hpp"

namespace shgn {

enum class Init { Xavier, Zeros, Ones };

// Named trainable tensors. Handles returned by add()/get() alias the stored tensor, so
// in-place updates (optimizer steps, checkpoint loads) are visible to every holder.
class ParamStore {
public:
    Tensor add(const std::string& name, Shape shape, Init init, Rng& rng);
    Tensor get(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.contains(name); }

    const std::map<std::string, Tensor>& all() const { return params_; }
    std::vector<NamedTensor> named() const;
    std::size_t num_values() const;
    void zero_grad();

private:
    std::map<std::string, Tensor> params_;
};

}  // namespace shgn
