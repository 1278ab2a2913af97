#pragma once

#include <functional>
#include <string>
#include <vector>

#include "seqgan/param_store.hpp"

namespace seqgan {

// Central finite differences (f(w+h) - f(w-h)) / 2h for every scalar
// parameter, flattened in store order. `f` must be deterministic given the
// store contents. A non-finite loss raises DivergenceError naming the
// parameter being perturbed.
std::vector<real_t> finite_diff_grad(const std::function<real_t()>& f,
                                     ParamStore& store, real_t h);

struct GradCompareReport {
    real_t max_rel_err = 0;
    std::string worst_name;
    int worst_offset = -1;  // offset within the worst tensor
    real_t analytic = 0;
    real_t numeric = 0;
};

// Componentwise relative error |a-n| / max(|a|,|n|); differences at or below
// `abs_floor` count as zero so true-zero gradients do not trip on
// finite-difference noise.
GradCompareReport compare_gradients(std::span<const real_t> analytic,
                                    std::span<const real_t> numeric,
                                    const ParamStore& store,
                                    real_t abs_floor = real_t{1e-9});

}  // namespace seqgan
