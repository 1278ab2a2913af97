#include "seqgan/gradcheck.hpp"

#include <cmath>

namespace seqgan {

std::vector<real_t> finite_diff_grad(const std::function<real_t()>& f,
                                     ParamStore& store, real_t h) {
    require(h > real_t{0}, "finite_diff_grad: h must be positive");
    std::vector<real_t> out;
    out.reserve(store.total_size());
    for (int i = 0; i < store.size(); ++i) {
        auto& e = store.entry(i);
        auto vals = e.value.flat();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const real_t saved = vals[j];
            vals[j] = saved + h;
            const real_t up = f();
            vals[j] = saved - h;
            const real_t down = f();
            vals[j] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw DivergenceError("finite_diff_grad: non-finite loss while perturbing " +
                                      e.name);
            }
            out.push_back((up - down) / (real_t{2} * h));
        }
    }
    return out;
}

GradCompareReport compare_gradients(std::span<const real_t> analytic,
                                    std::span<const real_t> numeric,
                                    const ParamStore& store, real_t abs_floor) {
    require(analytic.size() == numeric.size(),
            "compare_gradients: size mismatch");
    require(analytic.size() == store.total_size(),
            "compare_gradients: store size mismatch");
    GradCompareReport report;
    std::size_t flat = 0;
    for (int i = 0; i < store.size(); ++i) {
        const auto& e = store.entry(i);
        const std::size_t n = e.value.numel();
        for (std::size_t j = 0; j < n; ++j, ++flat) {
            const real_t a = analytic[flat];
            const real_t b = numeric[flat];
            const real_t diff = std::abs(a - b);
            if (diff <= abs_floor) continue;
            const real_t rel = diff / std::max(std::abs(a), std::abs(b));
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_name = e.name;
                report.worst_offset = static_cast<int>(j);
                report.analytic = a;
                report.numeric = b;
            }
        }
    }
    return report;
}

}  // namespace seqgan
