#include "wsnod/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wsnod/error.hpp"

namespace wsnod {

void NoiseSpec::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::invalid_argument, "sigma must be >= 0");
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        fail(ErrorCode::invalid_argument, "noise fraction must lie in [0, 1]");
    }
    if (attributes.empty()) fail(ErrorCode::invalid_argument, "no attribute selected for noise");
}

LabeledTrace inject_noise(const Trace& trace, const NoiseSpec& spec) {
    spec.validate();
    if (trace.readings.empty()) fail(ErrorCode::invalid_argument, "cannot inject noise into an empty trace");

    const std::size_t n = trace.readings.size();
    const auto count = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(n)));

    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(count);
    std::sort(order.begin(), order.end());

    LabeledTrace out{trace, trace.readings, std::vector<std::uint8_t>(n, 0)};
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i : order) {
        out.labels[i] = 1;
        auto& r = out.trace.readings[i];
        for (Attribute a : spec.attributes) r.set_value(a, r.value(a) + spec.sigma * unit(rng));
    }
    return out;
}

}  // namespace wsnod
