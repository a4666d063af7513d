// P(Z_t > 0 | Z_∞ = 0) in the three supercritical regimes, with fitted
// exponential rates next to the predicted ones.
#include <cstdio>
#include <vector>

#include "bdre/estimators.hpp"

int main() {
    using namespace bdre;
    RunOptions o;
    o.seed = 11;
    const std::vector<double> times{4.0, 6.0, 8.0, 10.0, 12.0};

    for (double alpha : {0.5, 1.0, 2.0}) {
        const ModelParams p = ModelParams{}.with_alpha(alpha);
        const auto ex = decay_exponents(p);
        const auto curve = conditioned_survival_curve(p, times, 50000, 1e-2, o);
        std::printf("alpha = %.1f (%s)\n", alpha, std::string(to_string(classify_regime(p))).c_str());
        for (const auto& pt : curve) {
            std::printf("  t = %5.1f  p = %.4e ± %.1e\n", pt.t, pt.estimate.mean, pt.estimate.std_error);
        }
        try {
            const auto fit = fit_rate_from_points(curve, ex.power);
            std::printf("  rate %.4f, predicted %.4f\n\n", fit.exponential_rate, ex.rate);
        } catch (const NumericalError& e) {
            std::printf("  no fit: %s\n\n", e.what());
        }
    }
}
