// Extinction probability of the standard BDRE for a few starting sizes:
// closed form against the Rao-Blackwellized and pathwise estimators.
#include <cstdio>

#include "bdre/estimators.hpp"

int main() {
    using namespace bdre;
    RunOptions o;
    o.seed = 7;
    SchemeConfig rb;
    rb.dt = 1e-2;
    SchemeConfig pw;
    pw.dt = 1e-3;

    std::printf("%6s %10s %22s %22s\n", "z", "exact", "rao_blackwell", "pathwise");
    for (double z : {0.25, 0.5, 1.0, 2.0}) {
        const ModelParams p = ModelParams{}.with_z0(z);
        const auto exact = estimate_extinction(p, ExtinctionMethod::ClosedForm, 1, 30.0, rb, o);
        const auto a = estimate_extinction(p, ExtinctionMethod::RaoBlackwell, 20000, 30.0, rb, o);
        const auto b = estimate_extinction(p, ExtinctionMethod::Pathwise, 4000, 10.0, pw, o);
        std::printf("%6.2f %10.6f %12.6f ± %7.5f %12.6f ± %7.5f\n", z, exact.mean, a.mean, a.std_error, b.mean,
                    b.std_error);
    }
}
