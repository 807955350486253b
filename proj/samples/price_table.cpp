// Prices the benchmark contract at a few loading angles with the analytic
// methods and a small Monte Carlo run.

#include "oux/mc.hpp"
#include "oux/pricers.hpp"

#include <cstdio>

int main() {
    using namespace oux;
    const ContractParams cp;
    SimConfig sim;
    sim.npaths = 20000;

    std::printf("%-8s %10s %10s %10s %10s %22s\n", "theta", "taylor1", "taylor2", "spline", "fft", "mc (95% ci)");
    for (double theta : {kPi / 6.0, kPi / 2.0}) {
        ModelParams mp;
        mp.theta = theta;
        const double t1 = price_taylor(mp, cp, 1).price;
        const double t2 = price_taylor(mp, cp, 2).price;
        const double sp = price_spline(mp, cp, {0.0, 5.0}, 64).price;
        const double ff = price_fft(mp, cp, {0.0, 5.0}, 4096).price;
        const McResult mc = price_mc(mp, cp, sim);
        std::printf("%-8.4f %10.5f %10.5f %10.5f %10.5f %10.4f..%-10.4f\n", theta, t1, t2, sp, ff, mc.ci95.first,
                    mc.ci95.second);
    }

    // the spline route only needs the variance window; Margrabe at v = 0 is the floor
    std::printf("intrinsic floor %.5f\n", margrabe_price(cp, 0.0));
}
