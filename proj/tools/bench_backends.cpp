// Times the mixing-operator backends against each other and checks that the
// parallel kernel reproduces the serial reference bitwise.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qgs/grid.hpp"
#include "qgs/operator.hpp"

using namespace qgs;
using clk = std::chrono::steady_clock;

namespace {

Field sample(const Grid& g) {
    Field f = make_field(g);
    for (int i = 0; i < g.n; ++i) {
        double z = g.z(i);
        f[i] = std::exp(-0.5 * z * z / 0.25) * (1.0 + 0.3 * std::sin(3.0 * z)) +
               0.4 * std::exp(-0.5 * (z - 0.9) * (z - 0.9) / 0.01);
    }
    double mass = field_mass(f);
    for (int i = 0; i < g.n; ++i) f[i] /= mass;
    return f;
}

double time_ms(const std::function<Field()>& apply) {
    apply();  // warm caches and FFT plans
    int reps = 1;
    double ms = 0.0;
    for (;;) {
        auto t0 = clk::now();
        for (int r = 0; r < reps; ++r) apply();
        ms = std::chrono::duration<double, std::milli>(clk::now() - t0).count();
        if (ms > 200.0 || reps >= 4096) return ms / reps;
        reps *= 4;
    }
}

}  // namespace

int main() {
    const double eps = 0.1;
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    std::printf("%6s %12s %12s %9s %12s %8s %14s\n", "n", "serial ms", "parallel ms",
                "speedup", "fft ms", "bitwise", "fft vs direct");
    for (int n : {512, 1024, 2048, 4096}) {
        Grid g = make_grid(-4.0, 4.0, n);
        Field f = sample(g);

        double ser = time_ms([&] { return apply_B_direct_serial(f, eps); });
        double par = time_ms([&] { return apply_B_direct(f, eps); });
        double fft = time_ms([&] { return apply_B_fft(f, eps); });

        Field a = apply_B_direct_serial(f, eps);
        Field b = apply_B_direct(f, eps);
        Field c = apply_B_fft(f, eps);
        bool bitwise = true;
        double peak = 0.0, dev = 0.0;
        for (int i = 0; i < n; ++i) {
            if (a[i] != b[i]) bitwise = false;
            peak = std::max(peak, std::fabs(a[i]));
            dev = std::max(dev, std::fabs(a[i] - c[i]));
        }
        std::printf("%6d %12.3f %12.3f %9.2f %12.4f %8s %14.3e\n", n, ser, par,
                    ser / par, fft, bitwise ? "yes" : "NO", dev / peak);
        if (!bitwise) return 1;
    }
    return 0;
}
