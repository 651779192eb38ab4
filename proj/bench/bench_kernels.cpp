// Times the serial and parallel kernel paths on fixed-seed inputs and checks
// that both modes return bitwise-identical results. Wall times depend on the
// machine; the identity column must read "yes" everywhere.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "aepkit/kernels.hpp"

using aep::Cplx;
using aep::MatC;
namespace kn = aep::kernels;

namespace {

double best_seconds(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s < best) best = s;
    }
    return best;
}

MatC random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g;
    MatC m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = Cplx(g(rng), g(rng));
    return m;
}

void report(const char* name, const char* size, double serial_s, double parallel_s,
            bool identical) {
    std::printf("%-24s %-14s %10.3f %10.3f %8.2fx %s\n", name, size, serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main() {
    std::mt19937_64 rng(7);
    std::printf("%-24s %-14s %10s %11s %9s %s\n", "kernel", "size", "serial ms", "parallel ms",
                "speedup", "identical");

    {
        std::normal_distribution<double> g;
        std::vector<double> v(std::size_t{1} << 22);
        for (double& x : v) x = g(rng);
        double rs = 0.0, rp = 0.0;
        const double ts = best_seconds(5, [&] { rs = kn::chunked_sum(v, kn::Exec::serial); });
        const double tp = best_seconds(5, [&] { rp = kn::chunked_sum(v, kn::Exec::parallel); });
        report("chunked_sum", "4194304", ts, tp, rs == rp);
    }

    {
        const MatC rows = random_matrix(rng, 512, 1024);
        MatC gs, gp;
        const double ts = best_seconds(3, [&] { gs = kn::gram(rows, kn::Exec::serial); });
        const double tp = best_seconds(3, [&] { gp = kn::gram(rows, kn::Exec::parallel); });
        report("gram", "512x1024", ts, tp, kn::max_abs_diff(gs, gp) == 0.0);
    }

    {
        const MatC rows = random_matrix(rng, 512, 512);
        const MatC a = random_matrix(rng, 512, 512);
        const MatC rho = a * a.adjoint();
        std::vector<double> qs, qp;
        const double ts =
            best_seconds(3, [&] { qs = kn::quadratic_forms(rho, rows, kn::Exec::serial); });
        const double tp =
            best_seconds(3, [&] { qp = kn::quadratic_forms(rho, rows, kn::Exec::parallel); });
        report("quadratic_forms", "512 on 512^2", ts, tp, qs == qp);
    }

    {
        const MatC m = random_matrix(rng, 2048, 2048);
        MatC fs, fp, bs, bp;
        const double tfs = best_seconds(3, [&] {
            fs = kn::partial_trace_keep_prefix(m, 32, 64, kn::Exec::serial);
        });
        const double tfp = best_seconds(3, [&] {
            fp = kn::partial_trace_keep_prefix(m, 32, 64, kn::Exec::parallel);
        });
        report("partial_trace(prefix)", "2048 -> 32", tfs, tfp,
               kn::max_abs_diff(fs, fp) == 0.0);
        const double tbs = best_seconds(3, [&] {
            bs = kn::partial_trace_keep_suffix(m, 64, 32, kn::Exec::serial);
        });
        const double tbp = best_seconds(3, [&] {
            bp = kn::partial_trace_keep_suffix(m, 64, 32, kn::Exec::parallel);
        });
        report("partial_trace(suffix)", "2048 -> 32", tbs, tbp,
               kn::max_abs_diff(bs, bp) == 0.0);
    }

    return 0;
}
