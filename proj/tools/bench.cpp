// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0
//
// Micro-benchmark of the parallel kernels against their serial reference
// implementations. Also asserts that both produce bit-identical results,
// which is the contract the test suite relies on.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "fpq/analysis.hpp"
#include "fpq/linalg.hpp"
#include "fpq/parallel.hpp"
#include "fpq/quantize.hpp"
#include "fpq/reference.hpp"

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best(int iters, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < iters; ++i) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void row(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s %10.4f ms %10.4f ms %7.2fx   %s\n", name, serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    fpq::init_threads_from_env();

    std::size_t n = 768;
    int iters = 3;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--size") == 0 && i + 1 < argc) {
            n = std::size_t(std::stoull(argv[++i]));
        } else if (std::strcmp(argv[i], "--iters") == 0 && i + 1 < argc) {
            iters = int(std::stol(argv[++i]));
        } else if (std::strcmp(argv[i], "--smoke") == 0) {
            n = 64;
            iters = 1;
        } else {
            std::fprintf(stderr, "usage: %s [--size N] [--iters K] [--smoke]\n", argv[0]);
            return 2;
        }
    }

    std::printf("matrix %zux%zu, best of %d, %d thread(s)\n\n", n, n, iters,
                fpq::max_threads());
    std::printf("%-22s %13s %13s %8s\n", "kernel", "serial", "parallel", "speedup");

    const fpq::tensor w = fpq::gen_synthetic(fpq::synth_kind::normal, {n, n}, 11);
    const fpq::tensor x = fpq::gen_synthetic(fpq::synth_kind::normal, {n / 2, n}, 12);
    const fpq::quant_spec spec = fpq::parse_quant_spec("int8:sym:group256");

    bool all_ok = true;

    {
        fpq::quantized_tensor qs, qp;
        const double ts = time_best(iters, [&] { qs = fpq::ref::quantize(w, spec); });
        const double tp = time_best(iters, [&] { qp = fpq::quantize(w, spec); });
        const bool ok = qs.codes == qp.codes && qs.scales == qp.scales;
        all_ok = all_ok && ok;
        row("quantize int8 g256", ts, tp, ok);

        fpq::tensor ds, dp;
        const double tds = time_best(iters, [&] { ds = fpq::ref::dequantize(qs); });
        const double tdp = time_best(iters, [&] { dp = fpq::dequantize(qp); });
        const bool dok = ds.data == dp.data;
        all_ok = all_ok && dok;
        row("dequantize", tds, tdp, dok);
    }
    {
        fpq::tensor ms, mp;
        const double ts = time_best(iters, [&] { ms = fpq::ref::matmul(w, w); });
        const double tp = time_best(iters, [&] { mp = fpq::matmul(w, w); });
        const bool ok = ms.data == mp.data;
        all_ok = all_ok && ok;
        row("matmul", ts, tp, ok);
    }
    {
        fpq::tensor gs, gp;
        const double ts = time_best(iters, [&] { gs = fpq::ref::gram_2xtx(x); });
        const double tp = time_best(iters, [&] { gp = fpq::gram_2xtx(x); });
        const bool ok = gs.data == gp.data;
        all_ok = all_ok && ok;
        row("gram 2X^TX", ts, tp, ok);
    }
    {
        double fs = 0.0, fp = 0.0;
        const double ts = time_best(iters, [&] { fs = fpq::ref::frobenius_diff(w, x.numel() == w.numel() ? x : w); });
        const double tp = time_best(iters, [&] { fp = fpq::frobenius_diff(w, x.numel() == w.numel() ? x : w); });
        const bool ok = fs == fp;
        all_ok = all_ok && ok;
        row("frobenius diff", ts, tp, ok);
    }

    std::printf("\n%s\n", all_ok ? "all kernels bit-identical" : "kernel mismatch detected");
    return all_ok ? 0 : 1;
}
