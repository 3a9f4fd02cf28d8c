#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace bqp {

using cplx = std::complex<double>;

// Thread count precedence: explicit request > BQP_THREADS > hardware.
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BQP_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(chunk) for chunk in [0, chunks). Chunks are claimed dynamically, so
// callers must write results into per-chunk slots and reduce them in index
// order; that makes every result independent of the thread count.
template <class Fn>
void parallel_chunks(size_t chunks, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(chunks, 1))));
    if (threads == 1) {
        for (size_t c = 0; c < chunks; ++c) fn(c);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                size_t c = next.fetch_add(1);
                if (c >= chunks) return;
                try {
                    fn(c);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    next = chunks;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Neumaier compensated summation.
template <class T>
struct KahanSum {
    T sum{};
    T comp{};
    void add(T v) {
        if constexpr (std::is_same_v<T, cplx>) {
            double re = sum.real(), im = sum.imag();
            double cre = comp.real(), cim = comp.imag();
            step(re, cre, v.real());
            step(im, cim, v.imag());
            sum = {re, im};
            comp = {cre, cim};
        } else {
            step(sum, comp, v);
        }
    }
    T value() const { return sum + comp; }

  private:
    static void step(double& s, double& c, double v) {
        double t = s + v;
        if (std::fabs(s) >= std::fabs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }
};

using KahanSumD = KahanSum<double>;
using KahanSumC = KahanSum<cplx>;

}  // namespace bqp
