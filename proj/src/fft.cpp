#include "coastflow/fft.hpp"

#include "coastflow/errors.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace coastflow::fft {

namespace {

// Plans are keyed on shape, batch count, direction and the FFTW alignment
// classes of the arrays they were created for; execution through the
// new-array interface is then valid for any arrays of matching alignment.
using PlanKey = std::tuple<int, int, int, int, int, int, int>;

std::mutex g_mutex;
std::map<PlanKey, fftw_plan> g_c2c;
std::map<PlanKey, fftw_plan> g_r2c;

fftw_complex* fc(const Complex* p) {
    return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

} // namespace

void c2c3(int n0, int n1, int n2, int howmany, const Complex* src, Complex* dst, int sign) {
    if (src == dst) throw std::logic_error("c2c3: in-place transform not supported");
    const int n[3] = {n0, n1, n2};
    const PlanKey key{n0, n1, n2, howmany, sign, fftw_alignment_of(reinterpret_cast<double*>(fc(src))),
                      fftw_alignment_of(reinterpret_cast<double*>(fc(dst)))};
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_mutex);
        auto it = g_c2c.find(key);
        if (it == g_c2c.end()) {
            plan = fftw_plan_many_dft(3, n, howmany, fc(src), nullptr, howmany, 1, fc(dst), nullptr,
                                      howmany, 1, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE);
            if (!plan) throw SolverError("fftw_plan_many_dft failed");
            g_c2c.emplace(key, plan);
        } else {
            plan = it->second;
        }
    }
    fftw_execute_dft(plan, fc(src), fc(dst));
}

void r2c3(int n0, int n1, int n2, int howmany, const double* src, Complex* dst) {
    const int n[3] = {n0, n1, n2};
    double* in = const_cast<double*>(src);
    const PlanKey key{n0, n1, n2, howmany, 0, fftw_alignment_of(in),
                      fftw_alignment_of(reinterpret_cast<double*>(fc(dst)))};
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_mutex);
        auto it = g_r2c.find(key);
        if (it == g_r2c.end()) {
            plan = fftw_plan_many_dft_r2c(3, n, howmany, in, nullptr, howmany, 1, fc(dst), nullptr,
                                          howmany, 1, FFTW_ESTIMATE);
            if (!plan) throw SolverError("fftw_plan_many_dft_r2c failed");
            g_r2c.emplace(key, plan);
        } else {
            plan = it->second;
        }
    }
    fftw_execute_dft_r2c(plan, in, fc(dst));
}

void clear_plan_cache() {
    std::lock_guard<std::mutex> lock(g_mutex);
    for (auto& [k, p] : g_c2c) fftw_destroy_plan(p);
    for (auto& [k, p] : g_r2c) fftw_destroy_plan(p);
    g_c2c.clear();
    g_r2c.clear();
}

} // namespace coastflow::fft
