#include "kdvq/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace kdvq {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    fftw_complex* buf = nullptr;
    int n = 0;
};

std::mutex g_mutex;
std::map<int, PlanPair>& cache() {
    static std::map<int, PlanPair> c;
    return c;
}

PlanPair& plans_for(int n) {
    auto& c = cache();
    auto it = c.find(n);
    if (it != c.end()) return it->second;
    PlanPair p;
    p.n = n;
    p.buf = fftw_alloc_complex(static_cast<size_t>(n));
    if (!p.buf) throw std::bad_alloc();
    p.fwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    return c.emplace(n, p).first->second;
}

void run(std::vector<std::complex<double>>& data, bool forward) {
    int n = static_cast<int>(data.size());
    if (n == 0) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    PlanPair& p = plans_for(n);
    for (int i = 0; i < n; ++i) {
        p.buf[i][0] = data[static_cast<size_t>(i)].real();
        p.buf[i][1] = data[static_cast<size_t>(i)].imag();
    }
    fftw_execute(forward ? p.fwd : p.bwd);
    for (int i = 0; i < n; ++i)
        data[static_cast<size_t>(i)] = {p.buf[i][0], p.buf[i][1]};
}

} // namespace

void fft_forward(std::vector<std::complex<double>>& data) { run(data, true); }
void fft_inverse(std::vector<std::complex<double>>& data) { run(data, false); }

int next_fast_size(int n) {
    if (n < 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        while (r % 2 == 0) r /= 2;
        while (r % 3 == 0) r /= 3;
        while (r % 5 == 0) r /= 5;
        if (r == 1) return m;
    }
}

} // namespace kdvq
