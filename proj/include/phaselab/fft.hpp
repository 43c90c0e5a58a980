#pragma once

// Thin wrapper around FFTW3 for the strided 1-D line transforms used by the
// spectral kernels. Plans are cached per (size, stride, howmany, direction)
// and created with FFTW_ESTIMATE so repeated runs produce identical plans
// and bit-identical results.

#include <fftw3.h>

#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace phaselab::fft {

using cplx = std::complex<double>;

namespace detail {

struct PlanKey {
    int n;
    int stride;
    int howmany;
    int dist;
    int sign;
    bool operator<(const PlanKey& o) const {
        if (n != o.n) return n < o.n;
        if (stride != o.stride) return stride < o.stride;
        if (howmany != o.howmany) return howmany < o.howmany;
        if (dist != o.dist) return dist < o.dist;
        return sign < o.sign;
    }
};

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    fftw_plan get(const PlanKey& key) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        // Plan on a scratch buffer; FFTW_UNALIGNED lets the plan execute on
        // any caller buffer via fftw_execute_dft.
        std::vector<cplx> scratch(static_cast<size_t>(key.n - 1) * key.stride +
                                  static_cast<size_t>(key.howmany - 1) * key.dist + 1);
        auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_many_dft(1, &key.n, key.howmany,
                                         ptr, nullptr, key.stride, key.dist,
                                         ptr, nullptr, key.stride, key.dist,
                                         key.sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mu_;
    std::map<PlanKey, fftw_plan> plans_;
};

} // namespace detail

/// In-place transform of `howmany` lines of length n, each with element
/// stride `stride` and consecutive lines `dist` apart. sign: FFTW_FORWARD
/// (-1) or FFTW_BACKWARD (+1). Unnormalized, like FFTW.
inline void transform_lines(cplx* data, int n, int stride, int howmany, int dist, int sign) {
    if (n <= 0 || howmany <= 0) throw std::invalid_argument("fft: empty transform");
    fftw_plan p = detail::PlanCache::instance().get({n, stride, howmany, dist, sign});
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

inline void forward(cplx* data, int n) { transform_lines(data, n, 1, 1, 0, FFTW_FORWARD); }
inline void backward(cplx* data, int n) { transform_lines(data, n, 1, 1, 0, FFTW_BACKWARD); }

/// Signed integer mode index for bin i of an n-point transform:
/// 0,1,...,n/2-1,-n/2,...,-1.
inline int mode_index(int i, int n) { return (i <= (n - 1) / 2) ? i : i - n; }

} // namespace phaselab::fft
