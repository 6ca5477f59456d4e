#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "porelab/core/array3.hpp"
#include "porelab/core/parallel.hpp"

namespace porelab {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Real 3D transform pair on a fixed lattice. Plans use FFTW_ESTIMATE so that
// planning is deterministic run-to-run.
class Fft3 {
  public:
    explicit Fft3(GridDims d) : d_(d), nzc_(d.nz / 2 + 1) {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        init_threads_once();
        real_ = fftw_alloc_real(d_.size());
        cplx_ = fftw_alloc_complex(spectral_size());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_r2c_3d(d_.nx, d_.ny, d_.nz, real_, cplx_, flags);
        inv_ = fftw_plan_dft_c2r_3d(d_.nx, d_.ny, d_.nz, cplx_, real_, flags);
    }

    ~Fft3() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(cplx_);
    }

    Fft3(const Fft3&) = delete;
    Fft3& operator=(const Fft3&) = delete;

    GridDims dims() const { return d_; }
    std::size_t spectral_size() const {
        return static_cast<std::size_t>(d_.nx) * d_.ny * nzc_;
    }
    int nzc() const { return nzc_; }

    void forward(const Field3& in, std::vector<std::complex<double>>& out) {
        out.resize(spectral_size());
        fftw_execute_dft_r2c(fwd_, const_cast<double*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()));
    }

    // Destroys `in` (c2r transforms overwrite their input). Output is scaled
    // by 1/N so that inverse(forward(f)) == f.
    void inverse(std::vector<std::complex<double>>& in, Field3& out) {
        fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
        const double scale = 1.0 / static_cast<double>(d_.size());
        double* p = out.data();
        const std::size_t n = out.size();
        parallel_for_slabs(static_cast<int>(n / 4096) + 1, [&](int b, int e) {
            const std::size_t lo = static_cast<std::size_t>(b) * 4096;
            const std::size_t hi = std::min(n, static_cast<std::size_t>(e) * 4096);
            for (std::size_t i = lo; i < hi; ++i) p[i] *= scale;
        });
    }

  private:
    static void init_threads_once() {
#ifdef PORELAB_FFTW_THREADS
        static bool done = [] {
            fftw_init_threads();
            fftw_plan_with_nthreads(worker_threads());
            return true;
        }();
        (void)done;
#endif
    }

    GridDims d_;
    int nzc_;
    double* real_ = nullptr;
    fftw_complex* cplx_ = nullptr;
    fftw_plan fwd_{}, inv_{};
};

// Frequency index in [-n/2, n/2) for lattice index i.
inline int freq_of(int i, int n) { return (i <= n / 2) ? i : i - n; }

// One-sided difference symbols on a lattice of spacing h. `g` is the backward
// difference (f_i - f_{i-1})/h, `dd` the forward one; |g| = |dd| and the
// composition dd*g gives the 7-point Laplacian symbol -|g|^2.
struct DiffSymbols {
    std::vector<std::complex<double>> g[3];  // backward difference
    std::vector<std::complex<double>> d[3];  // forward difference, d = e^{i theta} g
    std::vector<double> g2[3];               // |g|^2 = |d|^2

    DiffSymbols(GridDims dims, double h) {
        const int n[3] = {dims.nx, dims.ny, dims.nz};
        for (int c = 0; c < 3; ++c) {
            g[c].resize(n[c]);
            d[c].resize(n[c]);
            g2[c].resize(n[c]);
            for (int i = 0; i < n[c]; ++i) {
                const double theta = 2.0 * M_PI * i / n[c];
                const std::complex<double> gg = (1.0 - std::polar(1.0, -theta)) / h;
                g[c][i] = gg;
                d[c][i] = (std::polar(1.0, theta) - 1.0) / h;
                g2[c][i] = std::norm(gg);
            }
        }
    }
};

}  // namespace porelab
