// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Thin RAII layer over FFTW complex transforms.
 *
 * Plans are created once per (size, direction) and cached; FFTW's planner is
 * not thread safe so creation is serialized, while execution through
 * fftw_execute_dft on caller-owned buffers may run concurrently.
 */

#pragma once

#include "livesense/types.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

namespace livesense::fft {

enum class Direction : int {
    forward = FFTW_FORWARD,    ///< X[q] = sum x[n] e^{-j 2 pi q n / L}
    backward = FFTW_BACKWARD,  ///< X[q] = sum x[n] e^{+j 2 pi q n / L}, unnormalized
};

class Plan {
public:
    Plan(std::size_t size, Direction dir) : size_(size) {
        std::vector<cplx> in(size), out(size);
        plan_ = fftw_plan_dft_1d(static_cast<int>(size), reinterpret_cast<fftw_complex *>(in.data()),
                                 reinterpret_cast<fftw_complex *>(out.data()), static_cast<int>(dir),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan_ == nullptr) throw std::runtime_error("fftw plan creation failed");
    }
    ~Plan() {
        if (plan_ != nullptr) fftw_destroy_plan(plan_);
    }
    Plan(const Plan &) = delete;
    Plan &operator=(const Plan &) = delete;

    /// Out-of-place transform; `in` and `out` must not alias and must have size() elements.
    void execute(std::span<const cplx> in, std::span<cplx> out) const {
        if (in.size() != size_ || out.size() != size_) throw std::invalid_argument("fft size mismatch");
        fftw_execute_dft(plan_, reinterpret_cast<fftw_complex *>(const_cast<cplx *>(in.data())),
                         reinterpret_cast<fftw_complex *>(out.data()));
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }

private:
    std::size_t size_;
    fftw_plan plan_ = nullptr;
};

/// Shared plan for a transform length and direction.
inline const Plan &plan(std::size_t size, Direction dir) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
    std::lock_guard lock(mutex);
    auto &slot = cache[{size, static_cast<int>(dir)}];
    if (!slot) slot = std::make_unique<Plan>(size, dir);
    return *slot;
}

inline CsiVector transform(std::span<const cplx> in, Direction dir) {
    CsiVector out(in.size());
    plan(in.size(), dir).execute(in, out);
    return out;
}

/// Unnormalized e^{+j} transform.
inline CsiVector backward(std::span<const cplx> in) { return transform(in, Direction::backward); }
inline CsiVector forward(std::span<const cplx> in) { return transform(in, Direction::forward); }

/// Moves index 0 to the centre (index L/2) for even L.
template <typename T>
std::vector<T> fftshift(const std::vector<T> &x) {
    const std::size_t n = x.size();
    std::vector<T> out(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) out[(i + half) % n] = x[i];
    return out;
}

/// Periodic Hann window, w[n] = 0.5 (1 - cos(2 pi n / L)).
inline std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

}  // namespace livesense::fft
