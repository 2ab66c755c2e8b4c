#pragma once

#include "finsler/randers.hpp"

#include <cstdint>

namespace testutil {

// splitmix64; deterministic across platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

inline finsler::RandersDatum random_datum(Rng& rng, int n, double max_wind = 0.9) {
    finsler::Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
    const finsler::Mat h = A.transpose() * A + 0.2 * finsler::Mat::Identity(n, n);
    finsler::Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform(-1.0, 1.0);
    const double wn = std::sqrt(w.dot(h * w));
    w *= rng.uniform(0.0, max_wind) / std::max(wn, 1e-12);
    return finsler::RandersDatum(h, w);
}

inline finsler::Vec random_vec(Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
    finsler::Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    if (v.norm() < 1e-3) v[0] += 1.0;
    return v;
}

} // namespace testutil
