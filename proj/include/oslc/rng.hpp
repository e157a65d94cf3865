#pragma once

// Portable deterministic randomness.  All random draws in the library go
// through UnitRandom so that a seed fully determines every output across
// platforms and standard libraries:
//   - the engine is std::mt19937_64, whose output sequence is fixed by the
//     standard for a given seed;
//   - uniform [0,1) values are produced by an explicit 53-bit mapping rather
//     than std::uniform_real_distribution, whose results are
//     implementation-defined.

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace oslc {

class UnitRandom {
  public:
    explicit UnitRandom(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0,1) with 53 random bits.
    double next() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    Eigen::VectorXd vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = next();
        return v;
    }

    // Entries drawn row by row (row-major), the documented stream order.
    Eigen::MatrixXd matrix(int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = next();
        return m;
    }

  private:
    std::mt19937_64 eng_;
};

// splitmix64 step; used to derive independent per-task seeds from a base
// seed plus task coordinates, so parallel sweeps stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace oslc
