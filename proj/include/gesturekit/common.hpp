#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gesturekit {

/// Malformed inputs, broken invariants, bad configuration. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown (singular solve, non-PSD matrix, non-finite result). CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic random source. All randomized operations derive their draws
/// from the raw mt19937_64 stream through the helpers below, so results are
/// reproducible from a 64-bit seed across compilers and standard libraries
/// (std::uniform_*_distribution makes no such guarantee).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ValidationError("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        if (k > n) throw ValidationError("Rng::sample_indices: k exceeds n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + below(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Random non-identity permutation of {0..n-1}; n >= 2.
std::vector<int> random_non_identity_permutation(int n, Rng& rng);

/// FNV-1a 64-bit hash, used for stable config fingerprints.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace gesturekit
