#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace afaf {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. All sampling helpers are implemented here rather than via
// std distributions so streams are reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

    std::uint64_t next() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::size_t uniform_index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = next();
        while (v > bound) v = next();
        return static_cast<std::size_t>(v % n);
    }

    // Derived stream, independent of draws made on this one.
    Rng split(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_index(i)]);
    }

    // k distinct values from [0, n), in random order.
    std::vector<int> sample_indices(std::size_t n, std::size_t k) {
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool[i], pool[i + uniform_index(n - i)]);
        pool.resize(k);
        return pool;
    }

    // k distinct elements drawn from the given pool.
    std::vector<int> sample_from(const std::vector<int>& pool, std::size_t k) {
        std::vector<int> out;
        const auto idx = sample_indices(pool.size(), k);
        out.reserve(idx.size());
        for (int i : idx) out.push_back(pool[i]);
        return out;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace afaf
