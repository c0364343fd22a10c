#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace skelrob::num {

// splitmix64 finalizer, used to derive decorrelated child streams.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t stream_tag(const char* name) {
    // FNV-1a over the tag string
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* p = name; *p; ++p) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(*p));
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Single seeded source of randomness; every stochastic operation takes one
// of these (or a raw seed) explicitly. child() derives an independent stream
// from the construction seed, not the current state, so derived sub-streams
// do not depend on draw order.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

    uint64_t seed() const { return seed_; }

    Rng child(uint64_t stream) const { return Rng(mix64(seed_ ^ mix64(stream))); }
    Rng child(const char* name) const { return child(stream_tag(name)); }
    Rng child(const char* name, uint64_t k) const {
        return child(stream_tag(name) + 0x9e3779b97f4a7c15ULL * (k + 1));
    }

    uint64_t u64() { return engine_(); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean, double stdev) {
        // fresh distribution per call: no hidden spare-value state
        return std::normal_distribution<double>(mean, stdev)(engine_);
    }

    size_t index(size_t n) {
        return std::uniform_int_distribution<size_t>(0, n - 1)(engine_);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = std::uniform_int_distribution<size_t>(0, i - 1)(engine_);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 engine_;
    uint64_t seed_;
};

} // namespace skelrob::num
