#pragma once

#include <cmath>
#include <cstdint>

namespace a2g {

// Counter-based splittable generator built on the splitmix64 finalizer.
// fork(tag) derives an independent stream from (key, tag) without consuming
// state from the parent, so per-episode / per-batch / per-round streams stay
// reproducible no matter the order they are drawn in.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    Rng fork(uint64_t tag) const {
        return Rng(key_ ^ mix(tag + 0x632be59bd9b4e019ull));
    }

    uint64_t next_u64() {
        counter_ += 1;
        return mix(key_ + 0x9e3779b97f4a7c15ull * counter_);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    int uniform_int(int n) {
        return n <= 1 ? 0 : static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

    // standard normal via Box-Muller with cached spare
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_ = 0;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream tags for fork(); keeps seed derivation self-describing at call sites.
namespace stream {
inline constexpr uint64_t kDemos = 101;
inline constexpr uint64_t kTrain = 102;
inline constexpr uint64_t kEval = 103;
inline constexpr uint64_t kPolicy = 104;
inline constexpr uint64_t kOnline = 105;
inline constexpr uint64_t kDisturb = 106;
inline constexpr uint64_t kInit = 107;
inline constexpr uint64_t kEnv = 108;
}  // namespace stream

}  // namespace a2g
