#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace varnet {

/// Deterministic RNG. mt19937_64 is fully specified by the standard; the
/// uniform mapping avoids std::uniform_real_distribution, whose output is
/// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next_u64() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

/// Formats a double with 17 significant digits (enough to round-trip any
/// IEEE-754 binary64 value exactly).
std::string format_full(double v);

/// Writes `content` to `path` atomically (write to a temp file in the same
/// directory, then rename).
void atomic_write_file(const std::string& path, const std::string& content);

/// Reads a whole file into a string. Throws varnet::Error on failure.
std::string read_file(const std::string& path);

namespace detail {

/// Fixed-size vector with inline storage for small sizes. All jets in a
/// JetSpace have the same component count, so no growth is ever needed.
template <class T, int InlineCap>
class FixedVec {
  public:
    FixedVec() : n_(0) {}
    explicit FixedVec(int n) : n_(n) {
        if (n_ > InlineCap) heap_.resize(static_cast<std::size_t>(n_));
    }

    int size() const { return n_; }

    T& operator[](int i) { return n_ <= InlineCap ? inline_[i] : heap_[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const {
        return n_ <= InlineCap ? inline_[i] : heap_[static_cast<std::size_t>(i)];
    }

  private:
    int n_;
    std::array<T, InlineCap> inline_{};
    std::vector<T> heap_;
};

}  // namespace detail
}  // namespace varnet
