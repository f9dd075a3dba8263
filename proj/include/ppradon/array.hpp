#pragma once

#include <cassert>
#include <cstddef>
#include <numbers>
#include <vector>

namespace ppr {

inline constexpr double kPi = std::numbers::pi_v<double>;

// Centered indexing: a length-L axis stores the index range
// [-L/2, L/2-1] for even L and [-(L-1)/2, (L-1)/2] for odd L,
// with index i living at storage slot i + L/2.
inline constexpr int centered_lo(int len) { return -(len / 2); }
inline constexpr int centered_hi(int len) { return len - 1 - len / 2; }
inline constexpr int slot_of(int index, int len) { return index + len / 2; }
inline constexpr int index_of(int slot, int len) { return slot - len / 2; }

// Dense row-major grids; the last index varies fastest.
template <typename T>
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t n0, std::size_t n1, T fill = T{}) : n0_(n0), n1_(n1), d_(n0 * n1, fill) {}

    T& operator()(std::size_t i, std::size_t j) { return d_[i * n1_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return d_[i * n1_ + j]; }

    std::size_t size0() const { return n0_; }
    std::size_t size1() const { return n1_; }
    std::size_t size() const { return d_.size(); }
    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }
    std::vector<T>& raw() { return d_; }
    const std::vector<T>& raw() const { return d_; }

private:
    std::size_t n0_ = 0, n1_ = 0;
    std::vector<T> d_;
};

template <typename T>
class Grid3 {
public:
    Grid3() = default;
    Grid3(std::size_t n0, std::size_t n1, std::size_t n2, T fill = T{})
        : n0_(n0), n1_(n1), n2_(n2), d_(n0 * n1 * n2, fill) {}

    T& operator()(std::size_t i, std::size_t j, std::size_t k) { return d_[(i * n1_ + j) * n2_ + k]; }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return d_[(i * n1_ + j) * n2_ + k];
    }

    std::size_t size0() const { return n0_; }
    std::size_t size1() const { return n1_; }
    std::size_t size2() const { return n2_; }
    std::size_t size() const { return d_.size(); }
    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }
    std::vector<T>& raw() { return d_; }
    const std::vector<T>& raw() const { return d_; }

private:
    std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
    std::vector<T> d_;
};

template <typename T>
class Grid4 {
public:
    Grid4() = default;
    Grid4(std::size_t n0, std::size_t n1, std::size_t n2, std::size_t n3, T fill = T{})
        : n0_(n0), n1_(n1), n2_(n2), n3_(n3), d_(n0 * n1 * n2 * n3, fill) {}

    T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return d_[((i * n1_ + j) * n2_ + k) * n3_ + l];
    }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return d_[((i * n1_ + j) * n2_ + k) * n3_ + l];
    }

    std::size_t size0() const { return n0_; }
    std::size_t size1() const { return n1_; }
    std::size_t size2() const { return n2_; }
    std::size_t size3() const { return n3_; }
    std::size_t size() const { return d_.size(); }
    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }
    std::vector<T>& raw() { return d_; }
    const std::vector<T>& raw() const { return d_; }

private:
    std::size_t n0_ = 0, n1_ = 0, n2_ = 0, n3_ = 0;
    std::vector<T> d_;
};

}  // namespace ppr
