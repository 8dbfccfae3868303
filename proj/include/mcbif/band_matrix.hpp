#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcbif {

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage is column-major over the band: element (i, j) lives at
/// `data_[j * ld + (ku + i - j)]` with `ld = kl + ku + 1`. Entries outside
/// the band read as zero; writing outside the band throws.
///
/// Instantiated for double and long double; the extended type is used where
/// high-order difference Gram matrices cancel most of a double's digits.
template <class T>
class BasicBandMatrix {
public:
    using value_type = T;

    BasicBandMatrix() = default;
    BasicBandMatrix(std::size_t n, std::size_t kl, std::size_t ku);

    static BasicBandMatrix diagonal(std::span<const T> d);

    std::size_t size() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }

    bool in_band(std::size_t i, std::size_t j) const
    {
        return i < n_ && j < n_ && i <= j + kl_ && j <= i + ku_;
    }

    T operator()(std::size_t i, std::size_t j) const
    {
        return in_band(i, j) ? data_[j * ld() + (ku_ + i - j)] : T(0);
    }

    T& at(std::size_t i, std::size_t j);
    void add(std::size_t i, std::size_t j, T v) { at(i, j) += v; }

    std::vector<T> multiply(std::span<const T> x) const;

    /// this += a * other; `other` must fit inside this band.
    BasicBandMatrix& add_scaled(T a, const BasicBandMatrix& other);

    /// Copy into a (possibly) wider band.
    BasicBandMatrix widened(std::size_t kl, std::size_t ku) const;

    template <class U>
    BasicBandMatrix<U> cast() const
    {
        BasicBandMatrix<U> out(n_, kl_, ku_);
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t i = (j > ku_ ? j - ku_ : 0); i <= std::min(n_ - 1, j + kl_); ++i)
                out.at(i, j) = static_cast<U>((*this)(i, j));
        return out;
    }

    T max_abs() const;
    /// max |A_ij - A_ji| / max |A_ij|
    double relative_asymmetry() const;

private:
    std::size_t ld() const { return kl_ + ku_ + 1; }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    std::vector<T> data_;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// LU factorization with partial pivoting of a BandMatrix (gbtrf layout:
/// the upper factor has bandwidth kl + ku).
template <class T>
class BasicBandLU {
public:
    explicit BasicBandLU(const BasicBandMatrix<T>& a);

    std::size_t size() const { return n_; }
    std::vector<T> solve(std::span<const T> b) const;

    double min_abs_pivot() const { return min_pivot_; }
    double max_abs_pivot() const { return max_pivot_; }
    /// max|u_ii| / min|u_ii|, a cheap lower bound on the condition number.
    double pivot_ratio() const;

private:
    T& lu(std::size_t i, std::size_t j) { return f_[j * ld_ + (kuf_ + i - j)]; }
    T lu(std::size_t i, std::size_t j) const { return f_[j * ld_ + (kuf_ + i - j)]; }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t kuf_ = 0;  // kl + ku
    std::size_t ld_ = 0;
    std::vector<T> f_;
    std::vector<std::size_t> piv_;
    double min_pivot_ = 0.0;
    double max_pivot_ = 0.0;
};

extern template class BasicBandMatrix<double>;
extern template class BasicBandMatrix<long double>;
extern template class BasicBandLU<double>;
extern template class BasicBandLU<long double>;

using BandMatrix = BasicBandMatrix<double>;
using BandMatrixLD = BasicBandMatrix<long double>;
using BandLU = BasicBandLU<double>;
using BandLULD = BasicBandLU<long double>;

}  // namespace mcbif
