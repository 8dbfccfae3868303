#include "mcbif/band_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mcbif {

template <class T>
BasicBandMatrix<T>::BasicBandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), data_(n * (kl + ku + 1), T(0))
{
}

template <class T>
BasicBandMatrix<T> BasicBandMatrix<T>::diagonal(std::span<const T> d)
{
    BasicBandMatrix m(d.size(), 0, 0);
    for (std::size_t i = 0; i < d.size(); ++i) m.at(i, i) = d[i];
    return m;
}

template <class T>
T& BasicBandMatrix<T>::at(std::size_t i, std::size_t j)
{
    if (!in_band(i, j))
        throw std::out_of_range(fmt::format("BandMatrix: ({}, {}) outside band [{}, {}] of size {}",
                                            i, j, kl_, ku_, n_));
    return data_[j * ld() + (ku_ + i - j)];
}

template <class T>
std::vector<T> BasicBandMatrix<T>::multiply(std::span<const T> x) const
{
    if (x.size() != n_) throw std::invalid_argument("BandMatrix::multiply: size mismatch");
    std::vector<T> y(n_, T(0));
    for (std::size_t j = 0; j < n_; ++j) {
        const T xj = x[j];
        if (xj == T(0)) continue;
        const std::size_t i0 = j > ku_ ? j - ku_ : 0;
        const std::size_t i1 = std::min(n_ - 1, j + kl_);
        const T* col = &data_[j * ld()];
        for (std::size_t i = i0; i <= i1; ++i) y[i] += col[ku_ + i - j] * xj;
    }
    return y;
}

template <class T>
BasicBandMatrix<T>& BasicBandMatrix<T>::add_scaled(T a, const BasicBandMatrix& other)
{
    if (other.n_ != n_ || other.kl_ > kl_ || other.ku_ > ku_)
        throw std::invalid_argument("BandMatrix::add_scaled: operand band does not fit");
    for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t i0 = j > other.ku_ ? j - other.ku_ : 0;
        const std::size_t i1 = std::min(n_ - 1, j + other.kl_);
        for (std::size_t i = i0; i <= i1; ++i) at(i, j) += a * other(i, j);
    }
    return *this;
}

template <class T>
BasicBandMatrix<T> BasicBandMatrix<T>::widened(std::size_t kl, std::size_t ku) const
{
    BasicBandMatrix w(n_, std::max(kl, kl_), std::max(ku, ku_));
    w.add_scaled(T(1), *this);
    return w;
}

template <class T>
T BasicBandMatrix<T>::max_abs() const
{
    T m = 0;
    for (T v : data_) m = std::max(m, std::abs(v));
    return m;
}

template <class T>
double BasicBandMatrix<T>::relative_asymmetry() const
{
    const T scale = max_abs();
    if (scale == T(0)) return 0.0;
    T worst = 0;
    const std::size_t k = std::max(kl_, ku_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j <= std::min(n_ - 1, i + k); ++j)
            worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    return static_cast<double>(worst / scale);
}

template <class T>
BasicBandLU<T>::BasicBandLU(const BasicBandMatrix<T>& a)
    : n_(a.size()), kl_(a.lower()), kuf_(a.lower() + a.upper()), ld_(2 * a.lower() + a.upper() + 1),
      f_(a.size() * (2 * a.lower() + a.upper() + 1), T(0)), piv_(a.size(), 0)
{
    if (n_ == 0) throw std::invalid_argument("BandLU: empty matrix");
    for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t i0 = j > a.upper() ? j - a.upper() : 0;
        const std::size_t i1 = std::min(n_ - 1, j + kl_);
        for (std::size_t i = i0; i <= i1; ++i) lu(i, j) = a(i, j);
    }
    const T scale = a.max_abs();
    if (scale == T(0)) throw SingularMatrixError("BandLU: zero matrix");
    // Exact zero pivots are replaced by eps*|A| so inverse iteration at an
    // exact eigenvalue still produces the null direction.
    const T floor = std::numeric_limits<T>::epsilon() * scale;

    min_pivot_ = std::numeric_limits<double>::infinity();
    max_pivot_ = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        const std::size_t last_col = std::min(n_ - 1, k + kuf_);
        std::size_t p = k;
        T best = std::abs(lu(k, k));
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            if (std::abs(lu(i, k)) > best) {
                best = std::abs(lu(i, k));
                p = i;
            }
        }
        piv_[k] = p;
        if (p != k)
            for (std::size_t j = k; j <= last_col; ++j) std::swap(lu(k, j), lu(p, j));
        if (lu(k, k) == T(0)) lu(k, k) = floor;
        const T pivot = lu(k, k);
        min_pivot_ = std::min(min_pivot_, static_cast<double>(std::abs(pivot)));
        max_pivot_ = std::max(max_pivot_, static_cast<double>(std::abs(pivot)));
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            const T m = lu(i, k) / pivot;
            lu(i, k) = m;
            if (m == T(0)) continue;
            for (std::size_t j = k + 1; j <= last_col; ++j) lu(i, j) -= m * lu(k, j);
        }
    }
}

template <class T>
double BasicBandLU<T>::pivot_ratio() const
{
    return min_pivot_ > 0.0 ? max_pivot_ / min_pivot_ : std::numeric_limits<double>::infinity();
}

template <class T>
std::vector<T> BasicBandLU<T>::solve(std::span<const T> b) const
{
    if (b.size() != n_) throw std::invalid_argument("BandLU::solve: size mismatch");
    std::vector<T> x(b.begin(), b.end());
    for (std::size_t k = 0; k < n_; ++k) {
        if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
        const T xk = x[k];
        if (xk == T(0)) continue;
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        for (std::size_t i = k + 1; i <= last_row; ++i) x[i] -= lu(i, k) * xk;
    }
    for (std::size_t kk = n_; kk-- > 0;) {
        const std::size_t last_col = std::min(n_ - 1, kk + kuf_);
        T s = x[kk];
        for (std::size_t j = kk + 1; j <= last_col; ++j) s -= lu(kk, j) * x[j];
        x[kk] = s / lu(kk, kk);
    }
    return x;
}

template class BasicBandMatrix<double>;
template class BasicBandMatrix<long double>;
template class BasicBandLU<double>;
template class BasicBandLU<long double>;

}  // namespace mcbif
