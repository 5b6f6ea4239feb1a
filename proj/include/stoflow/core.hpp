#pragma once

// Small fixed-capacity linear algebra and the error hierarchy shared by every
// stoflow module. All experiments live in dimension n <= 3, so vectors and
// matrices are stack values with a runtime size.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace stoflow {

inline constexpr int kMaxDim = 3;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegreeError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapabilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientEnsembleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error("config error at '" + key + "': " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Non-finite state during flow integration. Carries the last time at which
/// the state was finite and, for ensembles, the offending node.
struct BlowUpError : std::runtime_error {
    BlowUpError(double last_valid_time, int node = -1)
        : std::runtime_error(message(last_valid_time, node)), last_valid_time_(last_valid_time), node_(node) {}

    [[nodiscard]] double last_valid_time() const noexcept { return last_valid_time_; }
    [[nodiscard]] int node() const noexcept { return node_; }

private:
    static std::string message(double t, int node) {
        std::string s = "flow blow-up after t=" + std::to_string(t);
        if (node >= 0) s += " at node " + std::to_string(node);
        return s;
    }
    double last_valid_time_;
    int node_;
};

// ---------------------------------------------------------------------------
// Vec
// ---------------------------------------------------------------------------

class Vec {
public:
    Vec() = default;
    explicit Vec(int n, double fill = 0.0) : size_(n) {
        if (n < 0 || n > kMaxDim) throw ArgumentError("Vec: dimension out of range");
        data_.fill(0.0);
        std::fill_n(data_.begin(), n, fill);
    }
    Vec(std::initializer_list<double> values) : size_(static_cast<int>(values.size())) {
        if (size_ > kMaxDim) throw ArgumentError("Vec: dimension out of range");
        std::copy(values.begin(), values.end(), data_.begin());
    }
    static Vec from(std::span<const double> values) {
        Vec v(static_cast<int>(values.size()));
        std::copy(values.begin(), values.end(), v.data_.begin());
        return v;
    }
    static Vec unit(int n, int i) {
        Vec v(n);
        v[i] = 1.0;
        return v;
    }

    [[nodiscard]] int size() const noexcept { return size_; }
    double& operator[](int i) noexcept { return data_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const noexcept { return data_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] double* begin() noexcept { return data_.data(); }
    [[nodiscard]] double* end() noexcept { return data_.data() + size_; }
    [[nodiscard]] const double* begin() const noexcept { return data_.data(); }
    [[nodiscard]] const double* end() const noexcept { return data_.data() + size_; }
    [[nodiscard]] std::span<const double> span() const noexcept { return {data_.data(), static_cast<std::size_t>(size_)}; }

    Vec& operator+=(const Vec& o) noexcept {
        for (int i = 0; i < size_; ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) noexcept {
        for (int i = 0; i < size_; ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vec& operator*=(double s) noexcept {
        for (int i = 0; i < size_; ++i) data_[i] *= s;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
    friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
    friend Vec operator*(double s, Vec a) noexcept { return a *= s; }
    friend bool operator==(const Vec& a, const Vec& b) noexcept {
        return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(begin(), end(), [](double x) { return std::isfinite(x); });
    }

private:
    std::array<double, kMaxDim> data_{};
    int size_ = 0;
};

using Point = Vec;

inline double dot(const Vec& a, const Vec& b) noexcept {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs(const Vec& a) noexcept {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Mat: row-major, rows x cols, both <= kMaxDim
// ---------------------------------------------------------------------------

class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows < 0 || rows > kMaxDim || cols < 0 || cols > kMaxDim)
            throw ArgumentError("Mat: dimension out of range");
        data_.fill(0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) (*this)(r, c) = fill;
    }
    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    /// Matrix whose columns are the given vectors.
    static Mat from_columns(std::span<const Vec> cols, int rows) {
        Mat m(rows, static_cast<int>(cols.size()));
        for (int c = 0; c < m.cols_; ++c) {
            if (cols[static_cast<std::size_t>(c)].size() != rows) throw ArgumentError("Mat: column dimension mismatch");
            for (int r = 0; r < rows; ++r) m(r, c) = cols[static_cast<std::size_t>(c)][r];
        }
        return m;
    }

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }
    double& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r * kMaxDim + c)]; }
    double operator()(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r * kMaxDim + c)]; }

    [[nodiscard]] Vec column(int c) const {
        Vec v(rows_);
        for (int r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
        return v;
    }

    Mat& operator+=(const Mat& o) noexcept {
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) (*this)(r, c) += o(r, c);
        return *this;
    }
    Mat& operator*=(double s) noexcept {
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) (*this)(r, c) *= s;
        return *this;
    }
    friend Mat operator+(Mat a, const Mat& b) noexcept { return a += b; }
    friend Mat operator*(Mat a, double s) noexcept { return a *= s; }
    friend Mat operator*(const Mat& a, const Mat& b) noexcept {
        Mat m(a.rows_, b.cols_);
        for (int r = 0; r < a.rows_; ++r)
            for (int c = 0; c < b.cols_; ++c) {
                double s = 0.0;
                for (int k = 0; k < a.cols_; ++k) s += a(r, k) * b(k, c);
                m(r, c) = s;
            }
        return m;
    }
    friend Vec operator*(const Mat& a, const Vec& v) noexcept {
        Vec out(a.rows_);
        for (int r = 0; r < a.rows_; ++r) {
            double s = 0.0;
            for (int k = 0; k < a.cols_; ++k) s += a(r, k) * v[k];
            out[r] = s;
        }
        return out;
    }
    friend bool operator==(const Mat& a, const Mat& b) noexcept {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
        for (int r = 0; r < a.rows_; ++r)
            for (int c = 0; c < a.cols_; ++c)
                if (a(r, c) != b(r, c)) return false;
        return true;
    }

    [[nodiscard]] bool all_finite() const noexcept {
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c)
                if (!std::isfinite((*this)(r, c))) return false;
        return true;
    }

private:
    std::array<double, kMaxDim * kMaxDim> data_{};
    int rows_ = 0;
    int cols_ = 0;
};

/// Determinant of a square matrix of size 0..3 (size 0 yields 1).
inline double det(const Mat& m) {
    if (m.rows() != m.cols()) throw ArgumentError("det: matrix is not square");
    switch (m.rows()) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: throw ArgumentError("det: unsupported size");
    }
}

/// Rank of a small matrix by Gaussian elimination with partial pivoting.
inline int rank(Mat m, double tol = 1e-12) {
    int r = 0;
    for (int c = 0; c < m.cols() && r < m.rows(); ++c) {
        int piv = r;
        for (int i = r + 1; i < m.rows(); ++i)
            if (std::abs(m(i, c)) > std::abs(m(piv, c))) piv = i;
        if (std::abs(m(piv, c)) <= tol) continue;
        for (int k = 0; k < m.cols(); ++k) std::swap(m(r, k), m(piv, k));
        for (int i = r + 1; i < m.rows(); ++i) {
            const double f = m(i, c) / m(r, c);
            for (int k = c; k < m.cols(); ++k) m(i, k) -= f * m(r, k);
        }
        ++r;
    }
    return r;
}

} // namespace stoflow
