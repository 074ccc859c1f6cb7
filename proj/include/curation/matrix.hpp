#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace curation {

class FeatureStore;

/// Dense row-major matrix of 64-bit features. Stores keep 32-bit values on
/// disk; everything that accumulates kernel sums works on one of these.
class FeatureMatrix {
  public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    /// Copies the given store rows, in the given order.
    static FeatureMatrix gather(const FeatureStore& store, std::span<const std::size_t> rows);
    static FeatureMatrix from_store(const FeatureStore& store);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }

    /// Appends a row; the first appended row fixes the column count of an
    /// empty matrix.
    template <typename T>
    void push_back(std::span<T> values) {
        if (rows_ == 0 && cols_ == 0) {
            cols_ = values.size();
        }
        assert(values.size() == cols_);
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

template <typename A, typename B>
double squared_distance(std::span<const A> x, std::span<const B> y) noexcept {
    assert(x.size() == y.size());
    double sum = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = static_cast<double>(x[d]) - static_cast<double>(y[d]);
        sum += diff * diff;
    }
    return sum;
}

}  // namespace curation
