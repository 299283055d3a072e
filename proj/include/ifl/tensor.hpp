#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ifl {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_numel(const Shape& s) {
    Index n = 1;
    for (Index d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

// Dense n-dimensional array with row-major flat storage. The scalar type is
// a template parameter; the simulator runs in float, gradient-check oracles
// instantiate the same code in double.
template <typename ScalarT>
struct Tensor {
    using Scalar = ScalarT;
    using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using MatrixMap =
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstMatrixMap =
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    Shape shape;
    Storage data;

    Tensor() = default;
    Tensor(Shape s, Storage d) : shape(std::move(s)), data(std::move(d)) {
        if (shape_numel(shape) != data.size())
            throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                        std::to_string(data.size()) + " elements");
    }

    static Tensor zeros(Shape s) {
        Tensor t;
        t.data = Storage::Zero(shape_numel(s));
        t.shape = std::move(s);
        return t;
    }

    static Tensor constant(Shape s, Scalar v) {
        Tensor t;
        t.data = Storage::Constant(shape_numel(s), v);
        t.shape = std::move(s);
        return t;
    }

    static Tensor from(Shape s, std::initializer_list<Scalar> values) {
        Tensor t;
        t.shape = std::move(s);
        t.data.resize(static_cast<Index>(values.size()));
        Index i = 0;
        for (Scalar v : values) t.data[i++] = v;
        if (shape_numel(t.shape) != t.data.size())
            throw std::invalid_argument("tensor: initializer size does not match shape");
        return t;
    }

    Index numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    Index dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    bool empty() const { return data.size() == 0 && shape.empty(); }

    // 2-D view over the flat buffer; rows*cols must equal numel().
    MatrixMap mat(Index rows, Index cols) {
        if (rows * cols != numel())
            throw std::invalid_argument("tensor: cannot view " + shape_str(shape) + " as [" +
                                        std::to_string(rows) + "," + std::to_string(cols) + "]");
        return MatrixMap(data.data(), rows, cols);
    }
    ConstMatrixMap mat(Index rows, Index cols) const {
        if (rows * cols != numel())
            throw std::invalid_argument("tensor: cannot view " + shape_str(shape) + " as [" +
                                        std::to_string(rows) + "," + std::to_string(cols) + "]");
        return ConstMatrixMap(data.data(), rows, cols);
    }
    // View as [shape[0], numel()/shape[0]]; the usual batch-major view.
    MatrixMap mat() { return mat(dim(0), numel() / dim(0)); }
    ConstMatrixMap mat() const { return mat(dim(0), numel() / dim(0)); }

    Tensor reshaped(Shape s) const& {
        Tensor t{std::move(s), data};
        return t;
    }
    Tensor reshaped(Shape s) && {
        shape = std::move(s);
        if (shape_numel(shape) != data.size())
            throw std::invalid_argument("tensor: reshape to incompatible shape " + shape_str(shape));
        return std::move(*this);
    }

    bool all_finite() const { return data.isFinite().all(); }
};

template <typename S>
bool same_shape(const Tensor<S>& a, const Tensor<S>& b) {
    return a.shape == b.shape;
}

// Exact element equality; used by the bit-level invariance tests.
template <typename S>
bool bitwise_equal(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape != b.shape) return false;
    return (a.data == b.data).all();
}

using Tensorf = Tensor<float>;

}  // namespace ifl
