#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

// Desk-scale model of the LoRA low-rank update
//
//     W' = W + dW,    dW = alpha * B * A,
//
// with A of shape (r, d) and B of shape (d, r). Alpha is applied as given; no
// alpha / r rescaling is performed.
namespace switchboard::lora {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename Scalar = double>
struct Factors {
    Matrix<Scalar> A; // r x d
    Matrix<Scalar> B; // d x r
    Scalar alpha{1};

    Eigen::Index rank() const { return A.rows(); }
    Eigen::Index dim() const { return A.cols(); }

    void check() const {
        const auto r = A.rows();
        const auto d = A.cols();
        if (r < 1 || d < 1) throw ShapeMismatch("lora factors need r >= 1 and d >= 1");
        if (r > d) {
            throw ShapeMismatch("lora rank " + std::to_string(r) + " exceeds dimension " +
                                std::to_string(d));
        }
        if (B.rows() != d || B.cols() != r) {
            throw ShapeMismatch("B has shape (" + std::to_string(B.rows()) + ", " +
                                std::to_string(B.cols()) + "), expected (" + std::to_string(d) +
                                ", " + std::to_string(r) + ")");
        }
    }

    static Factors Random(Eigen::Index d, Eigen::Index r, Scalar alpha) {
        return {Matrix<Scalar>::Random(r, d), Matrix<Scalar>::Random(d, r), alpha};
    }
};

template <typename Scalar>
Matrix<Scalar> delta(const Factors<Scalar>& f) {
    f.check();
    return f.alpha * (f.B * f.A);
}

template <typename Derived, typename Scalar>
Matrix<Scalar> apply(const Eigen::MatrixBase<Derived>& W, const Factors<Scalar>& f) {
    f.check();
    const auto d = f.dim();
    if (W.rows() != d || W.cols() != d) {
        throw ShapeMismatch("W has shape (" + std::to_string(W.rows()) + ", " +
                            std::to_string(W.cols()) + "), expected (" + std::to_string(d) +
                            ", " + std::to_string(d) + ")");
    }
    return W + delta(f);
}

template <typename Scalar>
std::int64_t trainable_param_count(const Factors<Scalar>& f) {
    f.check();
    return 2 * static_cast<std::int64_t>(f.rank()) * static_cast<std::int64_t>(f.dim());
}

inline std::int64_t trainable_param_count(std::int64_t r, std::int64_t d) { return 2 * r * d; }

inline std::int64_t full_param_count(std::int64_t d) { return d * d; }

// Number of singular values above rel_tol * sigma_max. A zero matrix has rank 0.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& M, double rel_tol = 1e-9) {
    using Plain = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Plain plain = M;
    Eigen::JacobiSVD<Plain> svd(plain);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0) return 0;
    const auto cutoff = rel_tol * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++rank;
    }
    return rank;
}

} // namespace switchboard::lora
