#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/random.hpp"

namespace curteach {

enum class Parameterization { Linear, Quadratic, Mlp };

inline const char* parameterization_name(Parameterization p) {
    switch (p) {
        case Parameterization::Linear: return "linear";
        case Parameterization::Quadratic: return "quadratic";
        case Parameterization::Mlp: return "mlp";
    }
    return "?";
}

inline Parameterization parse_parameterization(const std::string& s) {
    if (s == "linear") return Parameterization::Linear;
    if (s == "quadratic") return Parameterization::Quadratic;
    if (s == "mlp") return Parameterization::Mlp;
    throw ValidationError("unknown parameterization '" + s + "'");
}

/// Maps a per-state input block to one score per action.
///
/// Linear and quadratic models read an A x d block whose rows are phi(s,a):
///   linear     h_a = <theta, phi_a>
///   quadratic  h_a = <theta_{1:d}, phi_a> + <theta_{d+1:2d}, phi_a>^2
/// The MLP reads only the first row of the block as its input vector and
/// computes W3 tanh(W2 tanh(W1 x + b1) + b2) + b3.
class ScoringModel {
public:
    ScoringModel() = default;

    ScoringModel(Parameterization kind, std::size_t input_dim, std::size_t n_actions, std::size_t hidden = 64)
        : kind_(kind), input_dim_(input_dim), n_actions_(n_actions), hidden_(hidden) {
        if (input_dim == 0 || n_actions == 0) throw ValidationError("ScoringModel: empty dimensions");
        if (kind == Parameterization::Mlp && hidden == 0) throw ValidationError("ScoringModel: hidden width must be positive");
    }

    Parameterization kind() const noexcept { return kind_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t hidden() const noexcept { return hidden_; }

    std::size_t param_dim() const noexcept {
        switch (kind_) {
            case Parameterization::Linear: return input_dim_;
            case Parameterization::Quadratic: return 2 * input_dim_;
            case Parameterization::Mlp:
                return hidden_ * input_dim_ + hidden_ + hidden_ * hidden_ + hidden_ + n_actions_ * hidden_ + n_actions_;
        }
        return 0;
    }

    /// Zero for the tabular forms; Glorot-uniform weights and zero biases for the MLP.
    Eigen::VectorXd initial_params(std::uint64_t seed) const {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_dim()));
        if (kind_ != Parameterization::Mlp) return theta;
        Rng rng(seed);
        auto fill = [&](Eigen::Index offset, std::size_t rows, std::size_t cols) {
            const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (std::size_t i = 0; i < rows * cols; ++i) {
                theta[offset + static_cast<Eigen::Index>(i)] = limit * (2.0 * uniform01(rng) - 1.0);
            }
        };
        const auto L = layout();
        fill(L.w1, hidden_, input_dim_);
        fill(L.w2, hidden_, hidden_);
        fill(L.w3, n_actions_, hidden_);
        return theta;
    }

    Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& theta,
                           const Eigen::Ref<const Eigen::MatrixXd>& x) const {
        check(theta, x);
        switch (kind_) {
            case Parameterization::Linear: return x * theta;
            case Parameterization::Quadratic: {
                const auto d = static_cast<Eigen::Index>(input_dim_);
                const Eigen::VectorXd lin = x * theta.head(d);
                const Eigen::VectorXd q = x * theta.tail(d);
                return lin + q.cwiseProduct(q);
            }
            case Parameterization::Mlp: {
                MlpCache c;
                return forward(theta, x.row(0).transpose(), c);
            }
        }
        return {};
    }

    /// Gradient of <v, scores(theta, x)> with respect to theta.
    Eigen::VectorXd vjp(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& v) const {
        check(theta, x);
        if (v.size() != static_cast<Eigen::Index>(n_actions_)) throw ValidationError("vjp: cotangent size mismatch");
        switch (kind_) {
            case Parameterization::Linear: return x.transpose() * v;
            case Parameterization::Quadratic: {
                const auto d = static_cast<Eigen::Index>(input_dim_);
                const Eigen::VectorXd q = x * theta.tail(d);
                Eigen::VectorXd g(2 * d);
                g.head(d) = x.transpose() * v;
                g.tail(d) = x.transpose() * (2.0 * q.cwiseProduct(v));
                return g;
            }
            case Parameterization::Mlp: {
                MlpCache c;
                forward(theta, x.row(0).transpose(), c);
                return backward(theta, c, v);
            }
        }
        return {};
    }

private:
    struct Layout {
        Eigen::Index w1, b1, w2, b2, w3, b3;
    };

    struct MlpCache {
        Eigen::VectorXd x, h1, h2;
    };

    Layout layout() const {
        const auto d = static_cast<Eigen::Index>(input_dim_);
        const auto h = static_cast<Eigen::Index>(hidden_);
        const auto a = static_cast<Eigen::Index>(n_actions_);
        Layout L{};
        L.w1 = 0;
        L.b1 = L.w1 + h * d;
        L.w2 = L.b1 + h;
        L.b2 = L.w2 + h * h;
        L.w3 = L.b2 + h;
        L.b3 = L.w3 + a * h;
        return L;
    }

    // Weight matrices are stored row-major inside theta.
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::VectorXd& x,
                            MlpCache& c) const {
        const auto d = static_cast<Eigen::Index>(input_dim_);
        const auto h = static_cast<Eigen::Index>(hidden_);
        const auto a = static_cast<Eigen::Index>(n_actions_);
        const auto L = layout();
        Eigen::Map<const RowMat> W1(theta.data() + L.w1, h, d);
        Eigen::Map<const RowMat> W2(theta.data() + L.w2, h, h);
        Eigen::Map<const RowMat> W3(theta.data() + L.w3, a, h);
        c.x = x;
        c.h1 = (W1 * x + theta.segment(L.b1, h)).array().tanh().matrix();
        c.h2 = (W2 * c.h1 + theta.segment(L.b2, h)).array().tanh().matrix();
        return W3 * c.h2 + theta.segment(L.b3, a);
    }

    Eigen::VectorXd backward(const Eigen::Ref<const Eigen::VectorXd>& theta, const MlpCache& c,
                             const Eigen::Ref<const Eigen::VectorXd>& v) const {
        const auto d = static_cast<Eigen::Index>(input_dim_);
        const auto h = static_cast<Eigen::Index>(hidden_);
        const auto a = static_cast<Eigen::Index>(n_actions_);
        const auto L = layout();
        Eigen::Map<const RowMat> W2(theta.data() + L.w2, h, h);
        Eigen::Map<const RowMat> W3(theta.data() + L.w3, a, h);
        Eigen::VectorXd g(static_cast<Eigen::Index>(param_dim()));
        Eigen::Map<RowMat>(g.data() + L.w3, a, h) = v * c.h2.transpose();
        g.segment(L.b3, a) = v;
        const Eigen::VectorXd z2 = (W3.transpose() * v).cwiseProduct((1.0 - c.h2.array().square()).matrix());
        Eigen::Map<RowMat>(g.data() + L.w2, h, h) = z2 * c.h1.transpose();
        g.segment(L.b2, h) = z2;
        const Eigen::VectorXd z1 = (W2.transpose() * z2).cwiseProduct((1.0 - c.h1.array().square()).matrix());
        Eigen::Map<RowMat>(g.data() + L.w1, h, d) = z1 * c.x.transpose();
        g.segment(L.b1, h) = z1;
        return g;
    }

    void check(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::MatrixXd>& x) const {
        if (theta.size() != static_cast<Eigen::Index>(param_dim())) {
            throw ValidationError("ScoringModel: parameter dimension mismatch");
        }
        if (x.cols() != static_cast<Eigen::Index>(input_dim_)) throw ValidationError("ScoringModel: input dimension mismatch");
        if (kind_ == Parameterization::Mlp ? x.rows() < 1 : x.rows() != static_cast<Eigen::Index>(n_actions_)) {
            throw ValidationError("ScoringModel: input block has the wrong number of rows");
        }
    }

    Parameterization kind_ = Parameterization::Linear;
    std::size_t input_dim_ = 1;
    std::size_t n_actions_ = 1;
    std::size_t hidden_ = 64;
};

}  // namespace curteach
