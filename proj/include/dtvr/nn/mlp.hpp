#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dtvr/binary_io.hpp"
#include "dtvr/error.hpp"
#include "dtvr/random.hpp"

namespace dtvr::nn {

enum class OutputActivation : std::uint32_t { Identity = 0, Sigmoid = 1 };

/// Layer widths from input to output; hidden layers use ReLU.
struct MlpSpec {
  std::vector<int> widths;
  OutputActivation output = OutputActivation::Identity;

  int inputs() const { return widths.front(); }
  int outputs() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }

  void validate() const {
    require(widths.size() >= 2, Errc::InvalidArgument, "an MLP needs at least input and output widths");
    for (int w : widths) require(w > 0, Errc::InvalidArgument, "layer widths must be positive");
  }

  bool operator==(const MlpSpec&) const = default;
};

// input -> `hidden` ReLU layers of `width` -> output.
inline MlpSpec make_spec(int inputs, int hidden, int width, int outputs, OutputActivation out) {
  MlpSpec s;
  s.widths.push_back(inputs);
  for (int i = 0; i < hidden; ++i) s.widths.push_back(width);
  s.widths.push_back(outputs);
  s.output = out;
  return s;
}

template <typename Scalar>
struct Dense {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Parameters, gradients and optimizer moments all share this shape.
template <typename Scalar>
using Params = std::vector<Dense<Scalar>>;

template <typename Scalar>
Params<Scalar> zeros_like(const Params<Scalar>& p) {
  Params<Scalar> z(p.size());
  for (std::size_t l = 0; l < p.size(); ++l) {
    z[l].weight.setZero(p[l].weight.rows(), p[l].weight.cols());
    z[l].bias.setZero(p[l].bias.size());
  }
  return z;
}

template <typename Scalar>
bool all_finite(const Params<Scalar>& p) {
  for (const auto& l : p)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

/// Dense multilayer perceptron operating on column batches (features x batch).
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // Activations of every layer from one forward pass; front() is the input.
  struct Tape {
    std::vector<Matrix> acts;
    const Matrix& output() const { return acts.back(); }
  };

  Mlp() = default;

  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_.resize(spec_.layers());
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
      params_[l].weight.setZero(spec_.widths[l + 1], spec_.widths[l]);
      params_[l].bias.setZero(spec_.widths[l + 1]);
    }
  }

  /// Uniform fan-in initialization; the last layer's range is multiplied by
  /// `final_scale`.
  static Mlp random(MlpSpec spec, Rng& rng, double final_scale = 1.0) {
    Mlp net(std::move(spec));
    for (std::size_t l = 0; l < net.params_.size(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(net.spec_.widths[l]));
      if (l + 1 == net.params_.size()) bound *= final_scale;
      std::uniform_real_distribution<double> dist(-bound, bound);
      auto& layer = net.params_[l];
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = static_cast<Scalar>(dist(rng));
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = static_cast<Scalar>(dist(rng));
    }
    return net;
  }

  const MlpSpec& spec() const { return spec_; }
  Params<Scalar>& params() { return params_; }
  const Params<Scalar>& params() const { return params_; }

  Matrix forward(const Matrix& x) const {
    check_input(x);
    Matrix a = x;
    for (std::size_t l = 0; l < params_.size(); ++l) {
      Matrix z = affine(l, a);
      activate(l, z);
      a.swap(z);
    }
    return a;
  }

  Vector forward_one(const Vector& x) const { return forward(Matrix(x)).col(0); }

  const Matrix& forward(const Matrix& x, Tape& tape) const {
    check_input(x);
    tape.acts.resize(params_.size() + 1);
    tape.acts[0] = x;
    for (std::size_t l = 0; l < params_.size(); ++l) {
      tape.acts[l + 1] = affine(l, tape.acts[l]);
      activate(l, tape.acts[l + 1]);
    }
    return tape.acts.back();
  }

  /// Reverse pass for dL/dy = `grad_out`. Parameter gradients are written to
  /// `grads` when given (overwritten, not accumulated); returns dL/dx.
  Matrix backward(const Tape& tape, const Matrix& grad_out, Params<Scalar>* grads) const {
    require(tape.acts.size() == params_.size() + 1, Errc::DimensionMismatch, "tape does not match network");
    require(grad_out.rows() == spec_.outputs() && grad_out.cols() == tape.acts.back().cols(),
            Errc::DimensionMismatch, "upstream gradient shape mismatch");
    if (grads && grads->size() != params_.size()) *grads = zeros_like(params_);

    Matrix delta = grad_out;
    if (spec_.output == OutputActivation::Sigmoid) {
      const Matrix& y = tape.acts.back();
      delta.array() *= y.array() * (Scalar(1) - y.array());
    }
    for (std::size_t l = params_.size(); l-- > 0;) {
      const Matrix& input = tape.acts[l];
      if (grads) {
        (*grads)[l].weight.noalias() = delta * input.transpose();
        (*grads)[l].bias = delta.rowwise().sum();
      }
      Matrix upstream(params_[l].weight.cols(), delta.cols());
      upstream.noalias() = params_[l].weight.transpose() * delta;
      if (l > 0) upstream.array() *= (input.array() > Scalar(0)).template cast<Scalar>();
      delta.swap(upstream);
    }
    return delta;
  }

  void save(std::ostream& out) const {
    bin::write_magic(out, kMagic, kVersion);
    bin::write<std::uint32_t>(out, sizeof(Scalar));
    bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(spec_.output));
    bin::write_vector(out, spec_.widths);
    for (const auto& l : params_) {
      out.write(reinterpret_cast<const char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(Scalar)));
      out.write(reinterpret_cast<const char*>(l.bias.data()), static_cast<std::streamsize>(l.bias.size() * sizeof(Scalar)));
    }
  }

  static Mlp load(std::istream& in) {
    const auto version = bin::read_magic(in, kMagic);
    require(version == kVersion, Errc::CorruptCheckpoint, "unsupported network checkpoint version");
    require(bin::read<std::uint32_t>(in) == sizeof(Scalar), Errc::CorruptCheckpoint,
            "checkpoint scalar width differs from this build");
    const auto act = bin::read<std::uint32_t>(in);
    require(act <= 1, Errc::CorruptCheckpoint, "bad output activation tag");
    MlpSpec spec;
    spec.output = static_cast<OutputActivation>(act);
    spec.widths = bin::read_vector<int>(in, 1024);
    require(spec.widths.size() >= 2, Errc::CorruptCheckpoint, "checkpoint has fewer than two layers");
    for (int w : spec.widths) require(w > 0 && w < (1 << 20), Errc::CorruptCheckpoint, "bad layer width");
    Mlp net(std::move(spec));
    for (auto& l : net.params_) {
      read_block(in, l.weight.data(), l.weight.size());
      read_block(in, l.bias.data(), l.bias.size());
    }
    return net;
  }

 private:
  static constexpr char kMagic[9] = "DTVRMLP1";
  static constexpr std::uint32_t kVersion = 1;

  static void read_block(std::istream& in, Scalar* data, Eigen::Index n) {
    const auto bytes = static_cast<std::streamsize>(n * sizeof(Scalar));
    in.read(reinterpret_cast<char*>(data), bytes);
    require(in.gcount() == bytes, Errc::CorruptCheckpoint, "truncated network checkpoint");
  }

  void check_input(const Matrix& x) const {
    require(x.rows() == spec_.inputs(), Errc::DimensionMismatch,
            "network expects " + std::to_string(spec_.inputs()) + " inputs, got " + std::to_string(x.rows()));
  }

  Matrix affine(std::size_t l, const Matrix& a) const {
    Matrix z(params_[l].weight.rows(), a.cols());
    z.noalias() = params_[l].weight * a;
    z.colwise() += params_[l].bias;
    return z;
  }

  void activate(std::size_t l, Matrix& z) const {
    if (l + 1 < params_.size()) {
      z = z.cwiseMax(Scalar(0));
    } else if (spec_.output == OutputActivation::Sigmoid) {
      z = (Scalar(1) + (-z.array()).exp()).inverse().matrix();
    }
  }

  MlpSpec spec_;
  Params<Scalar> params_;
};

/// Adam with bias correction.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(const Params<Scalar>& shape, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

  double learning_rate() const { return lr_; }
  long long steps() const { return t_; }
  long long rejected() const { return rejected_; }

  // Throws NonFiniteGradient and leaves the parameters untouched.
  void step(Params<Scalar>& params, const Params<Scalar>& grads) {
    require(params.size() == grads.size() && params.size() == m_.size(), Errc::DimensionMismatch,
            "optimizer state does not match parameters");
    if (!all_finite(grads)) {
      ++rejected_;
      throw Error(Errc::NonFiniteGradient, "gradient contains NaN or Inf");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto step = static_cast<Scalar>(lr_ * std::sqrt(c2) / c1);
    const auto b1 = static_cast<Scalar>(beta1_);
    const auto b2 = static_cast<Scalar>(beta2_);
    const auto eps = static_cast<Scalar>(eps_ * std::sqrt(c2));
    for (std::size_t l = 0; l < params.size(); ++l) {
      update(params[l].weight, grads[l].weight, m_[l].weight, v_[l].weight, b1, b2, step, eps);
      update(params[l].bias, grads[l].bias, m_[l].bias, v_[l].bias, b1, b2, step, eps);
    }
  }

  void save(std::ostream& out) const {
    bin::write(out, lr_);
    bin::write(out, beta1_);
    bin::write(out, beta2_);
    bin::write(out, eps_);
    bin::write<std::int64_t>(out, t_);
    for (const auto* set : {&m_, &v_})
      for (const auto& l : *set) {
        out.write(reinterpret_cast<const char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(Scalar)));
        out.write(reinterpret_cast<const char*>(l.bias.data()), static_cast<std::streamsize>(l.bias.size() * sizeof(Scalar)));
      }
  }

  static Adam load(std::istream& in, const Params<Scalar>& shape) {
    Adam a;
    a.lr_ = bin::read<double>(in);
    a.beta1_ = bin::read<double>(in);
    a.beta2_ = bin::read<double>(in);
    a.eps_ = bin::read<double>(in);
    a.t_ = bin::read<std::int64_t>(in);
    a.m_ = zeros_like(shape);
    a.v_ = zeros_like(shape);
    auto read_block = [&in](Scalar* data, Eigen::Index n) {
      const auto bytes = static_cast<std::streamsize>(n * sizeof(Scalar));
      in.read(reinterpret_cast<char*>(data), bytes);
      require(in.gcount() == bytes, Errc::CorruptCheckpoint, "truncated optimizer state");
    };
    for (auto* set : {&a.m_, &a.v_})
      for (auto& l : *set) {
        read_block(l.weight.data(), l.weight.size());
        read_block(l.bias.data(), l.bias.size());
      }
    return a;
  }

 private:
  template <typename Derived>
  static void update(Eigen::MatrixBase<Derived>& p, const Eigen::MatrixBase<Derived>& g,
                     Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, Scalar b1, Scalar b2,
                     Scalar step, Scalar eps) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    p.array() -= step * m.array() / (v.array().sqrt() + eps);
  }

  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  long long rejected_ = 0;
  Params<Scalar> m_;
  Params<Scalar> v_;
};

// target <- tau * source + (1 - tau) * target
template <typename Scalar>
void soft_update(Params<Scalar>& target, const Params<Scalar>& source, double tau) {
  require(tau > 0.0 && tau <= 1.0, Errc::InvalidArgument, "tau must be in (0,1]");
  require(target.size() == source.size(), Errc::DimensionMismatch, "soft update between different shapes");
  for (std::size_t l = 0; l < target.size(); ++l)
    require(target[l].weight.rows() == source[l].weight.rows() && target[l].weight.cols() == source[l].weight.cols(),
            Errc::DimensionMismatch, "soft update between different shapes");
  if (tau == 1.0) {
    target = source;
    return;
  }
  const auto t = static_cast<Scalar>(tau);
  for (std::size_t l = 0; l < target.size(); ++l) {
    target[l].weight = t * source[l].weight + (Scalar(1) - t) * target[l].weight;
    target[l].bias = t * source[l].bias + (Scalar(1) - t) * target[l].bias;
  }
}

/// Weighted critic loss (1/B) sum w_i (y_i - q_i)^2 and its gradient w.r.t. q.
template <typename Scalar>
struct WeightedSquaredError {
  double loss = 0.0;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> grad;
};

template <typename Scalar>
WeightedSquaredError<Scalar> weighted_squared_error(const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& q,
                                                    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& y,
                                                    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& w) {
  require(q.size() == y.size() && q.size() == w.size() && q.size() > 0, Errc::DimensionMismatch,
          "loss inputs differ in length");
  const auto b = static_cast<Scalar>(q.size());
  WeightedSquaredError<Scalar> out;
  const auto residual = (q - y).eval();
  out.loss = static_cast<double>((w.array() * residual.array().square()).sum() / b);
  out.grad = (Scalar(2) / b) * (w.array() * residual.array()).matrix();
  return out;
}

}  // namespace dtvr::nn
