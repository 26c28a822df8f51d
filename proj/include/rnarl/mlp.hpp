#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>

#include "rnarl/sequence.hpp"

namespace rnarl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LayerDims {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t output = 0;

  friend bool operator==(const LayerDims&, const LayerDims&) = default;
};

// input -> relu(hidden) -> identity output. Rows of a batch are examples.
struct Mlp {
  Matrix w1;  // hidden x input
  Vector b1;
  Matrix w2;  // output x hidden
  Vector b2;

  LayerDims dims() const {
    return {static_cast<std::size_t>(w1.cols()),
            static_cast<std::size_t>(w1.rows()),
            static_cast<std::size_t>(w2.rows())};
  }
};

struct ForwardTrace {
  Matrix input;       // batch x input
  Matrix pre_hidden;  // batch x hidden
  Matrix hidden;      // batch x hidden, after relu
};

struct GradientSet {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  static GradientSet zeros_like(const Mlp& net);
  GradientSet& operator+=(const GradientSet& other);
  double max_abs() const;
};

// Glorot-uniform weights, zero biases.
Mlp init_mlp(Rng& rng, LayerDims dims);

Matrix forward(const Mlp& net, const Matrix& inputs,
               ForwardTrace* trace = nullptr);

// Gradients of a loss given d(loss)/d(outputs) for the traced batch.
GradientSet backward(const Mlp& net, const ForwardTrace& trace,
                     const Matrix& output_gradient);

// Gradient descent: param -= lr * grad.
void sgd_step(Mlp& net, const GradientSet& grads, double lr);

// Binary record: magic "RNARLMLP", u32 version, u64 input/hidden/output, then
// w1, b1, w2, b2 as little-endian IEEE-754 doubles in row-major order.
void save_mlp(const Mlp& net, std::ostream& out);
Mlp load_mlp(std::istream& in);

// Stacks one-hot encodings into a batch x 4L matrix.
Matrix encode_batch(const std::vector<const RnaSequence*>& seqs);
Matrix encode_row(const RnaSequence& s);

}  // namespace rnarl
