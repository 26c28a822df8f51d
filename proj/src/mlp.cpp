#include "rnarl/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "rnarl/errors.hpp"

namespace rnarl {

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'N', 'A', 'R', 'L', 'M', 'L', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

void require_shapes(const Mlp& net, const GradientSet& g) {
  if (g.w1.rows() != net.w1.rows() || g.w1.cols() != net.w1.cols() ||
      g.b1.size() != net.b1.size() || g.w2.rows() != net.w2.rows() ||
      g.w2.cols() != net.w2.cols() || g.b2.size() != net.b2.size()) {
    throw ShapeMismatch("gradient set does not match network shape");
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw Error("truncated network file");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_le(out, m(r, c));
  }
}

void read_matrix(std::istream& in, Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_le<double>(in);
  }
}

}  // namespace

GradientSet GradientSet::zeros_like(const Mlp& net) {
  return {Matrix::Zero(net.w1.rows(), net.w1.cols()),
          Vector::Zero(net.b1.size()),
          Matrix::Zero(net.w2.rows(), net.w2.cols()),
          Vector::Zero(net.b2.size())};
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  return *this;
}

double GradientSet::max_abs() const {
  return std::max({w1.cwiseAbs().maxCoeff(), b1.cwiseAbs().maxCoeff(),
                   w2.cwiseAbs().maxCoeff(), b2.cwiseAbs().maxCoeff()});
}

Mlp init_mlp(Rng& rng, LayerDims dims) {
  if (dims.input < 1 || dims.hidden < 1 || dims.output < 1) {
    throw ShapeMismatch("layer dimensions must be >= 1");
  }
  auto glorot = [&rng](std::size_t fan_out, std::size_t fan_in) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
    return w;
  };
  Mlp net;
  net.w1 = glorot(dims.hidden, dims.input);
  net.b1 = Vector::Zero(dims.hidden);
  net.w2 = glorot(dims.output, dims.hidden);
  net.b2 = Vector::Zero(dims.output);
  return net;
}

Matrix forward(const Mlp& net, const Matrix& inputs, ForwardTrace* trace) {
  if (inputs.cols() != net.w1.cols()) {
    throw ShapeMismatch("input width " + std::to_string(inputs.cols()) +
                        " != network input " + std::to_string(net.w1.cols()));
  }
  Matrix pre = inputs * net.w1.transpose();
  pre.rowwise() += net.b1.transpose();
  Matrix hidden = pre.cwiseMax(0.0);
  Matrix out = hidden * net.w2.transpose();
  out.rowwise() += net.b2.transpose();
  if (trace != nullptr) {
    trace->input = inputs;
    trace->pre_hidden = std::move(pre);
    trace->hidden = std::move(hidden);
  }
  return out;
}

GradientSet backward(const Mlp& net, const ForwardTrace& trace,
                     const Matrix& output_gradient) {
  if (output_gradient.rows() != trace.input.rows() ||
      output_gradient.cols() != net.w2.rows() ||
      trace.hidden.cols() != net.w2.cols()) {
    throw ShapeMismatch("output gradient does not match traced batch");
  }
  GradientSet g;
  g.w2 = output_gradient.transpose() * trace.hidden;
  g.b2 = output_gradient.colwise().sum().transpose();
  Matrix d_hidden = output_gradient * net.w2;
  d_hidden = d_hidden.array() * (trace.pre_hidden.array() > 0.0).cast<double>();
  g.w1 = d_hidden.transpose() * trace.input;
  g.b1 = d_hidden.colwise().sum().transpose();
  return g;
}

void sgd_step(Mlp& net, const GradientSet& grads, double lr) {
  require_shapes(net, grads);
  net.w1 -= lr * grads.w1;
  net.b1 -= lr * grads.b1;
  net.w2 -= lr * grads.w2;
  net.b2 -= lr * grads.b2;
}

void save_mlp(const Mlp& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_le(out, kFormatVersion);
  const LayerDims d = net.dims();
  write_le<std::uint64_t>(out, d.input);
  write_le<std::uint64_t>(out, d.hidden);
  write_le<std::uint64_t>(out, d.output);
  write_matrix(out, net.w1);
  write_matrix(out, net.b1.transpose());
  write_matrix(out, net.w2);
  write_matrix(out, net.b2.transpose());
  if (!out) throw Error("failed to write network");
}

Mlp load_mlp(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("not a network file");
  }
  if (read_le<std::uint32_t>(in) != kFormatVersion) {
    throw Error("unsupported network file version");
  }
  const auto input = read_le<std::uint64_t>(in);
  const auto hidden = read_le<std::uint64_t>(in);
  const auto output = read_le<std::uint64_t>(in);
  if (input == 0 || hidden == 0 || output == 0 || input > (1u << 24) ||
      hidden > (1u << 24) || output > (1u << 24)) {
    throw Error("implausible network dimensions");
  }
  Mlp net;
  net.w1.resize(hidden, input);
  net.w2.resize(output, hidden);
  Matrix b1(1, hidden);
  Matrix b2(1, output);
  read_matrix(in, net.w1);
  read_matrix(in, b1);
  read_matrix(in, net.w2);
  read_matrix(in, b2);
  net.b1 = b1.row(0).transpose();
  net.b2 = b2.row(0).transpose();
  return net;
}

Matrix encode_row(const RnaSequence& s) {
  const auto v = encode_one_hot(s);
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  return m;
}

Matrix encode_batch(const std::vector<const RnaSequence*>& seqs) {
  if (seqs.empty()) return Matrix(0, 0);
  const std::size_t width = kNumBases * seqs.front()->size();
  Matrix m = Matrix::Zero(seqs.size(), width);
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    const RnaSequence& s = *seqs[r];
    for (std::size_t p = 0; p < s.size(); ++p) {
      m(r, p * kNumBases + static_cast<std::size_t>(s[p])) = 1.0;
    }
  }
  return m;
}

}  // namespace rnarl
