#include "nbt/graph.hpp"

#include <algorithm>
#include <cmath>

#include "nbt/errors.hpp"

namespace nbt {

namespace {

// [k × t] row-major to [t × k].
std::vector<double> transposed(const double* x, std::size_t k, std::size_t t) {
  std::vector<double> out(k * t);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < t; ++c) out[c * k + j] = x[j * t + c];
  }
  return out;
}

double dot_n(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// y += a * x
void axpy_n(double a, const double* x, double* y, std::size_t n) {
  if (a == 0.0) return;
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const char* an,
                              const Tensor& b, const char* bn) {
  throw DimensionError("numerics", std::string(op) + ": " + an + " " +
                                       a.shape_string() + " does not conform with " +
                                       bn + " " + b.shape_string());
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ParameterSet ---------------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (find(name) != nullptr) {
    throw ConfigError("numerics", "duplicate parameter name '" + name + "'");
  }
  Tensor grad = init.rank() == 1 ? Tensor::zeros(init.size())
                                 : Tensor::zeros(init.rows(), init.cols());
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter& ParameterSet::get(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).get(name));
}

const Parameter& ParameterSet::get(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) {
    throw ConfigError("numerics", "no parameter named '" + std::string(name) + "'");
  }
  return *p;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterSet::scale_grad(double s) {
  for (auto& p : params_) p.grad *= s;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) {
    throw DimensionError("numerics", "parameter set sizes differ");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name ||
        !params_[i].value.same_shape(other.params_[i].value)) {
      throw DimensionError("numerics",
                           "parameter '" + params_[i].name + "' does not match");
    }
    params_[i].value = other.params_[i].value;
  }
}

// Graph construction ---------------------------------------------------------

Var Graph::push(Node n) {
  for (std::uint8_t i = 0; i < n.nparents; ++i) {
    if (n.parents[i] >= nodes_.size()) {
      throw NumericsError("numerics", "node refers to a parent not on the tape");
    }
    n.requires_grad = n.requires_grad || nodes_[n.parents[i]].requires_grad;
  }
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw NumericsError("numerics", "invalid node handle");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw NumericsError("numerics", "invalid node handle");
  return nodes_[v.id];
}

const Tensor& Graph::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.value_ref != nullptr ? *n.value_ref : n.value;
}

const Tensor& Graph::value(Var v) const {
  node(v);
  return val(v.id);
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  return n.param != nullptr ? n.param->grad : n.grad;
}

Var Graph::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::scalar_constant(double v) { return constant(Tensor::vector({v})); }

Var Graph::param(Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.param = &p;
  n.value_ref = &p.value;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::frozen(const Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.value_ref = &p.value;
  return push(std::move(n));
}

Var Graph::affine(Var w, Var x, Var b) {
  const Tensor& W = value(w);
  const Tensor& X = value(x);
  const Tensor& B = value(b);
  if (W.rank() != 2 || W.cols() != X.rows()) shape_error("affine", W, "W", X, "x");
  if (B.rank() != 1 || B.size() != W.rows()) shape_error("affine", W, "W", B, "b");
  const std::size_t m = W.rows(), k = W.cols(), t = X.cols();
  Tensor out = X.rank() == 1 ? Tensor::zeros(m) : Tensor::zeros(m, t);
  const double* wd = W.span().data();
  const double* bd = B.span().data();
  double* od = out.span().data();
  // Columns of x as contiguous rows, so every output entry is one dot product.
  const std::vector<double> xt = transposed(X.span().data(), k, t);
  for (std::size_t c = 0; c < t; ++c) {
    const double* xc = xt.data() + c * k;
    for (std::size_t i = 0; i < m; ++i) {
      od[i * t + c] = bd[i] + dot_n(wd + i * k, xc, k);
    }
  }
  Node n;
  n.op = Op::kAffine;
  n.parents[0] = w.id;
  n.parents[1] = x.id;
  n.parents[2] = b.id;
  n.nparents = 3;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::sigmoid(Var x) {
  Tensor out = value(x);
  for (double& v : out.span()) v = stable_sigmoid(v);
  Node n;
  n.op = Op::kSigmoid;
  n.parents[0] = x.id;
  n.nparents = 1;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::relu(Var x) {
  Tensor out = value(x);
  for (double& v : out.span()) v = v > 0.0 ? v : 0.0;
  Node n;
  n.op = Op::kRelu;
  n.parents[0] = x.id;
  n.nparents = 1;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::maxpool_over_time(Var m) {
  const Tensor& M = value(m);
  if (M.rank() != 2) {
    throw DimensionError("numerics", "maxpool_over_time: expected a matrix, got " +
                                         M.shape_string());
  }
  if (M.cols() == 0) {
    throw NumericsError("numerics", "maxpool_over_time: empty sequence (T = 0)");
  }
  const std::size_t rows = M.rows(), cols = M.cols();
  Tensor out = Tensor::zeros(rows);
  std::vector<std::uint32_t> argmax(rows, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (M.at(r, c) > M.at(r, best)) best = c;
    }
    argmax[r] = static_cast<std::uint32_t>(best);
    out[r] = M.at(r, best);
  }
  Node n;
  n.op = Op::kMaxPool;
  n.parents[0] = m.id;
  n.nparents = 1;
  n.value = std::move(out);
  n.argmax = std::move(argmax);
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("elementwise_mul", A, "a", B, "b");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  Node n;
  n.op = Op::kMul;
  n.parents[0] = a.id;
  n.parents[1] = b.id;
  n.nparents = 2;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::scale(Var a, Var s) {
  const Tensor& S = value(s);
  if (S.size() != 1) shape_error("scale", value(a), "a", S, "s");
  Tensor out = value(a);
  out *= S[0];
  Node n;
  n.op = Op::kScale;
  n.parents[0] = a.id;
  n.parents[1] = s.id;
  n.nparents = 2;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::dot(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("dot", A, "a", B, "b");
  Node n;
  n.op = Op::kDot;
  n.parents[0] = a.id;
  n.parents[1] = b.id;
  n.nparents = 2;
  n.value = Tensor::vector({nbt::dot(A.span(), B.span())});
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("add", A, "a", B, "b");
  Node n;
  n.op = Op::kAdd;
  n.parents[0] = a.id;
  n.parents[1] = b.id;
  n.nparents = 2;
  n.value = A + B;
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).span()) s += v;
  Node n;
  n.op = Op::kSum;
  n.parents[0] = a.id;
  n.nparents = 1;
  n.value = Tensor::vector({s});
  return push(std::move(n));
}

Var Graph::softmax_xent(Var logits, std::size_t label) {
  const Tensor& Z = value(logits);
  if (Z.rank() != 1 || label >= Z.size()) {
    throw DimensionError("numerics", "softmax_xent: label " + std::to_string(label) +
                                         " out of range for logits " +
                                         Z.shape_string());
  }
  const double zmax = *std::max_element(Z.span().begin(), Z.span().end());
  double s = 0.0;
  for (double z : Z.span()) s += std::exp(z - zmax);
  const double lse = zmax + std::log(s);
  Node n;
  n.op = Op::kSoftmaxXent;
  n.parents[0] = logits.id;
  n.nparents = 1;
  n.label = label;
  n.value = Tensor::vector({lse - Z[label]});
  return push(std::move(n));
}

// Backward -------------------------------------------------------------------

Tensor& Graph::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param != nullptr) return n.param->grad;
  const Tensor& v = val(id);
  if (n.grad.shape() != v.shape()) {
    n.grad = v.rank() == 2 ? Tensor::zeros(v.rows(), v.cols()) : Tensor::zeros(v.size());
  }
  return n.grad;
}

void Graph::zero_grad() {
  for (auto& n : nodes_) {
    if (n.param == nullptr) n.grad = Tensor();
  }
  backward_done_ = false;
}

void Graph::clear() {
  nodes_.clear();
  backward_done_ = false;
}

void Graph::backward(Var root) {
  node(root);
  if (val(root.id).size() != 1) {
    throw NumericsError("numerics", "backward: root must be a scalar, got " +
                                        val(root.id).shape_string());
  }
  if (backward_done_) {
    throw NumericsError("numerics",
                        "backward: called twice on the same graph without zero_grad()");
  }
  backward_done_ = true;
  for (auto& n : nodes_) {
    if (n.param == nullptr) n.grad = Tensor();
  }
  grad_slot(root.id)[0] += 1.0;
  std::vector<bool> reached(nodes_.size(), false);
  reached[root.id] = true;
  for (std::uint32_t id = root.id + 1; id-- > 0;) {
    if (!reached[id]) continue;
    const Node& n = nodes_[id];
    for (std::uint8_t i = 0; i < n.nparents; ++i) {
      if (n.parents[i] >= id) {
        throw NumericsError("numerics", "backward: cycle detected at node " +
                                            std::to_string(id));
      }
      reached[n.parents[i]] = true;
    }
    if (n.requires_grad) backprop_node(id);
  }
  // Nodes never reached still expose a zero gradient of the right shape.
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) grad_slot(id);
}

void Graph::backprop_node(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.op == Op::kInput || n.op == Op::kParam) return;
  // Parents always precede this node, so grad_slot() on them never touches g.
  const Tensor& g = n.grad;
  if (g.size() == 0) return;
  auto wants = [&](int i) { return nodes_[n.parents[i]].requires_grad; };

  switch (n.op) {
    case Op::kAffine: {
      const Tensor& W = val(n.parents[0]);
      const Tensor& X = val(n.parents[1]);
      const std::size_t m = W.rows(), k = W.cols(), t = X.cols();
      const double* gd = g.span().data();
      if (wants(0)) {
        double* dw = grad_slot(n.parents[0]).span().data();
        const std::vector<double> xt = transposed(X.span().data(), k, t);
        for (std::size_t c = 0; c < t; ++c) {
          const double* xc = xt.data() + c * k;
          for (std::size_t i = 0; i < m; ++i) axpy_n(gd[i * t + c], xc, dw + i * k, k);
        }
      }
      if (wants(1)) {
        const double* wd = W.span().data();
        std::vector<double> dxt(k * t, 0.0);
        for (std::size_t c = 0; c < t; ++c) {
          for (std::size_t i = 0; i < m; ++i) axpy_n(gd[i * t + c], wd + i * k, dxt.data() + c * k, k);
        }
        double* dx = grad_slot(n.parents[1]).span().data();
        for (std::size_t j = 0; j < k; ++j) {
          for (std::size_t c = 0; c < t; ++c) dx[j * t + c] += dxt[c * k + j];
        }
      }
      if (wants(2)) {
        Tensor& db = grad_slot(n.parents[2]);
        for (std::size_t i = 0; i < m; ++i) {
          double s = 0.0;
          for (std::size_t c = 0; c < t; ++c) s += gd[i * t + c];
          db[i] += s;
        }
      }
      break;
    }
    case Op::kSigmoid: {
      Tensor& dx = grad_slot(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        dx[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kRelu: {
      Tensor& dx = grad_slot(n.parents[0]);
      const Tensor& X = val(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (X[i] > 0.0) dx[i] += g[i];
      }
      break;
    }
    case Op::kMaxPool: {
      Tensor& dm = grad_slot(n.parents[0]);
      for (std::size_t r = 0; r < n.argmax.size(); ++r) {
        dm.at(r, n.argmax[r]) += g[r];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& A = val(n.parents[0]);
      const Tensor& B = val(n.parents[1]);
      if (wants(0)) {
        Tensor& da = grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * B[i];
      }
      if (wants(1)) {
        Tensor& db = grad_slot(n.parents[1]);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * A[i];
      }
      break;
    }
    case Op::kScale: {
      const Tensor& A = val(n.parents[0]);
      const double s = val(n.parents[1])[0];
      if (wants(0)) {
        Tensor& da = grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * s;
      }
      if (wants(1)) {
        grad_slot(n.parents[1])[0] += nbt::dot(g.span(), A.span());
      }
      break;
    }
    case Op::kDot: {
      const Tensor& A = val(n.parents[0]);
      const Tensor& B = val(n.parents[1]);
      const double g0 = g[0];
      if (wants(0)) {
        Tensor& da = grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < A.size(); ++i) da[i] += g0 * B[i];
      }
      if (wants(1)) {
        Tensor& db = grad_slot(n.parents[1]);
        for (std::size_t i = 0; i < B.size(); ++i) db[i] += g0 * A[i];
      }
      break;
    }
    case Op::kAdd: {
      for (int p = 0; p < 2; ++p) {
        if (wants(p)) grad_slot(n.parents[p]) += g;
      }
      break;
    }
    case Op::kSum: {
      Tensor& da = grad_slot(n.parents[0]);
      for (double& v : da.span()) v += g[0];
      break;
    }
    case Op::kSoftmaxXent: {
      const Tensor& Z = val(n.parents[0]);
      Tensor& dz = grad_slot(n.parents[0]);
      const double zmax = *std::max_element(Z.span().begin(), Z.span().end());
      double s = 0.0;
      for (double z : Z.span()) s += std::exp(z - zmax);
      for (std::size_t i = 0; i < Z.size(); ++i) {
        const double p = std::exp(Z[i] - zmax) / s;
        dz[i] += g[0] * (p - (i == n.label ? 1.0 : 0.0));
      }
      break;
    }
    case Op::kInput:
    case Op::kParam:
      break;
  }
}

}  // namespace nbt
