#include "core/tape.hpp"

#include <utility>

namespace ts {

template <class T>
int32_t Tape<T>::check(Var<T> v) const {
  if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
    fail(ErrorKind::contract, "variable does not belong to this tape");
  return v.id;
}

template <class T>
Var<T> Tape<T>::leaf(TensorT<T> value) {
  if (value.data.empty())
    fail(ErrorKind::invalid_argument, "leaf tensor must not be empty");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var<T>{static_cast<int32_t>(nodes_.size() - 1)};
}

template <class T>
Var<T> Tape<T>::emplace(const char* op, TensorT<T> value,
                        std::vector<int32_t> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward_fn = std::move(fn);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var<T>{static_cast<int32_t>(nodes_.size() - 1)};
}

template <class T>
const TensorT<T>& Tape<T>::value(Var<T> v) const {
  return nodes_[static_cast<size_t>(check(v))].value;
}

template <class T>
TensorT<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_[static_cast<size_t>(check(v))];
  if (n.grad.data.empty()) return TensorT<T>::zeros(n.value.shape);
  return n.grad;
}

template <class T>
const TensorT<T>& Tape<T>::grad_ref(Var<T> v) {
  return grad_buf(check(v));
}

template <class T>
const char* Tape<T>::op_tag(Var<T> v) const {
  return nodes_[static_cast<size_t>(check(v))].op;
}

template <class T>
void Tape<T>::clear() {
  nodes_.clear();
  visits_.clear();
}

template <class T>
TensorT<T>& Tape<T>::grad_buf(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) n.grad = TensorT<T>::zeros(n.value.shape);
  return n.grad;
}

template <class T>
const TensorT<T>& Tape<T>::upstream(int32_t id) {
  return grad_buf(id);
}

namespace {

enum class Broadcast { none, left_scalar, right_scalar };

}  // namespace

template <class T>
Var<T> Tape<T>::add(Var<T> va, Var<T> vb) {
  const int32_t aid = check(va), bid = check(vb);
  const TensorT<T>& a = nodes_[aid].value;
  const TensorT<T>& b = nodes_[bid].value;
  Broadcast bc = Broadcast::none;
  TensorT<T> out;
  if (a.shape == b.shape) {
    out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  } else if (a.numel() == 1) {
    bc = Broadcast::left_scalar;
    out = b;
    const T s = a.data[0];
    for (auto& v : out.data) v += s;
  } else if (b.numel() == 1) {
    bc = Broadcast::right_scalar;
    out = a;
    const T s = b.data[0];
    for (auto& v : out.data) v += s;
  } else {
    fail(ErrorKind::shape, "add: incompatible shapes " + shape_str(a.shape) +
                               " vs " + shape_str(b.shape));
  }
  return emplace("add", std::move(out), {aid, bid},
                 [aid, bid, bc](Tape& t, int32_t self) {
                   const TensorT<T>& g = t.upstream(self);
                   {
                     TensorT<T>& da = t.grad_buf(aid);
                     if (bc == Broadcast::left_scalar) {
                       double acc = 0.0;
                       for (T v : g.data) acc += static_cast<double>(v);
                       da.data[0] += static_cast<T>(acc);
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
                     }
                   }
                   {
                     TensorT<T>& db = t.grad_buf(bid);
                     if (bc == Broadcast::right_scalar) {
                       double acc = 0.0;
                       for (T v : g.data) acc += static_cast<double>(v);
                       db.data[0] += static_cast<T>(acc);
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i];
                     }
                   }
                 });
}

template <class T>
Var<T> Tape<T>::sub(Var<T> va, Var<T> vb) {
  const int32_t aid = check(va), bid = check(vb);
  const TensorT<T>& a = nodes_[aid].value;
  const TensorT<T>& b = nodes_[bid].value;
  Broadcast bc = Broadcast::none;
  TensorT<T> out;
  if (a.shape == b.shape) {
    out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  } else if (a.numel() == 1) {
    bc = Broadcast::left_scalar;
    out = b;
    const T s = a.data[0];
    for (auto& v : out.data) v = s - v;
  } else if (b.numel() == 1) {
    bc = Broadcast::right_scalar;
    out = a;
    const T s = b.data[0];
    for (auto& v : out.data) v -= s;
  } else {
    fail(ErrorKind::shape, "sub: incompatible shapes " + shape_str(a.shape) +
                               " vs " + shape_str(b.shape));
  }
  return emplace("sub", std::move(out), {aid, bid},
                 [aid, bid, bc](Tape& t, int32_t self) {
                   const TensorT<T>& g = t.upstream(self);
                   {
                     TensorT<T>& da = t.grad_buf(aid);
                     if (bc == Broadcast::left_scalar) {
                       double acc = 0.0;
                       for (T v : g.data) acc += static_cast<double>(v);
                       da.data[0] += static_cast<T>(acc);
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
                     }
                   }
                   {
                     TensorT<T>& db = t.grad_buf(bid);
                     if (bc == Broadcast::right_scalar) {
                       double acc = 0.0;
                       for (T v : g.data) acc += static_cast<double>(v);
                       db.data[0] -= static_cast<T>(acc);
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) db.data[i] -= g.data[i];
                     }
                   }
                 });
}

template <class T>
Var<T> Tape<T>::mul(Var<T> va, Var<T> vb) {
  const int32_t aid = check(va), bid = check(vb);
  const TensorT<T>& a = nodes_[aid].value;
  const TensorT<T>& b = nodes_[bid].value;
  Broadcast bc = Broadcast::none;
  TensorT<T> out;
  if (a.shape == b.shape) {
    out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  } else if (a.numel() == 1) {
    bc = Broadcast::left_scalar;
    out = b;
    const T s = a.data[0];
    for (auto& v : out.data) v *= s;
  } else if (b.numel() == 1) {
    bc = Broadcast::right_scalar;
    out = a;
    const T s = b.data[0];
    for (auto& v : out.data) v *= s;
  } else {
    fail(ErrorKind::shape, "mul: incompatible shapes " + shape_str(a.shape) +
                               " vs " + shape_str(b.shape));
  }
  return emplace("mul", std::move(out), {aid, bid},
                 [aid, bid, bc](Tape& t, int32_t self) {
                   const TensorT<T>& g = t.upstream(self);
                   const TensorT<T>& a2 = t.node_value(aid);
                   const TensorT<T>& b2 = t.node_value(bid);
                   {
                     TensorT<T>& da = t.grad_buf(aid);
                     if (bc == Broadcast::left_scalar) {
                       double acc = 0.0;
                       for (size_t i = 0; i < g.data.size(); ++i)
                         acc += static_cast<double>(g.data[i]) * static_cast<double>(b2.data[i]);
                       da.data[0] += static_cast<T>(acc);
                     } else if (bc == Broadcast::right_scalar) {
                       const T s = b2.data[0];
                       for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] * s;
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] * b2.data[i];
                     }
                   }
                   {
                     TensorT<T>& db = t.grad_buf(bid);
                     if (bc == Broadcast::right_scalar) {
                       double acc = 0.0;
                       for (size_t i = 0; i < g.data.size(); ++i)
                         acc += static_cast<double>(g.data[i]) * static_cast<double>(a2.data[i]);
                       db.data[0] += static_cast<T>(acc);
                     } else if (bc == Broadcast::left_scalar) {
                       const T s = a2.data[0];
                       for (size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i] * s;
                     } else {
                       for (size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i] * a2.data[i];
                     }
                   }
                 });
}

template <class T>
Var<T> Tape<T>::scale(Var<T> va, double factor) {
  const int32_t aid = check(va);
  const T f = static_cast<T>(factor);
  TensorT<T> out = nodes_[aid].value;
  for (auto& v : out.data) v *= f;
  return emplace("scale", std::move(out), {aid}, [aid, f](Tape& t, int32_t self) {
    const TensorT<T>& g = t.upstream(self);
    TensorT<T>& da = t.grad_buf(aid);
    for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] * f;
  });
}

template <class T>
Var<T> Tape<T>::reduce_sum(Var<T> va) {
  const int32_t aid = check(va);
  const TensorT<T>& a = nodes_[aid].value;
  double acc = 0.0;
  for (T v : a.data) acc += static_cast<double>(v);
  return emplace("reduce_sum", TensorT<T>::scalar(static_cast<T>(acc)), {aid},
                 [aid](Tape& t, int32_t self) {
                   const T g0 = t.upstream(self).data[0];
                   TensorT<T>& da = t.grad_buf(aid);
                   for (auto& v : da.data) v += g0;
                 });
}

template <class T>
Var<T> Tape<T>::reduce_mean(Var<T> va) {
  const int32_t aid = check(va);
  const TensorT<T>& a = nodes_[aid].value;
  const int64_t n = a.numel();
  double acc = 0.0;
  for (T v : a.data) acc += static_cast<double>(v);
  return emplace("reduce_mean", TensorT<T>::scalar(static_cast<T>(acc / static_cast<double>(n))),
                 {aid}, [aid, n](Tape& t, int32_t self) {
                   const double g0 = static_cast<double>(t.upstream(self).data[0]);
                   const T contrib = static_cast<T>(g0 / static_cast<double>(n));
                   TensorT<T>& da = t.grad_buf(aid);
                   for (auto& v : da.data) v += contrib;
                 });
}

template <class T>
void Tape<T>::backward(Var<T> loss) {
  const int32_t root = check(loss);
  if (nodes_[static_cast<size_t>(root)].value.numel() != 1)
    fail(ErrorKind::contract, "backward requires a single-element loss, got " +
                                  shape_str(nodes_[static_cast<size_t>(root)].value.shape));

  // iterative post-order over the parent DAG
  std::vector<uint8_t> state(nodes_.size(), 0);  // 0 unseen, 1 expanded, 2 done
  std::vector<int32_t> topo;
  std::vector<int32_t> stack{root};
  while (!stack.empty()) {
    int32_t id = stack.back();
    uint8_t& s = state[static_cast<size_t>(id)];
    if (s == 0) {
      s = 1;
      for (int32_t p : nodes_[static_cast<size_t>(id)].parents)
        if (state[static_cast<size_t>(p)] == 0) stack.push_back(p);
    } else {
      stack.pop_back();
      if (s == 1) {
        s = 2;
        topo.push_back(id);
      }
    }
  }

  // repeated backward calls start from clean accumulators
  for (Node& n : nodes_) n.grad = TensorT<T>();

  visits_.assign(nodes_.size(), 0);
  TensorT<T>& seed = grad_buf(root);
  std::fill(seed.data.begin(), seed.data.end(), T(1));
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node& n = nodes_[static_cast<size_t>(*it)];
    if (!n.backward_fn) continue;
    ++visits_[static_cast<size_t>(*it)];
    n.backward_fn(*this, *it);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace ts
