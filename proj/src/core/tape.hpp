#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "core/tensor.hpp"

namespace ts {

template <class T>
class Tape;

// Handle to a node on a tape. Plain index into the owning tape, which is
// always passed alongside.
template <class T>
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode record. Every produced tensor remembers its inputs and a rule
// that routes its incoming gradient back to them. When a node feeds several
// consumers the contributions accumulate additively.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int32_t)>;

  Var<T> leaf(TensorT<T> value);

  // Op-author entry point: record a produced value with its inputs and rule.
  Var<T> emplace(const char* op, TensorT<T> value, std::vector<int32_t> parents,
                 BackwardFn fn);

  // Elementwise arithmetic. Operands must match shapes exactly, except that a
  // one-element tensor broadcasts against any shape.
  Var<T> add(Var<T> a, Var<T> b);
  Var<T> sub(Var<T> a, Var<T> b);
  Var<T> mul(Var<T> a, Var<T> b);
  Var<T> scale(Var<T> a, double factor);
  Var<T> reduce_sum(Var<T> a);
  Var<T> reduce_mean(Var<T> a);

  // Seeds d(loss)/d(loss) = 1 and runs every reachable node's rule exactly
  // once in reverse topological order. loss must hold a single element.
  void backward(Var<T> loss);

  const TensorT<T>& value(Var<T> v) const;
  // Gradient accumulated by the last backward; zeros if the node was never
  // reached.
  TensorT<T> grad(Var<T> v) const;
  const TensorT<T>& grad_ref(Var<T> v);

  const char* op_tag(Var<T> v) const;
  size_t size() const { return nodes_.size(); }
  void clear();

  // Rule invocation counts from the last backward, indexed by node id.
  const std::vector<uint32_t>& backward_visits() const { return visits_; }

  // Remaining accessors exist for backward rules, which receive the tape and
  // their own node id.
  const TensorT<T>& node_value(int32_t id) const { return nodes_[static_cast<size_t>(id)].value; }
  const TensorT<T>& upstream(int32_t id);  // this node's incoming gradient
  TensorT<T>& grad_buf(int32_t id);        // parent accumulator, zeroed on first use

 private:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;  // unallocated until first touched
    std::vector<int32_t> parents;
    BackwardFn backward_fn;
    const char* op = "leaf";
  };

  int32_t check(Var<T> v) const;

  std::vector<Node> nodes_;
  std::vector<uint32_t> visits_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ts
