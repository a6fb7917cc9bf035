#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hargnn/tensor.hpp"

namespace hargnn {

/// Records differentiable operations executed on the current thread while it
/// is alive. Ops consult Tape::active(); when no tape is active (or a
/// NoGradGuard is in scope) nothing is recorded and outputs never require
/// gradients.
///
/// A tape can be replayed backward exactly once. A second backward() without
/// clear() and a fresh forward pass throws std::logic_error.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  /// True when an op with these inputs should be recorded.
  static bool should_record(std::initializer_list<const Tensor*> inputs) noexcept;

  /// Appends a record; marks `output` as requiring grad.
  void record(Tensor& output, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and runs records in reverse order.
  void backward(const Tensor& loss);

  /// Drops every record (and the intermediates they keep alive).
  void clear();

  std::size_t size() const noexcept { return records_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  std::vector<BackwardFn> records_;
  Tape* previous_ = nullptr;
  bool consumed_ = false;
};

/// Suspends recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* saved_;
};

}  // namespace hargnn
