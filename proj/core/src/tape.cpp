#include "hargnn/tape.hpp"

#include <stdexcept>

#include "hargnn/error.hpp"

namespace hargnn {

namespace {
thread_local Tape* g_active = nullptr;
}

Tape::Tape() : previous_(g_active) { g_active = this; }

Tape::~Tape() {
  if (g_active == this) g_active = previous_;
}

Tape* Tape::active() noexcept { return g_active; }

bool Tape::should_record(std::initializer_list<const Tensor*> inputs) noexcept {
  if (!g_active) return false;
  for (const Tensor* t : inputs) {
    if (t && t->requires_grad()) return true;
  }
  return false;
}

void Tape::record(Tensor& output, BackwardFn backward) {
  if (consumed_) throw std::logic_error("recording onto a tape that was already replayed; call clear() first");
  output.node_->requires_grad = true;
  records_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw std::logic_error("backward() called twice on the same tape without a new forward pass");
  if (loss.numel() != 1) throw ShapeError("backward() needs a scalar loss, got " + shape_to_string(loss.shape()));
  if (!loss.requires_grad()) throw std::logic_error("loss does not depend on any recorded parameter");
  consumed_ = true;
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

void Tape::clear() {
  records_.clear();
  consumed_ = false;
}

NoGradGuard::NoGradGuard() : saved_(g_active) { g_active = nullptr; }

NoGradGuard::~NoGradGuard() { g_active = saved_; }

}  // namespace hargnn
