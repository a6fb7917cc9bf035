#include "hargnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hargnn/error.hpp"
#include "hargnn/tape.hpp"

namespace hargnn {

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  Tensor probe = x.clone(true);
  for (auto& v : probe.mutable_data()) {
    if (std::abs(v) < 10.0 * eps) v = v < 0.0 ? -10.0 * eps : 10.0 * eps;
  }
  return gradient_check([&] { return f(probe); }, std::vector<Tensor>{probe}, eps);
}

double gradient_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps) {
  for (auto& p : params) {
    p.zero_grad();
    p.set_requires_grad(true);
  }
  {
    Tape tape;
    Tensor y = f();
    if (y.numel() != 1) throw ShapeError("gradient_check: function must be scalar-valued");
    tape.backward(y);
  }

  NoGradGuard no_grad;
  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = f().item();
      values[i] = saved - eps;
      const double down = f().item();
      values[i] = saved;
      worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace hargnn
