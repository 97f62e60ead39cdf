#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace featfool::diffcore {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class BasicTensor;

namespace detail {

template <typename T>
struct TensorImpl;

// One recorded operation: the inputs it read and how to push the output
// gradient back into them.
template <typename T>
struct GradFn {
    const char* name = "";
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    std::function<void(const TensorImpl<T>& out)> backward;
};

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::shared_ptr<GradFn<T>> grad_fn;

    std::span<T> ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
        return grad;
    }
};

}  // namespace detail

// Shared handle to an n-d array with an optional gradient slot. Copies alias
// the same storage; use detach() or clone() for an independent value.
template <typename T>
class BasicTensor {
   public:
    using value_type = T;
    using Impl = detail::TensorImpl<T>;

    BasicTensor() = default;
    explicit BasicTensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    static BasicTensor full(Shape shape, T fill, bool requires_grad = false);
    static BasicTensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
    static BasicTensor scalar(T value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(impl_); }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }

    std::span<const T> values() const { return impl_->data; }
    // In-place access for optimizers and pixel updates. Do not mutate a tensor
    // whose value was saved by a live graph.
    std::span<T> values_mut() { return impl_->data; }
    T item() const;
    T at(std::size_t i) const { return impl_->data.at(i); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on);
    bool is_leaf() const { return !impl_->grad_fn; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const T> grad() const { return impl_->grad; }
    std::span<T> grad_mut() { return impl_->ensure_grad(); }
    void zero_grad();

    // Fresh leaf holding a copy of the values, outside any graph.
    BasicTensor detach() const;

    Impl* impl() const { return impl_.get(); }
    const std::shared_ptr<Impl>& impl_ptr() const { return impl_; }

   private:
    std::shared_ptr<Impl> impl_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Topological record of the operations reachable from a root tensor.
template <typename T>
class Graph {
   public:
    static Graph trace(const BasicTensor<T>& root);

    // Nodes with a recorded operation, inputs before consumers.
    const std::vector<detail::TensorImpl<T>*>& order() const { return order_; }
    std::size_t size() const { return order_.size(); }

   private:
    std::vector<detail::TensorImpl<T>*> order_;
};

// Accumulates d(loss)/d(t) into every requires_grad tensor reachable from a
// scalar loss.
template <typename T>
void backward(const BasicTensor<T>& loss);

// Builds a non-leaf result. `backward_fn` receives the output node and is
// only attached when some input requires a gradient.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, const char* name,
                           std::vector<BasicTensor<T>> inputs,
                           std::function<void(const detail::TensorImpl<T>&)> backward_fn);

}  // namespace featfool::diffcore
