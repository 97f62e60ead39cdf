#include "featfool/diffcore/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "featfool/errors.hpp"

namespace featfool::diffcore {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

void check_extents(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

}  // namespace

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T fill, bool requires_grad) {
    check_extents(shape);
    auto impl = std::make_shared<Impl>();
    impl->data.assign(shape_numel(shape), fill);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    if (requires_grad) impl->ensure_grad();
    return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
    check_extents(shape);
    if (values.size() != shape_numel(shape)) {
        throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(values.size()));
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    if (requires_grad) impl->ensure_grad();
    return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

template <typename T>
T BasicTensor<T>::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool on) {
    if (!is_leaf()) throw ContractError("requires_grad can only be changed on leaf tensors");
    impl_->requires_grad = on;
    if (on) impl_->ensure_grad();
}

template <typename T>
void BasicTensor<T>::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
    auto impl = std::make_shared<Impl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return BasicTensor(std::move(impl));
}

template <typename T>
Graph<T> Graph<T>::trace(const BasicTensor<T>& root) {
    Graph g;
    if (!root.defined() || !root.impl()->grad_fn) return g;
    // Iterative post-order DFS; each node is emitted once after its inputs.
    std::unordered_set<const detail::TensorImpl<T>*> seen;
    std::vector<std::pair<detail::TensorImpl<T>*, std::size_t>> stack;
    stack.emplace_back(root.impl(), 0);
    seen.insert(root.impl());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        const auto& inputs = node->grad_fn->inputs;
        if (next < inputs.size()) {
            detail::TensorImpl<T>* child = inputs[next++].get();
            if (child->grad_fn && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            g.order_.push_back(node);
            stack.pop_back();
        }
    }
    return g;
}

template <typename T>
void backward(const BasicTensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() needs a scalar loss");
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward() on a tensor that is not part of a recorded graph");
    }
    const Graph<T> graph = Graph<T>::trace(loss);
    loss.impl()->ensure_grad()[0] += T(1);
    const auto& order = graph.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorImpl<T>* node = *it;
        if (node->grad.empty()) continue;
        node->grad_fn->backward(*node);
    }
}

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, const char* name,
                           std::vector<BasicTensor<T>> inputs,
                           std::function<void(const detail::TensorImpl<T>&)> backward_fn) {
    auto impl = std::make_shared<detail::TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    bool needs_grad = false;
    for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
    if (needs_grad) {
        impl->requires_grad = true;
        auto fn = std::make_shared<detail::GradFn<T>>();
        fn->name = name;
        fn->inputs.reserve(inputs.size());
        for (const auto& in : inputs) fn->inputs.push_back(in.impl_ptr());
        fn->backward = std::move(backward_fn);
        impl->grad_fn = std::move(fn);
    }
    return BasicTensor<T>(std::move(impl));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class Graph<float>;
template class Graph<double>;
template void backward<float>(const BasicTensor<float>&);
template void backward<double>(const BasicTensor<double>&);
template BasicTensor<float> make_result<float>(Shape, std::vector<float>, const char*,
                                               std::vector<BasicTensor<float>>,
                                               std::function<void(const detail::TensorImpl<float>&)>);
template BasicTensor<double> make_result<double>(Shape, std::vector<double>, const char*,
                                                 std::vector<BasicTensor<double>>,
                                                 std::function<void(const detail::TensorImpl<double>&)>);

}  // namespace featfool::diffcore
