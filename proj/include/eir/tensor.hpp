#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace eir {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
size_t shape_numel(const Shape& s);

// Raised when a forward pass produces non-finite values that a training step
// cannot recover from. The CLI maps this to exit code 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major f64 array, rank 1..4. Gradient storage is lazy: the grad
// vector stays empty until backward first accumulates into it.
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;

    size_t numel() const { return data.size(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
    }
};

// Value-semantic handle to a shared TensorImpl. Copies alias the same storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);  // shape {1,1}

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[i]; }
    int rows() const;
    int cols() const;
    size_t numel() const { return impl_->data.size(); }

    double* data() { return impl_->data.data(); }
    const double* data() const { return impl_->data.data(); }
    std::vector<double>& vec() { return impl_->data; }
    const std::vector<double>& vec() const { return impl_->data; }
    double& at(int i, int j);
    double at(int i, int j) const;
    double item() const;  // numel()==1 only

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool b) { impl_->requires_grad = b; }
    bool has_grad() const { return !impl_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad() { impl_->grad.clear(); }

    std::shared_ptr<TensorImpl> impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Records backward closures in forward order. backward() seeds the loss
// gradient with 1 and replays the list in reverse, visiting each recorded
// operation exactly once. A training step owns its tape exclusively.
class Tape {
public:
    void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }
    void backward(const Tensor& loss);
    size_t size() const { return ops_.size(); }
    void clear() { ops_.clear(); }

private:
    std::vector<std::function<void()>> ops_;
};

enum class Ew { add, sub, mul, max };

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// a (r x s) times b^T where b is (t x s); avoids materializing transposes.
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);
Tensor softmax(Tape& tape, const Tensor& x, int axis);
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps);
Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Ew kind);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor emax(Tape& tape, const Tensor& a, const Tensor& b);
// x (T x d) plus a rank-1 bias of width d broadcast across rows.
Tensor add_bias_row(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor scale(Tape& tape, const Tensor& x, double c);
Tensor relu(Tape& tape, const Tensor& x);
Tensor slice_cols(Tape& tape, const Tensor& x, int start, int width);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor mean_rows(Tape& tape, const Tensor& x);  // (T x d) -> (1 x d)
Tensor embed_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids);
// Mean over rows of -sum_j y_ij log p_ij. Rows of y must be one-hot; p is
// floored at 1e-12 inside the log so a zero at a true-class slot never traps.
Tensor cross_entropy(Tape& tape, const Tensor& p, const Tensor& y);

constexpr double kCeFloor = 1e-12;

// Per-parameter Adam accumulators. step advances by exactly one per update.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update in place; requires param.grad to be present.
void adam_step(Tensor& param, AdamState& state);

}  // namespace eir
