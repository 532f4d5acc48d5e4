#include "eir/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace eir {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
}

namespace {

[[noreturn]] void shape_error(const std::string& what, const Shape& a, const Shape& b) {
    throw std::invalid_argument(what + ": " + shape_str(a) + " vs " + shape_str(b));
}

void check_shape(const Shape& s) {
    if (s.empty() || s.size() > 4)
        throw std::invalid_argument("tensor rank must be 1..4, got " + shape_str(s));
    for (int d : s)
        if (d <= 0) throw std::invalid_argument("non-positive dimension in " + shape_str(s));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    check_shape(shape);
    impl_ = std::make_shared<TensorImpl>();
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (values.size() != shape_numel(shape))
        throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                    " does not fill shape " + shape_str(shape));
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor::from({1, 1}, {v}, requires_grad);
}

int Tensor::rows() const {
    if (rank() != 2) throw std::invalid_argument("rows() needs rank 2, got " + shape_str(shape()));
    return impl_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw std::invalid_argument("cols() needs rank 2, got " + shape_str(shape()));
    return impl_->shape[1];
}

double& Tensor::at(int i, int j) {
    return impl_->data[static_cast<size_t>(i) * cols() + j];
}

double Tensor::at(int i, int j) const {
    return impl_->data[static_cast<size_t>(i) * cols() + j];
}

double Tensor::item() const {
    if (numel() != 1)
        throw std::invalid_argument("item() needs a single-element tensor, got " +
                                    shape_str(shape()));
    return impl_->data[0];
}

const std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty())
        throw std::runtime_error("gradient absent; run backward first");
    return impl_->grad;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw std::invalid_argument("backward requires a scalar loss");
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

// Matmul kernels accumulate into C so the same routines serve forward
// (zero-filled C) and backward (grad accumulation).
void mm_nn(const double* a, const double* b, double* c, int r, int s, int t) {
    for (int i = 0; i < r; ++i) {
        const double* ai = a + static_cast<size_t>(i) * s;
        double* ci = c + static_cast<size_t>(i) * t;
        for (int k = 0; k < s; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b + static_cast<size_t>(k) * t;
            for (int j = 0; j < t; ++j) ci[j] += aik * bk[j];
        }
    }
}

// c (r x t) += a (r x s) * b^T, b given as (t x s)
void mm_nt(const double* a, const double* b, double* c, int r, int s, int t) {
    for (int i = 0; i < r; ++i) {
        const double* ai = a + static_cast<size_t>(i) * s;
        double* ci = c + static_cast<size_t>(i) * t;
        for (int j = 0; j < t; ++j) {
            const double* bj = b + static_cast<size_t>(j) * s;
            double acc = 0.0;
            for (int k = 0; k < s; ++k) acc += ai[k] * bj[k];
            ci[j] += acc;
        }
    }
}

// c (s x t) += a^T * b, a given as (r x s), b as (r x t)
void mm_tn(const double* a, const double* b, double* c, int r, int s, int t) {
    for (int i = 0; i < r; ++i) {
        const double* ai = a + static_cast<size_t>(i) * s;
        const double* bi = b + static_cast<size_t>(i) * t;
        for (int k = 0; k < s; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            double* ck = c + static_cast<size_t>(k) * t;
            for (int j = 0; j < t; ++j) ck[j] += aik * bi[j];
        }
    }
}

bool any_grad(std::initializer_list<const Tensor*> ts) {
    for (const Tensor* t : ts)
        if (t->requires_grad()) return true;
    return false;
}

Tensor make_out(Shape shape, bool requires_grad) {
    Tensor out(std::move(shape), 0.0, requires_grad);
    return out;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        shape_error("matmul dimension mismatch", a.shape(), b.shape());
    const int r = a.rows(), s = a.cols(), t = b.cols();
    Tensor out = make_out({r, t}, any_grad({&a, &b}));
    mm_nn(a.data(), b.data(), out.data(), r, s, t);
    if (out.requires_grad()) {
        ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape.record([ai, bi, oi, r, s, t] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                mm_nt(oi->grad.data(), bi->data.data(), ai->grad.data(), r, t, s);
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                mm_tn(ai->data.data(), oi->grad.data(), bi->grad.data(), r, s, t);
            }
        });
    }
    return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        shape_error("matmul_nt dimension mismatch", a.shape(), b.shape());
    const int r = a.rows(), s = a.cols(), t = b.rows();
    Tensor out = make_out({r, t}, any_grad({&a, &b}));
    mm_nt(a.data(), b.data(), out.data(), r, s, t);
    if (out.requires_grad()) {
        ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape.record([ai, bi, oi, r, s, t] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                mm_nn(oi->grad.data(), bi->data.data(), ai->grad.data(), r, t, s);
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                mm_tn(oi->grad.data(), ai->data.data(), bi->grad.data(), r, t, s);
            }
        });
    }
    return out;
}

Tensor softmax(Tape& tape, const Tensor& x, int axis) {
    if (axis < 0 || axis >= x.rank())
        throw std::out_of_range("softmax axis " + std::to_string(axis) + " out of range for " +
                                shape_str(x.shape()));
    const Shape& sh = x.shape();
    size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= sh[i];
    for (int i = axis + 1; i < x.rank(); ++i) inner *= sh[i];
    const size_t len = sh[axis];

    Tensor out = make_out(sh, x.requires_grad());
    const double* xd = x.data();
    double* od = out.data();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * len * inner + in;
            double mx = xd[base];
            for (size_t j = 1; j < len; ++j) mx = std::max(mx, xd[base + j * inner]);
            double sum = 0.0;
            for (size_t j = 0; j < len; ++j) {
                const double e = std::exp(xd[base + j * inner] - mx);
                od[base + j * inner] = e;
                sum += e;
            }
            for (size_t j = 0; j < len; ++j) od[base + j * inner] /= sum;
        }
    }
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), oi = out.impl();
        tape.record([xi, oi, outer, inner, len] {
            if (oi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            const double* s = oi->data.data();
            const double* dy = oi->grad.data();
            double* dx = xi->grad.data();
            for (size_t o = 0; o < outer; ++o) {
                for (size_t in = 0; in < inner; ++in) {
                    const size_t base = o * len * inner + in;
                    double dot = 0.0;
                    for (size_t j = 0; j < len; ++j) {
                        const size_t k = base + j * inner;
                        dot += dy[k] * s[k];
                    }
                    for (size_t j = 0; j < len; ++j) {
                        const size_t k = base + j * inner;
                        dx[k] += s[k] * (dy[k] - dot);
                    }
                }
            }
        });
    }
    return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
    const int d = x.shape().back();
    if (eps <= 0.0) throw std::invalid_argument("layer_norm eps must be positive");
    if (gamma.numel() != static_cast<size_t>(d) || beta.numel() != static_cast<size_t>(d))
        shape_error("layer_norm affine width mismatch", x.shape(), gamma.shape());
    const size_t rows = x.numel() / d;

    Tensor out = make_out(x.shape(), any_grad({&x, &gamma, &beta}));
    // xhat and 1/sqrt(var+eps) are kept for the backward pass
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto inv_sd = std::make_shared<std::vector<double>>(rows);

    const double* xd = x.data();
    const double* g = gamma.data();
    const double* b = beta.data();
    double* od = out.data();
    for (size_t r = 0; r < rows; ++r) {
        const double* row = xd + r * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_sd)[r] = inv;
        for (int j = 0; j < d; ++j) {
            const double h = (row[j] - mean) * inv;
            (*xhat)[r * d + j] = h;
            od[r * d + j] = h * g[j] + b[j];
        }
    }
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
        tape.record([xi, gi, bi, oi, xhat, inv_sd, rows, d] {
            if (oi->grad.empty()) return;
            const double* dy = oi->grad.data();
            const double* g = gi->data.data();
            for (size_t r = 0; r < rows; ++r) {
                const double* dyr = dy + r * d;
                const double* hr = xhat->data() + r * d;
                if (xi->requires_grad) {
                    xi->ensure_grad();
                    double* dx = xi->grad.data() + r * d;
                    double m1 = 0.0, m2 = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double gh = g[j] * dyr[j];
                        m1 += gh;
                        m2 += gh * hr[j];
                    }
                    m1 /= d;
                    m2 /= d;
                    const double inv = (*inv_sd)[r];
                    for (int j = 0; j < d; ++j)
                        dx[j] += (g[j] * dyr[j] - m1 - hr[j] * m2) * inv;
                }
                if (gi->requires_grad) {
                    gi->ensure_grad();
                    for (int j = 0; j < d; ++j) gi->grad[j] += dyr[j] * hr[j];
                }
                if (bi->requires_grad) {
                    bi->ensure_grad();
                    for (int j = 0; j < d; ++j) bi->grad[j] += dyr[j];
                }
            }
        });
    }
    return out;
}

Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Ew kind) {
    if (a.shape() != b.shape()) shape_error("elementwise shape mismatch", a.shape(), b.shape());
    const size_t n = a.numel();
    Tensor out = make_out(a.shape(), any_grad({&a, &b}));
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    switch (kind) {
        case Ew::add: for (size_t i = 0; i < n; ++i) od[i] = ad[i] + bd[i]; break;
        case Ew::sub: for (size_t i = 0; i < n; ++i) od[i] = ad[i] - bd[i]; break;
        case Ew::mul: for (size_t i = 0; i < n; ++i) od[i] = ad[i] * bd[i]; break;
        case Ew::max: for (size_t i = 0; i < n; ++i) od[i] = std::max(ad[i], bd[i]); break;
    }
    if (out.requires_grad()) {
        ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
        tape.record([ai, bi, oi, n, kind] {
            if (oi->grad.empty()) return;
            const double* dy = oi->grad.data();
            const double* ad = ai->data.data();
            const double* bd = bi->data.data();
            if (ai->requires_grad) {
                ai->ensure_grad();
                double* da = ai->grad.data();
                switch (kind) {
                    case Ew::add:
                    case Ew::sub: for (size_t i = 0; i < n; ++i) da[i] += dy[i]; break;
                    case Ew::mul: for (size_t i = 0; i < n; ++i) da[i] += dy[i] * bd[i]; break;
                    case Ew::max:
                        // ties route to the first operand
                        for (size_t i = 0; i < n; ++i)
                            if (ad[i] >= bd[i]) da[i] += dy[i];
                        break;
                }
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                double* db = bi->grad.data();
                switch (kind) {
                    case Ew::add: for (size_t i = 0; i < n; ++i) db[i] += dy[i]; break;
                    case Ew::sub: for (size_t i = 0; i < n; ++i) db[i] -= dy[i]; break;
                    case Ew::mul: for (size_t i = 0; i < n; ++i) db[i] += dy[i] * ad[i]; break;
                    case Ew::max:
                        for (size_t i = 0; i < n; ++i)
                            if (ad[i] < bd[i]) db[i] += dy[i];
                        break;
                }
            }
        });
    }
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Ew::add); }
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Ew::sub); }
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Ew::mul); }
Tensor emax(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Ew::max); }

Tensor add_bias_row(Tape& tape, const Tensor& x, const Tensor& bias) {
    const int d = x.shape().back();
    if (bias.numel() != static_cast<size_t>(d))
        shape_error("bias width mismatch", x.shape(), bias.shape());
    const size_t rows = x.numel() / d;
    Tensor out = make_out(x.shape(), any_grad({&x, &bias}));
    const double* xd = x.data();
    const double* bd = bias.data();
    double* od = out.data();
    for (size_t r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) od[r * d + j] = xd[r * d + j] + bd[j];
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), bi = bias.impl(), oi = out.impl();
        tape.record([xi, bi, oi, rows, d] {
            if (oi->grad.empty()) return;
            const double* dy = oi->grad.data();
            if (xi->requires_grad) {
                xi->ensure_grad();
                double* dx = xi->grad.data();
                for (size_t i = 0; i < rows * d; ++i) dx[i] += dy[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                double* db = bi->grad.data();
                for (size_t r = 0; r < rows; ++r)
                    for (int j = 0; j < d; ++j) db[j] += dy[r * d + j];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
    const size_t n = x.numel();
    Tensor out = make_out(x.shape(), x.requires_grad());
    const double* xd = x.data();
    double* od = out.data();
    for (size_t i = 0; i < n; ++i) od[i] = xd[i] * c;
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), oi = out.impl();
        tape.record([xi, oi, n, c] {
            if (oi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (size_t i = 0; i < n; ++i) xi->grad[i] += oi->grad[i] * c;
        });
    }
    return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
    const size_t n = x.numel();
    Tensor out = make_out(x.shape(), x.requires_grad());
    const double* xd = x.data();
    double* od = out.data();
    for (size_t i = 0; i < n; ++i) od[i] = xd[i] > 0.0 ? xd[i] : 0.0;
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), oi = out.impl();
        tape.record([xi, oi, n] {
            if (oi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (size_t i = 0; i < n; ++i)
                if (xi->data[i] > 0.0) xi->grad[i] += oi->grad[i];
        });
    }
    return out;
}

Tensor slice_cols(Tape& tape, const Tensor& x, int start, int width) {
    const int r = x.rows(), c = x.cols();
    if (start < 0 || width <= 0 || start + width > c)
        throw std::out_of_range("slice_cols [" + std::to_string(start) + "," +
                                std::to_string(start + width) + ") outside " +
                                shape_str(x.shape()));
    Tensor out = make_out({r, width}, x.requires_grad());
    const double* xd = x.data();
    double* od = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < width; ++j)
            od[static_cast<size_t>(i) * width + j] = xd[static_cast<size_t>(i) * c + start + j];
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), oi = out.impl();
        tape.record([xi, oi, r, c, start, width] {
            if (oi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < width; ++j)
                    xi->grad[static_cast<size_t>(i) * c + start + j] +=
                        oi->grad[static_cast<size_t>(i) * width + j];
        });
    }
    return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols needs at least one part");
    const int r = parts[0].rows();
    int total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        if (p.rows() != r) shape_error("concat_cols row mismatch", parts[0].shape(), p.shape());
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = make_out({r, total}, rg);
    double* od = out.data();
    int off = 0;
    for (const Tensor& p : parts) {
        const int w = p.cols();
        const double* pd = p.data();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < w; ++j)
                od[static_cast<size_t>(i) * total + off + j] = pd[static_cast<size_t>(i) * w + j];
        off += w;
    }
    if (rg) {
        std::vector<ImplPtr> impls;
        impls.reserve(parts.size());
        for (const Tensor& p : parts) impls.push_back(p.impl());
        ImplPtr oi = out.impl();
        tape.record([impls, oi, r, total] {
            if (oi->grad.empty()) return;
            int off = 0;
            for (const ImplPtr& pi : impls) {
                const int w = pi->shape[1];
                if (pi->requires_grad) {
                    pi->ensure_grad();
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < w; ++j)
                            pi->grad[static_cast<size_t>(i) * w + j] +=
                                oi->grad[static_cast<size_t>(i) * total + off + j];
                }
                off += w;
            }
        });
    }
    return out;
}

Tensor mean_rows(Tape& tape, const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    Tensor out = make_out({1, c}, x.requires_grad());
    const double* xd = x.data();
    double* od = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) od[j] += xd[static_cast<size_t>(i) * c + j];
    for (int j = 0; j < c; ++j) od[j] /= r;
    if (out.requires_grad()) {
        ImplPtr xi = x.impl(), oi = out.impl();
        tape.record([xi, oi, r, c] {
            if (oi->grad.empty() || !xi->requires_grad) return;
            xi->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    xi->grad[static_cast<size_t>(i) * c + j] += oi->grad[j] / r;
        });
    }
    return out;
}

Tensor embed_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
    const int v = table.rows(), e = table.cols();
    if (ids.empty()) throw std::invalid_argument("embed_rows: empty id sequence");
    for (int id : ids)
        if (id < 0 || id >= v)
            throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                                    std::to_string(v));
    const int l = static_cast<int>(ids.size());
    Tensor out = make_out({l, e}, table.requires_grad());
    const double* td = table.data();
    double* od = out.data();
    for (int i = 0; i < l; ++i)
        std::copy_n(td + static_cast<size_t>(ids[i]) * e, e, od + static_cast<size_t>(i) * e);
    if (out.requires_grad()) {
        ImplPtr ti = table.impl(), oi = out.impl();
        auto idv = std::make_shared<std::vector<int>>(ids);
        tape.record([ti, oi, idv, l, e] {
            if (oi->grad.empty() || !ti->requires_grad) return;
            ti->ensure_grad();
            for (int i = 0; i < l; ++i)
                for (int j = 0; j < e; ++j)
                    ti->grad[static_cast<size_t>((*idv)[i]) * e + j] +=
                        oi->grad[static_cast<size_t>(i) * e + j];
        });
    }
    return out;
}

Tensor cross_entropy(Tape& tape, const Tensor& p, const Tensor& y) {
    if (p.rank() != 2 || y.shape() != p.shape())
        shape_error("cross_entropy shape mismatch", p.shape(), y.shape());
    const int n = p.rows(), k = p.cols();
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double v = y.at(i, j);
            if (v != 0.0 && v != 1.0)
                throw std::invalid_argument("cross_entropy: target row " + std::to_string(i) +
                                            " is not one-hot");
            rowsum += v;
        }
        if (rowsum != 1.0)
            throw std::invalid_argument("cross_entropy: target row " + std::to_string(i) +
                                        " is not one-hot");
    }
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            if (y.at(i, j) == 1.0) loss -= std::log(std::max(p.at(i, j), kCeFloor));
    loss /= n;
    Tensor out = Tensor::scalar(loss, p.requires_grad());
    if (out.requires_grad()) {
        ImplPtr pi = p.impl(), yi = y.impl(), oi = out.impl();
        tape.record([pi, yi, oi, n, k] {
            if (oi->grad.empty() || !pi->requires_grad) return;
            pi->ensure_grad();
            const double g = oi->grad[0];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < k; ++j) {
                    const size_t idx = static_cast<size_t>(i) * k + j;
                    // the clamp is flat below the floor, so no gradient there
                    if (yi->data[idx] == 1.0 && pi->data[idx] > kCeFloor)
                        pi->grad[idx] -= g / (n * pi->data[idx]);
                }
        });
    }
    return out;
}

void adam_step(Tensor& param, AdamState& state) {
    if (!param.has_grad())
        throw std::runtime_error("adam_step: parameter has no gradient");
    const size_t n = param.numel();
    if (state.m.empty()) state.m.assign(n, 0.0);
    if (state.v.empty()) state.v.assign(n, 0.0);
    if (state.m.size() != n || state.v.size() != n)
        throw std::invalid_argument("adam_step: moment size does not match parameter");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    double* p = param.data();
    const std::vector<double>& g = param.impl()->grad;
    for (size_t i = 0; i < n; ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace eir
