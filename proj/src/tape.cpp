#include "invrom/tape.hpp"

#include <cblas.h>
#include <cmath>

namespace invrom {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
constexpr std::size_t kOmpThreshold = 1 << 14;

// Broadcast class of rhs against lhs for elementwise ops.
enum class Bcast { Same, Row, Scalar };

Bcast bcast_kind(const Tensor& a, const Tensor& b, Op op) {
    if (a.same_shape(b)) return Bcast::Same;
    if (b.is_scalar()) return Bcast::Scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
    throw ShapeError(std::string(op_name(op)) + ": shapes " + a.shape_str() +
                     " and " + b.shape_str() + " do not conform");
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Const: return "const";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Hadamard: return "hadamard";
        case Op::Exp: return "exp";
        case Op::Arctan: return "arctan";
        case Op::Gelu: return "gelu";
        case Op::Scale: return "scale";
        case Op::SumSq: return "sum_sq";
        case Op::SliceCols: return "slice_cols";
        case Op::ConcatCols: return "concat_cols";
    }
    return "?";
}

double gelu_scalar(double x) {
    return x * 0.5 * (1.0 + std::erf(x * kInvSqrt2));
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor* p) {
    auto it = leaf_ids_.find(p);
    if (it != leaf_ids_.end()) return it->second;
    Node n;
    n.op = Op::Leaf;
    n.value = *p;  // copy; the tape owns a stable snapshot for this pass
    n.param = p;
    n.needs_grad = p->requires_grad;
    int id = push(std::move(n));
    leaf_ids_.emplace(p, id);
    return id;
}

int Tape::constant(Tensor v) {
    Node n;
    n.op = Op::Const;
    n.value = std::move(v);
    return push(std::move(n));
}

int Tape::matmul(int a, int b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    if (A.cols() != B.rows())
        throw ShapeError(std::string("matmul: inner dimensions of ") + A.shape_str() +
                         " and " + B.shape_str() + " do not match");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = Tensor(A.rows(), B.cols());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)A.rows(), (int)B.cols(),
                (int)A.cols(), 1.0, A.data.data(), (int)A.cols(), B.data.data(),
                (int)B.cols(), 0.0, n.value.data.data(), (int)B.cols());
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    Bcast k = bcast_kind(A, B, Op::Add);
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    n.value.requires_grad = false;
    double* y = n.value.data.data();
    const double* pb = B.data.data();
    const std::size_t rows = A.rows(), cols = A.cols();
    if (k == Bcast::Same) {
        const std::size_t m = A.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
        for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) y[i] += pb[i];
    } else if (k == Bcast::Row) {
#pragma omp parallel for if (rows * cols >= kOmpThreshold)
        for (std::ptrdiff_t r = 0; r < (std::ptrdiff_t)rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] += pb[c];
    } else {
        for (auto& v : n.value.data) v += pb[0];
    }
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    Bcast k = bcast_kind(A, B, Op::Sub);
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    n.value.requires_grad = false;
    double* y = n.value.data.data();
    const double* pb = B.data.data();
    const std::size_t rows = A.rows(), cols = A.cols();
    if (k == Bcast::Same) {
        const std::size_t m = A.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
        for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) y[i] -= pb[i];
    } else if (k == Bcast::Row) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] -= pb[c];
    } else {
        for (auto& v : n.value.data) v -= pb[0];
    }
    return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    Bcast k = bcast_kind(A, B, Op::Hadamard);
    Node n;
    n.op = Op::Hadamard;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    n.value.requires_grad = false;
    double* y = n.value.data.data();
    const double* pb = B.data.data();
    const std::size_t rows = A.rows(), cols = A.cols();
    if (k == Bcast::Same) {
        const std::size_t m = A.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
        for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) y[i] *= pb[i];
    } else if (k == Bcast::Row) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] *= pb[c];
    } else {
        for (auto& v : n.value.data) v *= pb[0];
    }
    return push(std::move(n));
}

int Tape::expo(int a) {
    Node n;
    n.op = Op::Exp;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    n.value.requires_grad = false;
    double* y = n.value.data.data();
    const std::size_t m = n.value.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) y[i] = std::exp(y[i]);
    return push(std::move(n));
}

int Tape::arctan(int a) {
    Node n;
    n.op = Op::Arctan;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    n.value.requires_grad = false;
    double* y = n.value.data.data();
    const std::size_t m = n.value.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) y[i] = std::atan(y[i]);
    return push(std::move(n));
}

int Tape::gelu(int a) {
    const Tensor& X = nodes_[a].value;
    Node n;
    n.op = Op::Gelu;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Tensor(X.rows(), X.cols());
    n.saved = Tensor(X.rows(), X.cols());  // Phi(x), reused in backward
    const double* x = X.data.data();
    double* y = n.value.data.data();
    double* phi = n.saved.data.data();
    const std::size_t m = X.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)m; ++i) {
        const double p = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
        phi[i] = p;
        y[i] = x[i] * p;
    }
    return push(std::move(n));
}

int Tape::scale(int a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.scalar = s;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    n.value.requires_grad = false;
    for (auto& v : n.value.data) v *= s;
    return push(std::move(n));
}

int Tape::sum_sq(int a) {
    const Tensor& X = nodes_[a].value;
    Node n;
    n.op = Op::SumSq;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    double s = 0.0;
    for (double v : X.data) s += v * v;  // fixed-order reduction
    n.value = Tensor::scalar(s);
    return push(std::move(n));
}

int Tape::slice_cols(int a, std::size_t c0, std::size_t c1) {
    const Tensor& X = nodes_[a].value;
    if (c0 > c1 || c1 > X.cols())
        throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," +
                         std::to_string(c1) + ") out of " + X.shape_str());
    Node n;
    n.op = Op::SliceCols;
    n.a = a;
    n.c0 = c0;
    n.needs_grad = nodes_[a].needs_grad;
    const std::size_t rows = X.rows(), w = c1 - c0, cols = X.cols();
    n.value = Tensor(rows, w);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c)
            n.value.data[r * w + c] = X.data[r * cols + c0 + c];
    return push(std::move(n));
}

int Tape::concat_cols(int a, int b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    if (A.rows() != B.rows())
        throw ShapeError(std::string("concat_cols: row counts of ") + A.shape_str() +
                         " and " + B.shape_str() + " differ");
    Node n;
    n.op = Op::ConcatCols;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    const std::size_t rows = A.rows(), ca = A.cols(), cb = B.cols();
    n.value = Tensor(rows, ca + cb);
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = n.value.data.data() + r * (ca + cb);
        const double* pa = A.data.data() + r * ca;
        const double* pb = B.data.data() + r * cb;
        for (std::size_t c = 0; c < ca; ++c) dst[c] = pa[c];
        for (std::size_t c = 0; c < cb; ++c) dst[ca + c] = pb[c];
    }
    return push(std::move(n));
}

void Tape::reset() {
    nodes_.clear();
    leaf_ids_.clear();
}

std::unordered_map<Tensor*, Tensor> Tape::backward(int loss) {
    if (loss < 0 || loss >= (int)nodes_.size())
        throw std::out_of_range("backward: bad loss node id");
    if (!nodes_[loss].value.is_scalar())
        throw ShapeError("backward: loss node must be scalar, got " +
                         nodes_[loss].value.shape_str());

    std::vector<Tensor> grads(nodes_.size());
    auto grad_of = [&](int id) -> Tensor& {
        Tensor& g = grads[id];
        if (g.numel() == 0) g = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
        return g;
    };
    grad_of(loss).data[0] = 1.0;

    for (int i = loss; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (!n.needs_grad || grads[i].numel() == 0) continue;
        const Tensor& g = grads[i];
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
                break;
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                const int m = (int)A.rows(), k = (int)A.cols(), nn = (int)B.cols();
                if (nodes_[n.a].needs_grad) {
                    Tensor& da = grad_of(n.a);
                    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, nn, 1.0,
                                g.data.data(), nn, B.data.data(), nn, 1.0,
                                da.data.data(), k);
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& db = grad_of(n.b);
                    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, nn, m, 1.0,
                                A.data.data(), k, g.data.data(), nn, 1.0,
                                db.data.data(), nn);
                }
                break;
            }
            case Op::Add:
            case Op::Sub: {
                const double sgn = (n.op == Op::Add) ? 1.0 : -1.0;
                if (nodes_[n.a].needs_grad) {
                    Tensor& da = grad_of(n.a);
                    const std::size_t m = g.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                    for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j)
                        da.data[j] += g.data[j];
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& db = grad_of(n.b);
                    const Tensor& B = nodes_[n.b].value;
                    const std::size_t rows = g.rows(), cols = g.cols();
                    if (B.same_shape(g)) {
                        for (std::size_t j = 0; j < g.numel(); ++j)
                            db.data[j] += sgn * g.data[j];
                    } else if (B.is_scalar()) {
                        double s = 0.0;
                        for (double v : g.data) s += v;
                        db.data[0] += sgn * s;
                    } else {  // row broadcast
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cols; ++c)
                                db.data[c] += sgn * g.data[r * cols + c];
                    }
                }
                break;
            }
            case Op::Hadamard: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                const std::size_t rows = g.rows(), cols = g.cols();
                if (nodes_[n.a].needs_grad) {
                    Tensor& da = grad_of(n.a);
                    if (B.same_shape(g)) {
                        const std::size_t m = g.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                        for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j)
                            da.data[j] += g.data[j] * B.data[j];
                    } else if (B.is_scalar()) {
                        for (std::size_t j = 0; j < g.numel(); ++j)
                            da.data[j] += g.data[j] * B.data[0];
                    } else {
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cols; ++c)
                                da.data[r * cols + c] += g.data[r * cols + c] * B.data[c];
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& db = grad_of(n.b);
                    if (B.same_shape(g)) {
                        for (std::size_t j = 0; j < g.numel(); ++j)
                            db.data[j] += g.data[j] * A.data[j];
                    } else if (B.is_scalar()) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < g.numel(); ++j)
                            s += g.data[j] * A.data[j];
                        db.data[0] += s;
                    } else {
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cols; ++c)
                                db.data[c] += g.data[r * cols + c] * A.data[r * cols + c];
                    }
                }
                break;
            }
            case Op::Exp: {
                Tensor& da = grad_of(n.a);
                const std::size_t m = g.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j)
                    da.data[j] += g.data[j] * n.value.data[j];
                break;
            }
            case Op::Arctan: {
                Tensor& da = grad_of(n.a);
                const Tensor& X = nodes_[n.a].value;
                const std::size_t m = g.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j)
                    da.data[j] += g.data[j] / (1.0 + X.data[j] * X.data[j]);
                break;
            }
            case Op::Gelu: {
                Tensor& da = grad_of(n.a);
                const Tensor& X = nodes_[n.a].value;
                const double* phi = n.saved.data.data();
                const std::size_t m = g.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j) {
                    const double x = X.data[j];
                    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                    da.data[j] += g.data[j] * (phi[j] + x * pdf);
                }
                break;
            }
            case Op::Scale: {
                Tensor& da = grad_of(n.a);
                for (std::size_t j = 0; j < g.numel(); ++j)
                    da.data[j] += n.scalar * g.data[j];
                break;
            }
            case Op::SumSq: {
                Tensor& da = grad_of(n.a);
                const Tensor& X = nodes_[n.a].value;
                const double g0 = g.data[0];
                const std::size_t m = X.numel();
#pragma omp parallel for if (m >= kOmpThreshold)
                for (std::ptrdiff_t j = 0; j < (std::ptrdiff_t)m; ++j)
                    da.data[j] += 2.0 * g0 * X.data[j];
                break;
            }
            case Op::SliceCols: {
                Tensor& da = grad_of(n.a);
                const std::size_t rows = g.rows(), w = g.cols(), cols = da.cols();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < w; ++c)
                        da.data[r * cols + n.c0 + c] += g.data[r * w + c];
                break;
            }
            case Op::ConcatCols: {
                const std::size_t rows = g.rows(), cols = g.cols();
                const std::size_t ca = nodes_[n.a].value.cols();
                if (nodes_[n.a].needs_grad) {
                    Tensor& da = grad_of(n.a);
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < ca; ++c)
                            da.data[r * ca + c] += g.data[r * cols + c];
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& db = grad_of(n.b);
                    const std::size_t cb = cols - ca;
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cb; ++c)
                            db.data[r * cb + c] += g.data[r * cols + ca + c];
                }
                break;
            }
        }
        if (n.op != Op::Leaf) grads[i] = Tensor();  // free as soon as consumed
    }

    std::unordered_map<Tensor*, Tensor> out;
    for (auto& [p, id] : leaf_ids_) {
        if (!p->requires_grad) continue;
        if (grads[id].numel() == 0)
            out.emplace(p, Tensor(p->rows(), p->cols()));
        else
            out.emplace(p, std::move(grads[id]));
    }
    reset();
    return out;
}

}  // namespace invrom
