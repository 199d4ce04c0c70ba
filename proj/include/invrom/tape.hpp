#pragma once

#include <unordered_map>
#include <vector>

#include "invrom/tensor.hpp"

namespace invrom {

enum class Op {
    Leaf,       // learnable parameter (external storage)
    Const,      // value without gradient
    MatMul,
    Add,        // rhs may broadcast: same shape, [1 x cols] row, or scalar
    Sub,
    Hadamard,
    Exp,
    Arctan,
    Gelu,       // exact erf form
    Scale,      // multiply by compile-time scalar
    SumSq,      // sum of squared entries -> 1x1
    SliceCols,  // contiguous column range
    ConcatCols, // [a | b]
};

const char* op_name(Op op);

/// Exact GeLU: x * Phi(x) with Phi the standard normal CDF via std::erf.
double gelu_scalar(double x);

/// Append-only record of one forward computation. Node inputs always precede
/// the node, so a single reverse sweep computes all adjoints.
class Tape {
public:
    struct Node {
        Op op;
        int a = -1, b = -1;
        Tensor value;
        Tensor saved;        // op-specific (Gelu: Phi(x))
        double scalar = 0.0; // Scale
        std::size_t c0 = 0;  // SliceCols begin
        Tensor* param = nullptr;
        bool needs_grad = false;
    };

    /// Register a learnable parameter. Repeated registration of the same
    /// tensor returns the same node, so gradients from every use accumulate
    /// (this is what ties encoder and decoder weights together).
    int leaf(Tensor* p);
    int constant(Tensor v);

    int matmul(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int hadamard(int a, int b);
    int expo(int a);
    int arctan(int a);
    int gelu(int a);
    int scale(int a, double s);
    int sum_sq(int a);
    int slice_cols(int a, std::size_t c0, std::size_t c1);
    int concat_cols(int a, int b);

    const Tensor& val(int id) const { return nodes_[id].value; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss node. Returns d loss / d p for every
    /// registered parameter with requires_grad, then clears the tape.
    std::unordered_map<Tensor*, Tensor> backward(int loss);

    /// Drop all recorded nodes (also done by backward()).
    void reset();

private:
    int push(Node n);
    std::vector<Node> nodes_;
    std::unordered_map<Tensor*, int> leaf_ids_;
};

}  // namespace invrom
