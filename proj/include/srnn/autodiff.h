#ifndef SRNN_AUTODIFF_H
#define SRNN_AUTODIFF_H

#include <cstdint>
#include <span>
#include <vector>

#include "srnn/lattice.h"

namespace srnn::ad {

// Dense tensor of 64-bit reals, row-major, rank <= 2 in practice.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    static Tensor scalar(double x) { return {{1}, {x}}; }
    static Tensor zeros(std::vector<int> shape);
    static Tensor vector(std::vector<double> values);

    Tensor(std::vector<int> s, std::vector<double> values)
        : shape(std::move(s)), v(std::move(values)) {}

    int numel() const { return static_cast<int>(v.size()); }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }
    bool is_scalar() const { return v.size() == 1; }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool finite() const;

    double& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols() + j]; }
    double operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols() + j]; }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
};

using VarId = int32_t;

// Test hook: when set, the tanh pullback is deliberately wrong so the
// gradient checker's failure path can be exercised.
extern bool corrupt_tanh_pullback_for_test;

// Record of primitive applications in topological order. Values are computed
// eagerly on construction; one backward() pass per tape.
class Tape {
public:
    // Leaf node (parameter or constant input).
    VarId input(Tensor t);

    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId emul(VarId a, VarId b);
    VarId matvec(VarId w, VarId x);            // (r x c) * (c) -> (r)
    VarId matmul(VarId a, VarId b);            // (r x k) * (k x c) -> (r x c)
    VarId transpose(VarId a);
    VarId concat(std::span<const VarId> parts); // vectors -> vector
    VarId slice(VarId a, int start, int len);   // on flat storage -> vector
    VarId sigmoid(VarId a);
    VarId tanh(VarId a);
    VarId exp(VarId a);
    VarId log(VarId a);
    VarId logsumexp(VarId a);                   // all elements -> scalar (max-shifted)
    VarId max_reduce(VarId a);                  // -> scalar; argmax ties to lowest index
    VarId dot(VarId a, VarId b);                // vectors -> scalar
    VarId broadcast_add(VarId s, VarId a);      // scalar + tensor
    VarId row_broadcast_add(VarId m, VarId r);  // (n x c) + (c) per row
    VarId scale(VarId a, double c);             // constant scale
    VarId dropout(VarId a, Tensor mask);        // elementwise by constant mask

    int argmax_of(VarId max_node) const;        // index stored by max_reduce

    // Reverse pass from a scalar root; gradients accumulate additively.
    // A tape can be differentiated once.
    void backward(VarId root);

    const Tensor& value(VarId id) const { return nodes_[id].value; }
    // Valid after backward(); zero tensor for nodes the root does not reach.
    const Tensor& grad(VarId id) const;

    size_t num_nodes() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        kInput, kAdd, kSub, kEmul, kMatVec, kMatMul, kTranspose, kConcat,
        kSlice, kSigmoid, kTanh, kExp, kLog, kLogSumExp, kMaxReduce, kDot,
        kBcastAdd, kRowBcastAdd, kScale, kDropout,
    };

    struct Node {
        Op op;
        VarId a = -1, b = -1;
        int i0 = 0, i1 = 0;          // slice start/len, argmax index
        double c = 0.0;              // scale factor
        std::vector<VarId> parts;    // concat operands
        Tensor value;
        Tensor aux;                  // dropout mask
    };

    VarId push(Node n);
    const Tensor& val(VarId id) const { return nodes_[id].value; }
    Tensor& grad_buf(VarId id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool backward_done_ = false;
};

// In-range relative error used by all gradient checks:
// |a - b| / max(|a|, |b|, floor).
double rel_error(double a, double b, double floor = 1e-6);

}  // namespace srnn::ad

#endif
