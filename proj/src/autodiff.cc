#include "srnn/autodiff.h"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace srnn::ad {

bool corrupt_tanh_pullback_for_test = false;

Tensor Tensor::zeros(std::vector<int> shape) {
    size_t n = 1;
    for (int e : shape) {
        if (e < 1) throw Error("tensor extents must be positive");
        n *= static_cast<size_t>(e);
    }
    return {std::move(shape), std::vector<double>(n, 0.0)};
}

Tensor Tensor::vector(std::vector<double> values) {
    int n = static_cast<int>(values.size());
    return {{n}, std::move(values)};
}

bool Tensor::finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

VarId Tape::push(Node n) {
    if (!n.value.finite()) throw Error("non-finite value produced by tape operation");
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::input(Tensor t) {
    if (t.numel() == 0) throw Error("empty tensor input");
    Node n;
    n.op = Op::kInput;
    n.value = std::move(t);
    return push(std::move(n));
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) throw Error(std::string(op) + ": shape mismatch");
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor &ta = val(a), &tb = val(b);
    require_same_shape(ta, tb, "add");
    Node n;
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    n.value = ta;
    for (int i = 0; i < n.value.numel(); ++i) n.value.v[i] += tb.v[i];
    return push(std::move(n));
}

VarId Tape::sub(VarId a, VarId b) {
    const Tensor &ta = val(a), &tb = val(b);
    require_same_shape(ta, tb, "sub");
    Node n;
    n.op = Op::kSub;
    n.a = a;
    n.b = b;
    n.value = ta;
    for (int i = 0; i < n.value.numel(); ++i) n.value.v[i] -= tb.v[i];
    return push(std::move(n));
}

VarId Tape::emul(VarId a, VarId b) {
    const Tensor &ta = val(a), &tb = val(b);
    require_same_shape(ta, tb, "emul");
    Node n;
    n.op = Op::kEmul;
    n.a = a;
    n.b = b;
    n.value = ta;
    for (int i = 0; i < n.value.numel(); ++i) n.value.v[i] *= tb.v[i];
    return push(std::move(n));
}

VarId Tape::matvec(VarId w, VarId x) {
    const Tensor &tw = val(w), &tx = val(x);
    if (tw.shape.size() != 2 || tw.cols() != tx.numel())
        throw Error("matvec: shape mismatch");
    Node n;
    n.op = Op::kMatVec;
    n.a = w;
    n.b = x;
    n.value = Tensor::zeros({tw.rows()});
    const int r = tw.rows(), c = tw.cols();
    for (int i = 0; i < r; ++i) {
        const double* row = &tw.v[static_cast<size_t>(i) * c];
        double acc = 0.0;
        for (int j = 0; j < c; ++j) acc += row[j] * tx.v[j];
        n.value.v[i] = acc;
    }
    return push(std::move(n));
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.cols() != tb.rows())
        throw Error("matmul: shape mismatch");
    const int r = ta.rows(), k = ta.cols(), c = tb.cols();
    Node n;
    n.op = Op::kMatMul;
    n.a = a;
    n.b = b;
    n.value = Tensor::zeros({r, c});
    for (int i = 0; i < r; ++i) {
        double* out = &n.value.v[static_cast<size_t>(i) * c];
        for (int p = 0; p < k; ++p) {
            double aik = ta(i, p);
            const double* brow = &tb.v[static_cast<size_t>(p) * c];
            for (int j = 0; j < c; ++j) out[j] += aik * brow[j];
        }
    }
    return push(std::move(n));
}

VarId Tape::transpose(VarId a) {
    const Tensor& ta = val(a);
    if (ta.shape.size() != 2) throw Error("transpose: rank-2 tensor required");
    Node n;
    n.op = Op::kTranspose;
    n.a = a;
    n.value = Tensor::zeros({ta.cols(), ta.rows()});
    for (int i = 0; i < ta.rows(); ++i)
        for (int j = 0; j < ta.cols(); ++j) n.value(j, i) = ta(i, j);
    return push(std::move(n));
}

VarId Tape::concat(std::span<const VarId> parts) {
    if (parts.empty()) throw Error("concat: no operands");
    Node n;
    n.op = Op::kConcat;
    n.parts.assign(parts.begin(), parts.end());
    int total = 0;
    for (VarId p : parts) total += val(p).numel();
    n.value = Tensor::zeros({total});
    int off = 0;
    for (VarId p : parts) {
        const Tensor& tp = val(p);
        std::copy(tp.v.begin(), tp.v.end(), n.value.v.begin() + off);
        off += tp.numel();
    }
    return push(std::move(n));
}

VarId Tape::slice(VarId a, int start, int len) {
    const Tensor& ta = val(a);
    if (start < 0 || len < 1 || start + len > ta.numel())
        throw Error("slice: range out of bounds");
    Node n;
    n.op = Op::kSlice;
    n.a = a;
    n.i0 = start;
    n.i1 = len;
    n.value = Tensor::zeros({len});
    std::copy(ta.v.begin() + start, ta.v.begin() + start + len, n.value.v.begin());
    return push(std::move(n));
}

VarId Tape::sigmoid(VarId a) {
    Node n;
    n.op = Op::kSigmoid;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(std::move(n));
}

VarId Tape::tanh(VarId a) {
    Node n;
    n.op = Op::kTanh;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.v) x = std::tanh(x);
    return push(std::move(n));
}

VarId Tape::exp(VarId a) {
    Node n;
    n.op = Op::kExp;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.v) x = std::exp(x);
    return push(std::move(n));
}

VarId Tape::log(VarId a) {
    Node n;
    n.op = Op::kLog;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.v) x = std::log(x);
    return push(std::move(n));
}

VarId Tape::logsumexp(VarId a) {
    const Tensor& ta = val(a);
    double m = ta.v[0];
    for (double x : ta.v) m = std::max(m, x);
    double s = 0.0;
    for (double x : ta.v) s += std::exp(x - m);
    Node n;
    n.op = Op::kLogSumExp;
    n.a = a;
    n.value = Tensor::scalar(m + std::log(s));
    return push(std::move(n));
}

VarId Tape::max_reduce(VarId a) {
    const Tensor& ta = val(a);
    int arg = 0;
    for (int i = 1; i < ta.numel(); ++i)
        if (ta.v[i] > ta.v[arg]) arg = i;
    Node n;
    n.op = Op::kMaxReduce;
    n.a = a;
    n.i0 = arg;
    n.value = Tensor::scalar(ta.v[arg]);
    return push(std::move(n));
}

int Tape::argmax_of(VarId max_node) const {
    assert(nodes_[max_node].op == Op::kMaxReduce);
    return nodes_[max_node].i0;
}

VarId Tape::dot(VarId a, VarId b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (ta.numel() != tb.numel()) throw Error("dot: length mismatch");
    double acc = 0.0;
    for (int i = 0; i < ta.numel(); ++i) acc += ta.v[i] * tb.v[i];
    Node n;
    n.op = Op::kDot;
    n.a = a;
    n.b = b;
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
}

VarId Tape::broadcast_add(VarId s, VarId a) {
    const Tensor &ts = val(s), &ta = val(a);
    if (!ts.is_scalar()) throw Error("broadcast_add: first operand must be scalar");
    Node n;
    n.op = Op::kBcastAdd;
    n.a = s;
    n.b = a;
    n.value = ta;
    for (double& x : n.value.v) x += ts.v[0];
    return push(std::move(n));
}

VarId Tape::row_broadcast_add(VarId m, VarId r) {
    const Tensor &tm = val(m), &tr = val(r);
    if (tm.shape.size() != 2 || tm.cols() != tr.numel())
        throw Error("row_broadcast_add: shape mismatch");
    Node n;
    n.op = Op::kRowBcastAdd;
    n.a = m;
    n.b = r;
    n.value = tm;
    for (int i = 0; i < tm.rows(); ++i)
        for (int j = 0; j < tm.cols(); ++j) n.value(i, j) += tr.v[j];
    return push(std::move(n));
}

VarId Tape::scale(VarId a, double c) {
    Node n;
    n.op = Op::kScale;
    n.a = a;
    n.c = c;
    n.value = val(a);
    for (double& x : n.value.v) x *= c;
    return push(std::move(n));
}

VarId Tape::dropout(VarId a, Tensor mask) {
    const Tensor& ta = val(a);
    require_same_shape(ta, mask, "dropout");
    Node n;
    n.op = Op::kDropout;
    n.a = a;
    n.value = ta;
    for (int i = 0; i < ta.numel(); ++i) n.value.v[i] *= mask.v[i];
    n.aux = std::move(mask);
    return push(std::move(n));
}

Tensor& Tape::grad_buf(VarId id) {
    Tensor& g = grads_[id];
    if (g.v.empty()) g = Tensor::zeros(nodes_[id].value.shape);
    return g;
}

const Tensor& Tape::grad(VarId id) const {
    static const Tensor kEmpty;
    if (!backward_done_) throw Error("grad() before backward()");
    if (grads_[id].v.empty()) {
        // Unreached node: zero gradient of the right shape, cached lazily.
        const_cast<Tape*>(this)->grads_[id] = Tensor::zeros(nodes_[id].value.shape);
    }
    (void)kEmpty;
    return grads_[id];
}

void Tape::backward(VarId root) {
    if (backward_done_) throw Error("tape already differentiated");
    if (!val(root).is_scalar()) throw Error("backward root must be scalar");
    backward_done_ = true;
    grads_.resize(nodes_.size());
    grad_buf(root).v[0] = 1.0;

    for (VarId id = root; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads_[id];
        if (g.v.empty()) continue;  // not reached from the root
        switch (n.op) {
            case Op::kInput:
                break;
            case Op::kAdd: {
                Tensor &ga = grad_buf(n.a), &gb = grad_buf(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    ga.v[i] += g.v[i];
                    gb.v[i] += g.v[i];
                }
                break;
            }
            case Op::kSub: {
                Tensor &ga = grad_buf(n.a), &gb = grad_buf(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    ga.v[i] += g.v[i];
                    gb.v[i] -= g.v[i];
                }
                break;
            }
            case Op::kEmul: {
                const Tensor &va = val(n.a), &vb = val(n.b);
                Tensor &ga = grad_buf(n.a), &gb = grad_buf(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    ga.v[i] += g.v[i] * vb.v[i];
                    gb.v[i] += g.v[i] * va.v[i];
                }
                break;
            }
            case Op::kMatVec: {
                const Tensor &w = val(n.a), &x = val(n.b);
                Tensor &gw = grad_buf(n.a), &gx = grad_buf(n.b);
                const int r = w.rows(), c = w.cols();
                for (int i = 0; i < r; ++i) {
                    double gi = g.v[i];
                    if (gi == 0.0) continue;
                    double* gwrow = &gw.v[static_cast<size_t>(i) * c];
                    const double* wrow = &w.v[static_cast<size_t>(i) * c];
                    for (int j = 0; j < c; ++j) {
                        gwrow[j] += gi * x.v[j];
                        gx.v[j] += gi * wrow[j];
                    }
                }
                break;
            }
            case Op::kMatMul: {
                const Tensor &a = val(n.a), &b = val(n.b);
                Tensor &ga = grad_buf(n.a), &gb = grad_buf(n.b);
                const int r = a.rows(), k = a.cols(), c = b.cols();
                // ga += g * b^T ; gb += a^T * g
                for (int i = 0; i < r; ++i) {
                    for (int p = 0; p < k; ++p) {
                        const double* grow = &g.v[static_cast<size_t>(i) * c];
                        const double* brow = &b.v[static_cast<size_t>(p) * c];
                        double acc = 0.0;
                        for (int j = 0; j < c; ++j) acc += grow[j] * brow[j];
                        ga(i, p) += acc;
                    }
                }
                for (int p = 0; p < k; ++p) {
                    for (int i = 0; i < r; ++i) {
                        double aip = a(i, p);
                        if (aip == 0.0) continue;
                        const double* grow = &g.v[static_cast<size_t>(i) * c];
                        double* gbrow = &gb.v[static_cast<size_t>(p) * c];
                        for (int j = 0; j < c; ++j) gbrow[j] += aip * grow[j];
                    }
                }
                break;
            }
            case Op::kTranspose: {
                Tensor& ga = grad_buf(n.a);
                const int r = ga.rows(), c = ga.cols();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) ga(i, j) += g(j, i);
                break;
            }
            case Op::kConcat: {
                int off = 0;
                for (VarId p : n.parts) {
                    Tensor& gp = grad_buf(p);
                    for (int i = 0; i < gp.numel(); ++i) gp.v[i] += g.v[off + i];
                    off += gp.numel();
                }
                break;
            }
            case Op::kSlice: {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < n.i1; ++i) ga.v[n.i0 + i] += g.v[i];
                break;
            }
            case Op::kSigmoid: {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.numel(); ++i) {
                    double y = n.value.v[i];
                    ga.v[i] += g.v[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::kTanh: {
                Tensor& ga = grad_buf(n.a);
                double fault = corrupt_tanh_pullback_for_test ? 1.001 : 1.0;
                for (int i = 0; i < g.numel(); ++i) {
                    double y = n.value.v[i];
                    ga.v[i] += fault * g.v[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::kExp: {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i] * n.value.v[i];
                break;
            }
            case Op::kLog: {
                const Tensor& x = val(n.a);
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i] / x.v[i];
                break;
            }
            case Op::kLogSumExp: {
                const Tensor& x = val(n.a);
                Tensor& ga = grad_buf(n.a);
                double y = n.value.v[0], gs = g.v[0];
                for (int i = 0; i < x.numel(); ++i) ga.v[i] += gs * std::exp(x.v[i] - y);
                break;
            }
            case Op::kMaxReduce: {
                grad_buf(n.a).v[n.i0] += g.v[0];
                break;
            }
            case Op::kDot: {
                const Tensor &a = val(n.a), &b = val(n.b);
                Tensor &ga = grad_buf(n.a), &gb = grad_buf(n.b);
                double gs = g.v[0];
                for (int i = 0; i < a.numel(); ++i) {
                    ga.v[i] += gs * b.v[i];
                    gb.v[i] += gs * a.v[i];
                }
                break;
            }
            case Op::kBcastAdd: {
                Tensor &gs = grad_buf(n.a), &ga = grad_buf(n.b);
                for (int i = 0; i < g.numel(); ++i) {
                    gs.v[0] += g.v[i];
                    ga.v[i] += g.v[i];
                }
                break;
            }
            case Op::kRowBcastAdd: {
                Tensor &gm = grad_buf(n.a), &gr = grad_buf(n.b);
                const int r = n.value.rows(), c = n.value.cols();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) {
                        double gv = g(i, j);
                        gm(i, j) += gv;
                        gr.v[j] += gv;
                    }
                break;
            }
            case Op::kScale: {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.numel(); ++i) ga.v[i] += n.c * g.v[i];
                break;
            }
            case Op::kDropout: {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i] * n.aux.v[i];
                break;
            }
        }
    }
}

double rel_error(double a, double b, double floor) {
    double denom = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / denom;
}

}  // namespace srnn::ad
