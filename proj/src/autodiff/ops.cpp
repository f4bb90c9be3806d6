#include "tepinn/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>

#include "tepinn/error.hpp"
#include "tepinn/kernels/kernels.hpp"

namespace tepinn::ad {

namespace {

enum class Bcast { Same, Row, Col, Scalar };

Bcast classify(const Tensor& a, const Tensor& b, std::string_view op) {
    if (a.shape() == b.shape()) return Bcast::Same;
    if (b.size() == 1) return Bcast::Scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
    if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::Col;
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

inline std::size_t bindex(Bcast kind, std::size_t i, std::size_t ncols) {
    switch (kind) {
        case Bcast::Same: return i;
        case Bcast::Row: return i % ncols;
        case Bcast::Col: return i / ncols;
        case Bcast::Scalar: return 0;
    }
    return 0;
}

void require_same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw Error(ErrorKind::InvalidArgument, "operands live on different tapes");
}

// Elementwise binary op with partial derivatives da(x, y, out) and db(x, y, out).
template <class F, class DA, class DB>
Var binary(std::string_view op, Var a, Var b, F f, DA da, DB db) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const Bcast kind = classify(av, bv, op);
    const std::size_t nc = av.cols();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[bindex(kind, i, nc)]);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(op, std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        const Tensor& o = t.value(self);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t j = bindex(kind, i, nc);
                ga[i] += g[i] * da(x[i], y[j], o[i]);
            }
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t j = bindex(kind, i, nc);
                gb[j] += g[i] * db(x[i], y[j], o[i]);
            }
        }
    });
}

// Elementwise unary op with derivative d(x, out).
template <class F, class D>
Var unary(std::string_view op, Var a, F f, D d) {
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    const std::size_t ia = a.id();
    return a.tape().record(op, std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        const Tensor& o = t.value(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * d(x[i], o[i]);
    });
}

}  // namespace

Var add(Var a, Var b) {
    require_same_tape(a, b);
    if (a.shape() == b.shape()) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        Tensor out(av.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record("add", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const auto& k = kernels::active();
            if (t.requires_grad(ia)) k.axpy(1.0, g.ptr(), t.grad(ia).ptr(), g.size());
            if (t.requires_grad(ib)) k.axpy(1.0, g.ptr(), t.grad(ib).ptr(), g.size());
        });
    }
    return binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    if (a.shape() == b.shape()) {
        const auto& k = kernels::active();
        Tensor out(a.value().shape());
        k.hadamard(a.value().ptr(), b.value().ptr(), out.ptr(), out.size());
        const std::size_t ia = a.id(), ib = b.id();
        return a.tape().record("mul", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
            const auto& kk = kernels::active();
            const Tensor& g = t.grad(self);
            if (t.requires_grad(ia)) kk.hadamard_acc(g.ptr(), t.value(ib).ptr(), t.grad(ia).ptr(), g.size());
            if (t.requires_grad(ib)) kk.hadamard_acc(g.ptr(), t.value(ia).ptr(), t.grad(ib).ptr(), g.size());
        });
    }
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
    return binary(
        "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double, double y, double o) { return -o / y; });
}

Var broadcast_add(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "broadcast_add: " + shape_string(a.shape()) + " vs row " +
                                                  shape_string(row.shape()));
    }
    return add(a, row);
}

Var neg(Var a) {
    return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(Var a, double s) {
    return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
    return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var div_scalar(Var a, double s) {
    if (s == 0.0) throw Error(ErrorKind::InvalidArgument, "div_scalar by zero");
    return unary("div_scalar", a, [s](double x) { return x / s; }, [s](double, double) { return 1.0 / s; });
}

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (bv.rows() != k) {
        throw Error(ErrorKind::ShapeMismatch,
                    "matmul: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    Tensor out({m, n});
    kernels::active().gemm_nn(av.ptr(), bv.ptr(), out.ptr(), m, k, n, false);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("matmul", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
        const auto& kk = kernels::active();
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) kk.gemm_nt(g.ptr(), t.value(ib).ptr(), t.grad(ia).ptr(), m, n, k, true);
        if (t.requires_grad(ib)) kk.gemm_tn(t.value(ia).ptr(), g.ptr(), t.grad(ib).ptr(), k, m, n, true);
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({n, m});
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) out[c * m + r] = av[r * n + c];
    const std::size_t ia = a.id();
    return a.tape().record("transpose", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += g[c * m + r];
    });
}

Var reshape(Var a, Shape shape) {
    Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
    const std::size_t ia = a.id();
    return a.tape().record("reshape", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        kernels::active().axpy(1.0, g.ptr(), t.grad(ia).ptr(), g.size());
    });
}

Var concat(std::span<const Var> parts, int axis) {
    if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "concat of zero tensors");
    if (axis != 0 && axis != 1) throw Error(ErrorKind::InvalidArgument, "concat axis must be 0 or 1");
    Tape& tape = parts[0].tape();
    std::vector<std::size_t> ids;
    std::vector<std::size_t> offsets;
    std::size_t rows = parts[0].rows(), cols = parts[0].cols();
    std::size_t total = 0;
    for (const Var& p : parts) {
        require_same_tape(parts[0], p);
        if (axis == 0 && p.cols() != cols) {
            throw Error(ErrorKind::ShapeMismatch, "concat rows: " + shape_string(parts[0].shape()) + " vs " +
                                                      shape_string(p.shape()));
        }
        if (axis == 1 && p.rows() != rows) {
            throw Error(ErrorKind::ShapeMismatch, "concat cols: " + shape_string(parts[0].shape()) + " vs " +
                                                      shape_string(p.shape()));
        }
        ids.push_back(p.id());
        offsets.push_back(total);
        total += axis == 0 ? p.rows() : p.cols();
    }
    if (axis == 0) rows = total; else cols = total;
    Tensor out({rows, cols});
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& v = parts[k].value();
        for (std::size_t r = 0; r < v.rows(); ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) {
                if (axis == 0) out(offsets[k] + r, c) = v(r, c);
                else out(r, offsets[k] + c) = v(r, c);
            }
    }
    return tape.record("concat", std::move(out), ids, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!t.requires_grad(ids[k])) continue;
            Tensor& gp = t.grad(ids[k]);
            const std::size_t pr = gp.rows(), pc = gp.cols();
            for (std::size_t r = 0; r < pr; ++r)
                for (std::size_t c = 0; c < pc; ++c)
                    gp[r * pc + c] += axis == 0 ? g(offsets[k] + r, c) : g(r, offsets[k] + c);
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = a.value();
    if (begin >= end || end > av.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                                                  ") of " + shape_string(av.shape()));
    }
    const std::size_t n = av.cols();
    Tensor out({end - begin, n});
    std::copy(av.ptr() + begin * n, av.ptr() + end * n, out.ptr());
    const std::size_t ia = a.id();
    return a.tape().record("slice_rows", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        kernels::active().axpy(1.0, g.ptr(), t.grad(ia).ptr() + begin * n, g.size());
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = a.value();
    if (begin >= end || end > av.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                                                  ") of " + shape_string(av.shape()));
    }
    const std::size_t m = av.rows(), n = av.cols(), w = end - begin;
    Tensor out({m, w});
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < w; ++c) out[r * w + c] = av[r * n + begin + c];
    const std::size_t ia = a.id();
    return a.tape().record("slice_cols", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < w; ++c) ga[r * n + begin + c] += g[r * w + c];
    });
}

Var sum(Var a) {
    const Tensor& av = a.value();
    double s = 0.0;
    for (double v : av.data()) s += v;
    const std::size_t ia = a.id();
    return a.tape().record("sum", Tensor::scalar(s), {ia}, [=](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (double& v : t.grad(ia).data()) v += g;
    });
}

Var mean(Var a) {
    const std::size_t n = a.value().size();
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const std::size_t ia = a.id();
    return a.tape().record("mean", Tensor::scalar(s / static_cast<double>(n)), {ia}, [=](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(n);
        for (double& v : t.grad(ia).data()) v += g;
    });
}

Var sum_cols(Var a) {
    const Tensor& av = a.value();
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({m, 1});
    for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += av[r * n + c];
        out[r] = s;
    }
    const std::size_t ia = a.id();
    return a.tape().record("sum_cols", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += g[r];
    });
}

Var relu(Var a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sqrt(Var a) {
    return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var a) {
    return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sin(Var a) {
    return unary("sin", a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var cos(Var a) {
    return unary("cos", a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Var asin(Var a) {
    return unary("asin", a, [](double x) { return std::asin(x); },
                 [](double x, double) { return 1.0 / std::sqrt(std::max(1.0 - x * x, 1e-12)); });
}

Var atan2(Var y, Var x) {
    if (y.shape() != x.shape()) {
        throw Error(ErrorKind::ShapeMismatch, "atan2: " + shape_string(y.shape()) + " vs " + shape_string(x.shape()));
    }
    return binary(
        "atan2", y, x, [](double yv, double xv) { return std::atan2(yv, xv); },
        [](double yv, double xv, double) { return xv / (xv * xv + yv * yv); },
        [](double yv, double xv, double) { return -yv / (xv * xv + yv * yv); });
}

Var clamp(Var a, double lo, double hi) {
    return unary("clamp", a, [=](double x) { return std::clamp(x, lo, hi); },
                 [=](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var softmax_rows(Var a) {
    const Tensor& av = a.value();
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out(av.shape());
    for (std::size_t r = 0; r < m; ++r) {
        const double* x = av.ptr() + r * n;
        double* y = out.ptr() + r * n;
        const double mx = *std::max_element(x, x + n);
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            y[c] = std::exp(x[c] - mx);
            s += y[c];
        }
        for (std::size_t c = 0; c < n; ++c) y[c] /= s;
    }
    const std::size_t ia = a.id();
    return a.tape().record("softmax_rows", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad(ia);
        const auto& k = kernels::active();
        for (std::size_t r = 0; r < m; ++r) {
            const double* gr = g.ptr() + r * n;
            const double* yr = y.ptr() + r * n;
            const double s = k.dot(gr, yr, n);
            double* out_r = ga.ptr() + r * n;
            for (std::size_t c = 0; c < n; ++c) out_r[c] += yr[c] * (gr[c] - s);
        }
    });
}

Var layer_norm_rows(Var a, double eps) {
    const Tensor& av = a.value();
    const std::size_t m = av.rows(), n = av.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    Tensor out(av.shape());
    std::vector<double> inv_std(m);
    for (std::size_t r = 0; r < m; ++r) {
        const double* x = av.ptr() + r * n;
        // shifted mean: exact for constant rows
        double shift = 0.0;
        for (std::size_t c = 0; c < n; ++c) shift += x[c] - x[0];
        const double mu = x[0] + shift * inv_n;
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (x[c] - mu) * (x[c] - mu);
        var *= inv_n;
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = (x[c] - mu) * inv_std[r];
    }
    const std::size_t ia = a.id();
    return a.tape().record("layer_norm_rows", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r) {
            const double* gr = g.ptr() + r * n;
            const double* yr = y.ptr() + r * n;
            double g_mean = 0.0, gy_mean = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                g_mean += gr[c];
                gy_mean += gr[c] * yr[c];
            }
            g_mean *= inv_n;
            gy_mean *= inv_n;
            for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += inv_std[r] * (gr[c] - g_mean - yr[c] * gy_mean);
        }
    });
}

}  // namespace tepinn::ad
