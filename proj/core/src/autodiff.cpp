#include "jcm/autodiff.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace jcm::ad {

Value Tape::push(Mat val, std::function<void(Tape&)> back) {
    Node n;
    n.val = std::move(val);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Mat m) { return push(std::move(m), {}); }

Value Tape::param(ParamStore& store, const std::string& name) {
    Value v = push(store.value(name), {});
    nodes_[v.id].store = &store;
    nodes_[v.id].pname = name;
    return v;
}

Value Tape::affine(Value x, Value w, Value b) {
    const Mat& X = value(x);
    const Mat& W = value(w);
    const Mat& B = value(b);
    if (X.cols != W.rows || B.rows != 1 || B.cols != W.cols)
        throw std::invalid_argument("affine: shape mismatch");
    Mat Y(X.rows, W.cols);
    for (int r = 0; r < X.rows; ++r) {
        const double* xr = &X(r, 0);
        double* yr = &Y(r, 0);
        for (int c = 0; c < W.cols; ++c) yr[c] = B(0, c);
        for (int k = 0; k < X.cols; ++k) {
            const double xv = xr[k];
            const double* wk = &W(k, 0);
            for (int c = 0; c < W.cols; ++c) yr[c] += xv * wk[c];
        }
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id, wi = w.id, bi = b.id;
    nodes_[oi].back = [oi, xi, wi, bi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        const Mat& W = t.nodes_[wi].val;
        Mat& dX = t.adj(xi);
        Mat& dW = t.adj(wi);
        Mat& dB = t.adj(bi);
        for (int r = 0; r < G.rows; ++r) {
            const double* gr = &G(r, 0);
            const double* xr = &X(r, 0);
            double* dxr = &dX(r, 0);
            for (int k = 0; k < X.cols; ++k) {
                const double* wk = &W(k, 0);
                double s = 0.0;
                for (int c = 0; c < G.cols; ++c) s += gr[c] * wk[c];
                dxr[k] += s;
            }
            for (int k = 0; k < X.cols; ++k) {
                const double xv = xr[k];
                double* dwk = &dW(k, 0);
                for (int c = 0; c < G.cols; ++c) dwk[c] += xv * gr[c];
            }
            for (int c = 0; c < G.cols; ++c) dB(0, c) += gr[c];
        }
    };
    return out;
}

Value Tape::relu(Value x) {
    const Mat& X = value(x);
    Mat Y = X;
    for (auto& v : Y.data) v = v > 0.0 ? v : 0.0;
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i)
            if (X.data[i] > 0.0) dX.data[i] += G.data[i];
    };
    return out;
}

Value Tape::row_softmax(Value x) {
    const Mat& X = value(x);
    Mat Y(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        double mx = X(r, 0);
        for (int c = 1; c < X.cols; ++c) mx = std::max(mx, X(r, c));
        double sum = 0.0;
        for (int c = 0; c < X.cols; ++c) {
            Y(r, c) = std::exp(X(r, c) - mx);
            sum += Y(r, c);
        }
        for (int c = 0; c < X.cols; ++c) Y(r, c) /= sum;
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& Y = t.nodes_[oi].val;
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < G.cols; ++c) dot += G(r, c) * Y(r, c);
            for (int c = 0; c < G.cols; ++c) dX(r, c) += Y(r, c) * (G(r, c) - dot);
        }
    };
    return out;
}

Value Tape::log_elem(Value x) {
    const Mat& X = value(x);
    Mat Y(X.rows, X.cols);
    for (int i = 0; i < X.size(); ++i) Y.data[i] = std::log(X.data[i]);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i) dX.data[i] += G.data[i] / X.data[i];
    };
    return out;
}

Value Tape::clamp_min(Value x, double lo) {
    const Mat& X = value(x);
    Mat Y = X;
    for (auto& v : Y.data) v = v < lo ? lo : v;
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi, lo](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i)
            if (X.data[i] > lo) dX.data[i] += G.data[i];
    };
    return out;
}

Value Tape::add(Value a, Value b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (!A.same_shape(B)) throw std::invalid_argument("add: shape mismatch");
    Mat Y = A;
    for (int i = 0; i < Y.size(); ++i) Y.data[i] += B.data[i];
    Value out = push(std::move(Y), {});
    const int oi = out.id, ai = a.id, bi = b.id;
    nodes_[oi].back = [oi, ai, bi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dA = t.adj(ai);
        Mat& dB = t.adj(bi);
        for (int i = 0; i < G.size(); ++i) {
            dA.data[i] += G.data[i];
            dB.data[i] += G.data[i];
        }
    };
    return out;
}

Value Tape::sub(Value a, Value b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (!A.same_shape(B)) throw std::invalid_argument("sub: shape mismatch");
    Mat Y = A;
    for (int i = 0; i < Y.size(); ++i) Y.data[i] -= B.data[i];
    Value out = push(std::move(Y), {});
    const int oi = out.id, ai = a.id, bi = b.id;
    nodes_[oi].back = [oi, ai, bi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dA = t.adj(ai);
        Mat& dB = t.adj(bi);
        for (int i = 0; i < G.size(); ++i) {
            dA.data[i] += G.data[i];
            dB.data[i] -= G.data[i];
        }
    };
    return out;
}

Value Tape::mul(Value a, Value b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (!A.same_shape(B)) throw std::invalid_argument("mul: shape mismatch");
    Mat Y = A;
    for (int i = 0; i < Y.size(); ++i) Y.data[i] *= B.data[i];
    Value out = push(std::move(Y), {});
    const int oi = out.id, ai = a.id, bi = b.id;
    nodes_[oi].back = [oi, ai, bi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& A = t.nodes_[ai].val;
        const Mat& B = t.nodes_[bi].val;
        Mat& dA = t.adj(ai);
        Mat& dB = t.adj(bi);
        for (int i = 0; i < G.size(); ++i) {
            dA.data[i] += G.data[i] * B.data[i];
            dB.data[i] += G.data[i] * A.data[i];
        }
    };
    return out;
}

Value Tape::square(Value x) {
    const Mat& X = value(x);
    Mat Y = X;
    for (auto& v : Y.data) v *= v;
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i) dX.data[i] += 2.0 * G.data[i] * X.data[i];
    };
    return out;
}

Value Tape::add_const(Value x, Mat c) {
    const Mat& X = value(x);
    if (!X.same_shape(c)) throw std::invalid_argument("add_const: shape mismatch");
    Mat Y = X;
    for (int i = 0; i < Y.size(); ++i) Y.data[i] += c.data[i];
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i) dX.data[i] += G.data[i];
    };
    return out;
}

Value Tape::scale(Value x, double s) {
    const Mat& X = value(x);
    Mat Y = X;
    for (auto& v : Y.data) v *= s;
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi, s](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i) dX.data[i] += s * G.data[i];
    };
    return out;
}

Value Tape::matmul_const(Value x, Mat w) {
    const Mat& X = value(x);
    if (X.cols != w.rows) throw std::invalid_argument("matmul_const: shape mismatch");
    Mat Y(X.rows, w.cols);
    for (int r = 0; r < X.rows; ++r)
        for (int k = 0; k < X.cols; ++k) {
            const double xv = X(r, k);
            for (int c = 0; c < w.cols; ++c) Y(r, c) += xv * w(k, c);
        }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    auto wc = std::make_shared<Mat>(std::move(w));
    nodes_[oi].back = [oi, xi, wc](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r)
            for (int k = 0; k < dX.cols; ++k) {
                double s = 0.0;
                for (int c = 0; c < G.cols; ++c) s += G(r, c) * (*wc)(k, c);
                dX(r, k) += s;
            }
    };
    return out;
}

Value Tape::concat_cols(Value a, Value b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows != B.rows) throw std::invalid_argument("concat_cols: row mismatch");
    Mat Y(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        for (int c = 0; c < A.cols; ++c) Y(r, c) = A(r, c);
        for (int c = 0; c < B.cols; ++c) Y(r, A.cols + c) = B(r, c);
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, ai = a.id, bi = b.id, ac = A.cols, bc = B.cols;
    nodes_[oi].back = [oi, ai, bi, ac, bc](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dA = t.adj(ai);
        Mat& dB = t.adj(bi);
        for (int r = 0; r < G.rows; ++r) {
            for (int c = 0; c < ac; ++c) dA(r, c) += G(r, c);
            for (int c = 0; c < bc; ++c) dB(r, c) += G(r, ac + c);
        }
    };
    return out;
}

Value Tape::slice_cols(Value x, int begin, int end) {
    const Mat& X = value(x);
    if (begin < 0 || end > X.cols || begin >= end)
        throw std::invalid_argument("slice_cols: bad range");
    Mat Y(X.rows, end - begin);
    for (int r = 0; r < X.rows; ++r)
        for (int c = begin; c < end; ++c) Y(r, c - begin) = X(r, c);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id, b = begin;
    nodes_[oi].back = [oi, xi, b](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r)
            for (int c = 0; c < G.cols; ++c) dX(r, b + c) += G(r, c);
    };
    return out;
}

Value Tape::permute_cols(Value x, std::vector<int> src_of_dst) {
    const Mat& X = value(x);
    if (static_cast<int>(src_of_dst.size()) != X.cols)
        throw std::invalid_argument("permute_cols: permutation size mismatch");
    Mat Y(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r)
        for (int c = 0; c < X.cols; ++c) Y(r, c) = X(r, src_of_dst[c]);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    auto perm = std::make_shared<std::vector<int>>(std::move(src_of_dst));
    nodes_[oi].back = [oi, xi, perm](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r)
            for (int c = 0; c < G.cols; ++c) dX(r, (*perm)[c]) += G(r, c);
    };
    return out;
}

Value Tape::reshape(Value x, int rows, int cols) {
    const Mat& X = value(x);
    if (rows * cols != X.size()) throw std::invalid_argument("reshape: size mismatch");
    Mat Y(rows, cols, X.data);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int i = 0; i < G.size(); ++i) dX.data[i] += G.data[i];
    };
    return out;
}

Value Tape::broadcast_col(Value x, int cols) {
    const Mat& X = value(x);
    if (X.cols != 1) throw std::invalid_argument("broadcast_col: input must be N x 1");
    Mat Y(X.rows, cols);
    for (int r = 0; r < X.rows; ++r)
        for (int c = 0; c < cols; ++c) Y(r, c) = X(r, 0);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < G.cols; ++c) s += G(r, c);
            dX(r, 0) += s;
        }
    };
    return out;
}

Value Tape::row_sum(Value x) {
    const Mat& X = value(x);
    Mat Y(X.rows, 1);
    for (int r = 0; r < X.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < X.cols; ++c) s += X(r, c);
        Y(r, 0) = s;
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r)
            for (int c = 0; c < dX.cols; ++c) dX(r, c) += G(r, 0);
    };
    return out;
}

Value Tape::div_rows(Value x, Value denom) {
    const Mat& X = value(x);
    const Mat& D = value(denom);
    if (D.rows != X.rows || D.cols != 1) throw std::invalid_argument("div_rows: denom must be N x 1");
    Mat Y(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r)
        for (int c = 0; c < X.cols; ++c) Y(r, c) = X(r, c) / D(r, 0);
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id, di = denom.id;
    nodes_[oi].back = [oi, xi, di](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& Y = t.nodes_[oi].val;
        const Mat& D = t.nodes_[di].val;
        Mat& dX = t.adj(xi);
        Mat& dD = t.adj(di);
        for (int r = 0; r < G.rows; ++r) {
            const double inv = 1.0 / D(r, 0);
            double s = 0.0;
            for (int c = 0; c < G.cols; ++c) {
                dX(r, c) += G(r, c) * inv;
                s += G(r, c) * Y(r, c);
            }
            dD(r, 0) -= s * inv;
        }
    };
    return out;
}

Value Tape::gather_cols(Value x, std::vector<int> idx) {
    const Mat& X = value(x);
    if (static_cast<int>(idx.size()) != X.rows)
        throw std::invalid_argument("gather_cols: one index per row required");
    Mat Y(X.rows, 1);
    for (int r = 0; r < X.rows; ++r) {
        if (idx[r] < 0 || idx[r] >= X.cols) throw std::out_of_range("gather_cols: index");
        Y(r, 0) = X(r, idx[r]);
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    nodes_[oi].back = [oi, xi, ix](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dX = t.adj(xi);
        for (int r = 0; r < G.rows; ++r) dX(r, (*ix)[r]) += G(r, 0);
    };
    return out;
}

Value Tape::straight_through(Value soft, Mat hard) {
    const Mat& S = value(soft);
    if (!S.same_shape(hard)) throw std::invalid_argument("straight_through: shape mismatch");
    Value out = push(std::move(hard), {});
    const int oi = out.id, si = soft.id;
    nodes_[oi].back = [oi, si](Tape& t) {
        const Mat& G = t.adj(oi);
        Mat& dS = t.adj(si);
        for (int i = 0; i < G.size(); ++i) dS.data[i] += G.data[i];
    };
    return out;
}

Value Tape::normalize_power_rows(Value x, double power) {
    const Mat& X = value(x);
    if (X.cols % 2 != 0) throw std::invalid_argument("normalize_power_rows: odd column count");
    const double uses = X.cols / 2.0;
    Mat Y(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        double ss = 0.0;
        for (int c = 0; c < X.cols; ++c) ss += X(r, c) * X(r, c);
        if (ss == 0.0) throw std::invalid_argument("normalize_power_rows: all-zero row");
        const double s = std::sqrt(uses * power / ss);
        for (int c = 0; c < X.cols; ++c) Y(r, c) = s * X(r, c);
    }
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi, power](Tape& t) {
        const Mat& G = t.adj(oi);
        const Mat& X = t.nodes_[xi].val;
        Mat& dX = t.adj(xi);
        const double uses = X.cols / 2.0;
        for (int r = 0; r < G.rows; ++r) {
            double ss = 0.0, gx = 0.0;
            for (int c = 0; c < X.cols; ++c) {
                ss += X(r, c) * X(r, c);
                gx += G(r, c) * X(r, c);
            }
            const double s = std::sqrt(uses * power / ss);
            for (int c = 0; c < X.cols; ++c) dX(r, c) += s * (G(r, c) - X(r, c) * gx / ss);
        }
    };
    return out;
}

Value Tape::sum_all(Value x) {
    const Mat& X = value(x);
    Mat Y(1, 1);
    double s = 0.0;
    for (double v : X.data) s += v;
    Y(0, 0) = s;
    Value out = push(std::move(Y), {});
    const int oi = out.id, xi = x.id;
    nodes_[oi].back = [oi, xi](Tape& t) {
        const double g = t.adj(oi)(0, 0);
        Mat& dX = t.adj(xi);
        for (auto& v : dX.data) v += g;
    };
    return out;
}

Value Tape::mean_all(Value x) {
    const int n = value(x).size();
    return scale(sum_all(x), 1.0 / n);
}

void Tape::backward(Value loss) {
    const Mat& lv = value(loss);
    if (lv.rows != 1 || lv.cols != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_) n.adj = Mat::zeros(n.val.rows, n.val.cols);
    nodes_[loss.id].adj(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
    for (auto& n : nodes_)
        if (n.store) {
            Mat& g = n.store->grad(n.pname);
            for (int i = 0; i < g.size(); ++i) g.data[i] += n.adj.data[i];
        }
}

GradCheckReport gradient_check(ParamStore& store, const std::vector<std::string>& names,
                               const std::function<double()>& f,
                               const std::function<void()>& compute_grads, double step,
                               double tolerance, double denom_floor) {
    store.zero_grads();
    compute_grads();
    // Snapshot analytic gradients before FD evaluations disturb anything.
    std::vector<Mat> analytic;
    for (const auto& name : names) analytic.push_back(store.grad(name));
    store.zero_grads();

    GradCheckReport report;
    for (std::size_t ni = 0; ni < names.size(); ++ni) {
        Mat& p = store.value(names[ni]);
        for (int i = 0; i < p.size(); ++i) {
            const double orig = p.data[i];
            p.data[i] = orig + step;
            const double fp = f();
            p.data[i] = orig - step;
            const double fm = f();
            p.data[i] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double an = analytic[ni].data[i];
            const double denom = std::max({std::abs(fd), std::abs(an), denom_floor});
            const double rel = std::abs(fd - an) / denom;
            report.max_rel_error = std::max(report.max_rel_error, rel);
            ++report.total_coords;
            if (rel > tolerance) ++report.bad_coords;
        }
    }
    return report;
}

}  // namespace jcm::ad
