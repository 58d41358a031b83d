#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jcm/mat.hpp"
#include "jcm/params.hpp"

namespace jcm::ad {

// Handle into a Tape.
struct Value {
    int id = -1;
};

// Reverse-mode tape over dense matrices. Nodes are appended in topological
// order by construction; backward() sweeps them in reverse and accumulates
// parameter adjoints into the bound ParamStore's gradient buffers.
class Tape {
  public:
    Value constant(Mat m);
    Value param(ParamStore& store, const std::string& name);

    // y = x W + 1 b  (x: N x in, W: in x out, b: 1 x out)
    Value affine(Value x, Value w, Value b);
    Value relu(Value x);
    Value row_softmax(Value x);
    Value log_elem(Value x);
    Value clamp_min(Value x, double lo);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value square(Value x);
    Value add_const(Value x, Mat c);
    Value scale(Value x, double s);
    Value matmul_const(Value x, Mat w);  // (N x a)(a x b), w fixed
    Value concat_cols(Value a, Value b);
    Value slice_cols(Value x, int begin, int end);
    Value permute_cols(Value x, std::vector<int> src_of_dst);
    Value reshape(Value x, int rows, int cols);
    Value broadcast_col(Value x, int cols);  // N x 1 -> N x cols
    Value row_sum(Value x);                  // N x C -> N x 1
    Value div_rows(Value x, Value denom);    // row r divided by denom(r, 0)
    Value gather_cols(Value x, std::vector<int> idx);  // picks idx[r] per row
    // Forward value is `hard`; gradients pass to `soft` with identity Jacobian.
    Value straight_through(Value soft, Mat hard);
    // Scales each row (2n reals, n complex uses) to average power `power`.
    Value normalize_power_rows(Value x, double power);
    Value sum_all(Value x);
    Value mean_all(Value x);

    const Mat& value(Value v) const { return nodes_[v.id].val; }
    const Mat& adjoint(Value v) const { return nodes_[v.id].adj; }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape. `loss` must be 1x1.
    // Parameter adjoints are added (not assigned) into the store gradients.
    void backward(Value loss);

    int size() const { return static_cast<int>(nodes_.size()); }

  private:
    struct Node {
        Mat val;
        Mat adj;
        std::function<void(Tape&)> back;  // may be empty (leaves)
        ParamStore* store = nullptr;
        std::string pname;
    };

    Value push(Mat val, std::function<void(Tape&)> back);
    Mat& adj(int id) { return nodes_[id].adj; }

    std::vector<Node> nodes_;
};

// Central-difference gradient check helper. Returns the worst relative error
// between `analytic` and the central difference of `f` over the given
// parameter entries; the relative error denominator is floored at `denom_floor`.
struct GradCheckReport {
    double max_rel_error = 0.0;
    int total_coords = 0;
    int bad_coords = 0;  // coords with rel error above the tolerance
};

GradCheckReport gradient_check(ParamStore& store, const std::vector<std::string>& names,
                               const std::function<double()>& f,
                               const std::function<void()>& compute_grads, double step,
                               double tolerance, double denom_floor = 1e-6);

}  // namespace jcm::ad
