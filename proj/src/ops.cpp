#include "dtn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dtn::ops {

namespace {

void require_2d(const Tensor& t, const char* op, const char* arg) {
    if (t.shape().size() != 2) {
        throw DimensionError(std::string(op) + ": " + arg + " must be 2-D, got shape " +
                             shape_str(t.shape()));
    }
}

// c[m x n] += a[m x k] * b[k x n]
void mm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// c[m x n] += a[m x k] * b[n x k]^T
void mm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

// c[k x n] += a[m x k]^T * b[m x n]
void mm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

std::size_t row_count(const Tensor& t) {
    return t.shape().size() == 1 ? 1 : t.shape()[0];
}

std::size_t col_count(const Tensor& t) {
    return t.shape().size() == 1 ? t.shape()[0] : t.shape()[1];
}

}  // namespace

Tensor affine(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_2d(x, "affine", "x");
    require_2d(weight, "affine", "weight");
    const std::size_t b_rows = x.rows();
    const std::size_t d_in = x.cols();
    const std::size_t d_out = weight.cols();
    if (weight.rows() != d_in) {
        throw DimensionError("affine: inner axis mismatch, x has " + std::to_string(d_in) +
                             " columns but weight has " + std::to_string(weight.rows()) + " rows");
    }
    if (bias.shape().size() != 1 || bias.shape()[0] != d_out) {
        throw DimensionError("affine: bias axis must be [" + std::to_string(d_out) +
                             "], got shape " + shape_str(bias.shape()));
    }

    Tensor out = tape.emit(Shape{b_rows, d_out});
    mm_nn_acc(x.values().data(), weight.values().data(), out.values_mut().data(), b_rows, d_in,
              d_out);
    for (std::size_t i = 0; i < b_rows; ++i) {
        double* row = out.values_mut().data() + i * d_out;
        for (std::size_t j = 0; j < d_out; ++j) row[j] += bias.values()[j];
    }

    auto xn = x.node_ptr();
    auto wn = weight.node_ptr();
    auto bn = bias.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, wn, bn, on, b_rows, d_in, d_out]() {
        const double* g = on->grad.data();
        mm_nt_acc(g, wn->values.data(), xn->grad.data(), b_rows, d_out, d_in);
        mm_tn_acc(xn->values.data(), g, wn->grad.data(), b_rows, d_in, d_out);
        for (std::size_t i = 0; i < b_rows; ++i) {
            const double* gi = g + i * d_out;
            for (std::size_t j = 0; j < d_out; ++j) bn->grad[j] += gi[j];
        }
    });
    return out;
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw ContractError("leaky_relu: slope must lie in (0,1), got " + std::to_string(slope));
    }
    Tensor out = tape.emit(x.shape());
    const auto& xv = x.values();
    auto& ov = out.values_mut();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        ov[i] = xv[i] >= 0.0 ? xv[i] : slope * xv[i];
    }
    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, slope]() {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
            xn->grad[i] += on->grad[i] * (xn->values[i] >= 0.0 ? 1.0 : slope);
        }
    });
    return out;
}

Tensor l2_normalize(Tape& tape, const Tensor& x) {
    if (x.shape().empty() || x.shape().size() > 2) {
        throw DimensionError("l2_normalize: expected 1-D or 2-D input, got shape " +
                             shape_str(x.shape()));
    }
    const std::size_t rows = row_count(x);
    const std::size_t cols = col_count(x);
    constexpr double kEps = 1e-12;

    std::vector<double> inv_norms(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xr = x.values().data() + i * cols;
        double sq = 0.0;
        for (std::size_t j = 0; j < cols; ++j) sq += xr[j] * xr[j];
        const double norm = std::sqrt(sq);
        if (!(norm > kEps)) {
            throw DegenerateInputError("l2_normalize: row " + std::to_string(i) +
                                       " has near-zero norm " + std::to_string(norm));
        }
        inv_norms[i] = 1.0 / norm;
    }

    Tensor out = tape.emit(x.shape());
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xr = x.values().data() + i * cols;
        double* orow = out.values_mut().data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) orow[j] = xr[j] * inv_norms[i];
    }

    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, rows, cols, inv_norms = std::move(inv_norms)]() {
        // d x = (g - y (g . y)) / ||x||
        for (std::size_t i = 0; i < rows; ++i) {
            const double* g = on->grad.data() + i * cols;
            const double* y = on->values.data() + i * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
            double* xg = xn->grad.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) {
                xg[j] += (g[j] - y[j] * dot) * inv_norms[i];
            }
        }
    });
    return out;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, SeededRng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ContractError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return x;  // eval mode is a pure identity
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor out = tape.emit(x.shape());
    std::vector<double> mask(x.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : scale;
        out.values_mut()[i] = x.values()[i] * mask[i];
    }
    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, mask = std::move(mask)]() {
        for (std::size_t i = 0; i < mask.size(); ++i) xn->grad[i] += on->grad[i] * mask[i];
    });
    return out;
}

Tensor scaled_cross_entropy(Tape& tape, const Tensor& scores, const Tensor& temperature,
                            const std::vector<int>& labels) {
    require_2d(scores, "scaled_cross_entropy", "scores");
    if (!temperature.is_scalar()) {
        throw DimensionError("scaled_cross_entropy: temperature must be a scalar, got shape " +
                             shape_str(temperature.shape()));
    }
    const std::size_t batch = scores.rows();
    const std::size_t n_classes = scores.cols();
    if (labels.size() != batch) {
        throw DimensionError("scaled_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for batch axis of " + std::to_string(batch));
    }
    for (std::size_t i = 0; i < batch; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
            throw IndexError("scaled_cross_entropy: label " + std::to_string(labels[i]) +
                             " at row " + std::to_string(i) + " outside [0," +
                             std::to_string(n_classes) + ")");
        }
    }

    const double alpha = temperature.item();
    std::vector<double> probs(batch * n_classes);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double* s = scores.values().data() + i * n_classes;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n_classes; ++j) mx = std::max(mx, alpha * s[j]);
        double z = 0.0;
        double* p = probs.data() + i * n_classes;
        for (std::size_t j = 0; j < n_classes; ++j) {
            p[j] = std::exp(alpha * s[j] - mx);
            z += p[j];
        }
        for (std::size_t j = 0; j < n_classes; ++j) p[j] /= z;
        total += -(alpha * s[static_cast<std::size_t>(labels[i])] - mx - std::log(z));
    }

    Tensor out = tape.emit(Shape{1});
    out.values_mut()[0] = total / static_cast<double>(batch);

    auto sn = scores.node_ptr();
    auto tn = temperature.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([sn, tn, on, batch, n_classes, labels, probs = std::move(probs)]() {
        const double g0 = on->grad[0] / static_cast<double>(batch);
        const double alpha = tn->values[0];
        double dalpha = 0.0;
        for (std::size_t i = 0; i < batch; ++i) {
            const double* p = probs.data() + i * n_classes;
            const double* s = sn->values.data() + i * n_classes;
            double* sg = sn->grad.data() + i * n_classes;
            for (std::size_t j = 0; j < n_classes; ++j) {
                const double d = p[j] - (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0);
                sg[j] += g0 * alpha * d;
                dalpha += g0 * s[j] * d;
            }
        }
        tn->grad[0] += dalpha;
    });
    return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                   Bwd bwd) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(name) + ": shape " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    Tensor out = tape.emit(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.values_mut()[i] = fwd(a.values()[i], b.values()[i]);
    }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([an, bn, on, bwd]() {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
            bwd(on->grad[i], an->values[i], bn->values[i], an->grad[i], bn->grad[i]);
        }
    });
    return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise(
        tape, a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double, double& da, double& db) {
            da += g;
            db += g;
        });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise(
        tape, a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double, double& da, double& db) {
            da += g;
            db -= g;
        });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    return elementwise(
        tape, a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double av, double bv, double& da, double& db) {
            da += g * bv;
            db += g * av;
        });
}

Tensor sum(Tape& tape, const Tensor& x) {
    Tensor out = tape.emit(Shape{1});
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    out.values_mut()[0] = acc;
    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on]() {
        for (double& g : xn->grad) g += on->grad[0];
    });
    return out;
}

Tensor repeat_rows(Tape& tape, const Tensor& x, std::size_t times) {
    require_2d(x, "repeat_rows", "x");
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    Tensor out = tape.emit(Shape{rows * times, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t t = 0; t < times; ++t) {
            std::copy_n(x.values().data() + i * cols, cols,
                        out.values_mut().data() + (i * times + t) * cols);
        }
    }
    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, rows, cols, times]() {
        for (std::size_t i = 0; i < rows; ++i) {
            double* xg = xn->grad.data() + i * cols;
            for (std::size_t t = 0; t < times; ++t) {
                const double* g = on->grad.data() + (i * times + t) * cols;
                for (std::size_t j = 0; j < cols; ++j) xg[j] += g[j];
            }
        }
    });
    return out;
}

Tensor tile_rows(Tape& tape, const Tensor& x, std::size_t times) {
    require_2d(x, "tile_rows", "x");
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    Tensor out = tape.emit(Shape{rows * times, cols});
    for (std::size_t t = 0; t < times; ++t) {
        std::copy_n(x.values().data(), rows * cols, out.values_mut().data() + t * rows * cols);
    }
    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, rows, cols, times]() {
        for (std::size_t t = 0; t < times; ++t) {
            const double* g = on->grad.data() + t * rows * cols;
            for (std::size_t i = 0; i < rows * cols; ++i) xn->grad[i] += g[i];
        }
    });
    return out;
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
    require_2d(a, "concat_rows", "a");
    require_2d(b, "concat_rows", "b");
    if (a.cols() != b.cols()) {
        throw DimensionError("concat_rows: column axis mismatch, " + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.cols()));
    }
    const std::size_t cols = a.cols();
    Tensor out = tape.emit(Shape{a.rows() + b.rows(), cols});
    std::copy(a.values().begin(), a.values().end(), out.values_mut().begin());
    std::copy(b.values().begin(), b.values().end(),
              out.values_mut().begin() + static_cast<std::ptrdiff_t>(a.size()));
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([an, bn, on]() {
        const std::size_t na = an->grad.size();
        for (std::size_t i = 0; i < na; ++i) an->grad[i] += on->grad[i];
        for (std::size_t i = 0; i < bn->grad.size(); ++i) bn->grad[i] += on->grad[na + i];
    });
    return out;
}

Tensor segment_mean(Tape& tape, const Tensor& x, const std::vector<std::size_t>& segment_ids,
                    std::size_t n_segments) {
    require_2d(x, "segment_mean", "x");
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    if (segment_ids.size() != rows) {
        throw DimensionError("segment_mean: " + std::to_string(segment_ids.size()) +
                             " segment ids for row axis of " + std::to_string(rows));
    }
    std::vector<double> counts(n_segments, 0.0);
    for (std::size_t id : segment_ids) {
        if (id >= n_segments) {
            throw IndexError("segment_mean: segment id " + std::to_string(id) + " outside [0," +
                             std::to_string(n_segments) + ")");
        }
        counts[id] += 1.0;
    }
    for (std::size_t s = 0; s < n_segments; ++s) {
        if (counts[s] == 0.0) {
            throw ContractError("segment_mean: segment " + std::to_string(s) + " is empty");
        }
    }

    Tensor out = tape.emit(Shape{n_segments, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xr = x.values().data() + i * cols;
        double* o = out.values_mut().data() + segment_ids[i] * cols;
        for (std::size_t j = 0; j < cols; ++j) o[j] += xr[j];
    }
    for (std::size_t s = 0; s < n_segments; ++s) {
        double* o = out.values_mut().data() + s * cols;
        for (std::size_t j = 0; j < cols; ++j) o[j] /= counts[s];
    }

    auto xn = x.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([xn, on, rows, cols, segment_ids, counts]() {
        for (std::size_t i = 0; i < rows; ++i) {
            const double* g = on->grad.data() + segment_ids[i] * cols;
            double* xg = xn->grad.data() + i * cols;
            const double inv = 1.0 / counts[segment_ids[i]];
            for (std::size_t j = 0; j < cols; ++j) xg[j] += g[j] * inv;
        }
    });
    return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt", "a");
    require_2d(b, "matmul_nt", "b");
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner axis mismatch, " + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.cols()));
    }
    const std::size_t q = a.rows();
    const std::size_t c = a.cols();
    const std::size_t n = b.rows();
    Tensor out = tape.emit(Shape{q, n});
    mm_nt_acc(a.values().data(), b.values().data(), out.values_mut().data(), q, c, n);
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    auto on = out.node_ptr();
    tape.set_backward([an, bn, on, q, c, n]() {
        mm_nn_acc(on->grad.data(), bn->values.data(), an->grad.data(), q, n, c);
        mm_tn_acc(on->grad.data(), an->values.data(), bn->grad.data(), q, n, c);
    });
    return out;
}

}  // namespace dtn::ops
