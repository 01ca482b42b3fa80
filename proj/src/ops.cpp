#include "tfk3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <utility>

namespace tfk3d {

namespace {

std::int64_t out_extent(std::int64_t in, std::int64_t pad, std::int64_t k, std::int64_t stride) {
    return (in + 2 * pad - k) / stride + 1;
}

void check_rank(const Tensor& t, std::int64_t rank, const char* what) {
    if (t.rank() != rank) {
        detail::fail(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                     t.shape_string());
    }
}

// Copies [C x T x H x W] into a zero-padded buffer; identity when pad is 0.
std::vector<double> pad_input(const Tensor& input, const Extent3& pad, std::int64_t C,
                              std::int64_t T, std::int64_t H, std::int64_t W) {
    const std::int64_t Tp = T + 2 * pad.t, Hp = H + 2 * pad.h, Wp = W + 2 * pad.w;
    std::vector<double> out(static_cast<std::size_t>(C * Tp * Hp * Wp), 0.0);
    const double* src = input.data();
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t t = 0; t < T; ++t)
            for (std::int64_t h = 0; h < H; ++h) {
                double* dst = out.data() + ((c * Tp + t + pad.t) * Hp + h + pad.h) * Wp + pad.w;
                std::memcpy(dst, src + ((c * T + t) * H + h) * W, sizeof(double) * W);
            }
    return out;
}

}  // namespace

Tensor conv3d(Tape& tape, const Tensor& input, const Tensor& kernels, const Extent3& stride,
              const Extent3& padding) {
    check_rank(input, 4, "conv3d input");
    check_rank(kernels, 5, "conv3d kernels");
    if (stride.t < 1 || stride.h < 1 || stride.w < 1) detail::fail("conv3d stride must be >= 1");
    if (padding.t < 0 || padding.h < 0 || padding.w < 0) detail::fail("conv3d padding must be >= 0");

    const std::int64_t C = input.dim(0), T = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t N = kernels.dim(0), Kc = kernels.dim(1), Kt = kernels.dim(2),
                       Kh = kernels.dim(3), Kw = kernels.dim(4);
    if (Kc != C) {
        detail::fail("conv3d channel mismatch: input " + input.shape_string() + " has " +
                     std::to_string(C) + " channels, kernels " + kernels.shape_string() + " expect " +
                     std::to_string(Kc));
    }
    const std::int64_t Tp = T + 2 * padding.t, Hp = H + 2 * padding.h, Wp = W + 2 * padding.w;
    if (Kt > Tp || Kh > Hp || Kw > Wp) {
        detail::fail("conv3d kernel " + kernels.shape_string() + " exceeds padded input " +
                     detail::shape_string({C, Tp, Hp, Wp}));
    }

    const std::int64_t To = out_extent(T, padding.t, Kt, stride.t);
    const std::int64_t Ho = out_extent(H, padding.h, Kh, stride.h);
    const std::int64_t Wo = out_extent(W, padding.w, Kw, stride.w);
    const bool padded = padding.t || padding.h || padding.w;

    Tensor output = Tensor::zeros({N, To, Ho, Wo},
                                  input.requires_grad() || kernels.requires_grad());

    const std::vector<double> padbuf =
        padded ? pad_input(input, padding, C, T, H, W) : std::vector<double>{};
    const double* x = padded ? padbuf.data() : input.data();
    const double* k = kernels.data();
    double* y = output.data();

    const std::int64_t st = stride.t, sh = stride.h, sw = stride.w;
    for (std::int64_t n = 0; n < N; ++n) {
        double* yn = y + n * To * Ho * Wo;
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xc = x + c * Tp * Hp * Wp;
            const double* kn = k + (n * C + c) * Kt * Kh * Kw;
            for (std::int64_t kt = 0; kt < Kt; ++kt)
                for (std::int64_t kh = 0; kh < Kh; ++kh)
                    for (std::int64_t kw = 0; kw < Kw; ++kw) {
                        const double wgt = kn[(kt * Kh + kh) * Kw + kw];
                        for (std::int64_t ot = 0; ot < To; ++ot) {
                            const double* xt = xc + (ot * st + kt) * Hp * Wp;
                            double* yt = yn + ot * Ho * Wo;
                            for (std::int64_t oh = 0; oh < Ho; ++oh) {
                                const double* xrow = xt + (oh * sh + kh) * Wp + kw;
                                double* yrow = yt + oh * Wo;
                                if (sw == 1) {
                                    for (std::int64_t ow = 0; ow < Wo; ++ow)
                                        yrow[ow] += wgt * xrow[ow];
                                } else {
                                    for (std::int64_t ow = 0; ow < Wo; ++ow)
                                        yrow[ow] += wgt * xrow[ow * sw];
                                }
                            }
                        }
                    }
        }
    }

    if (output.requires_grad()) {
        Tensor in = input, ker = kernels, out = output;
        Extent3 str = stride, pad = padding;
        tape.record({input, kernels}, output, [in, ker, out, str, pad]() mutable {
            const std::int64_t C = in.dim(0), T = in.dim(1), H = in.dim(2), W = in.dim(3);
            const std::int64_t N = ker.dim(0), Kt = ker.dim(2), Kh = ker.dim(3), Kw = ker.dim(4);
            const std::int64_t Tp = T + 2 * pad.t, Hp = H + 2 * pad.h, Wp = W + 2 * pad.w;
            const std::int64_t To = out.dim(1), Ho = out.dim(2), Wo = out.dim(3);
            const bool padded = pad.t || pad.h || pad.w;
            const double* gy = out.grad();

            if (in.requires_grad()) {
                std::vector<double> gpad;
                double* gx;
                if (padded) {
                    gpad.assign(static_cast<std::size_t>(C * Tp * Hp * Wp), 0.0);
                    gx = gpad.data();
                } else {
                    gx = in.grad();
                }
                const double* k = ker.data();
                for (std::int64_t n = 0; n < N; ++n) {
                    const double* gyn = gy + n * To * Ho * Wo;
                    for (std::int64_t c = 0; c < C; ++c) {
                        double* gxc = gx + c * Tp * Hp * Wp;
                        const double* kn = k + (n * C + c) * Kt * Kh * Kw;
                        for (std::int64_t kt = 0; kt < Kt; ++kt)
                            for (std::int64_t kh = 0; kh < Kh; ++kh)
                                for (std::int64_t kw = 0; kw < Kw; ++kw) {
                                    const double wgt = kn[(kt * Kh + kh) * Kw + kw];
                                    for (std::int64_t ot = 0; ot < To; ++ot) {
                                        double* gxt = gxc + (ot * str.t + kt) * Hp * Wp;
                                        const double* gyt = gyn + ot * Ho * Wo;
                                        for (std::int64_t oh = 0; oh < Ho; ++oh) {
                                            double* gxrow = gxt + (oh * str.h + kh) * Wp + kw;
                                            const double* gyrow = gyt + oh * Wo;
                                            if (str.w == 1) {
                                                for (std::int64_t ow = 0; ow < Wo; ++ow)
                                                    gxrow[ow] += wgt * gyrow[ow];
                                            } else {
                                                for (std::int64_t ow = 0; ow < Wo; ++ow)
                                                    gxrow[ow * str.w] += wgt * gyrow[ow];
                                            }
                                        }
                                    }
                                }
                    }
                }
                if (padded) {
                    double* gin = in.grad();
                    for (std::int64_t c = 0; c < C; ++c)
                        for (std::int64_t t = 0; t < T; ++t)
                            for (std::int64_t h = 0; h < H; ++h) {
                                const double* src =
                                    gx + ((c * Tp + t + pad.t) * Hp + h + pad.h) * Wp + pad.w;
                                double* dst = gin + ((c * T + t) * H + h) * W;
                                for (std::int64_t w = 0; w < W; ++w) dst[w] += src[w];
                            }
                }
            }

            if (ker.requires_grad()) {
                const std::vector<double> padbuf =
                    padded ? pad_input(in, pad, C, T, H, W) : std::vector<double>{};
                const double* x = padded ? padbuf.data() : in.data();
                double* gk = ker.grad();
                for (std::int64_t n = 0; n < N; ++n) {
                    const double* gyn = gy + n * To * Ho * Wo;
                    for (std::int64_t c = 0; c < C; ++c) {
                        const double* xc = x + c * Tp * Hp * Wp;
                        double* gkn = gk + (n * C + c) * Kt * Kh * Kw;
                        for (std::int64_t kt = 0; kt < Kt; ++kt)
                            for (std::int64_t kh = 0; kh < Kh; ++kh)
                                for (std::int64_t kw = 0; kw < Kw; ++kw) {
                                    double acc = 0.0;
                                    for (std::int64_t ot = 0; ot < To; ++ot) {
                                        const double* xt = xc + (ot * str.t + kt) * Hp * Wp;
                                        const double* gyt = gyn + ot * Ho * Wo;
                                        for (std::int64_t oh = 0; oh < Ho; ++oh) {
                                            const double* xrow = xt + (oh * str.h + kh) * Wp + kw;
                                            const double* gyrow = gyt + oh * Wo;
                                            if (str.w == 1) {
                                                for (std::int64_t ow = 0; ow < Wo; ++ow)
                                                    acc += xrow[ow] * gyrow[ow];
                                            } else {
                                                for (std::int64_t ow = 0; ow < Wo; ++ow)
                                                    acc += xrow[ow * str.w] * gyrow[ow];
                                            }
                                        }
                                    }
                                    gkn[(kt * Kh + kh) * Kw + kw] += acc;
                                }
                    }
                }
            }
        });
    }
    return output;
}

Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
    check_rank(bias, 1, "channel bias");
    if (x.rank() < 1 || x.dim(0) != bias.dim(0)) {
        detail::fail("add_channel_bias: leading extent of " + x.shape_string() +
                     " does not match bias " + bias.shape_string());
    }
    const std::int64_t N = x.dim(0), per = x.size() / N;
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad() || bias.requires_grad());
    const double* xp = x.data();
    const double* bp = bias.data();
    double* yp = out.data();
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t i = 0; i < per; ++i) yp[n * per + i] = xp[n * per + i] + bp[n];

    if (out.requires_grad()) {
        Tensor xin = x, b = bias, o = out;
        tape.record({x, bias}, out, [xin, b, o]() mutable {
            const std::int64_t N = b.dim(0), per = o.size() / N;
            const double* gy = o.grad();
            if (xin.requires_grad()) {
                double* gx = xin.grad();
                for (std::int64_t i = 0; i < o.size(); ++i) gx[i] += gy[i];
            }
            if (b.requires_grad()) {
                double* gb = b.grad();
                for (std::int64_t n = 0; n < N; ++n) {
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < per; ++i) acc += gy[n * per + i];
                    gb[n] += acc;
                }
            }
        });
    }
    return out;
}

Tensor maxpool3d(Tape& tape, const Tensor& input, const Extent3& window, const Extent3& stride) {
    check_rank(input, 4, "maxpool3d input");
    if (window.t < 1 || window.h < 1 || window.w < 1) detail::fail("maxpool3d window must be >= 1");
    if (stride.t < 1 || stride.h < 1 || stride.w < 1) detail::fail("maxpool3d stride must be >= 1");
    const std::int64_t C = input.dim(0), T = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (window.t > T || window.h > H || window.w > W) {
        detail::fail("maxpool3d window (" + std::to_string(window.t) + "x" +
                     std::to_string(window.h) + "x" + std::to_string(window.w) +
                     ") exceeds input " + input.shape_string());
    }
    const std::int64_t To = (T - window.t) / stride.t + 1;
    const std::int64_t Ho = (H - window.h) / stride.h + 1;
    const std::int64_t Wo = (W - window.w) / stride.w + 1;

    Tensor out = Tensor::zeros({C, To, Ho, Wo}, input.requires_grad());
    auto argmax = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(out.size()));
    const double* x = input.data();
    double* y = out.data();
    std::int64_t oi = 0;
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t ot = 0; ot < To; ++ot)
            for (std::int64_t oh = 0; oh < Ho; ++oh)
                for (std::int64_t ow = 0; ow < Wo; ++ow, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::int64_t best_idx = -1;
                    for (std::int64_t wt = 0; wt < window.t; ++wt)
                        for (std::int64_t wh = 0; wh < window.h; ++wh)
                            for (std::int64_t ww = 0; ww < window.w; ++ww) {
                                const std::int64_t idx =
                                    ((c * T + ot * stride.t + wt) * H + oh * stride.h + wh) * W +
                                    ow * stride.w + ww;
                                if (x[idx] > best) {
                                    best = x[idx];
                                    best_idx = idx;
                                }
                            }
                    y[oi] = best;
                    (*argmax)[static_cast<std::size_t>(oi)] = best_idx;
                }

    if (out.requires_grad()) {
        Tensor xin = input, o = out;
        tape.record({input}, out, [xin, o, argmax]() mutable {
            const double* gy = o.grad();
            double* gx = xin.grad();
            for (std::int64_t i = 0; i < o.size(); ++i)
                gx[(*argmax)[static_cast<std::size_t>(i)]] += gy[i];
        });
    }
    return out;
}

Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    check_rank(x, 1, "dense input");
    check_rank(weight, 2, "dense weight");
    check_rank(bias, 1, "dense bias");
    const std::int64_t m = weight.dim(0), n = weight.dim(1);
    if (x.dim(0) != n || bias.dim(0) != m) {
        detail::fail("dense dimension mismatch: weight " + weight.shape_string() + ", input " +
                     x.shape_string() + ", bias " + bias.shape_string());
    }
    Tensor out = Tensor::zeros(
        {m}, x.requires_grad() || weight.requires_grad() || bias.requires_grad());
    const double* xp = x.data();
    const double* wp = weight.data();
    const double* bp = bias.data();
    double* yp = out.data();
    for (std::int64_t i = 0; i < m; ++i) {
        const double* row = wp + i * n;
        double acc = bp[i];
        for (std::int64_t j = 0; j < n; ++j) acc += row[j] * xp[j];
        yp[i] = acc;
    }

    if (out.requires_grad()) {
        Tensor xin = x, w = weight, b = bias, o = out;
        tape.record({x, weight, bias}, out, [xin, w, b, o]() mutable {
            const std::int64_t m = w.dim(0), n = w.dim(1);
            const double* gy = o.grad();
            if (xin.requires_grad()) {
                double* gx = xin.grad();
                const double* wp = w.data();
                for (std::int64_t i = 0; i < m; ++i) {
                    const double g = gy[i];
                    const double* row = wp + i * n;
                    for (std::int64_t j = 0; j < n; ++j) gx[j] += g * row[j];
                }
            }
            if (w.requires_grad()) {
                double* gw = w.grad();
                const double* xp = xin.data();
                for (std::int64_t i = 0; i < m; ++i) {
                    const double g = gy[i];
                    double* row = gw + i * n;
                    for (std::int64_t j = 0; j < n; ++j) row[j] += g * xp[j];
                }
            }
            if (b.requires_grad()) {
                double* gb = b.grad();
                for (std::int64_t i = 0; i < m; ++i) gb[i] += gy[i];
            }
        });
    }
    return out;
}

Tensor tanh(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const double* xp = x.data();
    double* yp = out.data();
    for (std::int64_t i = 0; i < x.size(); ++i) yp[i] = std::tanh(xp[i]);
    if (out.requires_grad()) {
        Tensor xin = x, o = out;
        tape.record({x}, out, [xin, o]() mutable {
            const double* gy = o.grad();
            const double* y = o.data();
            double* gx = xin.grad();
            for (std::int64_t i = 0; i < o.size(); ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
        });
    }
    return out;
}

std::vector<double> softmax(const Tensor& logits) {
    const double* z = logits.data();
    const std::int64_t k = logits.size();
    double zmax = z[0];
    for (std::int64_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    std::vector<double> p(static_cast<std::size_t>(k));
    double denom = 0.0;
    for (std::int64_t i = 0; i < k; ++i) {
        p[static_cast<std::size_t>(i)] = std::exp(z[i] - zmax);
        denom += p[static_cast<std::size_t>(i)];
    }
    for (double& v : p) v /= denom;
    return p;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::int64_t label) {
    check_rank(logits, 1, "softmax_cross_entropy logits");
    const std::int64_t k = logits.dim(0);
    if (label < 0 || label >= k) {
        detail::fail("softmax_cross_entropy label " + std::to_string(label) +
                     " out of range for " + std::to_string(k) + " classes");
    }
    const double* z = logits.data();
    double zmax = z[0];
    for (std::int64_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    double denom = 0.0;
    for (std::int64_t i = 0; i < k; ++i) denom += std::exp(z[i] - zmax);
    const double loss = std::log(denom) - (z[label] - zmax);

    Tensor out = Tensor::scalar(loss, logits.requires_grad());
    if (out.requires_grad()) {
        Tensor zin = logits, o = out;
        tape.record({logits}, out, [zin, o, label]() mutable {
            const double g = o.grad()[0];
            const std::vector<double> p = softmax(zin);
            double* gz = zin.grad();
            for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g * p[i];
            gz[label] -= g;
        });
    }
    return out;
}

Tensor reshape(Tape& tape, const Tensor& x, std::vector<std::int64_t> shape) {
    Tensor out = Tensor::from_data(std::move(shape),
                                   std::vector<double>(x.data(), x.data() + x.size()),
                                   x.requires_grad());
    if (out.size() != x.size()) {
        detail::fail("reshape from " + x.shape_string() + " to " + out.shape_string() +
                     " changes element count");
    }
    if (out.requires_grad()) {
        Tensor xin = x, o = out;
        tape.record({x}, out, [xin, o]() mutable {
            const double* gy = o.grad();
            double* gx = xin.grad();
            for (std::int64_t i = 0; i < o.size(); ++i) gx[i] += gy[i];
        });
    }
    return out;
}

Tensor stack0(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) detail::fail("stack0 of zero tensors");
    const std::vector<std::int64_t>& inner = parts.front().shape();
    bool needs_grad = false;
    for (const Tensor& p : parts) {
        if (p.shape() != inner) {
            detail::fail("stack0 shape mismatch: " + parts.front().shape_string() + " vs " +
                         p.shape_string());
        }
        needs_grad = needs_grad || p.requires_grad();
    }
    std::vector<std::int64_t> shape;
    shape.push_back(static_cast<std::int64_t>(parts.size()));
    shape.insert(shape.end(), inner.begin(), inner.end());
    Tensor out = Tensor::zeros(shape, needs_grad);
    const std::int64_t per = parts.front().size();
    for (std::size_t i = 0; i < parts.size(); ++i)
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * per, parts[i].data(),
                    sizeof(double) * static_cast<std::size_t>(per));

    if (out.requires_grad()) {
        std::vector<Tensor> ins = parts;
        Tensor o = out;
        tape.record(ins, out, [ins, o, per]() mutable {
            const double* gy = o.grad();
            for (std::size_t i = 0; i < ins.size(); ++i) {
                if (!ins[i].requires_grad()) continue;
                double* gx = ins[i].grad();
                const double* g = gy + static_cast<std::int64_t>(i) * per;
                for (std::int64_t j = 0; j < per; ++j) gx[j] += g[j];
            }
        });
    }
    return out;
}

Tensor select0(Tape& tape, const Tensor& x, std::int64_t i) {
    if (x.rank() < 1 || i < 0 || i >= x.dim(0)) {
        detail::fail("select0 index " + std::to_string(i) + " out of range for " +
                     x.shape_string());
    }
    std::vector<std::int64_t> shape(x.shape().begin() + 1, x.shape().end());
    if (shape.empty()) shape.push_back(1);
    const std::int64_t per = x.size() / x.dim(0);
    Tensor out = Tensor::from_data(
        shape, std::vector<double>(x.data() + i * per, x.data() + (i + 1) * per),
        x.requires_grad());
    if (out.requires_grad()) {
        Tensor xin = x, o = out;
        tape.record({x}, out, [xin, o, i, per]() mutable {
            const double* gy = o.grad();
            double* gx = xin.grad() + i * per;
            for (std::int64_t j = 0; j < per; ++j) gx[j] += gy[j];
        });
    }
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        detail::fail("add shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (out.requires_grad()) {
        Tensor ta = a, tb = b, o = out;
        tape.record({a, b}, out, [ta, tb, o]() mutable {
            const double* gy = o.grad();
            if (ta.requires_grad()) {
                double* g = ta.grad();
                for (std::int64_t i = 0; i < o.size(); ++i) g[i] += gy[i];
            }
            if (tb.requires_grad()) {
                double* g = tb.grad();
                for (std::int64_t i = 0; i < o.size(); ++i) g[i] += gy[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        detail::fail("mul shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (out.requires_grad()) {
        Tensor ta = a, tb = b, o = out;
        tape.record({a, b}, out, [ta, tb, o]() mutable {
            const double* gy = o.grad();
            if (ta.requires_grad()) {
                double* g = ta.grad();
                const double* other = tb.data();
                for (std::int64_t i = 0; i < o.size(); ++i) g[i] += gy[i] * other[i];
            }
            if (tb.requires_grad()) {
                double* g = tb.grad();
                const double* other = ta.data();
                for (std::int64_t i = 0; i < o.size(); ++i) g[i] += gy[i] * other[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    for (std::int64_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * factor;
    if (out.requires_grad()) {
        Tensor xin = x, o = out;
        tape.record({x}, out, [xin, o, factor]() mutable {
            const double* gy = o.grad();
            double* gx = xin.grad();
            for (std::int64_t i = 0; i < o.size(); ++i) gx[i] += gy[i] * factor;
        });
    }
    return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) acc += x.data()[i];
    Tensor out = Tensor::scalar(acc, x.requires_grad());
    if (out.requires_grad()) {
        Tensor xin = x, o = out;
        tape.record({x}, out, [xin, o]() mutable {
            const double g = o.grad()[0];
            double* gx = xin.grad();
            for (std::int64_t i = 0; i < xin.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

Tensor init_kaiming_uniform(std::vector<std::int64_t> shape, std::int64_t fan_in, Rng& rng) {
    if (fan_in < 1) detail::fail("init_kaiming_uniform fan_in must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    return t;
}

Tensor init_gaussian(std::vector<std::int64_t> shape, double mean, double stddev, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.gaussian(mean, stddev);
    return t;
}

}  // namespace tfk3d
