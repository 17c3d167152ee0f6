#include "net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "errors.hpp"
#include "eval.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace amfm {

namespace {

constexpr double kSeluLambda = 1.05070098;
constexpr double kSeluAlpha = 1.67326324;

double activate(Activation act, double z) {
    switch (act) {
        case Activation::selu:
            return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * (std::exp(z) - 1.0);
        case Activation::sigmoid:
            return 1.0 / (1.0 + std::exp(-z));
        case Activation::tanh_act:
            return std::tanh(z);
    }
    throw ParamError("invalid activation");
}

// Derivative in terms of pre-activation z and output a.
double activate_grad(Activation act, double z, double a) {
    switch (act) {
        case Activation::selu:
            return z > 0.0 ? kSeluLambda : a + kSeluLambda * kSeluAlpha;
        case Activation::sigmoid:
            return a * (1.0 - a);
        case Activation::tanh_act:
            return 1.0 - a * a;
    }
    throw ParamError("invalid activation");
}

int dim_product(const std::vector<int>& dims) {
    int p = 1;
    for (int d : dims) p *= d;
    return p;
}

} // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "selu") return Activation::selu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh_act;
    throw ParamError("unknown activation: " + name);
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::selu: return "selu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh_act: return "tanh";
    }
    throw ParamError("invalid activation value");
}

Net::Net(NetSpec spec) : spec_(std::move(spec)) {
    if (spec_.input_dims.size() != 1 && spec_.input_dims.size() != 3)
        throw ParamError("input must be {N} or {C,H,W}");
    for (int d : spec_.input_dims)
        if (d < 1) throw ParamError("input dimensions must be positive");
    if (spec_.layers.empty()) throw ParamError("net needs at least one layer");

    std::vector<int> dims = spec_.input_dims;
    std::size_t offset = 0;
    for (const LayerSpec& layer : spec_.layers) {
        LayerPlan plan;
        plan.spec = layer;
        plan.in_dims = dims;
        switch (layer.kind) {
            case LayerSpec::Kind::conv: {
                if (dims.size() != 3) throw ParamError("conv needs a {C,H,W} input");
                if (layer.maps < 1 || layer.kernel < 1 || layer.stride < 1)
                    throw ParamError("bad conv geometry");
                const int c = dims[0], h = dims[1], w = dims[2];
                if (h < layer.kernel || w < layer.kernel)
                    throw ParamError("conv kernel larger than input");
                if ((h - layer.kernel) % layer.stride != 0 || (w - layer.kernel) % layer.stride != 0)
                    throw ParamError("conv output dimensions must be integral");
                const int oh = (h - layer.kernel) / layer.stride + 1;
                const int ow = (w - layer.kernel) / layer.stride + 1;
                plan.out_dims = {layer.maps, oh, ow};
                plan.weight_count = static_cast<std::size_t>(layer.maps) * c * layer.kernel * layer.kernel;
                plan.bias_count = static_cast<std::size_t>(layer.maps);
                plan.fan_in = static_cast<std::size_t>(c) * layer.kernel * layer.kernel;
                break;
            }
            case LayerSpec::Kind::pool: {
                if (dims.size() != 3) throw ParamError("pool needs a {C,H,W} input");
                if (layer.kernel < 1 || layer.stride < 1) throw ParamError("bad pool geometry");
                const int h = dims[1], w = dims[2];
                if (h < layer.kernel || w < layer.kernel)
                    throw ParamError("pool kernel larger than input");
                const int oh = (h - layer.kernel) / layer.stride + 1; // floor semantics
                const int ow = (w - layer.kernel) / layer.stride + 1;
                plan.out_dims = {dims[0], oh, ow};
                break;
            }
            case LayerSpec::Kind::flatten: {
                if (dims.size() != 3) throw ParamError("flatten needs a {C,H,W} input");
                plan.out_dims = {dim_product(dims)};
                break;
            }
            case LayerSpec::Kind::dense: {
                if (dims.size() != 1) throw ParamError("dense needs a flat input");
                if (layer.units < 1) throw ParamError("dense units must be positive");
                plan.out_dims = {layer.units};
                plan.weight_count = static_cast<std::size_t>(layer.units) * dims[0];
                plan.bias_count = static_cast<std::size_t>(layer.units);
                plan.fan_in = static_cast<std::size_t>(dims[0]);
                break;
            }
        }
        plan.weight_offset = offset;
        offset += plan.weight_count;
        plan.bias_offset = offset;
        offset += plan.bias_count;
        dims = plan.out_dims;
        plan_.push_back(std::move(plan));
    }
    output_dims_ = dims;
    input_size_ = dim_product(spec_.input_dims);
    output_size_ = dim_product(output_dims_);
    params_.assign(offset, 0.0);
}

void Net::init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (const LayerPlan& plan : plan_) {
        if (plan.weight_count == 0) continue;
        const double std_dev = std::sqrt(1.0 / static_cast<double>(plan.fan_in));
        for (std::size_t i = 0; i < plan.weight_count; ++i)
            params_[plan.weight_offset + i] = rng.normal() * std_dev;
        for (std::size_t i = 0; i < plan.bias_count; ++i) params_[plan.bias_offset + i] = 0.0;
    }
}

namespace {

struct LayerCache {
    std::vector<double> z;      // pre-activation (conv/dense)
    std::vector<double> out;    // layer output
    std::vector<int> argmax;    // max-pool routing
};

} // namespace

std::vector<double> Net::forward(const std::vector<double>& input) const {
    if (static_cast<int>(input.size()) != input_size_)
        throw ParamError("input size does not match the net");
    std::vector<double> cur = input;
    std::vector<double> next;
    for (const LayerPlan& plan : plan_) {
        const LayerSpec& l = plan.spec;
        switch (l.kind) {
            case LayerSpec::Kind::conv: {
                const int ci = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int m = plan.out_dims[0], oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                next.assign(static_cast<std::size_t>(m) * oh * ow, 0.0);
                const double* wts = params_.data() + plan.weight_offset;
                const double* bias = params_.data() + plan.bias_offset;
                for (int om = 0; om < m; ++om) {
                    double* out_map = next.data() + static_cast<std::size_t>(om) * oh * ow;
                    for (int i = 0; i < oh * ow; ++i) out_map[i] = bias[om];
                    for (int ic = 0; ic < ci; ++ic) {
                        const double* in_map = cur.data() + static_cast<std::size_t>(ic) * h * w;
                        const double* wmap =
                            wts + (static_cast<std::size_t>(om) * ci + ic) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            for (int kx = 0; kx < k; ++kx) {
                                const double wv = wmap[ky * k + kx];
                                for (int oy = 0; oy < oh; ++oy) {
                                    const double* in_row = in_map + (oy * s + ky) * w + kx;
                                    double* out_row = out_map + oy * ow;
                                    for (int ox = 0; ox < ow; ++ox)
                                        out_row[ox] += wv * in_row[ox * s];
                                }
                            }
                        }
                    }
                }
                for (double& v : next) v = activate(l.act, v);
                cur.swap(next);
                break;
            }
            case LayerSpec::Kind::pool: {
                const int c = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                next.assign(static_cast<std::size_t>(c) * oh * ow, 0.0);
                for (int ic = 0; ic < c; ++ic) {
                    const double* in_map = cur.data() + static_cast<std::size_t>(ic) * h * w;
                    double* out_map = next.data() + static_cast<std::size_t>(ic) * oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            if (l.pool_max) {
                                double best = in_map[(oy * s) * w + ox * s];
                                for (int ky = 0; ky < k; ++ky)
                                    for (int kx = 0; kx < k; ++kx) {
                                        const double v = in_map[(oy * s + ky) * w + ox * s + kx];
                                        if (v > best) best = v;
                                    }
                                out_map[oy * ow + ox] = best;
                            } else {
                                double sum = 0.0;
                                for (int ky = 0; ky < k; ++ky)
                                    for (int kx = 0; kx < k; ++kx)
                                        sum += in_map[(oy * s + ky) * w + ox * s + kx];
                                out_map[oy * ow + ox] = sum / (k * k);
                            }
                        }
                    }
                }
                cur.swap(next);
                break;
            }
            case LayerSpec::Kind::flatten:
                break; // same buffer, new shape
            case LayerSpec::Kind::dense: {
                const int in_n = plan.in_dims[0], out_n = plan.out_dims[0];
                next.assign(static_cast<std::size_t>(out_n), 0.0);
                const double* wts = params_.data() + plan.weight_offset;
                const double* bias = params_.data() + plan.bias_offset;
                for (int o = 0; o < out_n; ++o) {
                    const double* row = wts + static_cast<std::size_t>(o) * in_n;
                    double acc = bias[o];
                    for (int i = 0; i < in_n; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
                    next[static_cast<std::size_t>(o)] = activate(l.act, acc);
                }
                cur.swap(next);
                break;
            }
        }
    }
    return cur;
}

MseResult mse_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size() || pred.empty())
        throw ParamError("prediction and target lengths must match and be nonzero");
    MseResult r;
    r.gradient.resize(pred.size());
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        r.value += d * d * inv;
        r.gradient[i] = 2.0 * d * inv;
    }
    return r;
}

std::vector<double> Net::forward_backward(const std::vector<double>& input,
                                          const std::vector<double>& target,
                                          std::vector<double>& grad) const {
    if (static_cast<int>(input.size()) != input_size_)
        throw ParamError("input size does not match the net");
    if (static_cast<int>(target.size()) != output_size_)
        throw ParamError("target size does not match the net");
    if (grad.size() != params_.size()) throw ParamError("gradient buffer size mismatch");

    // 1. Forward with caches.
    const std::size_t n_layers = plan_.size();
    std::vector<LayerCache> caches(n_layers);
    std::vector<std::vector<double>> acts(n_layers + 1);
    acts[0] = input;
    for (std::size_t li = 0; li < n_layers; ++li) {
        const LayerPlan& plan = plan_[li];
        const LayerSpec& l = plan.spec;
        const std::vector<double>& in = acts[li];
        std::vector<double>& out = acts[li + 1];
        switch (l.kind) {
            case LayerSpec::Kind::conv: {
                const int ci = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int m = plan.out_dims[0], oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                std::vector<double>& z = caches[li].z;
                z.assign(static_cast<std::size_t>(m) * oh * ow, 0.0);
                const double* wts = params_.data() + plan.weight_offset;
                const double* bias = params_.data() + plan.bias_offset;
                for (int om = 0; om < m; ++om) {
                    double* z_map = z.data() + static_cast<std::size_t>(om) * oh * ow;
                    for (int i = 0; i < oh * ow; ++i) z_map[i] = bias[om];
                    for (int ic = 0; ic < ci; ++ic) {
                        const double* in_map = in.data() + static_cast<std::size_t>(ic) * h * w;
                        const double* wmap = wts + (static_cast<std::size_t>(om) * ci + ic) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            for (int kx = 0; kx < k; ++kx) {
                                const double wv = wmap[ky * k + kx];
                                for (int oy = 0; oy < oh; ++oy) {
                                    const double* in_row = in_map + (oy * s + ky) * w + kx;
                                    double* z_row = z_map + oy * ow;
                                    for (int ox = 0; ox < ow; ++ox) z_row[ox] += wv * in_row[ox * s];
                                }
                            }
                        }
                    }
                }
                out.resize(z.size());
                for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate(l.act, z[i]);
                break;
            }
            case LayerSpec::Kind::pool: {
                const int c = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                out.assign(static_cast<std::size_t>(c) * oh * ow, 0.0);
                if (l.pool_max) caches[li].argmax.assign(out.size(), 0);
                for (int ic = 0; ic < c; ++ic) {
                    const double* in_map = in.data() + static_cast<std::size_t>(ic) * h * w;
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            const std::size_t oidx =
                                static_cast<std::size_t>(ic) * oh * ow + static_cast<std::size_t>(oy) * ow + ox;
                            if (l.pool_max) {
                                int best_at = (oy * s) * w + ox * s;
                                double best = in_map[best_at];
                                for (int ky = 0; ky < k; ++ky)
                                    for (int kx = 0; kx < k; ++kx) {
                                        const int at = (oy * s + ky) * w + ox * s + kx;
                                        if (in_map[at] > best) { // ties keep the first
                                            best = in_map[at];
                                            best_at = at;
                                        }
                                    }
                                out[oidx] = best;
                                caches[li].argmax[oidx] = best_at;
                            } else {
                                double sum = 0.0;
                                for (int ky = 0; ky < k; ++ky)
                                    for (int kx = 0; kx < k; ++kx)
                                        sum += in_map[(oy * s + ky) * w + ox * s + kx];
                                out[oidx] = sum / (k * k);
                            }
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::flatten:
                out = in;
                break;
            case LayerSpec::Kind::dense: {
                const int in_n = plan.in_dims[0], out_n = plan.out_dims[0];
                std::vector<double>& z = caches[li].z;
                z.assign(static_cast<std::size_t>(out_n), 0.0);
                const double* wts = params_.data() + plan.weight_offset;
                const double* bias = params_.data() + plan.bias_offset;
                for (int o = 0; o < out_n; ++o) {
                    const double* row = wts + static_cast<std::size_t>(o) * in_n;
                    double acc = bias[o];
                    for (int i = 0; i < in_n; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
                    z[static_cast<std::size_t>(o)] = acc;
                }
                out.resize(z.size());
                for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate(l.act, z[i]);
                break;
            }
        }
    }

    // 2. Loss gradient at the head.
    std::vector<double> target_d(target.begin(), target.end());
    const MseResult loss = mse_loss(acts[n_layers], target_d);
    std::vector<double> delta = loss.gradient; // dLoss/d(output)

    // 3. Backward walk.
    for (std::size_t li = n_layers; li-- > 0;) {
        const LayerPlan& plan = plan_[li];
        const LayerSpec& l = plan.spec;
        const std::vector<double>& in = acts[li];
        const std::vector<double>& out = acts[li + 1];
        std::vector<double> din;
        switch (l.kind) {
            case LayerSpec::Kind::conv: {
                const int ci = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int m = plan.out_dims[0], oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                const std::vector<double>& z = caches[li].z;
                std::vector<double> dz(delta.size());
                for (std::size_t i = 0; i < delta.size(); ++i)
                    dz[i] = delta[i] * activate_grad(l.act, z[i], out[i]);
                din.assign(in.size(), 0.0);
                double* gw = grad.data() + plan.weight_offset;
                double* gb = grad.data() + plan.bias_offset;
                const double* wts = params_.data() + plan.weight_offset;
                for (int om = 0; om < m; ++om) {
                    const double* dz_map = dz.data() + static_cast<std::size_t>(om) * oh * ow;
                    double bacc = 0.0;
                    for (int i = 0; i < oh * ow; ++i) bacc += dz_map[i];
                    gb[om] += bacc;
                    for (int ic = 0; ic < ci; ++ic) {
                        const double* in_map = in.data() + static_cast<std::size_t>(ic) * h * w;
                        double* din_map = din.data() + static_cast<std::size_t>(ic) * h * w;
                        const std::size_t wbase = (static_cast<std::size_t>(om) * ci + ic) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            for (int kx = 0; kx < k; ++kx) {
                                const double wv = wts[wbase + ky * k + kx];
                                double wacc = 0.0;
                                for (int oy = 0; oy < oh; ++oy) {
                                    const double* in_row = in_map + (oy * s + ky) * w + kx;
                                    double* din_row = din_map + (oy * s + ky) * w + kx;
                                    const double* dz_row = dz_map + oy * ow;
                                    for (int ox = 0; ox < ow; ++ox) {
                                        wacc += dz_row[ox] * in_row[ox * s];
                                        din_row[ox * s] += wv * dz_row[ox];
                                    }
                                }
                                gw[wbase + ky * k + kx] += wacc;
                            }
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::pool: {
                const int c = plan.in_dims[0], h = plan.in_dims[1], w = plan.in_dims[2];
                const int oh = plan.out_dims[1], ow = plan.out_dims[2];
                const int k = l.kernel, s = l.stride;
                din.assign(in.size(), 0.0);
                for (int ic = 0; ic < c; ++ic) {
                    double* din_map = din.data() + static_cast<std::size_t>(ic) * h * w;
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            const std::size_t oidx =
                                static_cast<std::size_t>(ic) * oh * ow + static_cast<std::size_t>(oy) * ow + ox;
                            if (l.pool_max) {
                                din_map[caches[li].argmax[oidx]] += delta[oidx];
                            } else {
                                const double share = delta[oidx] / (k * k);
                                for (int ky = 0; ky < k; ++ky)
                                    for (int kx = 0; kx < k; ++kx)
                                        din_map[(oy * s + ky) * w + ox * s + kx] += share;
                            }
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::flatten:
                din = delta;
                break;
            case LayerSpec::Kind::dense: {
                const int in_n = plan.in_dims[0], out_n = plan.out_dims[0];
                const std::vector<double>& z = caches[li].z;
                din.assign(static_cast<std::size_t>(in_n), 0.0);
                double* gw = grad.data() + plan.weight_offset;
                double* gb = grad.data() + plan.bias_offset;
                const double* wts = params_.data() + plan.weight_offset;
                for (int o = 0; o < out_n; ++o) {
                    const double dz =
                        delta[static_cast<std::size_t>(o)] *
                        activate_grad(l.act, z[static_cast<std::size_t>(o)], out[static_cast<std::size_t>(o)]);
                    gb[o] += dz;
                    double* gw_row = gw + static_cast<std::size_t>(o) * in_n;
                    const double* w_row = wts + static_cast<std::size_t>(o) * in_n;
                    for (int i = 0; i < in_n; ++i) {
                        gw_row[i] += dz * in[static_cast<std::size_t>(i)];
                        din[static_cast<std::size_t>(i)] += dz * w_row[i];
                    }
                }
                break;
            }
        }
        if (l.kind != LayerSpec::Kind::flatten) delta.swap(din);
    }
    return acts[n_layers];
}

NetSpec build_single_block_net(int channels, int pool_stride) {
    if (channels != 1 && channels != 2) throw ParamError("single-block net takes 1 or 2 channels");
    if (pool_stride < 1) throw ParamError("pool stride must be positive");
    NetSpec spec;
    spec.input_dims = {channels, kBlockSize, kBlockSize};
    LayerSpec conv;
    conv.kind = LayerSpec::Kind::conv;
    conv.maps = 6;
    conv.kernel = 5;
    conv.stride = 1;
    conv.act = Activation::selu;
    spec.layers.push_back(conv);
    LayerSpec pool;
    pool.kind = LayerSpec::Kind::pool;
    pool.pool_max = true;
    pool.kernel = 5;
    pool.stride = pool_stride;
    spec.layers.push_back(pool);
    spec.layers.push_back({LayerSpec::Kind::flatten, 0, 0, 1, 0, true, Activation::selu});
    LayerSpec d1;
    d1.kind = LayerSpec::Kind::dense;
    d1.units = 40;
    d1.act = Activation::selu;
    spec.layers.push_back(d1);
    LayerSpec d2 = d1;
    d2.units = 24;
    spec.layers.push_back(d2);
    LayerSpec head = d1;
    head.units = 1;
    head.act = Activation::sigmoid;
    spec.layers.push_back(head);
    return spec;
}

NetSpec build_multi_block_net() {
    NetSpec spec;
    spec.input_dims = {kBlocksPerFrame};
    LayerSpec d;
    d.kind = LayerSpec::Kind::dense;
    d.act = Activation::selu;
    d.units = 60;
    spec.layers.push_back(d);
    d.units = 40;
    spec.layers.push_back(d);
    d.units = kBlocksPerFrame;
    d.act = Activation::sigmoid;
    spec.layers.push_back(d);
    return spec;
}

NetSpec build_lenet5_baseline() {
    NetSpec spec;
    spec.input_dims = {1, kBlockSize, kBlockSize};
    auto conv = [](int maps) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::conv;
        l.maps = maps;
        l.kernel = 5;
        l.stride = 1;
        l.act = Activation::tanh_act;
        return l;
    };
    LayerSpec avg;
    avg.kind = LayerSpec::Kind::pool;
    avg.pool_max = false;
    avg.kernel = 2;
    avg.stride = 2;
    spec.layers.push_back(conv(6));
    spec.layers.push_back(avg);
    spec.layers.push_back(conv(16));
    spec.layers.push_back(avg);
    spec.layers.push_back(conv(120));
    spec.layers.push_back({LayerSpec::Kind::flatten, 0, 0, 1, 0, true, Activation::selu});
    LayerSpec d;
    d.kind = LayerSpec::Kind::dense;
    d.units = 84;
    d.act = Activation::tanh_act;
    spec.layers.push_back(d);
    d.units = 1;
    d.act = Activation::sigmoid;
    spec.layers.push_back(d);
    return spec;
}

namespace {

// Canonical (video, frame, row, col) visit order; training must not depend on
// how the caller happened to assemble the dataset.
std::vector<std::size_t> canonical_indices(const BlockDataset& ds) {
    std::vector<std::size_t> order(ds.count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const BlockProvenance& pa = ds.provenance[a];
        const BlockProvenance& pb = ds.provenance[b];
        if (pa.video_id != pb.video_id) return pa.video_id < pb.video_id;
        if (pa.frame_index != pb.frame_index) return pa.frame_index < pb.frame_index;
        if (pa.block_row != pb.block_row) return pa.block_row < pb.block_row;
        return pa.block_col < pb.block_col;
    });
    return order;
}

// Canonical order with every frame verified complete (45 grid cells).
std::vector<std::size_t> framed_indices(const BlockDataset& ds) {
    if (ds.count() % kBlocksPerFrame != 0)
        throw DataError("dataset does not divide into whole frames");
    std::vector<std::size_t> order = canonical_indices(ds);
    const std::size_t n_frames = ds.count() / kBlocksPerFrame;
    for (std::size_t f = 0; f < n_frames; ++f) {
        const BlockProvenance& p0 = ds.provenance[order[f * kBlocksPerFrame]];
        for (int b = 0; b < kBlocksPerFrame; ++b) {
            const BlockProvenance& p = ds.provenance[order[f * kBlocksPerFrame + static_cast<std::size_t>(b)]];
            if (p.video_id != p0.video_id || p.frame_index != p0.frame_index ||
                p.block_row != b / kGridCols || p.block_col != b % kGridCols)
                throw DataError("frame " + p0.video_id + " is missing blocks");
        }
    }
    return order;
}

} // namespace

SampleSet single_block_samples(const BlockDataset& ds) {
    const std::vector<std::size_t> order = canonical_indices(ds);
    SampleSet set;
    set.input_dim = ds.h * ds.w * ds.channels;
    set.target_dim = 1;
    set.inputs.reserve(ds.count());
    set.targets.reserve(ds.count());
    for (std::size_t i : order) {
        set.inputs.push_back(ds.blocks[i]);
        set.targets.push_back({ds.targets[i]});
    }
    return set;
}

SampleSet multi_block_samples(const Net& single_net, const BlockDataset& ds, int threads) {
    const std::vector<std::size_t> order = framed_indices(ds);
    const std::size_t n_frames = ds.count() / kBlocksPerFrame;

    SampleSet set;
    set.input_dim = kBlocksPerFrame;
    set.target_dim = kBlocksPerFrame;
    set.inputs.assign(n_frames, std::vector<float>(kBlocksPerFrame));
    set.targets.assign(n_frames, std::vector<float>(kBlocksPerFrame));
    parallel_for(static_cast<int>(n_frames), threads, [&](int fi) {
        const std::size_t base = static_cast<std::size_t>(fi) * kBlocksPerFrame;
        for (int b = 0; b < kBlocksPerFrame; ++b) {
            const std::size_t si = order[base + static_cast<std::size_t>(b)];
            std::vector<double> input(ds.blocks[si].begin(), ds.blocks[si].end());
            const std::vector<double> out = single_net.forward(input);
            set.inputs[static_cast<std::size_t>(fi)][static_cast<std::size_t>(b)] = static_cast<float>(out[0]);
            set.targets[static_cast<std::size_t>(fi)][static_cast<std::size_t>(b)] = ds.targets[si];
        }
    });
    return set;
}

namespace {

double epoch_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    try {
        return auc(roc_curve(scores, labels));
    } catch (const DataError&) {
        return 0.5; // single-class epoch
    }
}

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
};

} // namespace

History train(Net& net, const SampleSet& train_set, const SampleSet& val_set,
              const TrainConfig& config) {
    if (config.epochs < 1) throw ParamError("epochs must be at least 1");
    if (config.batch_size < 1) throw ParamError("batch size must be at least 1");
    if (config.learning_rate < 0.0) throw ParamError("learning rate must be nonnegative");
    if (config.threads < 1) throw ParamError("thread count must be at least 1");
    const bool adam = config.optimizer == "adam";
    if (!adam && config.optimizer != "sgd") throw ParamError("optimizer must be adam or sgd");
    if (train_set.count() == 0) throw ParamError("empty training set");
    if (train_set.input_dim != net.input_size() || train_set.target_dim != net.output_size())
        throw ParamError("training set shape does not match the net");
    if (val_set.count() > 0 &&
        (val_set.input_dim != net.input_size() || val_set.target_dim != net.output_size()))
        throw ParamError("validation set shape does not match the net");

    const std::size_t n = train_set.count();
    const std::size_t n_params = net.param_count();
    Rng shuffle_rng(mix_seed(config.rng_seed, "shuffle"));
    AdamState opt;
    if (adam) {
        opt.m.assign(n_params, 0.0);
        opt.v.assign(n_params, 0.0);
    }

    History history;
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});

    // Chunked batch evaluation: each chunk owns a gradient buffer, reduced in
    // chunk order. The chunk layout depends only on the batch, never on the
    // thread count, so any thread count reproduces the same model bit for bit.
    constexpr int kMaxChunks = 16;
    std::vector<std::vector<double>> chunk_grads(kMaxChunks);
    std::vector<double> grad(n_params);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) shuffle_rng.shuffle(indices);

        double loss_sum = 0.0;
        std::vector<double> epoch_scores;
        std::vector<int> epoch_labels;
        epoch_scores.reserve(n * static_cast<std::size_t>(train_set.target_dim));
        epoch_labels.reserve(n * static_cast<std::size_t>(train_set.target_dim));

        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            const int batch_n = static_cast<int>(stop - start);
            const int active = std::min(kMaxChunks, batch_n);
            const int per = (batch_n + active - 1) / active;

            std::vector<double> chunk_loss(static_cast<std::size_t>(active), 0.0);
            std::vector<std::vector<double>> outputs(static_cast<std::size_t>(batch_n));
            parallel_for(active, config.threads, [&](int ci) {
                std::vector<double>& cgrad = chunk_grads[static_cast<std::size_t>(ci)];
                cgrad.assign(n_params, 0.0);
                const int lo = ci * per;
                const int hi = std::min(batch_n, lo + per);
                for (int b = lo; b < hi; ++b) {
                    const std::size_t si = indices[start + static_cast<std::size_t>(b)];
                    std::vector<double> input(train_set.inputs[si].begin(), train_set.inputs[si].end());
                    std::vector<double> target(train_set.targets[si].begin(), train_set.targets[si].end());
                    std::vector<double> out = net.forward_backward(input, target, cgrad);
                    chunk_loss[static_cast<std::size_t>(ci)] += mse_loss(out, target).value;
                    outputs[static_cast<std::size_t>(b)] = std::move(out);
                }
            });

            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (int ci = 0; ci < active; ++ci) {
                batch_loss += chunk_loss[static_cast<std::size_t>(ci)];
                const std::vector<double>& cgrad = chunk_grads[static_cast<std::size_t>(ci)];
                for (std::size_t p = 0; p < n_params; ++p) grad[p] += cgrad[p];
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch starting at sample " + std::to_string(start));
            loss_sum += batch_loss;

            for (int b = 0; b < batch_n; ++b) {
                const std::size_t si = indices[start + static_cast<std::size_t>(b)];
                for (int d = 0; d < train_set.target_dim; ++d) {
                    epoch_scores.push_back(outputs[static_cast<std::size_t>(b)][static_cast<std::size_t>(d)]);
                    epoch_labels.push_back(train_set.targets[si][static_cast<std::size_t>(d)] > 0.0f ? 1 : 0);
                }
            }

            const double scale = 1.0 / batch_n;
            std::vector<double>& params = net.params();
            if (adam) {
                opt.t += 1;
                const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(opt.t));
                const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(opt.t));
                for (std::size_t p = 0; p < n_params; ++p) {
                    const double g = grad[p] * scale;
                    opt.m[p] = config.beta1 * opt.m[p] + (1.0 - config.beta1) * g;
                    opt.v[p] = config.beta2 * opt.v[p] + (1.0 - config.beta2) * g * g;
                    params[p] -= config.learning_rate * (opt.m[p] / bc1) /
                                 (std::sqrt(opt.v[p] / bc2) + config.epsilon);
                }
            } else {
                for (std::size_t p = 0; p < n_params; ++p)
                    params[p] -= config.learning_rate * grad[p] * scale;
            }
        }

        history.train_loss.push_back(loss_sum / static_cast<double>(n));
        history.train_auc.push_back(epoch_auc(epoch_scores, epoch_labels));

        if (val_set.count() > 0) {
            const std::size_t vn = val_set.count();
            std::vector<double> val_scores(vn * static_cast<std::size_t>(val_set.target_dim));
            std::vector<int> val_labels(val_scores.size());
            std::vector<double> sample_loss(vn, 0.0);
            parallel_for(static_cast<int>(vn), config.threads, [&](int vi) {
                const std::size_t i = static_cast<std::size_t>(vi);
                std::vector<double> input(val_set.inputs[i].begin(), val_set.inputs[i].end());
                std::vector<double> target(val_set.targets[i].begin(), val_set.targets[i].end());
                const std::vector<double> out = net.forward(input);
                sample_loss[i] = mse_loss(out, target).value;
                for (int d = 0; d < val_set.target_dim; ++d) {
                    val_scores[i * static_cast<std::size_t>(val_set.target_dim) + static_cast<std::size_t>(d)] =
                        out[static_cast<std::size_t>(d)];
                    val_labels[i * static_cast<std::size_t>(val_set.target_dim) + static_cast<std::size_t>(d)] =
                        target[static_cast<std::size_t>(d)] > 0.0 ? 1 : 0;
                }
            });
            double vloss = 0.0;
            for (double s : sample_loss) vloss += s;
            vloss /= static_cast<double>(vn);
            if (!std::isfinite(vloss))
                throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
            history.val_loss.push_back(vloss);
            history.val_auc.push_back(epoch_auc(val_scores, val_labels));
        } else {
            history.val_loss.push_back(0.0);
            history.val_auc.push_back(0.0);
        }
    }
    return history;
}

std::vector<double> predict(const Net& net, const BlockDataset& ds, int threads) {
    if (ds.h * ds.w * ds.channels != net.input_size())
        throw ParamError("dataset block shape does not match the net");
    std::vector<double> scores(ds.count());
    parallel_for(static_cast<int>(ds.count()), threads, [&](int i) {
        const std::vector<float>& block = ds.blocks[static_cast<std::size_t>(i)];
        std::vector<double> input(block.begin(), block.end());
        const std::vector<double> out = net.forward(input);
        if (!std::isfinite(out[0])) throw NumericError("non-finite prediction");
        scores[static_cast<std::size_t>(i)] = out[0];
    });
    return scores;
}

std::vector<double> frame_scores(const Net& net_single, const Net& net_multi,
                                 const std::vector<std::vector<float>>& frame_blocks) {
    if (static_cast<int>(frame_blocks.size()) != kBlocksPerFrame)
        throw ParamError("a frame has exactly 45 blocks");
    if (net_multi.input_size() != kBlocksPerFrame || net_multi.output_size() != kBlocksPerFrame)
        throw ParamError("multi-block net must map 45 scores to 45 scores");
    std::vector<double> single_scores(kBlocksPerFrame);
    for (int b = 0; b < kBlocksPerFrame; ++b) {
        std::vector<double> input(frame_blocks[static_cast<std::size_t>(b)].begin(),
                                  frame_blocks[static_cast<std::size_t>(b)].end());
        if (static_cast<int>(input.size()) != net_single.input_size())
            throw ParamError("block size does not match the single-block net");
        single_scores[static_cast<std::size_t>(b)] = net_single.forward(input)[0];
    }
    return net_multi.forward(single_scores);
}

std::vector<double> refine_scores(const Net& net_single, const Net& net_multi,
                                  const BlockDataset& ds, int threads) {
    if (ds.h * ds.w * ds.channels != net_single.input_size())
        throw ParamError("dataset block shape does not match the single-block net");
    if (net_multi.input_size() != kBlocksPerFrame || net_multi.output_size() != kBlocksPerFrame)
        throw ParamError("multi-block net must map 45 scores to 45 scores");
    const std::vector<std::size_t> order = framed_indices(ds);
    const std::size_t n_frames = ds.count() / kBlocksPerFrame;
    std::vector<double> scores(ds.count());
    parallel_for(static_cast<int>(n_frames), threads, [&](int fi) {
        const std::size_t base = static_cast<std::size_t>(fi) * kBlocksPerFrame;
        std::vector<double> single_scores(kBlocksPerFrame);
        for (int b = 0; b < kBlocksPerFrame; ++b) {
            const std::size_t si = order[base + static_cast<std::size_t>(b)];
            std::vector<double> input(ds.blocks[si].begin(), ds.blocks[si].end());
            single_scores[static_cast<std::size_t>(b)] = net_single.forward(input)[0];
        }
        const std::vector<double> refined = net_multi.forward(single_scores);
        for (int b = 0; b < kBlocksPerFrame; ++b) {
            const double v = refined[static_cast<std::size_t>(b)];
            if (!std::isfinite(v)) throw NumericError("non-finite prediction");
            scores[order[base + static_cast<std::size_t>(b)]] = v;
        }
    });
    return scores;
}

namespace {

nlohmann::ordered_json spec_to_json(const NetSpec& spec) {
    nlohmann::ordered_json j;
    j["input"] = spec.input_dims;
    j["layers"] = nlohmann::ordered_json::array();
    for (const LayerSpec& l : spec.layers) {
        nlohmann::ordered_json lj;
        switch (l.kind) {
            case LayerSpec::Kind::conv:
                lj["type"] = "conv";
                lj["maps"] = l.maps;
                lj["kernel"] = l.kernel;
                lj["stride"] = l.stride;
                lj["activation"] = to_string(l.act);
                break;
            case LayerSpec::Kind::pool:
                lj["type"] = "pool";
                lj["kind"] = l.pool_max ? "max" : "avg";
                lj["kernel"] = l.kernel;
                lj["stride"] = l.stride;
                break;
            case LayerSpec::Kind::flatten:
                lj["type"] = "flatten";
                break;
            case LayerSpec::Kind::dense:
                lj["type"] = "dense";
                lj["units"] = l.units;
                lj["activation"] = to_string(l.act);
                break;
        }
        j["layers"].push_back(lj);
    }
    return j;
}

NetSpec spec_from_json(const nlohmann::json& j) {
    NetSpec spec;
    spec.input_dims = j.at("input").get<std::vector<int>>();
    for (const auto& lj : j.at("layers")) {
        LayerSpec l;
        const std::string type = lj.at("type").get<std::string>();
        if (type == "conv") {
            l.kind = LayerSpec::Kind::conv;
            l.maps = lj.at("maps").get<int>();
            l.kernel = lj.at("kernel").get<int>();
            l.stride = lj.at("stride").get<int>();
            l.act = activation_from_string(lj.at("activation").get<std::string>());
        } else if (type == "pool") {
            l.kind = LayerSpec::Kind::pool;
            const std::string kind = lj.at("kind").get<std::string>();
            if (kind != "max" && kind != "avg") throw DataError("pool kind must be max or avg");
            l.pool_max = kind == "max";
            l.kernel = lj.at("kernel").get<int>();
            l.stride = lj.at("stride").get<int>();
        } else if (type == "flatten") {
            l.kind = LayerSpec::Kind::flatten;
        } else if (type == "dense") {
            l.kind = LayerSpec::Kind::dense;
            l.units = lj.at("units").get<int>();
            l.act = activation_from_string(lj.at("activation").get<std::string>());
        } else {
            throw DataError("unknown layer type: " + type);
        }
        spec.layers.push_back(l);
    }
    return spec;
}

} // namespace

void save_net(const Net& net, const std::string& path) {
    const std::string json = spec_to_json(net.spec()).dump();
    std::string out;
    out.reserve(12 + json.size() + net.param_count() * 4);
    out += "AFMN";
    auto put_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<char>(v & 0xff));
        out.push_back(static_cast<char>((v >> 8) & 0xff));
        out.push_back(static_cast<char>((v >> 16) & 0xff));
        out.push_back(static_cast<char>((v >> 24) & 0xff));
    };
    put_u32(1);
    put_u32(static_cast<std::uint32_t>(json.size()));
    out += json;
    for (double p : net.params()) put_u32(std::bit_cast<std::uint32_t>(static_cast<float>(p)));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

Net load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::size_t offset = 0;
    auto read_bytes = [&](void* dst, std::size_t count, const char* what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count)
            throw DataError("truncated " + std::string(what) + " at offset " + std::to_string(offset) +
                            " in " + path);
        offset += count;
    };
    auto read_u32 = [&](const char* what) {
        unsigned char b[4];
        read_bytes(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };

    char magic[4];
    read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, "AFMN", 4) != 0) throw DataError("bad magic in " + path);
    const std::uint32_t version = read_u32("version");
    if (version != 1) throw DataError("unsupported model version in " + path);
    const std::uint32_t json_len = read_u32("spec length");
    std::string json(json_len, '\0');
    if (json_len > 0) read_bytes(json.data(), json_len, "spec");

    NetSpec spec;
    try {
        spec = spec_from_json(nlohmann::json::parse(json));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad model spec in " + path + ": " + e.what());
    }
    Net net(std::move(spec));
    for (double& p : net.params()) {
        const std::uint32_t bits = read_u32("parameters");
        p = static_cast<double>(std::bit_cast<float>(bits));
    }
    char extra;
    if (in.read(&extra, 1)) throw DataError("trailing bytes in " + path);
    return net;
}

} // namespace amfm
