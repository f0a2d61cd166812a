#include "align/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "align/rng.hpp"

namespace align {

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

void NetConfig::validate() const {
    if (input_h < 7 || input_w < 7)
        throw std::runtime_error("NetConfig: input too small for two conv+pool stages");
    if (conv2_h() < 1 || conv2_w() < 1 || flat() < 1)
        throw std::runtime_error("NetConfig: network collapses to zero size");
    if (conv1_filters < 1 || conv2_filters < 1 || embed_dim < 1)
        throw std::runtime_error("NetConfig: bad layer sizes");
}

NetworkParams NetworkParams::zeros_like(const NetworkParams& p) {
    NetworkParams g;
    g.cfg = p.cfg;
    g.conv1_w = Tensor::zeros(p.conv1_w.shape);
    g.conv1_b = Tensor::zeros(p.conv1_b.shape);
    g.conv2_w = Tensor::zeros(p.conv2_w.shape);
    g.conv2_b = Tensor::zeros(p.conv2_b.shape);
    g.dense_w = Tensor::zeros(p.dense_w.shape);
    g.dense_b = Tensor::zeros(p.dense_b.shape);
    return g;
}

std::vector<Tensor*> NetworkParams::tensors() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}
std::vector<const Tensor*> NetworkParams::tensors() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}

NetworkParams NetworkParams::init(const NetConfig& cfg, uint64_t seed) {
    cfg.validate();
    NetworkParams p;
    p.cfg = cfg;
    p.conv1_w = Tensor::zeros({cfg.conv1_filters, 1, 3, 3});
    p.conv1_b = Tensor::zeros({cfg.conv1_filters});
    p.conv2_w = Tensor::zeros({cfg.conv2_filters, cfg.conv1_filters, 3, 3});
    p.conv2_b = Tensor::zeros({cfg.conv2_filters});
    p.dense_w = Tensor::zeros({cfg.embed_dim, cfg.flat()});
    p.dense_b = Tensor::zeros({cfg.embed_dim});

    Rng rng(seed);
    auto fill = [&](Tensor& t, int fan_in, int fan_out) {
        double r = std::sqrt(6.0 / double(fan_in + fan_out));
        for (double& v : t.data) v = rng.uniform(-r, r);
    };
    fill(p.conv1_w, 9, cfg.conv1_filters * 9);
    fill(p.conv2_w, cfg.conv1_filters * 9, cfg.conv2_filters * 9);
    fill(p.dense_w, cfg.flat(), cfg.embed_dim);
    return p;
}

namespace {

// post-ReLU activations plus what backward needs to route gradients
struct Activations {
    std::vector<double> conv1, pool1, conv2, pool2, embed;
    std::vector<uint8_t> relu1, relu2;  // pre-activation > 0
    std::vector<int> arg1, arg2;        // max locations per pool cell
};

void conv_relu(const double* in, int in_c, int in_h, int in_w, const Tensor& w, const Tensor& b,
               std::vector<double>& out, std::vector<uint8_t>& mask) {
    int out_c = w.shape[0];
    int oh = in_h - 2, ow = in_w - 2;
    out.assign(size_t(out_c) * oh * ow, 0.0);
    mask.assign(out.size(), 0);
    for (int f = 0; f < out_c; ++f) {
        double* o = out.data() + size_t(f) * oh * ow;
        for (int c = 0; c < in_c; ++c) {
            const double* src = in + size_t(c) * in_h * in_w;
            const double* k = w.data.data() + (size_t(f) * in_c + c) * 9;
            for (int i = 0; i < oh; ++i) {
                const double* r0 = src + size_t(i) * in_w;
                const double* r1 = r0 + in_w;
                const double* r2 = r1 + in_w;
                double* orow = o + size_t(i) * ow;
                for (int j = 0; j < ow; ++j) {
                    orow[j] += k[0] * r0[j] + k[1] * r0[j + 1] + k[2] * r0[j + 2] +
                               k[3] * r1[j] + k[4] * r1[j + 1] + k[5] * r1[j + 2] +
                               k[6] * r2[j] + k[7] * r2[j + 1] + k[8] * r2[j + 2];
                }
            }
        }
        double bias = b.data[f];
        uint8_t* m = mask.data() + size_t(f) * oh * ow;
        for (size_t i = 0; i < size_t(oh) * ow; ++i) {
            double v = o[i] + bias;
            if (v > 0.0) {
                o[i] = v;
                m[i] = 1;
            } else {
                o[i] = 0.0;
            }
        }
    }
}

// 2x2 max pool, ceil mode, first-max tie break
void maxpool(const std::vector<double>& in, int ch, int ih, int iw, std::vector<double>& out,
             std::vector<int>& arg) {
    int oh = (ih + 1) / 2, ow = (iw + 1) / 2;
    out.assign(size_t(ch) * oh * ow, 0.0);
    arg.assign(out.size(), 0);
    for (int c = 0; c < ch; ++c) {
        const double* src = in.data() + size_t(c) * ih * iw;
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                int best = -1;
                double bv = 0.0;
                for (int di = 0; di < 2; ++di) {
                    int y = 2 * i + di;
                    if (y >= ih) break;
                    for (int dj = 0; dj < 2; ++dj) {
                        int x = 2 * j + dj;
                        if (x >= iw) break;
                        int idx = y * iw + x;
                        if (best < 0 || src[idx] > bv) {
                            best = idx;
                            bv = src[idx];
                        }
                    }
                }
                size_t o = (size_t(c) * oh + i) * ow + j;
                out[o] = bv;
                arg[o] = c * ih * iw + best;
            }
        }
    }
}

void forward_full(const NetworkParams& p, const Patch& patch, Activations& a) {
    const NetConfig& c = p.cfg;
    if (patch.frames != c.input_h || patch.bins != c.input_w)
        throw std::runtime_error("forward: patch shape mismatch");

    conv_relu(patch.data.data(), 1, c.input_h, c.input_w, p.conv1_w, p.conv1_b, a.conv1, a.relu1);
    maxpool(a.conv1, c.conv1_filters, c.conv1_h(), c.conv1_w(), a.pool1, a.arg1);
    conv_relu(a.pool1.data(), c.conv1_filters, c.pool1_h(), c.pool1_w(), p.conv2_w, p.conv2_b,
              a.conv2, a.relu2);
    maxpool(a.conv2, c.conv2_filters, c.conv2_h(), c.conv2_w(), a.pool2, a.arg2);

    a.embed.assign(c.embed_dim, 0.0);
    const double* flat = a.pool2.data();
    int nflat = c.flat();
    for (int o = 0; o < c.embed_dim; ++o) {
        const double* w = p.dense_w.data.data() + size_t(o) * nflat;
        double acc = p.dense_b.data[o];
        for (int i = 0; i < nflat; ++i) acc += w[i] * flat[i];
        a.embed[o] = acc;
    }
}

// gradients of one twin, given dL/d embedding; accumulates into g
void backward_twin(const NetworkParams& p, const Patch& patch, const Activations& a,
                   const std::vector<double>& d_embed, NetworkParams& g) {
    const NetConfig& c = p.cfg;
    int nflat = c.flat();

    // dense
    std::vector<double> d_flat(nflat, 0.0);
    for (int o = 0; o < c.embed_dim; ++o) {
        double de = d_embed[o];
        g.dense_b.data[o] += de;
        double* gw = g.dense_w.data.data() + size_t(o) * nflat;
        const double* w = p.dense_w.data.data() + size_t(o) * nflat;
        for (int i = 0; i < nflat; ++i) {
            gw[i] += de * a.pool2[i];
            d_flat[i] += de * w[i];
        }
    }

    // pool2 -> conv2 (through ReLU mask)
    std::vector<double> d_conv2(a.conv2.size(), 0.0);
    for (size_t i = 0; i < d_flat.size(); ++i)
        if (a.relu2[a.arg2[i]]) d_conv2[a.arg2[i]] += d_flat[i];

    // conv2 weight grads and grad into pool1
    int p1h = c.pool1_h(), p1w = c.pool1_w();
    int c2h = c.conv2_h(), c2w = c.conv2_w();
    std::vector<double> d_pool1(a.pool1.size(), 0.0);
    for (int f = 0; f < c.conv2_filters; ++f) {
        const double* dout = d_conv2.data() + size_t(f) * c2h * c2w;
        double gb = 0.0;
        for (size_t i = 0; i < size_t(c2h) * c2w; ++i) gb += dout[i];
        g.conv2_b.data[f] += gb;
        for (int ch = 0; ch < c.conv1_filters; ++ch) {
            const double* src = a.pool1.data() + size_t(ch) * p1h * p1w;
            double* dsrc = d_pool1.data() + size_t(ch) * p1h * p1w;
            double* gk = g.conv2_w.data.data() + (size_t(f) * c.conv1_filters + ch) * 9;
            const double* k = p.conv2_w.data.data() + (size_t(f) * c.conv1_filters + ch) * 9;
            for (int i = 0; i < c2h; ++i) {
                for (int j = 0; j < c2w; ++j) {
                    double dv = dout[size_t(i) * c2w + j];
                    if (dv == 0.0) continue;
                    for (int di = 0; di < 3; ++di)
                        for (int dj = 0; dj < 3; ++dj) {
                            gk[di * 3 + dj] += dv * src[size_t(i + di) * p1w + (j + dj)];
                            dsrc[size_t(i + di) * p1w + (j + dj)] += dv * k[di * 3 + dj];
                        }
                }
            }
        }
    }

    // pool1 -> conv1
    std::vector<double> d_conv1(a.conv1.size(), 0.0);
    for (size_t i = 0; i < d_pool1.size(); ++i)
        if (a.relu1[a.arg1[i]]) d_conv1[a.arg1[i]] += d_pool1[i];

    int c1h = c.conv1_h(), c1w = c.conv1_w();
    for (int f = 0; f < c.conv1_filters; ++f) {
        const double* dout = d_conv1.data() + size_t(f) * c1h * c1w;
        double gb = 0.0;
        for (size_t i = 0; i < size_t(c1h) * c1w; ++i) gb += dout[i];
        g.conv1_b.data[f] += gb;
        double* gk = g.conv1_w.data.data() + size_t(f) * 9;
        const double* src = patch.data.data();
        for (int i = 0; i < c1h; ++i) {
            for (int j = 0; j < c1w; ++j) {
                double dv = dout[size_t(i) * c1w + j];
                if (dv == 0.0) continue;
                for (int di = 0; di < 3; ++di)
                    for (int dj = 0; dj < 3; ++dj)
                        gk[di * 3 + dj] += dv * src[size_t(i + di) * c.input_w + (j + dj)];
            }
        }
    }
}

} // namespace

std::vector<double> forward(const NetworkParams& params, const Patch& patch) {
    Activations a;
    forward_full(params, patch, a);
    return a.embed;
}

double euclidean(std::span<const double> e1, std::span<const double> e2) {
    if (e1.size() != e2.size()) throw std::runtime_error("euclidean: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < e1.size(); ++i) {
        double d = e1[i] - e2[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double contrastive_loss(double d_w, int y, double margin) {
    if (y == 0) return 0.5 * d_w * d_w;
    double h = std::max(0.0, margin - d_w);
    return 0.5 * h * h;
}

PairGrad backward(const NetworkParams& params, const Patch& p1, const Patch& p2, int y,
                  double margin) {
    Activations a1, a2;
    forward_full(params, p1, a1);
    forward_full(params, p2, a2);
    double d = euclidean(a1.embed, a2.embed);

    PairGrad out{NetworkParams::zeros_like(params), contrastive_loss(d, y, margin), d};

    // dL/dD; subgradient 0 at the hinge kink and at D = 0
    double dl_dd;
    if (y == 0)
        dl_dd = d;
    else if (d < margin)
        dl_dd = d - margin;
    else
        return out;
    if (d <= 0.0) return out;

    int n = params.cfg.embed_dim;
    std::vector<double> de1(n), de2(n);
    double s = dl_dd / d;
    for (int i = 0; i < n; ++i) {
        double diff = a1.embed[i] - a2.embed[i];
        de1[i] = s * diff;
        de2[i] = -s * diff;
    }
    backward_twin(params, p1, a1, de1, out.grads);
    backward_twin(params, p2, a2, de2, out.grads);
    return out;
}

std::vector<PairSample> sample_pairs(const std::vector<AlignedSpecs>& data, int n, uint64_t seed,
                                     int context, double neg_min_offset) {
    if (data.empty()) throw std::runtime_error("sample_pairs: empty dataset");
    Rng rng(seed);
    std::vector<PairSample> out;
    out.reserve(n);

    auto perf_frames = [&](const AlignedSpecs& d) { return d.perf_spec->frames; };

    int n_pos = n / 2;
    for (int s = 0; s < n; ++s) {
        bool positive = s < n_pos;
        int attempts = 0;
        for (;;) {
            if (++attempts > 10000)
                throw std::runtime_error("sample_pairs: piece too short for a negative pair");
            const AlignedSpecs& d = data[rng.range(0, int(data.size()) - 1)];
            int nf = d.score_spec->frames;
            int mf = perf_frames(d);
            double hop_s = double(d.score_spec->hop) / d.score_spec->sample_rate;
            int i = rng.range(0, nf - 1);
            double tp = d.gt->perf_at(i * hop_s);
            if (positive) {
                int j = std::clamp(int(std::lround(tp / hop_s)), 0, mf - 1);
                out.push_back({extract_patch(*d.score_spec, i, context),
                               extract_patch(*d.perf_spec, j, context), 0});
                break;
            }
            double t_max = (mf - 1) * hop_s;
            if (std::max(tp, t_max - tp) <= neg_min_offset) continue;
            int j = -1;
            for (int tries = 0; tries < 100; ++tries) {
                int cand = rng.range(0, mf - 1);
                if (std::fabs(cand * hop_s - tp) > neg_min_offset) {
                    j = cand;
                    break;
                }
            }
            if (j < 0) continue;
            out.push_back({extract_patch(*d.score_spec, i, context),
                           extract_patch(*d.perf_spec, j, context), 1});
            break;
        }
    }
    return out;
}

TrainResult train(const TrainConfig& cfg, const NetConfig& netcfg,
                  const std::vector<PairSample>& pairs) {
    if (pairs.empty()) throw std::runtime_error("train: no pairs");
    NetworkParams params = NetworkParams::init(netcfg, cfg.rng_seed);
    NetworkParams velocity = NetworkParams::zeros_like(params);
    Rng shuffle_rng(cfg.rng_seed ^ 0x5deece66dULL);

    std::vector<int> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);

    TrainResult res;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates
        for (int i = int(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.range(0, i)]);

        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            int bs = int(end - start);
            std::vector<PairGrad> grads(bs);
#pragma omp parallel for schedule(dynamic)
            for (int b = 0; b < bs; ++b) {
                const PairSample& ps = pairs[order[start + b]];
                grads[b] = backward(params, ps.a, ps.b, ps.y, cfg.margin);
            }
            // fixed-order reduction keeps runs bit-identical
            NetworkParams batch_grad = NetworkParams::zeros_like(params);
            for (int b = 0; b < bs; ++b) {
                loss_sum += grads[b].loss;
                auto gs = grads[b].grads.tensors();
                auto bg = batch_grad.tensors();
                for (size_t t = 0; t < gs.size(); ++t)
                    for (size_t i = 0; i < gs[t]->data.size(); ++i)
                        bg[t]->data[i] += gs[t]->data[i];
            }
            double inv = 1.0 / bs;
            auto pv = params.tensors();
            auto vv = velocity.tensors();
            auto bg = batch_grad.tensors();
            for (size_t t = 0; t < pv.size(); ++t)
                for (size_t i = 0; i < pv[t]->data.size(); ++i) {
                    double g = bg[t]->data[i] * inv;
                    vv[t]->data[i] = cfg.momentum * vv[t]->data[i] + g;
                    pv[t]->data[i] -= cfg.learning_rate * vv[t]->data[i];
                }
        }
        double mean = loss_sum / double(pairs.size());
        if (!std::isfinite(mean)) throw std::runtime_error("train: loss diverged");
        res.epoch_loss.push_back(mean);
    }
    res.params = params;
    return res;
}

namespace {

void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(uint8_t(x >> (8 * i)));
}
void put_f32le(std::vector<uint8_t>& v, double d) {
    float f = float(d);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(v, bits);
}

struct ByteReader {
    std::span<const uint8_t> b;
    size_t p = 0;
    uint32_t u32() {
        if (p + 4 > b.size()) throw std::runtime_error("model file: truncated");
        uint32_t v = uint32_t(b[p]) | (uint32_t(b[p + 1]) << 8) | (uint32_t(b[p + 2]) << 16) |
                     (uint32_t(b[p + 3]) << 24);
        p += 4;
        return v;
    }
    double f32() {
        uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return double(f);
    }
};

} // namespace

std::vector<uint8_t> save_params(const NetworkParams& params) {
    std::vector<uint8_t> out{'S', 'I', 'A', 'M'};
    put_u32le(out, 1);  // version
    put_u32le(out, 3);  // layers

    auto layer = [&](uint32_t kind, const Tensor& w, const Tensor& b) {
        put_u32le(out, kind);
        put_u32le(out, uint32_t(w.shape.size()));
        for (int d : w.shape) put_u32le(out, uint32_t(d));
        for (double v : w.data) put_f32le(out, v);
        for (double v : b.data) put_f32le(out, v);
    };
    layer(0, params.conv1_w, params.conv1_b);
    layer(0, params.conv2_w, params.conv2_b);
    layer(1, params.dense_w, params.dense_b);
    return out;
}

NetworkParams load_params(std::span<const uint8_t> bytes, int input_h, int input_w) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SIAM", 4) != 0)
        throw std::runtime_error("model file: bad magic");
    ByteReader r{bytes, 4};
    uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("model file: unsupported version");
    uint32_t n_layers = r.u32();
    if (n_layers != 3) throw std::runtime_error("model file: expected 3 layers");

    struct RawLayer {
        uint32_t kind;
        std::vector<int> dims;
        std::vector<double> w, b;
    };
    std::vector<RawLayer> layers(3);
    for (auto& l : layers) {
        l.kind = r.u32();
        uint32_t rank = r.u32();
        if (rank > 8) throw std::runtime_error("model file: bad rank");
        size_t n = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            l.dims.push_back(int(r.u32()));
            n *= size_t(l.dims.back());
        }
        size_t nb = size_t(l.dims[0]);
        l.w.resize(n);
        for (auto& v : l.w) v = r.f32();
        l.b.resize(nb);
        for (auto& v : l.b) v = r.f32();
    }
    if (r.p != bytes.size()) throw std::runtime_error("model file: length mismatch");
    if (layers[0].kind != 0 || layers[1].kind != 0 || layers[2].kind != 1)
        throw std::runtime_error("model file: unexpected layer kinds");

    NetConfig cfg;
    cfg.input_h = input_h;
    cfg.input_w = input_w;
    cfg.conv1_filters = layers[0].dims[0];
    cfg.conv2_filters = layers[1].dims[0];
    cfg.embed_dim = layers[2].dims[0];
    cfg.validate();
    if (layers[2].dims[1] != cfg.flat())
        throw std::runtime_error("model file: dense layer inconsistent with input shape");

    NetworkParams p;
    p.cfg = cfg;
    p.conv1_w = Tensor{layers[0].dims, std::move(layers[0].w)};
    p.conv1_b = Tensor{{cfg.conv1_filters}, std::move(layers[0].b)};
    p.conv2_w = Tensor{layers[1].dims, std::move(layers[1].w)};
    p.conv2_b = Tensor{{cfg.conv2_filters}, std::move(layers[1].b)};
    p.dense_w = Tensor{layers[2].dims, std::move(layers[2].w)};
    p.dense_b = Tensor{{cfg.embed_dim}, std::move(layers[2].b)};
    return p;
}

} // namespace align
