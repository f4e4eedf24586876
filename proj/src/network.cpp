#include "afaf/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "afaf/error.hpp"

namespace afaf {

namespace {
// Chunked per-sample gradient buffers keep the reduction order equal to the
// serial sample order, so Exec::Serial and Exec::Parallel are bit-identical.
constexpr std::size_t kChunk = 16;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}
}  // namespace

GradientMask GradientMask::none(const Architecture& arch) {
    GradientMask m;
    m.fixed.resize(static_cast<std::size_t>(arch.num_layers()));
    for (int l = 0; l < arch.num_layers(); ++l)
        m.fixed[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(arch.layer(l).width), 0);
    return m;
}

NetworkState::NetworkState(Architecture arch) : arch_(std::move(arch)) {
    edges_.resize(static_cast<std::size_t>(arch_.num_edge_layers()));
    for (int e = 0; e < arch_.num_edge_layers(); ++e)
        edges_[static_cast<std::size_t>(e)].block_size = arch_.block_size(e);
    arch_.set_output_width(0);
}

std::vector<int> NetworkState::extend_output(const std::vector<int>& class_ids, int task_id) {
    std::vector<int> units;
    for (int c : class_ids) {
        if (class_unit_.count(c))
            throw ConsistencyError("class " + std::to_string(c) + " already has an output unit");
        const int unit = static_cast<int>(unit_class_.size());
        unit_class_.push_back(c);
        unit_task_.push_back(task_id);
        class_unit_[c] = unit;
        task_units_[task_id].push_back(unit);
        units.push_back(unit);
    }
    arch_.set_output_width(static_cast<int>(unit_class_.size()));
    return units;
}

int NetworkState::output_unit_for_class(int class_id) const {
    auto it = class_unit_.find(class_id);
    if (it == class_unit_.end())
        throw LabelDomainError("no output unit for class " + std::to_string(class_id));
    return it->second;
}

const std::vector<int>& NetworkState::output_units_of_task(int task_id) const {
    auto it = task_units_.find(task_id);
    if (it == task_units_.end())
        throw LabelDomainError("unknown task " + std::to_string(task_id));
    return it->second;
}

void NetworkState::add_edges(const SparseEdgeSet& set) {
    if (set.edge_layer < 0 || set.edge_layer >= num_edge_layers())
        throw ConsistencyError("edge layer out of range");
    EdgeLayer& el = edges_[static_cast<std::size_t>(set.edge_layer)];
    const int src_w = arch_.layer(set.edge_layer).width;
    const int tgt_w = arch_.layer(set.edge_layer + 1).width;
    if (set.weights.size() != set.count() * static_cast<std::size_t>(el.block_size))
        throw ConsistencyError("edge set weight size does not match block size");
    for (std::size_t i = 0; i < set.count(); ++i) {
        const int s = set.src[i], t = set.tgt[i];
        if (s < 0 || s >= src_w || t < 0 || t >= tgt_w)
            throw ConsistencyError("edge endpoint outside layer width");
        const std::int64_t key = static_cast<std::int64_t>(s) * tgt_w + t;
        if (!el.present.insert(key).second)
            throw ConsistencyError("duplicate edge (" + std::to_string(s) + "," + std::to_string(t) +
                                   ") in layer " + std::to_string(set.edge_layer));
        el.src.push_back(s);
        el.tgt.push_back(t);
        el.owner.push_back(set.owner_task);
        el.weights.insert(el.weights.end(),
                          set.weights.begin() + static_cast<std::ptrdiff_t>(i * el.block_size),
                          set.weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * el.block_size));
    }
}

bool NetworkState::has_edge(int edge_layer, int src, int tgt) const {
    const EdgeLayer& el = edges_[static_cast<std::size_t>(edge_layer)];
    const int tgt_w = arch_.layer(edge_layer + 1).width;
    return el.present.count(static_cast<std::int64_t>(src) * tgt_w + tgt) != 0;
}

void NetworkState::remove_edges(int edge_layer, const std::vector<std::size_t>& indices) {
    if (indices.empty()) return;
    EdgeLayer& el = edges_[static_cast<std::size_t>(edge_layer)];
    const int tgt_w = arch_.layer(edge_layer + 1).width;
    std::vector<std::uint8_t> drop(el.count(), 0);
    for (std::size_t i : indices) {
        if (i >= el.count()) throw ConsistencyError("edge index out of range");
        drop[i] = 1;
        el.present.erase(static_cast<std::int64_t>(el.src[i]) * tgt_w + el.tgt[i]);
    }
    EdgeLayer out;
    out.block_size = el.block_size;
    out.present = std::move(el.present);
    for (std::size_t i = 0; i < drop.size(); ++i) {
        if (drop[i]) continue;
        out.src.push_back(el.src[i]);
        out.tgt.push_back(el.tgt[i]);
        out.owner.push_back(el.owner[i]);
        out.weights.insert(out.weights.end(),
                           el.weights.begin() + static_cast<std::ptrdiff_t>(i * el.block_size),
                           el.weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * el.block_size));
    }
    el = std::move(out);
}

void NetworkState::set_weight(int edge_layer, std::size_t edge, const std::vector<double>& block) {
    EdgeLayer& el = edges_[static_cast<std::size_t>(edge_layer)];
    if (block.size() != static_cast<std::size_t>(el.block_size))
        throw ConsistencyError("weight block size mismatch");
    std::copy(block.begin(), block.end(),
              el.weights.begin() + static_cast<std::ptrdiff_t>(edge * el.block_size));
}

std::int64_t NetworkState::param_count() const {
    std::int64_t n = 0;
    for (const auto& el : edges_) n += static_cast<std::int64_t>(el.count()) * el.block_size;
    return n;
}

std::vector<double> NetworkState::layer_densities() const {
    std::vector<double> d;
    for (int e = 0; e < num_edge_layers(); ++e) {
        const double full = static_cast<double>(arch_.layer(e).width) * arch_.layer(e + 1).width;
        d.push_back(full > 0 ? static_cast<double>(edges_[static_cast<std::size_t>(e)].count()) / full : 0.0);
    }
    return d;
}

std::uint64_t NetworkState::weights_hash(const std::set<int>& tasks) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (int e = 0; e < num_edge_layers(); ++e) {
        const EdgeLayer& el = edges_[static_cast<std::size_t>(e)];
        for (std::size_t i = 0; i < el.count(); ++i) {
            if (!tasks.count(el.owner[i])) continue;
            h = fnv1a(h, &e, sizeof(e));
            h = fnv1a(h, &el.src[i], sizeof(int));
            h = fnv1a(h, &el.tgt[i], sizeof(int));
            h = fnv1a(h, el.weights.data() + i * el.block_size,
                      sizeof(double) * static_cast<std::size_t>(el.block_size));
        }
    }
    return h;
}

void NetworkState::check_weights_finite() const {
    for (const auto& el : edges_)
        for (double w : el.weights)
            if (!std::isfinite(w)) throw NumericStateError("non-finite weight in network");
}

Gradients NetworkState::zero_gradients() const {
    Gradients g;
    g.by_layer.resize(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e)
        g.by_layer[e].assign(edges_[e].weights.size(), 0.0);
    return g;
}

struct NetworkState::SampleWorkspace {
    // per neuron layer
    std::vector<std::vector<double>> act;       // post-activation, width*h*w
    std::vector<std::vector<double>> out;       // after pool + dropout, width*ph*pw
    std::vector<std::vector<int>> argmax;       // flat act index per pooled cell
    std::vector<std::vector<double>> dropmask;  // multiplier per out element (empty if unused)

    void init(const Architecture& arch) {
        const std::size_t L = static_cast<std::size_t>(arch.num_layers());
        act.resize(L);
        out.resize(L);
        argmax.resize(L);
        dropmask.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            const NeuronLayer& nl = arch.layer(static_cast<int>(l));
            act[l].assign(static_cast<std::size_t>(nl.act_size()), 0.0);
            out[l].assign(static_cast<std::size_t>(nl.out_size()), 0.0);
            if (nl.pooled) argmax[l].assign(static_cast<std::size_t>(nl.out_size()), 0);
        }
    }
};

void NetworkState::forward_sample(const double* x, SampleWorkspace& ws, bool train) const {
    const int L = arch_.num_layers();
    const NeuronLayer& in = arch_.layer(0);
    std::copy(x, x + in.act_size(), ws.act[0].begin());

    for (int l = 0; l < L; ++l) {
        const NeuronLayer& nl = arch_.layer(l);
        auto& act = ws.act[static_cast<std::size_t>(l)];
        auto& out = ws.out[static_cast<std::size_t>(l)];

        if (l > 0) {
            // accumulate pre-activation from the incoming edge layer, then activate
            std::fill(act.begin(), act.end(), 0.0);
            const EdgeLayer& el = edges_[static_cast<std::size_t>(l - 1)];
            const NeuronLayer& sl = arch_.layer(l - 1);
            const auto& src_out = ws.out[static_cast<std::size_t>(l - 1)];
            const int sp = sl.pooled_spatial();
            if (nl.conv) {
                const int k = nl.kernel, oh = nl.h, ow = nl.w, sw = sl.pooled_w;
                for (std::size_t i = 0; i < el.count(); ++i) {
                    const double* K = el.weights.data() + i * el.block_size;
                    const double* s = src_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                    double* o = act.data() + static_cast<std::size_t>(el.tgt[i]) * (oh * ow);
                    for (int y = 0; y < oh; ++y)
                        for (int xo = 0; xo < ow; ++xo) {
                            double acc = 0.0;
                            for (int dy = 0; dy < k; ++dy)
                                for (int dx = 0; dx < k; ++dx)
                                    acc += K[dy * k + dx] * s[(y + dy) * sw + (xo + dx)];
                            o[y * ow + xo] += acc;
                        }
                }
            } else if (sl.conv || sl.pooled_spatial() > 1) {
                for (std::size_t i = 0; i < el.count(); ++i) {
                    const double* wv = el.weights.data() + i * el.block_size;
                    const double* s = src_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                    double acc = 0.0;
                    for (int p = 0; p < sp; ++p) acc += wv[p] * s[p];
                    act[static_cast<std::size_t>(el.tgt[i])] += acc;
                }
            } else {
                for (std::size_t i = 0; i < el.count(); ++i)
                    act[static_cast<std::size_t>(el.tgt[i])] += el.weights[i] * src_out[el.src[i]];
            }
            if (nl.act == Activation::Rectifier)
                for (double& v : act) v = v > 0.0 ? v : 0.0;
        }

        // pool
        if (nl.pooled) {
            auto& amax = ws.argmax[static_cast<std::size_t>(l)];
            const int ph = nl.pooled_h, pw = nl.pooled_w, w = nl.w;
            for (int m = 0; m < nl.width; ++m) {
                const double* a = act.data() + static_cast<std::size_t>(m) * nl.spatial();
                double* o = out.data() + static_cast<std::size_t>(m) * (ph * pw);
                int* am = amax.data() + static_cast<std::size_t>(m) * (ph * pw);
                for (int y = 0; y < ph; ++y)
                    for (int xo = 0; xo < pw; ++xo) {
                        int best = (2 * y) * w + 2 * xo;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const int idx = (2 * y + dy) * w + (2 * xo + dx);
                                if (a[idx] > a[best]) best = idx;
                            }
                        o[y * pw + xo] = a[best];
                        am[y * pw + xo] = best + m * nl.spatial();
                    }
            }
        } else {
            std::copy(act.begin(), act.end(), out.begin());
        }

        // dropout (train only; masks are pre-generated per sample)
        if (train && nl.dropout > 0.0) {
            const auto& dm = ws.dropmask[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= dm[i];
        }
    }
}

ForwardResult NetworkState::forward(const std::vector<std::vector<double>>& batch, Mode mode,
                                    bool trace_requested, Exec exec, Rng* dropout_rng) const {
    check_weights_finite();
    const std::size_t n = batch.size();
    const int in_size = arch_.layer(0).act_size();
    for (const auto& x : batch)
        if (static_cast<int>(x.size()) != in_size)
            throw InputShapeError("input size " + std::to_string(x.size()) + " != " + std::to_string(in_size));

    const bool train = mode == Mode::Train;
    const int L = arch_.num_layers();

    // dropout masks drawn serially so results are independent of execution policy
    std::vector<std::vector<std::vector<double>>> masks;
    bool any_dropout = false;
    for (int l = 0; l < L; ++l) any_dropout |= arch_.layer(l).dropout > 0.0;
    if (train && any_dropout) {
        if (!dropout_rng) throw ConsistencyError("training forward with dropout needs an rng");
        masks.resize(n);
        for (std::size_t s = 0; s < n; ++s) {
            masks[s].resize(static_cast<std::size_t>(L));
            for (int l = 0; l < L; ++l) {
                const NeuronLayer& nl = arch_.layer(l);
                if (nl.dropout <= 0.0) continue;
                auto& m = masks[s][static_cast<std::size_t>(l)];
                m.resize(static_cast<std::size_t>(nl.out_size()));
                const double keep = 1.0 - nl.dropout;
                for (auto& v : m) v = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            }
        }
    }

    ForwardResult res;
    res.logits.assign(n, std::vector<double>(static_cast<std::size_t>(num_output_units()), 0.0));
    if (trace_requested) {
        res.trace.emplace();
        res.trace->per_layer.resize(static_cast<std::size_t>(L));
        for (int l = 0; l < L; ++l)
            res.trace->per_layer[static_cast<std::size_t>(l)].assign(
                n, std::vector<double>(static_cast<std::size_t>(arch_.layer(l).width), 0.0));
    }

    auto run_sample = [&](std::size_t s, SampleWorkspace& ws) {
        if (train && any_dropout) ws.dropmask = masks[s];
        forward_sample(batch[s].data(), ws, train);
        res.logits[s] = ws.act[static_cast<std::size_t>(L - 1)];
        if (trace_requested) {
            for (int l = 0; l < L; ++l) {
                const NeuronLayer& nl = arch_.layer(l);
                auto& row = res.trace->per_layer[static_cast<std::size_t>(l)][s];
                const auto& act = ws.act[static_cast<std::size_t>(l)];
                const int sp = nl.spatial();
                for (int m = 0; m < nl.width; ++m) {
                    double acc = 0.0;
                    for (int p = 0; p < sp; ++p) acc += act[static_cast<std::size_t>(m) * sp + p];
                    row[static_cast<std::size_t>(m)] = acc / sp;
                }
            }
        }
    };

    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel
        {
            SampleWorkspace ws;
            ws.init(arch_);
#pragma omp for schedule(static)
            for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s)
                run_sample(static_cast<std::size_t>(s), ws);
        }
        return res;
#endif
    }
    SampleWorkspace ws;
    ws.init(arch_);
    for (std::size_t s = 0; s < n; ++s) run_sample(s, ws);
    return res;
}

void NetworkState::backward_sample(const SampleWorkspace& ws, int target,
                                   const std::vector<int>& output_subset,
                                   const GradientMask& mask, Gradients& grads, double& loss) const {
    const int L = arch_.num_layers();
    const auto& logits = ws.act[static_cast<std::size_t>(L - 1)];

    // softmax cross-entropy restricted to the declared output subset
    double mx = -1e300;
    for (int u : output_subset) mx = std::max(mx, logits[static_cast<std::size_t>(u)]);
    double z = 0.0;
    for (int u : output_subset) z += std::exp(logits[static_cast<std::size_t>(u)] - mx);
    loss += -(logits[static_cast<std::size_t>(target)] - mx - std::log(z));

    std::vector<double> delta(ws.act[static_cast<std::size_t>(L - 1)].size(), 0.0);
    for (int u : output_subset) {
        double p = std::exp(logits[static_cast<std::size_t>(u)] - mx) / z;
        delta[static_cast<std::size_t>(u)] = p - (u == target ? 1.0 : 0.0);
    }

    // delta holds d(loss)/d(act) of layer l+1 while processing edge layer l
    for (int e = L - 2; e >= 0; --e) {
        const NeuronLayer& tl = arch_.layer(e + 1);
        const NeuronLayer& sl = arch_.layer(e);
        const EdgeLayer& el = edges_[static_cast<std::size_t>(e)];
        const auto& tact = ws.act[static_cast<std::size_t>(e + 1)];
        const auto& src_out = ws.out[static_cast<std::size_t>(e)];

        // through the activation, then block fixed neurons (Eq. 4 semantics)
        std::vector<double> dp(delta.size());
        const int tsp = tl.spatial();
        for (int m = 0; m < tl.width; ++m) {
            const bool blocked = mask.is_fixed(e + 1, m);
            for (int p = 0; p < tsp; ++p) {
                const std::size_t idx = static_cast<std::size_t>(m) * tsp + p;
                double v = blocked ? 0.0 : delta[idx];
                if (tl.act == Activation::Rectifier && tact[idx] <= 0.0) v = 0.0;
                dp[idx] = v;
            }
        }

        std::vector<double> dsrc_out(src_out.size(), 0.0);
        auto* g = grads.by_layer[static_cast<std::size_t>(e)].data();
        const int sp = sl.pooled_spatial();
        if (tl.conv) {
            const int k = tl.kernel, oh = tl.h, ow = tl.w, sw = sl.pooled_w;
            for (std::size_t i = 0; i < el.count(); ++i) {
                const double* K = el.weights.data() + i * el.block_size;
                double* gK = g + i * el.block_size;
                const double* s = src_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                double* ds = dsrc_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                const double* d = dp.data() + static_cast<std::size_t>(el.tgt[i]) * (oh * ow);
                for (int y = 0; y < oh; ++y)
                    for (int xo = 0; xo < ow; ++xo) {
                        const double dv = d[y * ow + xo];
                        if (dv == 0.0) continue;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) {
                                gK[dy * k + dx] += dv * s[(y + dy) * sw + (xo + dx)];
                                ds[(y + dy) * sw + (xo + dx)] += dv * K[dy * k + dx];
                            }
                    }
            }
        } else if (sp > 1) {
            for (std::size_t i = 0; i < el.count(); ++i) {
                const double* wv = el.weights.data() + i * el.block_size;
                double* gw = g + i * el.block_size;
                const double* s = src_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                double* ds = dsrc_out.data() + static_cast<std::size_t>(el.src[i]) * sp;
                const double dv = dp[static_cast<std::size_t>(el.tgt[i])];
                for (int p = 0; p < sp; ++p) {
                    gw[p] += dv * s[p];
                    ds[p] += dv * wv[p];
                }
            }
        } else {
            for (std::size_t i = 0; i < el.count(); ++i) {
                const double dv = dp[static_cast<std::size_t>(el.tgt[i])];
                g[i] += dv * src_out[static_cast<std::size_t>(el.src[i])];
                dsrc_out[static_cast<std::size_t>(el.src[i])] += dv * el.weights[i];
            }
        }

        if (e == 0) break;

        // back through dropout and pooling of the source layer
        if (!ws.dropmask[static_cast<std::size_t>(e)].empty()) {
            const auto& dm = ws.dropmask[static_cast<std::size_t>(e)];
            for (std::size_t i = 0; i < dsrc_out.size(); ++i) dsrc_out[i] *= dm[i];
        }
        if (sl.pooled) {
            std::vector<double> dact(static_cast<std::size_t>(sl.act_size()), 0.0);
            const auto& amax = ws.argmax[static_cast<std::size_t>(e)];
            for (std::size_t i = 0; i < dsrc_out.size(); ++i)
                dact[static_cast<std::size_t>(amax[i])] += dsrc_out[i];
            delta = std::move(dact);
        } else {
            delta = std::move(dsrc_out);
        }
    }
}

BackwardResult NetworkState::backward(const std::vector<std::vector<double>>& batch,
                                      const std::vector<int>& targets,
                                      const std::vector<int>& output_subset,
                                      const GradientMask& mask, Mode mode, Exec exec,
                                      Rng* dropout_rng) const {
    check_weights_finite();
    const std::size_t n = batch.size();
    if (targets.size() != n) throw ConsistencyError("batch/target size mismatch");
    if (mask.fixed.size() != static_cast<std::size_t>(arch_.num_layers()))
        throw ConsistencyError("gradient mask layer count mismatch");
    for (int l = 0; l < arch_.num_layers(); ++l)
        if (mask.fixed[static_cast<std::size_t>(l)].size() != static_cast<std::size_t>(arch_.layer(l).width))
            throw ConsistencyError("gradient mask width mismatch at layer " + std::to_string(l));
    for (int t : targets)
        if (std::find(output_subset.begin(), output_subset.end(), t) == output_subset.end())
            throw LabelDomainError("target unit " + std::to_string(t) + " outside declared output subset");

    const bool train = mode == Mode::Train;
    const int L = arch_.num_layers();
    const int in_size = arch_.layer(0).act_size();
    for (const auto& x : batch)
        if (static_cast<int>(x.size()) != in_size) throw InputShapeError("input shape mismatch");

    bool any_dropout = false;
    for (int l = 0; l < L; ++l) any_dropout |= arch_.layer(l).dropout > 0.0;
    std::vector<std::vector<std::vector<double>>> masks;
    if (train && any_dropout) {
        if (!dropout_rng) throw ConsistencyError("training backward with dropout needs an rng");
        masks.resize(n);
        for (std::size_t s = 0; s < n; ++s) {
            masks[s].resize(static_cast<std::size_t>(L));
            for (int l = 0; l < L; ++l) {
                const NeuronLayer& nl = arch_.layer(l);
                if (nl.dropout <= 0.0) continue;
                auto& m = masks[s][static_cast<std::size_t>(l)];
                m.resize(static_cast<std::size_t>(nl.out_size()));
                const double keep = 1.0 - nl.dropout;
                for (auto& v : m) v = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            }
        }
    }

    BackwardResult res;
    res.grads = zero_gradients();
    double total_loss = 0.0;

    for (std::size_t base = 0; base < n; base += kChunk) {
        const std::size_t m = std::min(kChunk, n - base);
        std::vector<Gradients> part(m);
        std::vector<double> part_loss(m, 0.0);
        for (auto& p : part) p = zero_gradients();

        auto run_one = [&](std::size_t j, SampleWorkspace& ws) {
            const std::size_t s = base + j;
            if (train && any_dropout) ws.dropmask = masks[s];
            forward_sample(batch[s].data(), ws, train);
            backward_sample(ws, targets[s], output_subset, mask, part[j], part_loss[j]);
        };

        bool ran_parallel = false;
        if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel
            {
                SampleWorkspace ws;
                ws.init(arch_);
#pragma omp for schedule(static)
                for (std::int64_t j = 0; j < static_cast<std::int64_t>(m); ++j)
                    run_one(static_cast<std::size_t>(j), ws);
            }
            ran_parallel = true;
#endif
        }
        if (!ran_parallel) {
            SampleWorkspace ws;
            ws.init(arch_);
            for (std::size_t j = 0; j < m; ++j) run_one(j, ws);
        }

        // in-order reduction
        for (std::size_t j = 0; j < m; ++j) {
            total_loss += part_loss[j];
            for (std::size_t e = 0; e < res.grads.by_layer.size(); ++e) {
                auto& dst = res.grads.by_layer[e];
                const auto& srcv = part[j].by_layer[e];
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += srcv[i];
            }
        }
    }

    const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    res.loss = total_loss * inv;
    for (auto& lay : res.grads.by_layer)
        for (double& v : lay) v *= inv;
    return res;
}

void NetworkState::sgd_step(const Gradients& grads, double learning_rate,
                            const std::set<int>& updatable_tasks) {
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (grads.by_layer.size() != edges_.size()) throw ConsistencyError("gradient layer count mismatch");
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        EdgeLayer& el = edges_[e];
        if (grads.by_layer[e].size() != el.weights.size())
            throw ConsistencyError("gradient size mismatch at edge layer " + std::to_string(e));
        const auto& g = grads.by_layer[e];
        for (std::size_t i = 0; i < el.count(); ++i) {
            if (!updatable_tasks.count(el.owner[i])) continue;
            for (int b = 0; b < el.block_size; ++b) {
                const std::size_t idx = i * el.block_size + b;
                el.weights[idx] -= learning_rate * g[idx];
            }
        }
    }
}

}  // namespace afaf
