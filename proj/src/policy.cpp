#include "packtree/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace packtree {

namespace {

constexpr double kLeakySlope = 0.01;
constexpr double kAttScale = 8.0;  // sqrt(64)

double leaky(double x) { return x > 0 ? x : kLeakySlope * x; }
double leaky_grad(double x) { return x > 0 ? 1.0 : kLeakySlope; }
double relu(double x) { return x > 0 ? x : 0.0; }
double relu_grad(double x) { return x > 0 ? 1.0 : 0.0; }

// y[rows x out] = x[rows x in] * W^T + b, over the given row indices
void affine_rows(const Mat& x, const Mat& W, const Mat& b, Mat& y, const std::vector<int>& rows) {
    for (int r : rows) {
        const double* xi = x.row(r);
        double* yi = y.row(r);
        for (int o = 0; o < W.rows; ++o) {
            double s = b.v.empty() ? 0.0 : b.at(0, o);
            const double* w = W.row(o);
            for (int c = 0; c < W.cols; ++c) s += w[c] * xi[c];
            yi[o] = s;
        }
    }
}

void matvec(const Mat& W, const double* x, const double* b, double* y) {
    for (int o = 0; o < W.rows; ++o) {
        double s = b ? b[o] : 0.0;
        const double* w = W.row(o);
        for (int c = 0; c < W.cols; ++c) s += w[c] * x[c];
        y[o] = s;
    }
}

// grad accumulation: dW += dy ^T x over rows, db += dy
void affine_rows_grad(const Mat& x, const Mat& W, const Mat& dy, Mat& dW, Mat& db, Mat& dx,
                      const std::vector<int>& rows) {
    for (int r : rows) {
        const double* xi = x.row(r);
        const double* dyi = dy.row(r);
        double* dxi = dx.row(r);
        for (int o = 0; o < W.rows; ++o) {
            const double g = dyi[o];
            if (g == 0.0) continue;
            double* dwo = dW.row(o);
            const double* wo = W.row(o);
            for (int c = 0; c < W.cols; ++c) {
                dwo[c] += g * xi[c];
                dxi[c] += g * wo[c];
            }
            db.at(0, o) += g;
        }
    }
}

std::vector<int> active_rows(const StateInput& in) {
    std::vector<int> rows;
    rows.reserve(in.eligible_internals + in.eligible_leaves + 1);
    for (int r = 0; r < in.eligible_internals; ++r) rows.push_back(r);
    for (int r = 0; r < in.eligible_leaves; ++r) rows.push_back(in.leaf_row_begin() + r);
    rows.push_back(in.item_row());
    return rows;
}

}  // namespace

PolicyDims dims_for(const EnvConfig& cfg) {
    PolicyDims d;
    const int extra = (cfg.setting == 3 ? 1 : 0) + (cfg.constraint == ConstraintKind::Isle ? 1 : 0);
    d.internal_desc = 6 + extra;
    d.leaf_desc = 6;
    d.item_desc = 3 + extra;
    return d;
}

std::vector<std::pair<std::string, Mat*>> PolicyParams::tensors() {
    return {
        {"bW1", &bW1}, {"bb1", &bb1}, {"bW2", &bW2}, {"bb2", &bb2}, {"lW1", &lW1}, {"lb1", &lb1},
        {"lW2", &lW2}, {"lb2", &lb2}, {"nW1", &nW1}, {"nb1", &nb1}, {"nW2", &nW2}, {"nb2", &nb2},
        {"Wq", &Wq},   {"Wk", &Wk},   {"Wv", &Wv},   {"Wo", &Wo},   {"F1", &F1},   {"f1", &f1},
        {"F2", &F2},   {"f2", &f2},   {"Pq", &Pq},   {"Pk", &Pk},   {"C1", &C1},   {"c1", &c1},
        {"C2", &C2},   {"c2", &c2},
    };
}

std::vector<std::pair<std::string, const Mat*>> PolicyParams::tensors() const {
    std::vector<std::pair<std::string, const Mat*>> out;
    for (auto& [name, mat] : const_cast<PolicyParams*>(this)->tensors()) out.push_back({name, mat});
    return out;
}

PolicyParams init_params(PolicyDims dims, uint64_t seed) {
    PolicyParams p;
    p.dims = dims;
    const int H = kFeatureDim;
    p.bW1 = Mat(H, dims.internal_desc);
    p.bb1 = Mat(1, H);
    p.bW2 = Mat(H, H);
    p.bb2 = Mat(1, H);
    p.lW1 = Mat(H, dims.leaf_desc);
    p.lb1 = Mat(1, H);
    p.lW2 = Mat(H, H);
    p.lb2 = Mat(1, H);
    p.nW1 = Mat(H, dims.item_desc);
    p.nb1 = Mat(1, H);
    p.nW2 = Mat(H, H);
    p.nb2 = Mat(1, H);
    p.Wq = Mat(H, H);
    p.Wk = Mat(H, H);
    p.Wv = Mat(H, H);
    p.Wo = Mat(H, H);
    p.F1 = Mat(H, H);
    p.f1 = Mat(1, H);
    p.F2 = Mat(H, H);
    p.f2 = Mat(1, H);
    p.Pq = Mat(H, H);
    p.Pk = Mat(H, H);
    p.C1 = Mat(H, H);
    p.c1 = Mat(1, H);
    p.C2 = Mat(1, H);
    p.c2 = Mat(1, 1);

    std::mt19937_64 rng(seed);
    for (auto& [name, mat] : p.tensors()) {
        (void)name;
        const double bound = 1.0 / std::sqrt(static_cast<double>(mat->cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& v : mat->v) v = u(rng);
    }
    return p;
}

PolicyParams zeros_like(const PolicyParams& p) {
    PolicyParams z = p;
    for (auto& [name, mat] : z.tensors()) {
        (void)name;
        std::fill(mat->v.begin(), mat->v.end(), 0.0);
    }
    return z;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, tensor count, then (name, rows, cols, doubles) records.

void save_checkpoint(const PolicyParams& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write("PTCK1\n", 6);
    const auto ts = p.tensors();
    const uint32_t count = static_cast<uint32_t>(ts.size());
    os.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [name, mat] : ts) {
        const uint16_t len = static_cast<uint16_t>(name.size());
        os.write(reinterpret_cast<const char*>(&len), 2);
        os.write(name.data(), len);
        const int32_t r = mat->rows, c = mat->cols;
        os.write(reinterpret_cast<const char*>(&r), 4);
        os.write(reinterpret_cast<const char*>(&c), 4);
        os.write(reinterpret_cast<const char*>(mat->v.data()),
                 static_cast<std::streamsize>(mat->v.size() * sizeof(double)));
    }
}

PolicyParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, "PTCK1\n", 6) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    uint32_t count = 0;
    is.read(reinterpret_cast<char*>(&count), 4);

    PolicyParams p = init_params(PolicyDims{}, 0);
    auto ts = p.tensors();
    if (count != ts.size()) throw std::runtime_error("checkpoint tensor count mismatch");
    for (auto& [expect_name, mat] : ts) {
        uint16_t len = 0;
        is.read(reinterpret_cast<char*>(&len), 2);
        std::string name(len, '\0');
        is.read(name.data(), len);
        int32_t r = 0, c = 0;
        is.read(reinterpret_cast<char*>(&r), 4);
        is.read(reinterpret_cast<char*>(&c), 4);
        if (name != expect_name) throw std::runtime_error("checkpoint tensor order mismatch");
        *mat = Mat(r, c);
        is.read(reinterpret_cast<char*>(mat->v.data()),
                static_cast<std::streamsize>(mat->v.size() * sizeof(double)));
        if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    }
    p.dims.internal_desc = p.bW1.cols;
    p.dims.leaf_desc = p.lW1.cols;
    p.dims.item_desc = p.nW1.cols;
    return p;
}

// ---------------------------------------------------------------------------

bool StateInput::eligible(int row) const {
    if (row < eligible_internals) return true;
    if (row >= leaf_row_begin() && row < leaf_row_begin() + eligible_leaves) return true;
    return row == item_row();
}

StateInput make_state_input(const PackingTree& tree, const std::vector<LeafPlacement>& leaves,
                            const ItemSpec& item, const PolicyDims& dims, int pad_internals,
                            int pad_leaves) {
    return make_state_input(tree.bin(), tree.internals(), leaves, item, dims, pad_internals,
                            pad_leaves);
}

StateInput make_state_input(const BinSpec& bin, std::span<const InternalNode> internals,
                            const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
                            const PolicyDims& dims, int pad_internals, int pad_leaves) {
    const Vec3 S = bin.size;
    const int nb = static_cast<int>(internals.size());
    const int nl = static_cast<int>(leaves.size());
    const int rb = std::max(pad_internals, nb);
    const int rl = std::max(pad_leaves, nl);

    StateInput in;
    in.dims = dims;
    in.eligible_internals = nb;
    in.eligible_leaves = nl;
    in.internal_desc = Mat(rb, dims.internal_desc);
    in.leaf_desc = Mat(rl, dims.leaf_desc);
    in.item_desc = Mat(1, dims.item_desc);

    for (int i = 0; i < nb; ++i) {
        const InternalNode& n = internals[i];
        double* d = in.internal_desc.row(i);
        d[0] = n.box.flb.x / S.x;
        d[1] = n.box.flb.y / S.y;
        d[2] = n.box.flb.z / S.z;
        d[3] = n.box.size.x / S.x;
        d[4] = n.box.size.y / S.y;
        d[5] = n.box.size.z / S.z;
        // density first when present, then category
        int col = 6;
        if (dims.internal_desc > col) d[col++] = n.density;
        if (dims.internal_desc > col) d[col++] = n.category * 0.25;
    }
    for (int i = 0; i < nl; ++i) {
        const LeafPlacement& l = leaves[i];
        double* d = in.leaf_desc.row(i);
        d[0] = l.flb.x / S.x;
        d[1] = l.flb.y / S.y;
        d[2] = l.flb.z / S.z;
        d[3] = l.oriented_size.x / S.x;
        d[4] = l.oriented_size.y / S.y;
        d[5] = l.oriented_size.z / S.z;
    }
    {
        double* d = in.item_desc.row(0);
        d[0] = item.size.x / S.x;
        d[1] = item.size.y / S.y;
        d[2] = item.size.z / S.z;
        int col = 3;
        if (dims.item_desc > col) d[col++] = item.density;
        if (dims.item_desc > col) d[col++] = item.category * 0.25;
    }
    return in;
}

ForwardCache policy_forward(const PolicyParams& p, StateInput input) {
    if (input.dims != p.dims) throw std::invalid_argument("descriptor width mismatch");
    const int H = kFeatureDim;
    ForwardCache c;
    c.in = std::move(input);
    const StateInput& in = c.in;
    const int N = in.total_rows();
    const std::vector<int> act = active_rows(in);

    // segment embeddings
    std::vector<int> brows(in.eligible_internals), lrows(in.eligible_leaves), nrows{0};
    for (int i = 0; i < in.eligible_internals; ++i) brows[i] = i;
    for (int i = 0; i < in.eligible_leaves; ++i) lrows[i] = i;

    c.a1_b = Mat(in.internal_desc.rows, H);
    c.z1_b = Mat(in.internal_desc.rows, H);
    c.a1_l = Mat(in.leaf_desc.rows, H);
    c.z1_l = Mat(in.leaf_desc.rows, H);
    c.a1_n = Mat(1, H);
    c.z1_n = Mat(1, H);
    c.h0 = Mat(N, H);

    affine_rows(in.internal_desc, p.bW1, p.bb1, c.a1_b, brows);
    for (int r : brows)
        for (int j = 0; j < H; ++j) c.z1_b.at(r, j) = leaky(c.a1_b.at(r, j));
    Mat hb(in.internal_desc.rows, H);
    affine_rows(c.z1_b, p.bW2, p.bb2, hb, brows);
    for (int r : brows) std::copy(hb.row(r), hb.row(r) + H, c.h0.row(r));

    affine_rows(in.leaf_desc, p.lW1, p.lb1, c.a1_l, lrows);
    for (int r : lrows)
        for (int j = 0; j < H; ++j) c.z1_l.at(r, j) = leaky(c.a1_l.at(r, j));
    Mat hl(in.leaf_desc.rows, H);
    affine_rows(c.z1_l, p.lW2, p.lb2, hl, lrows);
    for (int r : lrows) std::copy(hl.row(r), hl.row(r) + H, c.h0.row(in.leaf_row_begin() + r));

    affine_rows(in.item_desc, p.nW1, p.nb1, c.a1_n, nrows);
    for (int j = 0; j < H; ++j) c.z1_n.at(0, j) = leaky(c.a1_n.at(0, j));
    Mat hn(1, H);
    affine_rows(c.z1_n, p.nW2, p.nb2, hn, nrows);
    std::copy(hn.row(0), hn.row(0) + H, c.h0.row(in.item_row()));

    // one attention block over the fully connected eligible graph
    c.q = Mat(N, H);
    c.k = Mat(N, H);
    c.v = Mat(N, H);
    affine_rows(c.h0, p.Wq, Mat(), c.q, act);
    affine_rows(c.h0, p.Wk, Mat(), c.k, act);
    affine_rows(c.h0, p.Wv, Mat(), c.v, act);

    c.alpha = Mat(N, N);
    c.att = Mat(N, H);
    for (int i : act) {
        double mx = -1e300;
        for (int j : act) {
            double e = 0;
            const double* qi = c.q.row(i);
            const double* kj = c.k.row(j);
            for (int t = 0; t < H; ++t) e += qi[t] * kj[t];
            e /= kAttScale;
            c.alpha.at(i, j) = e;  // store raw logits, normalized next
            mx = std::max(mx, e);
        }
        double denom = 0;
        for (int j : act) {
            const double w = std::exp(c.alpha.at(i, j) - mx);
            c.alpha.at(i, j) = w;
            denom += w;
        }
        double* ai = c.alpha.row(i);
        for (int j : act) ai[j] /= denom;
        double* atti = c.att.row(i);
        for (int j : act) {
            const double a = ai[j];
            const double* vj = c.v.row(j);
            for (int t = 0; t < H; ++t) atti[t] += a * vj[t];
        }
    }
    c.gat = Mat(N, H);
    affine_rows(c.att, p.Wo, Mat(), c.gat, act);
    c.h1 = Mat(N, H);
    for (int r : act)
        for (int t = 0; t < H; ++t) c.h1.at(r, t) = c.h0.at(r, t) + c.gat.at(r, t);

    c.fa = Mat(N, H);
    c.fz = Mat(N, H);
    c.ff = Mat(N, H);
    c.h2 = Mat(N, H);
    affine_rows(c.h1, p.F1, p.f1, c.fa, act);
    for (int r : act)
        for (int t = 0; t < H; ++t) c.fz.at(r, t) = relu(c.fa.at(r, t));
    affine_rows(c.fz, p.F2, p.f2, c.ff, act);
    for (int r : act)
        for (int t = 0; t < H; ++t) c.h2.at(r, t) = c.h1.at(r, t) + c.ff.at(r, t);

    // pooled context over eligible nodes only
    c.hbar.assign(H, 0.0);
    for (int r : act)
        for (int t = 0; t < H; ++t) c.hbar[t] += c.h2.at(r, t);
    const double ne = static_cast<double>(act.size());
    for (int t = 0; t < H; ++t) c.hbar[t] /= ne;

    // pointer over leaf rows
    c.leaf_rows.clear();
    for (int i = 0; i < in.eligible_leaves; ++i) c.leaf_rows.push_back(in.leaf_row_begin() + i);
    c.pq.assign(H, 0.0);
    matvec(p.Pq, c.hbar.data(), nullptr, c.pq.data());
    const int L = static_cast<int>(c.leaf_rows.size());
    c.pk.assign(static_cast<size_t>(L) * H, 0.0);
    c.u.assign(L, 0.0);
    c.clip.assign(L, 0.0);
    for (int l = 0; l < L; ++l) {
        double* pk = c.pk.data() + static_cast<size_t>(l) * H;
        matvec(p.Pk, c.h2.row(c.leaf_rows[l]), nullptr, pk);
        double s = 0;
        for (int t = 0; t < H; ++t) s += c.pq[t] * pk[t];
        c.u[l] = s / kAttScale;
        c.clip[l] = kClip * std::tanh(c.u[l]);
    }
    c.pi.assign(L, 0.0);
    if (L > 0) {
        double mx = *std::max_element(c.clip.begin(), c.clip.end());
        double denom = 0;
        for (int l = 0; l < L; ++l) {
            c.pi[l] = std::exp(c.clip[l] - mx);
            denom += c.pi[l];
        }
        for (int l = 0; l < L; ++l) c.pi[l] /= denom;
    }

    // critic on the pooled context
    double ca[kFeatureDim];
    matvec(p.C1, c.hbar.data(), p.c1.row(0), ca);
    for (int t = 0; t < H; ++t) {
        c.ca_pre[t] = ca[t];
        c.cz[t] = relu(ca[t]);
    }
    double v = p.c2.at(0, 0);
    for (int t = 0; t < H; ++t) v += p.C2.at(0, t) * c.cz[t];
    c.value = v;
    return c;
}

double composite_loss(const ForwardCache& c, int action, double advantage, double value_target,
                      double alpha, double beta) {
    const double actor = -advantage * std::log(std::max(c.pi[action], 1e-300));
    const double diff = value_target - c.value;
    return alpha * actor + beta * diff * diff;
}

PolicyParams policy_backward(const PolicyParams& p, const ForwardCache& c, int action,
                             double advantage, double value_target, double alpha, double beta) {
    const int H = kFeatureDim;
    const StateInput& in = c.in;
    const int N = in.total_rows();
    const std::vector<int> act = active_rows(in);
    const double ne = static_cast<double>(act.size());
    PolicyParams g = zeros_like(p);
    g.dims = p.dims;

    // ---- heads
    std::vector<double> dhbar(H, 0.0);

    // critic: d/dV of beta * (T - V)^2
    const double dV = beta * (-2.0) * (value_target - c.value);
    double dcz[kFeatureDim];
    for (int t = 0; t < H; ++t) {
        g.C2.at(0, t) += dV * c.cz[t];
        dcz[t] = dV * p.C2.at(0, t);
    }
    g.c2.at(0, 0) += dV;
    for (int t = 0; t < H; ++t) {
        const double dca = dcz[t] * relu_grad(c.ca_pre[t]);
        g.c1.at(0, t) += dca;
        for (int s = 0; s < H; ++s) {
            g.C1.at(t, s) += dca * c.hbar[s];
            dhbar[s] += dca * p.C1.at(t, s);
        }
    }

    // pointer: d/dclip of alpha * (-A log pi[a]) is -A (1_{l=a} - pi_l)
    const int L = static_cast<int>(c.leaf_rows.size());
    Mat dh2(N, H);
    std::vector<double> dpq(H, 0.0);
    for (int l = 0; l < L; ++l) {
        const double gclip = alpha * (-advantage) * ((l == action ? 1.0 : 0.0) - c.pi[l]);
        const double th = std::tanh(c.u[l]);
        const double du = gclip * kClip * (1.0 - th * th) / kAttScale;
        const double* pk = c.pk.data() + static_cast<size_t>(l) * H;
        // u = (pq . pk) / scale, scale folded into du
        for (int t = 0; t < H; ++t) dpq[t] += du * pk[t];
        // dkp = du * pq; propagate through Pk into h2
        const int row = c.leaf_rows[l];
        const double* h2l = c.h2.row(row);
        for (int t = 0; t < H; ++t) {
            const double dk = du * c.pq[t];
            for (int s = 0; s < H; ++s) {
                g.Pk.at(t, s) += dk * h2l[s];
                dh2.at(row, s) += dk * p.Pk.at(t, s);
            }
        }
    }
    for (int t = 0; t < H; ++t) {
        for (int s = 0; s < H; ++s) {
            g.Pq.at(t, s) += dpq[t] * c.hbar[s];
            dhbar[s] += dpq[t] * p.Pq.at(t, s);
        }
    }

    // pooling
    for (int r : act)
        for (int t = 0; t < H; ++t) dh2.at(r, t) += dhbar[t] / ne;

    // feed-forward block: h2 = h1 + F2 relu(F1 h1 + f1) + f2
    Mat dh1(N, H), dfz(N, H), dfa(N, H);
    for (int r : act)
        for (int t = 0; t < H; ++t) dh1.at(r, t) += dh2.at(r, t);
    affine_rows_grad(c.fz, p.F2, dh2, g.F2, g.f2, dfz, act);
    for (int r : act)
        for (int t = 0; t < H; ++t) dfa.at(r, t) = dfz.at(r, t) * relu_grad(c.fa.at(r, t));
    affine_rows_grad(c.h1, p.F1, dfa, g.F1, g.f1, dh1, act);

    // attention block: h1 = h0 + Wo att (no bias; scratch absorbs the term)
    Mat dh0(N, H), datt(N, H);
    {
        Mat scratch_b(1, H);
        affine_rows_grad(c.att, p.Wo, dh1, g.Wo, scratch_b, datt, act);
    }

    Mat dq(N, H), dk(N, H), dv(N, H);
    for (int i : act) {
        // dalpha_ij = datt_i . v_j ; de via softmax jacobian
        double dot_sum = 0;
        std::vector<double> dalpha(act.size());
        const double* datti = datt.row(i);
        for (size_t jj = 0; jj < act.size(); ++jj) {
            const int j = act[jj];
            const double* vj = c.v.row(j);
            double da = 0;
            for (int t = 0; t < H; ++t) da += datti[t] * vj[t];
            dalpha[jj] = da;
            dot_sum += c.alpha.at(i, j) * da;
            // dv_j += alpha_ij * datt_i
            const double a = c.alpha.at(i, j);
            double* dvj = dv.row(j);
            for (int t = 0; t < H; ++t) dvj[t] += a * datti[t];
        }
        for (size_t jj = 0; jj < act.size(); ++jj) {
            const int j = act[jj];
            const double de = c.alpha.at(i, j) * (dalpha[jj] - dot_sum) / kAttScale;
            if (de == 0.0) continue;
            const double* kj = c.k.row(j);
            const double* qi = c.q.row(i);
            double* dqi = dq.row(i);
            double* dkj = dk.row(j);
            for (int t = 0; t < H; ++t) {
                dqi[t] += de * kj[t];
                dkj[t] += de * qi[t];
            }
        }
    }
    {
        Mat scratch_b(1, H);
        affine_rows_grad(c.h0, p.Wq, dq, g.Wq, scratch_b, dh0, act);
        affine_rows_grad(c.h0, p.Wk, dk, g.Wk, scratch_b, dh0, act);
        affine_rows_grad(c.h0, p.Wv, dv, g.Wv, scratch_b, dh0, act);
    }
    // skip connection
    for (int r : act)
        for (int t = 0; t < H; ++t) dh0.at(r, t) += dh1.at(r, t);

    // segment embeddings
    std::vector<int> brows(in.eligible_internals), lrows(in.eligible_leaves), nrows{0};
    for (int i = 0; i < in.eligible_internals; ++i) brows[i] = i;
    for (int i = 0; i < in.eligible_leaves; ++i) lrows[i] = i;

    auto segment_backward = [&](const Mat& x, const Mat& a1, const Mat& z1, const Mat& W1,
                                const Mat& W2, Mat& gW1, Mat& gb1, Mat& gW2, Mat& gb2,
                                const std::vector<int>& seg_rows, int h0_row_offset) {
        Mat dseg(x.rows, H);
        for (int r : seg_rows)
            for (int t = 0; t < H; ++t) dseg.at(r, t) = dh0.at(h0_row_offset + r, t);
        Mat dz1(x.rows, H), da1(x.rows, H), dx(x.rows, x.cols);
        affine_rows_grad(z1, W2, dseg, gW2, gb2, dz1, seg_rows);
        for (int r : seg_rows)
            for (int t = 0; t < H; ++t) da1.at(r, t) = dz1.at(r, t) * leaky_grad(a1.at(r, t));
        affine_rows_grad(x, W1, da1, gW1, gb1, dx, seg_rows);
    };
    segment_backward(in.internal_desc, c.a1_b, c.z1_b, p.bW1, p.bW2, g.bW1, g.bb1, g.bW2, g.bb2,
                     brows, 0);
    segment_backward(in.leaf_desc, c.a1_l, c.z1_l, p.lW1, p.lW2, g.lW1, g.lb1, g.lW2, g.lb2, lrows,
                     in.leaf_row_begin());
    segment_backward(in.item_desc, c.a1_n, c.z1_n, p.nW1, p.nW2, g.nW1, g.nb1, g.nW2, g.nb2, nrows,
                     in.item_row());
    return g;
}

int act(const ForwardCache& c, ActMode mode, std::mt19937_64& rng) {
    const int L = static_cast<int>(c.pi.size());
    if (L == 0) throw std::logic_error("act called with no eligible leaf");
    if (mode == ActMode::Argmax) {
        int best = 0;
        for (int l = 1; l < L; ++l)
            if (c.pi[l] > c.pi[best]) best = l;
        return best;
    }
    const double r = std::uniform_real_distribution<double>(0, 1)(rng);
    double acc = 0;
    for (int l = 0; l < L; ++l) {
        acc += c.pi[l];
        if (r <= acc) return l;
    }
    return L - 1;
}

int act(const PackingTree& tree, const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
        const PolicyParams& params, ActMode mode, std::mt19937_64& rng) {
    const ForwardCache c = policy_forward(params, make_state_input(tree, leaves, item, params.dims));
    return act(c, mode, rng);
}

}  // namespace packtree
