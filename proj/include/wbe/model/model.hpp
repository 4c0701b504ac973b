#pragma once

#include <string>
#include <vector>

#include "wbe/born/interp.hpp"
#include "wbe/born/kernel.hpp"
#include "wbe/butterfly/butterfly.hpp"
#include "wbe/core/init.hpp"
#include "wbe/model/tape.hpp"

namespace wbe {

struct ParamTensor {
    std::string name;
    Eigen::MatrixXd v;
    bool trainable = true;
};

struct ParamSet {
    std::vector<ParamTensor> t;

    int add(std::string name, Eigen::MatrixXd v, bool trainable = true) {
        t.push_back({std::move(name), std::move(v), trainable});
        return int(t.size()) - 1;
    }

    ParamTensor& at(const std::string& name) {
        for (auto& p : t)
            if (p.name == name) return p;
        throw config_error("no parameter named " + name);
    }

    const ParamTensor& at(const std::string& name) const {
        return const_cast<ParamSet*>(this)->at(name);
    }

    std::size_t trainable_count() const {
        std::size_t n = 0;
        for (const auto& p : t)
            if (p.trainable) n += std::size_t(p.v.size());
        return n;
    }
};

enum class InitKind { glorot, kernel };

inline InitKind parse_init(const std::string& s) {
    if (s == "glorot") return InitKind::glorot;
    if (s == "kernel-init") return InitKind::kernel;
    throw config_error("unknown initialization: " + s);
}

// Closed-form trainable counts, reported next to the measured sums.
inline std::size_t count_uncompressed_per_freq(int n_sc, int n_rho) {
    return 2ull * n_sc * n_rho + 4ull * n_sc;
}

inline std::size_t count_compressed_per_freq(int L, int s, int r, int n_sr) {
    std::size_t blocks = 1ull << L;
    return 4ull * s * r * blocks + 8ull * L * r * r * blocks + 2ull * n_sr * r * r * blocks;
}

inline std::size_t count_conv(const std::vector<int>& channels, int k) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < channels.size(); ++l)
        n += std::size_t(k) * k * channels[l] * channels[l + 1] + channels[l + 1];
    return n;
}

struct ForwardOut {
    int pred = -1;
    int loss = -1;
    std::vector<int> alphas;      // polar stages, one per conv input channel
    std::vector<int> channels;    // Cartesian stages after interpolation
    std::vector<int> param_nodes; // tape leaf per ParamSet entry, same order
};

namespace detail {

// A complex matrix on the tape is a pair of real nodes.
struct CNode {
    int re = -1, im = -1;
};

inline CNode cleaf(Tape& t, const Eigen::MatrixXcd& m) {
    return {t.leaf(m.real(), false), t.leaf(m.imag(), false)};
}

inline CNode cadd(Tape& t, CNode a, CNode b) { return {t.add(a.re, b.re), t.add(a.im, b.im)}; }

// a * b
inline CNode cmm(Tape& t, CNode a, CNode b) {
    return {t.sub(t.matmul(a.re, b.re), t.matmul(a.im, b.im)),
            t.add(t.matmul(a.re, b.im), t.matmul(a.im, b.re))};
}

// a^H * b
inline CNode cmm_al(Tape& t, CNode a, CNode b) {
    return {t.add(t.matmul(a.re, b.re, true), t.matmul(a.im, b.im, true)),
            t.sub(t.matmul(a.re, b.im, true), t.matmul(a.im, b.re, true))};
}

// a * b^H
inline CNode cmm_ar(Tape& t, CNode a, CNode b) {
    return {t.add(t.matmul(a.re, b.re, false, true), t.matmul(a.im, b.im, false, true)),
            t.sub(t.matmul(a.im, b.re, false, true), t.matmul(a.re, b.im, false, true))};
}

inline CNode crows(Tape& t, CNode a, int start, int count) {
    return {t.gather_rows(a.re, start, count), t.gather_rows(a.im, start, count)};
}

inline CNode ccols(Tape& t, CNode a, int start, int count) {
    return {t.gather_cols(a.re, start, count), t.gather_cols(a.im, start, count)};
}

inline CNode ccat_rows(Tape& t, const std::vector<CNode>& parts) {
    std::vector<int> re, im;
    for (const CNode& p : parts) {
        re.push_back(p.re);
        im.push_back(p.im);
    }
    return {t.concat_rows(re), t.concat_rows(im)};
}

inline CNode ccat_cols(Tape& t, const std::vector<CNode>& parts) {
    std::vector<int> re, im;
    for (const CNode& p : parts) {
        re.push_back(p.re);
        im.push_back(p.im);
    }
    return {t.concat_cols(re), t.concat_cols(im)};
}

inline Eigen::MatrixXd stack_part(const std::vector<Eigen::MatrixXcd>& blocks, bool real_part) {
    Eigen::Index rows = 0;
    for (const auto& b : blocks) rows += b.rows();
    Eigen::MatrixXd out(rows, blocks[0].cols());
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        if (real_part)
            out.middleRows(at, b.rows()) = b.real();
        else
            out.middleRows(at, b.rows()) = b.imag();
        at += b.rows();
    }
    return out;
}

} // namespace detail

// Shared tail of both architectures: quadrature scaling, polar resampling,
// channel stacking, and the convolutional filter.
class ConvTail {
public:
    ConvTail() = default;
    ConvTail(const Grids& g, int channels_in, int k, std::vector<int> hidden)
        : map_(g), k_(k) {
        chain_.push_back(channels_in);
        for (int c : hidden) chain_.push_back(c);
        chain_.push_back(1);
        for (int c : chain_)
            if (c < 1) throw config_error("conv channels must be positive");
        if (k < 1 || k % 2 == 0) throw config_error("conv kernel must be odd");
    }

    const std::vector<int>& chain() const { return chain_; }
    int kernel() const { return k_; }
    const PolarCartMap& map() const { return map_; }

    void init_params(ParamSet& ps, Rng& rng) const {
        for (std::size_t l = 0; l + 1 < chain_.size(); ++l) {
            Eigen::MatrixXd w(chain_[l + 1], chain_[l] * k_ * k_);
            glorot_uniform_matrix(rng, chain_[l] * k_ * k_, chain_[l + 1] * k_ * k_, w);
            ps.add("conv_w" + std::to_string(l), std::move(w));
            ps.add("conv_b" + std::to_string(l), Eigen::MatrixXd::Zero(chain_[l + 1], 1));
        }
    }

    // channels: one (n_eta x n_eta) node per input channel, already scaled.
    int run(Tape& t, const std::vector<int>& channels, const ParamSet& ps,
            std::vector<int>& param_nodes, const std::vector<int>& conv_param_ids) const {
        if (int(channels.size()) != chain_[0])
            throw dim_error("conv input channels disagree with the stack");
        int x = t.concat_rows(channels);
        int side = map_.n_eta();
        for (std::size_t l = 0; l + 1 < chain_.size(); ++l) {
            int wid = conv_param_ids[2 * l], bid = conv_param_ids[2 * l + 1];
            int wn = param_nodes[wid], bn = param_nodes[bid];
            x = t.conv2d(x, wn, bn, chain_[l], chain_[l + 1], k_, side);
            if (l + 2 < chain_.size()) x = t.relu(x);
        }
        return x;
    }

private:
    PolarCartMap map_;
    int k_ = 5;
    std::vector<int> chain_;
};

// ---- uncompressed equivariant architecture ----

class UncompressedModel {
public:
    UncompressedModel(const Grids& g, std::vector<double> freqs, InitKind init, Rng& rng,
                      int conv_k = 5, std::vector<int> conv_hidden = {8, 8})
        : g_(g), freqs_(std::move(freqs)),
          tail_(g, int(freqs_.size()), conv_k, std::move(conv_hidden)) {
        if (freqs_.empty()) throw config_error("model needs at least one frequency");
        for (std::size_t i = 0; i < freqs_.size(); ++i) {
            std::string sfx = "_f" + std::to_string(i);
            Eigen::MatrixXd c(g_.n_sc, g_.n_rho), s(g_.n_sc, g_.n_rho);
            Eigen::MatrixXd o = Eigen::MatrixXd::Ones(1, g_.n_sc);
            if (init == InitKind::kernel) {
                Kernel k = build_kernel(2.0 * pi * freqs_[i], g_);
                c = k.C;
                s = k.S;
            } else {
                glorot_uniform_matrix(rng, g_.n_sc, g_.n_rho, c);
                glorot_uniform_matrix(rng, g_.n_sc, g_.n_rho, s);
            }
            params_.add("C" + sfx, std::move(c));
            params_.add("S" + sfx, std::move(s));
            for (int q = 1; q <= 4; ++q) {
                Eigen::MatrixXd ov = o;
                if (init == InitKind::kernel && q == 4) ov = -o;
                if (init == InitKind::glorot) glorot_uniform_matrix(rng, g_.n_sc, 1, ov);
                params_.add("O" + std::to_string(q) + sfx, std::move(ov));
            }
        }
        conv_ids_.clear();
        std::size_t before = params_.t.size();
        tail_.init_params(params_, rng);
        for (std::size_t i = before; i < params_.t.size(); ++i) conv_ids_.push_back(int(i));
    }

    const Grids& grids() const { return g_; }
    const std::vector<double>& freqs() const { return freqs_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const ConvTail& tail() const { return tail_; }

    std::size_t closed_form_count() const {
        return freqs_.size() * count_uncompressed_per_freq(g_.n_sc, g_.n_rho) +
               count_conv(tail_.chain(), tail_.kernel());
    }

    ForwardOut forward(Tape& t, const std::vector<Eigen::MatrixXcd>& lambda,
                       const Eigen::MatrixXd* target = nullptr) const {
        if (lambda.size() != freqs_.size())
            throw config_error("data frequency count disagrees with the model");
        ForwardOut fo;
        for (const auto& p : params_.t) fo.param_nodes.push_back(t.leaf(p.v, p.trainable));
        double qw = (2.0 * pi / g_.n_sc) * (2.0 * pi / g_.n_sc);
        for (std::size_t f = 0; f < freqs_.size(); ++f) {
            if (lambda[f].rows() != g_.n_sc || lambda[f].cols() != g_.n_sc)
                throw dim_error("far-field data does not match the angle grid");
            std::string sfx = "_f" + std::to_string(f);
            int lr = t.leaf(lambda[f].real(), false);
            int li = t.leaf(lambda[f].imag(), false);
            int cn = node(t, fo, "C" + sfx), sn = node(t, fo, "S" + sfx);
            int o1 = node(t, fo, "O1" + sfx), o2 = node(t, fo, "O2" + sfx);
            int o3 = node(t, fo, "O3" + sfx), o4 = node(t, fo, "O4" + sfx);
            std::vector<int> rows;
            for (int j = 0; j < g_.n_theta(); ++j) {
                int lrj = t.shift_gather(lr, j), lij = t.shift_gather(li, j);
                int t1 = t.matmul(o1, t.hadamard(cn, t.matmul(lrj, cn)));
                int t2 = t.matmul(o2, t.hadamard(sn, t.matmul(lrj, sn)));
                int t3 = t.matmul(o3, t.hadamard(cn, t.matmul(lij, sn)));
                int t4 = t.matmul(o4, t.hadamard(sn, t.matmul(lij, cn)));
                rows.push_back(t.add(t.add(t1, t2), t.add(t3, t4)));
            }
            int alpha = t.scale(t.concat_rows(rows), qw);
            fo.alphas.push_back(alpha);
            fo.channels.push_back(t.polar_interp(alpha, &tail_.map()));
        }
        fo.pred = tail_.run(t, fo.channels, params_, fo.param_nodes, conv_ids_);
        if (target) fo.loss = t.mse(fo.pred, t.leaf(*target, false));
        return fo;
    }

private:
    int node(Tape&, ForwardOut& fo, const std::string& name) const {
        for (std::size_t i = 0; i < params_.t.size(); ++i)
            if (params_.t[i].name == name) return fo.param_nodes[i];
        throw config_error("no parameter named " + name);
    }

    Grids g_;
    std::vector<double> freqs_;
    ParamSet params_;
    ConvTail tail_;
    std::vector<int> conv_ids_;
};

// ---- butterfly-compressed architecture ----

class CompressedModel {
public:
    CompressedModel(const Grids& g, std::vector<double> freqs, int L, int rank, int n_sr,
                    InitKind init, Rng& rng, int conv_k = 5, std::vector<int> conv_hidden = {8, 8})
        : g_(g), freqs_(std::move(freqs)), L_(L), rank_(rank), n_sr_(n_sr),
          tail_(g, 2 * int(freqs_.size()), conv_k, std::move(conv_hidden)) {
        validate();
        if (init == InitKind::kernel) {
            std::vector<ButterflyFactors> fs;
            for (double f : freqs_)
                fs.push_back(butterfly_factorize(build_kernel_matrix(2.0 * pi * f, g_), L_, rank_));
            seed_from_factors(fs);
        } else {
            seed_glorot(rng);
        }
        finish_params(rng);
    }

    CompressedModel(const Grids& g, std::vector<double> freqs,
                    const std::vector<ButterflyFactors>& factors, int n_sr, Rng& rng,
                    int conv_k = 5, std::vector<int> conv_hidden = {8, 8})
        : g_(g), freqs_(std::move(freqs)),
          L_(factors.empty() ? throw config_error("at least one factorization is required")
                             : factors.front().L),
          rank_(factors.front().rank), n_sr_(n_sr),
          tail_(g, 2 * int(freqs_.size()), conv_k, std::move(conv_hidden)) {
        validate();
        if (factors.size() != freqs_.size())
            throw config_error("one factorization per frequency is required");
        seed_from_factors(factors);
        finish_params(rng);
    }

    const Grids& grids() const { return g_; }
    const std::vector<double>& freqs() const { return freqs_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const ConvTail& tail() const { return tail_; }
    int levels() const { return L_; }
    int rank() const { return rank_; }
    int resnet_depth() const { return n_sr_; }

    std::size_t closed_form_count() const {
        return freqs_.size() * count_compressed_per_freq(L_, g_.n_sc >> L_, rank_, n_sr_) +
               count_conv(tail_.chain(), tail_.kernel());
    }

    ForwardOut forward(Tape& t, const std::vector<Eigen::MatrixXcd>& lambda,
                       const Eigen::MatrixXd* target = nullptr) const {
        if (lambda.size() != freqs_.size())
            throw config_error("data frequency count disagrees with the model");
        ForwardOut fo;
        for (const auto& p : params_.t) fo.param_nodes.push_back(t.leaf(p.v, p.trainable));
        double qw = (2.0 * pi / g_.n_sc) * (2.0 * pi / g_.n_sc);
        int blocks = 1 << L_, half = 1 << (L_ / 2);
        int sr = g_.n_sc / blocks, sc = g_.n_rho / blocks, r = rank_;
        using detail::CNode;
        for (std::size_t f = 0; f < freqs_.size(); ++f) {
            if (lambda[f].rows() != g_.n_sc || lambda[f].cols() != g_.n_sc)
                throw dim_error("far-field data does not match the angle grid");
            std::string sfx = "_f" + std::to_string(f);
            int lr = t.leaf(lambda[f].real(), false);
            int li = t.leaf(lambda[f].imag(), false);
            CNode u{node(fo, "u_re" + sfx), node(fo, "u_im" + sfx)};
            CNode v{node(fo, "v_re" + sfx), node(fo, "v_im" + sfx)};
            CNode mw{node(fo, "m_re" + sfx), node(fo, "m_im" + sfx)};
            std::vector<int> rre, rim;
            for (int j = 0; j < g_.n_theta(); ++j) {
                CNode x{t.shift_gather(lr, j), t.shift_gather(li, j)};
                x = sandwich_leaf_in(t, x, u, blocks, sr, r);
                for (int l = L_ - 1; l >= L_ / 2; --l) {
                    std::string lv = level_sfx(l, f);
                    CNode gl{node(fo, "gl_re" + lv), node(fo, "gl_im" + lv)};
                    CNode gr{node(fo, "gr_re" + lv), node(fo, "gr_im" + lv)};
                    x = sandwich_contract(t, x, gl, gr, l, r);
                }
                x = sandwich_switch(t, x, mw, half, r);
                for (int d = 0; d < n_sr_; ++d) {
                    int w1 = node(fo, "sr_w1_" + std::to_string(d) + sfx);
                    int w2 = node(fo, "sr_w2_" + std::to_string(d) + sfx);
                    x = {resnet_part(t, x.re, w1, w2, blocks, r),
                         resnet_part(t, x.im, w1, w2, blocks, r)};
                }
                for (int l = L_ / 2; l < L_; ++l) {
                    std::string lv = level_sfx(l, f);
                    CNode hl{node(fo, "hl_re" + lv), node(fo, "hl_im" + lv)};
                    CNode hr{node(fo, "hr_re" + lv), node(fo, "hr_im" + lv)};
                    x = sandwich_expand(t, x, hl, hr, l, r);
                }
                x = sandwich_leaf_out(t, x, v, blocks, sc, r);
                rre.push_back(t.take_diag(x.re));
                rim.push_back(t.take_diag(x.im));
            }
            int are = t.scale(t.concat_rows(rre), qw);
            int aim = t.scale(t.concat_rows(rim), qw);
            fo.alphas.push_back(are);
            fo.alphas.push_back(aim);
            fo.channels.push_back(t.polar_interp(are, &tail_.map()));
            fo.channels.push_back(t.polar_interp(aim, &tail_.map()));
        }
        fo.pred = tail_.run(t, fo.channels, params_, fo.param_nodes, conv_ids_);
        if (target) fo.loss = t.mse(fo.pred, t.leaf(*target, false));
        return fo;
    }

private:
    void validate() const {
        if (freqs_.empty()) throw config_error("model needs at least one frequency");
        if (L_ < 2 || L_ % 2 != 0) throw config_error("level count must be even and >= 2");
        int blocks = 1 << L_;
        if (g_.n_sc % blocks != 0 || g_.n_rho % blocks != 0)
            throw config_error("grid sides must split into 2^L leaf blocks");
        int mid = std::min(g_.n_sc, g_.n_rho) / (1 << (L_ / 2));
        if (rank_ < 1 || rank_ > mid)
            throw config_error("rank must lie in [1, min mid-level block dim]");
        if (n_sr_ < 0) throw config_error("resnet depth must be nonnegative");
    }

    std::string level_sfx(int l, std::size_t f) const {
        return "_l" + std::to_string(l) + "_f" + std::to_string(f);
    }

    void seed_from_factors(const std::vector<ButterflyFactors>& fs) {
        using detail::stack_part;
        for (std::size_t f = 0; f < fs.size(); ++f) {
            const ButterflyFactors& bf = fs[f];
            if (bf.L != L_ || bf.rank != rank_ || bf.n_rows != g_.n_sc || bf.n_cols != g_.n_rho)
                throw config_error("factorization does not match the model geometry");
            std::string sfx = "_f" + std::to_string(f);
            params_.add("u_re" + sfx, stack_part(bf.u_leaf, true));
            params_.add("u_im" + sfx, stack_part(bf.u_leaf, false));
            params_.add("v_re" + sfx, stack_part(bf.v_leaf, true));
            params_.add("v_im" + sfx, stack_part(bf.v_leaf, false));
            for (int l = L_ / 2; l < L_; ++l) {
                std::string lv = level_sfx(l, f);
                const auto& gt = bf.g[l - L_ / 2];
                const auto& ht = bf.h[l - L_ / 2];
                params_.add("gl_re" + lv, stack_part(gt, true));
                params_.add("gl_im" + lv, stack_part(gt, false));
                params_.add("gr_re" + lv, stack_part(gt, true));
                params_.add("gr_im" + lv, stack_part(gt, false));
                params_.add("hl_re" + lv, stack_part(ht, true));
                params_.add("hl_im" + lv, stack_part(ht, false));
                params_.add("hr_re" + lv, stack_part(ht, true));
                params_.add("hr_im" + lv, stack_part(ht, false));
            }
            int blocks = 1 << L_;
            for (int d = 0; d < n_sr_; ++d) {
                params_.add("sr_w1_" + std::to_string(d) + sfx,
                            Eigen::MatrixXd::Zero(blocks * rank_, rank_));
                params_.add("sr_w2_" + std::to_string(d) + sfx,
                            Eigen::MatrixXd::Zero(blocks * rank_, rank_));
            }
            params_.add("m_re" + sfx, stack_part(bf.m, true), false);
            params_.add("m_im" + sfx, stack_part(bf.m, false), false);
        }
    }

    void seed_glorot(Rng& rng) {
        int blocks = 1 << L_;
        int sr = g_.n_sc / blocks, sc = g_.n_rho / blocks, r = rank_;
        auto mat = [&](int rows, int cols, int fi, int fos) {
            Eigen::MatrixXd m(rows, cols);
            glorot_uniform_matrix(rng, fi, fos, m);
            return m;
        };
        for (std::size_t f = 0; f < freqs_.size(); ++f) {
            std::string sfx = "_f" + std::to_string(f);
            params_.add("u_re" + sfx, mat(blocks * sr, r, sr, r));
            params_.add("u_im" + sfx, mat(blocks * sr, r, sr, r));
            params_.add("v_re" + sfx, mat(blocks * sc, r, sc, r));
            params_.add("v_im" + sfx, mat(blocks * sc, r, sc, r));
            for (int l = L_ / 2; l < L_; ++l) {
                std::string lv = level_sfx(l, f);
                for (const char* base : {"gl", "gr", "hl", "hr"}) {
                    params_.add(std::string(base) + "_re" + lv, mat(blocks * r, 2 * r, 2 * r, r));
                    params_.add(std::string(base) + "_im" + lv, mat(blocks * r, 2 * r, 2 * r, r));
                }
            }
            for (int d = 0; d < n_sr_; ++d) {
                params_.add("sr_w1_" + std::to_string(d) + sfx, mat(blocks * r, r, r, r));
                params_.add("sr_w2_" + std::to_string(d) + sfx, mat(blocks * r, r, r, r));
            }
            params_.add("m_re" + sfx, mat(blocks * r, r, r, r), false);
            params_.add("m_im" + sfx, mat(blocks * r, r, r, r), false);
        }
    }

    void finish_params(Rng& rng) {
        conv_ids_.clear();
        std::size_t before = params_.t.size();
        tail_.init_params(params_, rng);
        for (std::size_t i = before; i < params_.t.size(); ++i) conv_ids_.push_back(int(i));
    }

    int node(const ForwardOut& fo, const std::string& name) const {
        for (std::size_t i = 0; i < params_.t.size(); ++i)
            if (params_.t[i].name == name) return fo.param_nodes[i];
        throw config_error("no parameter named " + name);
    }

    // Y = A^H X with block-diagonal A (blocks s x r), X chunked s rows.
    detail::CNode sandwich_leaf_in(Tape& t, detail::CNode x, detail::CNode a, int blocks, int s,
                                   int r) const {
        using namespace detail;
        std::vector<CNode> rows, cols;
        for (int b = 0; b < blocks; ++b) {
            CNode ab = crows(t, a, b * s, s);
            rows.push_back(cmm_al(t, ab, crows(t, x, b * s, s)));
        }
        CNode y = ccat_rows(t, rows);
        for (int b = 0; b < blocks; ++b) {
            CNode ab = crows(t, a, b * s, s);
            cols.push_back(cmm(t, ccols(t, y, b * s, s), ab));
        }
        return ccat_cols(t, cols);
    }

    // Z = V X V^H with block-diagonal V (blocks s x r), X chunked r rows.
    detail::CNode sandwich_leaf_out(Tape& t, detail::CNode x, detail::CNode v, int blocks, int s,
                                    int r) const {
        using namespace detail;
        std::vector<CNode> rows, cols;
        for (int b = 0; b < blocks; ++b) {
            CNode vb = crows(t, v, b * s, s);
            rows.push_back(cmm(t, vb, crows(t, x, b * r, r)));
        }
        CNode y = ccat_rows(t, rows);
        for (int b = 0; b < blocks; ++b) {
            CNode vb = crows(t, v, b * s, s);
            cols.push_back(cmm_ar(t, ccols(t, y, b * r, r), vb));
        }
        return ccat_cols(t, cols);
    }

    // X <- Gl^H X Gr with expansion-structured transfer operators at level l.
    detail::CNode sandwich_contract(Tape& t, detail::CNode x, detail::CNode gl, detail::CNode gr,
                                    int l, int r) const {
        using namespace detail;
        int lvl_blocks = 1 << l, childw = 1 << (L_ - l - 1), total = 1 << L_;
        std::vector<CNode> rows(total), cols(total);
        auto tr_half = [&](CNode g, int ct, bool right) {
            CNode blockRows = crows(t, g, ct * r, r);
            return ccols(t, blockRows, right ? r : 0, r);
        };
        for (int i = 0; i < lvl_blocks; ++i)
            for (int jp = 0; jp < childw; ++jp) {
                int ct = (2 * i) * childw + jp, cb = ct + childw;
                int p0 = i * 2 * childw + 2 * jp;
                CNode xt = crows(t, x, ct * r, r), xb = crows(t, x, cb * r, r);
                rows[p0] = cadd(t, cmm_al(t, tr_half(gl, ct, false), xt),
                                cmm_al(t, tr_half(gl, cb, false), xb));
                rows[p0 + 1] = cadd(t, cmm_al(t, tr_half(gl, ct, true), xt),
                                    cmm_al(t, tr_half(gl, cb, true), xb));
            }
        CNode y = ccat_rows(t, rows);
        for (int i = 0; i < lvl_blocks; ++i)
            for (int jp = 0; jp < childw; ++jp) {
                int ct = (2 * i) * childw + jp, cb = ct + childw;
                int p0 = i * 2 * childw + 2 * jp;
                CNode yt = ccols(t, y, ct * r, r), yb = ccols(t, y, cb * r, r);
                cols[p0] = cadd(t, cmm(t, yt, tr_half(gr, ct, false)),
                                cmm(t, yb, tr_half(gr, cb, false)));
                cols[p0 + 1] = cadd(t, cmm(t, yt, tr_half(gr, ct, true)),
                                    cmm(t, yb, tr_half(gr, cb, true)));
            }
        return ccat_cols(t, cols);
    }

    // X <- Hl X Hr^H, the outward mirror of sandwich_contract.
    detail::CNode sandwich_expand(Tape& t, detail::CNode x, detail::CNode hl, detail::CNode hr,
                                  int l, int r) const {
        using namespace detail;
        int lvl_blocks = 1 << l, childw = 1 << (L_ - l - 1), total = 1 << L_;
        std::vector<CNode> rows(total), cols(total);
        auto tr_half = [&](CNode h, int ct, bool right) {
            CNode blockRows = crows(t, h, ct * r, r);
            return ccols(t, blockRows, right ? r : 0, r);
        };
        for (int i = 0; i < lvl_blocks; ++i)
            for (int jp = 0; jp < childw; ++jp) {
                int ct = (2 * i) * childw + jp, cb = ct + childw;
                int p0 = i * 2 * childw + 2 * jp;
                CNode xp = crows(t, x, p0 * r, r), xq = crows(t, x, (p0 + 1) * r, r);
                rows[ct] = cadd(t, cmm(t, tr_half(hl, ct, false), xp),
                                cmm(t, tr_half(hl, ct, true), xq));
                rows[cb] = cadd(t, cmm(t, tr_half(hl, cb, false), xp),
                                cmm(t, tr_half(hl, cb, true), xq));
            }
        CNode y = ccat_rows(t, rows);
        for (int i = 0; i < lvl_blocks; ++i)
            for (int jp = 0; jp < childw; ++jp) {
                int ct = (2 * i) * childw + jp, cb = ct + childw;
                int p0 = i * 2 * childw + 2 * jp;
                CNode yp = ccols(t, y, p0 * r, r), yq = ccols(t, y, (p0 + 1) * r, r);
                cols[ct] = cadd(t, cmm_ar(t, yp, tr_half(hr, ct, false)),
                                cmm_ar(t, yq, tr_half(hr, ct, true)));
                cols[cb] = cadd(t, cmm_ar(t, yp, tr_half(hr, cb, false)),
                                cmm_ar(t, yq, tr_half(hr, cb, true)));
            }
        return ccat_cols(t, cols);
    }

    // X <- M^H X M where chunk (i*half+j) of M routes from chunk (j*half+i).
    detail::CNode sandwich_switch(Tape& t, detail::CNode x, detail::CNode m, int half,
                                  int r) const {
        using namespace detail;
        int total = half * half;
        std::vector<CNode> rows(total), cols(total);
        for (int i = 0; i < half; ++i)
            for (int j = 0; j < half; ++j) {
                CNode mb = crows(t, m, (i * half + j) * r, r);
                rows[j * half + i] = cmm_al(t, mb, crows(t, x, (i * half + j) * r, r));
            }
        CNode y = ccat_rows(t, rows);
        for (int i = 0; i < half; ++i)
            for (int j = 0; j < half; ++j) {
                CNode mb = crows(t, m, (i * half + j) * r, r);
                cols[j * half + i] = cmm(t, ccols(t, y, (i * half + j) * r, r), mb);
            }
        return ccat_cols(t, cols);
    }

    int resnet_part(Tape& t, int x, int w1, int w2, int blocks, int r) const {
        std::vector<int> out;
        for (int b = 0; b < blocks; ++b) {
            int xb = t.gather_rows(x, b * r, r);
            int w1b = t.gather_rows(w1, b * r, r);
            int w2b = t.gather_rows(w2, b * r, r);
            out.push_back(t.add(xb, t.matmul(w2b, t.relu(t.matmul(w1b, xb)))));
        }
        return t.concat_rows(out);
    }

    Grids g_;
    std::vector<double> freqs_;
    int L_ = 0, rank_ = 0, n_sr_ = 0;
    ParamSet params_;
    ConvTail tail_;
    std::vector<int> conv_ids_;
};

// Gradients per parameter tensor after a backward pass, in ParamSet order.
inline std::vector<Eigen::MatrixXd> collect_grads(const Tape& t, const ForwardOut& fo,
                                                  const ParamSet& ps) {
    std::vector<Eigen::MatrixXd> g;
    for (std::size_t i = 0; i < ps.t.size(); ++i) {
        if (ps.t[i].trainable)
            g.push_back(t.grad(fo.param_nodes[i]));
        else
            g.push_back(Eigen::MatrixXd::Zero(ps.t[i].v.rows(), ps.t[i].v.cols()));
    }
    return g;
}

} // namespace wbe
