#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <utility>
#include <vector>

#include "wbe/born/adjoint.hpp"
#include "wbe/born/kernel.hpp"
#include "wbe/core/types.hpp"

namespace wbe {

// The oscillatory kernel as a dense matrix, sharing the entries used by the
// back-projection layer.
inline Eigen::MatrixXcd build_kernel_matrix(double omega, const Grids& g) {
    return build_kernel(omega, g).K;
}

struct LowRankReport {
    int level = 0;
    double tol = 0.0;
    std::vector<int> per_level;  // worst block rank at each balanced partition
    int max_rank = 0;
};

inline int numerical_rank(const Eigen::MatrixXcd& block, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * sv(0)) ++rank;
    return rank;
}

// Sweeps every balanced partition 0..level: rows split 2^l ways, columns
// split 2^(level-l) ways, so each block keeps a constant entry count. A
// kernel is compressible when the worst rank stays bounded across the sweep.
inline LowRankReport check_complementary_lowrank(const Eigen::MatrixXcd& a, int level,
                                                 double tol) {
    if (level < 0) throw config_error("low-rank check: level must be nonnegative");
    long long nb = 1LL << level;
    if (nb > a.rows() || nb > a.cols() || a.rows() % nb != 0 || a.cols() % nb != 0)
        throw config_error("low-rank check: 2^level must divide both matrix sides");
    LowRankReport rep;
    rep.level = level;
    rep.tol = tol;
    for (int l = 0; l <= level; ++l) {
        int rblocks = 1 << l, cblocks = 1 << (level - l);
        int bh = int(a.rows()) / rblocks, bw = int(a.cols()) / cblocks;
        int worst = 0;
        for (int i = 0; i < rblocks; ++i)
            for (int j = 0; j < cblocks; ++j)
                worst = std::max(worst, numerical_rank(a.block(i * bh, j * bw, bh, bw), tol));
        rep.per_level.push_back(worst);
        rep.max_rank = std::max(rep.max_rank, worst);
    }
    return rep;
}

// Structured factorization K ~ U G... M ...H* V* with L+3 factors. Blocks are
// stored by chunk index; the chunk at (block i, slot j) of a level-l
// representation sits at global index i*2^(L-l)+j.
struct ButterflyFactors {
    int L = 0;
    int leaf_rows = 0;  // rows per finest block of the row partition
    int leaf_cols = 0;
    int rank = 0;
    int n_rows = 0;
    int n_cols = 0;
    std::vector<Eigen::MatrixXcd> u_leaf;  // 2^L blocks, leaf_rows x rank
    std::vector<Eigen::MatrixXcd> v_leaf;  // 2^L blocks, leaf_cols x rank
    // g[l - L/2][child chunk]: rank x 2 rank transfer from a parent pair to a
    // half-height child basis; h is the column-side mirror.
    std::vector<std::vector<Eigen::MatrixXcd>> g;
    std::vector<std::vector<Eigen::MatrixXcd>> h;
    // Switch blocks: the singular values of mid-level block (i,j), stored at
    // i*2^(L/2)+j, routed from column chunk j*2^(L/2)+i.
    std::vector<Eigen::MatrixXcd> m;

    int factor_count() const { return L + 3; }

    long long stored_entries() const {
        long long total = 0;
        for (const auto& b : u_leaf) total += b.size();
        for (const auto& b : v_leaf) total += b.size();
        for (const auto& lvl : g)
            for (const auto& b : lvl) total += b.size();
        for (const auto& lvl : h)
            for (const auto& b : lvl) total += b.size();
        for (const auto& b : m) total += b.size();
        return total;
    }

    long long storage_bound() const {
        long long blocks = 1LL << L;
        long long s = std::max(leaf_rows, leaf_cols);
        return 4 * (2 * s * rank * blocks + 2LL * L * rank * rank * blocks);
    }
};

namespace detail {

// Best rank-r left factorization t ~ basis * transfer with orthonormal basis
// columns. When r exceeds the attainable rank the spare columns and rows stay
// zero, which leaves the reconstruction untouched.
inline std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> truncated_basis(const Eigen::MatrixXcd& t,
                                                                     int r) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
    int k = std::min<int>(r, int(svd.singularValues().size()));
    Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(t.rows(), r);
    Eigen::MatrixXcd transfer = Eigen::MatrixXcd::Zero(r, t.cols());
    basis.leftCols(k) = svd.matrixU().leftCols(k);
    transfer.topRows(k) =
        svd.singularValues().head(k).asDiagonal() * svd.matrixV().leftCols(k).adjoint();
    return {std::move(basis), std::move(transfer)};
}

struct RefinedSide {
    std::vector<std::vector<Eigen::MatrixXcd>> transfers;
    std::vector<Eigen::MatrixXcd> leaves;
};

// Half the row count of every basis per sweep, L/2 sweeps total. Children
// (2i,j) and (2i+1,j) of parent pair (i,2j),(i,2j+1) pick up the top and
// bottom halves respectively.
inline RefinedSide refine_bases(std::vector<std::vector<Eigen::MatrixXcd>> cur, int L, int r) {
    RefinedSide out;
    for (int l = L / 2; l < L; ++l) {
        int blocks = 1 << l;
        int childw = 1 << (L - l - 1);
        std::vector<Eigen::MatrixXcd> tr(std::size_t(1) << L);
        std::vector<std::vector<Eigen::MatrixXcd>> next(2 * std::size_t(blocks));
        for (auto& b : next) b.resize(childw);
        for (int i = 0; i < blocks; ++i) {
            int rows = int(cur[i][0].rows());
            for (int jp = 0; jp < childw; ++jp) {
                Eigen::MatrixXcd pair(rows, 2 * r);
                pair << cur[i][2 * jp], cur[i][2 * jp + 1];
                int ct = (2 * i) * childw + jp;
                int cb = ct + childw;
                auto top = truncated_basis(pair.topRows(rows / 2), r);
                next[2 * i][jp] = std::move(top.first);
                tr[ct] = std::move(top.second);
                auto bot = truncated_basis(pair.bottomRows(rows / 2), r);
                next[2 * i + 1][jp] = std::move(bot.first);
                tr[cb] = std::move(bot.second);
            }
        }
        out.transfers.push_back(std::move(tr));
        cur = std::move(next);
    }
    out.leaves.reserve(cur.size());
    for (auto& blk : cur) out.leaves.push_back(std::move(blk[0]));
    return out;
}

} // namespace detail

inline ButterflyFactors butterfly_factorize(const Eigen::MatrixXcd& a, int L, int r) {
    if (L < 2 || L % 2 != 0) throw config_error("butterfly: level count must be even and >= 2");
    long long nb = 1LL << L;
    if (a.rows() < nb || a.cols() < nb || a.rows() % nb != 0 || a.cols() % nb != 0)
        throw config_error("butterfly: matrix sides must split into 2^L leaf blocks");
    ButterflyFactors f;
    f.L = L;
    f.n_rows = int(a.rows());
    f.n_cols = int(a.cols());
    f.leaf_rows = f.n_rows / int(nb);
    f.leaf_cols = f.n_cols / int(nb);
    int half = 1 << (L / 2);
    int br = f.leaf_rows * half, bc = f.leaf_cols * half;
    if (r < 1 || r > std::min(br, bc))
        throw config_error("butterfly: rank must lie in [1, min mid-level block dim]");
    f.rank = r;

    // Stage 1: rank-r SVD of every mid-level block. Left vectors seed the row
    // bases, right vectors the column bases, singular values the switch.
    std::vector<std::vector<Eigen::MatrixXcd>> ub(half), vb(half);
    for (int i = 0; i < half; ++i) {
        ub[i].resize(half);
        vb[i].resize(half);
    }
    f.m.resize(std::size_t(half) * half);
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < half; ++j) {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a.block(i * br, j * bc, br, bc),
                                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
            ub[i][j] = svd.matrixU().leftCols(r);
            vb[j][i] = svd.matrixV().leftCols(r);
            f.m[std::size_t(i) * half + j] =
                Eigen::MatrixXcd(svd.singularValues().head(r).asDiagonal());
        }

    // Stage 2: recursive half-splitting on both sides.
    detail::RefinedSide us = detail::refine_bases(std::move(ub), L, r);
    detail::RefinedSide vs = detail::refine_bases(std::move(vb), L, r);
    f.g = std::move(us.transfers);
    f.h = std::move(vs.transfers);
    f.u_leaf = std::move(us.leaves);
    f.v_leaf = std::move(vs.leaves);
    return f;
}

enum class BfMode { forward, adjoint, transpose, conjugate };

struct BfApplyStats {
    long long macs = 0;  // complex multiply-accumulate count
};

namespace detail {

// Coarse-to-fine: each child chunk is a transfer-block image of its parent
// pair. Used with g when applying the kernel, with h when applying the
// adjoint.
inline void bf_expand(const std::vector<Eigen::MatrixXcd>& tr, int L, int l, int r,
                      const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out, BfApplyStats* st) {
    int blocks = 1 << l, childw = 1 << (L - l - 1);
    for (int i = 0; i < blocks; ++i)
        for (int jp = 0; jp < childw; ++jp) {
            int ct = (2 * i) * childw + jp, cb = ct + childw;
            int p0 = i * 2 * childw + 2 * jp;
            out.middleRows(ct * r, r) =
                tr[ct].leftCols(r) * in.middleRows(p0 * r, r) +
                tr[ct].rightCols(r) * in.middleRows((p0 + 1) * r, r);
            out.middleRows(cb * r, r) =
                tr[cb].leftCols(r) * in.middleRows(p0 * r, r) +
                tr[cb].rightCols(r) * in.middleRows((p0 + 1) * r, r);
            if (st) st->macs += 4LL * r * r * in.cols();
        }
}

// Fine-to-coarse: adjoint of bf_expand over the same index map.
inline void bf_contract(const std::vector<Eigen::MatrixXcd>& tr, int L, int l, int r,
                        const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out, BfApplyStats* st) {
    int blocks = 1 << l, childw = 1 << (L - l - 1);
    for (int i = 0; i < blocks; ++i)
        for (int jp = 0; jp < childw; ++jp) {
            int ct = (2 * i) * childw + jp, cb = ct + childw;
            int p0 = i * 2 * childw + 2 * jp;
            out.middleRows(p0 * r, r) =
                tr[ct].leftCols(r).adjoint() * in.middleRows(ct * r, r) +
                tr[cb].leftCols(r).adjoint() * in.middleRows(cb * r, r);
            out.middleRows((p0 + 1) * r, r) =
                tr[ct].rightCols(r).adjoint() * in.middleRows(ct * r, r) +
                tr[cb].rightCols(r).adjoint() * in.middleRows(cb * r, r);
            if (st) st->macs += 4LL * r * r * in.cols();
        }
}

inline Eigen::MatrixXcd bf_forward(const ButterflyFactors& f, const Eigen::MatrixXcd& x,
                                   BfApplyStats* st) {
    int nb = 1 << f.L, r = f.rank;
    Eigen::Index nc = x.cols();
    Eigen::MatrixXcd cur(Eigen::Index(nb) * r, nc), nxt(Eigen::Index(nb) * r, nc);
    for (int i = 0; i < nb; ++i) {
        cur.middleRows(Eigen::Index(i) * r, r) =
            f.v_leaf[i].adjoint() * x.middleRows(Eigen::Index(i) * f.leaf_cols, f.leaf_cols);
        if (st) st->macs += 1LL * f.leaf_cols * r * nc;
    }
    for (int l = f.L - 1; l >= f.L / 2; --l) {
        bf_contract(f.h[l - f.L / 2], f.L, l, r, cur, nxt, st);
        std::swap(cur, nxt);
    }
    int half = 1 << (f.L / 2);
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < half; ++j) {
            nxt.middleRows(Eigen::Index(i * half + j) * r, r) =
                f.m[std::size_t(i) * half + j] * cur.middleRows(Eigen::Index(j * half + i) * r, r);
            if (st) st->macs += 1LL * r * r * nc;
        }
    std::swap(cur, nxt);
    for (int l = f.L / 2; l < f.L; ++l) {
        bf_expand(f.g[l - f.L / 2], f.L, l, r, cur, nxt, st);
        std::swap(cur, nxt);
    }
    Eigen::MatrixXcd y(f.n_rows, nc);
    for (int i = 0; i < nb; ++i) {
        y.middleRows(Eigen::Index(i) * f.leaf_rows, f.leaf_rows) =
            f.u_leaf[i] * cur.middleRows(Eigen::Index(i) * r, r);
        if (st) st->macs += 1LL * f.leaf_rows * r * nc;
    }
    return y;
}

inline Eigen::MatrixXcd bf_adjoint(const ButterflyFactors& f, const Eigen::MatrixXcd& x,
                                   BfApplyStats* st) {
    int nb = 1 << f.L, r = f.rank;
    Eigen::Index nc = x.cols();
    Eigen::MatrixXcd cur(Eigen::Index(nb) * r, nc), nxt(Eigen::Index(nb) * r, nc);
    for (int i = 0; i < nb; ++i) {
        cur.middleRows(Eigen::Index(i) * r, r) =
            f.u_leaf[i].adjoint() * x.middleRows(Eigen::Index(i) * f.leaf_rows, f.leaf_rows);
        if (st) st->macs += 1LL * f.leaf_rows * r * nc;
    }
    for (int l = f.L - 1; l >= f.L / 2; --l) {
        bf_contract(f.g[l - f.L / 2], f.L, l, r, cur, nxt, st);
        std::swap(cur, nxt);
    }
    int half = 1 << (f.L / 2);
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < half; ++j) {
            nxt.middleRows(Eigen::Index(j * half + i) * r, r) =
                f.m[std::size_t(i) * half + j].adjoint() *
                cur.middleRows(Eigen::Index(i * half + j) * r, r);
            if (st) st->macs += 1LL * r * r * nc;
        }
    std::swap(cur, nxt);
    for (int l = f.L / 2; l < f.L; ++l) {
        bf_expand(f.h[l - f.L / 2], f.L, l, r, cur, nxt, st);
        std::swap(cur, nxt);
    }
    Eigen::MatrixXcd y(f.n_cols, nc);
    for (int i = 0; i < nb; ++i) {
        y.middleRows(Eigen::Index(i) * f.leaf_cols, f.leaf_cols) =
            f.v_leaf[i] * cur.middleRows(Eigen::Index(i) * r, r);
        if (st) st->macs += 1LL * f.leaf_cols * r * nc;
    }
    return y;
}

} // namespace detail

inline Eigen::MatrixXcd butterfly_apply(const ButterflyFactors& f, const Eigen::MatrixXcd& x,
                                        BfMode mode = BfMode::forward,
                                        BfApplyStats* stats = nullptr) {
    switch (mode) {
        case BfMode::forward:
            if (x.rows() != f.n_cols)
                throw config_error("butterfly apply: input rows must match kernel columns");
            return detail::bf_forward(f, x, stats);
        case BfMode::adjoint:
            if (x.rows() != f.n_rows)
                throw config_error("butterfly apply: input rows must match kernel rows");
            return detail::bf_adjoint(f, x, stats);
        case BfMode::transpose:
            if (x.rows() != f.n_rows)
                throw config_error("butterfly apply: input rows must match kernel rows");
            return detail::bf_adjoint(f, x.conjugate(), stats).conjugate();
        case BfMode::conjugate:
            if (x.rows() != f.n_cols)
                throw config_error("butterfly apply: input rows must match kernel columns");
            return detail::bf_forward(f, x.conjugate(), stats).conjugate();
    }
    throw config_error("butterfly apply: unknown mode");
}

// Row j of the back-projection through the factored kernel: the diagonal of
// K* Lambda_j K times the angular quadrature weight, computed by chaining the
// adjoint over columns and the transpose over rows. No dense triple product
// is formed.
inline Eigen::RowVectorXcd sandwich_apply(const ButterflyFactors& f,
                                          const Eigen::MatrixXcd& lambda, int j,
                                          BfApplyStats* stats = nullptr) {
    if (lambda.rows() != f.n_rows || lambda.cols() != f.n_rows)
        throw config_error("sandwich: data must be square with the kernel row count");
    Eigen::MatrixXcd lj = shift_data(lambda, j);
    Eigen::MatrixXcd kl = butterfly_apply(f, lj, BfMode::adjoint, stats);
    Eigen::MatrixXcd z = butterfly_apply(f, kl.transpose(), BfMode::transpose, stats);
    double w = 2.0 * pi / f.n_rows;
    return (w * w) * z.diagonal().transpose();
}

} // namespace wbe
