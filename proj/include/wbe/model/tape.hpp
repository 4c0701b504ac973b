#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wbe/born/interp.hpp"
#include "wbe/core/types.hpp"

namespace wbe {

// Reverse-mode differentiation over real matrices. A forward pass appends
// nodes; backward() walks them in reverse and accumulates exact gradients.
// The op set is deliberately small: every model in this library is built
// from structured linear maps, relu, and mse, so nothing more is needed.
class Tape {
public:
    enum class Op {
        leaf,
        matmul,        // op(a) * op(b) with optional transposes
        add,
        sub,
        scale,         // c * a
        hadamard,
        relu,
        shift_gather,  // out(m,n) = a((m+j)%N, (n+j)%N), square a
        gather_rows,   // a.middleRows(i0, i1)
        gather_cols,   // a.middleCols(i0, i1)
        concat_rows,
        concat_cols,
        take_diag,     // diagonal of a square matrix, as a row vector
        col_sum,       // column sums, as a row vector
        polar_interp,  // fixed polar-to-Cartesian resampling
        conv2d,        // inputs (x, w, b): stacked-channel same convolution
        mse,           // inputs (pred, want): mean squared difference, 1x1
    };

    struct Node {
        Op op = Op::leaf;
        std::vector<int> in;
        bool ta = false, tb = false;
        double c = 0.0;
        int i0 = 0, i1 = 0;
        const PolarCartMap* map = nullptr;
        int cin = 0, cout = 0, k = 0, side = 0;
        bool track = false;  // participates in gradient propagation
    };

    int leaf(Eigen::MatrixXd v, bool trainable) {
        Node n;
        n.track = trainable;
        nodes_.push_back(std::move(n));
        val_.push_back(std::move(v));
        return int(nodes_.size()) - 1;
    }

    int matmul(int a, int b, bool ta = false, bool tb = false) {
        Node n = node2(Op::matmul, a, b);
        n.ta = ta;
        n.tb = tb;
        const Eigen::MatrixXd &av = val_[a], &bv = val_[b];
        return push(std::move(n), (ta ? av.transpose() : Eigen::MatrixXd(av)) *
                                      (tb ? bv.transpose() : Eigen::MatrixXd(bv)));
    }

    int add(int a, int b) { return push(node2(Op::add, a, b), val_[a] + val_[b]); }
    int sub(int a, int b) { return push(node2(Op::sub, a, b), val_[a] - val_[b]); }

    int scale(int a, double c) {
        Node n = node1(Op::scale, a);
        n.c = c;
        return push(std::move(n), c * val_[a]);
    }

    int hadamard(int a, int b) {
        return push(node2(Op::hadamard, a, b), val_[a].cwiseProduct(val_[b]));
    }

    int relu(int a) { return push(node1(Op::relu, a), val_[a].cwiseMax(0.0)); }

    int shift_gather(int a, int j) {
        const Eigen::MatrixXd& v = val_[a];
        if (v.rows() != v.cols()) throw dim_error("shift gather needs a square matrix");
        int N = int(v.rows());
        int jj = ((j % N) + N) % N;
        Node n = node1(Op::shift_gather, a);
        n.i0 = jj;
        Eigen::MatrixXd out(N, N);
        for (int m = 0; m < N; ++m)
            for (int c = 0; c < N; ++c) out(m, c) = v((m + jj) % N, (c + jj) % N);
        return push(std::move(n), std::move(out));
    }

    int gather_rows(int a, int start, int count) {
        check_range(start, count, int(val_[a].rows()), "row gather");
        Node n = node1(Op::gather_rows, a);
        n.i0 = start;
        n.i1 = count;
        return push(std::move(n), val_[a].middleRows(start, count));
    }

    int gather_cols(int a, int start, int count) {
        check_range(start, count, int(val_[a].cols()), "column gather");
        Node n = node1(Op::gather_cols, a);
        n.i0 = start;
        n.i1 = count;
        return push(std::move(n), val_[a].middleCols(start, count));
    }

    int concat_rows(const std::vector<int>& parts) { return concat(parts, true); }
    int concat_cols(const std::vector<int>& parts) { return concat(parts, false); }

    int take_diag(int a) {
        if (val_[a].rows() != val_[a].cols()) throw dim_error("diagonal needs a square matrix");
        return push(node1(Op::take_diag, a), Eigen::MatrixXd(val_[a].diagonal().transpose()));
    }

    int col_sum(int a) {
        return push(node1(Op::col_sum, a), Eigen::MatrixXd(val_[a].colwise().sum()));
    }

    int polar_interp(int a, const PolarCartMap* map) {
        Node n = node1(Op::polar_interp, a);
        n.map = map;
        return push(std::move(n), map->apply(val_[a]));
    }

    // x: (cin*side) x side stacked channels; w: cout x (cin*k*k); b: cout x 1.
    int conv2d(int x, int w, int b, int cin, int cout, int k, int side) {
        if (k % 2 == 0) throw config_error("convolution kernel must be odd");
        if (val_[x].rows() != cin * side || val_[x].cols() != side)
            throw dim_error("convolution input does not match its channel stack");
        if (val_[w].rows() != cout || val_[w].cols() != cin * k * k || val_[b].rows() != cout)
            throw dim_error("convolution weights do not match their shape");
        Node n;
        n.op = Op::conv2d;
        n.in = {x, w, b};
        n.track = nodes_[x].track || nodes_[w].track || nodes_[b].track;
        n.cin = cin;
        n.cout = cout;
        n.k = k;
        n.side = side;
        return push(std::move(n), conv_forward(val_[x], val_[w], val_[b], cin, cout, k, side));
    }

    int mse(int pred, int want) {
        if (val_[pred].rows() != val_[want].rows() || val_[pred].cols() != val_[want].cols())
            throw dim_error("loss operands differ in shape");
        Eigen::MatrixXd d = val_[pred] - val_[want];
        Eigen::MatrixXd out(1, 1);
        out(0, 0) = d.squaredNorm() / double(d.size());
        return push(node2(Op::mse, pred, want), std::move(out));
    }

    const Eigen::MatrixXd& value(int id) const { return val_[id]; }
    const Eigen::MatrixXd& grad(int id) const { return grad_[id]; }
    std::size_t size() const { return nodes_.size(); }

    void backward(int loss) {
        if (val_[loss].size() != 1) throw dim_error("backward starts from a scalar");
        grad_.assign(val_.size(), Eigen::MatrixXd());
        for (std::size_t i = 0; i < val_.size(); ++i)
            grad_[i] = Eigen::MatrixXd::Zero(val_[i].rows(), val_[i].cols());
        grad_[loss](0, 0) = 1.0;
        for (int id = loss; id >= 0; --id) {
            const Node& n = nodes_[id];
            if (!n.track || n.op == Op::leaf) continue;
            pull(id, n);
        }
    }

    // Recomputes every non-leaf value from the recorded leaves; true when the
    // replay reproduces the stored forward bit for bit.
    bool replay_matches() const {
        Tape fresh;
        std::vector<int> remap(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            std::vector<int> in(n.in.size());
            for (std::size_t q = 0; q < n.in.size(); ++q) in[q] = remap[n.in[q]];
            int id;
            switch (n.op) {
                case Op::leaf: id = fresh.leaf(val_[i], n.track); break;
                case Op::matmul: id = fresh.matmul(in[0], in[1], n.ta, n.tb); break;
                case Op::add: id = fresh.add(in[0], in[1]); break;
                case Op::sub: id = fresh.sub(in[0], in[1]); break;
                case Op::scale: id = fresh.scale(in[0], n.c); break;
                case Op::hadamard: id = fresh.hadamard(in[0], in[1]); break;
                case Op::relu: id = fresh.relu(in[0]); break;
                case Op::shift_gather: id = fresh.shift_gather(in[0], n.i0); break;
                case Op::gather_rows: id = fresh.gather_rows(in[0], n.i0, n.i1); break;
                case Op::gather_cols: id = fresh.gather_cols(in[0], n.i0, n.i1); break;
                case Op::concat_rows: id = fresh.concat_rows(in); break;
                case Op::concat_cols: id = fresh.concat_cols(in); break;
                case Op::take_diag: id = fresh.take_diag(in[0]); break;
                case Op::col_sum: id = fresh.col_sum(in[0]); break;
                case Op::polar_interp: id = fresh.polar_interp(in[0], n.map); break;
                case Op::conv2d:
                    id = fresh.conv2d(in[0], in[1], in[2], n.cin, n.cout, n.k, n.side);
                    break;
                case Op::mse: id = fresh.mse(in[0], in[1]); break;
                default: return false;
            }
            remap[i] = id;
            if (fresh.val_[id].rows() != val_[i].rows() || fresh.val_[id].cols() != val_[i].cols())
                return false;
            if ((fresh.val_[id].array() != val_[i].array()).any()) return false;
        }
        return true;
    }

private:
    Node node1(Op op, int a) {
        Node n;
        n.op = op;
        n.in = {a};
        n.track = nodes_[a].track;
        return n;
    }

    Node node2(Op op, int a, int b) {
        Node n;
        n.op = op;
        n.in = {a, b};
        n.track = nodes_[a].track || nodes_[b].track;
        return n;
    }

    int push(Node n, Eigen::MatrixXd v) {
        nodes_.push_back(std::move(n));
        val_.push_back(std::move(v));
        return int(nodes_.size()) - 1;
    }

    static void check_range(int start, int count, int extent, const char* what) {
        if (start < 0 || count < 1 || start + count > extent)
            throw dim_error(std::string(what) + " out of range");
    }

    int concat(const std::vector<int>& parts, bool rows) {
        if (parts.empty()) throw dim_error("concat of nothing");
        Eigen::Index total = 0, other = rows ? val_[parts[0]].cols() : val_[parts[0]].rows();
        bool track = false;
        for (int p : parts) {
            const Eigen::MatrixXd& v = val_[p];
            if ((rows ? v.cols() : v.rows()) != other) throw dim_error("concat shape mismatch");
            total += rows ? v.rows() : v.cols();
            track = track || nodes_[p].track;
        }
        Eigen::MatrixXd out(rows ? total : other, rows ? other : total);
        Eigen::Index at = 0;
        for (int p : parts) {
            const Eigen::MatrixXd& v = val_[p];
            if (rows) {
                out.middleRows(at, v.rows()) = v;
                at += v.rows();
            } else {
                out.middleCols(at, v.cols()) = v;
                at += v.cols();
            }
        }
        Node n;
        n.op = rows ? Op::concat_rows : Op::concat_cols;
        n.in = parts;
        n.track = track;
        return push(std::move(n), std::move(out));
    }

    static Eigen::MatrixXd conv_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                                        const Eigen::MatrixXd& b, int cin, int cout, int k,
                                        int side) {
        int p = k / 2;
        Eigen::MatrixXd out(cout * side, side);
        for (int oc = 0; oc < cout; ++oc)
            for (int y = 0; y < side; ++y)
                for (int xx = 0; xx < side; ++xx) {
                    double acc = b(oc, 0);
                    for (int ic = 0; ic < cin; ++ic)
                        for (int dy = 0; dy < k; ++dy) {
                            int sy = y + dy - p;
                            if (sy < 0 || sy >= side) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                int sx = xx + dx - p;
                                if (sx < 0 || sx >= side) continue;
                                acc += w(oc, (ic * k + dy) * k + dx) * x(ic * side + sy, sx);
                            }
                        }
                    out(oc * side + y, xx) = acc;
                }
        return out;
    }

    void bump(int id, const Eigen::MatrixXd& g) {
        if (nodes_[id].track) grad_[id] += g;
    }

    void pull(int id, const Node& n) {
        const Eigen::MatrixXd& g = grad_[id];
        switch (n.op) {
            case Op::matmul: {
                const Eigen::MatrixXd &av = val_[n.in[0]], &bv = val_[n.in[1]];
                Eigen::MatrixXd bp = n.tb ? bv.transpose() : Eigen::MatrixXd(bv);
                Eigen::MatrixXd ap = n.ta ? av.transpose() : Eigen::MatrixXd(av);
                if (nodes_[n.in[0]].track)
                    bump(n.in[0], n.ta ? Eigen::MatrixXd(bp * g.transpose())
                                       : Eigen::MatrixXd(g * bp.transpose()));
                if (nodes_[n.in[1]].track)
                    bump(n.in[1], n.tb ? Eigen::MatrixXd(g.transpose() * ap)
                                       : Eigen::MatrixXd(ap.transpose() * g));
                break;
            }
            case Op::add:
                bump(n.in[0], g);
                bump(n.in[1], g);
                break;
            case Op::sub:
                bump(n.in[0], g);
                bump(n.in[1], -g);
                break;
            case Op::scale: bump(n.in[0], n.c * g); break;
            case Op::hadamard:
                bump(n.in[0], g.cwiseProduct(val_[n.in[1]]));
                bump(n.in[1], g.cwiseProduct(val_[n.in[0]]));
                break;
            case Op::relu:
                bump(n.in[0], (val_[n.in[0]].array() > 0.0).cast<double>().matrix().cwiseProduct(g));
                break;
            case Op::shift_gather: {
                if (!nodes_[n.in[0]].track) break;
                int N = int(g.rows());
                Eigen::MatrixXd back = Eigen::MatrixXd::Zero(N, N);
                for (int m = 0; m < N; ++m)
                    for (int c = 0; c < N; ++c) back((m + n.i0) % N, (c + n.i0) % N) += g(m, c);
                bump(n.in[0], back);
                break;
            }
            case Op::gather_rows: {
                if (!nodes_[n.in[0]].track) break;
                grad_[n.in[0]].middleRows(n.i0, n.i1) += g;
                break;
            }
            case Op::gather_cols: {
                if (!nodes_[n.in[0]].track) break;
                grad_[n.in[0]].middleCols(n.i0, n.i1) += g;
                break;
            }
            case Op::concat_rows: {
                Eigen::Index at = 0;
                for (int p : n.in) {
                    bump(p, g.middleRows(at, val_[p].rows()));
                    at += val_[p].rows();
                }
                break;
            }
            case Op::concat_cols: {
                Eigen::Index at = 0;
                for (int p : n.in) {
                    bump(p, g.middleCols(at, val_[p].cols()));
                    at += val_[p].cols();
                }
                break;
            }
            case Op::take_diag: {
                if (!nodes_[n.in[0]].track) break;
                Eigen::Index N = val_[n.in[0]].rows();
                Eigen::MatrixXd back = Eigen::MatrixXd::Zero(N, N);
                back.diagonal() = g.transpose();
                bump(n.in[0], back);
                break;
            }
            case Op::col_sum: {
                if (!nodes_[n.in[0]].track) break;
                bump(n.in[0], Eigen::MatrixXd(g.replicate(val_[n.in[0]].rows(), 1)));
                break;
            }
            case Op::polar_interp:
                if (nodes_[n.in[0]].track) bump(n.in[0], n.map->apply_transpose(g));
                break;
            case Op::conv2d: conv_backward(n, g); break;
            case Op::mse: {
                Eigen::MatrixXd d = val_[n.in[0]] - val_[n.in[1]];
                double s = 2.0 * g(0, 0) / double(d.size());
                bump(n.in[0], s * d);
                bump(n.in[1], -s * d);
                break;
            }
            default: break;
        }
    }

    void conv_backward(const Node& n, const Eigen::MatrixXd& g) {
        const Eigen::MatrixXd& x = val_[n.in[0]];
        const Eigen::MatrixXd& w = val_[n.in[1]];
        int p = n.k / 2, side = n.side;
        bool dx = nodes_[n.in[0]].track, dw = nodes_[n.in[1]].track, db = nodes_[n.in[2]].track;
        Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(w.rows(), w.cols());
        Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(n.cout, 1);
        for (int oc = 0; oc < n.cout; ++oc)
            for (int y = 0; y < side; ++y)
                for (int xx = 0; xx < side; ++xx) {
                    double gv = g(oc * side + y, xx);
                    if (gv == 0.0) continue;
                    gb(oc, 0) += gv;
                    for (int ic = 0; ic < n.cin; ++ic)
                        for (int dy = 0; dy < n.k; ++dy) {
                            int sy = y + dy - p;
                            if (sy < 0 || sy >= side) continue;
                            for (int dxk = 0; dxk < n.k; ++dxk) {
                                int sx = xx + dxk - p;
                                if (sx < 0 || sx >= side) continue;
                                int wc = (ic * n.k + dy) * n.k + dxk;
                                if (dw) gw(oc, wc) += gv * x(ic * side + sy, sx);
                                if (dx) gx(ic * side + sy, sx) += gv * w(oc, wc);
                            }
                        }
                }
        if (dx) bump(n.in[0], gx);
        if (dw) bump(n.in[1], gw);
        if (db) bump(n.in[2], gb);
    }

    std::vector<Node> nodes_;
    std::vector<Eigen::MatrixXd> val_;
    std::vector<Eigen::MatrixXd> grad_;
};

} // namespace wbe
