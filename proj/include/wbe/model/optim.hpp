#pragma once

#include <cmath>
#include <vector>

#include "wbe/model/model.hpp"

namespace wbe {

// Adam with the usual bias correction and a staircase learning-rate schedule:
// the base rate is multiplied by decay_rate every decay_steps optimizer steps.
class Adam {
public:
    Adam(const ParamSet& ps, double lr, double decay_rate = 0.96, int decay_steps = 50,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), decay_rate_(decay_rate), decay_steps_(decay_steps), b1_(beta1), b2_(beta2),
          eps_(eps) {
        if (lr <= 0) throw config_error("learning rate must be positive");
        if (decay_steps < 1) throw config_error("decay interval must be at least one step");
        for (const auto& p : ps.t) {
            m_.push_back(Eigen::MatrixXd::Zero(p.v.rows(), p.v.cols()));
            v_.push_back(Eigen::MatrixXd::Zero(p.v.rows(), p.v.cols()));
        }
    }

    int step_count() const { return t_; }

    // Rate used by the 1-based step t: the base rate decays at t = decay_steps,
    // 2*decay_steps, ... (so steps 1..decay_steps-1 run undecayed).
    double rate_for(int t) const {
        return lr_ * std::pow(decay_rate_, double(t / decay_steps_));
    }

    double current_lr() const { return rate_for(t_ + 1); }

    void step(ParamSet& ps, const std::vector<Eigen::MatrixXd>& grads) {
        if (grads.size() != ps.t.size() || m_.size() != ps.t.size())
            throw dim_error("optimizer state does not match the parameter set");
        ++t_;
        double rate = rate_for(t_);
        double c1 = 1.0 - std::pow(b1_, double(t_));
        double c2 = 1.0 - std::pow(b2_, double(t_));
        for (std::size_t i = 0; i < ps.t.size(); ++i) {
            if (!ps.t[i].trainable) continue;
            const Eigen::MatrixXd& g = grads[i];
            if (g.rows() != ps.t[i].v.rows() || g.cols() != ps.t[i].v.cols())
                throw dim_error("gradient shape does not match its parameter");
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * g.cwiseProduct(g);
            Eigen::MatrixXd mh = m_[i] / c1;
            Eigen::MatrixXd vh = v_[i] / c2;
            ps.t[i].v -= rate * (mh.array() / (vh.array().sqrt() + eps_)).matrix();
        }
    }

private:
    double lr_, decay_rate_;
    int decay_steps_;
    double b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Eigen::MatrixXd> m_, v_;
};

} // namespace wbe
