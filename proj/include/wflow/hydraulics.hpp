#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "wflow/common.hpp"

namespace wflow {

/// Pipe head-loss law dh = R * q * |q|^(mu-1).
struct PipeProps {
    double resistance = 0.0;  // R > 0
    double exponent = 2.0;    // mu > 1
};

/// Pump head-gain law dh = -s^2 * (h0 - r * (q/s)^nu), q >= 0.
struct PumpProps {
    double shutoff_head = 0.0;  // h0 > 0
    double coeff = 0.0;         // r > 0
    double exponent = 2.0;      // nu > 1
    double speed = 1.0;         // s in (0, s_max]
};

struct ValveProps {
    ValveKind kind = ValveKind::PRV;
    double openness = 1.0;      // GPV
    double resistance = 0.0;    // GPV, pipe-like R
    double exponent = 2.0;      // GPV, pipe-like mu
    double minor_loss = 1e-3;   // PRV/FCV open state
    double head_setting = 0.0;  // PRV active: absolute downstream head
    double flow_setting = 0.0;  // FCV active
    LinkStatus status = LinkStatus::Open;
};

inline double flow_exponent(HeadlossFormula f) {
    return f == HeadlossFormula::HazenWilliams ? 1.852 : 2.0;
}

constexpr double kGravity = 9.80665;           // m/s^2
constexpr double kKinematicViscosity = 1.0e-6; // m^2/s, water near 20 C

namespace detail {

/// Swamee-Jain explicit fit of the Colebrook friction factor; laminar
/// branch below Re = 2000.
inline double friction_factor(double reynolds, double rel_roughness) {
    if (reynolds < 2000.0) {
        return 64.0 / std::max(reynolds, 1.0);
    }
    const double arg = rel_roughness / 3.7 + 5.74 / std::pow(reynolds, 0.9);
    const double denom = std::log10(arg);
    return 0.25 / (denom * denom);
}

}  // namespace detail

/// SI resistance such that dh[m] = R * q[m^3/s]^mu for q > 0.
/// For Darcy-Weisbach the friction factor is evaluated at the Reynolds
/// number of `reference_flow` (default: 1 m/s velocity) and must be
/// refreshed by the caller when the operating flow changes.
inline double pipe_resistance(double length, double diameter, double roughness,
                              HeadlossFormula formula,
                              double reference_flow = 0.0) {
    if (length <= 0.0 || diameter <= 0.0 || roughness <= 0.0)
        throw ValidationError("pipe dimensions and roughness must be positive");
    switch (formula) {
        case HeadlossFormula::HazenWilliams:
            return 10.667 * length * std::pow(roughness, -1.852) *
                   std::pow(diameter, -4.871);
        case HeadlossFormula::ChezyManning:
            return 10.294 * roughness * roughness * length * std::pow(diameter, -5.33);
        case HeadlossFormula::DarcyWeisbach: {
            const double area = M_PI * diameter * diameter / 4.0;
            double q = std::abs(reference_flow);
            if (q <= 0.0) q = area * 1.0;  // 1 m/s reference velocity
            const double velocity = q / area;
            const double reynolds = velocity * diameter / kKinematicViscosity;
            const double f = detail::friction_factor(reynolds, roughness / diameter);
            return 8.0 * f * length / (kGravity * M_PI * M_PI * std::pow(diameter, 5));
        }
    }
    return 0.0;
}

/// dh = R * q * |q|^(mu-1); odd in q.
inline double head_loss_pipe(double q, const PipeProps& p) {
    return p.resistance * q * std::pow(std::abs(q), p.exponent - 1.0);
}

/// dh = -s^2 * (h0 - r * (q/s)^nu). Negative throughout the operating
/// range; q must be nonnegative.
inline double head_gain_pump(double q, const PumpProps& p) {
    if (q < 0.0) throw ValidationError("pump flow must be nonnegative");
    return -p.speed * p.speed *
           (p.shutoff_head - p.coeff * std::pow(q / p.speed, p.exponent));
}

/// Open-valve head loss. GPV behaves as a pipe scaled by 1/openness;
/// PRV and FCV lose l*q*|q| when open.
inline double head_loss_valve(double q, const ValveProps& v) {
    if (v.status == LinkStatus::Closed) throw ValidationError("valve is closed");
    if (v.kind == ValveKind::GPV)
        return (1.0 / v.openness) * v.resistance * q *
               std::pow(std::abs(q), v.exponent - 1.0);
    return v.minor_loss * q * std::abs(q);
}

/// Constant c such that the linear row h_i - h_j - q = c reproduces the
/// pipe law exactly at q = q_prev.
inline double linearize_pipe(double q_prev, const PipeProps& p) {
    return q_prev * (p.resistance * std::pow(std::abs(q_prev), p.exponent - 1.0) - 1.0);
}

struct PumpCoeffs {
    double c1 = 0.0;  // right-hand side, -s^2 * h0
    double c2 = 0.0;  // flow coefficient, r * q^(nu-1) * s^(2-nu)
};

/// Coefficients of the linear pump row h_i - h_j - c2*q = c1, exact at
/// q = q_prev. q_prev = 0 gives the shutoff linearization (c2 = 0).
inline PumpCoeffs linearize_pump(double q_prev, const PumpProps& p) {
    PumpCoeffs c;
    c.c1 = -p.speed * p.speed * p.shutoff_head;
    c.c2 = q_prev <= 0.0
               ? 0.0
               : p.coeff * std::pow(q_prev, p.exponent - 1.0) *
                     std::pow(p.speed, 2.0 - p.exponent);
    return c;
}

/// Shape of one linearized valve row.
struct LinearRowSpec {
    enum class Template { LossRow, HeadSetting, FlowSetting };
    Template form = Template::LossRow;
    double constant = 0.0;  // c_W, head setting, or flow setting
};

inline LinearRowSpec linearize_valve(double q_prev, const ValveProps& v) {
    if (v.status == LinkStatus::Closed) throw ValidationError("valve is closed");
    LinearRowSpec row;
    if (v.status == LinkStatus::Active) {
        if (v.kind == ValveKind::PRV) {
            row.form = LinearRowSpec::Template::HeadSetting;
            row.constant = v.head_setting;
        } else if (v.kind == ValveKind::FCV) {
            row.form = LinearRowSpec::Template::FlowSetting;
            row.constant = v.flow_setting;
        } else {
            throw ValidationError("GPV has no active setting");
        }
        return row;
    }
    row.form = LinearRowSpec::Template::LossRow;
    if (v.kind == ValveKind::GPV) {
        row.constant = (1.0 / v.openness) * v.resistance * q_prev *
                           std::pow(std::abs(q_prev), v.exponent - 1.0) -
                       q_prev;
    } else {
        row.constant = q_prev * (v.minor_loss * std::abs(q_prev) - 1.0);
    }
    return row;
}

struct PddParamsView {
    double design_demand, service_head, min_head, exponent;
};

/// Actual delivered demand as a function of absolute head. Continuous
/// and nondecreasing; full delivery at h >= service head, none at or
/// below the minimum head.
inline double pdd_actual_demand(double h, const PddParamsView& d) {
    if (h >= d.service_head) return d.design_demand;
    if (h <= d.min_head) return 0.0;
    const double frac = (h - d.min_head) / (d.service_head - d.min_head);
    return d.design_demand * std::pow(frac, d.exponent);
}

/// Constant for the pressure-driven junction row
/// sum(q_in) - sum(q_out) - h = c_J, exact at h = h_prev.
inline double linearize_pdd(double h_prev, const PddParamsView& d) {
    return pdd_actual_demand(h_prev, d) - h_prev;
}

/// Diagonal entry mu*R*|q|^(mu-1) - 1 of the pipe-flow iteration map.
inline double a_f_entry(double q_prev, const PipeProps& p) {
    return p.exponent * p.resistance * std::pow(std::abs(q_prev), p.exponent - 1.0) - 1.0;
}

inline Eigen::VectorXd a_f_diagonal(const Eigen::VectorXd& q_prev,
                                    std::span<const PipeProps> pipes) {
    if (q_prev.size() != static_cast<Eigen::Index>(pipes.size()))
        throw DimensionMismatch("a_f_diagonal: flow vector does not match pipe count");
    Eigen::VectorXd d(q_prev.size());
    for (Eigen::Index i = 0; i < q_prev.size(); ++i)
        d[i] = a_f_entry(q_prev[i], pipes[static_cast<size_t>(i)]);
    return d;
}

/// Flow magnitude above which the a_f entry leaves (-1, 0).
inline double a_f_flow_threshold(const PipeProps& p) {
    return std::pow(1.0 / (p.exponent * p.resistance), 1.0 / (p.exponent - 1.0));
}

}  // namespace wflow
