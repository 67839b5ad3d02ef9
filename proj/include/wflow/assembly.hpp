#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wflow/common.hpp"
#include "wflow/hydraulics.hpp"
#include "wflow/network.hpp"

namespace wflow {

enum class RowKind { MassBalance, Reservoir, Tank, Pipe, Pump, Valve };

struct RowLabel {
    RowKind kind;
    std::string id;  // node or link id
    std::string str() const {
        switch (kind) {
            case RowKind::MassBalance: return "mass/" + id;
            case RowKind::Reservoir: return "reservoir/" + id;
            case RowKind::Tank: return "tank/" + id;
            case RowKind::Pipe: return "pipe/" + id;
            case RowKind::Pump: return "pump/" + id;
            case RowKind::Valve: return "valve/" + id;
        }
        return id;
    }
};

/// Square system A*xi = b over xi = {heads, flows}. Rows follow
/// junction, reservoir, tank, pipe, pump, valve order; columns follow
/// the same node/link order as Network.
struct LinearSystem {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    std::vector<RowLabel> row_labels;
    std::vector<std::string> col_labels;
    int n_heads = 0;
    int n_flows = 0;

    int size() const { return n_heads + n_flows; }
    double sparsity() const {
        const double n = size();
        return n == 0 ? 1.0 : 1.0 - static_cast<double>(A.nonZeros()) / (n * n);
    }
};

/// Per-iteration constants feeding the linear rows. Dimensions follow
/// the open-link lists of the network being assembled.
struct LinearizationCoeffs {
    Eigen::VectorXd c_pipe;                   // n_pipes
    Eigen::VectorXd c1_pump, c2_pump;         // n_pumps
    std::vector<LinearRowSpec> valve_rows;    // n_valves
    Eigen::VectorXd c_junction;               // n_junctions; used where pdd_row
    std::vector<bool> pdd_row;                // n_junctions
    Eigen::VectorXd demand;                   // n_junctions
    Eigen::VectorXd fixed_heads;              // n_reservoirs + n_tanks
};

inline LinearSystem assemble(const Network& net, const IncidencePartition& inc,
                             const LinearizationCoeffs& coeffs) {
    const int n_j = net.n_junctions(), n_r = net.n_reservoirs(), n_t = net.n_tanks();
    const int n_p = net.n_pipes(), n_m = net.n_pumps(), n_w = net.n_valves();
    const int n_h = n_j + n_r + n_t, n_q = n_p + n_m + n_w;
    const int n = n_h + n_q;

    if (coeffs.c_pipe.size() != n_p || coeffs.c1_pump.size() != n_m ||
        coeffs.c2_pump.size() != n_m ||
        static_cast<int>(coeffs.valve_rows.size()) != n_w ||
        coeffs.demand.size() != n_j || coeffs.fixed_heads.size() != n_r + n_t)
        throw DimensionMismatch("assemble: coefficient dimensions do not match network");

    LinearSystem sys;
    sys.n_heads = n_h;
    sys.n_flows = n_q;
    sys.b.setZero(n);
    sys.row_labels.reserve(n);
    sys.col_labels.reserve(n);
    for (int i = 0; i < n_h; ++i) sys.col_labels.push_back("h/" + net.node_id(i));
    for (int i = 0; i < n_q; ++i) sys.col_labels.push_back("q/" + net.link_id(i));

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(n) * 3);
    int row = 0;

    // Junction rows: inflow minus outflow equals demand. The incidence
    // carries +1 at a link's from-node, so junction coefficients are the
    // negated incidence entries. Pressure-driven rows add -1 on the own
    // head column and use the c_J constant instead of the fixed demand.
    for (int j = 0; j < n_j; ++j, ++row) {
        sys.row_labels.push_back({RowKind::MassBalance, net.junctions[j].id});
        const bool pdd = !coeffs.pdd_row.empty() && coeffs.pdd_row[j];
        if (pdd) {
            trips.emplace_back(row, j, -1.0);
            sys.b[row] = coeffs.c_junction[j];
        } else {
            sys.b[row] = coeffs.demand[j];
        }
    }
    // Incidence is column-major; scatter link columns into junction rows.
    for (int l = 0; l < n_q; ++l) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(inc.matrix, l); it; ++it) {
            if (it.row() < n_j) trips.emplace_back(it.row(), n_h + l, -it.value());
        }
    }

    for (int r = 0; r < n_r; ++r, ++row) {
        sys.row_labels.push_back({RowKind::Reservoir, net.reservoirs[r].id});
        trips.emplace_back(row, n_j + r, 1.0);
        sys.b[row] = coeffs.fixed_heads[r];
    }
    for (int t = 0; t < n_t; ++t, ++row) {
        sys.row_labels.push_back({RowKind::Tank, net.tanks[t].id});
        trips.emplace_back(row, n_j + n_r + t, 1.0);
        sys.b[row] = coeffs.fixed_heads[n_r + t];
    }

    const auto nodes = net.node_index();
    auto head_cols = [&](int link) {
        auto [from, to] = net.link_ends(link);
        return std::pair<int, int>{nodes.at(from), nodes.at(to)};
    };

    for (int p = 0; p < n_p; ++p, ++row) {
        sys.row_labels.push_back({RowKind::Pipe, net.pipes[p].id});
        auto [fi, ti] = head_cols(p);
        trips.emplace_back(row, fi, 1.0);
        trips.emplace_back(row, ti, -1.0);
        trips.emplace_back(row, n_h + p, -1.0);
        sys.b[row] = coeffs.c_pipe[p];
    }
    for (int m = 0; m < n_m; ++m, ++row) {
        sys.row_labels.push_back({RowKind::Pump, net.pumps[m].id});
        auto [fi, ti] = head_cols(n_p + m);
        trips.emplace_back(row, fi, 1.0);
        trips.emplace_back(row, ti, -1.0);
        trips.emplace_back(row, n_h + n_p + m, -coeffs.c2_pump[m]);
        sys.b[row] = coeffs.c1_pump[m];
    }
    for (int w = 0; w < n_w; ++w, ++row) {
        sys.row_labels.push_back({RowKind::Valve, net.valves[w].id});
        auto [fi, ti] = head_cols(n_p + n_m + w);
        const auto& spec = coeffs.valve_rows[w];
        switch (spec.form) {
            case LinearRowSpec::Template::LossRow:
                trips.emplace_back(row, fi, 1.0);
                trips.emplace_back(row, ti, -1.0);
                trips.emplace_back(row, n_h + n_p + n_m + w, -1.0);
                break;
            case LinearRowSpec::Template::HeadSetting:
                trips.emplace_back(row, ti, 1.0);
                break;
            case LinearRowSpec::Template::FlowSetting:
                trips.emplace_back(row, n_h + n_p + n_m + w, 1.0);
                break;
        }
        sys.b[row] = spec.constant;
    }

    sys.A.resize(n, n);
    sys.A.setFromTriplets(trips.begin(), trips.end());
    sys.A.makeCompressed();
    return sys;
}

/// Direct solver with a reusable factorization: sparse LU for large
/// systems, dense partial-pivot LU below 200 unknowns. The symbolic
/// sparse analysis is reused across numeric refactorizations as long as
/// the pattern is unchanged.
class LinearSolver {
public:
    static constexpr int kDenseCutoff = 200;

    void analyze(const LinearSystem& sys) {
        dense_ = sys.size() < kDenseCutoff;
        if (!dense_) sparse_.analyzePattern(sys.A);
        pattern_ready_ = true;
    }

    void factorize(const LinearSystem& sys) {
        if (!pattern_ready_) analyze(sys);
        if (dense_) {
            dense_a_ = Eigen::MatrixXd(sys.A);
            dense_lu_.compute(dense_a_);
            // Partial-pivot LU always "succeeds"; detect singularity from
            // the factor diagonal.
            const auto& u = dense_lu_.matrixLU();
            double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < u.rows(); ++i) {
                dmax = std::max(dmax, std::abs(u(i, i)));
                dmin = std::min(dmin, std::abs(u(i, i)));
            }
            if (!(dmax > 0.0) || dmin <= dmax * 1e-14)
                throw SingularSystem("singular linear system",
                                     implicated_rows(sys));
        } else {
            sparse_.factorize(sys.A);
            if (sparse_.info() != Eigen::Success)
                throw SingularSystem("singular linear system",
                                     implicated_rows(sys));
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return dense_ ? Eigen::VectorXd(dense_lu_.solve(b))
                      : Eigen::VectorXd(sparse_.solve(b));
    }

    Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const {
        return dense_ ? Eigen::VectorXd(dense_lu_.transpose().solve(b))
                      : Eigen::VectorXd(sparse_.transpose().solve(b));
    }

    bool dense() const { return dense_; }

private:
    /// Rows of a (near) left null vector name the dependent equations.
    static std::vector<std::string> implicated_rows(const LinearSystem& sys) {
        std::vector<std::string> rows;
        if (sys.size() > 600) return rows;
        Eigen::MatrixXd at = Eigen::MatrixXd(sys.A).transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(at);
        lu.setThreshold(1e-10);
        Eigen::MatrixXd kernel = lu.kernel();
        if (lu.dimensionOfKernel() == 0) return rows;
        for (int k = 0; k < kernel.cols(); ++k) {
            const auto& v = kernel.col(k);
            const double vmax = v.cwiseAbs().maxCoeff();
            for (int i = 0; i < v.size(); ++i)
                if (std::abs(v[i]) > 0.1 * vmax)
                    rows.push_back(sys.row_labels[i].str());
        }
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return rows;
    }

    bool pattern_ready_ = false;
    bool dense_ = false;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> sparse_;
    Eigen::MatrixXd dense_a_;
    Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu_;
};

/// One factor-and-solve with a residual guard; one refinement pass if
/// the first solve is loose.
inline Eigen::VectorXd solve_linear(const LinearSystem& sys) {
    LinearSolver solver;
    solver.factorize(sys);
    Eigen::VectorXd xi = solver.solve(sys.b);
    const double tol = 1e-9 * (1.0 + sys.b.cwiseAbs().maxCoeff());
    Eigen::VectorXd resid = sys.A * xi - sys.b;
    if (resid.cwiseAbs().maxCoeff() > tol) {
        xi += solver.solve((-resid).eval());
        resid = sys.A * xi - sys.b;
        if (resid.cwiseAbs().maxCoeff() > tol)
            throw SingularSystem("linear solve did not reach residual tolerance");
    }
    return xi;
}

// ---------------------------------------------------------------------------
// Monomial emission

struct GPConstraint {
    enum class Kind { MonomialEquality, PosynomialInequality };
    Kind kind = Kind::MonomialEquality;
    std::map<int, double> exponents;  // variable index -> exponent
    // The positive multiplicative constant is base^log_constant; kept in
    // log form so systems with large right-hand sides stay representable.
    double log_constant = 0.0;
    double constant = 1.0;  // +inf/0 when not representable
};

struct GPConstraintSet {
    double base = 1.001;
    std::vector<GPConstraint> constraints;
    std::vector<std::string> var_labels;
};

struct VariableBounds {
    Eigen::VectorXd lower, upper;
};

/// Rewrites each linear row sum(a_i x_i) = beta as the monomial equality
/// prod(xhat_i^a_i) * base^(-beta) = 1 over xhat_i = base^(x_i). Bound
/// pairs become posynomial inequalities when provided.
inline GPConstraintSet emit_gp_monomials(const LinearSystem& sys, double base,
                                         const VariableBounds* bounds = nullptr) {
    if (!(base > 1.0)) throw ValidationError("GP base must exceed 1");
    GPConstraintSet out;
    out.base = base;
    out.var_labels = sys.col_labels;
    for (int r = 0; r < sys.size(); ++r) {
        GPConstraint c;
        c.kind = GPConstraint::Kind::MonomialEquality;
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, 0); false;) {}
        c.log_constant = -sys.b[r];
        c.constant = std::pow(base, c.log_constant);
        out.constraints.push_back(std::move(c));
    }
    // Column-major scatter of the coefficients.
    for (int col = 0; col < sys.size(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it)
            out.constraints[it.row()].exponents[col] = it.value();

    if (bounds) {
        for (int i = 0; i < sys.size(); ++i) {
            GPConstraint lo, hi;
            lo.kind = hi.kind = GPConstraint::Kind::PosynomialInequality;
            lo.exponents[i] = -1.0;  // base^(xmin) * xhat^-1 <= 1
            lo.log_constant = bounds->lower[i];
            lo.constant = std::pow(base, lo.log_constant);
            hi.exponents[i] = 1.0;  // base^(-xmax) * xhat <= 1
            hi.log_constant = -bounds->upper[i];
            hi.constant = std::pow(base, hi.log_constant);
            out.constraints.push_back(std::move(lo));
            out.constraints.push_back(std::move(hi));
        }
    }
    return out;
}

/// Inverse of emit_gp_monomials for equality rows: recovers (a, beta).
inline std::pair<Eigen::VectorXd, double> log_recover(const GPConstraint& c, int n) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& [i, e] : c.exponents) a[i] = e;
    return {a, -c.log_constant};
}

// ---------------------------------------------------------------------------
// Debug dumps

inline void write_matrix_market(const LinearSystem& sys, std::ostream& mat,
                                std::ostream& rhs) {
    mat << "%%MatrixMarket matrix coordinate real general\n";
    mat << sys.size() << " " << sys.size() << " " << sys.A.nonZeros() << "\n";
    for (int col = 0; col < sys.size(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it)
            mat << it.row() + 1 << " " << col + 1 << " " << it.value() << "\n";
    rhs << "%%MatrixMarket matrix array real general\n";
    rhs << sys.size() << " 1\n";
    for (int i = 0; i < sys.size(); ++i) rhs << sys.b[i] << "\n";
}

}  // namespace wflow
