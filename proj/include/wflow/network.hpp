#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wflow/common.hpp"
#include "wflow/units.hpp"

namespace wflow {

/// Pressure-driven demand parameters (Wagner form). Heads are absolute
/// (elevation + pressure head), in meters.
struct PddParams {
    double design_demand = 0.0;  // m^3/s
    double service_head = 0.0;   // m, full delivery at or above
    double min_head = 0.0;       // m, zero delivery at or below
    double exponent = 0.5;
};

struct Junction {
    std::string id;
    double elevation = 0.0;  // m
    double demand = 0.0;     // m^3/s
    std::optional<PddParams> pdd;
};

struct Reservoir {
    std::string id;
    double head = 0.0;  // m, fixed
};

struct Tank {
    std::string id;
    double elevation = 0.0;  // m
    double area = 0.0;       // m^2
    double volume = 0.0;     // m^3
};

struct Pipe {
    std::string id;
    std::string from, to;
    double length = 0.0;     // m
    double diameter = 0.0;   // m
    double roughness = 0.0;  // C (H-W), n (C-M), or epsilon in m (D-W)
    LinkStatus status = LinkStatus::Open;
};

struct Pump {
    std::string id;
    std::string from, to;
    // Head gain h0 - r*(q/s)^exp with q in m^3/s, heads in m.
    double shutoff_head = 0.0;
    double curve_coeff = 0.0;
    double curve_exp = 2.0;
    double speed = 1.0;
    LinkStatus status = LinkStatus::Open;
};

struct Valve {
    std::string id;
    std::string from, to;
    ValveKind kind = ValveKind::PRV;
    double openness = 1.0;      // GPV, in (0,1]
    double resistance = 0.0;    // GPV pipe-like resistance, SI
    double minor_loss = 1e-3;   // PRV/FCV open-state loss, s^2/m^5
    double head_setting = 0.0;  // PRV: absolute downstream head, m
    double flow_setting = 0.0;  // FCV: m^3/s
    LinkStatus status = LinkStatus::Active;
};

/// Head created by a cylindrical tank of cross section `area` holding
/// `volume` above elevation `elevation`.
inline double tank_head(double volume, double area, double elevation) {
    if (area <= 0.0) throw ValidationError("tank area must be positive");
    if (volume < 0.0) throw ValidationError("tank volume must be nonnegative");
    return volume / area + elevation;
}

struct Network {
    std::vector<Junction> junctions;
    std::vector<Reservoir> reservoirs;
    std::vector<Tank> tanks;
    std::vector<Pipe> pipes;
    std::vector<Pump> pumps;
    std::vector<Valve> valves;
    HeadlossFormula formula = HeadlossFormula::HazenWilliams;
    UnitSystem source_units;  // echoed in outputs; internals are SI

    int n_junctions() const { return static_cast<int>(junctions.size()); }
    int n_reservoirs() const { return static_cast<int>(reservoirs.size()); }
    int n_tanks() const { return static_cast<int>(tanks.size()); }
    int n_pipes() const { return static_cast<int>(pipes.size()); }
    int n_pumps() const { return static_cast<int>(pumps.size()); }
    int n_valves() const { return static_cast<int>(valves.size()); }
    int n_nodes() const { return n_junctions() + n_reservoirs() + n_tanks(); }
    int n_links() const { return n_pipes() + n_pumps() + n_valves(); }
    int n_variables() const { return n_nodes() + n_links(); }

    /// Node index: junctions first, then reservoirs, then tanks,
    /// each in declaration order.
    std::map<std::string, int> node_index() const {
        std::map<std::string, int> idx;
        int k = 0;
        for (const auto& j : junctions) idx[j.id] = k++;
        for (const auto& r : reservoirs) idx[r.id] = k++;
        for (const auto& t : tanks) idx[t.id] = k++;
        return idx;
    }

    /// Link index: pipes, pumps, valves, in declaration order.
    std::map<std::string, int> link_index() const {
        std::map<std::string, int> idx;
        int k = 0;
        for (const auto& p : pipes) idx[p.id] = k++;
        for (const auto& m : pumps) idx[m.id] = k++;
        for (const auto& w : valves) idx[w.id] = k++;
        return idx;
    }

    std::string node_id(int i) const {
        if (i < n_junctions()) return junctions[i].id;
        i -= n_junctions();
        if (i < n_reservoirs()) return reservoirs[i].id;
        i -= n_reservoirs();
        return tanks[i].id;
    }

    std::string link_id(int i) const {
        if (i < n_pipes()) return pipes[i].id;
        i -= n_pipes();
        if (i < n_pumps()) return pumps[i].id;
        i -= n_pumps();
        return valves[i].id;
    }

    /// (from, to) node ids of link `i` in global link order.
    std::pair<std::string, std::string> link_ends(int i) const {
        if (i < n_pipes()) return {pipes[i].from, pipes[i].to};
        i -= n_pipes();
        if (i < n_pumps()) return {pumps[i].from, pumps[i].to};
        i -= n_pumps();
        return {valves[i].from, valves[i].to};
    }

    bool node_has_fixed_head(int i) const { return i >= n_junctions(); }
};

/// Node-by-link incidence with +1 at the from-node and -1 at the to-node
/// of every link. Rows follow node order (junction, reservoir, tank),
/// columns follow link order (pipe, pump, valve).
struct IncidencePartition {
    Eigen::SparseMatrix<double> matrix;  // n_nodes x n_links
    int n_junctions = 0, n_reservoirs = 0, n_tanks = 0;
    int n_pipes = 0, n_pumps = 0, n_valves = 0;

    /// One of the nine row/column blocks. Row group: 0 junctions,
    /// 1 reservoirs, 2 tanks. Column group: 0 pipes, 1 pumps, 2 valves.
    Eigen::SparseMatrix<double> block(int row_group, int col_group) const {
        const int r0[] = {0, n_junctions, n_junctions + n_reservoirs};
        const int rn[] = {n_junctions, n_reservoirs, n_tanks};
        const int c0[] = {0, n_pipes, n_pipes + n_pumps};
        const int cn[] = {n_pipes, n_pumps, n_valves};
        Eigen::SparseMatrix<double> out =
            matrix.block(r0[row_group], c0[col_group], rn[row_group], cn[col_group]);
        return out;
    }
};

inline IncidencePartition build_incidence(const Network& net) {
    IncidencePartition inc;
    inc.n_junctions = net.n_junctions();
    inc.n_reservoirs = net.n_reservoirs();
    inc.n_tanks = net.n_tanks();
    inc.n_pipes = net.n_pipes();
    inc.n_pumps = net.n_pumps();
    inc.n_valves = net.n_valves();

    const auto nodes = net.node_index();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(net.n_links()) * 2);
    for (int l = 0; l < net.n_links(); ++l) {
        auto [from, to] = net.link_ends(l);
        auto fi = nodes.find(from);
        auto ti = nodes.find(to);
        if (fi == nodes.end() || ti == nodes.end())
            throw ValidationError("link " + net.link_id(l) + " references unknown node");
        trips.emplace_back(fi->second, l, 1.0);
        trips.emplace_back(ti->second, l, -1.0);
    }
    inc.matrix.resize(net.n_nodes(), net.n_links());
    inc.matrix.setFromTriplets(trips.begin(), trips.end());
    return inc;
}

/// Removes closed links. Nodes are never removed so result indexing
/// stays stable; stranded nodes are reported by validate().
inline Network prune_closed(const Network& net) {
    Network out = net;
    std::erase_if(out.pipes, [](const Pipe& p) { return p.status == LinkStatus::Closed; });
    std::erase_if(out.pumps, [](const Pump& p) { return p.status == LinkStatus::Closed; });
    std::erase_if(out.valves, [](const Valve& v) { return v.status == LinkStatus::Closed; });
    return out;
}

struct ValidationReport {
    bool overall_ok = true;
    int n_components = 0;
    std::vector<std::string> findings;  // human-readable, one per problem
    std::vector<std::string> warnings;

    void fail(std::string msg) {
        overall_ok = false;
        findings.push_back(std::move(msg));
    }
};

/// Structural and range diagnostics. Never throws: callers decide what
/// to do with a failing report.
inline ValidationReport validate(const Network& net) {
    ValidationReport rep;
    const auto nodes = net.node_index();
    const int n = net.n_nodes();

    if (n == 0) {
        rep.fail("network has no nodes");
        return rep;
    }

    // Union-find over open links.
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    std::vector<int> degree(n, 0);
    for (int l = 0; l < net.n_links(); ++l) {
        auto [from, to] = net.link_ends(l);
        auto fi = nodes.find(from);
        auto ti = nodes.find(to);
        if (fi == nodes.end()) {
            rep.fail("link " + net.link_id(l) + " references unknown node " + from);
            continue;
        }
        if (ti == nodes.end()) {
            rep.fail("link " + net.link_id(l) + " references unknown node " + to);
            continue;
        }
        unite(fi->second, ti->second);
        ++degree[fi->second];
        ++degree[ti->second];
    }

    std::map<int, std::vector<int>> comps;
    for (int i = 0; i < n; ++i) comps[find(i)].push_back(i);
    rep.n_components = static_cast<int>(comps.size());
    for (const auto& [root, members] : comps) {
        bool fixed = false;
        for (int m : members) fixed = fixed || net.node_has_fixed_head(m);
        if (!fixed) {
            std::string ids;
            for (int m : members) ids += (ids.empty() ? "" : ",") + net.node_id(m);
            rep.fail("component {" + ids + "} has no fixed-head node");
        }
    }
    for (int i = 0; i < net.n_junctions(); ++i) {
        if (degree[i] == 0)
            rep.warnings.push_back("junction " + net.junctions[i].id +
                                   " has no incident open links");
    }

    for (const auto& t : net.tanks) {
        if (t.area <= 0.0) rep.fail("tank " + t.id + ": area must be positive");
        if (t.volume < 0.0) rep.fail("tank " + t.id + ": volume must be nonnegative");
    }
    for (const auto& p : net.pipes) {
        if (p.length <= 0.0 || p.diameter <= 0.0 || p.roughness <= 0.0)
            rep.fail("pipe " + p.id + ": length, diameter, roughness must be positive");
    }
    for (const auto& m : net.pumps) {
        if (m.shutoff_head <= 0.0 || m.curve_coeff <= 0.0 || m.curve_exp <= 1.0)
            rep.fail("pump " + m.id + ": curve requires h0>0, r>0, exponent>1");
        if (m.speed <= 0.0) rep.fail("pump " + m.id + ": speed must be positive");
    }
    for (const auto& v : net.valves) {
        if (v.kind == ValveKind::GPV) {
            if (!(v.openness > 0.0 && v.openness <= 1.0))
                rep.fail("valve " + v.id + ": openness must lie in (0,1]");
            if (v.resistance <= 0.0)
                rep.fail("valve " + v.id + ": GPV resistance must be positive");
        } else if (v.minor_loss <= 0.0) {
            rep.fail("valve " + v.id + ": minor loss must be positive");
        }
    }
    for (const auto& j : net.junctions) {
        if (j.pdd && !(j.pdd->service_head > j.pdd->min_head))
            rep.fail("junction " + j.id + ": service head must exceed minimum head");
        if (j.pdd && j.pdd->design_demand < 0.0)
            rep.fail("junction " + j.id + ": design demand must be nonnegative");
    }
    return rep;
}

}  // namespace wflow
