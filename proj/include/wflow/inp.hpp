#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wflow/common.hpp"
#include "wflow/network.hpp"
#include "wflow/units.hpp"

namespace wflow {

class PumpCurveUnderdetermined : public ParseError {
public:
    using ParseError::ParseError;
};

struct RawRecord {
    int line = 0;
    std::vector<std::string> tokens;
};

/// Sectioned .inp content before unit canonicalization. Ids are kept
/// verbatim; comments and blank lines are already stripped.
struct RawNetworkDescription {
    std::map<std::string, std::vector<RawRecord>> sections;
    std::string flow_unit_token = "GPM";     // EPANET default
    std::string headloss_token = "H-W";      // EPANET default

    const std::vector<RawRecord>& section(const std::string& name) const {
        static const std::vector<RawRecord> empty;
        auto it = sections.find(name);
        return it == sections.end() ? empty : it->second;
    }
};

namespace detail {

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

inline double to_number(const std::string& tok, int line) {
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + tok + "'", line);
    }
}

inline void require_tokens(const RawRecord& rec, size_t min_count,
                           const std::string& what) {
    if (rec.tokens.size() < min_count)
        throw ParseError("malformed " + what + " record: expected at least " +
                             std::to_string(min_count) + " fields, got " +
                             std::to_string(rec.tokens.size()),
                         rec.line);
}

}  // namespace detail

/// Reads the supported .inp subset. Unknown sections are preserved in
/// the result but otherwise ignored. Checks id uniqueness and that link
/// endpoints are declared.
inline RawNetworkDescription parse_inp(std::istream& in) {
    static const std::set<std::string> known = {
        "TITLE",  "JUNCTIONS", "RESERVOIRS", "TANKS",   "PIPES",
        "PUMPS",  "VALVES",    "DEMANDS",    "STATUS",  "CURVES",
        "OPTIONS", "COORDINATES"};

    RawNetworkDescription raw;
    std::string line;
    std::string section;
    int line_no = 0;
    bool saw_units = false, saw_headloss = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (auto semi = line.find(';'); semi != std::string::npos) line.erase(semi);
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string t; ls >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;

        if (tokens[0].front() == '[') {
            std::string name;
            for (const auto& t : tokens) name += t;
            if (name.back() != ']')
                throw ParseError("unterminated section header", line_no);
            section = detail::upper(name.substr(1, name.size() - 2));
            raw.sections.try_emplace(section);
            continue;
        }
        if (section.empty())
            throw ParseError("record before any section header", line_no);
        raw.sections[section].push_back({line_no, std::move(tokens)});
    }

    for (const auto& rec : raw.section("OPTIONS")) {
        const std::string key = detail::upper(rec.tokens[0]);
        if (key == "UNITS" && rec.tokens.size() >= 2) {
            const std::string tok = detail::upper(rec.tokens[1]);
            if (saw_units && tok != raw.flow_unit_token)
                throw ParseError("conflicting UNITS options", rec.line);
            raw.flow_unit_token = tok;
            saw_units = true;
        } else if (key == "HEADLOSS" && rec.tokens.size() >= 2) {
            const std::string tok = detail::upper(rec.tokens[1]);
            if (saw_headloss && tok != raw.headloss_token)
                throw ParseError("conflicting HEADLOSS options", rec.line);
            raw.headloss_token = tok;
            saw_headloss = true;
        }
    }

    // Id uniqueness within the node and link namespaces.
    std::map<std::string, int> node_lines, link_lines;
    auto declare = [](std::map<std::string, int>& seen, const RawRecord& rec,
                      const char* what) {
        detail::require_tokens(rec, 1, what);
        auto [it, fresh] = seen.emplace(rec.tokens[0], rec.line);
        if (!fresh)
            throw ParseError(std::string("duplicate ") + what + " id '" +
                                 rec.tokens[0] + "' (first declared on line " +
                                 std::to_string(it->second) + ")",
                             rec.line);
    };
    for (const char* sec : {"JUNCTIONS", "RESERVOIRS", "TANKS"})
        for (const auto& rec : raw.section(sec)) declare(node_lines, rec, "node");
    for (const char* sec : {"PIPES", "PUMPS", "VALVES"})
        for (const auto& rec : raw.section(sec)) declare(link_lines, rec, "link");

    for (const char* sec : {"PIPES", "PUMPS", "VALVES"})
        for (const auto& rec : raw.section(sec)) {
            detail::require_tokens(rec, 3, "link");
            for (int k : {1, 2})
                if (!node_lines.count(rec.tokens[k]))
                    throw ParseError("link '" + rec.tokens[0] +
                                         "' references undeclared node '" +
                                         rec.tokens[k] + "'",
                                     rec.line);
        }
    return raw;
}

inline RawNetworkDescription parse_inp(const std::string& text) {
    std::istringstream in(text);
    return parse_inp(in);
}

namespace detail {

inline HeadlossFormula parse_headloss(const std::string& tok) {
    if (tok == "H-W" || tok == "HW" || tok == "HAZEN-WILLIAMS")
        return HeadlossFormula::HazenWilliams;
    if (tok == "D-W" || tok == "DW" || tok == "DARCY-WEISBACH")
        return HeadlossFormula::DarcyWeisbach;
    if (tok == "C-M" || tok == "CM" || tok == "CHEZY-MANNING")
        return HeadlossFormula::ChezyManning;
    throw ParseError("unknown headloss formula '" + tok + "'");
}

struct CurvePoint {
    double flow, head;
};

/// Fits h(q) = h0 - r*q^nu through one or three curve points.
/// One point is expanded by the usual convention: shutoff head 4/3 of
/// the design head, zero head at twice the design flow (nu = 2).
inline void fit_pump_curve(const std::vector<CurvePoint>& pts, double& h0,
                           double& r, double& nu, int line) {
    if (pts.size() == 1) {
        const double qd = pts[0].flow, hd = pts[0].head;
        if (qd <= 0.0 || hd <= 0.0)
            throw PumpCurveUnderdetermined("design point must be positive", line);
        h0 = 4.0 / 3.0 * hd;
        nu = 2.0;
        r = h0 / (4.0 * qd * qd);
        return;
    }
    if (pts.size() != 3)
        throw PumpCurveUnderdetermined(
            "pump curve needs one design point or three points, got " +
                std::to_string(pts.size()),
            line);
    auto p = pts;
    std::sort(p.begin(), p.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.flow < b.flow; });
    if (!(p[0].flow < p[1].flow && p[1].flow < p[2].flow) ||
        !(p[0].head > p[1].head && p[1].head > p[2].head))
        throw PumpCurveUnderdetermined(
            "pump curve points must have increasing flow, decreasing head", line);

    auto solve_tail = [&](double shutoff) {
        // nu from the two positive-flow points once h0 is known.
        const double num = std::log((shutoff - p[2].head) / (shutoff - p[1].head));
        const double den = std::log(p[2].flow / p[1].flow);
        return num / den;
    };
    if (p[0].flow == 0.0) {
        h0 = p[0].head;
        nu = solve_tail(h0);
    } else {
        // h0 solves nu(q1,q2) = nu(q1,q3); bisect on h0 above the max head.
        auto mismatch = [&](double shutoff) {
            const double n12 = std::log((shutoff - p[1].head) / (shutoff - p[0].head)) /
                               std::log(p[1].flow / p[0].flow);
            const double n13 = std::log((shutoff - p[2].head) / (shutoff - p[0].head)) /
                               std::log(p[2].flow / p[0].flow);
            return n12 - n13;
        };
        double lo = p[0].head * (1.0 + 1e-9), hi = p[0].head * 1e3;
        double flo = mismatch(lo);
        if (!(flo == flo))
            throw PumpCurveUnderdetermined("pump curve fit failed", line);
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if ((mismatch(mid) > 0) == (flo > 0))
                lo = mid;
            else
                hi = mid;
        }
        h0 = 0.5 * (lo + hi);
        nu = std::log((h0 - p[1].head) / (h0 - p[0].head)) /
             std::log(p[1].flow / p[0].flow);
    }
    const double qref = p[p[0].flow == 0.0 ? 1 : 0].flow;
    const double href = p[p[0].flow == 0.0 ? 1 : 0].head;
    r = (h0 - href) / std::pow(qref, nu);
    if (!(h0 > 0.0) || !(r > 0.0) || !(nu > 1.0))
        throw PumpCurveUnderdetermined("fitted pump curve is not usable", line);
}

}  // namespace detail

/// Converts a parsed description to a strict-SI Network: meters, cubic
/// meters per second, pump curves as (h0, r, nu) triples. Patterns and
/// time options are collapsed to a single steady-state snapshot.
inline Network canonicalize(const RawNetworkDescription& raw) {
    Network net;
    auto unit = UnitSystem::parse_flow_unit(raw.flow_unit_token);
    if (!unit) throw UnknownUnit("unknown flow unit '" + raw.flow_unit_token + "'");
    net.source_units.flow = *unit;
    net.formula = detail::parse_headloss(raw.headloss_token);

    const UnitSystem& u = net.source_units;
    const double Q = u.flow_to_si();
    const double L = u.length_to_si();
    const double D = u.diameter_to_si();
    // Pressure head per source pressure unit: psi for US flow units.
    const double P = u.us_customary() ? 0.70324961 : 1.0;

    for (const auto& rec : raw.section("JUNCTIONS")) {
        detail::require_tokens(rec, 2, "junction");
        Junction j;
        j.id = rec.tokens[0];
        j.elevation = detail::to_number(rec.tokens[1], rec.line) * L;
        if (rec.tokens.size() >= 3)
            j.demand = detail::to_number(rec.tokens[2], rec.line) * Q;
        net.junctions.push_back(std::move(j));
    }
    for (const auto& rec : raw.section("RESERVOIRS")) {
        detail::require_tokens(rec, 2, "reservoir");
        Reservoir r;
        r.id = rec.tokens[0];
        r.head = detail::to_number(rec.tokens[1], rec.line) * L;
        net.reservoirs.push_back(std::move(r));
    }
    for (const auto& rec : raw.section("TANKS")) {
        detail::require_tokens(rec, 6, "tank");
        Tank t;
        t.id = rec.tokens[0];
        t.elevation = detail::to_number(rec.tokens[1], rec.line) * L;
        const double level = detail::to_number(rec.tokens[2], rec.line) * L;
        const double diam = detail::to_number(rec.tokens[5], rec.line) * L;
        t.area = M_PI * diam * diam / 4.0;
        t.volume = level * t.area;
        net.tanks.push_back(std::move(t));
    }

    // Extra demand categories add to the junction base demand.
    for (const auto& rec : raw.section("DEMANDS")) {
        detail::require_tokens(rec, 2, "demand");
        auto it = std::find_if(net.junctions.begin(), net.junctions.end(),
                               [&](const Junction& j) { return j.id == rec.tokens[0]; });
        if (it == net.junctions.end())
            throw ParseError("demand for undeclared junction '" + rec.tokens[0] + "'",
                             rec.line);
        it->demand += detail::to_number(rec.tokens[1], rec.line) * Q;
    }

    std::map<std::string, std::vector<detail::CurvePoint>> curves;
    for (const auto& rec : raw.section("CURVES")) {
        detail::require_tokens(rec, 3, "curve");
        curves[rec.tokens[0]].push_back(
            {detail::to_number(rec.tokens[1], rec.line) * Q,
             detail::to_number(rec.tokens[2], rec.line) * L});
    }

    for (const auto& rec : raw.section("PIPES")) {
        detail::require_tokens(rec, 6, "pipe");
        Pipe p;
        p.id = rec.tokens[0];
        p.from = rec.tokens[1];
        p.to = rec.tokens[2];
        p.length = detail::to_number(rec.tokens[3], rec.line) * L;
        p.diameter = detail::to_number(rec.tokens[4], rec.line) * D;
        const double rough = detail::to_number(rec.tokens[5], rec.line);
        p.roughness = net.formula == HeadlossFormula::DarcyWeisbach
                          ? rough * u.dw_roughness_to_si()
                          : rough;
        if (rec.tokens.size() >= 8) {
            const std::string st = detail::upper(rec.tokens[7]);
            if (st == "CLOSED") p.status = LinkStatus::Closed;
            else if (st != "OPEN")
                throw ParseError("unknown pipe status '" + rec.tokens[7] + "'", rec.line);
        }
        net.pipes.push_back(std::move(p));
    }

    for (const auto& rec : raw.section("PUMPS")) {
        detail::require_tokens(rec, 5, "pump");
        Pump m;
        m.id = rec.tokens[0];
        m.from = rec.tokens[1];
        m.to = rec.tokens[2];
        std::string curve_id;
        for (size_t k = 3; k + 1 < rec.tokens.size(); k += 2) {
            const std::string key = detail::upper(rec.tokens[k]);
            if (key == "HEAD") curve_id = rec.tokens[k + 1];
            else if (key == "SPEED")
                m.speed = detail::to_number(rec.tokens[k + 1], rec.line);
            else if (key == "POWER")
                throw PumpCurveUnderdetermined(
                    "constant-power pumps are not supported; give a HEAD curve",
                    rec.line);
            else
                throw ParseError("unknown pump keyword '" + rec.tokens[k] + "'",
                                 rec.line);
        }
        if (curve_id.empty())
            throw PumpCurveUnderdetermined("pump '" + m.id + "' has no HEAD curve",
                                           rec.line);
        auto it = curves.find(curve_id);
        if (it == curves.end())
            throw PumpCurveUnderdetermined(
                "pump '" + m.id + "' references missing curve '" + curve_id + "'",
                rec.line);
        detail::fit_pump_curve(it->second, m.shutoff_head, m.curve_coeff, m.curve_exp,
                               rec.line);
        net.pumps.push_back(std::move(m));
    }

    for (const auto& rec : raw.section("VALVES")) {
        detail::require_tokens(rec, 6, "valve");
        Valve v;
        v.id = rec.tokens[0];
        v.from = rec.tokens[1];
        v.to = rec.tokens[2];
        const std::string kind = detail::upper(rec.tokens[4]);
        const double setting = detail::to_number(rec.tokens[5], rec.line);
        if (rec.tokens.size() >= 7)
            v.minor_loss = detail::to_number(rec.tokens[6], rec.line);
        if (kind == "PRV") {
            v.kind = ValveKind::PRV;
            auto jt = std::find_if(net.junctions.begin(), net.junctions.end(),
                                   [&](const Junction& j) { return j.id == v.to; });
            if (jt == net.junctions.end())
                throw ParseError("PRV '" + v.id + "' needs a junction downstream",
                                 rec.line);
            v.head_setting = jt->elevation + setting * P;
            v.status = LinkStatus::Active;
        } else if (kind == "FCV") {
            v.kind = ValveKind::FCV;
            v.flow_setting = setting * Q;
            v.status = LinkStatus::Active;
        } else if (kind == "GPV") {
            // Setting column carries the openness; the last column is the
            // pipe-like resistance in SI.
            v.kind = ValveKind::GPV;
            v.openness = setting;
            if (rec.tokens.size() < 7)
                throw ParseError("GPV record needs openness and resistance", rec.line);
            v.resistance = detail::to_number(rec.tokens[6], rec.line);
            v.minor_loss = 1e-3;
            v.status = LinkStatus::Open;
        } else {
            throw ParseError("unsupported valve type '" + kind + "'", rec.line);
        }
        net.valves.push_back(std::move(v));
    }

    for (const auto& rec : raw.section("STATUS")) {
        detail::require_tokens(rec, 2, "status");
        const std::string& id = rec.tokens[0];
        const std::string st = detail::upper(rec.tokens[1]);
        bool found = false;
        for (auto& p : net.pipes)
            if (p.id == id) {
                p.status = st == "CLOSED" ? LinkStatus::Closed : LinkStatus::Open;
                found = true;
            }
        for (auto& m : net.pumps)
            if (m.id == id) {
                if (st == "CLOSED") m.status = LinkStatus::Closed;
                else if (st == "OPEN") m.status = LinkStatus::Open;
                else m.speed = detail::to_number(rec.tokens[1], rec.line);
                found = true;
            }
        for (auto& v : net.valves)
            if (v.id == id) {
                if (st == "CLOSED") v.status = LinkStatus::Closed;
                else if (st == "OPEN") v.status = LinkStatus::Open;
                else
                    throw ParseError("valve status must be OPEN or CLOSED", rec.line);
                found = true;
            }
        if (!found)
            throw ParseError("status for unknown link '" + id + "'", rec.line);
    }

    // Pressure-driven demand, applied network-wide when selected.
    bool pdd = false;
    double min_p = 0.0, req_p = 0.0, exp_p = 0.5;
    bool saw_req = false;
    for (const auto& rec : raw.section("OPTIONS")) {
        const std::string key = detail::upper(rec.tokens[0]);
        if (key == "DEMAND" && rec.tokens.size() >= 3 &&
            detail::upper(rec.tokens[1]) == "MODEL")
            pdd = detail::upper(rec.tokens[2]) == "PDA";
        else if (key == "MINIMUM" && rec.tokens.size() >= 3)
            min_p = detail::to_number(rec.tokens[2], rec.line) * P;
        else if (key == "REQUIRED" && rec.tokens.size() >= 3) {
            req_p = detail::to_number(rec.tokens[2], rec.line) * P;
            saw_req = true;
        } else if (key == "PRESSURE" && rec.tokens.size() >= 3 &&
                   detail::upper(rec.tokens[1]) == "EXPONENT")
            exp_p = detail::to_number(rec.tokens[2], rec.line);
    }
    if (pdd) {
        if (!saw_req || !(req_p > min_p))
            throw ParseError("PDA needs REQUIRED PRESSURE above MINIMUM PRESSURE");
        for (auto& j : net.junctions)
            if (j.demand > 0.0)
                j.pdd = PddParams{j.demand, j.elevation + req_p, j.elevation + min_p,
                                  exp_p};
    }
    return net;
}

inline Network load_network(std::istream& in) { return canonicalize(parse_inp(in)); }

inline Network load_network_text(const std::string& text) {
    return canonicalize(parse_inp(text));
}

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

/// Writes the network back in its source unit system. Pump curves are
/// emitted as three exact samples of the fitted (h0, r, nu) law so a
/// re-parse recovers the triple.
inline std::string write_inp(const Network& net, const std::string& title = "wflow") {
    const UnitSystem& u = net.source_units;
    const double Q = u.flow_to_si();
    const double L = u.length_to_si();
    const double D = u.diameter_to_si();
    std::ostringstream out;
    using detail::fmt;

    out << "[TITLE]\n" << title << "\n\n[JUNCTIONS]\n;id  elevation  demand\n";
    for (const auto& j : net.junctions)
        out << j.id << "  " << fmt(j.elevation / L) << "  " << fmt(j.demand / Q) << "\n";
    out << "\n[RESERVOIRS]\n;id  head\n";
    for (const auto& r : net.reservoirs) out << r.id << "  " << fmt(r.head / L) << "\n";
    out << "\n[TANKS]\n;id  elevation  level  minlevel  maxlevel  diameter  minvol\n";
    for (const auto& t : net.tanks) {
        const double level = t.volume / t.area;
        const double diam = std::sqrt(4.0 * t.area / M_PI);
        out << t.id << "  " << fmt(t.elevation / L) << "  " << fmt(level / L) << "  0  "
            << fmt((level * 2 + 1) / L) << "  " << fmt(diam / L) << "  0\n";
    }
    out << "\n[PIPES]\n;id  from  to  length  diameter  roughness  minorloss  status\n";
    for (const auto& p : net.pipes) {
        const double rough = net.formula == HeadlossFormula::DarcyWeisbach
                                 ? p.roughness / u.dw_roughness_to_si()
                                 : p.roughness;
        out << p.id << "  " << p.from << "  " << p.to << "  " << fmt(p.length / L)
            << "  " << fmt(p.diameter / D) << "  " << fmt(rough) << "  0  "
            << (p.status == LinkStatus::Closed ? "Closed" : "Open") << "\n";
    }
    out << "\n[PUMPS]\n;id  from  to  properties\n";
    std::ostringstream curves;
    int cn = 0;
    for (const auto& m : net.pumps) {
        const std::string cid = "PC" + std::to_string(++cn);
        out << m.id << "  " << m.from << "  " << m.to << "  HEAD " << cid << "  SPEED "
            << fmt(m.speed) << "\n";
        for (double frac : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
            const double q =
                frac == 0.0 ? 0.0
                            : std::pow(frac * m.shutoff_head / m.curve_coeff,
                                       1.0 / m.curve_exp);
            const double h = m.shutoff_head - m.curve_coeff * std::pow(q, m.curve_exp);
            curves << cid << "  " << fmt(q / Q) << "  " << fmt(h / L) << "\n";
        }
    }
    out << "\n[VALVES]\n;id  from  to  diameter  type  setting  minorloss\n";
    for (const auto& v : net.valves) {
        out << v.id << "  " << v.from << "  " << v.to << "  ";
        if (v.kind == ValveKind::PRV) {
            double elev = 0.0;
            for (const auto& j : net.junctions)
                if (j.id == v.to) elev = j.elevation;
            const double P = u.us_customary() ? 0.70324961 : 1.0;
            out << fmt(0.3 / D) << "  PRV  " << fmt((v.head_setting - elev) / P) << "  "
                << fmt(v.minor_loss) << "\n";
        } else if (v.kind == ValveKind::FCV) {
            out << fmt(0.3 / D) << "  FCV  " << fmt(v.flow_setting / Q) << "  "
                << fmt(v.minor_loss) << "\n";
        } else {
            out << fmt(0.3 / D) << "  GPV  " << fmt(v.openness) << "  "
                << fmt(v.resistance) << "\n";
        }
    }
    out << "\n[STATUS]\n";
    for (const auto& p : net.pipes)
        if (p.status == LinkStatus::Closed) out << p.id << "  Closed\n";
    for (const auto& m : net.pumps)
        if (m.status == LinkStatus::Closed) out << m.id << "  Closed\n";
    for (const auto& v : net.valves) {
        if (v.status == LinkStatus::Closed) out << v.id << "  Closed\n";
        if (v.status == LinkStatus::Open && v.kind != ValveKind::GPV)
            out << v.id << "  Open\n";
    }
    out << "\n[CURVES]\n;id  flow  head\n" << curves.str();
    out << "\n[OPTIONS]\nUnits " << UnitSystem::name(u.flow) << "\nHeadloss "
        << to_string(net.formula) << "\n";
    out << "\n[COORDINATES]\n\n[END]\n";
    return out.str();
}

}  // namespace wflow
