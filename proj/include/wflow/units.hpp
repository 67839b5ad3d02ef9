#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "wflow/common.hpp"

namespace wflow {

enum class FlowUnit { CMS, LPS, LPM, CMH, GPM, CFS, MGD };

/// Conversion factors between an .inp unit system and canonical SI
/// (meters, cubic meters per second). US flow units imply US length
/// conventions (elevation/head in feet, diameter in inches, pipe length
/// in feet); metric flow units imply meters and millimeters.
struct UnitSystem {
    FlowUnit flow = FlowUnit::CMS;

    static std::optional<FlowUnit> parse_flow_unit(const std::string& token) {
        if (token == "CMS") return FlowUnit::CMS;
        if (token == "LPS") return FlowUnit::LPS;
        if (token == "LPM") return FlowUnit::LPM;
        if (token == "CMH") return FlowUnit::CMH;
        if (token == "GPM") return FlowUnit::GPM;
        if (token == "CFS") return FlowUnit::CFS;
        if (token == "MGD") return FlowUnit::MGD;
        return std::nullopt;
    }

    static const char* name(FlowUnit u) {
        switch (u) {
            case FlowUnit::CMS: return "CMS";
            case FlowUnit::LPS: return "LPS";
            case FlowUnit::LPM: return "LPM";
            case FlowUnit::CMH: return "CMH";
            case FlowUnit::GPM: return "GPM";
            case FlowUnit::CFS: return "CFS";
            case FlowUnit::MGD: return "MGD";
        }
        return "?";
    }

    bool us_customary() const {
        return flow == FlowUnit::GPM || flow == FlowUnit::CFS || flow == FlowUnit::MGD;
    }

    /// m^3/s per one source flow unit.
    double flow_to_si() const {
        constexpr double gallon = 3.785411784e-3;  // m^3
        constexpr double foot = 0.3048;
        switch (flow) {
            case FlowUnit::CMS: return 1.0;
            case FlowUnit::LPS: return 1e-3;
            case FlowUnit::LPM: return 1e-3 / 60.0;
            case FlowUnit::CMH: return 1.0 / 3600.0;
            case FlowUnit::GPM: return gallon / 60.0;
            case FlowUnit::CFS: return foot * foot * foot;
            case FlowUnit::MGD: return 1e6 * gallon / 86400.0;
        }
        return 1.0;
    }

    /// m per one source length unit (elevations, heads, pipe lengths).
    double length_to_si() const { return us_customary() ? 0.3048 : 1.0; }

    /// m per one source diameter unit (inches vs millimeters).
    double diameter_to_si() const { return us_customary() ? 0.0254 : 1e-3; }

    /// m per one source Darcy-Weisbach roughness unit (millifeet vs mm).
    double dw_roughness_to_si() const { return us_customary() ? 0.3048e-3 : 1e-3; }

    double flow_from_si(double q_si) const { return q_si / flow_to_si(); }
    double length_from_si(double x_si) const { return x_si / length_to_si(); }
    double diameter_from_si(double d_si) const { return d_si / diameter_to_si(); }
};

}  // namespace wflow
