#ifndef TRAPNOISE_TEST_HELPERS_HPP
#define TRAPNOISE_TEST_HELPERS_HPP

#include <Eigen/Core>
#include <random>

#include "trapnoise/geometry.hpp"

namespace trapnoise::test {

// Small five-electrode layout (symmetric rails) used where the full
// reference geometry is overkill.
inline TrapLayout simple_five_wire(double rail_width_um = 40.0)
{
    auto rect = [](std::string name, double x0, double x1, double y0, double y1,
                   ElectrodeRole role) {
        RectElectrode e;
        e.name = std::move(name);
        e.x_min = x0 * 1e-6; e.x_max = x1 * 1e-6;
        e.y_min = y0 * 1e-6; e.y_max = y1 * 1e-6;
        e.role = role;
        return e;
    };
    TrapLayout l;
    l.name = "simple-five-wire";
    l.rf_names = {"rf_a", "rf_b"};
    l.electrodes = {
        rect("center", -1500, 1500, -60, 60, ElectrodeRole::CENTER),
        rect("rf_a", -1500, 1500, -60 - rail_width_um, -60, ElectrodeRole::RF),
        rect("rf_b", -1500, 1500, 60, 60 + rail_width_um, ElectrodeRole::RF),
        rect("dc_a", -1500, 1500, -260 - rail_width_um, -60 - rail_width_um,
             ElectrodeRole::DC),
        rect("dc_b", -1500, 1500, 60 + rail_width_um, 260 + rail_width_um,
             ElectrodeRole::DC),
    };
    l.validate();
    return l;
}

inline Eigen::Vector3d random_point_above(std::mt19937& rng, double span = 500e-6,
                                          double zmin = 20e-6, double zmax = 400e-6)
{
    std::uniform_real_distribution<double> uxy(-span, span);
    std::uniform_real_distribution<double> uz(zmin, zmax);
    return {uxy(rng), uxy(rng), uz(rng)};
}

} // namespace trapnoise::test

#endif
