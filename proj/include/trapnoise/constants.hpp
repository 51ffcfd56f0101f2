#ifndef TRAPNOISE_CONSTANTS_HPP
#define TRAPNOISE_CONSTANTS_HPP

#include "trapnoise/errors.hpp"

namespace trapnoise {

// CODATA 2018 values.
inline constexpr double kElementaryCharge = 1.602176634e-19;   // C
inline constexpr double kHbar = 1.054571817e-34;               // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;   // kg
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Ion species: charge and mass as they enter the heating-rate formula.
struct IonSpecies {
    double mass;    // kg
    double charge;  // C

    IonSpecies(double mass_kg, double charge_coulomb)
        : mass(mass_kg), charge(charge_coulomb)
    {
        if (mass <= 0.0 || charge <= 0.0)
            throw DomainError("IonSpecies: mass and charge must be positive");
    }

    static IonSpecies calcium40()
    {
        // 40Ca+ : atomic mass 39.962590863 u, single charge.
        return IonSpecies(39.962590863 * kAtomicMassUnit, kElementaryCharge);
    }

    static IonSpecies from_amu(double amu, int charge_units = 1)
    {
        return IonSpecies(amu * kAtomicMassUnit,
                          static_cast<double>(charge_units) * kElementaryCharge);
    }
};

} // namespace trapnoise

#endif
