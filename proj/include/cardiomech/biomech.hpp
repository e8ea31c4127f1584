#pragma once

#include "cardiomech/kinematics.hpp"
#include "cardiomech/propagation_types.hpp"
#include "cardiomech/registration.hpp"
#include "cardiomech/volume.hpp"

namespace cardiomech {

// Voxel-wise modulus estimates. Where the local energy denominator is at or
// below the floor the map falls back to the global modulus; validity_mask is
// 1 only where both denominators exceeded the floor.
struct ModuliMaps {
    Volume3 mu_map;
    Volume3 kappa_map;
    LabelMap3 validity_mask;
};

DisplacementField3 temporal_mean_field(const DisplacementField3& f_prev, const DisplacementField3& f_next);

// mu_map(p) = mu * (window mean of phi_dis) / phi_dis(p); kappa analogous
// with phi_vol. Window means truncate at the boundary.
ModuliMaps local_moduli(const DisplacementField3& field, const MaterialParams& mat, int window,
                        double energy_floor = 1e-8);

// Same estimate starting from precomputed energy-density maps.
ModuliMaps moduli_from_energy(const Volume3& phi_dis, const Volume3& phi_vol, const MaterialParams& mat,
                              int window, double energy_floor = 1e-8);

// Motion field at the phase frame, oriented forward in time: the average of
// the frame-to-frame fields into and out of the phase frame, both expressed
// on its grid. At a sequence endpoint the single available field is returned.
DisplacementField3 phase_field(const CineSequence& seq, CardiacPhase phase, const RegConfig& cfg);

} // namespace cardiomech
