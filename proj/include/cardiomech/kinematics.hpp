#pragma once

#include "cardiomech/volume.hpp"

namespace cardiomech {

// Shear and bulk modulus in kPa. Defaults follow the near-incompressible
// cardiac-tissue setting kappa/mu = 50 with mu = 2 kPa.
struct MaterialParams {
    double mu = 2.0;
    double kappa = 100.0;

    void validate() const;
};

// Neo-Hookean energy density maps. phi_dis and phi_vol are dimensionless;
// phi = (mu/2)*phi_dis + (kappa/2)*phi_vol is in kPa.
struct EnergyMaps {
    Volume3 phi_dis;
    Volume3 phi_vol;
    Volume3 phi;
    std::int64_t fold_count = 0;  // voxels with J <= j_floor
};

// F = I + grad(u), central differences in physical units, one-sided on
// boundary planes. Requires >= 3 voxels per axis.
TensorField3 deformation_gradient(const DisplacementField3& field);

enum class CauchyGreenSide { Left, Right };  // B = F F^T, C = F^T F

TensorField3 cauchy_green(const TensorField3& f, CauchyGreenSide side);

struct InvariantMaps {
    Volume3 i1;  // tr(C)
    Volume3 i2;  // ((tr C)^2 - tr(C^2)) / 2
    Volume3 i3;  // det(C)
};

InvariantMaps invariants(const TensorField3& c);

// J = det(F) per voxel. Negative values signal folding and are reported, not clamped.
Volume3 jacobian_det(const TensorField3& f);

// phi_dis = I1C * max(J, j_floor)^(-2/3) - 3, phi_vol = (J - 1)^2.
EnergyMaps nhe_density(const TensorField3& f, const MaterialParams& mat, double j_floor = 1e-6);

// Mean of phi over all voxels (kPa). The mean, not the sum, so the
// regularization weight transfers across resolutions.
double nhe_total(const DisplacementField3& field, const MaterialParams& mat, double j_floor = 1e-6);

} // namespace cardiomech
