use crate::error::CoreError;
use crate::types::ProcessParams;

const MM_PER_S_TO_M_PER_S: f64 = 1e-3;
const UM_TO_M: f64 = 1e-6;

/// Volumetric energy density `P / (v h t)` in J/m³.
///
/// Inputs are taken in machine units (W, mm/s, µm, µm) and converted to SI
/// before the division.
pub fn energy_density(params: &ProcessParams) -> Result<f64, CoreError> {
    params.validate()?;
    let v = params.scan_speed * MM_PER_S_TO_M_PER_S;
    let h = params.hatch_distance * UM_TO_M;
    let t = params.layer_thickness * UM_TO_M;
    let e = params.laser_power / (v * h * t);
    if !e.is_finite() || e <= 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "energy_density",
            value: e,
            reason: "result not finite and positive",
        });
    }
    Ok(e)
}

/// The ten-part reference build: three complex parts sharing one parameter
/// set, then seven cubes with individual settings.
pub fn reference_parameters() -> Vec<ProcessParams> {
    const ROWS: [(u32, f64, f64, f64); 10] = [
        (1, 370.0, 1300.0, 190.0),
        (2, 370.0, 1300.0, 190.0),
        (3, 370.0, 1300.0, 190.0),
        (4, 340.0, 1300.0, 210.0),
        (5, 370.0, 1300.0, 190.0),
        (6, 340.0, 1000.0, 190.0),
        (7, 370.0, 900.0, 210.0),
        (8, 370.0, 700.0, 190.0),
        (9, 370.0, 700.0, 210.0),
        (10, 390.0, 700.0, 160.0),
    ];
    ROWS.iter()
        .map(|&(part, laser_power, scan_speed, hatch_distance)| ProcessParams {
            part,
            laser_power,
            scan_speed,
            hatch_distance,
            layer_thickness: 30.0,
        })
        .collect()
}
