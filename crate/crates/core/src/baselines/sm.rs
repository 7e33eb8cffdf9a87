use crate::error::{check_dim, MpfError, Result};
use crate::models::ContinuousEnergy;
use crate::statespace::Dataset;

/// Mean over the data of `½ ∇E·∇E - ∇²E`.
pub fn sm_objective<E: ContinuousEnergy + ?Sized>(energy: &E, data: &Dataset) -> Result<f64> {
    check_dim(energy.dim(), data.dim())?;
    let mut g = vec![0.0; energy.dim()];
    let mut total = 0.0;
    for (j, x) in data.continuous_rows()?.iter().enumerate() {
        energy.state_grad(x, &mut g);
        let lap = energy.laplacian(x).ok_or_else(|| {
            MpfError::InvalidArgument("energy has no second spatial derivatives".into())
        })?;
        total += data.weight(j) * (0.5 * g.iter().map(|v| v * v).sum::<f64>() - lap);
    }
    Ok(total)
}
