use crate::error::{Error, Result};
use crate::majorization::StepFunction;

/// First-order upwind solution of `ρ_t + ρ_z = 0` on the segments of `rho0`,
/// with inflow value 0 at `z = 0` and free outflow at `z = 1`.
///
/// The final step is shortened to land on `t_end`. A step longer than the
/// narrowest segment violates the CFL condition and is rejected.
pub fn advect_density(rho0: &StepFunction, step: f64, t_end: f64) -> Result<StepFunction> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_end must be >= 0, got {t_end}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let dz = rho0.lengths();
    let min_dz = dz.iter().copied().fold(f64::INFINITY, f64::min);
    if step > min_dz {
        return Err(Error::Cfl { step, dz: min_dz });
    }
    let mut rho = rho0.values().to_vec();
    let mut t = 0.0;
    let slack = 1e-12 * t_end.max(1.0);
    while t < t_end - slack {
        let h = step.min(t_end - t);
        let mut upstream = 0.0;
        for (r, w) in rho.iter_mut().zip(&dz) {
            let old = *r;
            *r -= h / w * (old - upstream);
            upstream = old;
        }
        t += h;
    }
    StepFunction::new(rho0.breakpoints().to_vec(), rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_identity() {
        let z = StepFunction::uniform(vec![0.0; 10]).unwrap();
        assert_eq!(advect_density(&z, 0.05, 0.7).unwrap(), z);
        let f = StepFunction::uniform(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(advect_density(&f, 0.1, 0.0).unwrap(), f);
    }

    #[test]
    fn unit_courant_number_is_exact_shift() {
        let f = StepFunction::uniform(vec![1.0, 3.0, 2.0, 0.0]).unwrap();
        let out = advect_density(&f, 0.25, 0.5).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 1.0, 3.0]);
    }

    #[test]
    fn cfl_is_enforced() {
        let f = StepFunction::uniform(vec![1.0; 8]).unwrap();
        assert!(matches!(
            advect_density(&f, 0.2, 1.0),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn mass_leaves_only_through_the_outflow() {
        let f = StepFunction::uniform(
            (0..50)
                .map(|k| if (10..20).contains(&k) { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let out = advect_density(&f, 0.01, 0.3).unwrap();
        assert!((out.integral() - f.integral()).abs() <= 1e-12);
    }
}
