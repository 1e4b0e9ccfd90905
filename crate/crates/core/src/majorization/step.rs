use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant function on `[0, 1]`; `values[k]` holds on
/// `[breakpoints[k], breakpoints[k + 1])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepFunctionJson {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepFunctionJson::deserialize(d)?;
        Self::new(raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "step function needs m >= 1 values and m + 1 breakpoints (got {} and {})",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "breakpoints must span exactly [0, 1]".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("step values must be finite".into()));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// `m` equal-length segments.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        let breakpoints = (0..=m).map(|k| k as f64 / m as f64).collect();
        Self::new(breakpoints, values)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Right-continuous evaluation; `eval(1)` returns the last value.
    pub fn eval(&self, z: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= z);
        self.values[k.clamp(1, self.values.len()) - 1]
    }

    pub fn integral(&self) -> f64 {
        self.integral_pow(1)
    }

    /// `∫ f^p`.
    pub fn integral_pow(&self, p: i32) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v.powi(p) * (w[1] - w[0]))
            .sum()
    }

    /// `∫_0^s f`, piecewise linear in `s`.
    pub fn cumulative_integral(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
            if s >= b {
                acc += v * (b - a);
            } else {
                if s > a {
                    acc += v * (s - a);
                }
                break;
            }
        }
        acc
    }

    /// `∫_0^1 z f(z) dz`, exact per segment.
    pub fn first_moment(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] * w[1] - w[0] * w[0]) / 2.0)
            .sum()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// Maximum minus minimum value.
    pub fn range(&self) -> f64 {
        let max = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Sorted `(value, total length)` pairs, merging equal values.
    pub fn distribution(&self) -> Vec<(f64, f64)> {
        let mut segs: Vec<(f64, f64)> = self.values.iter().copied().zip(self.lengths()).collect();
        segs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(segs.len());
        for (v, len) in segs {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += len,
                _ => out.push((v, len)),
            }
        }
        out
    }
}

/// Nonincreasing rearrangement `f*(z) = sup{y : |{f > y}| > z}`.
///
/// Segments are sorted by value (stable) and equal neighbours are merged, so the
/// output uses the same `(value, length)` summands as the input.
pub fn rearrangement_step(f: &StepFunction) -> StepFunction {
    let dist = f.distribution();
    let mut breakpoints = Vec::with_capacity(dist.len() + 1);
    breakpoints.push(0.0);
    let mut acc = 0.0;
    for (_, len) in &dist {
        acc += len;
        breakpoints.push(acc);
    }
    *breakpoints.last_mut().unwrap() = 1.0;
    // guard against a rounding collision at the right end
    let m = breakpoints.len();
    if m >= 3 && !(breakpoints[m - 2] < 1.0) {
        breakpoints[m - 2] = f64::from_bits(1.0f64.to_bits() - 1);
    }
    StepFunction {
        breakpoints,
        values: dist.into_iter().map(|(v, _)| v).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepMajorization {
    pub holds: bool,
    /// Evaluation points `s` (union of both breakpoint sets).
    pub points: Vec<f64>,
    /// `∫_0^s f* - ∫_0^s g*` at each point.
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub total_gap: f64,
}

/// Tests `g ≺ f` by comparing cumulative integrals of the rearrangements at all
/// breakpoints, which is exact because both integrals are piecewise linear.
pub fn majorizes_step(f: &StepFunction, g: &StepFunction, tol: f64) -> StepMajorization {
    let fs = rearrangement_step(f);
    let gs = rearrangement_step(g);
    let mut points: Vec<f64> = fs
        .breakpoints()
        .iter()
        .chain(gs.breakpoints())
        .copied()
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let cf = cumulative_at(&fs, &points);
    let cg = cumulative_at(&gs, &points);
    let gaps: Vec<f64> = cf.iter().zip(&cg).map(|(a, b)| a - b).collect();
    let total_gap = fs.integral() - gs.integral();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let holds = min_gap >= -tol && total_gap.abs() <= tol;
    StepMajorization {
        holds,
        points,
        gaps,
        min_gap,
        total_gap,
    }
}

/// Cumulative integrals at sorted points in one merge pass.
fn cumulative_at(f: &StepFunction, points: &[f64]) -> Vec<f64> {
    let bp = f.breakpoints();
    let vals = f.values();
    let mut out = Vec::with_capacity(points.len());
    let mut k = 0;
    let mut acc = 0.0;
    for &s in points {
        while k < vals.len() && bp[k + 1] <= s {
            acc += vals[k] * (bp[k + 1] - bp[k]);
            k += 1;
        }
        let partial = if k < vals.len() && s > bp[k] {
            vals[k] * (s - bp[k])
        } else {
            0.0
        };
        out.push(acc + partial);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{rng_from_seed, uniform_vec};
    use rand::Rng;

    fn random_step(rng: &mut crate::random::InstanceRng, m: usize) -> StepFunction {
        let mut cuts = uniform_vec(rng, m - 1, 0.0, 1.0);
        cuts.sort_by(f64::total_cmp);
        let mut bp = vec![0.0];
        bp.extend(cuts);
        bp.push(1.0);
        let values = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        StepFunction::new(bp, values).unwrap()
    }

    #[test]
    fn validation() {
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0]).is_ok());
        assert!(StepFunction::new(vec![0.0, 0.5], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
        assert!(
            serde_json::from_str::<StepFunction>(r#"{"breakpoints":[0,1],"values":[2]}"#).is_ok()
        );
        assert!(
            serde_json::from_str::<StepFunction>(r#"{"breakpoints":[0,2],"values":[2]}"#).is_err()
        );
    }

    #[test]
    fn eval_and_integrals() {
        let f = StepFunction::new(vec![0.0, 0.25, 1.0], vec![4.0, -1.0]).unwrap();
        assert_eq!(f.eval(0.0), 4.0);
        assert_eq!(f.eval(0.25), -1.0);
        assert_eq!(f.eval(1.0), -1.0);
        assert_eq!(f.integral(), 1.0 - 0.75);
        assert_eq!(f.cumulative_integral(0.5), 1.0 - 0.25);
        // ∫ z f = 4 * (1/32) - (1 - 1/16) / 2
        assert!((f.first_moment() - (0.125 - 0.46875)).abs() < 1e-15);
    }

    #[test]
    fn rearrangement_examples() {
        let f = StepFunction::new(vec![0.0, 0.3, 0.6, 1.0], vec![3.0, 3.0, 1.0]).unwrap();
        let r = rearrangement_step(&f);
        assert_eq!(r.values(), &[3.0, 1.0]);
        assert!((r.breakpoints()[1] - 0.6).abs() < 1e-15);

        let f = StepFunction::uniform(vec![1.0, 3.0]).unwrap();
        let r = rearrangement_step(&f);
        assert_eq!(r.values(), &[3.0, 1.0]);
        assert_eq!(r.breakpoints(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn rearrangement_matches_segment_sort_and_moments() {
        let mut rng = rng_from_seed(20);
        for _ in 0..20 {
            let f = random_step(&mut rng, 20);
            let r = rearrangement_step(&f);
            assert!(r.is_nonincreasing());
            // oracle: sort (value, length) pairs independently and evaluate on a fine grid
            let mut segs: Vec<(f64, f64)> = f.values().iter().copied().zip(f.lengths()).collect();
            segs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut acc = 0.0;
            for (v, len) in &segs {
                let mid = acc + len / 2.0;
                assert_eq!(r.eval(mid), *v);
                acc += len;
            }
            for p in 1..=6 {
                let a = f.integral_pow(p);
                let b = r.integral_pow(p);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "p={p}");
            }
        }
    }

    #[test]
    fn majorizes_step_examples() {
        let mut rng = rng_from_seed(6);
        let f = random_step(&mut rng, 12);
        let c = majorizes_step(&f, &f, 1e-12);
        assert!(c.holds);

        let mean = StepFunction::constant(f.integral());
        assert!(majorizes_step(&f, &mean, 1e-12).holds);
        assert!(!majorizes_step(&mean, &f, 1e-12).holds);

        let shifted = StepFunction::constant(f.integral() + 0.1);
        let c = majorizes_step(&f, &shifted, 1e-12);
        assert!(!c.holds);
        assert!((c.total_gap + 0.1).abs() < 1e-12);
    }

    #[test]
    fn cumulative_merge_matches_direct() {
        let mut rng = rng_from_seed(10);
        let f = random_step(&mut rng, 9);
        let mut pts = uniform_vec(&mut rng, 30, 0.0, 1.0);
        pts.sort_by(f64::total_cmp);
        let merged = cumulative_at(&f, &pts);
        for (s, c) in pts.iter().zip(merged) {
            assert!((f.cumulative_integral(*s) - c).abs() < 1e-14);
        }
    }
}
