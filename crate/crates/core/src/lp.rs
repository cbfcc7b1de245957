//! Littlewood-Paley decomposition on the periodic lattice, and the homogeneous
//! Besov, hybrid and Chemin-Lerner norms built from it.
//!
//! The zero mode is never part of a dyadic block: homogeneous norms ignore the
//! grid mean, which is tracked separately by callers.

use std::ops::RangeInclusive;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, SpectralField, VectorField};
use crate::kernels::CapillaryModel;

const CHI_INNER: f64 = 3.0 / 4.0;
const CHI_OUTER: f64 = 4.0 / 3.0;

fn glue(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Radial low-pass profile: 1 on `|ξ| <= 3/4`, 0 on `|ξ| >= 4/3`, smooth and
/// nonincreasing in between.
pub fn chi(r: f64) -> f64 {
    let r = r.abs();
    if r <= CHI_INNER {
        1.0
    } else if r >= CHI_OUTER {
        0.0
    } else {
        let t = (r - CHI_INNER) / (CHI_OUTER - CHI_INNER);
        let (a, b) = (glue(1.0 - t), glue(t));
        a / (a + b)
    }
}

/// `χ(ξ/2) - χ(ξ)`, supported in `3/4 <= |ξ| <= 8/3`.
pub fn lp_bump(r: f64) -> f64 {
    chi(r / 2.0) - chi(r)
}

/// Per-block `L²` norms `‖Δ_j f‖₂` for `j` in `[j_min, j_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    j_min: i32,
    norms: Vec<f64>,
}

impl BlockDecomposition {
    pub fn new(j_min: i32, norms: Vec<f64>) -> Self {
        BlockDecomposition { j_min, norms }
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.norms.len() as i32 - 1
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.norms
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.j_min + i as i32, v))
    }

    pub fn weighted_sum(&self, weight: impl Fn(i32) -> f64) -> f64 {
        self.iter().map(|(j, v)| weight(j) * v).sum()
    }

    /// `Σ_j 2^{js} ‖Δ_j f‖₂`.
    pub fn besov(&self, s: f64) -> f64 {
        self.weighted_sum(|j| besov_weight(j, s))
    }

    /// `Σ_j min(β², 2^{2j}) 2^{js} ‖Δ_j f‖₂`.
    pub fn hybrid(&self, s: f64, beta: f64) -> f64 {
        self.weighted_sum(|j| hybrid_weight(j, s, beta))
    }

    /// CSV with columns `j, block_l2, weight_s, weight_hybrid`; the hybrid
    /// column is empty without `beta`.
    pub fn to_csv(&self, s: f64, beta: Option<f64>) -> String {
        let mut out = String::from("# schema=1\nj,block_l2,weight_s,weight_hybrid\n");
        for (j, v) in self.iter() {
            let hybrid = beta
                .map(|b| format!("{:.17e}", hybrid_weight(j, s, b)))
                .unwrap_or_default();
            out.push_str(&format!("{j},{v:.17e},{:.17e},{hybrid}\n", besov_weight(j, s)));
        }
        out
    }
}

pub fn besov_weight(j: i32, s: f64) -> f64 {
    (f64::from(j) * s).exp2()
}

pub fn hybrid_weight(j: i32, s: f64, beta: f64) -> f64 {
    (beta * beta).min(f64::from(2 * j).exp2()) * besov_weight(j, s)
}

/// Time norm applied inside each dyadic block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeNorm {
    /// `L^∞` in time: block-wise maximum over the samples.
    Sup,
    /// `L¹` in time: block-wise trapezoid rule over the samples.
    Integral,
}

/// Littlewood-Paley partition restricted to the blocks the grid resolves.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: Arc<Grid>,
    j_min: i32,
    j_max: i32,
    /// Per mode: the (at most two) blocks it belongs to, with their weights.
    membership: Vec<Vec<(i32, f64)>>,
}

pub fn build_partition(grid: &Arc<Grid>) -> Result<DyadicPartition> {
    DyadicPartition::new(grid)
}

impl DyadicPartition {
    /// Chooses `[j_min, j_max]` so that the blocks sum to one on every nonzero
    /// lattice mode: `2^{j_min} 4/3 <= k_min` and `2^{j_max+1} 3/4 >= k_max`.
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        let k_min = grid.k_min();
        let k_max = grid.k_max();

        let mut j_min = (CHI_INNER * k_min).log2().floor() as i32;
        while f64::from(j_min + 1).exp2() * CHI_OUTER <= k_min {
            j_min += 1;
        }
        while f64::from(j_min).exp2() * CHI_OUTER > k_min {
            j_min -= 1;
        }
        let mut j_max = (CHI_OUTER * k_max).log2().ceil() as i32 - 1;
        while f64::from(j_max).exp2() * CHI_INNER >= k_max {
            j_max -= 1;
        }
        while f64::from(j_max + 1).exp2() * CHI_INNER < k_max {
            j_max += 1;
        }
        if j_max - j_min + 1 < 3 {
            return Err(Error::Grid(format!(
                "grid resolves only {} dyadic blocks, need at least 3",
                j_max - j_min + 1
            )));
        }

        let membership = grid
            .modes()
            .iter()
            .map(|mode| {
                if mode.is_zero() {
                    return Vec::new();
                }
                let r = mode.norm();
                (j_min..=j_max)
                    .filter_map(|j| {
                        let w = lp_bump(r * f64::from(-j).exp2());
                        (w > 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();

        Ok(DyadicPartition {
            grid: Arc::clone(grid),
            j_min,
            j_max,
            membership,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn blocks(&self) -> RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// `lp_bump(2^{-j} r)`.
    pub fn block_weight(&self, j: i32, r: f64) -> f64 {
        lp_bump(r * f64::from(-j).exp2())
    }

    /// Largest `|Σ_j lp_bump(2^{-j}|k|) - 1|` over nonzero lattice modes,
    /// evaluated directly from the profile.
    pub fn unity_defect(&self) -> f64 {
        self.grid
            .modes()
            .iter()
            .filter(|m| !m.is_zero())
            .map(|m| {
                let sum: f64 = self.blocks().map(|j| self.block_weight(j, m.norm())).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::BlockOutOfRange {
                j,
                j_min: self.j_min,
                j_max: self.j_max,
            });
        }
        Ok(())
    }

    pub fn block_spectral(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_block(j)?;
        Ok(f.scale_modes(|m| if m.is_zero() { 0.0 } else { self.block_weight(j, m.norm()) }))
    }

    /// `Δ_j f`.
    pub fn dyadic_block(&self, f: &RealField, j: i32) -> Result<RealField> {
        Ok(self.block_spectral(&f.forward(), j)?.inverse())
    }

    pub fn low_freq_spectral(&self, f: &SpectralField, m: i32) -> SpectralField {
        let scale = f64::from(-m).exp2();
        f.scale_modes(|mode| chi(mode.norm() * scale))
    }

    /// `S_m f = χ(2^{-m} D) f`.
    pub fn low_freq_truncate(&self, f: &RealField, m: i32) -> RealField {
        self.low_freq_spectral(&f.forward(), m).inverse()
    }

    /// Block norms of a scalar (one part) or vector (several parts) field
    /// given by its spectral components.
    pub fn decompose(&self, parts: &[&SpectralField]) -> BlockDecomposition {
        let mut sums = vec![0.0; (self.j_max - self.j_min + 1) as usize];
        for part in parts {
            for (c, members) in part.coeffs().iter().zip(&self.membership) {
                let e = c.norm_sqr();
                for &(j, w) in members {
                    sums[(j - self.j_min) as usize] += w * w * e;
                }
            }
        }
        let scale = self.grid.cell_volume() / self.grid.len() as f64;
        BlockDecomposition {
            j_min: self.j_min,
            norms: sums.into_iter().map(|s| (s * scale).sqrt()).collect(),
        }
    }

    pub fn decompose_scalar(&self, f: &RealField) -> BlockDecomposition {
        self.decompose(&[&f.forward()])
    }

    pub fn decompose_vector(&self, u: &VectorField) -> BlockDecomposition {
        let parts = u.forward();
        let refs: Vec<&SpectralField> = parts.iter().collect();
        self.decompose(&refs)
    }

    /// `‖f‖_{Ḃ^s_{2,1}}`.
    pub fn besov_norm(&self, f: &RealField, s: f64) -> f64 {
        self.decompose_scalar(f).besov(s)
    }

    pub fn besov_norm_vector(&self, u: &VectorField, s: f64) -> f64 {
        self.decompose_vector(u).besov(s)
    }

    /// `‖f‖_{Ḃ_β^{s+2,s}}`.
    pub fn hybrid_norm(&self, f: &RealField, s: f64, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::param("hybrid norm: beta > 0"));
        }
        Ok(self.decompose_scalar(f).hybrid(s, beta))
    }

    /// `(‖f‖_{Ḃ_β^{s+2,s}}, ‖-D[f]‖_{Ḃ^s})` with `β = 1/ε` or `α`.
    pub fn hybrid_equivalence_ratio(
        &self,
        f: &RealField,
        s: f64,
        model: &CapillaryModel,
    ) -> Result<(f64, f64)> {
        model.validate()?;
        let beta = match model {
            CapillaryModel::Nsrw { .. } | CapillaryModel::Nsop { .. } => {
                model.transition_frequency().expect("non-local model")
            }
            _ => {
                return Err(Error::param(
                    "hybrid equivalence needs a non-local model (nsrw or nsop)",
                ))
            }
        };
        let fh = f.forward();
        let minus_d = fh.scale_modes(|m| -model.symbol_k2(m.k2));
        let hybrid = self.decompose(&[&fh]).hybrid(s, beta);
        let capillary = self.decompose(&[&minus_d]).besov(s);
        Ok((hybrid, capillary))
    }

    /// `‖f‖_{L̃^ρ_T Ḃ^s}`: the time norm is taken per block before the
    /// weighted block sum.
    pub fn chemin_lerner_norm(
        &self,
        times: &[f64],
        samples: &[BlockDecomposition],
        s: f64,
        time_norm: TimeNorm,
    ) -> Result<f64> {
        Ok(time_reduce(times, samples, time_norm)?.besov(s))
    }
}

pub(crate) fn check_sampling(times: &[f64], count: usize) -> Result<()> {
    if times.len() != count {
        return Err(Error::Sampling(format!(
            "{} sample times for {count} samples",
            times.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::Sampling("need at least 2 time samples".into()));
    }
    let step = times[1] - times[0];
    if !(step > 0.0) {
        return Err(Error::Sampling("sample times must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::Sampling("sample times must be uniformly spaced".into()));
        }
    }
    Ok(())
}

/// Reduces per-sample block norms to one decomposition holding, per block,
/// the time norm of `‖Δ_j f(t)‖₂`.
pub fn time_reduce(
    times: &[f64],
    samples: &[BlockDecomposition],
    time_norm: TimeNorm,
) -> Result<BlockDecomposition> {
    check_sampling(times, samples.len())?;
    let first = &samples[0];
    let nblocks = first.norms.len();
    if samples
        .iter()
        .any(|b| b.j_min != first.j_min || b.norms.len() != nblocks)
    {
        return Err(Error::Sampling("samples use different partitions".into()));
    }
    let norms = (0..nblocks)
        .map(|i| match time_norm {
            TimeNorm::Sup => samples.iter().map(|b| b.norms[i]).fold(0.0, f64::max),
            TimeNorm::Integral => times
                .windows(2)
                .zip(samples.windows(2))
                .map(|(t, b)| 0.5 * (t[1] - t[0]) * (b[0].norms[i] + b[1].norms[i]))
                .sum(),
        })
        .collect();
    Ok(BlockDecomposition {
        j_min: first.j_min,
        norms,
    })
}

/// Which trajectory norm to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormFlavor {
    /// `E^s`: full parabolic weight on the time-integrated density.
    E,
    /// `E_β^s`: hybrid weight on the time-integrated density.
    EBeta,
    /// `F_β^s`: `E_β^s` plus the order-parameter components.
    FBeta,
}

/// Block norms of a sampled `(q, u[, c])` trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryBlocks {
    pub times: Vec<f64>,
    pub q: Vec<BlockDecomposition>,
    pub u: Vec<BlockDecomposition>,
    pub c: Option<Vec<BlockDecomposition>>,
}

impl TrajectoryBlocks {
    pub fn from_fields(
        partition: &DyadicPartition,
        times: &[f64],
        q: &[RealField],
        u: &[VectorField],
        c: Option<&[RealField]>,
    ) -> Result<Self> {
        if q.len() != u.len() || c.is_some_and(|c| c.len() != q.len()) {
            return Err(Error::Sampling("trajectory components differ in length".into()));
        }
        check_sampling(times, q.len())?;
        Ok(TrajectoryBlocks {
            times: times.to_vec(),
            q: q.iter().map(|f| partition.decompose_scalar(f)).collect(),
            u: u.iter().map(|f| partition.decompose_vector(f)).collect(),
            c: c.map(|c| c.iter().map(|f| partition.decompose_scalar(f)).collect()),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<BlockDecomposition>| -> Vec<BlockDecomposition> {
            v.iter()
                .map(|b| BlockDecomposition {
                    j_min: b.j_min,
                    norms: b.norms.iter().map(|x| x * factor.abs()).collect(),
                })
                .collect()
        };
        TrajectoryBlocks {
            times: self.times.clone(),
            q: scale(&self.q),
            u: scale(&self.u),
            c: self.c.as_ref().map(scale),
        }
    }
}

/// Components of the `E^s`, `E_β^s` or `F_β^s` norm of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Default, serde::Serialize)]
pub struct TrajectoryNorms {
    /// `‖u‖_{L̃^∞ Ḃ^{s-1}}`
    pub u_sup: f64,
    /// `‖q‖_{L̃^∞ Ḃ^s}`
    pub q_sup: f64,
    /// `‖c‖_{L̃^∞ Ḃ^s}`, `F_β^s` only.
    pub c_sup: Option<f64>,
    /// `‖u‖_{L¹ Ḃ^{s+1}}`
    pub u_int: f64,
    /// `‖q‖_{L¹ Ḃ^{s+2}}` or `‖q‖_{L¹ Ḃ_β^{s+2,s}}`
    pub q_int: f64,
    /// `‖c‖_{L¹ Ḃ_β^{s+2,s}}`, `F_β^s` only.
    pub c_int: Option<f64>,
}

impl TrajectoryNorms {
    pub fn total(&self) -> f64 {
        self.u_sup
            + self.q_sup
            + self.c_sup.unwrap_or(0.0)
            + self.u_int
            + self.q_int
            + self.c_int.unwrap_or(0.0)
    }
}

/// Assembles the trajectory norm of the requested flavor at regularity `s`.
pub fn trajectory_norm(
    traj: &TrajectoryBlocks,
    s: f64,
    flavor: NormFlavor,
    beta: Option<f64>,
) -> Result<TrajectoryNorms> {
    let beta = match (flavor, beta) {
        (NormFlavor::E, _) => None,
        (_, Some(b)) if b > 0.0 => Some(b),
        (_, Some(_)) => return Err(Error::param("trajectory norm: beta > 0")),
        (_, None) => {
            return Err(Error::param("trajectory norm: beta is required for E_beta and F_beta"))
        }
    };
    let sup = |v: &[BlockDecomposition]| time_reduce(&traj.times, v, TimeNorm::Sup);
    let int = |v: &[BlockDecomposition]| time_reduce(&traj.times, v, TimeNorm::Integral);

    let q_int_blocks = int(&traj.q)?;
    let mut norms = TrajectoryNorms {
        u_sup: sup(&traj.u)?.besov(s - 1.0),
        q_sup: sup(&traj.q)?.besov(s),
        c_sup: None,
        u_int: int(&traj.u)?.besov(s + 1.0),
        q_int: match beta {
            None => q_int_blocks.besov(s + 2.0),
            Some(b) => q_int_blocks.hybrid(s, b),
        },
        c_int: None,
    };
    if flavor == NormFlavor::FBeta {
        let c = traj
            .c
            .as_ref()
            .ok_or_else(|| Error::param("F_beta norm needs order-parameter samples"))?;
        let b = beta.expect("checked above");
        norms.c_sup = Some(sup(c)?.besov(s));
        norms.c_int = Some(int(c)?.hybrid(s, b));
    }
    Ok(norms)
}
