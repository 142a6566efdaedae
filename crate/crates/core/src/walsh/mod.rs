//! Polynomial approximation on a compact set with connected complement (a
//! closed disk centred at 0 plus real intervals), subject to exact linear
//! equality constraints.
//!
//! Uniform approximability on such sets is guaranteed by Mergelyan's theorem,
//! and finitely many continuous functionals can be matched exactly at the same
//! time (Walsh/Deutsch). Here both are realised numerically: constraints are
//! eliminated by a null-space projection, and the remaining freedom is spent
//! on a Lawson-reweighted least-squares fit that approaches the minimax fit.
//! Success is decided only by an independent certification pass on a denser
//! sample of the set.

mod fit;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::functionals::Functional;
use crate::poly::Polynomial;
use crate::{Result, C64};

pub use fit::{fit_at_degree, fit_constrained, fit_constrained_with, Fit, FitOptions, Guide, CONSTRAINT_TOL};

/// Fallible target function sampled on the set.
pub type TargetFn = Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    DiskBoundary,
    DiskInterior,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub z: C64,
    pub region: Region,
    pub target: C64,
}

/// Closed disk `|z| <= radius` (absent when the radius is 0) plus real
/// intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub radius: f64,
    pub intervals: Vec<(f64, f64)>,
}

impl Geometry {
    /// `E_k`: the closed disk of radius `k - 1` together with
    /// `[-k, -(k-1)]` and `[k-1, k]`. For `k = 1` the disk degenerates and
    /// the set is `[-1, 1]`.
    pub fn stage(k: usize) -> Geometry {
        assert!(k >= 1, "stage index starts at 1");
        if k == 1 {
            return Geometry {
                radius: 0.0,
                intervals: vec![(-1.0, 1.0)],
            };
        }
        let (inner, outer) = ((k - 1) as f64, k as f64);
        Geometry {
            radius: inner,
            intervals: vec![(-outer, -inner), (inner, outer)],
        }
    }

    pub fn interval(a: f64, b: f64) -> Geometry {
        Geometry {
            radius: 0.0,
            intervals: vec![(a, b)],
        }
    }

    pub fn has_disk(&self) -> bool {
        self.radius > 0.0
    }

    /// Largest modulus reached by the set.
    pub fn extent(&self) -> f64 {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a.abs(), b.abs()])
            .fold(self.radius, f64::max)
    }
}

/// Target values on the disk and on the intervals.
#[derive(Clone)]
pub struct TargetSources {
    pub disk: TargetFn,
    pub interval: TargetFn,
}

impl TargetSources {
    pub fn uniform(f: TargetFn) -> TargetSources {
        TargetSources {
            disk: f.clone(),
            interval: f,
        }
    }

    fn eval(&self, z: C64, region: Region) -> Result<C64> {
        match region {
            Region::DiskBoundary | Region::DiskInterior => (self.disk)(z),
            Region::Interval => (self.interval)(z),
        }
    }
}

impl fmt::Debug for TargetSources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TargetSources { .. }")
    }
}

/// Samples per region for a fit of the given degree.
pub fn samples_per_region(degree: usize) -> usize {
    64.max(8 * (degree + 1))
}

/// Chebyshev points of the first kind mapped to `[a, b]`.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|k| mid - half * ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

#[derive(Debug, Clone)]
pub struct SampleSet {
    points: Vec<SamplePoint>,
    geometry: Geometry,
    sources: TargetSources,
    per_region: usize,
}

impl SampleSet {
    /// `per_region` equispaced angles on the disk boundary (when the disk is
    /// present) and `per_region` Chebyshev points on every interval, each
    /// carrying its target value.
    pub fn build(geometry: Geometry, per_region: usize, sources: TargetSources) -> Result<SampleSet> {
        let mut points = Vec::new();
        if geometry.has_disk() {
            for k in 0..per_region {
                let z = C64::from_polar(geometry.radius, TAU * k as f64 / per_region as f64);
                points.push(SamplePoint {
                    z,
                    region: Region::DiskBoundary,
                    target: sources.eval(z, Region::DiskBoundary)?,
                });
            }
        }
        for &(a, b) in &geometry.intervals {
            for x in chebyshev_points(a, b, per_region) {
                let z = C64::new(x, 0.0);
                points.push(SamplePoint {
                    z,
                    region: Region::Interval,
                    target: sources.eval(z, Region::Interval)?,
                });
            }
        }
        Ok(SampleSet {
            points,
            geometry,
            sources,
            per_region,
        })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn sources(&self) -> &TargetSources {
        &self.sources
    }

    pub fn per_region(&self) -> usize {
        self.per_region
    }

    /// Same geometry and sources with at least `samples_per_region(degree)`
    /// points per region.
    pub fn for_degree(&self, degree: usize) -> Result<SampleSet> {
        let want = samples_per_region(degree);
        if want <= self.per_region {
            return Ok(self.clone());
        }
        SampleSet::build(self.geometry.clone(), want, self.sources.clone())
    }

    /// `refine`-times denser set, with interval endpoints added and every
    /// target re-evaluated from its source.
    pub fn refined(&self, refine: usize) -> Result<SampleSet> {
        let mut s = SampleSet::build(
            self.geometry.clone(),
            self.per_region * refine.max(1),
            self.sources.clone(),
        )?;
        for &(a, b) in &self.geometry.intervals {
            for x in [a, b] {
                let z = C64::new(x, 0.0);
                s.points.push(SamplePoint {
                    z,
                    region: Region::Interval,
                    target: self.sources.eval(z, Region::Interval)?,
                });
            }
        }
        Ok(s)
    }

    /// Polar grid strictly inside the disk: `rings` radii times `per_ring`
    /// angles, plus the centre. Empty when there is no disk.
    pub fn disk_interior_probes(&self, rings: usize, per_ring: usize) -> Result<Vec<SamplePoint>> {
        let mut out = Vec::new();
        if !self.geometry.has_disk() {
            return Ok(out);
        }
        let zero = C64::new(0.0, 0.0);
        out.push(SamplePoint {
            z: zero,
            region: Region::DiskInterior,
            target: self.sources.eval(zero, Region::DiskInterior)?,
        });
        for r in 1..=rings {
            let rho = self.geometry.radius * r as f64 / (rings + 1) as f64;
            for k in 0..per_ring {
                let z = C64::from_polar(rho, TAU * (k as f64 + 0.5 * (r % 2) as f64) / per_ring as f64);
                out.push(SamplePoint {
                    z,
                    region: Region::DiskInterior,
                    target: self.sources.eval(z, Region::DiskInterior)?,
                });
            }
        }
        Ok(out)
    }
}

/// Largest deviation per region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionErrors {
    pub disk_boundary: Option<f64>,
    pub intervals: f64,
}

impl RegionErrors {
    pub fn max(&self) -> f64 {
        self.disk_boundary.unwrap_or(0.0).max(self.intervals)
    }
}

pub fn region_errors(p: &Polynomial, points: &[SamplePoint]) -> RegionErrors {
    let mut out = RegionErrors::default();
    for s in points {
        let e = (p.eval(s.z) - s.target).norm();
        match s.region {
            Region::DiskBoundary | Region::DiskInterior => {
                out.disk_boundary = Some(out.disk_boundary.unwrap_or(0.0).max(e));
            }
            Region::Interval => out.intervals = out.intervals.max(e),
        }
    }
    out
}

/// Sup of `|p - target|` over a `refine`-times denser copy of the set.
pub fn certify_sup_error(p: &Polynomial, s: &SampleSet, refine: usize) -> Result<f64> {
    Ok(certify_regions(p, s, refine)?.max())
}

pub fn certify_regions(p: &Polynomial, s: &SampleSet, refine: usize) -> Result<RegionErrors> {
    assert!(refine >= 2, "certification needs refine >= 2");
    Ok(region_errors(p, s.refined(refine)?.points()))
}

/// Equality constraints `F(p) = value`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub constraints: Vec<(Functional, C64)>,
}

impl ConstraintSystem {
    pub fn new() -> ConstraintSystem {
        ConstraintSystem::default()
    }

    pub fn push(&mut self, f: Functional, value: C64) {
        self.constraints.push((f, value));
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Largest `|F(p) - value| / (1 + |value|)`.
    pub fn max_residual(&self, p: &Polynomial) -> f64 {
        self.constraints
            .iter()
            .map(|(f, v)| (f.apply_to_poly(p) - v).norm() / (1.0 + v.norm()))
            .fold(0.0, f64::max)
    }
}

/// Sample set over `E_k` for a fit of the given degree.
pub fn sample_set_for(k: usize, degree: usize, sources: TargetSources) -> Result<SampleSet> {
    SampleSet::build(Geometry::stage(k), samples_per_region(degree), sources)
}
