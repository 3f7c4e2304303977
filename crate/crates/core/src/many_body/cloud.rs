//! Particle clouds following the distribution law
//! `#particles(Δ) ≈ a^{−(2−κ)} ∫_Δ N(x) dx`.
//!
//! Particles sit on a cell-centered lattice of spacing
//! `d = c_d·a^{(2−κ)/3}·N_max^{−1/3}`; where `N < N_max` the lattice is thinned
//! by one-dimensional error diffusion in lexicographic site order, which keeps
//! the placement deterministic and the local count within one particle of
//! the target along each line. The seed only shifts the lattice origin.
//!
//! Text format (one particle per line, `#` starts a comment):
//!
//! ```text
//! # impscat-cloud v1
//! # a = 0.001
//! # kappa = 0.5
//! # index x y z re_h im_h
//! 0 0.015 0.015 0.015 1 0
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::geometry::ShapeMatrices;
use crate::linalg::{Vec3, C64};
use crate::one_body::validate_h;

pub const CLOUD_FORMAT_VERSION: u32 = 1;

/// Smallest accepted `d/a`.
pub const MIN_SPACING_RATIO: f64 = 4.0;
/// Particles closer than this many radii are considered overlapping.
pub const OVERLAP_RATIO: f64 = 2.0;

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl AxisBox {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let b = AxisBox { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn unit_cube() -> Self {
        AxisBox { min: Vec3::ZERO, max: Vec3::new(1.0, 1.0, 1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.min[i].is_finite() && self.max[i].is_finite() && self.max[i] > self.min[i]) {
                return Err(ScatterError::Validation(format!(
                    "box has empty or non-finite extent along axis {i}: [{}, {}]",
                    self.min[i], self.max[i]
                )));
            }
        }
        Ok(())
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.max[i] - self.min[i])
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    fn interiors_overlap(&self, o: &AxisBox) -> bool {
        (0..3).all(|i| self.min[i] < o.max[i] && o.min[i] < self.max[i])
    }
}

/// Union of boxes with disjoint interiors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub boxes: Vec<AxisBox>,
}

impl Domain {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let d = Domain { boxes };
        d.validate()?;
        Ok(d)
    }

    pub fn single(b: AxisBox) -> Self {
        Domain { boxes: vec![b] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(ScatterError::Validation("domain needs at least one box".into()));
        }
        for (i, b) in self.boxes.iter().enumerate() {
            b.validate()?;
            for (j, o) in self.boxes.iter().enumerate().skip(i + 1) {
                if b.interiors_overlap(o) {
                    return Err(ScatterError::Validation(format!("domain boxes {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudOptions {
    /// Spacing constant `c_d` in `d = c_d·a^{(2−κ)/3}`.
    pub spacing_constant: f64,
    pub seed: u64,
    /// Probe points per axis and box used to estimate `max N` and `∫N`.
    pub probe_resolution: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        CloudOptions { spacing_constant: 1.0, seed: 0, probe_resolution: 24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub domain: Domain,
    pub a: f64,
    pub kappa: f64,
    pub positions: Vec<Vec3>,
    pub h_values: Vec<C64>,
    pub shape_matrices: ShapeMatrices,
    /// Lattice spacing used by the generator (`None` for imported clouds).
    pub spacing: Option<f64>,
    /// `a^{−(2−κ)}·∫_Ω N`, estimated by the generator.
    pub target_count: Option<f64>,
}

impl ParticleCloud {
    /// Builds a cloud from explicit positions, validating sizes, impedances,
    /// containment and overlap.
    pub fn from_parts(
        domain: Domain,
        a: f64,
        kappa: f64,
        positions: Vec<Vec3>,
        h_values: Vec<C64>,
        shape_matrices: ShapeMatrices,
    ) -> Result<Self> {
        domain.validate()?;
        validate_size(a, kappa)?;
        if positions.len() != h_values.len() {
            return Err(ScatterError::Validation(format!(
                "{} positions but {} impedance values",
                positions.len(),
                h_values.len()
            )));
        }
        for (i, (x, h)) in positions.iter().zip(&h_values).enumerate() {
            if !x.is_finite() || !domain.contains(x) {
                return Err(ScatterError::Validation(format!("particle {i} at {:?} lies outside the domain", x.0)));
            }
            validate_h(*h).map_err(|e| ScatterError::Validation(format!("particle {i}: {e}")))?;
        }
        check_overlap(&positions, OVERLAP_RATIO * a).map_err(|e| match e {
            ScatterError::Assembly(m) => ScatterError::Validation(m),
            other => other,
        })?;
        Ok(ParticleCloud { domain, a, kappa, positions, h_values, shape_matrices, spacing: None, target_count: None })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `a^{2−κ}`, the common particle strength scale.
    pub fn strength_scale(&self) -> f64 {
        self.a.powf(2.0 - self.kappa)
    }

    /// Same cloud with every position mapped through `f` (domain grown to fit).
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        let positions: Vec<Vec3> = self.positions.iter().map(&f).collect();
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &positions {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i] - self.a);
                hi[i] = hi[i].max(p[i] + self.a);
            }
        }
        let domain = Domain::single(AxisBox::new(lo, hi)?);
        ParticleCloud::from_parts(domain, self.a, self.kappa, positions, self.h_values.clone(), self.shape_matrices)
    }

    /// Same cloud with particles reordered by `perm` (new i = old perm[i]).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut c = self.clone();
        c.positions = perm.iter().map(|&i| self.positions[i]).collect();
        c.h_values = perm.iter().map(|&i| self.h_values[i]).collect();
        c
    }

    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# impscat-cloud v{CLOUD_FORMAT_VERSION}")?;
        writeln!(w, "# a = {}", self.a)?;
        writeln!(w, "# kappa = {}", self.kappa)?;
        writeln!(w, "# index x y z re_h im_h")?;
        for (i, (x, h)) in self.positions.iter().zip(&self.h_values).enumerate() {
            writeln!(w, "{i} {} {} {} {} {}", x[0], x[1], x[2], h.re, h.im)?;
        }
        Ok(())
    }
}

fn validate_size(a: f64, kappa: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(ScatterError::Validation(format!("particle size a must be positive, got {a}")));
    }
    if !(0.0..1.0).contains(&kappa) {
        return Err(ScatterError::Validation(format!("kappa must lie in [0, 1), got {kappa}")));
    }
    Ok(())
}

/// Particle records read back from the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudRecords {
    pub a: f64,
    pub kappa: f64,
    pub positions: Vec<Vec3>,
    pub h_values: Vec<C64>,
}

pub fn read_cloud_text(r: impl BufRead) -> Result<CloudRecords> {
    let mut a = None;
    let mut kappa = None;
    let mut positions = Vec::new();
    let mut h_values = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        let parse_err = |message: String| ScatterError::Parse { line: lineno, message };
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            if let Some((key, value)) = c.split_once('=') {
                let v: f64 = value.trim().parse().map_err(|_| parse_err(format!("bad value for {}", key.trim())))?;
                match key.trim() {
                    "a" => a = Some(v),
                    "kappa" => kappa = Some(v),
                    _ => {}
                }
            } else if c.trim().starts_with("impscat-cloud") && c.trim() != format!("impscat-cloud v{CLOUD_FORMAT_VERSION}") {
                return Err(parse_err(format!("unsupported cloud format '{}'", c.trim())));
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let cols: Vec<&str> = t.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(parse_err(format!("expected 6 columns, found {}", cols.len())));
        }
        let idx: usize = cols[0].parse().map_err(|_| parse_err("bad particle index".into()))?;
        if idx != positions.len() {
            return Err(parse_err(format!("particle index {idx} out of sequence")));
        }
        let mut v = [0.0; 5];
        for (slot, c) in v.iter_mut().zip(&cols[1..]) {
            *slot = c.parse().map_err(|_| parse_err(format!("bad number '{c}'")))?;
        }
        positions.push(Vec3::new(v[0], v[1], v[2]));
        h_values.push(C64::new(v[3], v[4]));
    }
    let missing = |k: &str| ScatterError::Parse { line: 0, message: format!("missing '# {k} = ...' header") };
    Ok(CloudRecords { a: a.ok_or_else(|| missing("a"))?, kappa: kappa.ok_or_else(|| missing("kappa"))?, positions, h_values })
}

/// Errors when two points are closer than `min_dist`.
pub fn check_overlap(points: &[Vec3], min_dist: f64) -> Result<()> {
    if points.len() < 2 || min_dist <= 0.0 {
        return Ok(());
    }
    let cell = |p: &Vec3| [0, 1, 2].map(|i| (p[i] / min_dist).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let c = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &j in list {
                            let dist = (*p - points[j]).norm();
                            if dist < min_dist {
                                return Err(ScatterError::Assembly(format!(
                                    "particles {j} and {i} are {dist:.3e} apart, below the minimum {min_dist:.3e}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        grid.entry(c).or_default().push(i);
    }
    Ok(())
}

/// Midpoint-rule estimates of `max N` and `∫N` over the domain.
fn probe_density(domain: &Domain, density: &dyn Fn(&Vec3) -> f64, res: usize) -> Result<(f64, f64)> {
    let mut max = 0.0f64;
    let mut integral = 0.0;
    for b in &domain.boxes {
        let l = b.lengths();
        let cell = b.volume() / (res * res * res) as f64;
        for i in 0..res {
            for j in 0..res {
                for k in 0..res {
                    let x = Vec3::new(
                        b.min[0] + (i as f64 + 0.5) * l[0] / res as f64,
                        b.min[1] + (j as f64 + 0.5) * l[1] / res as f64,
                        b.min[2] + (k as f64 + 0.5) * l[2] / res as f64,
                    );
                    let n = density(&x);
                    if !(n.is_finite() && n >= 0.0) {
                        return Err(ScatterError::Validation(format!("density must be finite and non-negative, N = {n} at {:?}", x.0)));
                    }
                    max = max.max(n);
                    integral += n * cell;
                }
            }
        }
    }
    Ok((max, integral))
}

/// Places particles of size `a` in `domain` with density profile `density`
/// and impedance profile `impedance`.
pub fn generate_cloud(
    domain: &Domain,
    a: f64,
    kappa: f64,
    density: &dyn Fn(&Vec3) -> f64,
    impedance: &dyn Fn(&Vec3) -> C64,
    shape_matrices: &ShapeMatrices,
    opts: &CloudOptions,
) -> Result<ParticleCloud> {
    domain.validate()?;
    validate_size(a, kappa)?;
    if !(opts.spacing_constant.is_finite() && opts.spacing_constant > 0.0) {
        return Err(ScatterError::Validation("spacing constant must be positive".into()));
    }
    let (n_max, integral) = probe_density(domain, density, opts.probe_resolution.max(1))?;
    let empty = |target| ParticleCloud {
        domain: domain.clone(),
        a,
        kappa,
        positions: Vec::new(),
        h_values: Vec::new(),
        shape_matrices: *shape_matrices,
        spacing: None,
        target_count: Some(target),
    };
    if n_max == 0.0 {
        return Ok(empty(0.0));
    }
    let target = a.powf(-(2.0 - kappa)) * integral;
    if target < 1.0 {
        return Err(ScatterError::Validation(format!(
            "expected particle count {target:.3} is below one; increase N or decrease a"
        )));
    }
    let d = opts.spacing_constant * a.powf((2.0 - kappa) / 3.0) * n_max.powf(-1.0 / 3.0);
    if d < MIN_SPACING_RATIO * a {
        return Err(ScatterError::Validation(format!(
            "lattice spacing d = {d:.3e} is below {MIN_SPACING_RATIO}a = {:.3e}; particles would not be dilute",
            MIN_SPACING_RATIO * a
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jitter: [f64; 3] = [0; 3].map(|_| rng.random_range(-0.25..0.25));
    let mut positions = Vec::new();
    let mut h_values = Vec::new();
    let mut carry = 0.0;
    for b in &domain.boxes {
        let l = b.lengths();
        let n = l.map(|li| ((li / d).round() as usize).max(1));
        let step = [0, 1, 2].map(|i| l[i] / n[i] as f64);
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    let x = Vec3([0, 1, 2].map(|ax| b.min[ax] + (idx[ax] as f64 + 0.5 + jitter[ax]) * step[ax]));
                    let nx = density(&x);
                    if !(nx.is_finite() && nx >= 0.0) {
                        return Err(ScatterError::Validation(format!("density must be finite and non-negative, N = {nx} at {:?}", x.0)));
                    }
                    let w = nx / n_max;
                    if w > 1.0 + 1e-12 {
                        log::warn!("density {nx} at {:?} exceeds the probed maximum {n_max}; local count is capped", x.0);
                    }
                    carry += w.min(1.0);
                    if carry >= 0.5 {
                        carry -= 1.0;
                        let h = impedance(&x);
                        validate_h(h)?;
                        positions.push(x);
                        h_values.push(h);
                    }
                }
            }
        }
    }
    check_overlap(&positions, OVERLAP_RATIO * a).map_err(|e| match e {
        ScatterError::Assembly(m) => ScatterError::Validation(format!("generated cloud overlaps: {m}")),
        other => other,
    })?;
    Ok(ParticleCloud {
        domain: domain.clone(),
        a,
        kappa,
        positions,
        h_values,
        shape_matrices: *shape_matrices,
        spacing: Some(d),
        target_count: Some(target),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_shape_matrices, ParticleShape};

    fn sm() -> ShapeMatrices {
        compute_shape_matrices(&ParticleShape::sphere(1.0), 16, 6).unwrap()
    }

    fn one(_: &Vec3) -> f64 {
        1.0
    }

    fn h1(_: &Vec3) -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn unit_cube_count_follows_distribution_law() {
        let dom = Domain::single(AxisBox::unit_cube());
        let c = generate_cloud(&dom, 1e-3, 0.5, &one, &h1, &sm(), &CloudOptions::default()).unwrap();
        let target = 1e-3f64.powf(-1.5);
        assert!((c.len() as f64 - target).abs() / target < 0.1, "{}", c.len());
        assert!((c.target_count.unwrap() - target).abs() / target < 1e-12);
        assert!(c.positions.iter().all(|p| dom.contains(p)));
    }

    #[test]
    fn zero_density_gives_empty_cloud() {
        let dom = Domain::single(AxisBox::unit_cube());
        let c = generate_cloud(&dom, 1e-3, 0.5, &|_| 0.0, &h1, &sm(), &CloudOptions::default()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn doubling_volume_doubles_count() {
        let a = 2e-3;
        let single = Domain::single(AxisBox::unit_cube());
        let double = Domain::new(vec![
            AxisBox::unit_cube(),
            AxisBox::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let m1 = generate_cloud(&single, a, 0.0, &one, &h1, &sm(), &CloudOptions::default()).unwrap().len();
        let m2 = generate_cloud(&double, a, 0.0, &one, &h1, &sm(), &CloudOptions::default()).unwrap().len();
        assert_eq!(m2, 2 * m1);
    }

    #[test]
    fn thinning_tracks_non_uniform_density() {
        let dom = Domain::single(AxisBox::unit_cube());
        let a = 1e-3;
        let ramp = |x: &Vec3| 2.0 * x[0];
        let c = generate_cloud(&dom, a, 0.5, &ramp, &h1, &sm(), &CloudOptions::default()).unwrap();
        let target = c.target_count.unwrap();
        assert!((c.len() as f64 - target).abs() / target < 0.1);
        let left = c.positions.iter().filter(|p| p[0] < 0.5).count() as f64;
        let right = c.len() as f64 - left;
        assert!((right / left - 3.0).abs() < 0.3, "{}", right / left);
    }

    #[test]
    fn seed_shifts_lattice_deterministically() {
        let dom = Domain::single(AxisBox::unit_cube());
        let gen = |seed| {
            generate_cloud(&dom, 4e-3, 0.0, &one, &h1, &sm(), &CloudOptions { seed, ..Default::default() }).unwrap()
        };
        let (a, b, c) = (gen(1), gen(1), gen(2));
        assert_eq!(a.positions, b.positions);
        assert_ne!(a.positions, c.positions);
        assert_eq!(a.len(), c.len());
    }

    #[test]
    fn rejects_tiny_counts_and_dense_spacing() {
        let dom = Domain::single(AxisBox::unit_cube());
        assert!(generate_cloud(&dom, 0.5, 0.0, &|_| 0.1, &h1, &sm(), &CloudOptions::default()).is_err());
        let opts = CloudOptions { spacing_constant: 1e-3, ..Default::default() };
        assert!(generate_cloud(&dom, 1e-3, 0.0, &one, &h1, &sm(), &opts).is_err());
        assert!(generate_cloud(&dom, 1e-3, 0.0, &one, &|_| C64::new(-1.0, 0.0), &sm(), &CloudOptions::default()).is_err());
    }

    #[test]
    fn overlap_detection() {
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.015)];
        assert!(check_overlap(&pts, 0.01).is_ok());
        assert!(matches!(check_overlap(&pts, 0.02), Err(ScatterError::Assembly(_))));
    }

    #[test]
    fn text_roundtrip() {
        let dom = Domain::single(AxisBox::unit_cube());
        let c = generate_cloud(&dom, 0.01, 0.3, &one, &|x| C64::new(x[0], 0.1 * x[1]), &sm(), &CloudOptions { seed: 5, ..Default::default() })
            .unwrap();
        let mut buf = Vec::new();
        c.write_text(&mut buf).unwrap();
        let rec = read_cloud_text(buf.as_slice()).unwrap();
        assert_eq!(rec.positions, c.positions);
        assert_eq!(rec.h_values, c.h_values);
        assert_eq!((rec.a, rec.kappa), (c.a, c.kappa));
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let text = "# impscat-cloud v1\n# a = 0.1\n# kappa = 0\n0 0 0 0 1 0\n1 0 0 x 1 0\n";
        match read_cloud_text(text.as_bytes()) {
            Err(ScatterError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlapping_boxes_are_rejected() {
        let b2 = AxisBox::new(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0)).unwrap();
        assert!(Domain::new(vec![AxisBox::unit_cube(), b2]).is_err());
    }
}
