//! Random Fourier feature sketches of mixture data.
//!
//! A sketch operator is a frozen draw of `m` frequencies `ω_i ~ Λ`. It maps a
//! measure `μ` to `(F μ)_i = m^{-1/2} W(ω_i) F[φ](ω_i) Σ_k a_k e^{-i ω_iᵀ x_k}`
//! with `W = sqrt(U_τ/Λ)`, and a dataset to the empirical analogue
//! `z_i = m^{-1/2} W(ω_i) n^{-1} Σ_j e^{-i ω_iᵀ z_j}`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::DiscreteMeasure;
use crate::kernels::{smoothing_gate, TemplateDistribution, TemplateSpec};
use crate::parallel;
use crate::special::sinc4_spectral_1d;

/// Samples per chunk in [`sketch_dataset`]. Chunk sums are reduced in index
/// order, so results do not depend on the thread count.
pub const CHUNK: usize = 4096;

/// Law `Λ` of the sketching frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SketchingLaw {
    /// `Λ = f⁽⁴⁾_τ`: per axis, a sum of four uniforms on `[-1/(4τ), 1/(4τ)]`.
    IrwinHall4,
    /// Uniform on the cube `[-1/τ, 1/τ]^d`.
    UniformCube,
}

impl SketchingLaw {
    pub fn density(&self, omega: &[f64], tau: f64) -> f64 {
        match self {
            SketchingLaw::IrwinHall4 => omega.iter().map(|&w| sinc4_spectral_1d(w, tau)).product(),
            SketchingLaw::UniformCube => {
                if omega.iter().all(|w| w.abs() <= 1.0 / tau) {
                    (0.5 * tau).powi(omega.len() as i32)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, d: usize, tau: f64) -> Vec<f64> {
        match self {
            SketchingLaw::IrwinHall4 => (0..d)
                .map(|_| (0..4).map(|_| (2.0 * rng.random::<f64>() - 1.0) / (4.0 * tau)).sum())
                .collect(),
            SketchingLaw::UniformCube => (0..d).map(|_| (2.0 * rng.random::<f64>() - 1.0) / tau).collect(),
        }
    }

    /// `‖U_τ/Λ‖_∞` over the cube; infinite for the Irwin-Hall law, whose
    /// density vanishes on the cube boundary.
    pub fn sup_weight_ratio(&self, d: usize, tau: f64) -> f64 {
        match self {
            SketchingLaw::IrwinHall4 => f64::INFINITY,
            SketchingLaw::UniformCube => tau.powi(-(d as i32)),
        }
    }

    /// `C_Λ = sup f⁽⁴⁾_τ/Λ`.
    pub fn c_lambda(&self, d: usize) -> f64 {
        match self {
            SketchingLaw::IrwinHall4 => 1.0,
            SketchingLaw::UniformCube => (8.0f64 / 3.0).powi(d as i32),
        }
    }
}

/// Complex numbers serialise as `[re, im]`.
mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Frozen frequency draw defining the sketched forward operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchOperator {
    pub d: usize,
    pub m: usize,
    pub tau: f64,
    pub seed: u64,
    pub law: SketchingLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateSpec>,
    pub omegas: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(with = "complex_pairs")]
    pub template_cf: Vec<Complex64>,
}

/// Draws `m` frequencies from `law` with a ChaCha20 stream seeded by `seed`.
pub fn draw_operator(law: SketchingLaw, template: &TemplateDistribution, d: usize, tau: f64, m: usize, seed: u64) -> Result<SketchOperator> {
    if m == 0 {
        return invalid("sketch size m must be at least 1");
    }
    if d == 0 || !(tau > 0.0 && tau.is_finite()) {
        return invalid("sketch needs d >= 1 and tau > 0");
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut omegas = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut template_cf = Vec::with_capacity(m);
    for _ in 0..m {
        let w = law.sample(&mut rng, d, tau);
        let lam = law.density(&w, tau);
        if !(lam > 0.0) {
            return Err(Error::Numerical(format!("sketching law vanishes at the drawn frequency {w:?}")));
        }
        weights.push((smoothing_gate(&w, tau) / lam).sqrt());
        template_cf.push(template.characteristic(&w));
        omegas.push(w);
    }
    let spec = template.spec().clone();
    let template = (!matches!(spec, TemplateSpec::Custom { .. })).then_some(spec);
    Ok(SketchOperator { d, m, tau, seed, law, template, omegas, weights, template_cf })
}

impl SketchOperator {
    fn scale(&self) -> f64 {
        1.0 / (self.m as f64).sqrt()
    }

    /// `F δ_x`.
    pub fn atom_features(&self, x: &[f64]) -> Vec<Complex64> {
        let s = self.scale();
        self.omegas
            .iter()
            .zip(&self.weights)
            .zip(&self.template_cf)
            .map(|((w, &wt), f)| {
                let phase: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
                let (sn, cs) = phase.sin_cos();
                f * (s * wt) * Complex64::new(cs, -sn)
            })
            .collect()
    }

    /// `∂_{x_l} F δ_x` for each coordinate `l`; entry `[l][i]`.
    pub fn atom_feature_gradients(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let base = self.atom_features(x);
        (0..self.d)
            .map(|l| base.iter().zip(&self.omegas).map(|(b, w)| b * Complex64::new(0.0, -w[l])).collect())
            .collect()
    }

    /// `‖F δ_x‖² = m^{-1} Σ |W F[φ]|²`, the same for every `x`.
    pub fn atom_norm_sq(&self) -> f64 {
        self.weights.iter().zip(&self.template_cf).map(|(w, f)| w * w * f.norm_sqr()).sum::<f64>() / self.m as f64
    }

    /// `sqrt(f⁽⁴⁾_τ/Λ)` at each frequency: the scale of the pivot sketching
    /// functions `ψ_ω(t) = e^{i ωᵀt} sqrt(f⁽⁴⁾_τ/Λ)(ω)`.
    pub fn pivot_scales(&self) -> Vec<f64> {
        self.omegas
            .iter()
            .map(|w| {
                let p: f64 = w.iter().map(|&v| sinc4_spectral_1d(v, self.tau)).product();
                (p / self.law.density(w, self.tau)).sqrt()
            })
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// `F μ`.
pub fn forward(op: &SketchOperator, mu: &DiscreteMeasure) -> Result<Vec<Complex64>> {
    if let Some(d) = mu.dim() {
        check_dim(op.d, d, "measure")?;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); op.m];
    for atom in &mu.atoms {
        for (o, f) in out.iter_mut().zip(op.atom_features(&atom.x)) {
            *o += f * atom.w;
        }
    }
    Ok(out)
}

/// `K_sketch(s, t) = m^{-1} Σ φ_ω(s) conj(φ_ω(t))`.
pub fn sketched_kernel_complex(op: &SketchOperator, s: &[f64], t: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((w, &wt), f) in op.omegas.iter().zip(&op.weights).zip(&op.template_cf) {
        let phase: f64 = w.iter().zip(s.iter().zip(t)).map(|(a, (x, y))| a * (x - y)).sum();
        acc += Complex64::from_polar(wt * wt * f.norm_sqr(), -phase);
    }
    acc / op.m as f64
}

/// Real part of [`sketched_kernel_complex`], `Re ⟨F δ_s, F δ_t⟩`.
pub fn sketched_kernel(op: &SketchOperator, s: &[f64], t: &[f64]) -> f64 {
    sketched_kernel_complex(op, s, t).re
}

/// Row-major `n × d` sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub d: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.len() % d != 0 {
            return invalid("sample buffer length must be a multiple of d");
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("samples must be finite");
        }
        Ok(Self { d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
        if rows.iter().any(|r| r.len() != d) {
            return invalid("ragged sample rows");
        }
        Self::new(d, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn concat(&self, other: &Samples) -> Result<Samples> {
        check_dim(self.d, other.d, "samples")?;
        Samples::new(self.d, [self.data.as_slice(), other.data.as_slice()].concat())
    }

    /// SHA-256 of the little-endian bytes of every value, row-major.
    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Headerless CSV, one sample per row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut d = None;
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad sample value '{f}': {e}"))))
                .collect::<Result<_>>()?;
            match d {
                None => d = Some(row.len()),
                Some(k) if k != row.len() => return invalid("ragged sample rows"),
                _ => {}
            }
            data.extend(row);
        }
        Self::new(d.ok_or_else(|| Error::InvalidArgument("sample file is empty".into()))?, data)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for j in 0..self.len() {
            w.write_record(self.row(j).iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-point scale of the accumulator: terms lie in `[-1, 1]` and are
/// stored as integer multiples of `2^-FIXED_BITS`.
const FIXED_BITS: i32 = 96;

fn to_fixed(v: f64) -> i128 {
    (v * 2f64.powi(FIXED_BITS)) as i128
}

fn from_fixed(v: i128) -> f64 {
    v as f64 * 2f64.powi(-FIXED_BITS)
}

/// Per-frequency sums `Σ_j e^{-i ω_iᵀ z_j}` and the sample count.
///
/// Each term is rounded once to a multiple of `2^-96` and summed in `i128`,
/// so the sums are associative: splitting, chunking and merging datasets in
/// any order gives bit-identical sketches. Up to `2^30` samples fit.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchAccumulator {
    re: Vec<i128>,
    im: Vec<i128>,
    count: u64,
}

impl SketchAccumulator {
    pub fn new(m: usize) -> Self {
        Self { re: vec![0; m], im: vec![0; m], count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// The sums as complex numbers.
    pub fn sums(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(r, i)| Complex64::new(from_fixed(*r), from_fixed(*i))).collect()
    }

    fn chunk_sums(op: &SketchOperator, samples: &Samples, start: usize, end: usize) -> Vec<(i128, i128)> {
        op.omegas
            .iter()
            .map(|w| {
                let (mut re, mut im) = (0i128, 0i128);
                for j in start..end {
                    let phase: f64 = w.iter().zip(samples.row(j)).map(|(a, b)| a * b).sum();
                    let (s, c) = phase.sin_cos();
                    re += to_fixed(c);
                    im -= to_fixed(s);
                }
                (re, im)
            })
            .collect()
    }

    /// Adds a dataset.
    pub fn absorb(&mut self, op: &SketchOperator, samples: &Samples) -> Result<()> {
        check_dim(op.d, samples.d, "samples")?;
        if self.re.len() != op.m {
            return invalid("accumulator size does not match the operator");
        }
        let n = samples.len();
        if self.count + n as u64 > 1 << 30 {
            return invalid("sketch accumulator holds at most 2^30 samples");
        }
        let chunks = n.div_ceil(CHUNK);
        let partials: Vec<Vec<(i128, i128)>> = parallel::install(|| {
            (0..chunks).into_par_iter().map(|c| Self::chunk_sums(op, samples, c * CHUNK, ((c + 1) * CHUNK).min(n))).collect()
        });
        for p in partials {
            for ((r, i), (pr, pi)) in self.re.iter_mut().zip(self.im.iter_mut()).zip(p) {
                *r += pr;
                *i += pi;
            }
        }
        self.count += n as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &SketchAccumulator) -> Result<()> {
        if self.re.len() != other.re.len() {
            return invalid("cannot merge accumulators of different sizes");
        }
        if self.count + other.count > 1 << 30 {
            return invalid("sketch accumulator holds at most 2^30 samples");
        }
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += b;
        }
        self.count += other.count;
        Ok(())
    }

    /// `z_i = m^{-1/2} W_i sums_i / n`.
    pub fn finish(&self, op: &SketchOperator, seed: u64, dataset_sha256: String) -> Result<SketchVector> {
        if self.count == 0 {
            return Err(Error::Precondition("cannot finish an empty sketch".into()));
        }
        if self.re.len() != op.m {
            return invalid("accumulator size does not match the operator");
        }
        let scale = 1.0 / ((op.m as f64).sqrt() * self.count as f64);
        let z = self.sums().iter().zip(&op.weights).map(|(s, w)| s * (w * scale)).collect();
        Ok(SketchVector { z, n: self.count, seed, dataset_sha256 })
    }
}

/// Empirical sketch with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchVector {
    #[serde(with = "complex_pairs")]
    pub z: Vec<Complex64>,
    pub n: u64,
    pub seed: u64,
    pub dataset_sha256: String,
}

/// Sketch of a dataset in one pass.
pub fn sketch_dataset(samples: &Samples, op: &SketchOperator) -> Result<SketchVector> {
    if samples.is_empty() {
        return Err(Error::Precondition("cannot sketch an empty dataset".into()));
    }
    let mut acc = SketchAccumulator::new(op.m);
    acc.absorb(op, samples)?;
    acc.finish(op, op.seed, samples.sha256())
}

/// On-disk sketch: operator and data sketch side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchFile {
    pub d: usize,
    pub m: usize,
    pub tau: f64,
    pub seed: u64,
    pub law: SketchingLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateSpec>,
    pub omegas: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(with = "complex_pairs")]
    pub template_cf: Vec<Complex64>,
    #[serde(with = "complex_pairs")]
    pub z: Vec<Complex64>,
    pub n: u64,
    pub dataset_sha256: String,
    /// Per-axis `(min, max)` of the sketched samples, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_bounds: Option<Vec<(f64, f64)>>,
}

impl SketchFile {
    pub fn new(op: &SketchOperator, sketch: &SketchVector) -> Result<Self> {
        if sketch.z.len() != op.m {
            return invalid("sketch length does not match the operator");
        }
        Ok(Self {
            d: op.d,
            m: op.m,
            tau: op.tau,
            seed: op.seed,
            law: op.law,
            template: op.template.clone(),
            omegas: op.omegas.clone(),
            weights: op.weights.clone(),
            template_cf: op.template_cf.clone(),
            z: sketch.z.clone(),
            n: sketch.n,
            dataset_sha256: sketch.dataset_sha256.clone(),
            sample_bounds: None,
        })
    }

    /// Records the bounding box of the sketched samples.
    pub fn with_sample_bounds(mut self, samples: &Samples) -> Result<Self> {
        if samples.is_empty() || samples.d != self.d {
            return invalid("sample bounds need a non-empty dataset of the sketch dimension");
        }
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); samples.d];
        for j in 0..samples.len() {
            for (b, v) in bounds.iter_mut().zip(samples.row(j)) {
                *b = (b.0.min(*v), b.1.max(*v));
            }
        }
        self.sample_bounds = Some(bounds);
        Ok(self)
    }

    pub fn split(&self) -> Result<(SketchOperator, SketchVector)> {
        let m = self.m;
        if self.omegas.len() != m || self.weights.len() != m || self.template_cf.len() != m || self.z.len() != m {
            return invalid("sketch file arrays must all have length m");
        }
        if self.omegas.iter().any(|w| w.len() != self.d) {
            return invalid("sketch file frequencies must have length d");
        }
        let op = SketchOperator {
            d: self.d,
            m,
            tau: self.tau,
            seed: self.seed,
            law: self.law,
            template: self.template.clone(),
            omegas: self.omegas.clone(),
            weights: self.weights.clone(),
            template_cf: self.template_cf.clone(),
        };
        let sv = SketchVector { z: self.z.clone(), n: self.n, seed: self.seed, dataset_sha256: self.dataset_sha256.clone() };
        Ok((op, sv))
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Reads a JSON file into `T`.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let f = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Writes `value` as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.flush()?;
    Ok(())
}

/// `C_sketch · max(d, log s0) · s0 · log(max(1, |X|) s0 / α)`, rounded up.
pub fn sketch_size(s0: usize, d: usize, box_diameter: f64, alpha: f64, c_sketch: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) || s0 == 0 || d == 0 {
        return invalid("sketch size needs alpha in (0, 1), s0 >= 1 and d >= 1");
    }
    let s = s0 as f64;
    let rhs = c_sketch * (d as f64).max(s.ln()) * s * (box_diameter.max(1.0) * s / alpha).ln();
    Ok(rhs.ceil().max(1.0) as usize)
}

/// Explicit constants of the sinc-4 sketch-size bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinc4SketchConstants {
    /// Covering number `N`.
    pub covering: f64,
    pub c1: f64,
    pub c2: f64,
    pub c_lambda: f64,
}

pub fn sinc4_sketch_constants(d: usize, c_lambda: f64, diameter: f64) -> Sinc4SketchConstants {
    let df = d as f64;
    let r12 = 12f64.sqrt();
    let q = 128.0 / 23.0;
    let covering = diameter * 32.0 * r12 * c_lambda.sqrt() * df.powf(3.5) + q * (12.0 * r12 * c_lambda * df.sqrt() + c_lambda.sqrt() * 12.0 * df);
    let c1 = (1.0 + 12.0 * df) * c_lambda * (1024.0 * df.powi(6) * (2.0 + (12.0 * df).sqrt()) + q * q * (1.0 + (12.0 * df).sqrt() + 12.0 * df));
    let c2 = c_lambda
        * (1024.0 * df.powi(6) + 32.0 * df.powi(3) * (1.0 + 12.0 * df).sqrt() + q * q * 144.0 * df * df + q * 12.0 * df * (1.0 + 12.0 * df).sqrt());
    Sinc4SketchConstants { covering, c1, c2, c_lambda }
}

/// Sketch size for the sinc-4 pivot with `C_sketch = 2 C max(C₁, C₂)`.
pub fn sinc4_sketch_size(s0: usize, d: usize, diameter: f64, alpha: f64, c_lambda: f64, c_universal: f64) -> Result<usize> {
    let k = sinc4_sketch_constants(d, c_lambda, diameter);
    sketch_size(s0, d, diameter, alpha, 2.0 * c_universal * k.c1.max(k.c2))
}

/// `L_r = sqrt(C_Λ) (√(12d))^r`, almost-sure bounds on the pivot sketching
/// function derivatives.
pub fn tail_bound_levels(d: usize, c_lambda: f64) -> Result<[f64; 4]> {
    if !c_lambda.is_finite() || c_lambda <= 0.0 {
        return invalid("C_Lambda must be positive and finite");
    }
    let a = c_lambda.sqrt();
    let b = 12.0 * d as f64;
    Ok([a, a * b.sqrt(), a * b, a * b * b.sqrt()])
}

/// Universal constants of the U-process concentration bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for ConcentrationConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0 }
    }
}

/// `C_α = 2 sqrt(1 + C₁ log(C₂/α))`.
pub fn c_alpha(alpha: f64, k: ConcentrationConstants) -> f64 {
    2.0 * (1.0 + k.c1 * (k.c2 / alpha).ln()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    /// `C_{α,m}`.
    pub c_alpha_m: f64,
    /// `C_{α,m}/√n`.
    pub bound: f64,
    /// `lim_{m→∞} C_{α,m} = 2 sqrt(τ^{-d} (1 + C₁ log(2C₂/α)))`.
    pub limit_of_formula: f64,
    /// Population constant `C_α τ^{-d/2}`.
    pub population_constant: f64,
    /// The stated limit `C_{α/2} (4/τ)^{d/2}`.
    pub stated_limit: f64,
    pub constants: ConcentrationConstants,
    /// The two limits above disagree whenever `d ≥ 1` or `α` differs.
    pub limit_mismatch: bool,
}

/// Sketched noise-level bound
/// `C_{α,m} = 2 sqrt([τ^{-d} + ‖U/Λ‖_∞ log(2/α)/(2√m)] [1 + C₁ log(2C₂/α)])`.
pub fn noise_level_bound(alpha: f64, m: usize, n: u64, tau: f64, d: usize, law: SketchingLaw, k: ConcentrationConstants) -> Result<NoiseLevel> {
    if !(alpha > 0.0 && alpha < 1.0) || m == 0 || n == 0 {
        return invalid("noise level needs alpha in (0, 1), m >= 1, n >= 1");
    }
    let base = tau.powi(-(d as i32));
    let conc = 1.0 + k.c1 * (2.0 * k.c2 / alpha).ln();
    let c_alpha_m = 2.0 * ((base + law.sup_weight_ratio(d, tau) * (2.0 / alpha).ln() / (2.0 * (m as f64).sqrt())) * conc).sqrt();
    let limit_of_formula = 2.0 * (base * conc).sqrt();
    let population_constant = c_alpha(alpha, k) * tau.powf(-(d as f64) / 2.0);
    let stated_limit = c_alpha(alpha / 2.0, k) * (4.0 / tau).powf(d as f64 / 2.0);
    Ok(NoiseLevel {
        c_alpha_m,
        bound: c_alpha_m / (n as f64).sqrt(),
        limit_of_formula,
        population_constant,
        stated_limit,
        constants: k,
        limit_mismatch: (limit_of_formula - stated_limit).abs() > 1e-12 * stated_limit,
    })
}

/// Population noise bound `C_α τ^{-d/2}/√n`.
pub fn population_noise_level(alpha: f64, n: u64, tau: f64, d: usize, k: ConcentrationConstants) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || n == 0 {
        return invalid("noise level needs alpha in (0, 1) and n >= 1");
    }
    Ok(c_alpha(alpha, k) * tau.powf(-(d as f64) / 2.0) / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_law_gives_constant_weights() {
        let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::point_mass(), 2, 0.5, 32, 1).unwrap();
        for w in &op.weights {
            assert!((w * w - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_ratio_of_irwin_hall_is_infinite() {
        let nl = noise_level_bound(0.5, 100, 10, 1.0, 1, SketchingLaw::IrwinHall4, ConcentrationConstants::default()).unwrap();
        assert!(nl.c_alpha_m.is_infinite());
        assert!((nl.limit_of_formula - 2.0 * (1.0 + 4f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn levels_for_unit_c_lambda() {
        let l = tail_bound_levels(1, 1.0).unwrap();
        let r = 12f64.sqrt();
        assert_eq!(l, [1.0, r, 12.0, 12.0 * r]);
    }

    #[test]
    fn sketch_size_example() {
        assert_eq!(sketch_size(1, 1, 1.0, 0.5, 1.0).unwrap(), 1);
    }
}
