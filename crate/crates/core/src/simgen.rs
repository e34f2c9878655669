//! Synthetic categorical data with dependence confined to an active set.
//!
//! Variable positions in a [`ScenarioSpec`] are 1-based, as in data files.
//! Variables outside the active set are independent and uniform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::inference::{cramers_v_from_table, tensor_from_loglinear, LogLinearCoeffs};
use crate::math::sample_probs;
use crate::tensor::{cell_count, DenseProbTensor, ProbMatrix, DEFAULT_CELL_CAP};

/// Largest binary active set for the log-linear generator.
pub const MAX_LOGLINEAR_ACTIVE: usize = 16;

/// Active set used by the default scenarios.
pub const DEFAULT_ACTIVE_SET: [usize; 4] = [2, 4, 12, 14];

/// A coefficient `β_S` on a subset of active positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub subset: Vec<usize>,
    pub value: f64,
}

/// Multinomial-logit weight: `value` is added to the linear predictor of
/// category `category` of `target` when `source` takes level `source_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlmWeight {
    pub source: usize,
    pub source_level: usize,
    pub target: usize,
    pub category: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioKind {
    /// Binary log-linear model; unlisted subsets have coefficient 0.
    Loglinear { coefficients: Vec<Term> },
    /// Mixture of product distributions on the active set;
    /// `components[h][k]` is the distribution of the `k`-th active variable.
    Subpop {
        weights: Vec<f64>,
        components: Vec<Vec<Vec<f64>>>,
    },
    /// Active variables generated in increasing position order, each from a
    /// multinomial logit on earlier active variables with category 1 as reference.
    Glm {
        weights: Vec<GlmWeight>,
        /// `intercepts[k][c − 2]` for active variable `k`; zero when absent.
        #[serde(default)]
        intercepts: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub active_set: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    pub kind: ScenarioKind,
}

/// Coefficients of the binary log-linear scenario on `{2, 4, 12, 14}`.
pub fn default_loglinear_terms() -> Vec<Term> {
    let t = |subset: &[usize], value: f64| Term { subset: subset.to_vec(), value };
    vec![
        t(&[2], 1.0),
        t(&[4], -1.5),
        t(&[12], 2.0),
        t(&[14], 1.5),
        t(&[2, 4], -0.5),
        t(&[2, 12], 0.5),
        t(&[4, 12], -0.5),
        t(&[4, 14], -0.5),
        t(&[12, 14], 0.5),
        t(&[2, 4, 12], 0.25),
        t(&[4, 12, 14], 0.5),
    ]
}

impl ScenarioSpec {
    /// `n = 100`, `p = 100` binary variables, log-linear dependence on `{2, 4, 12, 14}`.
    pub fn default_loglinear() -> Self {
        Self {
            n: 100,
            p: 100,
            d: 2,
            active_set: DEFAULT_ACTIVE_SET.to_vec(),
            seed: 0,
            kind: ScenarioKind::Loglinear { coefficients: default_loglinear_terms() },
        }
    }

    /// Two equally weighted subpopulations whose active variables favour
    /// category 1 and category `d` respectively.
    pub fn default_subpop() -> Self {
        let d = 4;
        let corner = |hot: usize| -> Vec<f64> {
            (0..d).map(|c| if c == hot { 0.7 } else { 0.3 / (d - 1) as f64 }).collect()
        };
        let k = DEFAULT_ACTIVE_SET.len();
        Self {
            n: 100,
            p: 100,
            d,
            active_set: DEFAULT_ACTIVE_SET.to_vec(),
            seed: 0,
            kind: ScenarioKind::Subpop {
                weights: vec![0.5, 0.5],
                components: vec![vec![corner(0); k], vec![corner(d - 1); k]],
            },
        }
    }

    /// Each active variable leans towards repeating the levels of earlier
    /// active variables (weight 1.5 per matching non-reference level).
    pub fn default_glm() -> Self {
        let d = 4;
        let s = DEFAULT_ACTIVE_SET;
        let mut weights = Vec::new();
        for (b, &target) in s.iter().enumerate() {
            for &source in &s[..b] {
                for c in 2..=d {
                    weights.push(GlmWeight { source, source_level: c, target, category: c, value: 1.5 });
                }
            }
        }
        Self {
            n: 100,
            p: 100,
            d,
            active_set: s.to_vec(),
            seed: 0,
            kind: ScenarioKind::Glm { weights, intercepts: None },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ScenarioKind::Loglinear { .. } => "loglinear",
            ScenarioKind::Subpop { .. } => "subpop",
            ScenarioKind::Glm { .. } => "glm",
        }
    }

    /// Active set as 0-based variable indices.
    pub fn active_indices(&self) -> Vec<usize> {
        self.active_set.iter().map(|&j| j - 1).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.p == 0 {
            return cfg("scenario needs n ≥ 1 and p ≥ 1".into());
        }
        if self.d < 2 || self.d > u16::MAX as usize {
            return cfg(format!("scenario level count {} outside 2..=65535", self.d));
        }
        if self.active_set.windows(2).any(|w| w[0] >= w[1]) {
            return cfg("active_set must be strictly increasing".into());
        }
        if let Some(&j) = self.active_set.iter().find(|&&j| j == 0 || j > self.p) {
            return cfg(format!("active position {j} outside 1..={}", self.p));
        }
        let in_active = |j: usize| self.active_set.binary_search(&j).is_ok();
        let k = self.active_set.len();
        match &self.kind {
            ScenarioKind::Loglinear { coefficients } => {
                if self.d != 2 {
                    return cfg("the log-linear scenario needs binary variables (d = 2)".into());
                }
                if k > MAX_LOGLINEAR_ACTIVE {
                    return Err(Error::Size { cells: 1u128 << k, cap: 1 << MAX_LOGLINEAR_ACTIVE });
                }
                for t in coefficients {
                    if t.subset.is_empty() || !t.subset.iter().all(|&j| in_active(j)) {
                        return cfg(format!("coefficient subset {:?} is not a nonempty subset of the active set", t.subset));
                    }
                    if !t.value.is_finite() {
                        return cfg(format!("coefficient on {:?} is not finite", t.subset));
                    }
                }
            }
            ScenarioKind::Subpop { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return cfg("subpop needs one component per weight".into());
                }
                check_simplex(weights, "subpop weights")?;
                for (h, comp) in components.iter().enumerate() {
                    if comp.len() != k {
                        return cfg(format!("component {} has {} vectors for {k} active variables", h + 1, comp.len()));
                    }
                    for v in comp {
                        if v.len() != self.d {
                            return cfg(format!("component {} vector has length {}, expected {}", h + 1, v.len(), self.d));
                        }
                        check_simplex(v, "subpop component vector")?;
                    }
                }
            }
            ScenarioKind::Glm { weights, intercepts } => {
                for w in weights {
                    if !in_active(w.source) || !in_active(w.target) {
                        return cfg(format!("weight {}→{} references a variable outside the active set", w.source, w.target));
                    }
                    if w.source >= w.target {
                        return cfg(format!("weight {}→{} must point to a later variable", w.source, w.target));
                    }
                    if !(2..=self.d).contains(&w.source_level) || !(2..=self.d).contains(&w.category) {
                        return cfg(format!("weight levels must lie in 2..={}", self.d));
                    }
                    if !w.value.is_finite() {
                        return cfg("weight is not finite".into());
                    }
                }
                if let Some(ints) = intercepts {
                    if ints.len() != k || ints.iter().any(|r| r.len() != self.d - 1 || r.iter().any(|x| !x.is_finite())) {
                        return cfg(format!("intercepts must be {k} finite rows of length {}", self.d - 1));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact joint distribution of the active variables (axes in active-set
    /// order), or a size error when it has too many cells.
    pub fn active_joint(&self) -> Result<DenseProbTensor> {
        self.validate()?;
        let k = self.active_set.len();
        if k == 0 {
            return Err(Error::Config("the active set is empty".into()));
        }
        let dims = vec![self.d; k];
        let count = cell_count(&dims, DEFAULT_CELL_CAP)?;
        match &self.kind {
            ScenarioKind::Loglinear { coefficients } => tensor_from_loglinear(&self.loglinear_coeffs(coefficients)?),
            ScenarioKind::Subpop { weights, components } => {
                let mut cells = vec![0.0; count];
                let mut codes = vec![0usize; k];
                for cell in cells.iter_mut() {
                    *cell = weights
                        .iter()
                        .zip(components)
                        .map(|(w, comp)| w * codes.iter().zip(comp).map(|(&c, v)| v[c]).product::<f64>())
                        .sum();
                    advance(&mut codes, self.d);
                }
                DenseProbTensor::new(dims, cells)
            }
            ScenarioKind::Glm { .. } => {
                let model = GlmModel::new(self);
                let mut cells = vec![0.0; count];
                let mut codes = vec![0usize; k];
                let mut probs = vec![0.0; self.d];
                for cell in cells.iter_mut() {
                    let mut prob = 1.0;
                    for b in 0..k {
                        model.category_probs(b, &codes, &mut probs);
                        prob *= probs[codes[b]];
                    }
                    *cell = prob;
                    advance(&mut codes, self.d);
                }
                DenseProbTensor::new(dims, cells)
            }
        }
    }

    fn loglinear_coeffs(&self, coefficients: &[Term]) -> Result<LogLinearCoeffs> {
        let terms: Vec<(Vec<usize>, f64)> = coefficients
            .iter()
            .map(|t| (t.subset.iter().map(|&j| j - 1).collect(), t.value))
            .collect();
        LogLinearCoeffs::from_terms(self.active_indices(), &terms)
    }

    /// Draws a dataset from the scenario with a generator seeded from `seed`.
    pub fn generate(&self) -> Result<CategoricalDataset> {
        self.generate_with_rng(&mut ChaCha8Rng::seed_from_u64(self.seed))
    }

    pub fn generate_with_rng<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CategoricalDataset> {
        self.validate()?;
        let (n, p, d) = (self.n, self.p, self.d);
        let active = self.active_indices();
        let k = active.len();
        let mut values = vec![0u16; n * p];
        let mut codes = vec![0usize; k];
        let loglinear_cdf = match &self.kind {
            ScenarioKind::Loglinear { .. } if k > 0 => Some(cumulative(self.active_joint()?.cells())),
            _ => None,
        };
        let glm = matches!(self.kind, ScenarioKind::Glm { .. }).then(|| GlmModel::new(self));
        let mut probs = vec![0.0; d];
        for row in values.chunks_exact_mut(p) {
            for v in row.iter_mut() {
                *v = rng.random_range(1..=d as u16);
            }
            if k == 0 {
                continue;
            }
            match &self.kind {
                ScenarioKind::Loglinear { .. } => {
                    let cdf = loglinear_cdf.as_ref().expect("joint computed above");
                    let u: f64 = rng.random();
                    let mut flat = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    for c in codes.iter_mut() {
                        *c = flat & 1;
                        flat >>= 1;
                    }
                }
                ScenarioKind::Subpop { weights, components } => {
                    let h = sample_probs(weights, rng);
                    for (c, v) in codes.iter_mut().zip(&components[h]) {
                        *c = sample_probs(v, rng);
                    }
                }
                ScenarioKind::Glm { .. } => {
                    let model = glm.as_ref().expect("glm model built above");
                    for b in 0..k {
                        model.category_probs(b, &codes, &mut probs);
                        codes[b] = sample_probs(&probs, rng);
                    }
                }
            }
            for (&j, &c) in active.iter().zip(&codes) {
                row[j] = c as u16 + 1;
            }
        }
        CategoricalDataset::new(vec![d; p], values)
    }

    /// Known truths: coefficients for the log-linear scenario and Cramér's V
    /// for active pairs whenever the active joint can be enumerated.
    pub fn truth(&self) -> Result<Truth> {
        self.validate()?;
        let coefficients = match &self.kind {
            ScenarioKind::Loglinear { coefficients } => {
                let coeffs = self.loglinear_coeffs(coefficients)?;
                Some(
                    coeffs
                        .iter()
                        .map(|(s, value)| Term { subset: s.iter().map(|j| j + 1).collect(), value })
                        .collect(),
                )
            }
            _ => None,
        };
        let cramers_v = match self.active_joint() {
            Ok(joint) => {
                let mut out = Vec::new();
                for a in 0..self.active_set.len() {
                    for b in a + 1..self.active_set.len() {
                        let pair = joint.sum_to_axes(&[a, b])?;
                        out.push(PairValue {
                            j: self.active_set[a],
                            j2: self.active_set[b],
                            value: cramers_v_from_table(&to_matrix(&pair))?,
                        });
                    }
                }
                Some(out)
            }
            Err(Error::Size { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Truth {
            kind: self.kind_name().to_string(),
            seed: self.seed,
            n: self.n,
            p: self.p,
            d: self.d,
            active_set: self.active_set.clone(),
            coefficients,
            cramers_v,
        })
    }
}

/// Cramér's V for a pair of 1-based positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub j: usize,
    pub j2: usize,
    pub value: f64,
}

/// Truth record written next to simulated data. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub kind: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub active_set: Vec<usize>,
    /// Every nonempty subset of the active set, zeros included.
    pub coefficients: Option<Vec<Term>>,
    /// Active pairs; pairs involving other variables are 0.
    pub cramers_v: Option<Vec<PairValue>>,
}

impl Truth {
    pub fn coefficient(&self, subset: &[usize]) -> Option<f64> {
        let mut s = subset.to_vec();
        s.sort_unstable();
        self.coefficients.as_ref()?.iter().find(|t| t.subset == s).map(|t| t.value)
    }

    pub fn cramers_v(&self, j: usize, j2: usize) -> Option<f64> {
        let (a, b) = (j.min(j2), j.max(j2));
        let in_active = |x| self.active_set.contains(&x);
        if !(in_active(a) && in_active(b)) {
            return Some(0.0);
        }
        self.cramers_v.as_ref()?.iter().find(|v| v.j == a && v.j2 == b).map(|v| v.value)
    }
}

struct GlmModel {
    d: usize,
    /// `intercepts[k][c]` for categories `c` in 0..d (entry 0 fixed at 0).
    intercepts: Vec<Vec<f64>>,
    /// `(target slot, source slot, source level, category, value)`, all 0-based.
    weights: Vec<(usize, usize, usize, usize, f64)>,
}

impl GlmModel {
    fn new(spec: &ScenarioSpec) -> Self {
        let ScenarioKind::Glm { weights, intercepts } = &spec.kind else {
            unreachable!("GlmModel built for a non-GLM scenario")
        };
        let slot = |j: usize| spec.active_set.binary_search(&j).expect("validated");
        let k = spec.active_set.len();
        let intercepts = (0..k)
            .map(|b| {
                let mut row = vec![0.0; spec.d];
                if let Some(ints) = intercepts {
                    row[1..].copy_from_slice(&ints[b]);
                }
                row
            })
            .collect();
        let weights = weights
            .iter()
            .map(|w| (slot(w.target), slot(w.source), w.source_level - 1, w.category - 1, w.value))
            .collect();
        Self { d: spec.d, intercepts, weights }
    }

    /// Category probabilities of active slot `b` given the codes of earlier slots.
    fn category_probs(&self, b: usize, codes: &[usize], out: &mut [f64]) {
        out.copy_from_slice(&self.intercepts[b]);
        for &(target, source, level, category, value) in &self.weights {
            if target == b && codes[source] == level {
                out[category] += value;
            }
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in out.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        out.iter_mut().for_each(|x| *x /= total);
        debug_assert_eq!(out.len(), self.d);
    }
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{what} must be nonnegative and sum to 1")));
    }
    Ok(())
}

/// First-axis-fastest odometer over 0-based codes.
fn advance(codes: &mut [usize], d: usize) {
    for c in codes.iter_mut() {
        *c += 1;
        if *c < d {
            return;
        }
        *c = 0;
    }
}

fn cumulative(cells: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    cells
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

/// Row-major copy of a two-axis tensor (first axis as rows).
pub(crate) fn to_matrix(t: &DenseProbTensor) -> ProbMatrix {
    let (rows, cols) = (t.dims()[0], t.dims()[1]);
    let mut data = vec![0.0; rows * cols];
    for c in 0..cols {
        for r in 0..rows {
            data[r * cols + c] = t.cells()[r + rows * c];
        }
    }
    ProbMatrix { rows, cols, data }
}
