//! Wishart and Haar samplers and the composition random walk.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spd::{compose, OrthogonalMatrix, SpdMatrix};

/// Parameters of `W_m(a, I_m)`, the law with density proportional to
/// `det(x)^{a - (m+1)/2} exp(-tr(x)/2)`. Requires `a > (m-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct WishartParams {
    m: usize,
    a: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    m: usize,
    a: f64,
}

impl TryFrom<RawParams> for WishartParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        WishartParams::new(raw.m, raw.a)
    }
}

impl From<WishartParams> for RawParams {
    fn from(p: WishartParams) -> Self {
        RawParams { m: p.m, a: p.a }
    }
}

impl WishartParams {
    pub fn new(m: usize, a: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("dimension m must be at least 1".into()));
        }
        let bound = 0.5 * (m as f64 - 1.0);
        if !a.is_finite() || a <= bound {
            return Err(Error::Invalid(format!(
                "Wishart index a must exceed (m-1)/2 = {bound}, got {a}"
            )));
        }
        Ok(WishartParams { m, a })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `a - (m+1)/2`, the power of `det x` (and of each eigenvalue) in the density.
    pub fn density_exponent(&self) -> f64 {
        self.a - 0.5 * (self.m as f64 + 1.0)
    }

    /// `2a - m - 1`.
    pub fn shifted_index(&self) -> f64 {
        2.0 * self.a - self.m as f64 - 1.0
    }

    /// Degrees of freedom `(2a - m - 1) m` of the chi-squared law dominated by
    /// `m det(X)^{1/m}`.
    pub fn chi_square_df(&self) -> f64 {
        self.shifted_index() * self.m as f64
    }

    /// The CDF bound on `U_n` needs `a > (m+1)/2` so that the degrees of freedom are positive.
    pub fn require_positive_df(&self) -> Result<()> {
        if self.chi_square_df() > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(
                "un_cdf_bound",
                format!(
                    "requires a > (m+1)/2 = {} so that (2a-m-1)m > 0; got a = {}",
                    0.5 * (self.m as f64 + 1.0),
                    self.a
                ),
            ))
        }
    }
}

/// Bartlett-factor sampler for `W_m(a, I_m)`.
#[derive(Debug, Clone)]
pub struct WishartSampler {
    params: WishartParams,
    /// `T_ii^2 ~ chi^2_{2a-i+1}`, as Gamma(shape = df/2, scale = 2).
    diag: Vec<Gamma<f64>>,
}

impl WishartSampler {
    pub fn new(params: WishartParams) -> Self {
        let diag = (1..=params.m)
            .map(|i| {
                let df = 2.0 * params.a - i as f64 + 1.0;
                Gamma::new(0.5 * df, 2.0).expect("df positive when a > (m-1)/2")
            })
            .collect();
        WishartSampler { params, diag }
    }

    pub fn params(&self) -> WishartParams {
        self.params
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpdMatrix {
        let m = self.params.m;
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.diag[i].sample(rng).sqrt();
            for j in 0..i {
                t[(i, j)] = StandardNormal.sample(rng);
            }
        }
        SpdMatrix::new(&t * t.transpose()).expect("Bartlett product is positive definite")
    }
}

/// One draw from `W_m(a, I_m)`.
pub fn wishart_sample<R: Rng + ?Sized>(params: WishartParams, rng: &mut R) -> SpdMatrix {
    WishartSampler::new(params).sample(rng)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` signed so that `R` has a positive diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> OrthogonalMatrix {
    let g = DMatrix::<f64>::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col *= -1.0;
        }
    }
    OrthogonalMatrix::new(q).expect("Householder QR yields an orthogonal factor")
}

/// A realized walk: steps `X_1..X_n` and partial compositions `S_1..S_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub params: WishartParams,
    pub steps: Vec<SpdMatrix>,
    pub partials: Vec<SpdMatrix>,
}

impl WalkPath {
    /// Composes the given steps: `S_1 = X_1`, `S_{j+1} = S_j o X_{j+1}`.
    pub fn from_steps(params: WishartParams, steps: Vec<SpdMatrix>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Invalid("a walk needs at least one step".into()));
        }
        let mut partials: Vec<SpdMatrix> = Vec::with_capacity(steps.len());
        partials.push(steps[0].clone());
        for (j, x) in steps.iter().enumerate().skip(1) {
            let next = compose(&partials[j - 1], x).map_err(|e| Error::WalkStep {
                step: j + 1,
                source: Box::new(e),
            })?;
            partials.push(next);
        }
        Ok(WalkPath {
            params,
            steps,
            partials,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One JSON line of the walk dump format.
    pub fn to_json_line(&self, rng: RngStream) -> String {
        WalkDump::from_path(self, rng).to_json_line()
    }
}

/// Serialized form of a walk, one per line in a dump file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkDump {
    pub seed: u64,
    pub stream_id: u64,
    pub params: WishartParams,
    pub n: usize,
    pub steps: Vec<Vec<Vec<f64>>>,
    pub partials: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<WalkStats>,
}

impl WalkDump {
    /// Dump of a walk drawn from `rng`, without statistics.
    pub fn from_path(path: &WalkPath, rng: RngStream) -> Self {
        WalkDump {
            seed: rng.seed,
            stream_id: rng.stream_id,
            params: path.params,
            n: path.len(),
            steps: path.steps.iter().map(SpdMatrix::to_rows).collect(),
            partials: path.partials.iter().map(SpdMatrix::to_rows).collect(),
            stats: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("finite walk serializes")
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn into_path(self) -> Result<WalkPath> {
        let steps = self
            .steps
            .iter()
            .map(|r| SpdMatrix::from_rows(r))
            .collect::<Result<Vec<_>>>()?;
        let partials = self
            .partials
            .iter()
            .map(|r| SpdMatrix::from_rows(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(WalkPath {
            params: self.params,
            steps,
            partials,
        })
    }
}

/// Draws `n` steps from `rng` and composes them.
pub fn generate_walk_with<R: Rng + ?Sized>(
    sampler: &WishartSampler,
    n: usize,
    rng: &mut R,
) -> Result<WalkPath> {
    if n == 0 {
        return Err(Error::Invalid("walk length n must be at least 1".into()));
    }
    let steps = (0..n).map(|_| sampler.sample(rng)).collect();
    WalkPath::from_steps(sampler.params(), steps)
}

pub fn generate_walk(params: WishartParams, n: usize, rng: RngStream) -> Result<WalkPath> {
    generate_walk_with(&WishartSampler::new(params), n, &mut rng.rng())
}

/// `M_n`, `U_n` and the distances they are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub mn: f64,
    pub un: f64,
    /// `d_R(I, X_j)`.
    pub step_dists: Vec<f64>,
    /// Ascending sort of `step_dists`.
    pub order_stats: Vec<f64>,
    /// `d_R(I, S_j)`.
    pub partial_dists: Vec<f64>,
}

impl WalkStats {
    pub fn from_distances(step_dists: Vec<f64>, partial_dists: Vec<f64>) -> Self {
        let mn = step_dists.iter().copied().fold(0.0, f64::max);
        let un = partial_dists.iter().copied().fold(0.0, f64::max);
        let mut order_stats = step_dists.clone();
        order_stats.sort_by(f64::total_cmp);
        WalkStats {
            mn,
            un,
            step_dists,
            order_stats,
            partial_dists,
        }
    }

    pub fn len(&self) -> usize {
        self.step_dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_dists.is_empty()
    }

    /// Statistics of the first `k` steps.
    pub fn prefix(&self, k: usize) -> WalkStats {
        WalkStats::from_distances(self.step_dists[..k].to_vec(), self.partial_dists[..k].to_vec())
    }

    /// `d_R(I, S_n)`.
    pub fn final_distance(&self) -> f64 {
        *self.partial_dists.last().expect("nonempty walk")
    }
}

pub fn walk_statistics(path: &WalkPath) -> WalkStats {
    WalkStats::from_distances(
        path.steps.iter().map(SpdMatrix::distance_from_identity).collect(),
        path.partials.iter().map(SpdMatrix::distance_from_identity).collect(),
    )
}
