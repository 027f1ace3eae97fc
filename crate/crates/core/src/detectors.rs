//! ERNet, ECNet and the covariance-input CovNet ablation.
//!
//! All three are 4-layer networks `input → n₁ → n₂ → output` with ReLU
//! hidden layers. ERNet regresses the source count from the eigenvalues of
//! the sample covariance (linear output, L2 loss, rounded half-up and
//! clamped). ECNet classifies the count over `M` classes from the same
//! eigenvalues (softmax output, cross-entropy loss, argmax). CovNet is ECNet
//! fed with the raw covariance entries instead of its eigenvalues.
//!
//! With forward-backward spatial smoothing enabled, ERNet/ECNet take the
//! `M0` eigenvalues of the smoothed covariance instead.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::neural::{Activation, Loss, ModelFile, Network, TrainConfig};
use crate::opcount::{self, Counted, OpCounts, Real};
use crate::signal::fbss_covariance;

/// Hidden layer widths used throughout.
pub const DEFAULT_HIDDEN: (usize, usize) = (8, 8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    ErNet,
    EcNet,
    CovNet,
}

impl NetKind {
    pub fn name(self) -> &'static str {
        match self {
            NetKind::ErNet => "ernet",
            NetKind::EcNet => "ecnet",
            NetKind::CovNet => "covnet",
        }
    }
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ernet" => Ok(NetKind::ErNet),
            "ecnet" => Ok(NetKind::EcNet),
            "covnet" => Ok(NetKind::CovNet),
            other => Err(Error::Config(format!("unknown network kind {other:?}"))),
        }
    }
}

/// Architecture and feature pipeline of one network detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub kind: NetKind,
    /// Full-array antenna count `M`; also the number of ECNet/CovNet classes.
    pub num_antennas: usize,
    pub hidden: (usize, usize),
    /// Sub-array size `M0` when FBSS features are used.
    pub fbss: Option<usize>,
    /// Divide eigenvalue features by their sum. Off by default.
    #[serde(default)]
    pub normalize: bool,
}

impl DetectorSpec {
    pub fn new(kind: NetKind, num_antennas: usize) -> Self {
        Self {
            kind,
            num_antennas,
            hidden: DEFAULT_HIDDEN,
            fbss: None,
            normalize: false,
        }
    }

    pub fn with_fbss(mut self, subarray_size: usize) -> Self {
        self.fbss = Some(subarray_size);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas < 2 {
            return Err(Error::Config("need at least 2 antennas".into()));
        }
        if self.hidden.0 == 0 || self.hidden.1 == 0 {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        match (self.kind, self.fbss) {
            (NetKind::CovNet, Some(_)) => Err(Error::Config("CovNet does not use FBSS features".into())),
            (_, Some(m0)) if m0 == 0 || m0 > self.num_antennas => Err(Error::Config(format!(
                "sub-array size {m0} outside 1..={}",
                self.num_antennas
            ))),
            _ => Ok(()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match (self.kind, self.fbss) {
            (NetKind::CovNet, _) => 2 * self.num_antennas * self.num_antennas,
            (_, Some(m0)) => m0,
            (_, None) => self.num_antennas,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            NetKind::ErNet => 1,
            NetKind::EcNet | NetKind::CovNet => self.num_antennas,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        vec![self.input_dim(), self.hidden.0, self.hidden.1, self.output_dim()]
    }

    pub fn loss(&self) -> Loss {
        match self.kind {
            NetKind::ErNet => Loss::L2,
            NetKind::EcNet | NetKind::CovNet => Loss::CategoricalCrossEntropy,
        }
    }

    /// Display name, prefixed with `fbss-` when smoothing is on.
    pub fn label(&self) -> String {
        match self.fbss {
            Some(_) => format!("fbss-{}", self.kind),
            None => self.kind.to_string(),
        }
    }

    /// Feature vector for a full-array sample covariance.
    pub fn features(&self, r_hat: &ComplexMatrix) -> Result<Vec<f64>> {
        let mut f = match (self.kind, self.fbss) {
            (NetKind::CovNet, _) => return make_feature_cov(r_hat),
            (_, Some(m0)) => make_feature_fbss(r_hat, m0)?,
            (_, None) => make_feature_eigen(r_hat)?,
        };
        if self.normalize {
            normalize_in_place(&mut f);
        }
        Ok(f)
    }

    /// Training target for true count `k`.
    pub fn target(&self, k: usize) -> Result<Vec<f64>> {
        match self.kind {
            NetKind::ErNet => Ok(vec![k as f64]),
            NetKind::EcNet | NetKind::CovNet => one_hot(k, self.num_antennas),
        }
    }

    fn meta(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("detector".into(), self.kind.to_string());
        m.insert("num_antennas".into(), self.num_antennas.to_string());
        m.insert("hidden".into(), format!("{},{}", self.hidden.0, self.hidden.1));
        if let Some(m0) = self.fbss {
            m.insert("fbss".into(), m0.to_string());
        }
        m.insert("normalize".into(), self.normalize.to_string());
        m
    }

    fn from_meta(meta: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| Error::Parse(format!("model metadata lacks {k:?}")))
        };
        let parse = |k: &str, v: &str| v.parse::<usize>().map_err(|e| Error::Parse(format!("{k}: {e}")));
        let kind: NetKind = get("detector")?.parse()?;
        let num_antennas = parse("num_antennas", get("num_antennas")?)?;
        let hidden = match get("hidden")?.split_once(',') {
            Some((a, b)) => (parse("hidden", a)?, parse("hidden", b)?),
            None => return Err(Error::Parse("hidden must be \"n1,n2\"".into())),
        };
        let fbss = meta.get("fbss").map(|v| parse("fbss", v)).transpose()?;
        let normalize = meta.get("normalize").map(|v| v == "true").unwrap_or(false);
        Ok(Self {
            kind,
            num_antennas,
            hidden,
            fbss,
            normalize,
        })
    }
}

pub(crate) fn normalize_in_place(f: &mut [f64]) {
    let total: f64 = f.iter().sum();
    if total > 0.0 {
        f.iter_mut().for_each(|v| *v /= total);
    }
}

/// Eigenvalues of the sample covariance, descending, unscaled.
pub fn make_feature_eigen(r_hat: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(r_hat)?.eigenvalues)
}

/// Eigenvalues of the forward-backward smoothed covariance, descending.
pub fn make_feature_fbss(r_hat: &ComplexMatrix, subarray_size: usize) -> Result<Vec<f64>> {
    make_feature_eigen(&fbss_covariance(r_hat, subarray_size)?)
}

/// Real parts (row-major) followed by imaginary parts of every entry.
pub fn make_feature_cov(r_hat: &ComplexMatrix) -> Result<Vec<f64>> {
    if !r_hat.is_hermitian() {
        return Err(Error::Domain("covariance is not Hermitian".into()));
    }
    let entries = r_hat.as_slice();
    Ok(entries.iter().map(|z| z.re).chain(entries.iter().map(|z| z.im)).collect())
}

/// Length-`m` indicator of class `k`.
pub fn one_hot(k: usize, m: usize) -> Result<Vec<f64>> {
    if k >= m {
        return Err(Error::Domain(format!("class {k} out of range for {m} classes")));
    }
    let mut v = vec![0.0; m];
    v[k] = 1.0;
    Ok(v)
}

/// Round half-up then clamp to `[0, max_count]`; NaN maps to 0.
fn round_clamp<T: Real>(raw: T, max_count: usize) -> usize {
    let shifted = raw + T::from_f64(0.5);
    if shifted.partial_cmp(&T::from_f64(0.0)).is_none_or(|o| o.is_lt()) {
        return 0;
    }
    let k = shifted.to_f64().floor();
    if T::from_f64(k) > T::from_f64(max_count as f64) {
        max_count
    } else {
        k as usize
    }
}

/// First index of the maximum element.
fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// ERNet decision: scalar output rounded half-up, clamped to `[0, M−1]`.
pub fn ernet_decide(net: &Network, features: &[f64], num_antennas: usize) -> Result<usize> {
    let out = net.forward(features)?;
    if out.len() != 1 {
        return Err(Error::Dimension(format!("ERNet output has length {}", out.len())));
    }
    Ok(round_clamp(out[0], num_antennas.saturating_sub(1)))
}

/// ECNet decision: zero-based index of the largest output, ties to the
/// smaller index.
pub fn ecnet_decide(net: &Network, features: &[f64]) -> Result<usize> {
    Ok(argmax(&net.forward(features)?))
}

/// Untrained network for `spec`.
pub fn build_detector(spec: &DetectorSpec, rng: &mut impl Rng) -> Result<Network> {
    spec.validate()?;
    let output = match spec.kind {
        NetKind::ErNet => Activation::Linear,
        NetKind::EcNet | NetKind::CovNet => Activation::Softmax,
    };
    Network::init(&spec.layer_sizes(), output, rng)
}

/// A network paired with the spec it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub spec: DetectorSpec,
    pub network: Network,
}

impl Detector {
    pub fn new(spec: DetectorSpec, network: Network) -> Result<Self> {
        spec.validate()?;
        if network.sizes() != spec.layer_sizes() {
            return Err(Error::Dimension(format!(
                "network {:?} does not match spec {:?}",
                network.sizes(),
                spec.layer_sizes()
            )));
        }
        Ok(Self { spec, network })
    }

    /// Estimated count from a feature vector.
    ///
    /// Classification heads decide on the logits; softmax is monotone and
    /// can be skipped at inference.
    pub fn decide(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.spec.input_dim() {
            return Err(Error::Dimension(format!(
                "{} features for input size {}",
                features.len(),
                self.spec.input_dim()
            )));
        }
        Ok(self.decide_generic::<f64>(features))
    }

    fn decide_generic<T: Real>(&self, features: &[f64]) -> usize {
        let x: Vec<T> = features.iter().map(|&v| T::from_f64(v)).collect();
        let out = self.network.logits_generic(&x);
        match self.spec.kind {
            NetKind::ErNet => round_clamp(out[0], self.spec.num_antennas - 1),
            NetKind::EcNet | NetKind::CovNet => argmax(&out),
        }
    }

    /// Estimated count straight from a sample covariance.
    pub fn detect(&self, r_hat: &ComplexMatrix) -> Result<usize> {
        self.decide(&self.spec.features(r_hat)?)
    }

    pub fn to_model_file(&self, train_config: Option<TrainConfig>) -> ModelFile {
        ModelFile::new(&self.network, train_config, self.spec.meta())
    }

    pub fn from_model_file(file: &ModelFile) -> Result<Self> {
        Self::new(DetectorSpec::from_meta(&file.meta)?, file.network()?)
    }
}

/// Closed-form and instrumented per-decision operation counts of a network
/// detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkOpCounts {
    pub kind: NetKind,
    pub closed_form: OpCounts,
    pub instrumented: OpCounts,
}

/// Closed forms: ERNet `M·n₁+n₂` mult/div, `n₁+n₂+1` add/sub, no
/// logarithms or comparisons; ECNet `M(n₁+n₂)` mult/div, `n₁+n₂+M`
/// add/sub, `M` comparisons. The instrumented count runs one decision of a
/// randomly initialized network through the counting arithmetic, excluding
/// the eigendecomposition.
pub fn count_ops_network(kind: NetKind, m: usize, hidden: (usize, usize), rng: &mut impl Rng) -> Result<NetworkOpCounts> {
    let (m64, n1, n2) = (m as u64, hidden.0 as u64, hidden.1 as u64);
    let closed_form = match kind {
        NetKind::ErNet => OpCounts {
            mul_div: m64 * n1 + n2,
            add_sub: n1 + n2 + 1,
            log: 0,
            cmp: 0,
        },
        NetKind::EcNet => OpCounts {
            mul_div: m64 * (n1 + n2),
            add_sub: n1 + n2 + m64,
            log: 0,
            cmp: m64,
        },
        NetKind::CovNet => {
            let d = 2 * m64 * m64;
            OpCounts {
                mul_div: d * n1 + n1 * n2 + n2 * m64,
                add_sub: d * n1 + n1 * n2 + n2 * m64,
                log: 0,
                cmp: n1 + n2 + m64 - 1,
            }
        }
    };
    let mut spec = DetectorSpec::new(kind, m);
    spec.hidden = hidden;
    let det = Detector::new(spec.clone(), build_detector(&spec, rng)?)?;
    let features: Vec<f64> = (0..spec.input_dim()).map(|i| (spec.input_dim() - i) as f64).collect();
    let (_, instrumented) = opcount::count(|| det.decide_generic::<Counted>(&features));
    Ok(NetworkOpCounts {
        kind,
        closed_form,
        instrumented,
    })
}
