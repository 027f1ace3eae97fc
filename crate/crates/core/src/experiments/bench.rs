//! Per-decision cost of each detector: closed-form operation counts, counts
//! measured through instrumented arithmetic, and wall-clock time.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::classical::{count_ops_classical, evaluate, Criterion, EigenSpectrum};
use crate::detectors::{build_detector, count_ops_network, Detector, DetectorSpec, NetKind};
use crate::error::{Error, Result};
use crate::opcount::OpCounts;
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub detector: String,
    pub closed_form: OpCounts,
    pub instrumented: OpCounts,
    pub ns_per_decision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub num_antennas: usize,
    pub num_snapshots: usize,
    pub hidden: (usize, usize),
    pub iterations: usize,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    pub fn row(&self, detector: &str) -> Option<&ComplexityRow> {
        self.rows.iter().find(|r| r.detector == detector)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "M={} N={} hidden=({}, {}) iterations={}\n",
            self.num_antennas, self.num_snapshots, self.hidden.0, self.hidden.1, self.iterations
        );
        s.push_str(&format!(
            "{:<8} {:>9} {:>9} {:>5} {:>5} | {:>9} {:>9} {:>5} {:>5} | {:>10}\n",
            "detector", "mul/div", "add/sub", "log", "cmp", "mul/div*", "add/sub*", "log*", "cmp*", "ns/dec"
        ));
        for r in &self.rows {
            let (c, i) = (&r.closed_form, &r.instrumented);
            s.push_str(&format!(
                "{:<8} {:>9} {:>9} {:>5} {:>5} | {:>9} {:>9} {:>5} {:>5} | {:>10.1}\n",
                r.detector, c.mul_div, c.add_sub, c.log, c.cmp, i.mul_div, i.add_sub, i.log, i.cmp, r.ns_per_decision
            ));
        }
        s.push_str("* measured with instrumented arithmetic\n");
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record([
            "detector",
            "closed_mul_div",
            "closed_add_sub",
            "closed_log",
            "closed_cmp",
            "measured_mul_div",
            "measured_add_sub",
            "measured_log",
            "measured_cmp",
            "ns_per_decision",
        ])?;
        for r in &self.rows {
            let (c, i) = (&r.closed_form, &r.instrumented);
            w.write_record([
                r.detector.clone(),
                c.mul_div.to_string(),
                c.add_sub.to_string(),
                c.log.to_string(),
                c.cmp.to_string(),
                i.mul_div.to_string(),
                i.add_sub.to_string(),
                i.log.to_string(),
                i.cmp.to_string(),
                format!("{:.1}", r.ns_per_decision),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn time_per_call(iterations: usize, inputs: &[Vec<f64>], mut f: impl FnMut(&[f64]) -> usize) -> f64 {
    let start = Instant::now();
    let mut acc = 0usize;
    for i in 0..iterations {
        acc = acc.wrapping_add(f(black_box(&inputs[i % inputs.len()])));
    }
    black_box(acc);
    start.elapsed().as_nanos() as f64 / iterations.max(1) as f64
}

/// Counts and times one decision of ERNet, ECNet, AIC and MDL on an
/// `num_antennas`-element spectrum. The eigendecomposition is excluded from
/// every figure since all four detectors share it.
pub fn bench_complexity(
    num_antennas: usize,
    num_snapshots: usize,
    hidden: (usize, usize),
    iterations: usize,
    seed: u64,
) -> Result<ComplexityReport> {
    if num_antennas < 2 || num_snapshots == 0 {
        return Err(Error::Config("benchmark needs M >= 2 and N >= 1".into()));
    }
    let mut init = rng::stream(seed, Domain::Custom(0xbe9c), 0);
    let mut data_rng = rng::stream(seed, Domain::Custom(0xbe9c), 1);
    let inputs: Vec<Vec<f64>> = (0..64)
        .map(|_| {
            let mut v: Vec<f64> = (0..num_antennas).map(|_| data_rng.random_range(0.01..20.0)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect();

    let classical = count_ops_classical(num_antennas);
    let mut rows = Vec::new();
    for kind in [NetKind::ErNet, NetKind::EcNet] {
        let counts = count_ops_network(kind, num_antennas, hidden, &mut init)?;
        let mut spec = DetectorSpec::new(kind, num_antennas);
        spec.hidden = hidden;
        let det = Detector::new(spec.clone(), build_detector(&spec, &mut init)?)?;
        let ns = time_per_call(iterations, &inputs, |x| det.decide(x).unwrap_or(0));
        rows.push(ComplexityRow {
            detector: kind.name().to_string(),
            closed_form: counts.closed_form,
            instrumented: counts.instrumented,
            ns_per_decision: ns,
        });
    }
    for (criterion, closed, measured) in [
        (Criterion::Aic, classical.aic_closed_form, classical.aic_instrumented),
        (Criterion::Mdl, classical.mdl_closed_form, classical.mdl_instrumented),
    ] {
        let ns = time_per_call(iterations, &inputs, |x| {
            EigenSpectrum::new(x.to_vec(), num_snapshots)
                .and_then(|s| evaluate(&s, criterion))
                .map(|t| t.estimate)
                .unwrap_or(0)
        });
        rows.push(ComplexityRow {
            detector: match criterion {
                Criterion::Aic => "aic",
                Criterion::Mdl => "mdl",
            }
            .to_string(),
            closed_form: closed,
            instrumented: measured,
            ns_per_decision: ns,
        });
    }
    Ok(ComplexityReport {
        num_antennas,
        num_snapshots,
        hidden,
        iterations,
        rows,
    })
}
