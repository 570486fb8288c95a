//! Benchmark configuration and box factorization of element counts.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sem_core::KernelVariant;

use crate::error::{BenchError, Result};

/// Element counts of the default sweep.
pub const DEFAULT_SWEEP: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];
pub const DEFAULT_DEGREE: usize = 9;
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;
/// Thirty copies keep consecutive probes at the largest sweep size within a
/// few percent on a shared host; ten is the floor.
pub const DEFAULT_PROBE_REPETITIONS: usize = 30;
pub const DEFAULT_WARMUP_ITERATIONS: usize = 2;
/// Element count used by `bench` and `roofline` when none is given.
pub const DEFAULT_ELEMENTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelection {
    One(KernelVariant),
    All,
}

impl VariantSelection {
    pub fn variants(self) -> Vec<KernelVariant> {
        match self {
            Self::One(v) => vec![v],
            Self::All => KernelVariant::ALL.to_vec(),
        }
    }
}

impl FromStr for VariantSelection {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Self::All);
        }
        s.parse()
            .map(Self::One)
            .map_err(|_| BenchError::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Gnuplot,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "gnuplot" => Ok(Self::Gnuplot),
            _ => Err(BenchError::Config(format!("unknown format `{s}`"))),
        }
    }
}

/// Which flop count the achieved rate is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlopsSource {
    /// `D (12n + 34)` per iteration.
    #[default]
    Model,
    /// Counted flops of the actual iteration.
    Instrumented,
}

impl FlopsSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Instrumented => "instrumented",
        }
    }
}

impl fmt::Display for FlopsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlopsSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(Self::Model),
            "instrumented" => Ok(Self::Instrumented),
            _ => Err(BenchError::Config(format!("unknown flops source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Total element counts to run, in order.
    pub elements: Vec<usize>,
    pub degree: usize,
    pub iterations: usize,
    pub variant: VariantSelection,
    /// Whether the achieved rate is timed over the whole solve (true) or the
    /// solve minus gather-scatter time.
    pub include_dssum: bool,
    pub seed: u64,
    /// 0 selects all available cores.
    pub workers: usize,
    pub flops_source: FlopsSource,
    pub probe_repetitions: usize,
    pub warmup_iterations: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            elements: DEFAULT_SWEEP.to_vec(),
            degree: DEFAULT_DEGREE,
            iterations: DEFAULT_ITERATIONS,
            variant: VariantSelection::All,
            include_dssum: false,
            seed: DEFAULT_SEED,
            workers: 0,
            flops_source: FlopsSource::Model,
            probe_repetitions: DEFAULT_PROBE_REPETITIONS,
            warmup_iterations: DEFAULT_WARMUP_ITERATIONS,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl BenchConfig {
    /// GLL points per direction.
    pub fn n(&self) -> usize {
        self.degree + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 || self.n() > sem_core::basis::MAX_POINTS {
            return Err(BenchError::Config(format!(
                "degree must be in 1..={}, got {}",
                sem_core::basis::MAX_POINTS - 1,
                self.degree
            )));
        }
        if self.iterations < 1 {
            return Err(BenchError::Config("iterations must be at least 1".into()));
        }
        if self.elements.is_empty() || self.elements.contains(&0) {
            return Err(BenchError::Config("element counts must be positive".into()));
        }
        if self.probe_repetitions < crate::probe::MIN_REPETITIONS {
            return Err(BenchError::Config(format!(
                "probe repetitions must be at least {}",
                crate::probe::MIN_REPETITIONS
            )));
        }
        Ok(())
    }
}

/// Splits `elements` into the most cubic box `ex >= ey >= ez`, minimizing
/// `ex - ez`.
pub fn factor_box(elements: usize) -> Result<(usize, usize, usize)> {
    if elements == 0 {
        return Err(BenchError::Config("element count must be positive".into()));
    }
    let mut best = (elements, 1, 1);
    for ez in (1..=elements).take_while(|z| z * z * z <= elements) {
        if !elements.is_multiple_of(ez) {
            continue;
        }
        let rest = elements / ez;
        for ey in (ez..=rest).take_while(|y| y * y <= rest) {
            if !rest.is_multiple_of(ey) {
                continue;
            }
            let ex = rest / ey;
            if ex - ez < best.0 - best.2 {
                best = (ex, ey, ez);
            }
        }
    }
    Ok(best)
}

pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| BenchError::Config(format!("bad element count `{t}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = BenchConfig::default();
        assert_eq!((c.iterations, c.degree, c.n()), (100, 9, 10));
        assert_eq!(c.elements, vec![64, 128, 256, 512, 1024, 2048, 4096]);
        c.validate().unwrap();
    }

    #[test]
    fn near_cubic_boxes() {
        let cases = [
            (64, (4, 4, 4)),
            (128, (8, 4, 4)),
            (256, (8, 8, 4)),
            (512, (8, 8, 8)),
            (1024, (16, 8, 8)),
            (2048, (16, 16, 8)),
            (4096, (16, 16, 16)),
            (448, (8, 8, 7)),
            (3584, (16, 16, 14)),
            (1, (1, 1, 1)),
            (7, (7, 1, 1)),
        ];
        for (e, expect) in cases {
            let b = factor_box(e).unwrap();
            assert_eq!(b, expect, "{e}");
            assert_eq!(b.0 * b.1 * b.2, e);
        }
        assert!(factor_box(0).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_list("448, 896,3584").unwrap(), vec![448, 896, 3584]);
        assert!(parse_list("1,x").is_err());
        assert_eq!("all".parse::<VariantSelection>().unwrap().variants().len(), 3);
        assert_eq!(
            "layered".parse::<VariantSelection>().unwrap(),
            VariantSelection::One(KernelVariant::Layered)
        );
        assert!("fast".parse::<VariantSelection>().is_err());
        assert_eq!("gnuplot".parse::<OutputFormat>().unwrap(), OutputFormat::Gnuplot);
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = BenchConfig {
            degree: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.degree = 16;
        assert!(c.validate().is_err());
        c.degree = 3;
        c.iterations = 0;
        assert!(c.validate().is_err());
        c.iterations = 1;
        c.elements = vec![64, 0];
        assert!(c.validate().is_err());
    }
}
