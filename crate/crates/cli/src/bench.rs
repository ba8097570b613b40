//! Discovery benchmark: naming system versus hand-coded queries.
//!
//! Each mode gets one untimed warm-up call so pooled connections exist before
//! the first sample. In `both` mode the two runs alternate per iteration and
//! every pair of final descriptions must be byte-identical.

use std::fmt;
use std::time::Instant;

use clap::ValueEnum;
use nun_core::fixture::Scenario;
use nun_core::{ResolveError, ResourceDescription};
use thiserror::Error;

use crate::consumer::Consumer;
use crate::manual::{discover, ManualTargets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Nun,
    Manual,
    Both,
}

/// Mean and sample standard deviation in milliseconds; a single sample has
/// deviation zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Stats {
    pub fn from_samples(samples: &[f64]) -> Stats {
        let n = samples.len();
        assert!(n > 0, "no samples");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let sd = if n == 1 {
            0.0
        } else {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Stats { n, mean, sd }
    }
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub scenario: Scenario,
    pub nun: Option<Stats>,
    pub manual: Option<Stats>,
    pub final_description: ResourceDescription,
}

impl BenchReport {
    /// Mean naming-system time over mean manual time.
    pub fn ratio(&self) -> Option<f64> {
        Some(self.nun?.mean / self.manual?.mean)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.scenario.name_text();
        let n = self.scenario.number();
        if let Some(s) = self.nun {
            writeln!(f, "scenario {n} {name} nun     {s} ms (n={})", s.n)?;
        }
        if let Some(s) = self.manual {
            writeln!(f, "scenario {n} {name} manual  {s} ms (n={})", s.n)?;
        }
        if let Some(r) = self.ratio() {
            writeln!(f, "scenario {n} overhead ratio nun/manual {r:.2}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("iteration {iteration}: modes disagree: nun gave {nun:?}, manual gave {manual:?}")]
    Disagreement {
        iteration: usize,
        nun: ResourceDescription,
        manual: ResourceDescription,
    },
    #[error("{mode:?} mode failed: {source}")]
    Resolve {
        mode: Mode,
        #[source]
        source: ResolveError,
    },
    #[error("iterations must be positive")]
    NoIterations,
}

pub struct Bench<'a> {
    pub consumer: &'a Consumer,
    pub targets: &'a ManualTargets,
    pub initial: &'a ResourceDescription,
}

impl Bench<'_> {
    fn nun(&self, scenario: Scenario) -> Result<ResourceDescription, BenchError> {
        self.consumer
            .resolve(self.initial, &scenario.name())
            .map(|r| r.description)
            .map_err(|source| BenchError::Resolve { mode: Mode::Nun, source })
    }

    fn manual(&self, scenario: Scenario) -> Result<ResourceDescription, BenchError> {
        discover(scenario, &self.consumer.pool, self.targets, self.consumer.clock.as_ref()).map_err(|source| {
            BenchError::Resolve {
                mode: Mode::Manual,
                source,
            }
        })
    }

    fn timed(
        &self,
        f: impl Fn(&Self, Scenario) -> Result<ResourceDescription, BenchError>,
        scenario: Scenario,
        samples: &mut Vec<f64>,
    ) -> Result<ResourceDescription, BenchError> {
        let t = Instant::now();
        let d = f(self, scenario)?;
        samples.push(t.elapsed().as_secs_f64() * 1e3);
        Ok(d)
    }

    pub fn run(&self, scenario: Scenario, iterations: usize, mode: Mode) -> Result<BenchReport, BenchError> {
        if iterations == 0 {
            return Err(BenchError::NoIterations);
        }
        let (do_nun, do_manual) = match mode {
            Mode::Nun => (true, false),
            Mode::Manual => (false, true),
            Mode::Both => (true, true),
        };
        if do_nun {
            self.nun(scenario)?;
        }
        if do_manual {
            self.manual(scenario)?;
        }
        let mut nun_ms = Vec::with_capacity(iterations);
        let mut manual_ms = Vec::with_capacity(iterations);
        let mut last = None;
        for i in 0..iterations {
            let (a, b) = if i % 2 == 0 {
                let a = do_nun.then(|| self.timed(Self::nun, scenario, &mut nun_ms)).transpose()?;
                let b = do_manual.then(|| self.timed(Self::manual, scenario, &mut manual_ms)).transpose()?;
                (a, b)
            } else {
                let b = do_manual.then(|| self.timed(Self::manual, scenario, &mut manual_ms)).transpose()?;
                let a = do_nun.then(|| self.timed(Self::nun, scenario, &mut nun_ms)).transpose()?;
                (a, b)
            };
            if let (Some(nun), Some(manual)) = (&a, &b) {
                if nun.to_bytes() != manual.to_bytes() {
                    return Err(BenchError::Disagreement {
                        iteration: i,
                        nun: nun.clone(),
                        manual: manual.clone(),
                    });
                }
            }
            last = a.or(b);
        }
        Ok(BenchReport {
            scenario,
            nun: do_nun.then(|| Stats::from_samples(&nun_ms)),
            manual: do_manual.then(|| Stats::from_samples(&manual_ms)),
            final_description: last.expect("at least one iteration"),
        })
    }
}
