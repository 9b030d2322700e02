//! Parallel execution of a [`SweepSpec`].

use std::time::Instant;

use rayon::prelude::*;

use super::config::{ScenarioInstance, SweepSpec};
use crate::baselines::{self, MethodId};
use crate::channel::{self, Scenario};
use crate::decoupling;
use crate::elementwise::OptimizeOutcome;
use crate::Error;

/// One CSV row. `array_gain` is `None` when the evaluation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub scenario_id: usize,
    pub method: MethodId,
    pub n: usize,
    pub spacing: f64,
    pub alpha_tx: f64,
    pub alpha_rx: f64,
    pub gamma_loss: f64,
    /// Sweep number for iterative methods (0 is the starting point), -1 otherwise.
    pub sweep_index: i64,
    pub array_gain: Option<f64>,
    pub wall_time_s: f64,
    pub flags: Vec<String>,
}

impl SweepRecord {
    fn new(inst: &ScenarioInstance, method: MethodId) -> Self {
        let s = &inst.scenario;
        SweepRecord {
            scenario_id: inst.id,
            method,
            n: s.n,
            spacing: s.spacing,
            alpha_tx: s.alpha_tx,
            alpha_rx: s.alpha_rx,
            gamma_loss: s.gamma_loss,
            sweep_index: -1,
            array_gain: None,
            wall_time_s: 0.0,
            flags: Vec::new(),
        }
    }

    /// `10 log10(gain)`, absent for missing or nonpositive gains.
    pub fn array_gain_db(&self) -> Option<f64> {
        self.array_gain.filter(|&g| g > 0.0).map(|g| 10.0 * g.log10())
    }

    pub fn is_error(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("error="))
    }

    fn sort_key(&self) -> (usize, MethodId, i64) {
        (self.scenario_id, self.method, self.sweep_index)
    }
}

/// Array gain after every single element update of an iterative method.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementRecord {
    pub scenario_id: usize,
    pub method: MethodId,
    /// 0 is the starting point, then one per element update.
    pub update_index: usize,
    pub sweep_index: usize,
    /// Element updated to reach this point, `None` for the starting point.
    pub element: Option<usize>,
    pub array_gain: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker count; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub trace_elements: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub element_records: Vec<ElementRecord>,
}

impl SweepOutput {
    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_error()).count()
    }
}

/// Evaluate every (scenario, method) pair. Numerical failures are recorded
/// in the flags of the affected row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<SweepOutput, rayon::ThreadPoolBuildError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build()?;
    let jobs: Vec<(ScenarioInstance, MethodId)> = spec
        .scenarios()
        .into_iter()
        .flat_map(|inst| spec.methods.iter().map(move |&m| (inst.clone(), m)))
        .collect();
    let parts: Vec<SweepOutput> = pool.install(|| {
        jobs.par_iter()
            .map(|(inst, m)| run_one(spec, inst, *m, opts.trace_elements))
            .collect()
    });
    let mut out = SweepOutput::default();
    for p in parts {
        out.records.extend(p.records);
        out.element_records.extend(p.element_records);
    }
    out.records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out.element_records
        .sort_by_key(|r| (r.scenario_id, r.method, r.update_index));
    Ok(out)
}

fn run_one(spec: &SweepSpec, inst: &ScenarioInstance, method: MethodId, trace: bool) -> SweepOutput {
    let start = Instant::now();
    let s = &inst.scenario;
    let closed = |gain: crate::Result<(f64, usize)>| {
        let mut rec = SweepRecord::new(inst, method);
        match gain {
            Ok((g, floored)) => {
                rec.array_gain = Some(g);
                if floored > 0 {
                    rec.flags.push(format!("floored={floored}"));
                }
            }
            Err(e) => rec.flags.push(error_flag(&e)),
        }
        rec.wall_time_s = start.elapsed().as_secs_f64();
        SweepOutput {
            records: vec![rec],
            element_records: Vec::new(),
        }
    };
    match method {
        MethodId::Decoupled => closed(decoupling::array_gain(s, &spec.gain).map(|g| (g.gain, g.floored))),
        MethodId::NoCoupling => closed(baselines::no_coupling_gain(s).map(|g| (g, 0))),
        MethodId::IgnoreMC => closed(baselines::ignore_mc_gain(s).map(|g| (g, 0))),
        MethodId::GridOracle => closed(grid_gain(s, spec.grid_points)),
        MethodId::ElementWise | MethodId::ElementWiseNaive => {
            let naive = method == MethodId::ElementWiseNaive;
            match baselines::elementwise_run(s, &spec.optimizer, naive) {
                Ok(outcome) => iterative_records(inst, method, &outcome, trace),
                Err(e) => {
                    let mut rec = SweepRecord::new(inst, method);
                    rec.sweep_index = 0;
                    rec.flags.push(error_flag(&e));
                    rec.wall_time_s = start.elapsed().as_secs_f64();
                    SweepOutput {
                        records: vec![rec],
                        element_records: Vec::new(),
                    }
                }
            }
        }
    }
}

fn grid_gain(s: &Scenario, points: usize) -> crate::Result<(f64, usize)> {
    let eff = decoupling::effective_channel(&channel::build_los_scenario(s)?)?;
    let grid = baselines::grid_search_phase(&eff, points)?;
    Ok((grid.gain / channel::single_element_gain(s), eff.floored))
}

fn iterative_records(
    inst: &ScenarioInstance,
    method: MethodId,
    outcome: &OptimizeOutcome,
    trace: bool,
) -> SweepOutput {
    let norm = channel::single_element_gain(&inst.scenario);
    let last = outcome.sweep_objectives.len() - 1;
    let records = outcome
        .sweep_objectives
        .iter()
        .zip(&outcome.sweep_seconds)
        .enumerate()
        .map(|(k, (&value, &secs))| {
            let mut rec = SweepRecord::new(inst, method);
            rec.sweep_index = k as i64;
            rec.array_gain = Some(value / norm);
            rec.wall_time_s = secs;
            if k == last {
                if outcome.saturations > 0 {
                    rec.flags.push(format!("saturated={}", outcome.saturations));
                }
                if !outcome.converged {
                    rec.flags.push("not-converged".into());
                }
            }
            rec
        })
        .collect();
    let n = inst.scenario.n;
    let element_records = if trace {
        outcome
            .trace
            .iter()
            .enumerate()
            .map(|(i, &value)| ElementRecord {
                scenario_id: inst.id,
                method,
                update_index: i,
                sweep_index: if i == 0 { 0 } else { (i - 1) / n + 1 },
                element: i.checked_sub(1).map(|u| u % n),
                array_gain: value / norm,
            })
            .collect()
    } else {
        Vec::new()
    };
    SweepOutput {
        records,
        element_records,
    }
}

fn error_flag(e: &Error) -> String {
    format!("error={}", e.kind())
}
