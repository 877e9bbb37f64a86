//! Independent closed-loop runs across strategies, seeds and systems.
//!
//! A single run is inherently sequential; a batch is embarrassingly
//! parallel. Each job clones its schedule, so jobs share nothing mutable and
//! results do not depend on the executor.

use crate::controller::ControlSchedule;
use crate::error::Result;
use crate::par::{self, Execution};
use crate::simulator::{run_closed_loop, SimulationTrace, UncontrolledStrategy};
use crate::system::ControlSystem;

#[derive(Debug, Clone)]
pub struct BatchJob<'a> {
    pub system: &'a ControlSystem,
    pub schedule: &'a ControlSchedule,
    pub strategy: UncontrolledStrategy,
    pub steps_per_interval: usize,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// The schedule with the inputs realized in this run.
    pub schedule: ControlSchedule,
    pub trace: SimulationTrace,
}

fn run_one(job: &BatchJob<'_>) -> Result<BatchOutcome> {
    let mut schedule = job.schedule.clone();
    let trace = run_closed_loop(job.system, &mut schedule, &job.strategy, job.steps_per_interval)?;
    Ok(BatchOutcome { schedule, trace })
}

/// Results in job order.
pub fn run_batch_with(exec: Execution, jobs: &[BatchJob<'_>]) -> Vec<Result<BatchOutcome>> {
    par::map_slice_with(exec, jobs, run_one)
}

pub fn run_batch(jobs: &[BatchJob<'_>]) -> Vec<Result<BatchOutcome>> {
    run_batch_with(Execution::default(), jobs)
}
