//! Time loop of the fractional-step scheme.
//!
//! Step `k` minimizes over `(u, π)` at the damage of step `k - 1`, then
//! over `ζ` at the new `(u, π)`, and records energies, cumulative
//! dissipation and the maximum-dissipation residuum.

use serde::{Deserialize, Serialize};

use crate::damage::{solve_damage, DamageOptions};
use crate::diagnostics::{amdp_step_residuum, average_von_mises, step_balance, AmdpHistory, AmdpRecord, StepBalance};
use crate::error::Result;
use crate::fields::{Model, State};
use crate::plastic::{solve_plastic, PlasticOptions, PlasticStepReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub plastic: PlasticOptions,
    pub damage: DamageOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `∫ |dev σ_el| dx`, N.
    pub avg_von_mises: f64,
    pub energy: f64,
    pub diss_plast_step: f64,
    pub diss_dam_step: f64,
    pub diss_plast_cum: f64,
    pub diss_dam_cum: f64,
    pub amdp_step: f64,
    pub amdp_cum: f64,
    pub balance: StepBalance,
    pub plastic: PlasticStepReport,
    pub damage_iterations: usize,
    pub damage_kkt_residual: f64,
}

impl StepRecord {
    /// Cumulative residuum over cumulative dissipation.
    pub fn amdp_ratio(&self) -> f64 {
        let diss = self.diss_plast_cum + self.diss_dam_cum;
        if diss == 0.0 {
            0.0
        } else {
            self.amdp_cum / diss
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub records: Vec<StepRecord>,
}

impl TimeSeries {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Everything produced by one step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub record: StepRecord,
    pub amdp: AmdpRecord,
    /// Box multiplier of the damage step.
    pub xi_const: Vec<f64>,
}

/// Stepwise driver; owns the state between steps.
#[derive(Clone, Debug)]
pub struct Simulation {
    model: Model,
    opts: SolverOptions,
    n_steps: usize,
    k: usize,
    state: State,
    zeta_before_prev: Vec<f64>,
    prev_xi_const: Option<Vec<f64>>,
    series: TimeSeries,
}

impl Simulation {
    /// Starts from the undeformed, virgin, intact state.
    pub fn new(model: Model, opts: SolverOptions) -> Result<Simulation> {
        let state = State::virgin(&model.mesh);
        Simulation::from_state(model, opts, state)
    }

    pub fn from_state(model: Model, opts: SolverOptions, state: State) -> Result<Simulation> {
        state.validate(&model.mesh)?;
        let n_steps = model.load.n_steps()?;
        Ok(Simulation {
            zeta_before_prev: state.zeta.clone(),
            model,
            opts,
            n_steps,
            k: 0,
            state,
            prev_xi_const: None,
            series: TimeSeries::default(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_parts(self) -> (TimeSeries, State) {
        (self.series, self.state)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn steps_done(&self) -> usize {
        self.k
    }

    pub fn finished(&self) -> bool {
        self.k >= self.n_steps
    }

    /// Performs the next step; the state is left untouched on error.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let model = &self.model;
        let load = &model.load;
        let k = self.k + 1;
        let t_prev = load.time(k - 1, self.n_steps);
        let t = load.time(k, self.n_steps);
        let prev = &self.state;

        let (u, pi, plastic) =
            solve_plastic(model, prev, &prev.zeta, t_prev, t, &self.opts.plastic)?;
        let dam = solve_damage(model, &u, &pi, &prev.zeta, &self.opts.damage)?;
        let next = State {
            u,
            pi,
            zeta: dam.zeta.clone(),
        };

        let balance = step_balance(model, prev, t_prev, &next, t)?;
        let cum_before = self.series.last().map_or(0.0, |r| r.amdp_cum);
        let history = AmdpHistory {
            zeta_before_prev: &self.zeta_before_prev,
            prev,
            prev_xi_const: self.prev_xi_const.as_deref(),
        };
        let amdp = amdp_step_residuum(model, k, history, &next, cum_before)?;
        let (plast_cum, dam_cum) = self
            .series
            .last()
            .map_or((0.0, 0.0), |r| (r.diss_plast_cum, r.diss_dam_cum));
        let record = StepRecord {
            step: k,
            t,
            avg_von_mises: average_von_mises(model, &next),
            energy: model.total_energy(&next)?,
            diss_plast_step: plastic.dissipated_plastic,
            diss_dam_step: dam.dissipated,
            diss_plast_cum: plast_cum + plastic.dissipated_plastic,
            diss_dam_cum: dam_cum + dam.dissipated,
            amdp_step: amdp.integral,
            amdp_cum: amdp.cumulative,
            balance,
            plastic,
            damage_iterations: dam.iterations,
            damage_kkt_residual: dam.kkt_residual,
        };

        let old = std::mem::replace(&mut self.state, next);
        self.zeta_before_prev = old.zeta;
        self.prev_xi_const = Some(dam.xi_const.clone());
        self.k = k;
        self.series.records.push(record);
        Ok(StepOutcome {
            record,
            amdp,
            xi_const: dam.xi_const,
        })
    }
}

/// Runs the whole load program, calling `observe` after every step.
pub fn run_with<F>(model: Model, opts: SolverOptions, mut observe: F) -> Result<(TimeSeries, State)>
where
    F: FnMut(&StepOutcome, &State) -> Result<()>,
{
    let mut sim = Simulation::new(model, opts)?;
    while !sim.finished() {
        let out = sim.step()?;
        observe(&out, sim.state())?;
    }
    Ok(sim.into_parts())
}

pub fn run(model: Model, opts: SolverOptions) -> Result<(TimeSeries, State)> {
    run_with(model, opts, |_, _| Ok(()))
}
