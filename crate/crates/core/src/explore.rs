//! Baseline place-and-route and the random shift exploration loop.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acsim::{ac_sweep, SimError, SimulationTrace};
use crate::geometry::{build_tiles, Direction, InternalRepresentation, Layout, Point, Rect, ShiftError, DEFAULT_SHIFT_NM};
use crate::metrics::{area_um2, bbox_area_um2, pscore, MetricsError, QoS};
use crate::netlist::{Circuit, ConcreteNetlist, Testbench};
use crate::par::{map_indexed, with_workers, Parallelism};
use crate::pex::{annotate, extract_parasitics, PexOptions};
use crate::placer::{anneal, AnnealSchedule, Packer};
use crate::router::{route_all, RouteError, RouterConfig};
use crate::tech::TechnologyCard;
use crate::verify::check_layout;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    /// Successful variants per netlist.
    pub variants: usize,
    pub max_retries: usize,
    pub seed: u64,
    pub shift: i64,
    pub anneal: AnnealSchedule,
    pub router: RouterConfig,
    pub pex: PexOptions,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            variants: 100,
            max_retries: 32,
            seed: 0,
            shift: DEFAULT_SHIFT_NM,
            anneal: AnnealSchedule::default(),
            router: RouterConfig::default(),
            pex: PexOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.variants == 0 {
            return Err("variants must be at least 1".into());
        }
        if self.max_retries == 0 {
            return Err("max_retries must be at least 1".into());
        }
        if self.shift <= 0 {
            return Err("shift must be positive".into());
        }
        self.anneal.validate()
    }
}

/// Why a candidate layout was rejected.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Failure {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("{0} DRC violations")]
    Drc(usize),
    #[error("LVS mismatch: {0}")]
    Lvs(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("netlist {netlist}: pre-layout simulation failed: {source}")]
    PreSim { netlist: usize, source: SimError },
    #[error("netlist {netlist}: baseline rejected: {failure}")]
    Baseline { netlist: usize, failure: Failure },
    #[error("netlist {netlist}: iteration {iteration} failed {retries} times; {} variants kept", partial.len())]
    RetriesExhausted {
        netlist: usize,
        iteration: usize,
        retries: usize,
        partial: Vec<Variant>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// One validated layout with its report.
#[derive(Debug, Clone)]
pub struct Variant {
    pub ir: InternalRepresentation,
    pub layout: Layout,
    pub qos: QoS,
    pub post: SimulationTrace,
}

/// Progress of an exploration loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Accept { netlist: usize, variant: usize, pscore: f64, area: f64 },
    Revert { netlist: usize, variant: usize, attempt: usize, reason: String },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Accept { netlist, variant, pscore, area } => {
                write!(f, "netlist={netlist} variant={variant} accept pscore={pscore:.6e} area={area:.4}")
            }
            Event::Revert { netlist, variant, attempt, reason } => {
                write!(f, "netlist={netlist} variant={variant} revert attempt={attempt} reason={reason}")
            }
        }
    }
}

/// Everything needed to turn a placement into a validated variant. The
/// pre-layout trace and the die are fixed per netlist.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub netlist: usize,
    pub circuit: Circuit,
    pub tb: Testbench,
    pub tech: TechnologyCard,
    pub cfg: ExplorationConfig,
    pub die: Rect,
    pub pre: SimulationTrace,
}

impl Evaluator {
    /// Route, check, extract and simulate one placement.
    pub fn evaluate(&self, ir: &InternalRepresentation, variant: usize) -> Result<Variant, Failure> {
        let start = Instant::now();
        let layout = route_all(&ir.tiles, &self.circuit, self.die, &self.tech, &self.cfg.router)?;
        let check = check_layout(&layout, &self.circuit, &self.tech);
        if !check.drc_clean() {
            return Err(Failure::Drc(check.violations.len()));
        }
        if !check.lvs.pass {
            return Err(Failure::Lvs(check.lvs.to_string().trim().replace('\n', "; ")));
        }
        let pn = extract_parasitics(&layout, &self.circuit, &self.tech, &self.cfg.pex);
        let post_circuit = annotate(&self.circuit, &pn);
        let post = ac_sweep(&post_circuit, &self.tb, &self.tech, self.cfg.parallelism)?;
        let qos = QoS {
            netlist: self.netlist,
            variant,
            pscore: pscore(&self.pre, &post)?,
            area: area_um2(&ir.tiles),
            bbox_area: bbox_area_um2(&ir.tiles),
            drc_clean: true,
            lvs_pass: true,
            moves: ir.moves.len(),
            elapsed: start.elapsed().as_secs_f64(),
        };
        Ok(Variant {
            ir: ir.clone(),
            layout,
            qos,
            post,
        })
    }
}

/// Places a netlist by annealing, with the die fixed to the halo box plus
/// two routing tracks on each side.
pub fn place(circuit: &Circuit, tech: &TechnologyCard, schedule: &AnnealSchedule) -> (Vec<crate::geometry::ComponentTile>, Rect) {
    let tiles = build_tiles(circuit, tech);
    let margin = tech.halo_margin();
    let edge = 2 * tech.wire_pitch;
    let packer = Packer::new(&tiles, margin, tech.wire_pitch, Point::new(edge, edge));
    let nets: Vec<Vec<(usize, usize)>> = circuit.net_terminals().into_values().collect();
    let placed = anneal(&packer, &nets, schedule).tiles;
    let halo = crate::geometry::bounding_box(placed.iter().map(|t| &t.rect))
        .unwrap_or_default()
        .expand(margin);
    let die = Rect::new(0, 0, halo.ur.x + edge, halo.ur.y + edge);
    (placed, die)
}

/// Full flow for one netlist: placement, routing, validation, extraction
/// and simulation. Returns the evaluator for later variants and the
/// baseline itself (variant index 0).
pub fn baseline_pnr(
    netlist: usize,
    circuit: &Circuit,
    tb: &Testbench,
    tech: &TechnologyCard,
    cfg: &ExplorationConfig,
) -> Result<(Evaluator, Variant), ExploreError> {
    cfg.validate().map_err(ExploreError::Config)?;
    let pre = ac_sweep(circuit, tb, tech, cfg.parallelism)
        .map_err(|source| ExploreError::PreSim { netlist, source })?;
    let (tiles, die) = place(circuit, tech, &cfg.anneal);
    let ir = InternalRepresentation::new(netlist, tiles, tech.halo_margin());
    let ev = Evaluator {
        netlist,
        circuit: circuit.clone(),
        tb: tb.clone(),
        tech: tech.clone(),
        cfg: cfg.clone(),
        die,
        pre,
    };
    let base = ev
        .evaluate(&ir, 0)
        .map_err(|failure| ExploreError::Baseline { netlist, failure })?;
    Ok((ev, base))
}

/// Random number stream for one netlist of a seeded campaign.
pub fn netlist_rng(seed: u64, netlist: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(netlist as u64);
    rng
}

/// Chains `cfg.variants` successful random shifts starting from `baseline`.
/// A rejected shift is reverted and resampled up to `max_retries` times.
pub fn random_explore(
    ev: &Evaluator,
    baseline: &Variant,
    rng: &mut impl Rng,
    on_event: &(dyn Fn(&Event) + Sync),
) -> Result<Vec<Variant>, ExploreError> {
    let n = ev.cfg.variants;
    let mut out: Vec<Variant> = Vec::with_capacity(n);
    let mut current = baseline.ir.clone();
    for j in 1..=n {
        let mut accepted = None;
        for attempt in 1..=ev.cfg.max_retries {
            let c = rng.gen_range(0..current.tiles.len());
            let d = Direction::ALL[rng.gen_range(0..4)];
            let name = current.tiles[c].name.clone();
            let result = current
                .shift_component(&name, d, ev.cfg.shift)
                .map_err(Failure::from)
                .and_then(|next| ev.evaluate(&next, j));
            match result {
                Ok(v) => {
                    accepted = Some(v);
                    break;
                }
                Err(f) => on_event(&Event::Revert {
                    netlist: ev.netlist,
                    variant: j,
                    attempt,
                    reason: f.to_string(),
                }),
            }
        }
        let Some(v) = accepted else {
            return Err(ExploreError::RetriesExhausted {
                netlist: ev.netlist,
                iteration: j,
                retries: ev.cfg.max_retries,
                partial: out,
            });
        };
        on_event(&Event::Accept {
            netlist: ev.netlist,
            variant: j,
            pscore: v.qos.pscore,
            area: v.qos.area,
        });
        current = v.ir.clone();
        out.push(v);
    }
    Ok(out)
}

/// Result of exploring one netlist.
#[derive(Debug)]
pub struct NetlistRun {
    pub netlist: ConcreteNetlist,
    pub baseline: Option<Variant>,
    /// Pre-layout trace; absent when the netlist failed to simulate.
    pub pre: Option<SimulationTrace>,
    pub variants: Vec<Variant>,
    pub error: Option<String>,
}

/// Baseline plus random exploration of one netlist. Partial output is kept
/// when an iteration exhausts its retries.
pub fn explore_netlist(
    netlist: &ConcreteNetlist,
    tb: &Testbench,
    tech: &TechnologyCard,
    cfg: &ExplorationConfig,
    on_event: &(dyn Fn(&Event) + Sync),
) -> NetlistRun {
    let mut run = NetlistRun {
        netlist: netlist.clone(),
        baseline: None,
        pre: None,
        variants: Vec::new(),
        error: None,
    };
    let (ev, base) = match baseline_pnr(netlist.index, &netlist.circuit, tb, tech, cfg) {
        Ok(x) => x,
        Err(e) => {
            run.error = Some(e.to_string());
            return run;
        }
    };
    run.pre = Some(ev.pre.clone());
    let mut rng = netlist_rng(cfg.seed, netlist.index);
    match random_explore(&ev, &base, &mut rng, on_event) {
        Ok(v) => run.variants = v,
        Err(ExploreError::RetriesExhausted { partial, netlist, iteration, retries }) => {
            run.error = Some(format!(
                "netlist {netlist}: iteration {iteration} failed {retries} times"
            ));
            run.variants = partial;
        }
        Err(e) => run.error = Some(e.to_string()),
    }
    run.baseline = Some(base);
    run
}

/// Explores every netlist, `workers` at a time, handing each finished run
/// to `sink` in completion order. Returns the runs' outcomes in input order.
pub fn random_campaign<T: Send>(
    netlists: &[ConcreteNetlist],
    tb: &Testbench,
    tech: &TechnologyCard,
    cfg: &ExplorationConfig,
    workers: usize,
    on_event: &(dyn Fn(&Event) + Sync),
    sink: &(dyn Fn(NetlistRun) -> T + Sync),
) -> Vec<T> {
    let par = if workers > 1 { Parallelism::Parallel } else { Parallelism::Sequential };
    with_workers(workers, || {
        map_indexed(par, netlists.len(), |i| sink(explore_netlist(&netlists[i], tb, tech, cfg, on_event)))
    })
}
