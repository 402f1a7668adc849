//! The mouse-and-cheese grid: a mouse must fetch the cheese and bring it
//! home without entering the fire cell, under a slip model.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{BtError, Command, Environment};
use crate::ltlf::{Alphabet, StateVector};
use crate::mission::{parse_mission, MissionError, MissionExpr};
use crate::planners::Mdp;

/// The fetch-and-return mission over the grid propositions.
pub const C2H_MISSION: &str = "\
task(cheese, post=Cheese, pre=True, gc=!Fire, tc=True, action=cheese);
task(home, post=Home, pre=Cheese, gc=!Fire, tc=True, action=home);
U (F cheese) (F home)
";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("cell ({0}, {1}) is outside the grid")]
    OutOfBounds(usize, usize),
    #[error("cheese, fire and home cells must be distinct")]
    OverlappingCells,
    #[error("p_in must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
}

/// 1-based grid coordinates; `x` is the column, `y` the row from the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    /// Also the tie-break order of the planners.
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> GridAction {
        GridAction::ALL[i]
    }

    /// The two right-angle slip directions.
    pub fn perpendicular(self) -> [GridAction; 2] {
        match self {
            GridAction::Up | GridAction::Down => [GridAction::Left, GridAction::Right],
            GridAction::Left | GridAction::Right => [GridAction::Up, GridAction::Down],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rewards {
    pub other: f64,
    pub good: f64,
    pub fire: f64,
}

/// Which goal the mouse is pursuing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Cheese,
    Home,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub cheese: Cell,
    pub fire: Cell,
    pub home: Cell,
    pub start: Cell,
    pub p_in: f64,
    pub rewards: Rewards,
    /// Treat goal and fire cells as absorbing in the planning model.
    pub absorbing: bool,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            width: 4,
            height: 4,
            cheese: Cell::new(4, 4),
            fire: Cell::new(4, 2),
            home: Cell::new(3, 1),
            start: Cell::new(3, 1),
            p_in: 0.8,
            rewards: Rewards {
                other: -0.04,
                good: 1.0,
                fire: -1.0,
            },
            absorbing: true,
            seed: 0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), GridError> {
        for c in [self.cheese, self.fire, self.home, self.start] {
            if !self.contains(c) {
                return Err(GridError::OutOfBounds(c.x, c.y));
            }
        }
        if self.cheese == self.fire || self.cheese == self.home || self.fire == self.home {
            return Err(GridError::OverlappingCells);
        }
        if !(0.0..=1.0).contains(&self.p_in) {
            return Err(GridError::InvalidProbability(self.p_in));
        }
        Ok(())
    }

    pub fn contains(&self, c: Cell) -> bool {
        (1..=self.width).contains(&c.x) && (1..=self.height).contains(&c.y)
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    /// Column-major index, matching the order of the cell propositions.
    pub fn cell_index(&self, c: Cell) -> usize {
        (c.x - 1) * self.height + (c.y - 1)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.height + 1, index % self.height + 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_cells()).map(|i| self.cell_at(i))
    }

    /// Where `action` leads from `c` if it is carried out; walls stop the move.
    pub fn neighbor(&self, c: Cell, action: GridAction) -> Cell {
        let next = match action {
            GridAction::Up => Cell::new(c.x, c.y + 1),
            GridAction::Down => Cell::new(c.x, c.y.wrapping_sub(1)),
            GridAction::Left => Cell::new(c.x.wrapping_sub(1), c.y),
            GridAction::Right => Cell::new(c.x + 1, c.y),
        };
        if self.contains(next) {
            next
        } else {
            c
        }
    }

    /// Probability of each realized direction given the intended one.
    pub fn slip_distribution(&self, action: GridAction) -> [(GridAction, f64); 3] {
        let side = (1.0 - self.p_in) / 2.0;
        let [a, b] = action.perpendicular();
        [(action, self.p_in), (a, side), (b, side)]
    }

    pub fn goal_cell(&self, phase: Phase) -> Cell {
        match phase {
            Phase::Cheese => self.cheese,
            Phase::Home => self.home,
        }
    }

    /// Atom names: one per cell (`A_x_y`, column-major), then Cheese, Fire, Home.
    pub fn alphabet(&self) -> Alphabet {
        let mut names: Vec<String> = self.cells().map(|c| format!("A_{}_{}", c.x, c.y)).collect();
        names.extend(["Cheese", "Fire", "Home"].map(String::from));
        Alphabet::new(names).expect("grid atom names are valid")
    }

    /// Reward for arriving in `state` while pursuing `phase`.
    pub fn reward(&self, state: &GridState, phase: Phase) -> f64 {
        if state.mouse == self.fire {
            return self.rewards.fire;
        }
        let reached = match phase {
            Phase::Cheese => state.mouse == self.cheese,
            Phase::Home => state.mouse == self.home && state.has_cheese,
        };
        if reached {
            self.rewards.good
        } else {
            self.rewards.other
        }
    }

    /// Exact transition model of one phase. With `absorbing` set, the goal
    /// and fire cells loop on themselves with zero reward.
    pub fn analytic_mdp(&self, phase: Phase) -> Mdp {
        let n = self.n_cells();
        let mut mdp = Mdp::new(n, 4);
        let goal = self.goal_cell(phase);
        for s in 0..n {
            let cell = self.cell_at(s);
            let terminal = self.absorbing && (cell == goal || cell == self.fire);
            for action in GridAction::ALL {
                let a = action.index();
                if terminal {
                    mdp.set_transition(s, a, s, 1.0);
                    continue;
                }
                let mut expected = 0.0;
                for (dir, p) in self.slip_distribution(action) {
                    let next = self.neighbor(cell, dir);
                    mdp.add_transition(s, a, self.cell_index(next), p);
                    let arrived = GridState {
                        mouse: next,
                        has_cheese: phase == Phase::Home,
                    };
                    expected += p * self.reward(&arrived, phase);
                }
                mdp.set_reward(s, a, expected);
            }
        }
        mdp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridState {
    pub mouse: Cell,
    pub has_cheese: bool,
}

impl GridState {
    pub fn at(cfg: &GridConfig, mouse: Cell) -> Self {
        GridState {
            mouse,
            has_cheese: mouse == cfg.cheese,
        }
    }
}

/// Direction actually taken when `action` is intended.
pub fn realized_direction<R: Rng>(cfg: &GridConfig, action: GridAction, rng: &mut R) -> GridAction {
    let u: f64 = rng.random();
    let [a, b] = action.perpendicular();
    let side = (1.0 - cfg.p_in) / 2.0;
    if u < cfg.p_in {
        action
    } else if u < cfg.p_in + side {
        a
    } else {
        b
    }
}

/// One slip-model transition. The cheese is picked up on entering its cell
/// and never dropped.
pub fn step<R: Rng>(
    cfg: &GridConfig,
    state: &GridState,
    action: GridAction,
    rng: &mut R,
) -> (GridState, GridAction) {
    let dir = realized_direction(cfg, action, rng);
    let mouse = cfg.neighbor(state.mouse, dir);
    let next = GridState {
        mouse,
        has_cheese: state.has_cheese || mouse == cfg.cheese,
    };
    (next, dir)
}

pub fn propositions(cfg: &GridConfig, alphabet: &Arc<Alphabet>, state: &GridState) -> StateVector {
    let n = cfg.n_cells();
    let mut values = vec![false; n + 3];
    values[cfg.cell_index(state.mouse)] = true;
    values[n] = state.has_cheese;
    values[n + 1] = state.mouse == cfg.fire;
    values[n + 2] = state.mouse == cfg.home;
    StateVector::from_values(alphabet.clone(), values).expect("alphabet matches grid")
}

/// The fetch-and-return mission over `cfg`'s propositions.
pub fn c2h_mission(cfg: &GridConfig) -> Result<MissionExpr, MissionError> {
    parse_mission(C2H_MISSION, &cfg.alphabet())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub tick: u64,
    pub cell: Cell,
    pub action: Option<GridAction>,
    pub realized: Option<GridAction>,
    pub reward: f64,
    pub propositions: String,
}

/// Grid environment with a seeded generator. Only one action may move the
/// mouse per step; a step without commands leaves it in place.
#[derive(Debug, Clone)]
pub struct GridEnv {
    cfg: GridConfig,
    alphabet: Arc<Alphabet>,
    state: GridState,
    rng: ChaCha8Rng,
    tick: u64,
    record: bool,
    trajectory: Vec<StepRecord>,
}

impl GridEnv {
    pub fn new(cfg: GridConfig) -> Result<Self, GridError> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self::with_rng(cfg, rng))
    }

    /// Environment drawing slips from `rng`, starting at `cfg.start`.
    pub fn with_rng(cfg: GridConfig, rng: ChaCha8Rng) -> Self {
        GridEnv {
            alphabet: Arc::new(cfg.alphabet()),
            state: GridState::at(&cfg, cfg.start),
            cfg,
            rng,
            tick: 0,
            record: false,
            trajectory: Vec::new(),
        }
    }

    /// Keeps a per-step trajectory for CSV dumps.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn state(&self) -> GridState {
        self.state
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Puts the mouse at `cell` for a new episode.
    pub fn reset_to(&mut self, cell: Cell) {
        self.state = GridState::at(&self.cfg, cell);
        self.tick = 0;
        self.trajectory.clear();
    }

    /// Puts the mouse on a uniformly drawn cell other than the fire cell.
    pub fn reset_random(&mut self) {
        let cells: Vec<Cell> = self.cfg.cells().filter(|c| *c != self.cfg.fire).collect();
        let cell = cells[self.rng.random_range(0..cells.len())];
        self.reset_to(cell);
    }

    pub fn trajectory(&self) -> &[StepRecord] {
        &self.trajectory
    }

    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("tick,cell,action,realized,reward,propositions\n");
        for r in &self.trajectory {
            let name = |a: Option<GridAction>| a.map(|a| format!("{a:?}")).unwrap_or_default();
            out.push_str(&format!(
                "{},({} {}),{},{},{},{}\n",
                r.tick,
                r.cell.x,
                r.cell.y,
                name(r.action),
                name(r.realized),
                r.reward,
                r.propositions
            ));
        }
        out
    }
}

impl Environment for GridEnv {
    fn observe(&self) -> StateVector {
        propositions(&self.cfg, &self.alphabet, &self.state)
    }

    fn state_key(&self) -> u64 {
        self.cfg.cell_index(self.state.mouse) as u64
    }

    fn apply(&mut self, commands: &[Command]) -> Result<(), BtError> {
        let phase = if self.state.has_cheese {
            Phase::Home
        } else {
            Phase::Cheese
        };
        let (action, realized) = match commands.first() {
            Some(cmd) => {
                if cmd.choice >= 4 {
                    return Err(BtError::Environment(format!(
                        "grid has 4 actions, got choice {}",
                        cmd.choice
                    )));
                }
                let action = GridAction::from_index(cmd.choice);
                let (next, dir) = step(&self.cfg, &self.state, action, &mut self.rng);
                self.state = next;
                (Some(action), Some(dir))
            }
            None => (None, None),
        };
        if self.record {
            let props = self.observe().true_atoms().join(" ");
            self.trajectory.push(StepRecord {
                tick: self.tick,
                cell: self.state.mouse,
                action,
                realized,
                reward: self.cfg.reward(&self.state, phase),
                propositions: props,
            });
        }
        self.tick += 1;
        Ok(())
    }
}
