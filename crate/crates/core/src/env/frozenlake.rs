//! Slippery Frozen Lake with randomized holes, split into a deterministic
//! movement phase and a stochastic slip phase.
//!
//! Rewards: +1 on the goal, −1/(n·m) on a hole; both end the episode. If the
//! deterministic move already lands on a terminal cell the reward is charged
//! to the deterministic phase and no slip happens.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Action, ActionSpec, ObsVec, Phase, PostDecisionEnv};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrozenLakeConfig {
    pub n: usize,
    pub m: usize,
    pub hole_prob: f64,
    pub p_slip: f64,
    pub episode_cap: usize,
}

impl Default for FrozenLakeConfig {
    fn default() -> Self {
        Self {
            n: 10,
            m: 10,
            hole_prob: 0.8,
            p_slip: 0.5,
            episode_cap: 200,
        }
    }
}

impl FrozenLakeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(Error::Config("frozen lake grid must be at least 2×2".into()));
        }
        if !(0.0..=1.0).contains(&self.hole_prob) || !(0.0..=1.0).contains(&self.p_slip) {
            return Err(Error::Config("hole_prob and p_slip must lie in [0, 1]".into()));
        }
        if self.episode_cap == 0 {
            return Err(Error::Config("episode_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Frozen,
    Hole,
    Start,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    m: usize,
    cells: Vec<Cell>,
}

impl Grid {
    /// Start at (0,0), goal at (n−1,m−1); every other cell is independently a
    /// hole with probability `hole_prob`.
    pub fn generate<R: Rng + ?Sized>(n: usize, m: usize, hole_prob: f64, rng: &mut R) -> Self {
        assert!(n >= 2 && m >= 2, "grid must be at least 2×2");
        let mut cells = Vec::with_capacity(n * m);
        for idx in 0..n * m {
            let cell = if idx == 0 {
                Cell::Start
            } else if idx == n * m - 1 {
                Cell::Goal
            } else if rng.random_bool(hole_prob) {
                Cell::Hole
            } else {
                Cell::Frozen
            };
            cells.push(cell);
        }
        Self { n, m, cells }
    }

    /// Parses rows of `S`, `F`, `H`, `G`.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::Config("ragged grid rows".into()));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    'S' => Cell::Start,
                    'F' => Cell::Frozen,
                    'H' => Cell::Hole,
                    'G' => Cell::Goal,
                    other => return Err(Error::Config(format!("unknown grid cell `{other}`"))),
                });
            }
        }
        let count = |c: Cell| cells.iter().filter(|&&x| x == c).count();
        if n < 2 || m < 2 || count(Cell::Start) != 1 || count(Cell::Goal) != 1 {
            return Err(Error::Config(
                "grid needs at least 2×2 cells, one start and one goal".into(),
            ));
        }
        Ok(Self { n, m, cells })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn cell(&self, pos: (usize, usize)) -> Cell {
        self.cells[pos.0 * self.m + pos.1]
    }

    pub fn start(&self) -> (usize, usize) {
        let idx = self.cells.iter().position(|&c| c == Cell::Start).unwrap();
        (idx / self.m, idx % self.m)
    }

    pub fn hole_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Cell::Hole).count()
    }

    /// Reward charged for landing on `pos`, and whether it ends the episode.
    pub fn landing(&self, pos: (usize, usize)) -> (f64, bool) {
        match self.cell(pos) {
            Cell::Goal => (1.0, true),
            Cell::Hole => (-1.0 / (self.n * self.m) as f64, true),
            Cell::Frozen | Cell::Start => (0.0, false),
        }
    }

    /// Existing 4-neighbours in the order up, down, left, right.
    pub fn neighbors(&self, (r, c): (usize, usize)) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push((r - 1, c));
        }
        if r + 1 < self.n {
            out.push((r + 1, c));
        }
        if c > 0 {
            out.push((r, c - 1));
        }
        if c + 1 < self.m {
            out.push((r, c + 1));
        }
        out
    }
}

/// Movement directions, indexed as in Gym's Frozen Lake.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left = 0,
    Down = 1,
    Right = 2,
    Up = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Left, Move::Down, Move::Right, Move::Up];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidAction(format!("frozen lake action {i} not in 0..4")))
    }
}

/// Agent position after `mv`, clamped to the grid.
pub fn move_deterministic(grid: &Grid, (r, c): (usize, usize), mv: Move) -> (usize, usize) {
    match mv {
        Move::Left => (r, c.saturating_sub(1)),
        Move::Down => ((r + 1).min(grid.rows() - 1), c),
        Move::Right => (r, (c + 1).min(grid.cols() - 1)),
        Move::Up => (r.saturating_sub(1), c),
    }
}

/// Stays put with probability `1 − p_slip`, otherwise moves to a uniformly
/// chosen existing neighbour.
pub fn slip_stochastic<R: Rng + ?Sized>(
    grid: &Grid,
    pos: (usize, usize),
    p_slip: f64,
    rng: &mut R,
) -> (usize, usize) {
    let u: f64 = rng.random();
    if u < p_slip {
        let nbrs = grid.neighbors(pos);
        nbrs[rng.random_range(0..nbrs.len())]
    } else {
        pos
    }
}

/// One-hot position block followed by the hole mask, length 2·n·m.
pub fn encode_observation(grid: &Grid, pos: (usize, usize)) -> ObsVec {
    let cells = grid.rows() * grid.cols();
    let mut v = vec![0.0; 2 * cells];
    v[pos.0 * grid.cols() + pos.1] = 1.0;
    for (i, c) in grid.cells.iter().enumerate() {
        if *c == Cell::Hole {
            v[cells + i] = 1.0;
        }
    }
    ObsVec::from_finite(v)
}

#[derive(Debug, Clone)]
pub struct FrozenLake {
    cfg: FrozenLakeConfig,
    grid: Grid,
    pos: (usize, usize),
    phase: Phase,
    post_terminal: bool,
    steps: usize,
    rng: ChaCha8Rng,
    last_info: BTreeMap<String, f64>,
}

impl FrozenLake {
    /// Builds an environment whose grid is drawn from `grid_seed`.
    pub fn new(cfg: FrozenLakeConfig, grid_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(grid_seed);
        let grid = Grid::generate(cfg.n, cfg.m, cfg.hole_prob, &mut rng);
        Ok(Self::with_grid(cfg, grid))
    }

    pub fn with_grid(mut cfg: FrozenLakeConfig, grid: Grid) -> Self {
        cfg.n = grid.rows();
        cfg.m = grid.cols();
        let pos = grid.start();
        Self {
            cfg,
            grid,
            pos,
            phase: Phase::NeedsReset,
            post_terminal: false,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            last_info: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &FrozenLakeConfig {
        &self.cfg
    }

    pub fn position(&self) -> (usize, usize) {
        self.pos
    }

    /// Places the agent at `pos` in the pre-decision phase. Test hook.
    pub fn set_position(&mut self, pos: (usize, usize)) {
        assert!(pos.0 < self.grid.rows() && pos.1 < self.grid.cols());
        self.pos = pos;
        self.phase = Phase::PreDecision;
        self.post_terminal = false;
    }

    /// Places the agent at `pos` with a pending stochastic phase. Test hook.
    pub fn set_post_decision(&mut self, pos: (usize, usize)) {
        self.set_position(pos);
        self.post_terminal = self.grid.landing(pos).1;
        self.phase = Phase::PostDecision;
    }
}

impl PostDecisionEnv for FrozenLake {
    fn obs_dim(&self) -> usize {
        2 * self.grid.rows() * self.grid.cols()
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Discrete(4)
    }

    fn reset(&mut self, seed: u64) -> ObsVec {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.pos = self.grid.start();
        self.phase = Phase::PreDecision;
        self.post_terminal = false;
        self.steps = 0;
        self.last_info.clear();
        encode_observation(&self.grid, self.pos)
    }

    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)> {
        self.action_spec().validate(action)?;
        self.phase.expect_pre()?;
        let mv = Move::from_index(action.0[0])?;
        self.pos = move_deterministic(&self.grid, self.pos, mv);
        let (reward, terminal) = self.grid.landing(self.pos);
        self.post_terminal = terminal;
        self.phase = Phase::PostDecision;
        Ok((encode_observation(&self.grid, self.pos), reward))
    }

    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)> {
        self.phase.expect_post()?;
        self.steps += 1;
        let (reward, terminal) = if self.post_terminal {
            (0.0, true)
        } else {
            self.pos = slip_stochastic(&self.grid, self.pos, self.cfg.p_slip, &mut self.rng);
            self.grid.landing(self.pos)
        };
        let done = terminal || self.post_terminal || self.steps >= self.cfg.episode_cap;
        self.last_info = BTreeMap::from([
            ("goal".to_string(), f64::from(u8::from(self.grid.cell(self.pos) == Cell::Goal))),
            ("hole".to_string(), f64::from(u8::from(self.grid.cell(self.pos) == Cell::Hole))),
        ]);
        self.phase = if done { Phase::Done } else { Phase::PreDecision };
        Ok((encode_observation(&self.grid, self.pos), reward, done))
    }

    fn info(&self) -> BTreeMap<String, f64> {
        self.last_info.clone()
    }
}
