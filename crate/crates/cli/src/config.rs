//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use approachlab::engine::VectorGame;
use approachlab::geometry::{ConvexTarget, Grid, MixedAction, Sign};
use approachlab::zerosum::ScalarGame;
use approachlab::{Error, Result};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Approachability,
    Regret,
    Calibration,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Approachability => "approachability",
            Suite::Regret => "regret",
            Suite::Calibration => "calibration",
        }
    }
}

/// A payoff tensor given inline or read from a JSON file holding the same object.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Inline(InlineGame),
    File { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineGame {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "one")]
    pub dim: usize,
    /// Row-major over `(a, b)`, then payoff coordinates.
    pub payoffs: Vec<f64>,
}

fn one() -> usize {
    1
}

impl GameSpec {
    fn resolve(&self, base: &Path) -> Result<InlineGame> {
        match self {
            GameSpec::Inline(g) => Ok(g.clone()),
            GameSpec::File { path } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Argument(format!("cannot read game file {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Argument(format!("game file {}: {e}", path.display())))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Singleton { point: Vec<f64> },
    NonpositiveOrthant { dim: usize },
    Orthant { signs: Vec<SignSpec> },
    Halfspaces { normals: Vec<Vec<f64>>, offsets: Vec<f64>, witness: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignSpec {
    Nonpositive,
    Nonnegative,
}

impl TargetSpec {
    pub fn build(&self) -> Result<ConvexTarget> {
        match self.clone() {
            TargetSpec::Ball { center, radius } => ConvexTarget::ball(center, radius),
            TargetSpec::Box { lower, upper } => ConvexTarget::boxed(lower, upper),
            TargetSpec::Singleton { point } => ConvexTarget::singleton(point),
            TargetSpec::NonpositiveOrthant { dim } => ConvexTarget::nonpositive_orthant(dim),
            TargetSpec::Orthant { signs } => ConvexTarget::orthant(
                signs
                    .into_iter()
                    .map(|s| match s {
                        SignSpec::Nonpositive => Sign::NonPositive,
                        SignSpec::Nonnegative => Sign::NonNegative,
                    })
                    .collect(),
            ),
            TargetSpec::Halfspaces { normals, offsets, witness } => ConvexTarget::halfspaces(normals, offsets, witness),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "algorithm", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlayerSpec {
    /// Projects onto `E ∩ co{g}` when `restricted`.
    Blackwell {
        #[serde(default)]
        restricted: bool,
    },
    PotentialLinf,
    RegretMatching,
    ExpWeights,
    Internal,
    GridForecaster,
}

impl PlayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PlayerSpec::Blackwell { restricted: false } => "blackwell",
            PlayerSpec::Blackwell { restricted: true } => "blackwell-restricted",
            PlayerSpec::PotentialLinf => "potential-linf",
            PlayerSpec::RegretMatching => "regret-matching",
            PlayerSpec::ExpWeights => "exp-weights",
            PlayerSpec::Internal => "internal",
            PlayerSpec::GridForecaster => "grid-forecaster",
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NatureSpec {
    Uniform,
    Iid { probs: Vec<f64> },
    Fixed { action: usize },
    Scripted { actions: Vec<usize> },
    /// Pushes the average away from the target.
    Away,
    BestResponse,
    OakesDawid,
}

impl NatureSpec {
    pub fn name(&self) -> &'static str {
        match self {
            NatureSpec::Uniform => "uniform",
            NatureSpec::Iid { .. } => "iid",
            NatureSpec::Fixed { .. } => "fixed",
            NatureSpec::Scripted { .. } => "scripted",
            NatureSpec::Away => "away",
            NatureSpec::BestResponse => "best-response",
            NatureSpec::OakesDawid => "oakes-dawid",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub outcomes: usize,
    pub resolution: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default)]
    pub game: Option<GameSpec>,
    #[serde(default)]
    pub player: Option<PlayerSpec>,
    #[serde(default)]
    pub nature: Option<NatureSpec>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_n() -> usize {
    1000
}

fn default_trials() -> usize {
    20
}

/// Rock–paper–scissors outcomes in `[0, 1]`.
fn rps() -> InlineGame {
    InlineGame { rows: 3, cols: 3, dim: 1, payoffs: vec![0.5, 0.0, 1.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.5] }
}

/// Everything a run needs, with defaults filled in and shapes checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub suite: Suite,
    pub game: InlineGame,
    pub player: PlayerSpec,
    pub nature: NatureSpec,
    pub target: Option<TargetSpec>,
    pub grid: GridSpec,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))
    }

    pub fn resolve(self, base: &Path) -> Result<Resolved> {
        let game = match &self.game {
            Some(g) => g.resolve(base)?,
            None => rps(),
        };
        let (player, nature) = match self.suite {
            Suite::Approachability => (PlayerSpec::Blackwell { restricted: false }, NatureSpec::Away),
            Suite::Regret => (PlayerSpec::RegretMatching, NatureSpec::BestResponse),
            Suite::Calibration => (PlayerSpec::GridForecaster, NatureSpec::OakesDawid),
        };
        let player = self.player.unwrap_or(player);
        let nature = self.nature.unwrap_or(nature);
        let allowed_players: &[&str] = match self.suite {
            Suite::Approachability => &["blackwell", "blackwell-restricted", "potential-linf"],
            Suite::Regret => &["regret-matching", "exp-weights", "internal"],
            Suite::Calibration => &["grid-forecaster"],
        };
        if !allowed_players.contains(&player.name()) {
            return Err(Error::Argument(format!("player `{}` does not belong to the {} suite", player.name(), self.suite.name())));
        }
        let allowed_natures: &[&str] = match self.suite {
            Suite::Approachability => &["uniform", "iid", "fixed", "scripted", "away"],
            Suite::Regret => &["uniform", "iid", "fixed", "scripted", "best-response"],
            Suite::Calibration => &["uniform", "iid", "oakes-dawid"],
        };
        if !allowed_natures.contains(&nature.name()) {
            return Err(Error::Argument(format!("nature `{}` does not belong to the {} suite", nature.name(), self.suite.name())));
        }
        let resolved = Resolved {
            suite: self.suite,
            target: self.target,
            grid: self.grid.unwrap_or(GridSpec { outcomes: 2, resolution: 4 }),
            game,
            player,
            nature,
            n: self.n,
            trials: self.trials,
            seed: self.seed,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

impl Resolved {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Argument("trials must be at least 1".into()));
        }
        match self.suite {
            Suite::Approachability => {
                let game = self.vector_game()?;
                let target = self.target_set()?;
                if target.dim() != game.dim() {
                    return Err(Error::Argument(format!("target dimension {} ≠ payoff dimension {}", target.dim(), game.dim())));
                }
                if self.player == PlayerSpec::PotentialLinf && !matches!(target, ConvexTarget::Box(_)) {
                    return Err(Error::Argument("potential-linf needs a box target".into()));
                }
            }
            Suite::Regret => {
                self.scalar_game()?;
            }
            Suite::Calibration => {
                self.calibration_grid()?;
            }
        }
        let cols = match self.suite {
            Suite::Calibration => self.grid.outcomes,
            _ => self.game.cols,
        };
        match &self.nature {
            NatureSpec::Iid { probs } => {
                MixedAction::new(probs.clone())?;
                if probs.len() != cols {
                    return Err(Error::Argument(format!("iid nature has {} probabilities for {cols} actions", probs.len())));
                }
            }
            NatureSpec::Fixed { action } if *action >= cols => {
                return Err(Error::Argument(format!("fixed nature action {action} out of range")));
            }
            NatureSpec::Scripted { actions } if actions.is_empty() || actions.iter().any(|a| *a >= cols) => {
                return Err(Error::Argument("scripted nature needs a nonempty script of valid actions".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn vector_game(&self) -> Result<VectorGame> {
        VectorGame::new(self.game.rows, self.game.cols, self.game.dim, self.game.payoffs.clone())
    }

    pub fn scalar_game(&self) -> Result<ScalarGame> {
        if self.game.dim != 1 {
            return Err(Error::Argument("the regret suite needs a scalar game (dim = 1)".into()));
        }
        ScalarGame::new(self.game.rows, self.game.cols, self.game.payoffs.clone())
    }

    pub fn target_set(&self) -> Result<ConvexTarget> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::Argument("the approachability suite needs a target".into()))?
            .build()
    }

    pub fn calibration_grid(&self) -> Result<Grid> {
        Grid::simplex(self.grid.outcomes, self.grid.resolution)
    }
}
