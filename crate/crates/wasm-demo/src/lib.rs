//! Browser bindings: three small simulations whose series the page plots.

use approachlab::approach::{ApproachConfig, Blackwell};
use approachlab::calibration::{run_forecaster, CalibTranscript, FosterForecaster, FosterMixing, FosterState, IidOutcomes, OakesDawid, OutcomeNature};
use approachlab::engine::{run_episode, Averaging, AwayNature, Episode, FixedNature, IidNature, Mode, Nature, VectorGame};
use approachlab::geometry::{ConvexTarget, MixedAction};
use approachlab::regret::{norm2_pos, norm_inf_pos, regret_game, Algorithm, BestResponseNature, Learner};
use approachlab::zerosum::ScalarGame;
use wasm_bindgen::prelude::*;

fn js(e: approachlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Anti-coordination in the plane: matching pays `(1, 0)`, mismatching pays `(0, 1)`.
fn plane_game() -> VectorGame {
    VectorGame::new(2, 2, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).expect("static game")
}

/// Blackwell's strategy steering the average payoff into the disc of `radius` around `(½, ½)`.
///
/// `nature` is `away`, `uniform` or `fixed`. Returns the averages as `[x1, y1, x2, y2, …]`.
#[wasm_bindgen]
pub fn blackwell_path(radius: f64, stages: usize, nature: &str, seed: u64) -> Result<Vec<f64>, JsError> {
    let game = plane_game();
    let target = ConvexTarget::ball(vec![0.5, 0.5], radius).map_err(js)?;
    let mut nature: Box<dyn Nature> = match nature {
        "away" => Box::new(AwayNature { target: target.clone() }),
        "uniform" => Box::new(IidNature(MixedAction::uniform(2))),
        "fixed" => Box::new(FixedNature(0)),
        other => return Err(JsError::new(&format!("unknown nature `{other}`"))),
    };
    let mut player = Blackwell { cfg: ApproachConfig::new(game.clone(), target).map_err(js)? };
    let t = run_episode(&Episode::new(&game, stages, seed, Mode::Sampled), &mut player, nature.as_mut()).map_err(js)?;
    Ok(t.averages(Averaging::Cesaro).into_iter().flatten().collect())
}

/// Average positive regret of a learner in rock–paper–scissors against a best-responding opponent.
///
/// `algorithm` is `regret-matching` (ℓ₂ norm) or `exp-weights` (ℓ∞ norm).
#[wasm_bindgen]
pub fn regret_curve(algorithm: &str, stages: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let rho = ScalarGame::new(3, 3, vec![0.5, 0.0, 1.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.5]).map_err(js)?;
    let (alg, norm): (_, fn(&[f64]) -> f64) = match algorithm {
        "regret-matching" => (Algorithm::RegretMatching, norm2_pos),
        "exp-weights" => (Algorithm::ExpWeights, norm_inf_pos),
        other => return Err(JsError::new(&format!("unknown algorithm `{other}`"))),
    };
    let game = regret_game(&rho).map_err(js)?;
    let mut learner = Learner::new(rho.clone(), alg).map_err(js)?;
    let mut nature = BestResponseNature { rho };
    let t = run_episode(&Episode::new(&game, stages, seed, Mode::Sampled), &mut learner, &mut nature).map_err(js)?;
    Ok(t.averages(Averaging::Cesaro).iter().map(|a| norm(a)).collect())
}

/// Foster's forecaster at precision `eps`: worst positive part of `e` and `d` after each stage.
///
/// `nature` is `oakes-dawid` or a bias `p` in `[0, 1]` for i.i.d. outcomes, given as text.
#[wasm_bindgen]
pub fn foster_errors(eps: f64, stages: usize, nature: &str, seed: u64) -> Result<Vec<f64>, JsError> {
    let mut nature: Box<dyn OutcomeNature> = match nature {
        "oakes-dawid" => Box::new(OakesDawid),
        p => {
            let p: f64 = p.parse().map_err(|_| JsError::new(&format!("unknown nature `{p}`")))?;
            Box::new(IidOutcomes(MixedAction::new(vec![1.0 - p, p]).map_err(js)?))
        }
    };
    let mut f = FosterForecaster::new(eps, FosterMixing::Balanced).map_err(js)?;
    let t = run_forecaster(&mut f, nature.as_mut(), stages, seed).map_err(js)?;
    let mut prefix = CalibTranscript::new(t.num_cells(), 2);
    let mut out = Vec::with_capacity(t.len());
    for m in 0..t.len() {
        prefix.push(t.cells()[m], t.outcomes()[m]).map_err(js)?;
        out.push(FosterState::from_transcript(eps, &prefix).map_err(js)?.max_error().max(0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blackwell_path_enters_the_disc() {
        let p = blackwell_path(0.05, 4000, "away", 3).unwrap();
        assert_eq!(p.len(), 8000);
        let (x, y) = (p[7998], p[7999]);
        assert!(((x - 0.5).hypot(y - 0.5) - 0.05).max(0.0) <= (2.0 / 4000f64).sqrt());
    }

    #[test]
    fn regret_curves_fall_under_their_rates() {
        let n = 3000;
        let rm = regret_curve("regret-matching", n, 1).unwrap();
        let ew = regret_curve("exp-weights", n, 1).unwrap();
        assert_eq!((rm.len(), ew.len()), (n, n));
        assert!(rm[n - 1] <= (3.0 / n as f64).sqrt());
        assert!(ew[n - 1] <= 2.0 * (3f64.ln() / n as f64).sqrt());
    }

    #[test]
    fn foster_errors_shrink() {
        let e = foster_errors(0.1, 5000, "oakes-dawid", 0).unwrap();
        assert!(e.iter().all(|v| *v >= 0.0));
        assert!(e[4999] < e[9] && e[4999] < 0.02);
        assert_eq!(foster_errors(0.1, 200, "0.3", 0).unwrap().len(), 200);
    }
}
