//! Demand generation.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::SimError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalSchedule {
    /// Mainline arrival times at the network entry (s), ascending.
    pub mainline: Vec<f64>,
    /// Ramp arrival times at the ramp entry (s), ascending.
    pub ramp: Vec<f64>,
}

/// Inter-arrival times: shifted exponential with minimum `min_headway` and
/// mean `1/q_main` on the mainline, exponential with rate `lambda` on the
/// ramp. Flows in veh/s.
pub fn generate_arrivals<R: Rng + ?Sized>(
    rng_main: &mut R,
    rng_ramp: &mut R,
    q_main: f64,
    lambda: f64,
    min_headway: f64,
    duration: f64,
) -> Result<ArrivalSchedule, SimError> {
    if !(q_main > 0.0 && q_main.is_finite()) {
        return Err(SimError::config("q_main", format!("must be positive, got {q_main}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SimError::config("q_ramp", format!("must be non-negative, got {lambda}")));
    }
    let mean = 1.0 / q_main;
    if mean <= min_headway {
        return Err(SimError::Rejected(format!(
            "mainline demand {:.1} veh/h needs mean headway {mean:.4} s, below the minimum {min_headway:.4} s",
            q_main * 3600.0
        )));
    }
    let shifted = Exp::new(1.0 / (mean - min_headway)).expect("positive rate");
    let mut mainline = Vec::with_capacity((q_main * duration * 1.1) as usize + 1);
    let mut t = 0.0;
    loop {
        t += min_headway + shifted.sample(rng_main);
        if t >= duration {
            break;
        }
        mainline.push(t);
    }

    let mut ramp = Vec::new();
    if lambda > 0.0 {
        let exp = Exp::new(lambda).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += exp.sample(rng_ramp);
            if t >= duration {
                break;
            }
            ramp.push(t);
        }
    }
    Ok(ArrivalSchedule { mainline, ramp })
}
