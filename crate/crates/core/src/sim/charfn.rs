use num_complex::Complex64;

use crate::error::{MapError, Result};
use crate::model::MapModel;
use crate::modulator::ModulatorPath;
use crate::stats::Summary;

/// `E[e^{iλ ξ_t} | Θ]` for the frozen modulator path, in closed form:
/// a Gaussian factor from drift and diffusion, a compound Poisson factor for
/// the local jumps, and one factor `1 + p (φ_ν(λ) − 1)` per transition.
pub fn conditional_charfn(model: &MapModel, path: &ModulatorPath, lambda: f64, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t <= path.horizon()) {
        return Err(MapError::InvalidArgument(format!("time {t} outside [0, {}]", path.horizon())));
    }
    if lambda == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut exponent = Complex64::new(0.0, 0.0);
    for seg in path.segments() {
        let dt = seg.end.min(t) - seg.start;
        if dt <= 0.0 {
            break;
        }
        let c = model.chars.state(seg.state);
        exponent += Complex64::new(-0.5 * lambda * lambda * c.diffusion, lambda * c.drift) * dt;
        if let Some(l) = c.local {
            exponent += (l.law.charfn(lambda) - 1.0) * (l.rate * dt);
        }
    }
    let mut product = Complex64::new(1.0, 0.0);
    for (time, from, to) in path.transitions() {
        if time > t {
            break;
        }
        if let Some(tj) = model.chars.transition(from, to) {
            product *= 1.0 + (tj.law.charfn(lambda) - 1.0) * tj.prob;
        }
    }
    Ok(exponent.exp() * product)
}

/// Empirical `E e^{iλX}` with standard errors of the real and imaginary parts.
pub fn empirical_charfn(xs: &[f64], lambda: f64) -> (Complex64, f64, f64) {
    let re: Summary = xs.iter().map(|x| (lambda * x).cos()).collect();
    let im: Summary = xs.iter().map(|x| (lambda * x).sin()).collect();
    (Complex64::new(re.mean, im.mean), re.se(), im.se())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpLaw, MapCharacteristics};
    use crate::modulator::{ModulatorSpec, State};
    use crate::rng::Seed;
    use crate::sim::Simulator;

    fn sym2() -> ModulatorSpec {
        ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0), ("b", "a", 1.0)]).unwrap()
    }

    #[test]
    fn zero_lambda_and_pure_diffusion() {
        let spec = ModulatorSpec::finite(&["x"], &[]).unwrap();
        let mut c = MapCharacteristics::new();
        c.set_diffusion(State(0), 2.0);
        let model = MapModel::new(spec, c).unwrap();
        let path = ModulatorPath::new(State(0), vec![], 3.0).unwrap();
        assert_eq!(conditional_charfn(&model, &path, 0.0, 3.0).unwrap(), Complex64::new(1.0, 0.0));
        let v = conditional_charfn(&model, &path, 0.7, 3.0).unwrap();
        assert!((v - Complex64::new((-0.49 * 3.0f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn point_mass_transitions_rotate() {
        let a = 0.8;
        let mut c = MapCharacteristics::new();
        c.set_transition_jump(State(0), State(1), 1.0, JumpLaw::PointMass { value: a });
        c.set_transition_jump(State(1), State(0), 1.0, JumpLaw::PointMass { value: a });
        let model = MapModel::new(sym2(), c).unwrap();
        let path = ModulatorPath::new(State(0), vec![(0.5, State(1)), (1.0, State(0)), (2.0, State(1))], 3.0).unwrap();
        let lambda = 1.3;
        let v = conditional_charfn(&model, &path, lambda, 3.0).unwrap();
        assert!((v - Complex64::from_polar(1.0, 3.0 * lambda * a)).norm() < 1e-14);
        let w = conditional_charfn(&model, &path, -lambda, 3.0).unwrap();
        assert!((w - v.conj()).norm() < 1e-15);
    }

    #[test]
    fn matches_conditional_monte_carlo() {
        let mut c = MapCharacteristics::new();
        c.set_drift(State(0), 0.4).set_diffusion(State(1), 0.5);
        c.set_local_jump(State(0), 1.2, JumpLaw::TwoPoint { x1: 1.0, p: 0.3, x2: -0.5 });
        c.set_transition_jump(State(0), State(1), 0.7, JumpLaw::Gaussian { mean: 0.5, sd: 0.4 });
        let model = MapModel::new(sym2(), c).unwrap();
        let path = ModulatorPath::new(State(0), vec![(0.7, State(1)), (1.1, State(0)), (1.6, State(1))], 2.0).unwrap();
        let sim = Simulator::new(&model).unwrap();
        let xs: Vec<f64> = (0..20_000)
            .map(|i| sim.simulate(&path, &[2.0], &mut Seed(8).stream(i)).unwrap().xi[0])
            .collect();
        for lambda in [0.5, 1.0, 2.0] {
            let exact = conditional_charfn(&model, &path, lambda, 2.0).unwrap();
            let (emp, se_re, se_im) = empirical_charfn(&xs, lambda);
            assert!((exact.re - emp.re).abs() < 4.0 * se_re, "re at {lambda}");
            assert!((exact.im - emp.im).abs() < 4.0 * se_im, "im at {lambda}");
            assert!(exact.norm() <= 1.0);
        }
    }
}
