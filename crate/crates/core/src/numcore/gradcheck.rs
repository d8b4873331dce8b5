use super::{NumError, Tape, Tensor, Var};

const STEP: f64 = 1e-5;
/// Magnitude floor in the relative-error denominator, so gradients that are
/// zero in exact arithmetic are compared absolutely.
const REL_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub index: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares tape gradients of the scalar program `f` against central
/// finite differences with step `1e-5`, entry by entry.
pub fn grad_check<F>(f: F, params: &[Tensor], tolerance: f64) -> Result<GradCheckReport, NumError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NumError>,
{
    let eval = |ps: &[Tensor]| -> Result<f64, NumError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param(p)).collect();
        let out = f(&mut tape, &vars)?;
        tape.scalar(out).ok_or_else(|| {
            let (r, c) = tape.shape(out);
            NumError::NotScalar { shape: vec![r, c] }
        })
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut work: Vec<Tensor> = params.to_vec();
    let mut report = Vec::with_capacity(params.len());
    for (pi, p) in params.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[pi], p.len());
        let mut worst: f64 = 0.0;
        for j in 0..p.len() {
            let orig = work[pi].values()[j];
            work[pi].values_mut()[j] = orig + STEP;
            let up = eval(&work)?;
            work[pi].values_mut()[j] = orig - STEP;
            let down = eval(&work)?;
            work[pi].values_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[j], numeric));
        }
        report.push(ParamCheck {
            index: pi,
            max_rel_error: worst,
            passed: worst < tolerance,
        });
    }
    Ok(GradCheckReport {
        tolerance,
        params: report,
    })
}
