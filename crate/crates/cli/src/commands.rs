use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use hitprob::linsys::DEFAULT_MARGIN;
use hitprob::mcsim::MAX_TRUNCATED_FRACTION;
use hitprob::{
    assemble_system, compare as compare_model, hit_distribution, phi, run_walks, solve_boundary,
    Angle, HTable, HitDistribution, Runtime, Surface, WalkConfig, WalkTally, XWindow,
};

use crate::error::CliError;
use crate::output::{emit, num, Table};
use crate::{CompareArgs, ComputeArgs, HcoeffArgs, McArgs, Target, WalkArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load(path: &Path) -> Result<Surface, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse().map_err(|source| CliError::Surface {
        path: path.to_path_buf(),
        source,
    })
}

fn provenance(command: &str, s: &Surface, target: &Target) -> String {
    format!(
        "hitprob {VERSION} {command} surface_sha256={} from={},{}",
        s.digest(),
        target.from.0,
        target.from.1
    )
}

fn model(s: &Surface, start: (i64, i64), window: XWindow) -> Result<HitDistribution, CliError> {
    let table = HTable::default();
    let sys = assemble_system(s, &table)?;
    let sol = solve_boundary(&sys, window)?;
    Ok(hit_distribution(&sol, start)?)
}

fn walks(s: &Surface, start: (i64, i64), w: &WalkArgs) -> Result<WalkTally, CliError> {
    let cfg = WalkConfig::new(w.walks, w.max_steps, w.seed)?;
    Ok(run_walks(s, start, cfg)?)
}

fn truncation_policy(t: &WalkTally) -> Result<(), CliError> {
    let f = t.truncated_fraction();
    if f > MAX_TRUNCATED_FRACTION {
        return Err(CliError::Policy(format!(
            "{:.2}% of walks hit the step cap (limit {:.0}%); raise --max-steps",
            100.0 * f,
            100.0 * MAX_TRUNCATED_FRACTION
        )));
    }
    Ok(())
}

pub fn compute(a: &ComputeArgs) -> Result<(), CliError> {
    let s = load(&a.target.surface)?;
    let window = a
        .window
        .unwrap_or_else(|| XWindow::around(&s, DEFAULT_MARGIN));
    let d = model(&s, a.target.from, window)?;
    let header = format!(
        "{} window={window} window_mass={} tail_estimate={}",
        provenance("compute", &s, &a.target),
        num(d.window_mass),
        num(d.tail_estimate)
    );
    let mut t = Table::new(&header, "x,p");
    for (x, p) in d.iter() {
        t.row(&[x.to_string(), num(p)]);
    }
    emit(a.target.out.as_deref(), &t.finish())
}

pub fn mc(a: &McArgs) -> Result<(), CliError> {
    let s = load(&a.target.surface)?;
    let tally = walks(&s, a.target.from, &a.walk)?;
    let header = format!(
        "{} walks={} max_steps={} seed={} absorbed={} truncated={}",
        provenance("mc", &s, &a.target),
        a.walk.walks,
        a.walk.max_steps,
        a.walk.seed,
        tally.absorbed,
        tally.truncated
    );
    let mut t = Table::new(&header, "x,count");
    for (x, c) in &tally.histogram {
        t.row(&[x.to_string(), c.to_string()]);
    }
    emit(a.target.out.as_deref(), &t.finish())?;
    truncation_policy(&tally)
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    if a.threshold.is_nan() || a.threshold < 0.0 {
        return Err(CliError::Usage(format!(
            "threshold must be non-negative, got {}",
            a.threshold
        )));
    }
    let s = load(&a.target.surface)?;
    let window = a
        .window
        .unwrap_or_else(|| XWindow::around(&s, DEFAULT_MARGIN));
    let t0 = Instant::now();
    let d = model(&s, a.target.from, window)?;
    let model_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let tally = walks(&s, a.target.from, &a.walk)?;
    let mc_secs = t1.elapsed().as_secs_f64();
    let report = compare_model(&d, &tally)
        .with_digest(s.digest())
        .with_runtime(Runtime {
            model_secs,
            mc_secs,
        });
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    emit(a.target.out.as_deref(), &(json + "\n"))?;
    truncation_policy(&tally)?;
    if report.tv_distance > a.threshold {
        return Err(CliError::Policy(format!(
            "total-variation distance {:.4} exceeds threshold {}",
            report.tv_distance, a.threshold
        )));
    }
    Ok(())
}

pub fn hcoeff(a: &HcoeffArgs) -> Result<(), CliError> {
    let body = if a.phi {
        if a.samples < 2 {
            return Err(CliError::Usage("--samples must be at least 2".into()));
        }
        let mut t = Table::new(
            &format!("hitprob {VERSION} hcoeff phi samples={}", a.samples),
            "theta,phi",
        );
        for i in 0..a.samples {
            let theta = PI * i as f64 / (a.samples - 1) as f64;
            t.row(&[num(theta), num(phi(Angle::new(theta)))]);
        }
        t.finish()
    } else {
        let table = HTable::default();
        let mut t = Table::new(
            &format!("hitprob {VERSION} hcoeff n={} k_max={}", a.n, a.k_max),
            "k,H",
        );
        for k in 0..=a.k_max {
            t.row(&[k.to_string(), num(table.get(a.n, k as i64)?)]);
        }
        t.finish()
    };
    emit(a.out.as_deref(), &body)
}
