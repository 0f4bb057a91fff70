use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use exocal_core::kinematics::DigitKind;
use exocal_core::sensitivity::{posture_grid, rank_params, sweep_all, SensError, SensitivityCurve};

use super::{write_text, Globals};
use crate::error::CliError;
use crate::schema::SCHEMA_VERSION;
use crate::svg;

pub const DEFAULT_GRID: &str = "-20,-15,-10,-5,0,5,10,15,20";

#[derive(Debug, Clone)]
pub struct SensitivityArgs {
    pub digit: DigitKind,
    /// Comma-separated perturbations in percent.
    pub grid: String,
    /// Posture grid as `<n>x<m>`.
    pub postures: String,
    pub rank_pct: f64,
    pub svg: bool,
}

impl Default for SensitivityArgs {
    fn default() -> Self {
        SensitivityArgs {
            digit: DigitKind::Index,
            grid: DEFAULT_GRID.into(),
            postures: "5x5".into(),
            rank_pct: 10.0,
            svg: false,
        }
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let grid = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > -100.0)
                .ok_or_else(|| CliError::Usage(format!("--grid entry '{t}' is not a percentage above -100")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(grid)
}

pub fn parse_postures(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--postures '{s}' must look like 5x5"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn write_curves(path: &Path, digit: DigitKind, curves: &[SensitivityCurve]) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "# exocal sensitivity v{SCHEMA_VERSION} digit={digit}").map_err(io)?;
    writeln!(out, "param,perturb_pct,deviation_mm,feasible").map_err(io)?;
    for c in curves {
        for p in &c.points {
            let dev = if p.deviation_mm.is_finite() { format!("{}", p.deviation_mm) } else { String::new() };
            writeln!(out, "{},{},{},{}", c.param, p.pct, dev, u8::from(p.feasible)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn run_sensitivity(g: &Globals, args: &SensitivityArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    let (na, nb) = parse_postures(&args.postures)?;
    let geometry = g.geometry()?;
    let model = geometry.model(args.digit).map_err(|e| CliError::Invalid(e.to_string()))?;
    let virt = geometry.nominal_virt(args.digit).map_err(|e| CliError::Invalid(e.to_string()))?;
    let sens_err = |e: SensError| match e {
        SensError::MissingZero | SensError::MissingReference(_) => CliError::Usage(e.to_string()),
        SensError::InfeasibleNominal(_) | SensError::Sim(_) => CliError::Numerical(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    };
    let postures = posture_grid(&model, &virt, na, nb).map_err(sens_err)?;
    let curves = sweep_all(&model, &virt, &grid, &postures).map_err(sens_err)?;
    let ranking = rank_params(&curves, args.rank_pct).map_err(sens_err)?;

    g.prepare_out()?;
    let mut manifest = g.manifest("sensitivity");
    let curves_path = g.out.join("sensitivity.csv");
    write_curves(&curves_path, args.digit, &curves)?;
    let rank_path = g.out.join("ranking.csv");
    let mut text =
        format!("# exocal sensitivity-ranking v{SCHEMA_VERSION} digit={}\nrank,param,deviation_mm\n", args.digit);
    for (i, p) in ranking.iter().enumerate() {
        let c = curves.iter().find(|c| c.param == *p).expect("ranked curve");
        let dev = c.at(args.rank_pct).map_or(f64::NAN, |pt| pt.deviation_mm);
        text.push_str(&format!("{},{p},{dev}\n", i + 1));
    }
    write_text(&rank_path, &text)?;
    manifest.outputs.extend([curves_path, rank_path]);
    if args.svg {
        let series: Vec<svg::Series> = curves
            .iter()
            .map(|c| svg::Series {
                label: c.param.to_string(),
                points: c.points.iter().map(|p| (p.pct, p.deviation_mm)).collect(),
            })
            .collect();
        let svg_path = g.out.join("sensitivity.svg");
        write_text(
            &svg_path,
            &svg::line_chart(
                &format!("{} fingertip sensitivity", args.digit),
                "perturbation (%)",
                "max deviation (mm)",
                &series,
            ),
        )?;
        manifest.outputs.push(svg_path);
    }
    manifest.write(&g.out)?;
    Ok(())
}
