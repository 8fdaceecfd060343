use std::fmt::Write as _;

use icclab::cone::{
    hamilton_flow, lemma31_batch, theorem11_pipeline, ConeSpec, FlowOptions, FlowTrajectory, LemmaBatch,
    LemmaOutcome, PipelineReport,
};
use icclab::curvature::io;
use icclab::curvature::{BianchiPolicy, RandomClass};
use icclab::curvature::models::{cylinder, plane_projector, random_tensor, sphere};
use icclab::frame::{classify as classify_tensor, p1 as p1_search, Classification, P1Report};
use icclab::soliton::{
    bound_theta, check_elliptic_identities, check_soliton_identities, check_theorem13_hypotheses,
    r_star_ric_min_eigenvalue, model_point, EllipticResiduals, HypothesisReport, ModelPoint, SolitonModel,
    SolitonResiduals, ThetaBound,
};
use icclab::{CurvatureTensor, Error, MembershipReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{write_output, Emitter, InputInfo};
use crate::{CliError, Format, GenKind, Status};

fn load_input(cfg: &RunConfig) -> Result<(CurvatureTensor, InputInfo), CliError> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Input("no input tensor file".into()))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
    let (tensor, load) =
        io::parse(&bytes, BianchiPolicy::Project).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let info = InputInfo {
        path: path.to_string(),
        content_hash: load.content_hash.clone(),
        load,
    };
    Ok((tensor, info))
}

fn membership_rows(out: &mut String, label: &str, m: &MembershipReport) {
    let verdict = serde_json::to_value(m.verdict).expect("verdict serializes");
    let _ = writeln!(
        out,
        "{label},{:e},{},{}",
        m.margin,
        verdict.as_str().unwrap_or_default(),
        m.converged
    );
}

pub fn classify(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("classify", cfg, format);
    let (r, info) = load_input(cfg)?;
    let c: Classification = classify_tensor(&r, &cfg.budget, Some(cfg.theta))?;
    let mut messages = Vec::new();
    if c.any_budget_flag() {
        messages.push("a margin search hit its iteration budget before converging".to_string());
    }
    let status = if messages.is_empty() { Status::Ok } else { Status::SoftWarning };
    em.emit(Some(info), status, messages, &c, || {
        let mut out = String::from("cone,margin,verdict,converged\n");
        membership_rows(&mut out, "PIC", &c.pic);
        membership_rows(&mut out, "PIC1", &c.pic1);
        membership_rows(&mut out, "PIC2", &c.pic2);
        if let Some(u) = &c.uniform_pic {
            membership_rows(&mut out, &format!("UPIC({})", cfg.theta), u);
        }
        out
    })
}

pub fn p1(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("p1", cfg, format);
    let (r, info) = load_input(cfg)?;
    let rep: P1Report = p1_search(&r, &cfg.budget)?;
    let mut messages = Vec::new();
    if !rep.converged {
        messages.push("p1 search hit its iteration budget before converging".to_string());
    }
    let status = if messages.is_empty() { Status::Ok } else { Status::SoftWarning };
    em.emit(Some(info), status, messages, &rep, || {
        let lower = rep.lower_bound.map(|v| format!("{v:e}")).unwrap_or_default();
        format!(
            "value,ratio_min,lambda,pic_margin,lambda_tilde,lower_bound,interior,converged\n{:e},{:e},{:e},{:e},{:e},{},{},{}\n",
            rep.value, rep.ratio_min, rep.witness.lambda, rep.pic_margin, rep.lambda_tilde, lower, rep.interior, rep.converged
        )
    })
}

fn parse_cone(label: &str, cfg: &RunConfig, dim: usize) -> Result<ConeSpec, CliError> {
    let bad = || CliError::Input(format!("unknown cone '{label}'"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let spec = match label.split_once(':') {
        None => match label {
            "PIC" => ConeSpec::Pic,
            "PIC1" => ConeSpec::Pic1,
            "PIC2" => ConeSpec::Pic2,
            "UPIC" => ConeSpec::UniformPic { theta: cfg.theta },
            _ => return Err(bad()),
        },
        Some(("UPIC", t)) => ConeSpec::UniformPic { theta: num(t)? },
        Some(("EB", b)) => {
            let b = num(b)?;
            ConeSpec::eb_pullback(cfg.theta, b, cfg.omega_schedule.omega(b)?, dim)?
        }
        Some(_) => return Err(bad()),
    };
    spec.validate(dim)?;
    Ok(spec)
}

#[derive(Serialize)]
struct FlowResult<'a> {
    /// Why integration stopped before `t_end`, if it did.
    stopped_early: Option<String>,
    trajectory: &'a FlowTrajectory,
}

pub fn flow(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("flow", cfg, format);
    let (r, info) = load_input(cfg)?;
    let cones = cfg
        .flow
        .cones
        .iter()
        .map(|c| parse_cone(c, cfg, r.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let options = FlowOptions::default().with_tol(cfg.tolerance("flow"));
    let (trajectory, stopped_early) = match hamilton_flow(&r, cfg.flow.t_end, &cones, &options, &cfg.budget) {
        Ok(t) => (t, None),
        Err(Error::BlowUpReached { reason, trajectory }) => (*trajectory, Some(reason)),
        Err(e) => return Err(e.into()),
    };
    let (status, messages) = match &stopped_early {
        Some(reason) => (Status::SoftWarning, vec![format!("stopped before t_end: {reason}")]),
        None => (Status::Ok, Vec::new()),
    };
    let result = FlowResult {
        stopped_early,
        trajectory: &trajectory,
    };
    em.emit(Some(info), status, messages, &result, || trajectory.to_csv())
}

fn pipeline_csv(rep: &PipelineReport) -> String {
    let mut out = String::from("b,a,omega,condition_estimate,scal_s,pass_i,pass_ii,pass_iii,admissible\n");
    for row in &rep.rows {
        let flags = row
            .eb
            .as_ref()
            .map(|e| format!("{},{},{}", e.pass_i, e.pass_ii, e.pass_iii))
            .unwrap_or_else(|| ",,".into());
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{flags},{}",
            row.b, row.a, row.omega, row.condition_estimate, row.scal_s, row.admissible
        );
    }
    out
}

pub fn pipeline(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("pipeline", cfg, format);
    let (r, info) = load_input(cfg)?;
    let run = theorem11_pipeline(&r, cfg.theta, &cfg.omega_schedule, &cfg.b_grid, &cfg.budget);
    let (rep, mut status, mut messages) = match run {
        Ok(rep) => (rep, Status::Ok, Vec::new()),
        Err(Error::NoAdmissibleB(rep)) => (*rep, Status::SoftWarning, vec!["no admissible b on the grid".to_string()]),
        Err(e) => return Err(e.into()),
    };
    let flagged = rep
        .rows
        .iter()
        .filter_map(|row| row.eb.as_ref())
        .filter(|eb| eb.cond_i.budget_flagged())
        .count();
    if flagged > 0 {
        status = Status::SoftWarning;
        messages.push(format!("{flagged} condition (i) searches hit their iteration budget"));
    }
    em.emit(Some(info), status, messages, &rep, || pipeline_csv(&rep))
}

pub fn lemma31(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("lemma31", cfg, format);
    let batch: LemmaBatch = lemma31_batch(cfg.lemma.count, &cfg.lemma.dims, cfg.seed, &cfg.budget)?;
    let mut messages = Vec::new();
    let mut status = Status::Ok;
    if batch.failed > 0 {
        status = Status::SoftWarning;
        messages.push(format!("{} cases could not be evaluated", batch.failed));
    }
    if batch.violations > 0 || batch.secondary_violations > 0 {
        status = Status::AssertionFailure;
        messages.push(format!(
            "{} slack violations, {} stationarity or lift violations",
            batch.violations, batch.secondary_violations
        ));
    }
    em.emit(None, status, messages, &batch, || {
        let mut out = String::from("index,dim,seed,status,p1,lambda,slack,tolerance,passed\n");
        for case in &batch.cases {
            let _ = match &case.outcome {
                LemmaOutcome::Checked(rep) => writeln!(
                    out,
                    "{},{},{},checked,{:e},{:e},{:e},{:e},{}",
                    case.index,
                    case.dim,
                    case.seed,
                    rep.p1,
                    rep.lambda,
                    rep.slack,
                    rep.tolerance,
                    rep.passed()
                ),
                LemmaOutcome::Skipped { p1 } => {
                    writeln!(out, "{},{},{},skipped,{p1:e},,,,", case.index, case.dim, case.seed)
                }
                LemmaOutcome::Failed { .. } => writeln!(out, "{},{},{},failed,,,,,", case.index, case.dim, case.seed),
            };
        }
        out
    })
}

#[derive(Serialize)]
struct PointRow {
    point: ModelPoint,
    scal: f64,
    soliton: SolitonResiduals,
    elliptic: EllipticResiduals,
    max_residual: f64,
}

#[derive(Serialize)]
struct ModelTable {
    model: SolitonModel,
    points: Vec<PointRow>,
    max_residual: f64,
    hypotheses: HypothesisReport,
    /// Absent for the flat Gaussian model.
    theta_bound: Option<ThetaBound>,
    /// Smallest eigenvalue of `R⋆Ric` over the sampled points.
    r_star_ric_min: f64,
}

#[derive(Serialize)]
struct ModelsResult {
    tolerance: f64,
    max_residual: f64,
    tables: Vec<ModelTable>,
}

fn model_table(model: SolitonModel, cfg: &RunConfig) -> Result<ModelTable, CliError> {
    let points = model.sample_points(cfg.models.points.max(1), cfg.seed);
    let mut rows = Vec::with_capacity(points.len());
    let mut r_star_ric_min = f64::INFINITY;
    for p in &points {
        let data = model_point(&model, p)?;
        r_star_ric_min = r_star_ric_min.min(r_star_ric_min_eigenvalue(&data.curvature));
        let soliton = check_soliton_identities(&model, p)?;
        let elliptic = check_elliptic_identities(&model, p)?;
        rows.push(PointRow {
            point: p.clone(),
            scal: data.scal,
            max_residual: soliton.max().max(elliptic.max()),
            soliton,
            elliptic,
        });
    }
    let max_residual = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let hypotheses = check_theorem13_hypotheses(&model, &points[0], &cfg.budget)?;
    let theta_bound = match bound_theta(&model, &points) {
        Ok(b) => Some(b),
        Err(Error::ZeroScal) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(ModelTable {
        model,
        points: rows,
        max_residual,
        hypotheses,
        theta_bound,
        r_star_ric_min,
    })
}

pub fn models(cfg: &RunConfig, format: Format) -> Result<Status, CliError> {
    let em = Emitter::new("models", cfg, format);
    if cfg.models.dims.iter().any(|&d| d < 4) {
        return Err(CliError::Input("model dimensions must be at least 4".into()));
    }
    let tables = cfg
        .models
        .dims
        .iter()
        .flat_map(|&d| SolitonModel::all(d))
        .map(|m| model_table(m, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let tolerance = cfg.tolerance("identity");
    let max_residual = tables.iter().map(|t| t.max_residual).fold(0.0, f64::max);
    let (status, messages) = if max_residual > tolerance {
        (
            Status::AssertionFailure,
            vec![format!("identity residual {max_residual:e} exceeds {tolerance:e}")],
        )
    } else {
        (Status::Ok, Vec::new())
    };
    let result = ModelsResult {
        tolerance,
        max_residual,
        tables,
    };
    em.emit(None, status, messages, &result, || {
        let mut out = String::from("model,dim,point,scal,soliton_max,elliptic_max\n");
        for t in &result.tables {
            for (k, row) in t.points.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{k},{:e},{:e},{:e}",
                    t.model.name(),
                    t.model.dim(),
                    row.scal,
                    row.soliton.max(),
                    row.elliptic.max()
                );
            }
        }
        out
    })
}

/// Writes a bare tensor file rather than a report.
pub fn gen(cfg: &RunConfig, kind: GenKind, scale: f64, class: &str, eps: f64) -> Result<Status, CliError> {
    let n = cfg.dim;
    if !(scale > 0.0) {
        return Err(CliError::Input(format!("scale must be positive, got {scale}")));
    }
    let r = match kind {
        GenKind::Sphere => sphere(n, scale),
        GenKind::Cylinder => cylinder(n, scale),
        GenKind::Random => random_tensor(n, cfg.seed, class.parse::<RandomClass>()?),
        GenKind::PerturbedCylinder => {
            if !(eps > 0.0) {
                return Err(CliError::Input(format!("eps must be positive, got {eps}")));
            }
            // lowers the sectional curvature of the plane spanned by the
            // first sphere direction and the flat axis
            cylinder(n, scale) - plane_projector(n, 0, n - 1).scaled(eps)
        }
    };
    let mut text = io::to_json(&r);
    text.push('\n');
    write_output(cfg.output.as_deref(), &text)?;
    Ok(Status::Ok)
}
