//! Studies built on top of the solver: merged four-sector spectra,
//! Dirichlet/Neumann bracketing of the truncation, thin-tube sweeps, sector
//! competition for the second eigenvalue, and the nodal-line verdicts.

use std::f64::consts::PI;
use std::io::{self, Write};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eigensolve::{cluster_flags, smallest_eigenpairs, EigenError, EigenResult, SolverOptions, CLUSTER_REL_GAP};
use crate::fem::{assemble, reduce, CutBc, FemError, Parity, Sector, SectorSystem};
use crate::geometry::{quarter_boundary, reflect_full, DomainSpec, FullBoundary, GeometryError, Profile};
use crate::mesh::{generate_mesh, Mesh, MeshError};
use crate::nodal::{analyze, rectangle_boundary, Classification, FullField, NodalError, NodalReport};
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Nodal(#[from] NodalError),
    #[error("ground state found in sector {0}, expected (sym,sym)")]
    GroundStateSector(String),
    #[error("{0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    pub target_h: f64,
    pub tube_layers: usize,
    pub tol: f64,
    /// Uniform refinements applied to the base mesh.
    pub refinements: usize,
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            target_h: 0.05,
            tube_layers: 4,
            tol: 1e-8,
            refinements: 2,
            seed: crate::eigensolve::DEFAULT_SEED,
        }
    }
}

impl Numerics {
    /// Defaults scaled to the core half-height.
    pub fn for_spec(spec: &DomainSpec) -> Self {
        Numerics {
            target_h: 0.05 * spec.b,
            ..Numerics::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_h > 0.0 && self.target_h.is_finite()) || !(self.tol > 0.0) || self.tube_layers < 4 {
            return Err(ExperimentError::Argument(format!("invalid numerics: {self:?}")));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }
}

/// Named parameter sets for the two headline cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Straight tubes: `h = 1`.
    TheoremI,
    /// Exponentially narrowing tubes.
    TheoremII,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Preset> {
        match name {
            "theorem-i" => Some(Preset::TheoremI),
            "theorem-ii" => Some(Preset::TheoremII),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::TheoremI => "theorem-i",
            Preset::TheoremII => "theorem-ii",
        }
    }

    pub fn spec(self) -> DomainSpec {
        match self {
            Preset::TheoremI => DomainSpec::new(2.0, 1.0, 0.1, Profile::constant(), 6.0),
            Preset::TheoremII => DomainSpec::new(2.0, 1.0, 0.1, Profile::exp_decay(1.0), 6.0),
        }
    }

    /// Truncation lengths used by the verdict.
    pub fn lengths(self) -> Vec<f64> {
        match self {
            Preset::TheoremI => vec![6.0],
            Preset::TheoremII => vec![4.0, 6.0, 8.0],
        }
    }
}

/// Short stable fingerprint of a spec, used to key output rows.
pub fn spec_hash(spec: &DomainSpec) -> String {
    let json = serde_json::to_string(spec).expect("spec serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// `lambda_mn = (m pi / 2a)^2 + (n pi / 2b)^2` on `(-a,a) x (-b,b)`.
pub fn rectangle_eigenvalue(a: f64, b: f64, m: usize, n: usize) -> f64 {
    (m as f64 * PI / (2.0 * a)).powi(2) + (n as f64 * PI / (2.0 * b)).powi(2)
}

/// Sector of the rectangle mode `(m, n)`: odd indices are even functions.
pub fn rectangle_mode_sector(m: usize, n: usize) -> Sector {
    let parity = |i: usize| if i % 2 == 1 { Parity::Sym } else { Parity::Anti };
    Sector::new(parity(m), parity(n))
}

/// The `count` smallest rectangle eigenvalues with their mode numbers.
pub fn rectangle_spectrum(a: f64, b: f64, count: usize) -> Vec<(f64, usize, usize)> {
    let reach = count + 2;
    let mut modes: Vec<(f64, usize, usize)> = (1..=reach)
        .flat_map(|m| (1..=reach).map(move |n| (rectangle_eigenvalue(a, b, m, n), m, n)))
        .collect();
    modes.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    modes.truncate(count);
    modes
}

/// Mesh, assembled operators and outline at one refinement level.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub boundary: FullBoundary,
    k: CsrMatrix,
    m: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct SectorSolve {
    pub system: SectorSystem,
    pub result: EigenResult,
}

impl Discretization {
    pub fn new(spec: &DomainSpec, numerics: &Numerics, level: usize) -> Result<Self> {
        numerics.validate()?;
        let q = quarter_boundary(spec)?;
        let mesh = generate_mesh(&q, numerics.target_h, numerics.tube_layers)?.refined(level);
        Self::from_mesh(mesh, reflect_full(&q))
    }

    /// The bare core `(-a,a) x (-b,b)` without a tube.
    pub fn rectangle(a: f64, b: f64, numerics: &Numerics, level: usize) -> Result<Self> {
        numerics.validate()?;
        let mesh = Mesh::quarter_rectangle(a, b, numerics.target_h)?.refined(level);
        Self::from_mesh(mesh, rectangle_boundary(a, b))
    }

    fn from_mesh(mesh: Mesh, boundary: FullBoundary) -> Result<Self> {
        let (k, m) = assemble(&mesh)?;
        Ok(Discretization { mesh, boundary, k, m })
    }

    pub fn has_cut(&self) -> bool {
        self.mesh.wall.is_some()
    }

    pub fn solve(&self, sector: Sector, count: usize, opts: &SolverOptions) -> Result<SectorSolve> {
        let system = reduce(&self.k, &self.m, &self.mesh, sector)?;
        let result = smallest_eigenpairs(&system, count.min(system.dofs()), opts)?;
        Ok(SectorSolve { system, result })
    }

    /// Solves every sector with enough pairs that the `kmax` smallest values
    /// of the union are all present.
    pub fn solve_all(&self, cut: CutBc, kmax: usize, opts: &SolverOptions) -> Result<Vec<SectorSolve>> {
        let mut counts = [kmax.div_ceil(4) + 2; 4];
        let mut solves: Vec<Option<SectorSolve>> = vec![None, None, None, None];
        loop {
            let todo: Vec<usize> = (0..4).filter(|&i| solves[i].is_none()).collect();
            let fresh: Vec<(usize, Result<SectorSolve>)> = todo
                .par_iter()
                .map(|&i| (i, self.solve(Sector::ALL[i].with_cut(cut), counts[i], opts)))
                .collect();
            for (i, r) in fresh {
                solves[i] = Some(r?);
            }
            let mut all: Vec<f64> = solves
                .iter()
                .flat_map(|s| s.as_ref().unwrap().result.values.iter().copied())
                .collect();
            all.sort_by(f64::total_cmp);
            let kth = all.get(kmax - 1).copied().unwrap_or(f64::INFINITY);
            let mut again = false;
            for i in 0..4 {
                let s = solves[i].as_ref().unwrap();
                let exhausted = s.result.values.len() == s.system.dofs();
                if !exhausted && *s.result.values.last().unwrap() <= kth {
                    counts[i] *= 2;
                    solves[i] = None;
                    again = true;
                }
            }
            if !again {
                return Ok(solves.into_iter().map(Option::unwrap).collect());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// 1-based position in the merged ordering.
    pub k: usize,
    pub lambda: f64,
    pub sector: Sector,
    /// 0-based position within its sector.
    pub sector_index: usize,
    pub residual: f64,
    pub degenerate: bool,
    /// Matching value with a Neumann cut, when bracketed.
    pub lambda_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub spec_hash: String,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    /// CSV with one row per eigenvalue; `lambda_d` repeats `lambda`. The
    /// sector label contains a comma and is quoted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "spec_hash,k,sector,lambda,lambda_n,lambda_d,residual")?;
        for r in &self.rows {
            let ln = r.lambda_n.map(|v| format!("{v:.12e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},\"{}\",{:.12e},{},{:.12e},{:.3e}",
                self.spec_hash,
                r.k,
                r.sector.label(),
                r.lambda,
                ln,
                r.lambda,
                r.residual
            )?;
        }
        Ok(())
    }
}

fn merge(solves: &[SectorSolve], kmax: usize, hash: String) -> SpectrumTable {
    let mut rows: Vec<SpectrumRow> = solves
        .iter()
        .flat_map(|s| {
            let r = &s.result;
            (0..r.values.len()).map(move |i| SpectrumRow {
                k: 0,
                lambda: r.values[i],
                sector: r.sector,
                sector_index: i,
                residual: r.residuals[i],
                degenerate: false,
                lambda_n: None,
            })
        })
        .collect();
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.sector.cmp(&b.sector)));
    rows.truncate(kmax);
    let flags = cluster_flags(&rows.iter().map(|r| r.lambda).collect::<Vec<_>>());
    for (i, (r, f)) in rows.iter_mut().zip(flags).enumerate() {
        r.k = i + 1;
        r.degenerate = f;
    }
    SpectrumTable { spec_hash: hash, rows }
}

/// Merged spectrum together with everything needed to revisit eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub disc: Discretization,
    pub solves: Vec<SectorSolve>,
    pub table: SpectrumTable,
}

impl SpectrumRun {
    pub fn field(&self, k: usize) -> Result<FullField> {
        let row = self
            .table
            .rows
            .get(k.wrapping_sub(1))
            .ok_or_else(|| ExperimentError::Argument(format!("no eigenpair k = {k}")))?;
        let s = self
            .solves
            .iter()
            .find(|s| s.result.sector == row.sector)
            .expect("row sector was solved");
        Ok(crate::nodal::reconstruct_full(&self.disc.mesh, &s.system, &s.result, row.sector_index)?)
    }

    pub fn nodal(&self, k: usize) -> Result<NodalReport> {
        Ok(analyze(&self.field(k)?, &self.disc.boundary)?)
    }
}

pub fn merged_spectrum_on(disc: Discretization, hash: String, kmax: usize, numerics: &Numerics) -> Result<SpectrumRun> {
    if kmax == 0 {
        return Err(ExperimentError::Argument("kmax must be at least 1".into()));
    }
    let solves = disc.solve_all(CutBc::Dirichlet, kmax, &numerics.solver_options())?;
    let table = merge(&solves, kmax, hash);
    let ground = table.rows[0].sector;
    if (ground.parity_x1, ground.parity_x2) != (Parity::Sym, Parity::Sym) {
        return Err(ExperimentError::GroundStateSector(ground.label()));
    }
    Ok(SpectrumRun { disc, solves, table })
}

/// All four sectors with a Dirichlet cut, merged and sorted.
pub fn merged_spectrum(spec: &DomainSpec, numerics: &Numerics, kmax: usize) -> Result<SpectrumRun> {
    let disc = Discretization::new(spec, numerics, numerics.refinements)?;
    merged_spectrum_on(disc, spec_hash(spec), kmax, numerics)
}

/// Merged spectrum with each value paired to its Neumann-cut counterpart.
pub fn bracketed_spectrum(spec: &DomainSpec, numerics: &Numerics, kmax: usize) -> Result<SpectrumRun> {
    let mut run = merged_spectrum(spec, numerics, kmax)?;
    let lower = run.disc.solve_all(CutBc::Neumann, kmax, &numerics.solver_options())?;
    let lower = merge(&lower, kmax, String::new());
    for (r, n) in run.table.rows.iter_mut().zip(&lower.rows) {
        r.lambda_n = Some(n.lambda);
    }
    Ok(run)
}

/// Bottom of the essential spectrum of the untruncated domain, when finite.
pub fn threshold(spec: &DomainSpec) -> Option<f64> {
    if spec.profile.decays() {
        None
    } else {
        Some(spec.strip_threshold())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketInterval {
    pub index: usize,
    pub lambda_n: f64,
    pub lambda_d: f64,
    pub gap: f64,
    /// Upper bound lies below the threshold.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketCertificate {
    /// Sector label, or `merged` for the union of all sectors.
    pub sector: String,
    #[serde(rename = "L")]
    pub trunc: f64,
    /// `None` stands for an infinite threshold.
    pub threshold: Option<f64>,
    pub intervals: Vec<BracketInterval>,
}

impl BracketCertificate {
    fn build(spec: &DomainSpec, sector: String, lower: &[f64], upper: &[f64]) -> Self {
        let thr = threshold(spec);
        let intervals = lower
            .iter()
            .zip(upper)
            .enumerate()
            .map(|(i, (&n, &d))| BracketInterval {
                index: i + 1,
                lambda_n: n,
                lambda_d: d,
                gap: d - n,
                valid: thr.is_none_or(|t| d < t),
            })
            .collect();
        BracketCertificate {
            sector,
            trunc: spec.trunc,
            threshold: thr,
            intervals,
        }
    }

    pub fn is_tight(&self, gap_tol: f64) -> bool {
        self.intervals.iter().all(|i| i.gap <= gap_tol)
    }

    /// Intervals with a valid certificate.
    pub fn certified(&self) -> impl Iterator<Item = &BracketInterval> {
        self.intervals.iter().filter(|i| i.valid)
    }
}

/// Two-sided bounds for the `k` lowest values of one parity class.
pub fn bracket(spec: &DomainSpec, parities: Sector, k: usize, numerics: &Numerics) -> Result<BracketCertificate> {
    if k == 0 {
        return Err(ExperimentError::Argument("k must be at least 1".into()));
    }
    let disc = Discretization::new(spec, numerics, numerics.refinements)?;
    let opts = numerics.solver_options();
    let upper = disc.solve(parities.with_cut(CutBc::Dirichlet), k, &opts)?;
    let lower = disc.solve(parities.with_cut(CutBc::Neumann), k, &opts)?;
    Ok(BracketCertificate::build(
        spec,
        parities.label(),
        &lower.result.values,
        &upper.result.values,
    ))
}

/// Two-sided bounds for the `kmax` lowest values of the whole domain.
pub fn bracket_merged(spec: &DomainSpec, kmax: usize, numerics: &Numerics) -> Result<BracketCertificate> {
    let run = bracketed_spectrum(spec, numerics, kmax)?;
    Ok(certificate_from(spec, &run.table))
}

/// Certificate from a bracketed table; rows without `lambda_n` give `NaN` bounds.
pub fn certificate_from(spec: &DomainSpec, table: &SpectrumTable) -> BracketCertificate {
    let upper: Vec<f64> = table.rows.iter().map(|r| r.lambda).collect();
    let lower: Vec<f64> = table.rows.iter().map(|r| r.lambda_n.unwrap_or(f64::NAN)).collect();
    BracketCertificate::build(spec, "merged".into(), &lower, &upper)
}

/// Richardson extrapolation for a second-order method from meshes `h` and `h/2`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub k: usize,
    pub sector: Sector,
    pub lambda_coarse: f64,
    pub lambda: f64,
    pub lambda_n: f64,
    pub lambda_extrapolated: f64,
    pub reference: f64,
    /// `reference - lambda_extrapolated`
    pub deviation: f64,
    /// `|deviation|` relative to the previous (larger) eps; `None` on the first.
    pub ratio: Option<f64>,
    pub certified: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub spec_hash: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, k: usize) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.k == k).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "spec_hash,eps,k,sector,lambda,lambda_n,lambda_d,lambda_extrapolated,reference,deviation,ratio,residual"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},\"{}\",{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{},{:.3e}",
                self.spec_hash,
                r.eps,
                r.k,
                r.sector.label(),
                r.lambda,
                r.lambda_n,
                r.lambda,
                r.lambda_extrapolated,
                r.reference,
                r.deviation,
                r.ratio.map(|v| format!("{v:.6e}")).unwrap_or_default(),
                r.residual
            )?;
        }
        Ok(())
    }
}

/// Thin-tube limit: merged spectra for each `eps` (in the order given)
/// against the bare-rectangle reference values.
pub fn eps_sweep(base: &DomainSpec, eps_list: &[f64], kmax: usize, numerics: &Numerics) -> Result<SweepTable> {
    if eps_list.is_empty() {
        return Err(ExperimentError::Argument("empty eps list".into()));
    }
    let specs: Vec<DomainSpec> = eps_list
        .iter()
        .map(|&eps| {
            let s = DomainSpec { eps, ..*base };
            s.validate().map(|_| s)
        })
        .collect::<std::result::Result<_, _>>()?;
    let reference = rectangle_spectrum(base.a, base.b, kmax);
    let fine_level = numerics.refinements;
    let per_eps: Vec<Result<Vec<SweepRow>>> = specs
        .par_iter()
        .map(|spec| {
            let run = bracketed_spectrum(spec, numerics, kmax)?;
            let coarse = if fine_level > 0 {
                let disc = Discretization::new(spec, numerics, fine_level - 1)?;
                Some(merged_spectrum_on(disc, String::new(), kmax, numerics)?.table)
            } else {
                None
            };
            let thr = threshold(spec);
            info!("eps {} solved", spec.eps);
            Ok(run
                .table
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let lc = coarse.as_ref().map_or(r.lambda, |c| c.rows[i].lambda);
                    let ext = if coarse.is_some() { richardson(lc, r.lambda) } else { r.lambda };
                    SweepRow {
                        eps: spec.eps,
                        k: r.k,
                        sector: r.sector,
                        lambda_coarse: lc,
                        lambda: r.lambda,
                        lambda_n: r.lambda_n.unwrap_or(f64::NAN),
                        lambda_extrapolated: ext,
                        reference: reference[i].0,
                        deviation: reference[i].0 - ext,
                        ratio: None,
                        certified: thr.is_none_or(|t| r.lambda < t),
                        residual: r.residual,
                    }
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_eps {
        rows.extend(r?);
    }
    for k in 1..=kmax {
        let mut prev: Option<f64> = None;
        for r in rows.iter_mut().filter(|r| r.k == k) {
            r.ratio = prev.map(|p| r.deviation.abs() / p);
            prev = Some(r.deviation.abs());
        }
    }
    Ok(SweepTable {
        spec_hash: spec_hash(base),
        rows,
    })
}

/// Classification a second eigenfunction from the given sector must have.
pub fn predicted_class(sector: Sector, sector_index: usize) -> Classification {
    match (sector.parity_x1, sector.parity_x2, sector_index) {
        (Parity::Anti, Parity::Sym, 0) => Classification::AxisR,
        (Parity::Sym, Parity::Anti, 0) => Classification::SegmentRPerp,
        (Parity::Sym, Parity::Sym, 1) => Classification::ClosedLoop,
        _ => Classification::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEnergy {
    /// Sector label with the position inside the sector, e.g. `(sym,sym)#2`.
    pub label: String,
    pub sector: Sector,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Competition {
    pub spec_hash: String,
    pub eps: f64,
    /// Candidates for the second eigenvalue, ascending.
    pub candidates: Vec<SectorEnergy>,
    pub owner: String,
    pub lambda2: f64,
    /// Set when the second eigenvalue sits in a degenerate cluster.
    pub near_crossing: bool,
    pub predicted: Option<Classification>,
    pub measured: Option<Classification>,
    pub nodal_domains: usize,
    pub min_dist: f64,
    pub touches_boundary: bool,
}

impl Competition {
    pub fn agrees(&self) -> bool {
        self.near_crossing || (self.predicted.is_some() && self.predicted == self.measured)
    }
}

/// Which sector owns the second eigenvalue, and whether the measured nodal
/// set of that eigenfunction has the predicted shape.
pub fn sector_competition(spec: &DomainSpec, numerics: &Numerics) -> Result<Competition> {
    competition_from(&merged_spectrum(spec, numerics, 3)?, spec)
}

pub fn competition_from(run: &SpectrumRun, spec: &DomainSpec) -> Result<Competition> {
    let mut candidates = Vec::new();
    for s in &run.solves {
        let r = &s.result;
        let (idx, tag) = match (r.sector.parity_x1, r.sector.parity_x2) {
            (Parity::Sym, Parity::Sym) => (1, "#2"),
            _ => (0, "#1"),
        };
        if let Some(&lambda) = r.values.get(idx) {
            candidates.push(SectorEnergy {
                label: format!("{}{tag}", r.sector.label()),
                sector: r.sector,
                lambda,
            });
        }
    }
    candidates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let rows = &run.table.rows;
    let second = rows
        .get(1)
        .ok_or_else(|| ExperimentError::Argument("need at least two eigenvalues".into()))?;
    let close = |x: f64, y: f64| (x - y).abs() <= CLUSTER_REL_GAP * (1.0 + x.abs().max(y.abs()));
    let near_crossing = second.degenerate
        || rows.get(2).is_some_and(|r| close(r.lambda, second.lambda))
        || close(rows[0].lambda, second.lambda);
    let owner = format!("{}#{}", second.sector.label(), second.sector_index + 1);
    let predicted = (!near_crossing).then(|| predicted_class(second.sector, second.sector_index));
    let report = run.nodal(2)?;
    let measured = if near_crossing { None } else { report.classification };
    Ok(Competition {
        spec_hash: spec_hash(spec),
        eps: spec.eps,
        candidates,
        owner,
        lambda2: second.lambda,
        near_crossing,
        predicted,
        measured,
        nodal_domains: report.n_nodal_domains,
        min_dist: report.min_dist_to_boundary,
        touches_boundary: report.touches_boundary,
    })
}

/// Owner of the second eigenvalue along an `eps` grid, with the first
/// interval on which it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipScan {
    pub points: Vec<Competition>,
    /// `(last eps with the small-eps owner, first eps without it)`.
    pub flip: Option<(f64, f64)>,
}

pub fn competition_flip(base: &DomainSpec, eps_list: &[f64], numerics: &Numerics) -> Result<FlipScan> {
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let points = eps
        .par_iter()
        .map(|&e| sector_competition(&DomainSpec { eps: e, ..*base }, numerics))
        .collect::<Result<Vec<_>>>()?;
    let flip = points
        .windows(2)
        .find(|w| w[1].owner != points[0].owner)
        .map(|w| (w[0].eps, w[1].eps));
    Ok(FlipScan { points, flip })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    #[serde(rename = "L")]
    pub trunc: f64,
    pub classification: Option<Classification>,
    pub min_dist: f64,
    /// Narrowest tube half-width, `eps h(L)`.
    pub expected_min_dist: f64,
    pub touches_boundary: bool,
    pub tol_geo: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub owner: String,
    pub nodal_domains: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub case: String,
    pub spec_hash: String,
    pub nodal_classification: Option<Classification>,
    pub min_dist: f64,
    pub touches_boundary: bool,
    pub tol_geo: f64,
    pub lambda2: f64,
    /// Threshold of the essential spectrum, `None` when there is none.
    pub threshold: Option<f64>,
    /// Case i: the second eigenvalue has a valid certificate.
    pub discrete_below_threshold: Option<bool>,
    /// Nodal-domain counts of `u_1 .. u_kmax` in merged order.
    pub nodal_domain_counts: Vec<usize>,
    /// Case ii: one entry per truncation length, ascending.
    pub lengths: Vec<LengthPoint>,
    /// Case ii: largest change of `lambda_1, lambda_2` between the two longest truncations.
    pub lambda_drift: Option<f64>,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub const VERDICT_KMAX: usize = 6;
/// Allowed drift of the two lowest eigenvalues between the two longest cuts.
pub const DRIFT_TOL: f64 = 1e-6;
/// Allowed relative mismatch of the measured distance against `eps h(L)`.
pub const DIST_REL_TOL: f64 = 0.1;

/// Checks the nodal line of the second eigenfunction. Constant profiles
/// give case i at `spec.trunc`; decaying profiles give case ii across
/// `lengths`.
pub fn theorem_verdict(spec: &DomainSpec, numerics: &Numerics, lengths: &[f64]) -> Result<Verdict> {
    spec.validate()?;
    let mut failures = Vec::new();
    if !spec.profile.decays() {
        let run = bracketed_spectrum(spec, numerics, VERDICT_KMAX)?;
        let counts = (1..=run.table.rows.len())
            .map(|k| Ok(crate::nodal::count_nodal_domains(&run.field(k)?)))
            .collect::<Result<Vec<_>>>()?;
        let report = run.nodal(2)?;
        let cert = certificate_from(spec, &run.table);
        let second = &run.table.rows[1];
        let valid = cert.intervals[1].valid;
        if report.classification != Some(Classification::AxisR) {
            failures.push(format!("nodal set classified {:?}, expected axis_r", report.classification));
        }
        if report.touches_boundary {
            failures.push("nodal line touches the boundary".into());
        }
        if (report.min_dist_to_boundary - spec.eps).abs() > 2.0 * report.tol_geo {
            failures.push(format!(
                "distance {} differs from eps = {} by more than 2 tol_geo",
                report.min_dist_to_boundary, spec.eps
            ));
        }
        if !valid {
            failures.push("second eigenvalue is not certified below the threshold".into());
        }
        if (second.sector.parity_x1, second.sector.parity_x2) != (Parity::Anti, Parity::Sym) {
            failures.push(format!("second eigenvalue owned by {}", second.sector.label()));
        }
        if counts.get(1) != Some(&2) {
            failures.push(format!("u_2 has {:?} nodal domains", counts.get(1)));
        }
        for (i, &c) in counts.iter().enumerate() {
            if c > i + 1 {
                failures.push(format!("u_{} has {c} nodal domains", i + 1));
            }
        }
        return Ok(Verdict {
            case: "i".into(),
            spec_hash: spec_hash(spec),
            nodal_classification: report.classification,
            min_dist: report.min_dist_to_boundary,
            touches_boundary: report.touches_boundary,
            tol_geo: report.tol_geo,
            lambda2: second.lambda,
            threshold: cert.threshold,
            discrete_below_threshold: Some(valid),
            nodal_domain_counts: counts,
            lengths: Vec::new(),
            lambda_drift: None,
            passed: failures.is_empty(),
            failures,
        });
    }

    if lengths.len() < 3 {
        return Err(ExperimentError::Argument("case ii needs at least three truncation lengths".into()));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points: Vec<Result<(LengthPoint, Vec<usize>)>> = sorted
        .par_iter()
        .map(|&trunc| {
            let s = DomainSpec { trunc, ..*spec };
            let run = merged_spectrum(&s, numerics, 2)?;
            let report = run.nodal(2)?;
            let rows = &run.table.rows;
            let counts = (1..=rows.len())
                .map(|k| Ok(crate::nodal::count_nodal_domains(&run.field(k)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                LengthPoint {
                    trunc,
                    classification: report.classification,
                    min_dist: report.min_dist_to_boundary,
                    expected_min_dist: s.min_tube_width(),
                    touches_boundary: report.touches_boundary,
                    tol_geo: report.tol_geo,
                    lambda1: rows[0].lambda,
                    lambda2: rows[1].lambda,
                    owner: format!("{}#{}", rows[1].sector.label(), rows[1].sector_index + 1),
                    nodal_domains: report.n_nodal_domains,
                },
                counts,
            ))
        })
        .collect();
    let mut pts = Vec::new();
    let mut counts = Vec::new();
    for p in points {
        let (pt, c) = p?;
        pts.push(pt);
        counts = c;
    }
    for p in &pts {
        if p.classification != Some(Classification::AxisR) {
            failures.push(format!("L = {}: nodal set classified {:?}", p.trunc, p.classification));
        }
        if (p.min_dist - p.expected_min_dist).abs() > DIST_REL_TOL * p.expected_min_dist {
            failures.push(format!(
                "L = {}: distance {:e} not within 10% of {:e}",
                p.trunc, p.min_dist, p.expected_min_dist
            ));
        }
    }
    for w in pts.windows(2) {
        if !(w[1].min_dist < w[0].min_dist) {
            failures.push(format!("distance does not decrease from L = {} to L = {}", w[0].trunc, w[1].trunc));
        }
    }
    let (a, b) = (&pts[pts.len() - 2], &pts[pts.len() - 1]);
    let drift = (a.lambda1 - b.lambda1).abs().max((a.lambda2 - b.lambda2).abs());
    if !(drift < DRIFT_TOL) {
        failures.push(format!("lambda_1, lambda_2 drift {drift:e} between the two longest cuts"));
    }
    let last = pts.last().unwrap().clone();
    Ok(Verdict {
        case: "ii".into(),
        spec_hash: spec_hash(spec),
        nodal_classification: last.classification,
        min_dist: last.min_dist,
        touches_boundary: last.touches_boundary,
        tol_geo: last.tol_geo,
        lambda2: last.lambda2,
        threshold: None,
        discrete_below_threshold: None,
        nodal_domain_counts: counts,
        lengths: pts,
        lambda_drift: Some(drift),
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> Numerics {
        Numerics {
            target_h: 0.1,
            refinements: 0,
            ..Numerics::default()
        }
    }

    #[test]
    fn rectangle_oracle_values() {
        let modes = rectangle_spectrum(2.0, 1.0, 8);
        let scaled: Vec<f64> = modes.iter().map(|m| m.0 / (PI * PI)).collect();
        let expect = [0.3125, 0.5, 0.8125, 1.0625, 1.25, 1.25, 1.5625, 1.8125];
        for (s, e) in scaled.iter().zip(expect) {
            assert!((s - e).abs() < 1e-14);
        }
        assert_eq!((modes[0].1, modes[0].2), (1, 1));
        assert_eq!((modes[1].1, modes[1].2), (2, 1));
        assert_eq!(rectangle_mode_sector(4, 1), Sector::new(Parity::Anti, Parity::Sym));
        assert_eq!(rectangle_mode_sector(2, 2), Sector::new(Parity::Anti, Parity::Anti));
    }

    #[test]
    fn richardson_removes_second_order_term() {
        let exact = 3.0;
        let f = |h: f64| exact + 0.7 * h * h;
        assert!((richardson(f(0.1), f(0.05)) - exact).abs() < 1e-14);
    }

    #[test]
    fn rectangle_merged_spectrum_orders_sectors() {
        let disc = Discretization::rectangle(2.0, 1.0, &coarse(), 1).unwrap();
        let run = merged_spectrum_on(disc, "rect".into(), 8, &coarse()).unwrap();
        let oracle = rectangle_spectrum(2.0, 1.0, 8);
        for (i, (row, (lam, m, n))) in run.table.rows.iter().zip(&oracle).enumerate() {
            assert!(row.lambda >= *lam, "conforming elements overestimate");
            assert!((row.lambda - lam) / lam < 5e-3);
            let paired = oracle
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && (o.0 - lam).abs() < 1e-9);
            if !paired {
                assert_eq!(row.sector, rectangle_mode_sector(*m, *n));
            }
        }
    }

    #[test]
    fn bracket_orders_bounds_and_flags_threshold() {
        let spec = DomainSpec::new(2.0, 1.0, 0.4, Profile::constant(), 2.0);
        let cert = bracket(&spec, Sector::new(Parity::Sym, Parity::Sym), 4, &coarse()).unwrap();
        let thr = PI * PI / 0.64;
        assert!((cert.threshold.unwrap() - thr).abs() < 1e-12);
        for i in &cert.intervals {
            assert!(i.lambda_n <= i.lambda_d + 1e-8);
            assert_eq!(i.valid, i.lambda_d < thr);
        }
        assert!(cert.intervals.iter().any(|i| !i.valid));
    }

    #[test]
    fn decaying_profile_has_no_threshold() {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::exp_decay(1.0), 2.0);
        let cert = bracket(&spec, Sector::new(Parity::Anti, Parity::Sym), 1, &coarse()).unwrap();
        assert_eq!(cert.threshold, None);
        assert!(cert.intervals[0].valid);
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("\"threshold\":null"));
    }

    #[test]
    fn competition_picks_the_axis_mode() {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::constant(), 2.0);
        let c = sector_competition(&spec, &coarse()).unwrap();
        assert_eq!(c.owner, "(anti,sym)#1");
        assert_eq!(c.predicted, Some(Classification::AxisR));
        assert!(c.agrees());
        let rank = c.candidates.iter().position(|e| e.label == "(anti,anti)#1").unwrap();
        assert!(rank >= 2);
    }

    #[test]
    fn near_square_core_flips_owner_for_wide_tubes() {
        let base = DomainSpec::new(1.05, 1.0, 0.1, Profile::constant(), 2.0);
        let scan = competition_flip(&base, &[0.4, 0.1], &coarse()).unwrap();
        assert_eq!(scan.points[0].owner, "(anti,sym)#1");
        assert_eq!(scan.points[1].owner, "(sym,anti)#1");
        assert_eq!(scan.flip, Some((0.1, 0.4)));
        assert!(scan.points.iter().all(Competition::agrees));
        assert_eq!(scan.points[1].measured, Some(Classification::SegmentRPerp));
    }

    #[test]
    fn spec_hash_is_stable_and_sensitive() {
        let a = Preset::TheoremI.spec();
        let mut b = a;
        b.eps = 0.05;
        assert_eq!(spec_hash(&a), spec_hash(&a));
        assert_ne!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 16);
    }

    #[test]
    fn zero_kmax_is_rejected() {
        let spec = Preset::TheoremI.spec();
        assert!(matches!(bracket(&spec, Sector::ALL[0], 0, &coarse()), Err(ExperimentError::Argument(_))));
        assert!(matches!(
            eps_sweep(&spec, &[], 3, &coarse()),
            Err(ExperimentError::Argument(_))
        ));
    }
}
