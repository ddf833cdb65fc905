//! Command implementations behind the `perron-perturb` binary. Each command
//! returns plain data; formatting to files and terminals lives here too so
//! the binary only parses arguments and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::NonnegativeMatrix;
use crate::matcore::NzpReport;
use crate::perturb::{
    asymptotics, classify, eigenvalues, log_grid, p_vw_lemma16, trace_eigenvalues_on_grid,
    AsymptoticReport, EigenCurveSet, PerturbationProblem, StabilityVerdict,
};
use crate::poly::{roots, routh_hurwitz, HurwitzVerdict, RealPolynomial, RootSet};
use crate::search::{
    circulant_3, circulant_3_variant, counterexample_4, family_problem, run_search, transient_3,
    SearchConfig, SearchSummary,
};

/// JSON input: `{"H": [[…], …], "v": […], "w": […], "label": "…"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ProblemFile {
    pub fn from_problem(prob: &PerturbationProblem, label: impl Into<String>) -> Self {
        Self {
            h: prob.h().to_rows(),
            v: prob.v().as_slice().to_vec(),
            w: prob.w().as_slice().to_vec(),
            label: Some(label.into()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads from a path, or from standard input when the path is `-`.
    pub fn read(path: &Path) -> Result<Self> {
        let mut text = String::new();
        if path.as_os_str() == "-" {
            io::stdin().read_to_string(&mut text)?;
        } else {
            text = std::fs::read_to_string(path)?;
        }
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn to_problem(&self) -> Result<PerturbationProblem> {
        let n = self.h.len();
        for len in [self.v.len(), self.w.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        let h = NonnegativeMatrix::from_rows(&self.h)?;
        PerturbationProblem::new(
            h,
            DVector::from_vec(self.v.clone()),
            DVector::from_vec(self.w.clone()),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub label: Option<String>,
    pub n: usize,
    pub rho: f64,
    pub simple: bool,
    pub irreducible: bool,
    pub nzp: NzpReport,
    pub wv: f64,
    pub a_spectrum: RootSet,
    /// Ascending coefficients.
    pub pvw: RealPolynomial,
    pub pvw_roots: RootSet,
    pub hurwitz: HurwitzVerdict,
    pub verdict: StabilityVerdict,
    pub asymptotics: AsymptoticReport,
}

pub fn cmd_analyze(input: &ProblemFile) -> Result<AnalyzeReport> {
    let prob = input.to_problem()?;
    let pvw = p_vw_lemma16(&prob)?;
    let pvw_roots = if pvw.is_zero() {
        RootSet::default()
    } else {
        roots(&pvw)?
    };
    Ok(AnalyzeReport {
        label: input.label.clone(),
        n: prob.dim(),
        rho: prob.rho(),
        // construction fails with NotSimple otherwise
        simple: true,
        irreducible: prob.irreducible(),
        nzp: prob.nzp(),
        wv: prob.wv(),
        a_spectrum: eigenvalues(prob.a())?,
        hurwitz: routh_hurwitz(&pvw),
        pvw_roots,
        pvw,
        verdict: classify(&prob),
        asymptotics: asymptotics(&prob)?,
    })
}

fn fmt_complex(z: Complex64) -> String {
    // values that print as zero should not print as `-0.000000`
    let tidy = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
    let z = Complex64::new(tidy(z.re), tidy(z.im));
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!(
            "{:.6} {} {:.6}i",
            z.re,
            if z.im < 0.0 { '-' } else { '+' },
            z.im.abs()
        )
    }
}

fn fmt_roots(set: &RootSet) -> String {
    if set.is_empty() {
        return "(none)".into();
    }
    set.roots
        .iter()
        .map(|r| match r.multiplicity {
            1 => fmt_complex(r.value),
            m => format!("{} (×{m})", fmt_complex(r.value)),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_poly(p: &RealPolynomial) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for k in (0..=p.degree()).rev() {
        let c = p.coeff(k);
        if c == 0.0 && k != 0 {
            continue;
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        if s.is_empty() {
            if c < 0.0 {
                s.push('-');
            }
        } else {
            let _ = write!(s, " {sign} ");
        }
        let _ = match k {
            0 => write!(s, "{:.6}", c.abs()),
            1 => write!(s, "{:.6}λ", c.abs()),
            _ => write!(s, "{:.6}λ^{k}", c.abs()),
        };
    }
    s
}

impl AnalyzeReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(label) = &self.label {
            let _ = writeln!(s, "problem       {label}");
        }
        let _ = writeln!(s, "n             {}", self.n);
        let _ = writeln!(s, "rho(H)        {:.12} (simple)", self.rho);
        let _ = writeln!(s, "irreducible   {}", self.irreducible);
        let _ = writeln!(
            s,
            "NZP           {} (z_l·v = {:.6e}, w·z_r = {:.6e})",
            if self.nzp.holds { "holds" } else { "fails" },
            self.nzp.lv,
            self.nzp.wr
        );
        let _ = writeln!(s, "w·v           {:.12}", self.wv);
        let _ = writeln!(s, "sigma(A)      {}", fmt_roots(&self.a_spectrum));
        let _ = writeln!(s, "p_vw          {}", fmt_poly(&self.pvw));
        let _ = writeln!(s, "p_vw roots    {}", fmt_roots(&self.pvw_roots));
        let _ = writeln!(
            s,
            "Routh-Hurwitz {:?}{}",
            self.hurwitz.status,
            self.hurwitz
                .first_failure
                .map(|k| format!(" (first failing row {k})"))
                .unwrap_or_default()
        );
        let _ = writeln!(s, "case          {:?}", self.asymptotics.case);
        for b in &self.asymptotics.divergent_branches {
            let _ = write!(
                s,
                "  branch      {}·t^{:.4}",
                fmt_complex(b.leading),
                b.exponent
            );
            if let Some(c) = b.constant {
                let _ = write!(s, " + ({})", fmt_complex(c));
            }
            s.push('\n');
        }
        if !self.asymptotics.persistent.is_empty() {
            let _ = writeln!(
                s,
                "persistent    {}",
                fmt_roots(&self.asymptotics.persistent)
            );
        }
        let _ = writeln!(s, "verdict       {:?}", self.verdict.status);
        if let Some(t1) = self.verdict.t1_estimate {
            let _ = writeln!(s, "t1 estimate   {t1:.6e}");
        }
        if let Some(re) = self.verdict.branch_limit_re {
            let _ = writeln!(s, "branch Re →   {re:.6}");
        }
        if let Some(reason) = &self.verdict.reason {
            let _ = writeln!(s, "reason        {reason}");
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 1e3,
            points: 200,
        }
    }
}

/// Traces the eigenvalue curves and writes them as CSV, plus an SVG
/// rendering when `out_svg` is given. `t_min = t_max` yields a single row.
pub fn cmd_trace(
    input: &ProblemFile,
    opts: TraceOptions,
    out_csv: &Path,
    out_svg: Option<&Path>,
) -> Result<EigenCurveSet> {
    if !(opts.t_min > 0.0 && opts.t_min <= opts.t_max && opts.t_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < t_min ≤ t_max, got [{}, {}]",
            opts.t_min, opts.t_max
        )));
    }
    if opts.points == 0 {
        return Err(Error::InvalidInput("need at least one grid point".into()));
    }
    let prob = input.to_problem()?;
    let curves = trace_eigenvalues_on_grid(&prob, &log_grid(opts.t_min, opts.t_max, opts.points))?;
    let mut out = BufWriter::new(File::create(out_csv)?);
    write_csv(&curves, &mut out)?;
    out.flush()?;
    if let Some(path) = out_svg {
        std::fs::write(path, render_svg(&curves, input.label.as_deref()))?;
    }
    Ok(curves)
}

/// Header `t,re_1,im_1,…`, then one row per grid point with 17 significant
/// digits per value.
pub fn write_csv(curves: &EigenCurveSet, out: &mut impl Write) -> io::Result<()> {
    let n = curves.paths.len();
    let mut header = String::from("t");
    for i in 1..=n {
        let _ = write!(header, ",re_{i},im_{i}");
    }
    writeln!(out, "{header}")?;
    for (j, t) in curves.t_grid.iter().enumerate() {
        let mut row = format!("{t:.16e}");
        for path in &curves.paths {
            let _ = write!(row, ",{:.16e},{:.16e}", path[j].re, path[j].im);
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const SVG_MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn star(cx: f64, cy: f64, spikes: usize, outer: f64, inner: f64) -> String {
    (0..2 * spikes)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            let a = std::f64::consts::PI * k as f64 / spikes as f64 - std::f64::consts::FRAC_PI_2;
            format!("{:.2},{:.2}", cx + r * a.cos(), cy + r * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Scatter plot of the curves in the complex plane. Eigenvalues of `A` are
/// green five-pointed stars, roots of `p_vw` blue four-pointed stars.
pub fn render_svg(curves: &EigenCurveSet, title: Option<&str>) -> String {
    let pts: Vec<Complex64> = curves
        .paths
        .iter()
        .flatten()
        .copied()
        .chain(curves.a_eigs.values())
        .chain(curves.pvw_roots.values())
        .filter(|z| z.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ),
        |(a, b, c, d), z| (a.min(z.re), b.max(z.re), c.min(z.im), d.max(z.im)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    // include the imaginary axis and avoid empty ranges
    x0 = x0.min(0.0);
    x1 = x1.max(0.0);
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(1e-9 * (1.0 + lo.abs().max(hi.abs())));
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |x: f64| SVG_MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * SVG_MARGIN);
    let sy = |y: f64| SVG_H - SVG_MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * SVG_MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#000"/>"##,
        m = SVG_MARGIN,
        w = SVG_W - 2.0 * SVG_MARGIN,
        h = SVG_H - 2.0 * SVG_MARGIN
    );
    // axes through the origin when visible
    if y0 <= 0.0 && 0.0 <= y1 {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#aaa"/>"##,
            SVG_MARGIN,
            SVG_W - SVG_MARGIN,
            y = sy(0.0)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#aaa"/>"##,
        SVG_MARGIN,
        SVG_H - SVG_MARGIN,
        x = sx(0.0)
    );
    for (label, x, y, anchor) in [
        (
            format!("{x0:.3e}"),
            SVG_MARGIN,
            SVG_H - SVG_MARGIN + 20.0,
            "start",
        ),
        (
            format!("{x1:.3e}"),
            SVG_W - SVG_MARGIN,
            SVG_H - SVG_MARGIN + 20.0,
            "end",
        ),
        (
            format!("{y0:.3e}"),
            SVG_MARGIN - 5.0,
            SVG_H - SVG_MARGIN,
            "end",
        ),
        (
            format!("{y1:.3e}"),
            SVG_MARGIN - 5.0,
            SVG_MARGIN + 10.0,
            "end",
        ),
        ("Re λ".to_string(), SVG_W / 2.0, SVG_H - 15.0, "middle"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="{anchor}">{label}</text>"#
        );
    }
    if let Some(title) = title {
        let title = title
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="30" font-size="16" text-anchor="middle">{title}</text>"#,
            SVG_W / 2.0
        );
    }
    for (i, path) in curves.paths.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g fill="{color}">"#);
        for z in path.iter().filter(|z| z.is_finite()) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.8"/>"#,
                sx(z.re),
                sy(z.im)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    for z in curves.a_eigs.values() {
        let _ = writeln!(
            s,
            r##"<polygon class="a-eig" points="{}" fill="#2ca02c" stroke="#000" stroke-width="0.5"/>"##,
            star(sx(z.re), sy(z.im), 5, 8.0, 3.5)
        );
    }
    for z in curves.pvw_roots.values() {
        let _ = writeln!(
            s,
            r##"<polygon class="pvw-root" points="{}" fill="#1f77b4" stroke="#000" stroke-width="0.5"/>"##,
            star(sx(z.re), sy(z.im), 4, 8.0, 2.5)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Runs the search and writes each record as one JSON line.
pub fn cmd_search(config: &SearchConfig, out_jsonl: &Path) -> Result<SearchSummary> {
    let outcome = run_search(config)?;
    let mut out = BufWriter::new(File::create(out_jsonl)?);
    for r in &outcome.records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(outcome.summary)
}

/// Selectors: `cx4`, `ex33`, `ex34`, `ex34b`, `family(n)` for `n ≥ 4`.
pub fn cmd_paper_example(which: &str) -> Result<ProblemFile> {
    let which = which.trim();
    let prob = match which {
        "cx4" => counterexample_4(),
        "ex33" => transient_3(),
        "ex34" => circulant_3(),
        "ex34b" => circulant_3_variant(),
        _ => {
            let n = which
                .strip_prefix("family(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|d| d.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::UnknownSelector(which.to_string()))?;
            family_problem(n)?
        }
    };
    Ok(ProblemFile::from_problem(&prob, which))
}
