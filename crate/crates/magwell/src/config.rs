//! Run configuration: flat `key = value` text with `#` comments and dotted
//! section prefixes.
//!
//! ```text
//! profile.b0 = 1
//! profile.b1 = 2
//! profile.a = 1
//! profile.L = 5
//! profile.kappa = 1
//! h_list = 0.1, 0.05, 0.025
//! radial.n = 40000
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid2d::{EigenConfig, LatticeParams};
use crate::interaction::QuadratureConfig;
use crate::profile::{FluxData, MagneticProfile, WellGeometry};
use crate::radial::RadialSolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileSource {
    BuiltIn {
        kappa: f64,
    },
    /// Two-column `u,beta` table.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub b0: f64,
    pub b1: f64,
    pub a: f64,
    pub l: f64,
    pub source: ProfileSource,
}

impl ProfileConfig {
    pub fn build(&self) -> Result<(MagneticProfile, WellGeometry)> {
        let profile = match &self.source {
            ProfileSource::BuiltIn { kappa } => MagneticProfile::builtin(self.b0, self.b1, self.a, *kappa)?,
            ProfileSource::Table(path) => MagneticProfile::from_table_file(self.b0, self.b1, self.a, path)?,
        };
        let geometry = WellGeometry::new(self.l, &profile)?;
        Ok((profile, geometry))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub h: f64,
    pub lattice: LatticeParams,
    pub eigen: EigenConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: ProfileConfig,
    pub radial: RadialSolverConfig,
    pub quadrature: QuadratureConfig,
    pub grid: GridConfig,
    /// Semiclassical parameters for `splitting` and `sweep`.
    pub h_list: Vec<f64>,
    /// Parameters used to extract the midpoint WKB amplitude.
    pub amplitude_h: Vec<f64>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub jobs: usize,
    /// Refuse configurations with L ≤ (2 + √6)a instead of warning.
    pub require_theorem_hypothesis: bool,
    /// Non-fatal findings, such as a failed geometric hypothesis.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// b0 = 1, b1 = 2, a = 1, L = 5, κ = 1.
    pub fn reference() -> Self {
        let profile = ProfileConfig { b0: 1.0, b1: 2.0, a: 1.0, l: 5.0, source: ProfileSource::BuiltIn { kappa: 1.0 } };
        RunConfig {
            radial: RadialSolverConfig { r_max: 8.0, n: 40_000, eig_tol: 1e-14, richardson: true },
            profile,
            quadrature: QuadratureConfig::default(),
            grid: GridConfig {
                h: 0.5,
                lattice: LatticeParams { half_width: 6.0, dx: 0.03 },
                eigen: EigenConfig::default(),
            },
            h_list: vec![0.1, 0.05, 0.025],
            amplitude_h: vec![0.02, 0.01, 0.005],
            csv: None,
            json: None,
            jobs: 1,
            require_theorem_hypothesis: false,
            warnings: Vec::new(),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { context: format!("reading config {}", path.display()), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Parses configuration text; relative paths resolve against `base`. Every
/// problem found is reported, not just the first.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let mut problems = Vec::new();
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!("line {}: expected `key = value`", i + 1));
            continue;
        };
        let key = key.trim().to_string();
        if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
            problems.push(format!("line {}: duplicate key `{key}`", i + 1));
        }
    }

    let mut cfg = RunConfig::reference();
    let mut r_max_given = false;
    let mut kappa = None;
    let mut table = None;
    for (key, (line, value)) in &entries {
        let parsed = value.parse::<f64>();
        let mut bad_number = false;
        let mut num = |slot: &mut f64| match parsed {
            Ok(v) => *slot = v,
            Err(_) => bad_number = true,
        };
        match key.as_str() {
            "profile.b0" => num(&mut cfg.profile.b0),
            "profile.b1" => num(&mut cfg.profile.b1),
            "profile.a" => num(&mut cfg.profile.a),
            "profile.L" => num(&mut cfg.profile.l),
            "profile.kappa" => {
                let mut k = f64::NAN;
                num(&mut k);
                kappa = Some(k);
            }
            "profile.table" => table = Some(base.join(value)),
            "radial.r_max" => {
                num(&mut cfg.radial.r_max);
                r_max_given = true;
            }
            "radial.eig_tol" => num(&mut cfg.radial.eig_tol),
            "quadrature.osc_points_per_period" => num(&mut cfg.quadrature.osc_points_per_period),
            "quadrature.ode_tol" => num(&mut cfg.quadrature.ode_tol),
            "quadrature.ln_cutoff" => num(&mut cfg.quadrature.ln_cutoff),
            "quadrature.y_tol" => num(&mut cfg.quadrature.y_tol),
            "quadrature.s_tol" => num(&mut cfg.quadrature.s_tol),
            "quadrature.x2_halfwidth" => {
                let mut x = f64::NAN;
                num(&mut x);
                cfg.quadrature.x2_halfwidth = Some(x);
            }
            "grid.h" => num(&mut cfg.grid.h),
            "grid.box" => num(&mut cfg.grid.lattice.half_width),
            "grid.dx" => num(&mut cfg.grid.lattice.dx),
            "grid.tol" => num(&mut cfg.grid.eigen.tol),
            "radial.n" | "quadrature.panel_order" | "grid.block" | "grid.degree" | "grid.seed" | "jobs" => {
                match value.parse::<u64>() {
                    Ok(v) => match key.as_str() {
                        "radial.n" => cfg.radial.n = v as usize,
                        "quadrature.panel_order" => cfg.quadrature.panel_order = v as usize,
                        "grid.block" => cfg.grid.eigen.block = v as usize,
                        "grid.degree" => cfg.grid.eigen.degree = v as usize,
                        "grid.seed" => cfg.grid.eigen.seed = v,
                        _ => cfg.jobs = v as usize,
                    },
                    Err(_) => {
                        problems.push(format!("line {line}: `{key}` needs a non-negative integer, got `{value}`"))
                    }
                }
            }
            "radial.richardson" | "require_theorem_hypothesis" => match value.parse::<bool>() {
                Ok(v) if key == "radial.richardson" => cfg.radial.richardson = v,
                Ok(v) => cfg.require_theorem_hypothesis = v,
                Err(_) => problems.push(format!("line {line}: `{key}` needs true or false, got `{value}`")),
            },
            "h_list" | "amplitude.h_list" => match parse_list(value) {
                Ok(v) if key == "h_list" => cfg.h_list = v,
                Ok(v) => cfg.amplitude_h = v,
                Err(e) => problems.push(format!("line {line}: `{key}`: {e}")),
            },
            "output.csv" => cfg.csv = Some(base.join(value)),
            "output.json" => cfg.json = Some(base.join(value)),
            _ => problems.push(format!("line {line}: unknown key `{key}`")),
        }
        if bad_number {
            problems.push(format!("line {line}: `{key}` needs a number, got `{value}`"));
        }
    }
    cfg.profile.source = match (kappa, table) {
        (Some(_), Some(_)) => {
            problems.push("give either profile.kappa or profile.table, not both".into());
            cfg.profile.source
        }
        (Some(k), None) => ProfileSource::BuiltIn { kappa: k },
        (None, Some(t)) => ProfileSource::Table(t),
        (None, None) => cfg.profile.source,
    };
    if !r_max_given {
        cfg.radial.r_max = cfg.profile.l + 3.0;
    }
    validate(&mut cfg, &mut problems);
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(problems))
    }
}

/// Parses `0.1, 0.05, 0.025`.
pub fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", s.trim()))).collect()
}

fn validate(cfg: &mut RunConfig, problems: &mut Vec<String>) {
    let p = &cfg.profile;
    let start = problems.len();
    if !(p.b0 > 0.0) {
        problems.push(format!("profile.b0 = {} must be positive", p.b0));
    }
    if !(p.b0 < p.b1) {
        problems.push(format!("the field must increase away from the wells: need b0 < b1, got {} ≥ {}", p.b0, p.b1));
    }
    if !(p.a > 0.0) {
        problems.push(format!("profile.a = {} must be positive", p.a));
    }
    if !(p.a < 0.5 * p.l) {
        problems.push(format!("the wells overlap: need a < L/2, got a = {} and L = {}", p.a, p.l));
    }
    if let ProfileSource::BuiltIn { kappa } = p.source {
        if !(kappa > 0.0 && kappa.is_finite()) {
            problems.push(format!("profile.kappa = {kappa} must be positive"));
        }
    }
    for (name, list) in [("h_list", &cfg.h_list), ("amplitude.h_list", &cfg.amplitude_h)] {
        if list.is_empty() || list.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            problems.push(format!("{name} must be a non-empty list of positive numbers"));
        }
    }
    if cfg.jobs == 0 {
        problems.push("jobs must be at least 1".into());
    }
    for check in [cfg.radial.validate(), cfg.quadrature.validate()] {
        if let Err(e) = check {
            problems.push(e.to_string());
        }
    }
    if let Err(e) = cfg.grid.lattice.cells() {
        problems.push(e.to_string());
    }
    if problems.len() > start {
        return;
    }
    // The profile is well formed; check the geometric conditions.
    let built = cfg.profile.build().and_then(|(profile, geometry)| {
        let flux = FluxData::new(&profile, &geometry)?;
        Ok((profile, geometry, flux))
    });
    let (profile, geometry, _) = match built {
        Ok(v) => v,
        Err(e) => {
            problems.push(e.to_string());
            return;
        }
    };
    let bound = (2.0 + 6f64.sqrt()) * profile.a();
    if !geometry.theorem_hypothesis(profile.a()) {
        let msg = format!("L = {} does not exceed (2 + √6)a = {bound:.6}", geometry.l);
        if cfg.require_theorem_hypothesis {
            problems.push(msg);
            return;
        }
        let weaker = crate::asymptotics::PredictionConstants::compute(&profile, &geometry)
            .map(|c| c.separation_holds())
            .unwrap_or(false);
        cfg.warnings.push(format!(
            "{msg}; the separation condition 2S0 > S {} numerically",
            if weaker { "still holds" } else { "FAILS" }
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG_A: &str = "
        # reference configuration
        profile.b0 = 1
        profile.b1 = 2
        profile.a = 1
        profile.L = 5
        profile.kappa = 1
        h_list = 0.1, 0.05
        radial.n = 20000   # coarse
    ";

    #[test]
    fn reference_file_parses() {
        let cfg = parse_config_str(CFG_A, Path::new(".")).unwrap();
        assert_eq!(cfg.h_list, vec![0.1, 0.05]);
        assert_eq!(cfg.radial.n, 20000);
        assert_eq!(cfg.radial.r_max, 8.0);
        assert!(cfg.warnings.is_empty());
        let (p, g) = cfg.profile.build().unwrap();
        assert!(g.theorem_hypothesis(p.a()));
    }

    #[test]
    fn short_separation_warns_but_runs() {
        let text = CFG_A.replace("profile.L = 5", "profile.L = 4");
        let cfg = parse_config_str(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.warnings.len(), 1);
        assert!(cfg.warnings[0].contains("4.449"));
        let strict = format!("{text}\nrequire_theorem_hypothesis = true\n");
        assert!(parse_config_str(&strict, Path::new(".")).is_err());
    }

    #[test]
    fn every_problem_is_reported() {
        let text = CFG_A.replace("profile.b0 = 1", "profile.b0 = 3") + "\nfoo = 1\njobs = 0\nradial.n = x\n";
        match parse_config_str(&text, Path::new(".")) {
            Err(Error::InvalidConfig(list)) => {
                assert!(list.iter().any(|m| m.contains("b0 < b1")));
                assert!(list.iter().any(|m| m.contains("unknown key `foo`")));
                assert!(list.iter().any(|m| m.contains("jobs")));
                assert!(list.iter().any(|m| m.contains("duplicate key `radial.n`")));
            }
            other => panic!("expected a list of problems, got {other:?}"),
        }
    }

    #[test]
    fn table_and_kappa_are_exclusive() {
        let text = format!("{CFG_A}\nprofile.table = beta.csv\n");
        assert!(parse_config_str(&text, Path::new(".")).is_err());
    }
}
