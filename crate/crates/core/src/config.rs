//! Scenario configuration: a single TOML file drives grids, geometry,
//! nonlinearity, solver, analysis and initial data. Every run echoes its
//! fully-resolved configuration, and re-parsing that echo reproduces it
//! exactly.

use crate::error::{Error, Result};
use crate::geometry::{
    build_damping_preset, build_grid, CoefficientField, DampingPreset, Grid, PresetParams,
    RegionSpec,
};
use crate::nonlinear::{Nonlinearity, NonlinearKind};
use crate::solver::{InitialData, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// interval_1d | indicator_1d | annulus_disk_2d | annulus_rect_2d |
    /// mesh_2d | constant | undamped
    pub preset: String,
    #[serde(default = "one")]
    pub a0: f64,
    #[serde(default = "one")]
    pub b0: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Ramp width; defaults to `eps/2` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// power | cubic_like | zero
    pub kind: String,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Truncation level (inf = untruncated).
    #[serde(default = "inf")]
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(default = "one")]
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "inf")]
    pub k_aux: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Control time of the geometric control condition; preset default
    /// (1D: 2L, 2D: 2 diam) when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Fit window `[lo, hi]`; defaults to `[t0, t_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    /// Fit floor relative to `E(0)`.
    #[serde(default = "default_floor_rel")]
    pub fit_floor_rel: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            t0: None,
            fit_window: None,
            fit_floor_rel: default_floor_rel(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    /// eigenmode | gaussian | random_h1
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub norm: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// k_aux | ramp | geometry | ensemble
    pub axis: String,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    /// Parameter swept by the `geometry` axis: a0 | b0 | eps | ramp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub grid: GridConfig,
    pub geometry: GeometryConfig,
    pub nonlinearity: NonlinearityConfig,
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub initial_data: InitialDataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn one() -> f64 {
    1.0
}
fn inf() -> f64 {
    f64::INFINITY
}
fn default_eps() -> f64 {
    0.1
}
fn default_p() -> f64 {
    3.0
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    25
}
fn default_stride() -> usize {
    1
}
fn default_floor_rel() -> f64 {
    1e-12
}
fn default_modes() -> usize {
    16
}
fn default_ensemble() -> usize {
    5
}

/// A validated, fully-resolved scenario ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: Grid,
    pub region: Option<RegionSpec>,
    pub coeffs: CoefficientField,
    pub nl: Nonlinearity,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub seed: u64,
    pub t0: f64,
    pub fit_window: (f64, f64),
    pub fit_floor_rel: f64,
    /// The resolved configuration (all defaults materialized).
    pub resolved: ScenarioConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Parse with `key.path=value` overrides applied to the raw TOML tree.
    pub fn load_with_overrides(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut value: toml::Value =
            toml::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let text = toml::to_string(&value).map_err(|e| Error::ConfigParse(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serializes")
    }

    /// Validate and materialize the scenario. Collects every validation
    /// failure into one error.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut errs: Vec<String> = Vec::new();

        // nonlinearity first so exponent-range messages survive even when
        // the grid dimension itself is unsupported
        let kind = match self.nonlinearity.kind.as_str() {
            "power" => Some(NonlinearKind::Power),
            "cubic_like" => Some(NonlinearKind::CubicLike),
            "zero" => Some(NonlinearKind::Zero),
            other => {
                errs.push(format!("unknown nonlinearity kind {other:?}"));
                None
            }
        };
        if self.nonlinearity.p < 1.0 {
            errs.push(format!(
                "nonlinearity exponent p = {} violates p >= 1",
                self.nonlinearity.p
            ));
        }
        let n_dim = self.grid.dim;
        if n_dim >= 3 {
            let bound = n_dim as f64 / (n_dim as f64 - 2.0);
            if self.nonlinearity.p >= bound && kind != Some(NonlinearKind::Zero) {
                errs.push(format!(
                    "nonlinearity exponent p = {} violates the decay range 1 <= p < n/(n-2) = {bound} for n = {n_dim}",
                    self.nonlinearity.p
                ));
            }
        }
        if !(self.nonlinearity.k > 0.0) {
            errs.push(format!(
                "truncation level k must be positive (or inf), got {}",
                self.nonlinearity.k
            ));
        }
        if self.nonlinearity.gamma <= 0.0 {
            errs.push("gamma must be positive".into());
        }

        let grid = match build_grid(self.grid.dim, &self.grid.lengths, &self.grid.counts) {
            Ok(g) => Some(g),
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };

        let mut nl = match kind {
            Some(NonlinearKind::Power) => Nonlinearity::power(self.nonlinearity.p, self.nonlinearity.k),
            Some(NonlinearKind::CubicLike) => {
                Nonlinearity::cubic_like(self.nonlinearity.gamma, self.nonlinearity.k)
            }
            _ => Nonlinearity::zero(),
        };
        if let Some(k0) = self.nonlinearity.k0 {
            if k0 <= 0.0 {
                errs.push("k0 must be positive".into());
            }
            nl.k0 = k0;
        }

        let solver = SolverConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            k_aux: self.solver.k_aux,
            newton_tol: self.solver.newton_tol,
            newton_max_iter: self.solver.newton_max_iter,
            record_stride: self.solver.record_stride,
        };
        if let Err(Error::Validation(v)) = solver.validate() {
            errs.extend(v);
        }

        // geometry
        let preset = self.build_preset(&mut errs);
        let params = PresetParams {
            a0: self.geometry.a0,
            b0: self.geometry.b0,
            eps: self.geometry.eps,
            ramp: self.geometry.ramp,
        };
        let built = match (&grid, &preset) {
            (Some(g), Some(p)) => match build_damping_preset(g, p, &params) {
                Ok(rf) => Some(rf),
                Err(e) => {
                    errs.push(e.to_string());
                    None
                }
            },
            _ => None,
        };

        // initial data
        let initial = self.build_initial(&mut errs);

        // analysis defaults
        let t0 = self.analysis.t0.unwrap_or_else(|| match &grid {
            Some(g) if g.dim() == 1 => 2.0 * g.lengths()[0],
            Some(g) => {
                2.0 * g
                    .lengths()
                    .iter()
                    .map(|l| l * l)
                    .sum::<f64>()
                    .sqrt()
            }
            None => 1.0,
        });
        if !(t0 > 0.0) {
            errs.push(format!("t0 must be positive, got {t0}"));
        }
        let t_final = solver.dt * solver.n_steps() as f64;
        // default window starts at T0; short runs fall back to the second half
        let fit_window = self
            .analysis
            .fit_window
            .map(|w| (w[0], w[1]))
            .unwrap_or((t0.min(t_final / 2.0), t_final));
        if !(fit_window.0 < fit_window.1) && solver.t_end > 0.0 {
            errs.push(format!(
                "fit window [{}, {}] is empty",
                fit_window.0, fit_window.1
            ));
        }
        if !(self.analysis.fit_floor_rel > 0.0) {
            errs.push("fit_floor_rel must be positive".into());
        }

        if let Some(sweep) = &self.sweep {
            if !matches!(sweep.axis.as_str(), "k_aux" | "ramp" | "geometry" | "ensemble") {
                errs.push(format!(
                    "unknown sweep axis {:?} (expected k_aux | ramp | geometry | ensemble)",
                    sweep.axis
                ));
            }
            if sweep.axis != "ensemble" && sweep.values.is_empty() {
                errs.push("sweep values must be nonempty".into());
            }
            if sweep.axis == "ensemble" && sweep.ensemble_size == 0 {
                errs.push("ensemble_size must be >= 1".into());
            }
            if sweep.axis == "geometry" {
                match sweep.param.as_deref() {
                    Some("a0" | "b0" | "eps" | "ramp") => {}
                    other => errs.push(format!(
                        "geometry sweep needs param in {{a0, b0, eps, ramp}}, got {other:?}"
                    )),
                }
            }
        }

        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        let grid = grid.expect("validated");
        let (region, coeffs) = built.expect("validated");
        let initial = initial.expect("validated");

        // materialized resolved config
        let mut resolved = self.clone();
        resolved.geometry.ramp = Some(params.ramp.unwrap_or(params.eps / 2.0)).map(|r| {
            if matches!(preset, Some(DampingPreset::Indicator1d { .. })) {
                0.0
            } else {
                r
            }
        });
        resolved.nonlinearity.k0 = Some(nl.k0);
        resolved.analysis.t0 = Some(t0);
        resolved.analysis.fit_window = Some([fit_window.0, fit_window.1]);

        Ok(Scenario {
            grid,
            region,
            coeffs,
            nl,
            solver,
            initial,
            seed: self.seed,
            t0,
            fit_window,
            fit_floor_rel: self.analysis.fit_floor_rel,
            resolved,
        })
    }

    fn build_preset(&self, errs: &mut Vec<String>) -> Option<DampingPreset> {
        let g = &self.geometry;
        let need = |opt: Option<f64>, name: &str, errs: &mut Vec<String>| -> f64 {
            match opt {
                Some(v) => v,
                None => {
                    errs.push(format!("geometry preset {:?} requires {name}", g.preset));
                    f64::NAN
                }
            }
        };
        match g.preset.as_str() {
            "interval_1d" => Some(DampingPreset::Interval1d {
                a_start: need(g.a_start, "a_start", errs),
                a_end: need(g.a_end, "a_end", errs),
            }),
            "indicator_1d" => Some(DampingPreset::Indicator1d {
                a_start: need(g.a_start, "a_start", errs),
                a_end: need(g.a_end, "a_end", errs),
            }),
            "annulus_disk_2d" => {
                let center = match &g.center {
                    Some(c) if c.len() == 2 => [c[0], c[1]],
                    _ => {
                        errs.push("annulus_disk_2d requires center = [x, y]".into());
                        [f64::NAN; 2]
                    }
                };
                Some(DampingPreset::AnnulusDisk2d {
                    center,
                    radius: need(g.radius, "radius", errs),
                })
            }
            "annulus_rect_2d" => {
                let center = match &g.center {
                    Some(c) if c.len() == 2 => [c[0], c[1]],
                    _ => {
                        errs.push("annulus_rect_2d requires center = [x, y]".into());
                        [f64::NAN; 2]
                    }
                };
                let hw = match &g.half_widths {
                    Some(h) if h.len() == 2 => [h[0], h[1]],
                    _ => {
                        errs.push("annulus_rect_2d requires half_widths = [wx, wy]".into());
                        [f64::NAN; 2]
                    }
                };
                Some(DampingPreset::AnnulusRect2d {
                    center,
                    half_widths: hw,
                })
            }
            "mesh_2d" => {
                let cells = match &g.cells {
                    Some(c) if c.len() == 2 => [c[0], c[1]],
                    _ => {
                        errs.push("mesh_2d requires cells = [nx, ny]".into());
                        [1, 1]
                    }
                };
                Some(DampingPreset::Mesh2d {
                    cells,
                    strip_width: need(g.strip_width, "strip_width", errs),
                })
            }
            "constant" => Some(DampingPreset::Constant),
            "undamped" => Some(DampingPreset::Undamped),
            other => {
                errs.push(format!("unknown geometry preset {other:?}"));
                None
            }
        }
    }

    fn build_initial(&self, errs: &mut Vec<String>) -> Option<InitialData> {
        let id = &self.initial_data;
        match id.kind.as_str() {
            "eigenmode" => match &id.mode {
                Some(mode) => Some(InitialData::Eigenmode { mode: mode.clone() }),
                None => {
                    errs.push("eigenmode initial data requires mode = [j, ...]".into());
                    None
                }
            },
            "gaussian" => {
                let center = match &id.center {
                    Some(c) => c.clone(),
                    None => {
                        errs.push("gaussian initial data requires center".into());
                        return None;
                    }
                };
                let width = match id.width {
                    Some(w) if w > 0.0 => w,
                    _ => {
                        errs.push("gaussian initial data requires positive width".into());
                        return None;
                    }
                };
                Some(InitialData::Gaussian {
                    center,
                    width,
                    amplitude: id.amplitude,
                })
            }
            "random_h1" => Some(InitialData::RandomH1 {
                seed: self.seed,
                norm: id.norm,
                modes: id.modes,
            }),
            other => {
                errs.push(format!("unknown initial data kind {other:?}"));
                None
            }
        }
    }
}

/// Apply one `dotted.path=value` override to a TOML tree. The value text is
/// parsed as TOML when possible, otherwise taken as a string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, value_text) = spec
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override {spec:?} must be key.path=value")))?;
    let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value_text}")) {
        Ok(mut t) => t.remove("v").expect("parsed override value"),
        Err(_) => toml::Value::String(value_text.to_string()),
    };
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::ConfigParse(format!("bad override path {path:?}")));
    }
    let mut node = root;
    for seg in &segments[..segments.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("override path {path:?} crosses a non-table")))?;
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::ConfigParse(format!("override path {path:?} crosses a non-table")))?;
    table.insert(segments.last().unwrap().to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL_1D: &str = r#"
seed = 42

[grid]
dim = 1
lengths = [1.0]
counts = [120]

[geometry]
preset = "interval_1d"
a_start = 0.4
a_end = 0.6
a0 = 1.0
b0 = 1.0
eps = 0.1

[nonlinearity]
kind = "power"
p = 3.0
k = 10.0

[solver]
dt = 2e-3
t_end = 1.0

[initial_data]
kind = "random_h1"
norm = 1.0
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL_1D).unwrap();
        let sc = cfg.resolve().unwrap();
        assert_eq!(sc.grid.counts()[0], 120);
        assert_eq!(sc.t0, 2.0, "1D default T0 = 2L");
        assert_eq!(sc.resolved.geometry.ramp, Some(0.05), "ramp defaults to eps/2");
        assert_eq!(sc.fit_window, (0.5, 1.0), "short-run default window");
    }

    #[test]
    fn resolve_is_idempotent() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL_1D).unwrap();
        let sc = cfg.resolve().unwrap();
        let echoed = sc.resolved.to_toml_string();
        let cfg2 = ScenarioConfig::from_toml_str(&echoed).unwrap();
        let sc2 = cfg2.resolve().unwrap();
        assert_eq!(sc2.resolved, sc.resolved);
        assert_eq!(sc2.resolved.to_toml_string(), echoed);
    }

    #[test]
    fn p_range_violation_names_the_range() {
        let mut cfg = ScenarioConfig::from_toml_str(MINIMAL_1D).unwrap();
        cfg.grid.dim = 3;
        cfg.grid.lengths = vec![1.0; 3];
        cfg.grid.counts = vec![10; 3];
        cfg.nonlinearity.p = 5.0;
        let err = cfg.resolve().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p < n/(n-2)") || msg.contains("decay range"), "{msg}");
        assert!(msg.contains("dim must be 1 or 2"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = format!("{MINIMAL_1D}\n[extra]\nx = 1\n");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn overrides_apply_to_nested_paths() {
        let mut v: toml::Value = toml::from_str(MINIMAL_1D).unwrap();
        apply_override(&mut v, "solver.dt=5e-3").unwrap();
        apply_override(&mut v, "geometry.a0=2.5").unwrap();
        apply_override(&mut v, "solver.k_aux=inf").unwrap();
        let text = toml::to_string(&v).unwrap();
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.solver.dt, 5e-3);
        assert_eq!(cfg.geometry.a0, 2.5);
        assert!(cfg.solver.k_aux.is_infinite());
        assert!(apply_override(&mut v, "nonsense").is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = ScenarioConfig::from_toml_str(MINIMAL_1D).unwrap();
        cfg.sweep = Some(SweepConfig {
            axis: "bogus".into(),
            values: vec![1.0],
            ensemble_size: 5,
            param: None,
        });
        assert!(cfg.resolve().is_err());
        cfg.sweep = Some(SweepConfig {
            axis: "k_aux".into(),
            values: vec![],
            ensemble_size: 5,
            param: None,
        });
        assert!(cfg.resolve().is_err());
        cfg.sweep = Some(SweepConfig {
            axis: "k_aux".into(),
            values: vec![1.0, 4.0],
            ensemble_size: 5,
            param: None,
        });
        assert!(cfg.resolve().is_ok());
    }
}
