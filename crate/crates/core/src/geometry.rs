//! Grids and the spatial damping-coefficient fields.
//!
//! The geometry presets realize the model's standing assumptions: the
//! Kelvin-Voigt coefficient `a` vanishes exactly on a closed set `A` strictly
//! inside the domain (or touching the boundary for the discontinuous
//! Liu-Liu configuration), ramps continuously up to `a0` across a configurable
//! width, and the frictional coefficient `b` is at least `b0` on the collar
//! `V_eps = { dist(x, boundary of A) < eps }`.

use crate::error::{Error, Result};

/// Tensor-product grid of interior nodes on a 1D interval or 2D rectangle,
/// homogeneous Dirichlet boundary. Node `i` of axis `ax` sits at `(i+1)*h_ax`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lengths: Vec<f64>,
    counts: Vec<usize>,
    spacings: Vec<f64>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// Total number of interior nodes.
    pub fn n_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    /// Volume of one grid cell, `prod h_ax`.
    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    /// Interior node counts padded to two axes (`ny = 1` in 1D).
    pub fn counts2(&self) -> [usize; 2] {
        [self.counts[0], *self.counts.get(1).unwrap_or(&1)]
    }

    /// Coordinates of interior node `idx` (lexicographic, x fastest).
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let [nx, _] = self.counts2();
        let ix = idx % nx;
        let iy = idx / nx;
        [
            (ix + 1) as f64 * self.spacings[0],
            if self.dim() == 2 {
                (iy + 1) as f64 * self.spacings[1]
            } else {
                0.0
            },
        ]
    }

    /// Coordinates of node `idx` on the closed lattice (boundary included),
    /// `(N_ax + 2)` points per axis starting at 0.
    pub fn closed_coord(&self, idx: usize) -> [f64; 2] {
        let nx = self.counts[0] + 2;
        let ix = idx % nx;
        let iy = idx / nx;
        [
            ix as f64 * self.spacings[0],
            if self.dim() == 2 {
                iy as f64 * self.spacings[1]
            } else {
                0.0
            },
        ]
    }

    pub fn n_closed(&self) -> usize {
        self.counts.iter().map(|n| n + 2).product()
    }
}

/// Build a grid with `counts` interior nodes per axis; `h = L/(N+1)`.
pub fn build_grid(dim: usize, lengths: &[f64], counts: &[usize]) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::Grid(format!("dim must be 1 or 2, got {dim}")));
    }
    if lengths.len() != dim || counts.len() != dim {
        return Err(Error::Grid(format!(
            "expected {dim} lengths and counts, got {} and {}",
            lengths.len(),
            counts.len()
        )));
    }
    for (&l, &n) in lengths.iter().zip(counts) {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Grid(format!("lengths must be positive, got {l}")));
        }
        if n < 3 {
            return Err(Error::Grid(format!("counts must be >= 3, got {n}")));
        }
    }
    let spacings = lengths
        .iter()
        .zip(counts)
        .map(|(&l, &n)| l / (n + 1) as f64)
        .collect();
    Ok(Grid {
        lengths: lengths.to_vec(),
        counts: counts.to_vec(),
        spacings,
    })
}

/// Shape of the undamped set `A = { a = 0 }`, described by a signed distance
/// function (negative inside `A`).
#[derive(Clone, Debug, PartialEq)]
pub enum RegionShape {
    /// 1D: `A = [lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// 2D: closed disk.
    Disk { center: [f64; 2], radius: f64 },
    /// 2D: axis-aligned rectangle.
    Rect {
        center: [f64; 2],
        half_widths: [f64; 2],
    },
    /// 2D: `A` is the union of lattice cells left undamped by a grid mesh of
    /// strips (width `strip_width`) along the lines `x_ax = c*L_ax/cells_ax`.
    CellLattice {
        lengths: [f64; 2],
        cells: [usize; 2],
        strip_width: f64,
    },
}

/// Region decomposition `A` / `omega = Omega \ A` / collar `V_eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub shape: RegionShape,
    /// Collar width of `V_eps` around the interface of `A`.
    pub eps: f64,
}

fn interval_sdf(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi)
}

/// Signed distance to a periodic union of bands: the undamped bands of one
/// axis of the cell lattice, `[c*s + w/2, (c+1)*s - w/2]` for `c = 0..cells`.
fn lattice_axis_sdf(x: f64, length: f64, cells: usize, strip_width: f64) -> f64 {
    let s = length / cells as f64;
    let u = x.rem_euclid(s);
    (strip_width / 2.0 - u).max(u - (s - strip_width / 2.0))
}

impl RegionSpec {
    /// Signed distance to `A`: negative inside, zero on the interface.
    pub fn sdf(&self, x: &[f64; 2]) -> f64 {
        match &self.shape {
            RegionShape::Interval { lo, hi } => interval_sdf(x[0], *lo, *hi),
            RegionShape::Disk { center, radius } => {
                ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() - radius
            }
            RegionShape::Rect {
                center,
                half_widths,
            } => {
                let dx = (x[0] - center[0]).abs() - half_widths[0];
                let dy = (x[1] - center[1]).abs() - half_widths[1];
                if dx > 0.0 || dy > 0.0 {
                    dx.max(0.0).hypot(dy.max(0.0))
                } else {
                    dx.max(dy)
                }
            }
            RegionShape::CellLattice {
                lengths,
                cells,
                strip_width,
            } => {
                let dx = lattice_axis_sdf(x[0], lengths[0], cells[0], *strip_width);
                let dy = lattice_axis_sdf(x[1], lengths[1], cells[1], *strip_width);
                if dx > 0.0 || dy > 0.0 {
                    dx.max(0.0).hypot(dy.max(0.0))
                } else {
                    dx.max(dy)
                }
            }
        }
    }

    /// Fraction of grid nodes (closed lattice) where `a > 0`.
    pub fn damped_fraction(&self, grid: &Grid) -> f64 {
        let n = grid.n_closed();
        let damped = (0..n)
            .filter(|&i| self.sdf(&grid.closed_coord(i)) > 0.0)
            .count();
        damped as f64 / n as f64
    }
}

/// Named damping geometries; the `A`-interval presets take `A = [a_start, a_end]`.
#[derive(Clone, Debug, PartialEq)]
pub enum DampingPreset {
    /// 1D, damping outside `A`, linear ramp of width `params.ramp`.
    Interval1d { a_start: f64, a_end: f64 },
    /// 1D, discontinuous interface: `a = a0` outside `A`, no ramp
    /// (the Liu-Liu configuration).
    Indicator1d { a_start: f64, a_end: f64 },
    /// 2D, `A` an interior disk, damping in the boundary collar.
    AnnulusDisk2d { center: [f64; 2], radius: f64 },
    /// 2D, `A` an interior rectangle.
    AnnulusRect2d {
        center: [f64; 2],
        half_widths: [f64; 2],
    },
    /// 2D, damping on a thin mesh of strips; `A` = union of cells.
    Mesh2d { cells: [usize; 2], strip_width: f64 },
    /// `a = a0` everywhere (fully damped; no undamped region).
    Constant,
    /// `a = b = 0` (conservative reference).
    Undamped,
}

/// Scalar parameters shared by the presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetParams {
    /// Plateau value of the Kelvin-Voigt coefficient.
    pub a0: f64,
    /// Lower bound of the frictional coefficient on `V_eps`.
    pub b0: f64,
    /// Collar width of `V_eps`.
    pub eps: f64,
    /// Ramp width from 0 on the interface of `A` up to `a0`; `None` = `eps/2`.
    pub ramp: Option<f64>,
}

/// Nodal/face coefficient samples plus the interface flag.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    /// Kelvin-Voigt coefficient at interior nodes.
    pub a_node: Vec<f64>,
    /// Kelvin-Voigt coefficient on faces, one array per axis.
    pub a_face: Vec<Vec<f64>>,
    /// Frictional coefficient at interior nodes.
    pub b_node: Vec<f64>,
    /// Optional density `rho > 0` at interior nodes (identity mass if absent).
    pub rho_node: Option<Vec<f64>>,
    /// Optional principal coefficient `K` on faces (unit stiffness if absent).
    pub kappa_face: Option<Vec<Vec<f64>>>,
    /// Set when the `a`-field has a jump interface (ramp width 0).
    pub discontinuous_interface: bool,
}

impl CoefficientField {
    pub fn max_a(&self) -> f64 {
        self.a_node.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_b(&self) -> f64 {
        self.b_node.iter().cloned().fold(0.0, f64::max)
    }
}

/// Face counts per axis: faces of axis `ax` separate nodes along `ax`,
/// including the two boundary-adjacent faces.
pub fn face_counts(grid: &Grid) -> Vec<usize> {
    let [nx, ny] = grid.counts2();
    match grid.dim() {
        1 => vec![nx + 1],
        _ => vec![(nx + 1) * ny, nx * (ny + 1)],
    }
}

/// Arithmetic-mean face coefficients from closed-lattice nodal values
/// (`(N_ax + 2)` points per axis, boundary included). A face value is zero
/// whenever both adjacent nodes carry zero.
pub fn face_coefficient(grid: &Grid, node_closed: &[f64]) -> Result<Vec<Vec<f64>>> {
    if node_closed.len() != grid.n_closed() {
        return Err(Error::DimensionMismatch(format!(
            "closed lattice has {} nodes, got {}",
            grid.n_closed(),
            node_closed.len()
        )));
    }
    let [nx, ny] = grid.counts2();
    let ncx = nx + 2;
    match grid.dim() {
        1 => {
            let faces = (0..nx + 1)
                .map(|f| 0.5 * (node_closed[f] + node_closed[f + 1]))
                .collect();
            Ok(vec![faces])
        }
        _ => {
            // axis 0: face (fx, iy) between closed nodes (fx, iy+1) and (fx+1, iy+1)
            let mut fx_arr = Vec::with_capacity((nx + 1) * ny);
            for iy in 0..ny {
                let row = (iy + 1) * ncx;
                for fx in 0..nx + 1 {
                    fx_arr.push(0.5 * (node_closed[row + fx] + node_closed[row + fx + 1]));
                }
            }
            // axis 1: face (ix, fy) between closed nodes (ix+1, fy) and (ix+1, fy+1)
            let mut fy_arr = Vec::with_capacity(nx * (ny + 1));
            for fy in 0..ny + 1 {
                for ix in 0..nx {
                    fy_arr.push(
                        0.5 * (node_closed[fy * ncx + ix + 1] + node_closed[(fy + 1) * ncx + ix + 1]),
                    );
                }
            }
            Ok(vec![fx_arr, fy_arr])
        }
    }
}

fn ramp_profile(sdf: f64, a0: f64, ramp: f64) -> f64 {
    if ramp == 0.0 {
        if sdf > 0.0 {
            a0
        } else {
            0.0
        }
    } else {
        a0 * (sdf.max(0.0) / ramp).min(1.0)
    }
}

/// Build the coefficient fields for a named preset.
///
/// `a` vanishes exactly on `A`, ramps linearly to `a0` over the ramp width,
/// and `b = b0` on `V_eps` (piecewise constant, both sides of the interface).
/// Returns the region decomposition alongside; `Constant`/`Undamped` carry no
/// region.
pub fn build_damping_preset(
    grid: &Grid,
    preset: &DampingPreset,
    params: &PresetParams,
) -> Result<(Option<RegionSpec>, CoefficientField)> {
    validate_params(preset, params)?;
    let region = region_for(grid, preset, params)?;
    let n = grid.n_nodes();

    let (a_closed, b_node, discontinuous) = match (&region, preset) {
        (Some(region), _) => {
            let ramp = effective_ramp(preset, params);
            let a_closed: Vec<f64> = (0..grid.n_closed())
                .map(|i| ramp_profile(region.sdf(&grid.closed_coord(i)), params.a0, ramp))
                .collect();
            let b_node = (0..n)
                .map(|i| {
                    if region.sdf(&grid.coord(i)).abs() < params.eps {
                        params.b0
                    } else {
                        0.0
                    }
                })
                .collect();
            (a_closed, b_node, ramp == 0.0)
        }
        (None, DampingPreset::Constant) => {
            (vec![params.a0; grid.n_closed()], vec![0.0; n], false)
        }
        (None, DampingPreset::Undamped) => (vec![0.0; grid.n_closed()], vec![0.0; n], false),
        _ => unreachable!(),
    };

    let a_face = face_coefficient(grid, &a_closed)?;
    let a_node = interior_of_closed(grid, &a_closed);
    Ok((
        region,
        CoefficientField {
            a_node,
            a_face,
            b_node,
            rho_node: None,
            kappa_face: None,
            discontinuous_interface: discontinuous,
        },
    ))
}

/// Attach a variable medium `rho(x) > 0`, `K(x) in [alpha, beta]` to a field
/// (the non-constant-coefficient variant of the model).
pub fn apply_medium(
    grid: &Grid,
    field: &mut CoefficientField,
    rho: impl Fn(&[f64; 2]) -> f64,
    kappa: impl Fn(&[f64; 2]) -> f64,
) -> Result<()> {
    let rho_node: Vec<f64> = (0..grid.n_nodes()).map(|i| rho(&grid.coord(i))).collect();
    if rho_node.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Preset("rho must be positive and finite".into()));
    }
    let kappa_closed: Vec<f64> = (0..grid.n_closed())
        .map(|i| kappa(&grid.closed_coord(i)))
        .collect();
    if kappa_closed.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::Preset("K must be positive and finite".into()));
    }
    field.kappa_face = Some(face_coefficient(grid, &kappa_closed)?);
    field.rho_node = Some(rho_node);
    Ok(())
}

/// A standalone 1D damping field supported on `(alpha, beta)` (`a = a0`
/// inside, 0 outside, ramped over `ramp` inside the support). Used by the
/// spectral diagnostics; the support may not satisfy the preset invariants.
pub fn support_interval_field(
    grid: &Grid,
    alpha: f64,
    beta: f64,
    a0: f64,
    ramp: f64,
) -> Result<CoefficientField> {
    if grid.dim() != 1 {
        return Err(Error::Preset("support_interval_field is 1D only".into()));
    }
    if !(0.0 <= alpha && alpha < beta && beta <= grid.lengths()[0]) {
        return Err(Error::Preset(format!(
            "support ({alpha}, {beta}) not inside (0, {})",
            grid.lengths()[0]
        )));
    }
    let prof = |x: f64| {
        let d_in = (x - alpha).min(beta - x);
        if ramp == 0.0 {
            if d_in > 0.0 {
                a0
            } else {
                0.0
            }
        } else {
            a0 * (d_in / ramp).clamp(0.0, 1.0)
        }
    };
    let a_closed: Vec<f64> = (0..grid.n_closed())
        .map(|i| prof(grid.closed_coord(i)[0]))
        .collect();
    let a_face = face_coefficient(grid, &a_closed)?;
    let a_node = interior_of_closed(grid, &a_closed);
    let n = grid.n_nodes();
    Ok(CoefficientField {
        a_node,
        a_face,
        b_node: vec![0.0; n],
        rho_node: None,
        kappa_face: None,
        discontinuous_interface: ramp == 0.0,
    })
}

fn interior_of_closed(grid: &Grid, closed: &[f64]) -> Vec<f64> {
    let [nx, ny] = grid.counts2();
    let ncx = nx + 2;
    let mut out = Vec::with_capacity(grid.n_nodes());
    match grid.dim() {
        1 => out.extend_from_slice(&closed[1..=nx]),
        _ => {
            for iy in 0..ny {
                let row = (iy + 1) * ncx;
                out.extend_from_slice(&closed[row + 1..=row + nx]);
            }
        }
    }
    out
}

fn effective_ramp(preset: &DampingPreset, params: &PresetParams) -> f64 {
    match preset {
        DampingPreset::Indicator1d { .. } => 0.0,
        _ => params.ramp.unwrap_or(params.eps / 2.0),
    }
}

fn validate_params(preset: &DampingPreset, params: &PresetParams) -> Result<()> {
    let mut errs = Vec::new();
    let damped = !matches!(preset, DampingPreset::Undamped);
    if damped && !(params.a0 > 0.0) {
        errs.push(format!("a0 must be positive, got {}", params.a0));
    }
    if params.b0 < 0.0 {
        errs.push(format!("b0 must be nonnegative, got {}", params.b0));
    }
    if !(params.eps > 0.0) {
        errs.push(format!("eps must be positive, got {}", params.eps));
    }
    let ramp = effective_ramp(preset, params);
    if ramp < 0.0 {
        errs.push(format!("ramp must be nonnegative, got {ramp}"));
    }
    if ramp > params.eps {
        // keeps `a >= a0` at distance > eps from A
        errs.push(format!(
            "ramp width {ramp} exceeds eps {}; a would stay below a0 outside V_eps",
            params.eps
        ));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Preset(errs.join("; ")))
    }
}

fn region_for(
    grid: &Grid,
    preset: &DampingPreset,
    params: &PresetParams,
) -> Result<Option<RegionSpec>> {
    let eps = params.eps;
    let shape = match preset {
        DampingPreset::Constant | DampingPreset::Undamped => return Ok(None),
        DampingPreset::Interval1d { a_start, a_end }
        | DampingPreset::Indicator1d { a_start, a_end } => {
            if grid.dim() != 1 {
                return Err(Error::Preset("interval presets require a 1D grid".into()));
            }
            let l = grid.lengths()[0];
            if !(*a_start < *a_end) {
                return Err(Error::Preset(format!(
                    "A = [{a_start}, {a_end}] must have positive length"
                )));
            }
            if *a_start <= 0.0 || *a_end >= l {
                return Err(Error::Preset(format!(
                    "A = [{a_start}, {a_end}] touches the domain boundary [0, {l}]"
                )));
            }
            if *a_start - eps < 0.0 || *a_end + eps > l {
                return Err(Error::Preset(format!(
                    "collar V_eps (eps = {eps}) around A = [{a_start}, {a_end}] exits the domain"
                )));
            }
            RegionShape::Interval {
                lo: *a_start,
                hi: *a_end,
            }
        }
        DampingPreset::AnnulusDisk2d { center, radius } => {
            require_2d(grid)?;
            let margin = boundary_margin_2d(grid, center);
            if *radius <= 0.0 {
                return Err(Error::Preset("disk radius must be positive".into()));
            }
            if *radius >= margin {
                return Err(Error::Preset(format!(
                    "disk A (radius {radius}) touches the domain boundary (margin {margin})"
                )));
            }
            if *radius + eps > margin {
                return Err(Error::Preset(format!(
                    "collar V_eps (eps = {eps}) around the disk exits the domain"
                )));
            }
            RegionShape::Disk {
                center: *center,
                radius: *radius,
            }
        }
        DampingPreset::AnnulusRect2d {
            center,
            half_widths,
        } => {
            require_2d(grid)?;
            if half_widths.iter().any(|&w| w <= 0.0) {
                return Err(Error::Preset("rect half-widths must be positive".into()));
            }
            for ax in 0..2 {
                let lo = center[ax] - half_widths[ax];
                let hi = center[ax] + half_widths[ax];
                if lo <= 0.0 || hi >= grid.lengths()[ax] {
                    return Err(Error::Preset("rect A touches the domain boundary".into()));
                }
                if lo - eps < 0.0 || hi + eps > grid.lengths()[ax] {
                    return Err(Error::Preset(format!(
                        "collar V_eps (eps = {eps}) around rect A exits the domain"
                    )));
                }
            }
            RegionShape::Rect {
                center: *center,
                half_widths: *half_widths,
            }
        }
        DampingPreset::Mesh2d { cells, strip_width } => {
            require_2d(grid)?;
            if cells.iter().any(|&c| c == 0) {
                return Err(Error::Preset("mesh cells must be >= 1 per axis".into()));
            }
            let s_min = (0..2)
                .map(|ax| grid.lengths()[ax] / cells[ax] as f64)
                .fold(f64::INFINITY, f64::min);
            if !(*strip_width > 0.0) || *strip_width >= s_min {
                return Err(Error::Preset(format!(
                    "strip width {strip_width} must lie in (0, {s_min})"
                )));
            }
            // nearest cell interface to the boundary sits at strip_width/2
            if eps > *strip_width / 2.0 {
                return Err(Error::Preset(format!(
                    "collar V_eps (eps = {eps}) exits the domain; mesh allows eps <= {}",
                    strip_width / 2.0
                )));
            }
            RegionShape::CellLattice {
                lengths: [grid.lengths()[0], grid.lengths()[1]],
                cells: *cells,
                strip_width: *strip_width,
            }
        }
    };
    Ok(Some(RegionSpec { shape, eps }))
}

fn require_2d(grid: &Grid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::Preset("this preset requires a 2D grid".into()));
    }
    Ok(())
}

fn boundary_margin_2d(grid: &Grid, point: &[f64; 2]) -> f64 {
    (0..2)
        .map(|ax| point[ax].min(grid.lengths()[ax] - point[ax]))
        .fold(f64::INFINITY, f64::min)
}
