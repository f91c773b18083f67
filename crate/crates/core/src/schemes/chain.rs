use super::{Component, FilterPolicy, PointBudget, ReadoutPolicy, SchemeConfig, SchemeMode};
use crate::error::Result;
use crate::interferometer::{
    filter_quadrature_rotation, filter_transfer, homodyne_vector, kimble_kappa, lossy_ifo_in_out, sql_psd,
    variational_homodyne_vector,
};
use crate::omfc::{conversion_stage, derive_rates, effective_loss, thermal_added_noise};
use crate::optics::{
    min_eigenvalue, rotation, rotation_angle, squeezed_spectrum_matrix, wrap_half_turn, Mat2, RowVec2, Vec2, C64, J,
};

/// Linear optical path from the input field to the photodetector.
struct Chain {
    /// Transfer applied to the input field.
    input: Mat2,
    /// Transfer from the interferometer's input port, once reached.
    since_ifo: Option<Mat2>,
    signal: Vec2,
    /// (label, transfer from injection point, source spectrum).
    sources: Vec<(Component, Mat2, Mat2)>,
}

impl Chain {
    fn new() -> Self {
        Self { input: Mat2::identity(), since_ifo: None, signal: Vec2::zeros(), sources: Vec::new() }
    }

    fn apply(&mut self, m: &Mat2) {
        self.input = m * self.input;
        if let Some(t) = self.since_ifo.as_mut() {
            *t = m * *t;
        }
        self.signal = m * self.signal;
        for (_, t, _) in &mut self.sources {
            *t = m * *t;
        }
    }

    fn inject(&mut self, label: Component, spectrum: Mat2) {
        if spectrum.iter().any(|z| *z != C64::default()) {
            self.sources.push((label, Mat2::identity(), spectrum));
        }
    }

    fn loss(&mut self, eps: f64, label: Component) {
        if eps > 0.0 {
            self.apply(&(Mat2::identity() * C64::from((1.0 - eps).sqrt())));
            self.inject(label, Mat2::identity() * C64::from(eps));
        }
    }

    fn interferometer(&mut self, cfg: &SchemeConfig, omega: f64, eps: f64) -> Result<()> {
        let r = lossy_ifo_in_out(&cfg.ifo, omega, eps)?;
        self.since_ifo = Some(Mat2::identity());
        self.apply(&r.transfer);
        self.signal = r.signal;
        self.inject(Component::ExternalLoss, Mat2::identity() * C64::from(eps));
        Ok(())
    }
}

/// Converter stage; returns its rotation angle.
fn converter(chain: &mut Chain, cfg: &SchemeConfig, omega: f64) -> Result<f64> {
    let rates = derive_rates(&cfg.omfc)?;
    let stage = conversion_stage(&cfg.omfc, &rates, cfg.conversion, omega)?;
    chain.apply(&stage.transfer);
    chain.inject(Component::OmfcLoss, stage.completion);
    chain.inject(Component::OmfcThermal, thermal_added_noise(&cfg.omfc, &rates, cfg.thermal, omega)?);
    let eps = match cfg.loss_override {
        Some(e) => {
            let g = rates.matched_gamma_opt()?;
            e * g * g / (g * g + omega * omega)
        }
        None => effective_loss(&cfg.omfc, &rates, omega)?,
    };
    chain.loss(eps, Component::OmfcLoss);
    Ok(rotation_angle(&stage.transfer))
}

fn converter_angle(cfg: &SchemeConfig, omega: f64) -> Result<f64> {
    let rates = derive_rates(&cfg.omfc)?;
    Ok(rotation_angle(&conversion_stage(&cfg.omfc, &rates, cfg.conversion, omega)?.transfer))
}

/// Assembled path plus the readout row and its derivative in θ.
struct Readout {
    chain: Chain,
    input_spectrum: Mat2,
    row: RowVec2,
    row_derivative: RowVec2,
    realized_angle: f64,
    kappa: f64,
}

fn build(cfg: &SchemeConfig, omega: f64) -> Result<Readout> {
    let kappa = kimble_kappa(&cfg.ifo, omega)?;
    let target = kappa.atan();
    let ifo = &cfg.ifo;
    let mut chain = Chain::new();
    match cfg.mode {
        SchemeMode::FdSqueezing => {
            let squeeze_angle = cfg.input_squeeze.angle;
            let phi_omfc = converter_angle(cfg, omega)?;
            let phi_filter = match cfg.filter {
                FilterPolicy::Perfect => {
                    let phi = target - squeeze_angle - phi_omfc;
                    chain.apply(&rotation(phi));
                    phi
                }
                FilterPolicy::Cavity(f) => {
                    chain.apply(&(filter_transfer(&f, omega) * rotation(cfg.dc_offset)));
                    filter_quadrature_rotation(&f, omega) + cfg.dc_offset
                }
            };
            chain.loss(ifo.circulator_loss, Component::ExternalLoss);
            converter(&mut chain, cfg, omega)?;
            chain.loss(ifo.circulator_loss, Component::ExternalLoss);
            chain.interferometer(cfg, omega, ifo.external_loss)?;
            let theta = fixed_angle(cfg);
            Ok(Readout {
                chain,
                input_spectrum: squeezed_spectrum_matrix(&cfg.input_squeeze),
                row: homodyne_vector(theta),
                row_derivative: homodyne_vector(theta + std::f64::consts::FRAC_PI_2),
                realized_angle: squeeze_angle + phi_filter + phi_omfc,
                kappa,
            })
        }
        SchemeMode::VariationalReadout => {
            let input_spectrum =
                if cfg.squeeze_variational_input { squeezed_spectrum_matrix(&cfg.input_squeeze) } else { Mat2::identity() };
            chain.interferometer(cfg, omega, ifo.circulator_loss)?;
            let phi_omfc = converter(&mut chain, cfg, omega)?;
            chain.loss(ifo.circulator_loss, Component::ExternalLoss);
            let (row, row_derivative, realized_angle) = match cfg.filter {
                FilterPolicy::Perfect => {
                    // Filter folded into the readout row: h(θ_dc)·R(φ_f) = h(arctan κ − φ_omfc).
                    let back = rotation(-phi_omfc);
                    let c = 1.0 / (1.0 + kappa * kappa).sqrt();
                    let d = RowVec2::new(c.into(), (-kappa * c).into());
                    chain.loss(ifo.external_loss, Component::ExternalLoss);
                    (variational_homodyne_vector(kappa) * back, d * back, target)
                }
                FilterPolicy::Cavity(f) => {
                    chain.apply(&filter_transfer(&f, omega));
                    chain.loss(ifo.external_loss, Component::ExternalLoss);
                    let theta = cfg.dc_offset;
                    let realized = theta + filter_quadrature_rotation(&f, omega) + phi_omfc;
                    (homodyne_vector(theta), homodyne_vector(theta + std::f64::consts::FRAC_PI_2), realized)
                }
            };
            Ok(Readout { chain, input_spectrum, row, row_derivative, realized_angle, kappa })
        }
        SchemeMode::BaselineVacuum | SchemeMode::BaselineFixedSqueeze => {
            let input_spectrum = match cfg.mode {
                SchemeMode::BaselineVacuum => Mat2::identity(),
                _ => squeezed_spectrum_matrix(&cfg.input_squeeze),
            };
            chain.interferometer(cfg, omega, ifo.external_loss)?;
            let (row, row_derivative, realized_angle) = match cfg.readout {
                ReadoutPolicy::Variational => {
                    let c = 1.0 / (1.0 + kappa * kappa).sqrt();
                    (variational_homodyne_vector(kappa), RowVec2::new(c.into(), (-kappa * c).into()), target)
                }
                ReadoutPolicy::Fixed(t) => (homodyne_vector(t), homodyne_vector(t + std::f64::consts::FRAC_PI_2), t),
            };
            Ok(Readout { chain, input_spectrum, row, row_derivative, realized_angle, kappa })
        }
    }
}

fn fixed_angle(cfg: &SchemeConfig) -> f64 {
    match cfg.readout {
        ReadoutPolicy::Fixed(t) => t,
        ReadoutPolicy::Variational => 0.0,
    }
}

fn quad(row: &RowVec2, s: &Mat2) -> f64 {
    (row * s * row.adjoint())[(0, 0)].re
}

/// Unnormalised contributions (vacuum units at the detector) and signal power.
struct Raw {
    components: [f64; 6],
    signal: f64,
}

fn raw_components(cfg: &SchemeConfig, ro: &Readout, omega: f64) -> Result<Raw> {
    let chain = &ro.chain;
    let signal = (ro.row * chain.signal)[(0, 0)].norm_sqr();
    if signal.is_nan() || signal <= 0.0 {
        return Err(crate::error::Error::SignalNulled { omega });
    }
    let mut c = [0.0; 6];

    // Input field: the part at the spectrum's minimum eigenvalue is isotropic
    // and is split into shot and back-action by how the readout samples the
    // interferometer's two input quadratures; the rest is misalignment.
    let r = ro.row * chain.input;
    let lambda = min_eigenvalue(&ro.input_spectrum).max(0.0);
    let floor = lambda * r.norm_squared();
    let excess = quad(&r, &(ro.input_spectrum - Mat2::identity() * C64::from(lambda))).max(0.0);
    let w = ro.row * chain.since_ifo.unwrap_or(Mat2::identity());
    let (w1, w2) = (w[(0, 0)].norm_sqr(), w[(0, 1)].norm_sqr());
    let (frac_shot, frac_ba) = if w1 + w2 > 0.0 { (w2 / (w1 + w2), w1 / (w1 + w2)) } else { (1.0, 0.0) };
    c[Component::QuantumShot.index()] = floor * frac_shot;
    c[Component::QuantumBackaction.index()] = floor * frac_ba;
    match cfg.mode {
        SchemeMode::FdSqueezing => c[Component::AngleError.index()] += excess,
        _ => c[Component::QuantumBackaction.index()] += excess,
    }

    for (label, t, s) in &chain.sources {
        c[label.index()] += quad(&(ro.row * t), s).max(0.0);
    }

    let jitter = cfg.angle_jitter * cfg.angle_jitter;
    if jitter > 0.0 {
        let added = match cfg.mode {
            SchemeMode::FdSqueezing => quad(&r, &(J * ro.input_spectrum * J.transpose())),
            _ => {
                let d = ro.row_derivative;
                quad(&(d * chain.input), &ro.input_spectrum)
                    + chain.sources.iter().map(|(_, t, s)| quad(&(d * t), s)).sum::<f64>()
            }
        };
        c[Component::AngleError.index()] += jitter * added.max(0.0);
    }
    Ok(Raw { components: c, signal })
}

/// Strain-referenced budget of `cfg` at sideband frequency `omega`.
pub fn evaluate_point(cfg: &SchemeConfig, omega: f64) -> Result<PointBudget> {
    let ro = build(cfg, omega)?;
    let sql = sql_psd(&cfg.ifo, omega)?;
    let raw = raw_components(cfg, &ro, omega)?;
    let mut components = raw.components.map(|v| sql * v / raw.signal);

    // A realized angle that misses arctan κ leaks back-action; book the part
    // above what a perfect filter would leave under angle_error.
    if cfg.mode == SchemeMode::VariationalReadout && cfg.filter != FilterPolicy::Perfect {
        let ideal = SchemeConfig { filter: FilterPolicy::Perfect, ..cfg.clone() };
        let ro_ideal = build(&ideal, omega)?;
        let raw_ideal = raw_components(&ideal, &ro_ideal, omega)?;
        let reference = sql * raw_ideal.components[Component::QuantumBackaction.index()] / raw_ideal.signal;
        let ba = &mut components[Component::QuantumBackaction.index()];
        if *ba > reference {
            let leak = *ba - reference;
            *ba = reference;
            components[Component::AngleError.index()] += leak;
        }
    }

    Ok(PointBudget { components, sql, kappa: ro.kappa, residual_angle: wrap_half_turn(ro.realized_angle - ro.kappa.atan()) })
}

pub(super) fn residual_angle(cfg: &SchemeConfig, omega: f64) -> Result<f64> {
    let ro = build(cfg, omega)?;
    Ok(wrap_half_turn(ro.realized_angle - ro.kappa.atan()))
}
