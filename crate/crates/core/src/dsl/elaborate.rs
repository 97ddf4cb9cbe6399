use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ast::{CircuitDescription, ElementKind, Expr, SplitterSpec};
use super::DslError;
use crate::mode_algebra::{
    bs_transfer_between, compose, make_beam_splitter, phase_shift, BeamSplitterSpec,
    TransferMatrix,
};

/// On/off state of removable elements and values of named parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElaborationConfig {
    pub removable: BTreeMap<String, bool>,
    pub params: BTreeMap<String, f64>,
}

impl ElaborationConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every removable element of `desc` set to `on`; parameters left to their defaults.
    pub fn all_removable(desc: &CircuitDescription, on: bool) -> Self {
        ElaborationConfig {
            removable: desc
                .removable_elements()
                .into_iter()
                .map(|n| (n.to_owned(), on))
                .collect(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    pub fn with_removable(mut self, name: &str, on: bool) -> Self {
        self.removable.insert(name.to_owned(), on);
        self
    }
}

fn resolve_params(
    desc: &CircuitDescription,
    config: &ElaborationConfig,
) -> Result<BTreeMap<String, f64>, DslError> {
    if let Some(unknown) = config.params.keys().find(|k| desc.param(k).is_none()) {
        return Err(DslError::UnknownBinding(unknown.clone()));
    }
    let removable = desc.removable_elements();
    if let Some(unknown) = config
        .removable
        .keys()
        .find(|k| !removable.contains(&k.as_str()))
    {
        return Err(DslError::UnknownBinding(unknown.clone()));
    }
    if let Some(missing) = removable
        .iter()
        .find(|n| !config.removable.contains_key(**n))
    {
        return Err(DslError::UnboundRemovable((*missing).to_owned()));
    }

    let mut values = BTreeMap::new();
    for p in desc.params() {
        let v = match (config.params.get(&p.name), &p.default) {
            (Some(v), _) => *v,
            (None, Some(d)) => d
                .eval(&BTreeMap::new())
                .map_err(DslError::UnboundParameter)?,
            (None, None) => return Err(DslError::UnboundParameter(p.name.clone())),
        };
        values.insert(p.name.clone(), v);
    }
    Ok(values)
}

fn eval(e: &Expr, values: &BTreeMap<String, f64>) -> Result<f64, DslError> {
    e.eval(values).map_err(DslError::UnboundParameter)
}

fn splitter(spec: &SplitterSpec, values: &BTreeMap<String, f64>) -> Result<BeamSplitterSpec, DslError> {
    match spec {
        SplitterSpec::Balanced => Ok(BeamSplitterSpec::balanced()),
        SplitterSpec::Split {
            reflectance,
            phi_t,
            phi_r,
        } => {
            let refl = eval(reflectance, values)?;
            let phi_t = phi_t.as_ref().map(|e| eval(e, values)).transpose()?.unwrap_or(0.0);
            let phi_r = phi_r
                .as_ref()
                .map(|e| eval(e, values))
                .transpose()?
                .unwrap_or(phi_t + FRAC_PI_2);
            if !(0.0..=1.0).contains(&refl) {
                return Err(crate::mode_algebra::AlgebraError::LosslessViolation(format!(
                    "reflectance {refl} outside [0, 1]"
                ))
                .into());
            }
            Ok(make_beam_splitter(refl.sqrt(), (1.0 - refl).sqrt(), phi_r, phi_t)?)
        }
    }
}

/// Per-element matrices, each embedded over the modes live at its stage.
pub fn elaborate_stages(
    desc: &CircuitDescription,
    config: &ElaborationConfig,
) -> Result<Vec<TransferMatrix>, DslError> {
    let values = resolve_params(desc, config)?;
    let mut live = desc.modes().to_vec();
    let mut stages = Vec::with_capacity(desc.elements().len());
    for el in desc.elements() {
        let local = match &el.kind {
            ElementKind::BeamSplitter {
                name,
                spec,
                inputs,
                outputs,
                removable,
            } => {
                let on = !*removable || config.removable[name];
                // validate the spec even when the element is switched off
                let spec = splitter(spec, &values)?;
                if on {
                    bs_transfer_between(&spec, inputs.to_vec(), outputs.to_vec())?
                } else {
                    // removed splitter: straight-through paths cross over
                    let one = Complex64::new(1.0, 0.0);
                    let zero = Complex64::new(0.0, 0.0);
                    TransferMatrix::new(
                        DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
                        inputs.to_vec(),
                        outputs.to_vec(),
                    )?
                }
            }
            ElementKind::Phase { mode, value } => phase_shift(mode.clone(), eval(value, &values)?),
            ElementKind::Mirror { input, output } => TransferMatrix::new(
                DMatrix::identity(1, 1),
                vec![input.clone()],
                vec![output.clone()],
            )?,
        };
        let stage = local.embed(&live)?;
        live = stage.output_modes().to_vec();
        stages.push(stage);
    }
    Ok(stages)
}

/// Compose the whole circuit into one transfer matrix.
pub fn elaborate(
    desc: &CircuitDescription,
    config: &ElaborationConfig,
) -> Result<TransferMatrix, DslError> {
    let mut total = TransferMatrix::identity(desc.modes())?;
    for stage in elaborate_stages(desc, config)? {
        total = compose(&stage, &total)?;
    }
    Ok(total)
}
